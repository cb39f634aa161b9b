"""tmqa: no-reference quality assessment for tone-mapped HDR images.

Two-stage pipeline: a convolutional encoder-decoder predicts six
contrast-distortion maps from a lone LDR image, then AGGD statistics of the
image and maps feed a support vector regressor that outputs a quality score.
Ships with the full-reference label oracle, tone-mapping operators, synthetic
corpus builder, and evaluation protocol needed to train and validate it end
to end.
"""

from .cnn import MapNet, TrainConfig, grad_check, predict_image, train_model
from .distortion import DistortionMaps, OracleParams, distortion_maps
from .evaluation import EvalSummary, plcc, rmse, split_protocol, srocc
from .features import AggdParams, MscnConfig, aggd_fit, extract_features, mscn
from .hdr_io import decode_rgbe, encode_rgbe, load_hdr, load_png, luminance, save_hdr, save_png
from .svr import SvrModel, SvrParams, grid_search, svr_predict, svr_train
from .tonemap import TmoParams, durand_bilateral, reinhard_global, ward_scale

__version__ = "0.1.0"

__all__ = [
    "MapNet",
    "TrainConfig",
    "grad_check",
    "predict_image",
    "train_model",
    "DistortionMaps",
    "OracleParams",
    "distortion_maps",
    "EvalSummary",
    "plcc",
    "rmse",
    "split_protocol",
    "srocc",
    "AggdParams",
    "MscnConfig",
    "aggd_fit",
    "extract_features",
    "mscn",
    "decode_rgbe",
    "encode_rgbe",
    "load_hdr",
    "load_png",
    "luminance",
    "save_hdr",
    "save_png",
    "SvrModel",
    "SvrParams",
    "grid_search",
    "svr_predict",
    "svr_train",
    "TmoParams",
    "durand_bilateral",
    "reinhard_global",
    "ward_scale",
    "__version__",
]
