"""No-reference quality scoring: natural scene statistics, BRISQUE, NIQE."""

from .brisque import SVRModel, brisque_features, brisque_score, load_svr_model
from .fitting import AGGDFit, GGDFit, fit_aggd, fit_ggd
from .mscn import local_stats, mscn, pairwise_products
from .niqe import MVGModel, fit_mvg, load_pristine_model, niqe_features, niqe_score

__all__ = [
    "AGGDFit",
    "GGDFit",
    "MVGModel",
    "SVRModel",
    "brisque_features",
    "brisque_score",
    "fit_aggd",
    "fit_ggd",
    "fit_mvg",
    "load_pristine_model",
    "load_svr_model",
    "local_stats",
    "mscn",
    "niqe_features",
    "niqe_score",
    "pairwise_products",
]
