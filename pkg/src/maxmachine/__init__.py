"""MaxMachine: heteroscedastic Boolean latent feature models with Gibbs sampling."""

from .binmat import BinaryMatrix, boolean_or_product
from .data import TripletDataset, load_triplets, per_type_subsample
from .evaluation import HoldoutMask, applicability_report, evaluate, make_holdout, roc_auc
from .hierarchy import HierarchicalModel, TypeClamp, clamp, fit, unclamp
from .model import (BmfConfig, DimensionStats, FactorLayer, PriorConfig, dimension_stats, log_likelihood,
                    point_prob, posterior_predictive)
from .sampler import GibbsConfig, PosteriorTrace

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix", "BmfConfig", "DimensionStats", "FactorLayer", "GibbsConfig", "HierarchicalModel",
    "HoldoutMask", "PosteriorTrace", "PriorConfig", "TripletDataset", "TypeClamp", "applicability_report",
    "boolean_or_product", "clamp", "dimension_stats", "evaluate", "fit", "load_triplets", "log_likelihood",
    "make_holdout", "per_type_subsample", "point_prob", "posterior_predictive", "roc_auc", "unclamp",
]
