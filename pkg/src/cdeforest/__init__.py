"""Random forests for nonparametric conditional density estimation.

Trees are split to minimize a CDE-specific loss via orthogonal-series density
estimates; predictions are weighted kernel density estimates over a response
grid, for univariate and joint (2- or 3-dimensional) responses.
"""

__version__ = "0.1.0"

from .basis import BasisSpec, cosine_basis, rescale_response, tensor_basis
from .density import (
    BandwidthSpec,
    DensityEstimate,
    adaptive_bandwidth,
    grid_integral,
    weighted_kde,
)
from .errors import DegenerateDataError, ModelFormatError, UnsupportedCriterionError
from .forest import Forest, ForestParams, fit, from_json, load
from .loss import LossReport, cde_loss, interpolate_density
from .simgen import UnivariateSimConfig, gen_joint, gen_univariate, true_density_univariate
from .tree import (
    SplitRule,
    TreeNode,
    TreeParams,
    best_split,
    build_tree,
    leaf_of,
    split_score_cde,
    split_score_mse,
)

__all__ = [
    "__version__",
    "BasisSpec",
    "cosine_basis",
    "tensor_basis",
    "rescale_response",
    "BandwidthSpec",
    "DensityEstimate",
    "weighted_kde",
    "adaptive_bandwidth",
    "grid_integral",
    "SplitRule",
    "TreeNode",
    "TreeParams",
    "split_score_cde",
    "split_score_mse",
    "best_split",
    "build_tree",
    "leaf_of",
    "ForestParams",
    "Forest",
    "fit",
    "load",
    "from_json",
    "LossReport",
    "cde_loss",
    "interpolate_density",
    "UnivariateSimConfig",
    "gen_univariate",
    "true_density_univariate",
    "gen_joint",
    "DegenerateDataError",
    "UnsupportedCriterionError",
    "ModelFormatError",
]
