"""Isometric immersions into products of space forms: residual checks, detectors,
codimension reduction and reconstruction from intrinsic data."""

__version__ = "0.1.0"

from .ambient import ProductPoint, ProductSpace, SpaceForm, block_project, validate_point
from .bonnet import (BonnetData, IsometryMatch, ReconstructionResult, WhitneyData, build_whitney,
                     compatibility_check, extract_data, match_immersions, match_isometry, reconstruct)
from .calculus import ResidualReport, Tolerances, identity_suite, point_report
from .codim import reduction_test, reduce_target, thm44_check
from .gallery import (catalogue, check_proportionality, compose_isometry, detect,
                      factor_through_geodesic, make_product, make_slice, make_special_geodesic,
                      make_weighted_sum)
from .grid import Grid
from .jets import Immersion, PointGeometry, eval_jet, sample_grid
from .scene import Scene

__all__ = [
    "BonnetData", "Grid", "Immersion", "IsometryMatch", "PointGeometry", "ProductPoint",
    "ProductSpace", "ReconstructionResult", "ResidualReport", "Scene", "SpaceForm", "Tolerances",
    "WhitneyData", "block_project", "build_whitney", "catalogue", "check_proportionality",
    "compatibility_check", "compose_isometry", "detect", "eval_jet", "extract_data",
    "factor_through_geodesic", "identity_suite", "make_product", "make_slice",
    "make_special_geodesic", "make_weighted_sum", "match_immersions", "match_isometry",
    "point_report", "reconstruct", "reduce_target", "reduction_test", "sample_grid",
    "thm44_check", "validate_point",
]
