"""Piecewise-polynomial density estimation by dyadic merging of order statistics."""
from .distributions import MixtureSpec, builtin_specs, get_spec, l1_error, sample
from .interp import NODE_TABLE, int_fit, optimize_nodes, ratio_sup, table_nodes
from .merge import SurfConfig, comp, merge, surf, surf_halted
from .polynomial import PiecewiseEstimate, Polynomial
from .samples import EmpiricalDistribution, SortedSamples, sort_samples, subsample

__all__ = [
    "EmpiricalDistribution", "MixtureSpec", "NODE_TABLE", "PiecewiseEstimate", "Polynomial",
    "SortedSamples", "SurfConfig", "builtin_specs", "comp", "get_spec", "int_fit", "l1_error",
    "merge", "optimize_nodes", "ratio_sup", "sample", "sort_samples", "subsample", "surf",
    "surf_halted", "table_nodes",
]
__version__ = "0.1.0"
