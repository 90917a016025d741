"""Exact toric geometry for low toric degree: fans, intersection numbers, divisor
polytopes, the toric MMP and rational points of Cox-homogeneous hypersurfaces."""

from .fan import Fan, validate
from .intersection import curve_class, pair, wall_curves
from .lowdeg import Verdict, global_ltd, low_toric_degree, restricted_ltd
from .mori import extremal_rays, run_descent
from .points import HomogeneousPoly, rational_point

__all__ = [
    "Fan",
    "HomogeneousPoly",
    "Verdict",
    "curve_class",
    "extremal_rays",
    "global_ltd",
    "low_toric_degree",
    "pair",
    "rational_point",
    "restricted_ltd",
    "run_descent",
    "validate",
    "wall_curves",
]
