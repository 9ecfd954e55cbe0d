"""brownflow: spectral domains for multiplicative matrix Brownian motion.

Library layout mirrors the pipeline: conformal maps and the circle
measure (cmaps), planar domains (domains), matrix SDE simulation (rmt),
Brown-measure probes (brown), the free Hall transform (hall), and the
CLI front end (cli).
"""

from .cmaps import (
    ArcSupport,
    SpectralMeasureGrid,
    TimeParams,
    chi_eval,
    chi_s_extended,
    chi_st_eval,
    f_eval,
    f_st_eval,
    nu_density,
    nu_moment,
    nu_moment_oracle,
    nu_support,
    t_level,
)

__version__ = "0.1.0"

__all__ = [
    "ArcSupport",
    "SpectralMeasureGrid",
    "TimeParams",
    "chi_eval",
    "chi_s_extended",
    "chi_st_eval",
    "f_eval",
    "f_st_eval",
    "nu_density",
    "nu_moment",
    "nu_moment_oracle",
    "nu_support",
    "t_level",
    "__version__",
]
