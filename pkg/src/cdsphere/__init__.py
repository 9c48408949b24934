"""Curvature-dimension analysis of the weighted spheres ``|y - x|^-(n+alpha) d sigma^n(y)``."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .curvature import CdCertificate, analytic_cd, certify, min_F_disk
from .errors import (
    CdSphereError,
    ConvergenceError,
    DomainError,
    ParameterError,
    TheoremViolation,
)
from .measures import (
    SphereParams,
    marginal,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    median_angle,
    sphere_normalization,
)
from .profiles import ModelProfile, model_profile
from .sampling import SampleBatch, sample_direct, walk_on_spheres
from .spectral import SpectralResult, spectral_gap

__all__ = [
    "BACKEND",
    "CdCertificate",
    "CdSphereError",
    "ConvergenceError",
    "DomainError",
    "ModelProfile",
    "ParameterError",
    "SampleBatch",
    "SpectralResult",
    "SphereParams",
    "TheoremViolation",
    "analytic_cd",
    "certify",
    "marginal",
    "marginal_cdf",
    "marginal_pdf",
    "marginal_quantile",
    "median_angle",
    "min_F_disk",
    "model_profile",
    "sample_direct",
    "spectral_gap",
    "sphere_normalization",
    "walk_on_spheres",
]
