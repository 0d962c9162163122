"""Intrinsic geometry, kernels and function-space quasi-norms of homogeneous
kinetic Fokker-Planck operators, with numerical checks of their scaling,
approximation and embedding behavior."""

from ._core import (  # noqa: F401
    AnalyticField,
    CovariancePolynomial,
    Geometry,
    GroupPoint,
    KernelError,
    KernelValue,
    StructureError,
    ValidationError,
    critical_exponent,
    gamma_eval,
    list_experiments,
    lorentz_norm,
    norms,
    run_experiments,
    tartar_levels,
    taylor_remainder_slope,
)

__all__ = [
    "AnalyticField",
    "CovariancePolynomial",
    "Geometry",
    "GroupPoint",
    "KernelError",
    "KernelValue",
    "StructureError",
    "ValidationError",
    "critical_exponent",
    "gamma_eval",
    "list_experiments",
    "lorentz_norm",
    "norms",
    "run_experiments",
    "tartar_levels",
    "taylor_remainder_slope",
]
