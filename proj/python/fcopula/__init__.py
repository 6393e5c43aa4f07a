"""Factor copula models with a C++ core."""

from ._core import (
    BivariateCopula,
    FactorModel,
    FcError,
    __version__,
    ci_test,
    fisher_information,
    fit,
    kendall_tau_matrix,
    pseudo_observations,
    t_statistic,
)

__all__ = [
    "BivariateCopula",
    "FactorModel",
    "FcError",
    "__version__",
    "ci_test",
    "fisher_information",
    "fit",
    "kendall_tau_matrix",
    "pseudo_observations",
    "t_statistic",
]
