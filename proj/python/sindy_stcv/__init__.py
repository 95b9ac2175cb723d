"""Sparse identification of nonlinear dynamics: STLSQ, E-SINDy, STCV and the STCV-STLSQ cascade."""

from ._core import (
    ConfigError,
    DataQualityError,
    DivergenceError,
    Model,
    ParseError,
    RankDeficiencyError,
    SindyError,
    __version__,
    add_noise,
    blr_posterior,
    esindy,
    finite_difference,
    normalize,
    polynomial_library,
    run_sweep,
    simulate,
    stcv,
    stcv_stlsq,
    stlsq,
)

__all__ = [
    "ConfigError",
    "DataQualityError",
    "DivergenceError",
    "Model",
    "ParseError",
    "RankDeficiencyError",
    "SindyError",
    "__version__",
    "add_noise",
    "blr_posterior",
    "esindy",
    "finite_difference",
    "normalize",
    "polynomial_library",
    "run_sweep",
    "simulate",
    "stcv",
    "stcv_stlsq",
    "stlsq",
]
