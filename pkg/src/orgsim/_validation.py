"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numbers

import pandas as pd

from .exceptions import ConfigurationError, DomainError


def check_probability(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"{name} must be a real number in [0, 1], got {value!r}")
    return float(value)


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ConfigurationError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_dataset(df, required=("run", "perf_norm")) -> pd.DataFrame:
    if not isinstance(df, pd.DataFrame):
        raise DomainError(f"expected a pandas DataFrame of run records, got {type(df).__name__}")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise DomainError(f"dataset lacks required columns {missing}")
    if df.empty:
        raise DomainError("dataset is empty")
    return df


def check_is_fitted(est, attribute: str) -> None:
    if not hasattr(est, attribute):
        raise DomainError(f"{type(est).__name__} is not fitted yet; call fit() first")
