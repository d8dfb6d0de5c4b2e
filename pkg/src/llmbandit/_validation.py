"""Input validation helpers shared by estimators and functions."""
from __future__ import annotations

import numbers

import numpy as np

from .core import ProblemInstance, as_action, is_feasible

FRAC_TOL = 1e-12


class NotFittedError(RuntimeError):
    """Raised when a policy is used before ``fit``."""


class ConfigError(ValueError):
    """Invalid experiment, instance or policy configuration."""


def check_rng(rng) -> np.random.Generator:
    """Turn ``None``, an int seed or a Generator into a Generator."""
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a random generator from {rng!r}")


def check_fractional(z, tol: float = FRAC_TOL) -> np.ndarray:
    """Validate a fractional selection and clip float noise into [0, 1]."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"fractional selection must be 1-d, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("fractional selection contains non-finite values")
    if np.any(z < -tol) or np.any(z > 1.0 + tol):
        raise ValueError("fractional selection entries must lie in [0, 1]")
    return np.clip(z, 0.0, 1.0)


def check_vector(x, K: int, name: str, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (K,):
        raise ValueError(f"{name} must have shape ({K},), got {x.shape}")
    if lo is not None and np.any(x < lo):
        raise ValueError(f"{name} must be >= {lo}")
    if hi is not None and np.any(x > hi):
        raise ValueError(f"{name} must be <= {hi}")
    return x


def check_action(S, inst: ProblemInstance):
    """Normalise ``S`` and verify the cardinality rule of ``inst``."""
    S = as_action(S, inst.K)
    if not is_feasible(S, inst):
        rule = "exactly" if inst.model.exact_cardinality else "at most"
        raise ValueError(f"action {S} infeasible: {inst.model.value} needs {rule} {inst.N} arms")
    return S


def check_positive(value, name: str, integer: bool = False):
    if integer and not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_is_fitted(estimator, attr: str = "state_"):
    if not hasattr(estimator, attr):
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit(instance) first")
