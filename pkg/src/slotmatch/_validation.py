"""Small input-checking helpers shared by the estimators."""

from __future__ import annotations

import math
import numbers

import numpy as np

from .exceptions import ConfigurationError


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value <= 0:
        raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_open_unit(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}") from None
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{name} must be finite, got {value!r}")
    return value


def check_random_state(seed):
    """Return a PCG64-backed ``numpy.random.Generator``.

    Unlike ``sklearn.utils.check_random_state`` this never hands back the
    legacy Mersenne Twister; every random choice in the package draws from
    PCG64 so distributions can be matched by other implementations.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.PCG64())
    if isinstance(seed, numbers.Integral) and not isinstance(seed, bool):
        return np.random.Generator(np.random.PCG64(int(seed)))
    raise ConfigurationError(f"seed must be an int, None or a numpy Generator, got {seed!r}")


def check_bounds(bounds, n_tags, n_slots):
    """Resolve a bound specification to an int array of length ``n_tags``.

    ``"auto"`` (or None) gives every tag ``ceil(n_slots / n_tags)``. An int
    applies to all tags; a mapping or sequence gives per-tag values, with
    mapping entries missing falling back to the auto value.
    """
    auto = max(1, math.ceil(n_slots / n_tags)) if n_tags else 1
    if bounds is None or (isinstance(bounds, str) and bounds == "auto"):
        out = np.full(n_tags, auto, dtype=np.int64)
    elif isinstance(bounds, numbers.Integral) and not isinstance(bounds, bool):
        out = np.full(n_tags, int(bounds), dtype=np.int64)
    elif isinstance(bounds, dict):
        out = np.full(n_tags, auto, dtype=np.int64)
        for key, value in bounds.items():
            key = int(key)
            if not 0 <= key < n_tags:
                raise ConfigurationError(f"bound given for unknown tag index {key}")
            out[key] = int(value)
    else:
        out = np.asarray(bounds, dtype=np.int64)
        if out.shape != (n_tags,):
            raise ConfigurationError(f"expected {n_tags} bounds, got shape {out.shape}")
    if n_tags and out.min() < 1:
        raise ConfigurationError("every tag bound must be >= 1")
    return out
