"""Lobachevsky function and its derivative.

``lobachevsky(x) = -∫_0^x log|2 sin t| dt``, which is odd and π-periodic.
On ``(0, π/2]`` it is evaluated with the Taylor series of
``log(sin(πz)/(πz))``, whose coefficients involve ``ζ(2k)``; the remaining
half period follows from ``Λ(π - x) = -Λ(x)``.
"""

import math

import numpy as np
from scipy.special import zeta

from .errors import DomainError, NumericError, SingularityError

_NTERMS = 32
# ζ(2k) / (k (2k + 1)), k = 1.._NTERMS; the series ratio is at most 1/4.
_COEFFS = tuple(
    float(zeta(2 * k)) / (k * (2 * k + 1)) for k in range(1, _NTERMS + 1)
)
_SING_TOL = 1e-15


def _check_finite(x):
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x!r}")


def _reduce(x):
    """Map ``x`` into ``[0, π)``."""
    r = math.fmod(x, math.pi)
    if r < 0.0:
        r += math.pi
    return r


def _series(t):
    """Λ(t) for ``0 < t <= π/2``."""
    z2 = (t / math.pi) ** 2
    acc = 0.0
    p = z2
    for c in _COEFFS:
        term = c * p
        acc += term
        if term < 1e-18 * (abs(acc) + 1e-300):
            break
        p *= z2
    return t - t * math.log(2.0 * t) + t * acc


def _lob_scalar(x):
    _check_finite(x)
    r = _reduce(x)
    if r == 0.0:
        return 0.0
    if r <= 0.5 * math.pi:
        return _series(r)
    s = math.pi - r
    if s <= 0.0:
        return 0.0
    return -_series(s)


def lobachevsky(x):
    """Lobachevsky function Λ(x). Accepts scalars or array-likes."""
    if np.ndim(x) == 0:
        return _lob_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_lob_scalar, otypes=[float])(arr)


def _dlob_scalar(x):
    _check_finite(x)
    s = abs(math.sin(x))
    r = _reduce(x)
    if min(r, math.pi - r) < _SING_TOL or s == 0.0:
        raise SingularityError(f"Λ'(x) is singular at x = {x!r} (multiple of π)")
    val = -math.log(2.0 * s)
    if not math.isfinite(val):
        raise NumericError(f"non-finite Λ'({x!r})")
    return val


def lobachevsky_derivative(x):
    """Derivative Λ'(x) = -log|2 sin x|; raises at multiples of π."""
    if np.ndim(x) == 0:
        return _dlob_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_dlob_scalar, otypes=[float])(arr)
