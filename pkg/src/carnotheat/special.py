"""Self-contained special functions used by the closed-form oracles.

The gamma function uses the Lanczos approximation with g = 7 and the
classic 9-coefficient table (relative error below 1e-13 on the range we
need).  erfc combines the everywhere-positive scaled power series for
small arguments with a Lentz-evaluated continued fraction for large
ones; both branches are free of cancellation and agree to ~1e-14 with
the C library implementation (checked in the test suite).

Also here: the even analytic scalars x/sinh(x) and x/tanh(x) that enter
the heat-kernel envelope, with Taylor branches near zero and
log-scaled branches for large argument so they never overflow.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "gamma",
    "erf",
    "erfc",
    "ierfc",
    "log_sinh_ratio",
    "tanh_ratio",
]

_SQRT_PI = float(np.sqrt(np.pi))
_LANCZOS_G = 7.0
# Godfrey's g=7 coefficient set, as used by countless numerics libraries.
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Euler gamma function for real non-pole argument."""
    x = float(x)
    if x != x:
        return x
    if x <= 0.0 and x == int(x):
        raise ValueError(f"gamma pole at x={x}")
    if x < 0.5:
        # reflection: gamma(x) gamma(1-x) = pi / sin(pi x)
        return np.pi / (np.sin(np.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return float(np.sqrt(2.0 * np.pi) * t ** (z + 0.5) * np.exp(-t) * acc)


def _erf_series(x: np.ndarray) -> np.ndarray:
    # erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_n (2x^2)^n / (1*3*...*(2n+1)),
    # all terms positive: no cancellation.  Used for |x| <= 3.
    z = 2.0 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for n in range(1, 120):
        term = term * z / (2.0 * n + 1.0)
        acc += term
        if np.all(term <= 1e-18 * acc):
            break
    return 2.0 * x * np.exp(-x * x) / _SQRT_PI * acc


def _erfcx_cf(x: np.ndarray) -> np.ndarray:
    # scaled complement erfc(x) e^{x^2} by the classical continued fraction
    #   sqrt(pi) e^{x^2} erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated with the modified Lentz algorithm; good for x >= 3.
    tiny = 1e-300
    f = np.full_like(x, tiny)
    c = f.copy()
    d = np.zeros_like(x)
    for n in range(0, 80):
        a = 1.0 if n == 0 else 0.5 * n
        b = x if n == 0 else x
        d = b + a * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + a / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if np.all(np.abs(delta - 1.0) < 1e-17):
            break
    return f / _SQRT_PI


def erfc(x):
    """Complementary error function, elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax <= 3.0
    if np.any(small):
        out[small] = 1.0 - _erf_series(ax[small])
    if np.any(~small):
        xs = ax[~small]
        out[~small] = np.exp(-xs * xs) * _erfcx_cf(xs)
    out = np.where(x < 0.0, 2.0 - out, out)
    return float(out[0]) if scalar else out


def erf(x):
    """Error function, elementwise on arrays."""
    return 1.0 - erfc(x)


def ierfc(x):
    """First iterated integral of erfc: ierfc(x) = int_x^inf erfc(v) dv.

    Closed form exp(-x^2)/sqrt(pi) - x erfc(x); ierfc(0) = 1/sqrt(pi).
    """
    x = np.asarray(x, dtype=float)
    val = np.exp(-x * x) / _SQRT_PI - x * erfc(x)
    return float(val) if val.ndim == 0 else val


def log_sinh_ratio(x):
    """log(x / sinh x), even in x, finite for all finite x.

    Branches: Taylor -x^2/6 + x^4/180 below 1e-4, direct evaluation on
    the midrange, and log(x) - x + log 2 - log1p(-e^{-2x}) above 30 so
    sinh never overflows.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.abs(np.atleast_1d(x))
    small = x < 1e-4
    big = x > 30.0
    mid = ~(small | big)
    out = np.empty_like(x)
    xs = x[small]
    out[small] = -xs * xs / 6.0 + xs ** 4 / 180.0
    xm = x[mid]
    out[mid] = np.log(xm) - np.log(np.sinh(xm))
    xb = x[big]
    out[big] = np.log(xb) - xb + np.log(2.0) - np.log1p(-np.exp(-2.0 * xb))
    return float(out[0]) if scalar else out


def tanh_ratio(x):
    """x / tanh(x), even in x, value 1 at x = 0, >= 1 everywhere."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.abs(np.atleast_1d(x))
    small = x < 1e-4
    out = np.empty_like(x)
    xs = x[small]
    out[small] = 1.0 + xs * xs / 3.0 - xs ** 4 / 45.0
    xl = x[~small]
    out[~small] = xl / np.tanh(xl)
    return float(out[0]) if scalar else out
