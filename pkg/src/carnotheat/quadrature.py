"""Panel-based Gauss-Legendre quadrature helpers.

All integrals in the library go through composite Gauss-Legendre rules
whose panel layout is chosen from the known length scales of the
integrand (Gaussian widths, oscillation periods, boundary layers).
`graded_edges` builds geometrically refined panel ladders around
feature points so a single rule resolves several scales at once.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


@lru_cache(maxsize=64)
def _base_rule(order: int):
    x, w = roots_legendre(order)
    return np.asarray(x), np.asarray(w)


def panel_rule(edges, order: int = 8):
    """Composite Gauss-Legendre nodes/weights on consecutive [edges] panels."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    x, w = _base_rule(order)
    lo = edges[:-1]
    half = 0.5 * np.diff(edges)
    mid = lo + half
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def uniform_edges(lo: float, hi: float, n_panels: int):
    return np.linspace(lo, hi, n_panels + 1)


def graded_edges(lo, hi, features=(), inner=None, growth=2.0, coarse=None):
    """Panel edges on [lo, hi] geometrically refined toward each feature.

    Around every feature point f the edges f +- inner * growth**j are
    inserted (clipped to the interval), giving panels whose width grows
    away from f.  Gaps wider than `coarse` are split uniformly.
    Features slightly outside [lo, hi] still grade the nearby edge.
    """
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        raise ValueError("empty interval")
    span = hi - lo
    if coarse is None:
        coarse = span / 4.0
    pts = {lo, hi}
    if inner is not None and inner > 0:
        for f in np.atleast_1d(np.asarray(features, dtype=float)):
            if f <= lo - span or f >= hi + span:
                continue
            if lo < f < hi:
                pts.add(float(f))
            off = float(inner)
            while off < 2.0 * span:
                for p in (f - off, f + off):
                    if lo < p < hi:
                        pts.add(float(p))
                off *= growth
    edges = np.array(sorted(pts))
    # drop near-duplicate edges, then split oversized gaps
    keep = np.concatenate(([True], np.diff(edges) > 1e-13 * max(1.0, span)))
    edges = edges[keep]
    if edges[-1] != hi:
        edges = np.append(edges, hi)
    out = [edges[0]]
    for a, b in zip(edges[:-1], edges[1:]):
        gap = b - a
        if gap > coarse:
            n = int(np.ceil(gap / coarse))
            out.extend(np.linspace(a, b, n + 1)[1:])
        else:
            out.append(b)
    return np.asarray(out)


def tensor_rule(*rules):
    """Tensor product of 1-D (nodes, weights) rules.

    Returns (points, weights) with points of shape (N, d).  Memory grows
    as the product of the rule sizes; intended for d <= 4 desk-scale use.
    """
    nodes = [np.asarray(r[0]) for r in rules]
    weights = [np.asarray(r[1]) for r in rules]
    grids = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = weights[0]
    for wi in weights[1:]:
        w = np.multiply.outer(w, wi)
    return pts, w.ravel()


def oscillation_edges(lo, hi, frequency, panels_per_period=4.0, base_width=0.25,
                      max_panels=200_000):
    """Uniform edges sized to resolve cos(frequency * x) on [lo, hi]."""
    lo, hi = float(lo), float(hi)
    width = base_width
    if frequency > 0:
        width = min(width, 2.0 * np.pi / frequency / panels_per_period)
    n = max(1, int(np.ceil((hi - lo) / width)))
    if n > max_panels:
        raise ValueError(f"oscillatory rule needs {n} panels (> {max_panels})")
    return np.linspace(lo, hi, n + 1)


def fit_affine(x, y, weights=None):
    """Weighted least-squares fit y ~ a + b x.

    Returns (a, b, sigma_a, rms_residual).  sigma_a propagates the
    per-point weights (1/err^2) into the intercept; with unit weights it
    is the usual unweighted covariance estimate scaled by the residual.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for an affine fit")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=float)
    A = np.stack([np.ones_like(x), x], axis=-1)
    Aw = A * w[:, None]
    M = A.T @ Aw
    rhs = Aw.T @ y
    coef = np.linalg.solve(M, rhs)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    cov = np.linalg.inv(M)
    if weights is None and x.size > 2:
        cov = cov * max(rms, 1e-300) ** 2 * x.size / (x.size - 2)
    sigma_a = float(np.sqrt(max(cov[0, 0], 0.0)))
    return float(coef[0]), float(coef[1]), sigma_a, rms


def fit_polynomial(x, y, degree, weights=None):
    """Weighted LSQ polynomial fit; returns (coefs ascending, sigma_c0, rms)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < degree + 1:
        raise ValueError("not enough points for requested degree")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    A = np.vander(x, degree + 1, increasing=True)
    Aw = A * w[:, None]
    M = A.T @ Aw
    coef = np.linalg.solve(M, Aw.T @ y)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    cov = np.linalg.inv(M)
    if weights is None and x.size > degree + 1:
        cov = cov * max(rms, 1e-300) ** 2 * x.size / (x.size - degree - 1)
    return coef, float(np.sqrt(max(cov[0, 0], 0.0))), rms
