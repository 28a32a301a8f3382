"""Heat kernel of the horizontal Laplacian on a step-two group.

The kernel is evaluated from the closed-form Fourier representation in
the vertical variable: at relative coordinates (w, tau) of g^{-1} o g'
and time t,

  p = 2^k (4 pi t)^{-(m/2+k)} int_{R^k} cos(<tau, lam>/t)
        (det j(sqrt(A(lam))))^{1/2}
        exp(-(1/4t) <j(sqrt(A)) cosh(sqrt(A)) w, w>) d lam,

with j(x) = x/sinh(x).  The complex exponential reduces to the cosine
because A is even and the phase odd under lam -> -lam, so the imaginary
part cancels exactly.  Every evaluation first rescales to t = 1 through
p(g, e, t) = t^{-Q/2} p(delta_{1/sqrt t} g, e, 1), which removes the 1/t
blow-up of the Gaussian factor.

Evaluation strategies, fastest applicable wins:
  * k = 1 with a single nonzero eigenvalue of A_1 (Heisenberg, H^1 x R):
    scalar envelope, optional precomputed vertical tables;
  * Heisenberg-type groups, k <= 3: the lambda integral is radial and
    collapses to one dimension (cosine / Bessel J0 / spherical sinc);
  * generic k <= 3: tensor-product Gauss-Legendre over [-L, L]^k with
    batched eigendecompositions;
  * k = 4: scrambled Sobol quasi-Monte Carlo with replicate error bars.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import j0 as bessel_j0

from .budget import QuadratureBudget, stable_seed
from .errors import AccuracyError, NotHType, Unbounded, Unsupported
from .groups import (GroupPoint, GroupSpec, identity, is_htype,
                     relative_coordinates)
from .kernel_tables import get_split, get_table, k1_kernel_values
from .quadrature import graded_edges, panel_rule, tensor_rule, uniform_edges
from .regions import (CoordinateBox, EuclideanBall, HorizontalHalfSpace,
                      VerticalCylinder, contains, volume, volume_rule)
from .special import log_sinh_ratio, tanh_ratio

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = QuadratureBudget()

__all__ = [
    "LambdaQuadrature",
    "KernelValue",
    "kernel",
    "kernel_htype",
    "kernel_euclidean",
    "apply_to_indicator",
    "selftest_normalization",
    "selftest_scaling",
    "selftest_chapman_kolmogorov",
    "vertical_marginal_deviation",
]


# ---------------------------------------------------------------------------
# envelope helpers

def envelope_log_batch(spec: GroupSpec, lam: np.ndarray) -> np.ndarray:
    """log (det j(sqrt(A(lam))))^{1/2} for a batch of lambda vectors."""
    Jl = spec.kaplan(np.atleast_2d(lam))
    A = np.einsum("nji,njk->nik", Jl, Jl)
    evals = np.linalg.eigvalsh(A)
    mu = np.sqrt(np.clip(evals, 0.0, None))
    return 0.5 * np.sum(log_sinh_ratio(mu), axis=-1)


def _stiffness_batch(spec: GroupSpec, lam: np.ndarray):
    """(log envelope, M(lam)) batched; M = V diag(mu/tanh mu) V^T."""
    Jl = spec.kaplan(np.atleast_2d(lam))
    A = np.einsum("nji,njk->nik", Jl, Jl)
    evals, vecs = np.linalg.eigh(A)
    mu = np.sqrt(np.clip(evals, 0.0, None))
    logenv = 0.5 * np.sum(log_sinh_ratio(mu), axis=-1)
    M = np.einsum("nij,nj,nkj->nik", vecs, tanh_ratio(mu), vecs)
    return logenv, M


def generic_lambda_radius(spec: GroupSpec, tol: float) -> float:
    """Radius L with envelope < tol on |lam| = L, probed over directions."""
    rng = np.random.default_rng(7)
    dirs = list(np.eye(spec.k)) + [rng.standard_normal(spec.k) for _ in range(4)]
    dirs = [d / np.linalg.norm(d) for d in dirs]
    radius = 1.0
    for _ in range(60):
        lam = radius * np.asarray(dirs)
        if np.max(envelope_log_batch(spec, lam)) < np.log(tol):
            return radius
        radius *= 1.5
    raise AccuracyError("kernel envelope does not decay; invalid group?")


@dataclass(frozen=True)
class LambdaQuadrature:
    """Discretization of the vertical Fourier integral.

    `radius` truncates the lambda domain, `nodes_per_unit` sets the
    panel density at zero frequency (>= 4), and the envelope is checked
    to be below target_tol at |lambda| = radius on construction.
    """

    radius: float
    nodes_per_unit: int = 4
    order: int = 8
    target_tol: float = 1e-9

    def __post_init__(self):
        if self.nodes_per_unit < 4:
            raise ValueError("nodes_per_unit must be >= 4")
        if self.radius <= 0 or self.target_tol <= 0:
            raise ValueError("radius and target_tol must be positive")

    @classmethod
    def for_group(cls, spec: GroupSpec, target_tol: float = 1e-9,
                  nodes_per_unit: int = 4, order: int = 8) -> "LambdaQuadrature":
        radius = generic_lambda_radius(spec, target_tol * 1e-4)
        quad = cls(radius=radius, nodes_per_unit=nodes_per_unit, order=order,
                   target_tol=target_tol)
        quad.validate(spec)
        return quad

    def validate(self, spec: GroupSpec) -> None:
        rng = np.random.default_rng(11)
        dirs = list(np.eye(spec.k)) + [rng.standard_normal(spec.k) for _ in range(4)]
        lam = self.radius * np.asarray([d / np.linalg.norm(d) for d in dirs])
        worst = float(np.max(np.exp(envelope_log_batch(spec, lam))))
        if worst >= self.target_tol:
            raise ValueError(
                f"envelope {worst:.3e} at |lambda|={self.radius} exceeds target_tol")

    def as_budget(self, budget: QuadratureBudget) -> QuadratureBudget:
        return replace(budget, lambda_radius=self.radius,
                       lambda_base_width=1.0 / self.nodes_per_unit,
                       lambda_order=self.order, target_tol=self.target_tol)


@dataclass
class KernelValue:
    """Kernel density with its quadrature error estimate.

    Tiny negative quadrature artifacts are clamped to zero; the clamped
    magnitude is reported in `clamped`.
    """

    value: float
    quadrature_error_estimate: float
    clamped: float = 0.0


# ---------------------------------------------------------------------------
# H-type radial reduction (any k <= 3)

def _htype_lambda_radius(m: int, tol: float) -> float:
    target = -np.log(tol) * 2.0 / m
    x = target
    for _ in range(4):
        x = target + np.log(2.0 * x)
    return float(x)


def htype_kernel_values(m: int, k: int, w_norm2, tau_norm, budget: QuadratureBudget,
                        order: int | None = None) -> np.ndarray:
    """Batched t=1 kernel for A(lam) = |lam|^2 I, radial lambda integral."""
    if k > 3:
        raise Unsupported("radial H-type path supports k <= 3")
    w_norm2 = np.asarray(w_norm2, dtype=float).reshape(-1)
    tau_norm = np.abs(np.asarray(tau_norm, dtype=float).reshape(-1))
    order = order or budget.lambda_order
    radius = budget.lambda_radius or _htype_lambda_radius(m, min(1e-18, budget.target_tol * 1e-6))
    width = budget.lambda_base_width / max(budget.refine, 1.0)
    fmax = float(np.max(tau_norm, initial=0.0))
    if fmax > 0:
        width = min(width, 2.0 * np.pi / fmax / budget.oscillation_panels)
    n = int(np.ceil(radius / width))
    if n * order > budget.max_lambda_nodes:
        raise AccuracyError(
            f"oscillation at |tau| = {fmax:.3g} exceeds the lambda node budget")
    lam, wts = panel_rule(uniform_edges(0.0, radius, n), order)
    env = np.exp(0.5 * m * log_sinh_ratio(lam)) * wts
    kap = tanh_ratio(lam)
    pref = 2.0 ** k * (4.0 * np.pi) ** (-(0.5 * m + k))
    out = np.empty(len(tau_norm))
    chunk = max(1, int(2e7 / max(len(lam), 1)))
    for i0 in range(0, len(tau_norm), chunk):
        sl = slice(i0, min(i0 + chunk, len(tau_norm)))
        gauss = np.exp(-0.25 * np.outer(w_norm2[sl], kap))
        arg = np.outer(tau_norm[sl], lam)
        if k == 1:
            osc = 2.0 * np.cos(arg)
        elif k == 2:
            osc = 2.0 * np.pi * bessel_j0(arg) * lam[None, :]
        else:
            osc = 4.0 * np.pi * np.sinc(arg / np.pi) * (lam ** 2)[None, :]
        out[sl] = (gauss * osc) @ env
    return pref * out


# ---------------------------------------------------------------------------
# generic tensor / QMC paths (pointwise)

def _generic_tensor_value(spec: GroupSpec, w, tau, budget: QuadratureBudget,
                          order: int | None = None) -> float:
    k = spec.k
    if k > 3:
        raise Unsupported("tensor lambda integration supports k <= 3")
    order = order or budget.lambda_order
    radius = budget.lambda_radius or generic_lambda_radius(
        spec, min(1e-16, budget.target_tol * 1e-4))
    rules = []
    for ell in range(k):
        width = budget.lambda_base_width / max(budget.refine, 1.0)
        freq = abs(float(tau[ell]))
        if freq > 0:
            width = min(width, 2.0 * np.pi / freq / budget.oscillation_panels)
        n = int(np.ceil(2.0 * radius / width))
        if (n * order) ** k > budget.max_lambda_nodes ** k or n * order > budget.max_lambda_nodes:
            raise AccuracyError("lambda oscillation exceeds the node budget")
        rules.append(panel_rule(uniform_edges(-radius, radius, n), order))
    lam, wts = tensor_rule(*rules)
    if len(wts) > budget.max_lambda_nodes:
        raise AccuracyError(f"tensor lambda grid has {len(wts)} nodes (budget "
                            f"{budget.max_lambda_nodes})")
    logenv, M = _stiffness_batch(spec, lam)
    quad_form = np.einsum("nij,i,j->n", M, w, w)
    phase = lam @ np.asarray(tau, dtype=float)
    vals = np.cos(phase) * np.exp(logenv - 0.25 * quad_form)
    pref = 2.0 ** k * (4.0 * np.pi) ** (-(0.5 * spec.m + k))
    return float(pref * np.sum(wts * vals))


def _qmc_value(spec: GroupSpec, w, tau, budget: QuadratureBudget):
    from scipy.stats import qmc

    radius = budget.lambda_radius or generic_lambda_radius(
        spec, min(1e-12, budget.target_tol))
    n_rep, n_pts = 8, 4096
    means = []
    pref = 2.0 ** spec.k * (4.0 * np.pi) ** (-(0.5 * spec.m + spec.k))
    vol = (2.0 * radius) ** spec.k
    for rep in range(n_rep):
        eng = qmc.Sobol(d=spec.k, scramble=True,
                        seed=stable_seed(budget.seed, "qmc-kernel", rep))
        lam = (eng.random(n_pts) * 2.0 - 1.0) * radius
        logenv, M = _stiffness_batch(spec, lam)
        quad_form = np.einsum("nij,i,j->n", M, w, w)
        phase = lam @ np.asarray(tau, dtype=float)
        means.append(vol * np.mean(np.cos(phase) * np.exp(logenv - 0.25 * quad_form)))
    means = pref * np.asarray(means)
    value = float(np.mean(means))
    err = float(np.std(means) / np.sqrt(n_rep) * 3.0)
    return value, err


# ---------------------------------------------------------------------------
# public kernel operations

def _reduced_value(spec: GroupSpec, w_hat, tau_hat, budget: QuadratureBudget):
    """Kernel at t = 1 and an order-halved companion for the error estimate."""
    split = get_split(spec)
    order = budget.lambda_order
    low = max(3, order // 2)
    if split is not None:
        v1 = float(k1_kernel_values(split, w_hat[None], tau_hat[:1].reshape(1),
                                    budget)[0])
        v2 = float(k1_kernel_values(split, w_hat[None], tau_hat[:1].reshape(1),
                                    budget, order_override=low)[0])
        return v1, abs(v1 - v2)
    if is_htype(spec) and spec.k <= 3:
        w2 = np.array([float(w_hat @ w_hat)])
        tn = np.array([float(np.linalg.norm(tau_hat))])
        v1 = float(htype_kernel_values(spec.m, spec.k, w2, tn, budget)[0])
        v2 = float(htype_kernel_values(spec.m, spec.k, w2, tn, budget, order=low)[0])
        return v1, abs(v1 - v2)
    if spec.k <= 3:
        v1 = _generic_tensor_value(spec, w_hat, tau_hat, budget)
        v2 = _generic_tensor_value(spec, w_hat, tau_hat, budget, order=low)
        return v1, abs(v1 - v2)
    return _qmc_value(spec, w_hat, tau_hat, budget)


def kernel(spec: GroupSpec, g: GroupPoint, gp: GroupPoint, t: float,
           quad: LambdaQuadrature | None = None,
           budget: QuadratureBudget = DEFAULT_BUDGET) -> KernelValue:
    """Heat kernel p(g, g', t), positive density with an error estimate.

    Raises AccuracyError when the estimated quadrature error exceeds
    10x the target tolerance (e.g. t so small that the vertical
    oscillation outruns the node budget).
    """
    if t <= 0:
        raise ValueError("time must be positive")
    eff = quad.as_budget(budget) if quad is not None else budget
    w, tau = relative_coordinates(spec, g, gp)
    st = np.sqrt(t)
    value_red, err_red = _reduced_value(spec, w / st, tau / t, eff)
    tol = eff.target_tol
    if err_red > 10.0 * tol:
        raise AccuracyError(
            f"kernel quadrature error estimate {err_red:.3e} exceeds 10 x {tol:.1e}",
            estimate=err_red)
    scale = t ** (-0.5 * spec.Q)
    value = value_red * scale
    err = err_red * scale
    clamped = 0.0
    if value < 0.0:
        if value < -tol * scale:
            raise AccuracyError(f"kernel value {value:.3e} below -target_tol",
                                estimate=err)
        clamped = -value
        value = 0.0
    return KernelValue(value=value, quadrature_error_estimate=err, clamped=clamped)


def kernel_htype(spec: GroupSpec, g: GroupPoint, gp: GroupPoint, t: float,
                 quad: LambdaQuadrature | None = None,
                 budget: QuadratureBudget = DEFAULT_BUDGET) -> KernelValue:
    """Hulanicki-Gaveau form: scalar envelope (|lam|/sinh|lam|)^(m/2).

    Raises NotHType unless A(lambda) = |lambda|^2 I holds on sample
    directions to 1e-10.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    if not is_htype(spec):
        raise NotHType("group fails the A(lambda) = |lambda|^2 I check")
    eff = quad.as_budget(budget) if quad is not None else budget
    w, tau = relative_coordinates(spec, g, gp)
    st = np.sqrt(t)
    w2 = np.array([float(w @ w) / t])
    tn = np.array([float(np.linalg.norm(tau)) / t])
    v1 = float(htype_kernel_values(spec.m, spec.k, w2, tn, eff)[0])
    v2 = float(htype_kernel_values(spec.m, spec.k, w2, tn, eff,
                                   order=max(3, eff.lambda_order // 2))[0])
    scale = t ** (-0.5 * spec.Q)
    value, err = v1 * scale, abs(v1 - v2) * scale
    clamped = 0.0
    if value < 0.0:
        clamped, value = -value, 0.0
    return KernelValue(value=value, quadrature_error_estimate=err, clamped=clamped)


def kernel_euclidean(n: int, x, xp, t: float) -> float:
    """Gauss-Weierstrass kernel (4 pi t)^{-n/2} exp(-|x-x'|^2 / 4t)."""
    if t <= 0:
        raise ValueError("time must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    xp = np.asarray(xp, dtype=float).reshape(-1)
    if x.size != n or xp.size != n:
        raise ValueError("points do not match the dimension")
    d2 = float(np.sum((x - xp) ** 2))
    return (4.0 * np.pi * t) ** (-0.5 * n) * np.exp(-d2 / (4.0 * t))


def kernel_values_batched(spec: GroupSpec, W: np.ndarray, TAU: np.ndarray,
                          budget: QuadratureBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Vectorized t=1 kernel values; rows of W (N, m) pair with TAU (N, k)."""
    W = np.atleast_2d(W)
    TAU = np.atleast_2d(TAU)
    split = get_split(spec)
    if split is not None:
        return k1_kernel_values(split, W, TAU[:, 0], budget)
    if is_htype(spec) and spec.k <= 3:
        return htype_kernel_values(spec.m, spec.k, np.sum(W * W, axis=1),
                                   np.linalg.norm(TAU, axis=1), budget)
    if spec.k <= 3:
        return np.array([_generic_tensor_value(spec, w, tau, budget)
                         for w, tau in zip(W, TAU)])
    raise Unsupported("batched evaluation needs k <= 3")


# ---------------------------------------------------------------------------
# heat content of indicator functions

def _sigma_interval(region, zp: np.ndarray):
    """(lo, hi) of the vertical section over horizontal nodes zp (k = 1)."""
    n = zp.shape[0]
    if isinstance(region, VerticalCylinder):
        a, b = region.sigma_box[0]
        return np.full(n, a), np.full(n, b)
    if isinstance(region, CoordinateBox):
        a, b = region.bounds[-1]
        return np.full(n, a), np.full(n, b)
    if isinstance(region, EuclideanBall):
        c = np.asarray(region.center)
        d2 = np.sum((zp - c[None, : zp.shape[1]]) ** 2, axis=1)
        half = np.sqrt(np.clip(region.radius ** 2 - d2, 0.0, None))
        return c[-1] - half, c[-1] + half
    raise TypeError("unsupported region for the k=1 content path")


def _horizontal_rule(region, z: np.ndarray, t: float, budget: QuadratureBudget):
    """Quadrature over the horizontal section near z (window of the Gaussian)."""
    st = np.sqrt(t)
    cut = budget.spatial_cut * st
    n_pan = max(5, int(np.ceil(6 * min(budget.refine, 4.0))))
    if isinstance(region, (VerticalCylinder, EuclideanBall)):
        zc = np.asarray(region.center)[: z.size]
        R = region.radius
        v = z - zc
        r = float(np.linalg.norm(v))
        r_lo, r_hi = max(0.0, r - cut), min(R, r + cut)
        if r_lo >= r_hi:
            return None
        phi0 = float(np.arctan2(v[1], v[0])) if r > 1e-14 else 0.0
        if r_lo <= 1e-12 or cut / (2.0 * np.sqrt(r * max(r_lo, 1e-300))) >= 1.0:
            th = np.pi
        else:
            th = min(np.pi, 2.4 * np.arcsin(cut / (2.0 * np.sqrt(r * r_lo))))
        rr = panel_rule(uniform_edges(r_lo, r_hi, n_pan), budget.spatial_order)
        tt = panel_rule(uniform_edges(phi0 - th, phi0 + th, n_pan + 2),
                        budget.spatial_order)
        pts, wts = tensor_rule(rr, tt)
        zp = np.stack([zc[0] + pts[:, 0] * np.cos(pts[:, 1]),
                       zc[1] + pts[:, 0] * np.sin(pts[:, 1])], axis=1)
        return zp, wts * pts[:, 0]
    if isinstance(region, CoordinateBox):
        rules = []
        for i in range(z.size):
            a, b = region.bounds[i]
            lo, hi = max(a, z[i] - cut), min(b, z[i] + cut)
            if lo >= hi:
                return None
            rules.append(panel_rule(uniform_edges(lo, hi, n_pan), budget.spatial_order))
        pts, wts = tensor_rule(*rules)
        return pts, wts
    raise TypeError("unsupported region for the k=1 content path")


def indicator_content_k1(spec: GroupSpec, region, z: np.ndarray,
                         sigmas: np.ndarray, t: float,
                         budget: QuadratureBudget = DEFAULT_BUDGET) -> np.ndarray:
    """P_t 1_E at the points (z, sigma_j), one fixed z, batched over sigma.

    Valid for k = 1 groups with the single-eigenvalue split; the
    vertical integral over the section is done in closed form against
    the tabulated cumulative kernel, leaving a horizontal quadrature
    against a plain Gaussian.
    """
    table = get_table(spec, budget)
    split = table.split
    sigmas = np.asarray(sigmas, dtype=float).reshape(-1)
    rule = _horizontal_rule(region, z, t, budget)
    if rule is None:
        return np.zeros(len(sigmas))
    zp, wts = rule
    st = np.sqrt(t)
    w_hat = (zp - z[None, :]) / st
    gauss = np.exp(-0.25 * np.sum(w_hat * w_hat, axis=1))
    rP = split.active_radius(w_hat)
    lo, hi = _sigma_interval(region, zp)
    twist = 0.5 * (zp @ (spec.J[0] @ z))        # <J_1 z, z'> / 2
    alpha = (lo[:, None] - sigmas[None, :] - twist[:, None]) / t
    beta = (hi[:, None] - sigmas[None, :] - twist[:, None]) / t
    frac = table.interval_mass(rP[:, None], alpha, beta)
    values = (4.0 * np.pi * t) ** (-0.5 * spec.m) * ((wts * gauss) @ frac)
    return np.clip(values, 0.0, 1.0)


def _stratified_mc_content(spec, region, g, t, budget):
    lo, hi = _region_box(region)
    d = lo.size
    n_cells = max(1, int(round(budget.mc_strata ** (1.0 / d))))
    edges = [np.linspace(lo[i], hi[i], n_cells + 1) for i in range(d)]
    per_cell = max(8, budget.mc_samples // n_cells ** d)
    total = 0.0
    idx = np.ndindex(*([n_cells] * d))
    for cell_no, multi in enumerate(idx):
        rng = np.random.default_rng(stable_seed(budget.seed, "mc-content", cell_no))
        cell_lo = np.array([edges[i][multi[i]] for i in range(d)])
        cell_hi = np.array([edges[i][multi[i] + 1] for i in range(d)])
        pts = rng.uniform(cell_lo, cell_hi, size=(per_cell, d))
        inside = np.array([contains(region, _as_point(spec, p)) for p in pts])
        if not np.any(inside):
            continue
        sel = pts[inside]
        W = (sel[:, : spec.m] - g.z[None, :]) / np.sqrt(t)
        TAU = (sel[:, spec.m:] - g.sigma[None, :]
               - 0.5 * _twist_batch(spec, g.z, sel[:, : spec.m])) / t
        vals = kernel_values_batched(spec, W, TAU, budget) * t ** (-0.5 * spec.Q)
        cell_vol = float(np.prod(cell_hi - cell_lo))
        total += cell_vol * np.sum(vals) / per_cell
    return total


def _twist_batch(spec: GroupSpec, z: np.ndarray, zp: np.ndarray) -> np.ndarray:
    return np.einsum("lij,i,nj->nl", spec.J, z, zp)


def _as_point(spec: GroupSpec, coords: np.ndarray) -> GroupPoint:
    return GroupPoint(coords[: spec.m], coords[spec.m:])


def _region_box(region):
    from .regions import _bounding_box
    return _bounding_box(region)


def apply_to_indicator(spec: GroupSpec, region, g: GroupPoint, t: float,
                       budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """P_t 1_E(g), clamped to [0, 1] (clamp magnitude logged).

    Uses the closed vertical integration for k = 1 split groups over
    cylinders/boxes/balls, a tensor rule over the region for m + k <= 4,
    and stratified Monte Carlo otherwise.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    if isinstance(region, HorizontalHalfSpace):
        raise Unbounded("indicator content needs a bounded region")
    split = get_split(spec)
    fast = (split is not None and spec.m == 2
            and isinstance(region, (VerticalCylinder, EuclideanBall, CoordinateBox)))
    if split is not None and isinstance(region, CoordinateBox):
        fast = True
    if fast:
        raw = indicator_content_k1(spec, region, g.z, np.array([g.sigma[0]]), t, budget)
        return float(raw[0])
    if spec.m + spec.k <= 4 and spec.k <= 3:
        pts, wts = volume_rule(region, refine=max(1, int(budget.refine)),
                               order=budget.spatial_order)
        W = (pts[:, : spec.m] - g.z[None, :]) / np.sqrt(t)
        TAU = (pts[:, spec.m:] - g.sigma[None, :]
               - 0.5 * _twist_batch(spec, g.z, pts[:, : spec.m])) / t
        vals = kernel_values_batched(spec, W, TAU, budget) * t ** (-0.5 * spec.Q)
        value = float(np.sum(wts * vals))
    else:
        value = _stratified_mc_content(spec, region, g, t, budget)
    clipped = min(max(value, 0.0), 1.0)
    if clipped != value:
        logger.debug("apply_to_indicator clamped %.3e to [0,1]", value - clipped)
    return clipped


# ---------------------------------------------------------------------------
# self-tests

def selftest_normalization(spec: GroupSpec, t: float = 1.0,
                           budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """|integral of p(e, ., t) - 1| over a truncated domain, plus tail bound.

    The integral is scale-invariant, so it is evaluated in reduced t = 1
    coordinates regardless of t.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    m, k = spec.m, spec.k
    wcut = 1.5 * budget.spatial_cut
    ucut = budget.vertical_cut
    nw = max(10, int(12 * min(budget.refine, 4.0)))
    nu = max(20, int(24 * min(budget.refine, 4.0)))
    rw, ww = panel_rule(graded_edges(0.0, wcut, [0.0], inner=0.25), budget.spatial_order)
    ru, wu = panel_rule(graded_edges(0.0, ucut, [0.0], inner=0.1, coarse=ucut / nu * 4),
                        budget.spatial_order)
    from .special import gamma as _gamma
    sphere_m = 2 * np.pi ** (m / 2) / _gamma(m / 2)

    if is_htype(spec) and k <= 3:
        sphere_k = 2.0 if k == 1 else 2 * np.pi ** (k / 2) / _gamma(k / 2)
        total = 0.0
        for u, wu_i in zip(ru, wu):
            vals = htype_kernel_values(m, k, rw ** 2, np.full_like(rw, u), budget)
            radial = np.sum(ww * rw ** (m - 1) * vals)
            total += wu_i * u ** (k - 1) * radial * sphere_m * sphere_k
        tail = _normalization_tail(m, wcut, ucut)
        return abs(total - 1.0) + tail

    split = get_split(spec)
    if split is not None:
        # radial in the active block, tensor over null directions and tau
        ra = split.rank
        null_dim = m - ra
        sphere_a = 2 * np.pi ** (ra / 2) / _gamma(ra / 2)
        axes = [panel_rule(graded_edges(-wcut, wcut, [0.0], inner=0.25),
                           budget.spatial_order) for _ in range(null_dim)]
        base = np.linalg.svd(split.projector)[0][:, :ra]
        nullb = np.linalg.svd(np.eye(m) - split.projector)[0][:, :null_dim] \
            if null_dim else np.zeros((m, 0))
        total = 0.0
        null_pts, null_wts = tensor_rule(*axes) if null_dim else (np.zeros((1, 0)), np.ones(1))
        for u, wu_i in zip(ru, wu):
            for npnt, nwt in zip(null_pts, null_wts):
                W = rw[:, None] * base[:, 0][None, :]
                if null_dim:
                    W = W + (nullb @ npnt)[None, :]
                vals = k1_kernel_values(split, W, np.full(len(rw), u), budget)
                total += 2.0 * wu_i * nwt * np.sum(ww * rw ** (ra - 1) * vals) * sphere_a
        tail = _normalization_tail(m, wcut, ucut)
        return abs(total - 1.0) + tail
    raise Unsupported("normalization self-test implemented for H-type and k=1 groups")


def _normalization_tail(m: int, wcut: float, ucut: float) -> float:
    # Gaussian tail in w (the vertical marginal is exactly Gaussian) plus a
    # conservative vertical tail ~ exp(-pi u) from strip analyticity.
    from .special import erfc as _erfc
    gauss_tail = m * float(_erfc(wcut / 2.0))
    vert_tail = float(np.exp(-np.pi * ucut) / np.pi) * 4.0
    return gauss_tail + vert_tail


def selftest_scaling(spec: GroupSpec, n_samples: int = 20, ratios=(0.5, 2.0),
                     t: float = 1.0, budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """max relative deviation of p(delta_r g, e, r^2 t) vs r^{-Q} p(g, e, t)."""
    from .groups import dilate
    rng = np.random.default_rng(stable_seed(budget.seed, "scaling"))
    e = identity(spec)
    worst = 0.0
    for _ in range(n_samples):
        g = GroupPoint(rng.normal(scale=1.2, size=spec.m),
                       rng.normal(scale=1.2, size=spec.k))
        base = kernel(spec, g, e, t, budget=budget).value
        for r in ratios:
            lhs = kernel(spec, dilate(spec, r, g), e, r * r * t, budget=budget).value
            rhs = r ** (-spec.Q) * base
            worst = max(worst, abs(lhs - rhs) / max(base * r ** (-spec.Q), 1e-300))
    return worst


def selftest_chapman_kolmogorov(spec: GroupSpec, g: GroupPoint, gpp: GroupPoint,
                                t: float, s: float,
                                budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """|p(g, g'', t+s) - int p(g, ., t) p(., g'', s)| relative deviation."""
    if t <= 0 or s <= 0:
        raise ValueError("times must be positive")
    target = kernel(spec, g, gpp, t + s, budget=budget).value
    ts = max(t, s)
    cut = budget.spatial_cut * np.sqrt(ts)
    zmid = 0.5 * (g.z + gpp.z)
    smid = 0.5 * (g.sigma + gpp.sigma)
    span = 0.5 * np.abs(g.z - gpp.z) + cut
    zmax = float(np.max(np.abs([g.z, gpp.z])) + cut)
    vspan = (0.5 * np.abs(g.sigma - gpp.sigma) + budget.vertical_cut * ts / 2.0
             + 0.5 * zmax * (np.max(span) + zmax))
    n = max(4, int(6 * min(budget.refine, 2.0)))
    rules = [panel_rule(uniform_edges(zmid[i] - span[i], zmid[i] + span[i], n),
                        budget.spatial_order) for i in range(spec.m)]
    rules += [panel_rule(uniform_edges(float(smid[ell] - vspan), float(smid[ell] + vspan),
                                       2 * n), budget.spatial_order)
              for ell in range(spec.k)]
    pts, wts = tensor_rule(*rules)
    zp, sp = pts[:, : spec.m], pts[:, spec.m:]
    W1 = (zp - g.z[None, :]) / np.sqrt(t)
    T1 = (sp - g.sigma[None, :] - 0.5 * _twist_batch(spec, g.z, zp)) / t
    # p(g', g'', s) = p(g'', g', s) by symmetry; use relative coords from g''
    W2 = (zp - gpp.z[None, :]) / np.sqrt(s)
    T2 = (sp - gpp.sigma[None, :] - 0.5 * _twist_batch(spec, gpp.z, zp)) / s
    v1 = kernel_values_batched(spec, W1, T1, budget) * t ** (-0.5 * spec.Q)
    v2 = kernel_values_batched(spec, W2, T2, budget) * s ** (-0.5 * spec.Q)
    integral = float(np.sum(wts * v1 * v2))
    return abs(integral - target) / max(abs(target), 1e-300)


def vertical_marginal_deviation(spec: GroupSpec, g: GroupPoint, zp: np.ndarray,
                                t: float,
                                budget: QuadratureBudget = DEFAULT_BUDGET) -> float:
    """|int_R^k p((z,s),(z',.),t) dsigma' - (4 pi t)^{-m/2} e^{-|z-z'|^2/4t}|.

    The full vertical integral of the kernel is the lambda = 0 Fourier
    mode: an exact Euclidean Gaussian in the horizontal variables.
    """
    zp = np.asarray(zp, dtype=float).reshape(-1)
    w_hat = (zp - g.z) / np.sqrt(t)
    ucut = budget.vertical_cut
    edges = graded_edges(-ucut, ucut, [0.0], inner=0.1, coarse=1.0)
    rules = [panel_rule(edges, budget.spatial_order) for _ in range(spec.k)]
    tau_hat, wu = tensor_rule(*rules)
    W = np.repeat(w_hat[None, :], len(wu), axis=0)
    vals = kernel_values_batched(spec, W, tau_hat, budget)
    # p = t^{-Q/2} h1(w_hat, tau_hat) and dsigma' = t^k dtau_hat, so the
    # marginal is t^{k - Q/2} = t^{-m/2} times the reduced tau integral.
    numeric = float(np.sum(wu * vals)) * t ** (spec.k - 0.5 * spec.Q)
    target = (4.0 * np.pi * t) ** (-0.5 * spec.m) \
        * np.exp(-float(np.sum((zp - g.z) ** 2)) / (4.0 * t))
    return abs(numeric - target)
