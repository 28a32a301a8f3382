"""Fast evaluation structures for k = 1 heat kernels.

For a group with one vertical direction whose matrix A_1 = J_1^T J_1
has a single nonzero eigenvalue a (Heisenberg groups, H^1 x R, ...) the
time-1 kernel at relative coordinates (w, tau) collapses to a function
of two scalars: the length r of the projection of w onto the range of
A_1 and tau, with the null directions contributing an exact Gaussian.
Writing kappa(x) = sqrt(a) x / tanh(sqrt(a) x) and
rho(x) = (sqrt(a) x / sinh(sqrt(a) x))^(rank/2),

    h(w, tau) = (4 pi)^(-m/2) exp(-|w|^2/4) * chi(r, tau),

where chi(r, .) is the conditional vertical density (it integrates to 1
over tau in R) and its antiderivative psi(r, u) = int_0^u chi saturates
at 1/2.  Both normalized functions are O(1), smooth, and are tabulated
once on a uniform (r, u) grid, then looked up through cubic B-spline
interpolation (scipy.ndimage).  Partial vertical masses -- the quantity
the heat-content and deficit integrals need -- then cost one table
lookup instead of an oscillatory quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .budget import QuadratureBudget
from .groups import GroupSpec
from .quadrature import panel_rule, uniform_edges
from .special import log_sinh_ratio, tanh_ratio

__all__ = ["SplitSpectrum", "VerticalKernelTable", "get_split", "get_table"]


@dataclass(frozen=True)
class SplitSpectrum:
    """k = 1 spectral split: A_1 = a P + 0 (I - P) with P of rank `rank`."""

    a: float
    rank: int
    m: int
    projector: np.ndarray

    def envelope(self, lam):
        """(det j(sqrt(A(lambda))))^(1/2) for scalar/array lambda."""
        x = np.sqrt(self.a) * np.abs(np.asarray(lam, dtype=float))
        return np.exp(0.5 * self.rank * log_sinh_ratio(x))

    def stiffness(self, lam):
        """kappa(lambda) multiplying |P w|^2 / 4 in the Gaussian factor."""
        x = np.sqrt(self.a) * np.abs(np.asarray(lam, dtype=float))
        return tanh_ratio(x)

    def active_radius(self, w):
        """|P w| for a batch of horizontal vectors (N, m)."""
        w = np.atleast_2d(w)
        pw = w @ self.projector
        return np.sqrt(np.einsum("ni,ni->n", pw, pw))

    def lambda_radius(self, tol: float = 1e-18) -> float:
        # solve rho(x) = tol via the asymptotic log(2x) - x per eigenvalue
        target = -np.log(tol) * 2.0 / self.rank
        x = target
        for _ in range(4):
            x = target + np.log(2.0 * x)
        return float(x / np.sqrt(self.a))


_SPLIT_CACHE: dict = {}


def get_split(spec: GroupSpec):
    """SplitSpectrum for spec, or None when the fast path does not apply."""
    key = spec.key()
    if key in _SPLIT_CACHE:
        return _SPLIT_CACHE[key]
    split = None
    if spec.k == 1:
        A1 = spec.J[0].T @ spec.J[0]
        evals, vecs = np.linalg.eigh(A1)
        top = float(evals[-1])
        nonzero = evals > 1e-12 * top
        vals = evals[nonzero]
        if vals.size and (vals.max() - vals.min()) <= 1e-10 * top:
            cols = vecs[:, nonzero]
            split = SplitSpectrum(a=float(vals.mean()), rank=int(vals.size),
                                  m=spec.m, projector=cols @ cols.T)
    _SPLIT_CACHE[key] = split
    return split


def _lambda_rule(split: SplitSpectrum, max_freq: float, budget: QuadratureBudget):
    radius = budget.lambda_radius or split.lambda_radius(
        tol=min(1e-18, budget.target_tol * 1e-6))
    width = budget.lambda_base_width
    if max_freq > 0:
        width = min(width, 2.0 * np.pi / max_freq / budget.oscillation_panels)
    width /= max(budget.refine, 1.0)
    n = int(np.ceil(radius / width))
    if n * budget.lambda_order > budget.max_lambda_nodes:
        raise ValueError(
            f"lambda rule needs {n * budget.lambda_order} nodes "
            f"(budget {budget.max_lambda_nodes}); frequency {max_freq:.3g} too high")
    return panel_rule(uniform_edges(0.0, radius, n), budget.lambda_order)


class VerticalKernelTable:
    """Tabulated conditional vertical density chi and mass psi (see module doc)."""

    def __init__(self, split: SplitSpectrum, budget: QuadratureBudget):
        self.split = split
        self.m = split.m
        self.r_max = budget.table_r_max
        self.u_max = budget.vertical_cut
        r_step = budget.table_r_step
        u_step = budget.table_u_step
        self.r_grid = np.arange(0.0, self.r_max + r_step, r_step)
        self.u_grid = np.arange(0.0, self.u_max + u_step, u_step)
        self._r_step = float(self.r_grid[1] - self.r_grid[0])
        self._u_step = float(self.u_grid[1] - self.u_grid[0])

        lam, wts = _lambda_rule(split, max_freq=self.u_max, budget=budget)
        env = split.envelope(lam)
        kap = split.stiffness(lam)
        # rows: r, columns: lambda nodes; exp args stay <= 0
        expo = np.log(np.maximum(env, 1e-300))[None, :] \
            - 0.25 * kap[None, :] * (self.r_grid ** 2)[:, None]
        E = np.exp(expo) * wts[None, :]
        cosm = np.cos(np.outer(lam, self.u_grid))
        sinm = np.sin(np.outer(lam, self.u_grid)) / lam[:, None]
        # E @ cosm is int_0^Lambda (half of the even integral over R);
        # chi = T_h / (2 pi e^{-r^2/4}) then normalizes to a unit density.
        norm = np.pi * np.exp(-0.25 * self.r_grid ** 2)
        chi = (E @ cosm) / norm[:, None]
        psi = (E @ sinm) / norm[:, None]
        self._tail = np.maximum(0.5 - psi.min(axis=0), 0.0)  # worst saturation defect per u
        self._chi = ndimage.spline_filter(chi, order=3, mode="nearest")
        self._psi = ndimage.spline_filter(psi, order=3, mode="nearest")

    def _coords(self, r, u):
        ri = np.clip(np.asarray(r, dtype=float) / self._r_step, 0.0,
                     len(self.r_grid) - 1.0)
        ui = np.clip(np.asarray(u, dtype=float) / self._u_step, 0.0,
                     len(self.u_grid) - 1.0)
        return np.broadcast_arrays(ri, ui)

    def density(self, r, u):
        """chi(r, |u|); 0 beyond the tabulated vertical range."""
        u = np.abs(np.asarray(u, dtype=float))
        r, u = np.broadcast_arrays(np.asarray(r, dtype=float), u)
        out = np.zeros(u.shape)
        live = u <= self.u_max
        if np.any(live):
            ri = np.clip(r[live] / self._r_step, 0.0, len(self.r_grid) - 1.0)
            ui = u[live] / self._u_step
            val = ndimage.map_coordinates(self._chi, [ri, ui],
                                          order=3, prefilter=False, mode="nearest")
            out[live] = np.maximum(val, 0.0)
        return out

    def mass_below(self, r, u):
        """F(r, u) = fraction of the conditional vertical mass in (-inf, u].

        Saturated arguments (|u| beyond the table) short-circuit to 0/1
        without touching the spline; the saturation defect is bounded by
        `tail_defect`.
        """
        u = np.asarray(u, dtype=float)
        r, u = np.broadcast_arrays(np.asarray(r, dtype=float), u)
        out = np.where(u > 0.0, 1.0, 0.0)
        live = np.abs(u) <= self.u_max
        if np.any(live):
            ul = u[live]
            ri = np.clip(r[live] / self._r_step, 0.0, len(self.r_grid) - 1.0)
            ui = np.abs(ul) / self._u_step
            psi = ndimage.map_coordinates(self._psi, [ri, ui],
                                          order=3, prefilter=False, mode="nearest")
            out[live] = 0.5 + np.sign(ul) * np.clip(psi, 0.0, 0.5)
        return out

    def interval_mass(self, r, u_lo, u_hi):
        """Conditional mass of the vertical interval [u_lo, u_hi]."""
        return self.mass_below(r, u_hi) - self.mass_below(r, u_lo)

    def tail_defect(self, u: float) -> float:
        """Upper bound on 1/2 - psi(r, u) over tabulated r (saturation error)."""
        idx = min(int(np.floor(u / self._u_step)), len(self.u_grid) - 1)
        return float(self._tail[idx])

    def point_density(self, w, tau):
        """Time-1 kernel at relative coordinates, batched over rows of (w, tau)."""
        w = np.atleast_2d(w)
        tau = np.asarray(tau, dtype=float).reshape(-1)
        r = self.split.active_radius(w)
        pref = (4.0 * np.pi) ** (-0.5 * self.m) * np.exp(-0.25 * np.sum(w * w, axis=1))
        return pref * self.density(r, np.abs(tau))


_TABLE_CACHE: dict = {}


def get_table(spec: GroupSpec, budget: QuadratureBudget) -> VerticalKernelTable:
    split = get_split(spec)
    if split is None:
        raise ValueError("no k=1 single-eigenvalue fast path for this group")
    key = (spec.key(), budget.key())
    tab = _TABLE_CACHE.get(key)
    if tab is None:
        tab = VerticalKernelTable(split, budget)
        _TABLE_CACHE[key] = tab
    return tab


def k1_kernel_values(split: SplitSpectrum, w, tau, budget: QuadratureBudget,
                     order_override: int | None = None):
    """Direct lambda-quadrature kernel values at t = 1 (no tables).

    Batched over rows of w (N, m) and tau (N,).  Shares one lambda rule
    sized for the largest |tau| in the batch; memory is chunked.
    """
    w = np.atleast_2d(w)
    tau = np.asarray(tau, dtype=float).reshape(-1)
    m = split.m
    order = order_override or budget.lambda_order
    from dataclasses import replace
    lam, wts = _lambda_rule(split, max_freq=float(np.max(np.abs(tau), initial=0.0)),
                            budget=replace(budget, lambda_order=order))
    env = split.envelope(lam) * wts
    kap = split.stiffness(lam)
    r2 = split.active_radius(w) ** 2
    w2 = np.einsum("ni,ni->n", w, w)
    out = np.empty(len(tau))
    pref = 2.0 * (4.0 * np.pi) ** (-(0.5 * m + 1))
    chunk = max(1, int(2e7 / max(len(lam), 1)))
    for i0 in range(0, len(tau), chunk):
        sl = slice(i0, min(i0 + chunk, len(tau)))
        gauss = np.exp(-0.25 * (np.outer(r2[sl], kap) + (w2[sl] - r2[sl])[:, None]))
        osc = np.cos(np.outer(tau[sl], lam))
        out[sl] = 2.0 * (gauss * osc) @ env
    return pref * out
