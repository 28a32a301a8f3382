"""The universal hyperplane constant of the time-1 heat kernel.

For a horizontal unit vector nu, integrating p(., e, 1) over the
vertical hyperplane T(nu) = nu-perp x R^k yields the same number
1/sqrt(4 pi) = 0.2820947918 on every step-two group, independent of nu
and of both layer dimensions.  Two independent numerical routes verify
this:

  * `phi_direct` integrates kernel values over T(nu) with
    Gaussian-decay truncation;
  * `phi_via_inversion` evaluates the same quantity as a Fourier
    inversion at the origin of the profile

        f_nu(lam) = sqrt( det j(sqrt(A(lam))) / det Q_nu(lam) ),

    Q_nu the x/tanh(x) matrix compressed to nu-perp, whose value at
    lam = 0 is exactly 1; the double (lam, tau) integral must therefore
    return 1/sqrt(4 pi) up to quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import j0 as bessel_j0

from .budget import QuadratureBudget
from .errors import Unsupported
from .groups import GroupSpec, is_htype
from .heatkernel import (DEFAULT_BUDGET, htype_kernel_values,
                         kernel_values_batched)
from .kernel_tables import get_split
from .quadrature import fit_affine, graded_edges, panel_rule, tensor_rule, uniform_edges
from .special import log_sinh_ratio, tanh_ratio

__all__ = ["HyperplaneFrame", "phi_direct", "fourier_profile",
           "phi_via_inversion", "schwartz_decay_check", "PHI_TARGET"]

PHI_TARGET = 1.0 / np.sqrt(4.0 * np.pi)


@dataclass
class HyperplaneFrame:
    """Unit direction nu with an orthonormal basis of nu-perp."""

    nu: np.ndarray
    basis: np.ndarray          # (m, m-1), columns orthonormal, orthogonal to nu
    projector: np.ndarray      # I - nu nu^T

    @classmethod
    def build(cls, nu) -> "HyperplaneFrame":
        nu = np.asarray(nu, dtype=float).reshape(-1)
        norm = np.linalg.norm(nu)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("nu must be a unit vector")
        m = nu.size
        # complete nu to an orthonormal basis via QR of [nu | I]
        q, _ = np.linalg.qr(np.concatenate([nu[:, None], np.eye(m)], axis=1))
        if q[:, 0] @ nu < 0:
            q = -q
        basis = q[:, 1:m]
        frame = cls(nu=nu, basis=basis, projector=np.eye(m) - np.outer(nu, nu))
        frame.validate()
        return frame

    def validate(self) -> None:
        gram = self.basis.T @ self.basis
        if np.max(np.abs(gram - np.eye(self.basis.shape[1]))) > 1e-12:
            raise ValueError("frame basis is not orthonormal")
        if np.max(np.abs(self.basis.T @ self.nu)) > 1e-12:
            raise ValueError("frame basis is not orthogonal to nu")
        P = self.projector
        if np.max(np.abs(P @ P - P)) > 1e-12 or np.max(np.abs(P - P.T)) > 1e-12:
            raise ValueError("projector is not an orthogonal projection")


def fourier_profile(spec: GroupSpec, frame: HyperplaneFrame, lam) -> np.ndarray:
    """f_nu(lam) = exp( (log det j(sqrt A) - log det Q_nu) / 2 ), batched.

    Q_nu is positive definite (the x/tanh x matrix dominates the
    identity), so the profile is well defined for every lam; its value
    at lam = 0 is exactly 1 and 0 < f_nu <= 1 everywhere.
    """
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    Jl = spec.kaplan(lam)
    A = np.einsum("nji,njk->nik", Jl, Jl)
    evals, vecs = np.linalg.eigh(A)
    mu = np.sqrt(np.clip(evals, 0.0, None))
    log_det_j = np.sum(log_sinh_ratio(mu), axis=-1)
    M = np.einsum("nij,nj,nkj->nik", vecs, tanh_ratio(mu), vecs)
    B = frame.basis
    Q = np.einsum("im,nij,jl->nml", B, M, B)
    sign, log_det_q = np.linalg.slogdet(Q)
    if np.any(sign <= 0):
        raise ValueError("compressed matrix lost positivity")
    out = np.exp(0.5 * (log_det_j - log_det_q))
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# direct hyperplane integration

def _tau_cut(budget: QuadratureBudget) -> float:
    return min(budget.vertical_cut / 2.0, 14.0)


def _phi_direct_htype(spec: GroupSpec, budget: QuadratureBudget, order=None):
    # kernel radial in both |z-hat| and |sigma|: polar outer integral
    m, k = spec.m, spec.k
    order = order or budget.spatial_order
    zcut = 1.4 * budget.spatial_cut
    ucut = _tau_cut(budget)
    rz, wz = panel_rule(graded_edges(0.0, zcut, [0.0], inner=0.3, coarse=1.5), order)
    ru, wu = panel_rule(graded_edges(0.0, ucut, [0.0], inner=0.25, coarse=1.0), order)
    from .special import gamma as _gamma
    d_perp = m - 1
    sphere_z = 2.0 if d_perp == 1 else 2 * np.pi ** (d_perp / 2) / _gamma(d_perp / 2)
    sphere_u = 2.0 if k == 1 else 2 * np.pi ** (k / 2) / _gamma(k / 2)
    total = 0.0
    for u, wu_i in zip(ru, wu):
        vals = htype_kernel_values(m, k, rz ** 2, np.full_like(rz, u), budget,
                                   order=order)
        radial = np.sum(wz * rz ** (d_perp - 1) * vals)
        total += wu_i * u ** (k - 1) * radial
    return total * sphere_z * sphere_u


def _phi_direct_k1(spec: GroupSpec, frame: HyperplaneFrame,
                   budget: QuadratureBudget, order=None):
    # tensor over the (m-1) hyperplane coordinates and the single tau
    m = spec.m
    order = order or budget.spatial_order
    zcut = 1.4 * budget.spatial_cut
    ucut = _tau_cut(budget)
    axis = panel_rule(graded_edges(-zcut, zcut, [0.0], inner=0.4, coarse=2.0), order)
    tau_rule = panel_rule(graded_edges(-ucut, ucut, [0.0], inner=0.25, coarse=1.0), order)
    rules = [axis] * (m - 1) + [tau_rule]
    pts, wts = tensor_rule(*rules)
    W = pts[:, : m - 1] @ frame.basis.T
    TAU = pts[:, m - 1:]
    vals = kernel_values_batched(spec, W, TAU, budget)
    return float(np.sum(wts * vals))


def phi_direct(spec: GroupSpec, nu, budget: QuadratureBudget = DEFAULT_BUDGET):
    """Integral of p(., e, 1) over the vertical hyperplane of nu.

    Returns (value, error_estimate).  Must equal 1/sqrt(4 pi) for every
    horizontal unit direction on every step-two group.
    """
    frame = HyperplaneFrame.build(nu)
    if frame.nu.size != spec.m:
        raise ValueError("nu has wrong horizontal dimension")
    if is_htype(spec) and spec.k <= 3:
        v1 = _phi_direct_htype(spec, budget)
        v2 = _phi_direct_htype(spec, budget, order=max(3, budget.spatial_order // 2))
    elif spec.k == 1 and get_split(spec) is not None and spec.m <= 4:
        v1 = _phi_direct_k1(spec, frame, budget)
        v2 = _phi_direct_k1(spec, frame, budget,
                            order=max(3, budget.spatial_order // 2))
    else:
        raise Unsupported("phi_direct needs an H-type group or a k = 1 split group")
    tail = np.exp(-np.pi * _tau_cut(budget)) + np.exp(-(1.4 * budget.spatial_cut) ** 2 / 4.0)
    return v1, abs(v1 - v2) + float(tail)


# ---------------------------------------------------------------------------
# Fourier inversion route

def _profile_radius(spec: GroupSpec, frame, tol: float = 1e-18) -> float:
    radius = 4.0
    for _ in range(60):
        dirs = np.eye(spec.k)
        vals = [fourier_profile(spec, frame, radius * d[None]) for d in dirs]
        if np.max(vals) < tol:
            return radius
        radius *= 1.4
    raise ValueError("profile does not decay")


def phi_via_inversion(spec: GroupSpec, frame: HyperplaneFrame,
                      budget: QuadratureBudget = DEFAULT_BUDGET,
                      tau_max: float = 8.0):
    """(1/sqrt(4 pi)) x double Fourier integral of the profile (k <= 2).

    Computes f-hat on a tau grid and integrates it; by inversion at the
    origin the double integral equals f_nu(0) = 1, so the result is the
    universal constant up to quadrature error.
    """
    if spec.k > 2:
        raise Unsupported("inversion route supports k <= 2 (cost)")
    radius = _profile_radius(spec, frame)
    if spec.k == 1:
        freq = 2.0 * np.pi * tau_max
        width = min(budget.lambda_base_width,
                    2.0 * np.pi / freq / budget.oscillation_panels)
        n = int(np.ceil(radius / width))
        lam, wl = panel_rule(uniform_edges(0.0, radius, n), budget.lambda_order)
        f = np.asarray(fourier_profile(spec, frame, lam[:, None]))
        tau, wt = panel_rule(uniform_edges(0.0, tau_max, max(40, int(8 * tau_max))),
                             budget.lambda_order)
        # f even: f-hat(tau) = 2 int_0^inf f cos(2 pi tau lam); integral of
        # f-hat over R = 2 int_0^taumax by evenness of f-hat.
        fhat = 2.0 * np.cos(2.0 * np.pi * np.outer(tau, lam)) @ (wl * f)
        integral = 2.0 * float(wt @ fhat)
        # tail of the tau integral from the fitted exponential decay of f-hat
        tail_fit = np.abs(fhat[-8:])
        decay = max(np.log(max(tail_fit[0], 1e-300) / max(tail_fit[-1], 1e-300))
                    / (tau[-1] - tau[-8]), 0.1)
        tail = 2.0 * float(tail_fit[-1]) / decay
        err = abs(tail)
        return PHI_TARGET * integral, PHI_TARGET * (err + 1e-9)
    # k = 2: separable complex transforms on a tensor grid
    freq = 2.0 * np.pi * tau_max
    width = min(budget.lambda_base_width, 2.0 * np.pi / freq / budget.oscillation_panels)
    n = int(np.ceil(2.0 * radius / width))
    lam1, w1 = panel_rule(uniform_edges(-radius, radius, n), budget.lambda_order)
    lam2, w2 = lam1, w1
    grid = np.stack(np.meshgrid(lam1, lam2, indexing="ij"), axis=-1).reshape(-1, 2)
    F = np.asarray(fourier_profile(spec, frame, grid)).reshape(len(lam1), len(lam2))
    tau, wt = panel_rule(uniform_edges(-tau_max, tau_max, max(60, int(10 * tau_max))),
                         budget.lambda_order)
    E1 = np.exp(-2j * np.pi * np.outer(tau, lam1)) * w1[None, :]
    E2 = np.exp(-2j * np.pi * np.outer(tau, lam2)) * w2[None, :]
    fhat = np.real(E1 @ F @ E2.T)
    integral = float(wt @ fhat @ wt)
    edge = float(np.max(np.abs(fhat[-1, :])) + np.max(np.abs(fhat[:, -1])))
    return PHI_TARGET * integral, PHI_TARGET * (edge * 4.0 * tau_max + 1e-9)


def schwartz_decay_check(spec: GroupSpec, frame: HyperplaneFrame,
                         grid=None) -> tuple[float, float]:
    """Fit the eventual exponential decay rate of log f_nu beyond |lam| = 5.

    Returns (c_fit, max_violation): c_fit > 0 certifies exponential
    decay; max_violation is the largest observed increase of log f
    between consecutive radii past the threshold (should be <= 0).
    """
    if grid is None:
        grid = np.linspace(0.5, 20.0, 40)
    rng = np.random.default_rng(3)
    dirs = list(np.eye(spec.k)) + [rng.standard_normal(spec.k) for _ in range(3)]
    c_fits, violations = [], []
    for d in dirs:
        d = d / np.linalg.norm(d)
        lam = np.outer(grid, d)
        f = np.maximum(np.asarray(fourier_profile(spec, frame, lam)).reshape(-1), 1e-300)
        logf = np.log(f)
        mask = grid >= 5.0
        _, slope, _, _ = fit_affine(grid[mask], logf[mask])
        c_fits.append(-slope)
        violations.append(float(np.max(np.diff(logf[mask]), initial=-np.inf)))
    return float(min(c_fits)), float(max(violations))
