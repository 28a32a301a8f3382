"""Test regions: geometric descriptions, volumes, boundary patches and
the horizontal perimeter.

Regions are tagged unions over four shapes.  Boundaries of the bounded
shapes are tiled by parametrized patches (open faces; edges and corners
carry no surface measure) and the horizontal perimeter is computed as
the surface integral of the horizontal-normal length

    |N_H|^2 = sum_j ( N_{z_j} + 1/2 sum_l (J_l z)_j N_{sigma_l} )^2,

refined by doubling the quadrature until successive values agree to
1e-8 relative.  The variational form (sup over unit-norm horizontal
test fields of the integrated horizontal divergence) is available as a
certified lower bound through `variational_lower_bound`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AccuracyError, FieldNotAdmissible, Unbounded
from .groups import GroupPoint, GroupSpec
from .quadrature import panel_rule, tensor_rule, uniform_edges
from .special import gamma

__all__ = [
    "VerticalCylinder",
    "CoordinateBox",
    "EuclideanBall",
    "HorizontalHalfSpace",
    "BoundaryPatch",
    "contains",
    "volume",
    "boundary_patches",
    "horizontal_perimeter",
    "variational_lower_bound",
    "perimeter_euclidean",
    "region_to_json",
    "region_from_json",
    "resolve_region",
    "VectorField",
    "cylinder_boundary_field",
]


@dataclass(frozen=True)
class VerticalCylinder:
    """{ |z - center| < radius } x sigma_box, sigma_box a product of intervals."""

    center: tuple
    radius: float
    sigma_box: tuple        # ((a_1, b_1), ..., (a_k, b_k))

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "sigma_box", tuple((float(a), float(b)) for a, b in self.sigma_box))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        for a, b in self.sigma_box:
            if not a < b:
                raise ValueError("sigma_box intervals must have a < b")

    @property
    def m(self):
        return len(self.center)

    @property
    def k(self):
        return len(self.sigma_box)


@dataclass(frozen=True)
class CoordinateBox:
    """Product of open intervals over all m+k coordinates; first m are horizontal."""

    bounds: tuple           # ((a_i, b_i), ...) length m+k
    m: int

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        for a, b in self.bounds:
            if not a < b:
                raise ValueError("box bounds must have a < b")
        if not 0 < self.m <= len(self.bounds):
            raise ValueError("invalid horizontal dimension")


@dataclass(frozen=True)
class EuclideanBall:
    """Open Euclidean ball in R^{m+k}; first m coordinates are horizontal."""

    center: tuple
    radius: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not 0 < self.m <= len(self.center):
            raise ValueError("invalid horizontal dimension")


@dataclass(frozen=True)
class HorizontalHalfSpace:
    """{ <z, normal> < offset }; unbounded, admitted only where documented."""

    normal: tuple
    offset: float

    def __post_init__(self):
        nu = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("normal must be a unit vector")
        object.__setattr__(self, "normal", tuple(float(c) for c in nu))


Region = VerticalCylinder | CoordinateBox | EuclideanBall | HorizontalHalfSpace


def region_key(region) -> tuple:
    return (type(region).__name__,) + tuple(sorted(region.__dict__.items()))


def _ball_volume(d: int, rho: float) -> float:
    return np.pi ** (d / 2) * rho ** d / gamma(d / 2 + 1)


def _sphere_area(d: int, rho: float) -> float:
    # surface measure of the (d-1)-sphere of radius rho in R^d
    return 2 * np.pi ** (d / 2) * rho ** (d - 1) / gamma(d / 2)


def contains(region, g: GroupPoint) -> bool:
    """Strict interior membership (regions are open sets)."""
    x = g.coords()
    if isinstance(region, VerticalCylinder):
        z = g.z - np.asarray(region.center)
        if np.linalg.norm(z) >= region.radius:
            return False
        return all(a < s < b for s, (a, b) in zip(g.sigma, region.sigma_box))
    if isinstance(region, CoordinateBox):
        return all(a < c < b for c, (a, b) in zip(x, region.bounds))
    if isinstance(region, EuclideanBall):
        return bool(np.linalg.norm(x - np.asarray(region.center)) < region.radius)
    if isinstance(region, HorizontalHalfSpace):
        return bool(float(g.z @ np.asarray(region.normal)) < region.offset)
    raise TypeError(f"not a region: {region!r}")


def volume(region) -> float:
    if isinstance(region, VerticalCylinder):
        height = np.prod([b - a for a, b in region.sigma_box])
        return float(_ball_volume(region.m, region.radius) * height)
    if isinstance(region, CoordinateBox):
        return float(np.prod([b - a for a, b in region.bounds]))
    if isinstance(region, EuclideanBall):
        return float(_ball_volume(len(region.center), region.radius))
    if isinstance(region, HorizontalHalfSpace):
        raise Unbounded("half-space has infinite volume")
    raise TypeError(f"not a region: {region!r}")


def perimeter_euclidean(region) -> float:
    """Euclidean surface measure of the boundary, in closed form."""
    if isinstance(region, EuclideanBall):
        return float(_sphere_area(len(region.center), region.radius))
    if isinstance(region, CoordinateBox):
        lengths = np.array([b - a for a, b in region.bounds])
        total = np.prod(lengths)
        return float(2.0 * np.sum(total / lengths))
    if isinstance(region, VerticalCylinder):
        heights = np.array([b - a for a, b in region.sigma_box])
        box = float(np.prod(heights))
        lateral = _sphere_area(region.m, region.radius) * box
        caps = _ball_volume(region.m, region.radius) * 2.0 * np.sum(box / heights)
        return float(lateral + caps)
    if isinstance(region, HorizontalHalfSpace):
        raise Unbounded("half-space has infinite boundary measure")
    raise TypeError(f"not a region: {region!r}")


# ---------------------------------------------------------------------------
# boundary patches

@dataclass
class BoundaryPatch:
    """One open face of a region boundary, parametrized over a rectangle."""

    domain: np.ndarray                                   # (d-1, 2)
    param: Callable[[np.ndarray], np.ndarray]            # (N, d-1) -> (N, d)
    normal: Callable[[np.ndarray], np.ndarray]           # outward unit normal
    jacobian: Callable[[np.ndarray], np.ndarray]         # surface element
    base_panels: tuple
    label: str = ""

    def rule(self, refine: int = 1, order: int = 8):
        rules = []
        for (a, b), n in zip(self.domain, self.base_panels):
            rules.append(panel_rule(uniform_edges(a, b, max(1, n * refine)), order))
        return tensor_rule(*rules)


def _sphere_chart(d: int, rho: float, center: np.ndarray, theta0_range):
    """Spherical-coordinate chart of S^{d-1}; theta0_range splits chart pairs."""
    n_ang = d - 1

    def embed(u):
        u = np.atleast_2d(u)
        x = np.empty((u.shape[0], d))
        sin_prod = np.ones(u.shape[0])
        for i in range(n_ang):
            x[:, i] = sin_prod * np.cos(u[:, i])
            sin_prod = sin_prod * np.sin(u[:, i])
        x[:, n_ang] = sin_prod
        return x

    def param(u):
        return center[None, :] + rho * embed(u)

    def normal(u):
        return embed(u)

    def jac(u):
        u = np.atleast_2d(u)
        j = np.full(u.shape[0], rho ** (d - 1))
        for i in range(n_ang - 1):
            j = j * np.sin(u[:, i]) ** (n_ang - 1 - i)
        return j

    dom = np.array([theta0_range] + [[0.0, np.pi]] * max(0, n_ang - 2)
                   + ([[0.0, 2 * np.pi]] if n_ang >= 2 else []))
    if n_ang == 1:
        dom = np.array([theta0_range])
    panels = tuple([4] * n_ang)
    return dom, param, normal, jac, panels


def boundary_patches(region) -> list[BoundaryPatch]:
    if isinstance(region, HorizontalHalfSpace):
        raise Unbounded("half-space boundary has infinite measure")

    patches = []
    if isinstance(region, EuclideanBall):
        d = len(region.center)
        c = np.asarray(region.center)
        if d == 1:
            raise ValueError("need ambient dimension >= 2")
        full = 2 * np.pi if d == 2 else np.pi
        for lo, hi, tag in ((0.0, full / 2, "upper"), (full / 2, full, "lower")):
            dom, param, normal, jac, panels = _sphere_chart(d, region.radius, c, [lo, hi])
            patches.append(BoundaryPatch(dom, param, normal, jac, panels, f"sphere-{tag}"))
        return patches

    if isinstance(region, CoordinateBox):
        bounds = np.asarray(region.bounds)
        d = len(bounds)
        for axis in range(d):
            for side, val in enumerate(bounds[axis]):
                others = [i for i in range(d) if i != axis]
                dom = bounds[others]
                sign = -1.0 if side == 0 else 1.0

                def param(u, axis=axis, val=val, others=tuple(others)):
                    u = np.atleast_2d(u)
                    x = np.empty((u.shape[0], d))
                    x[:, axis] = val
                    for col, i in enumerate(others):
                        x[:, i] = u[:, col]
                    return x

                def normal(u, axis=axis, sign=sign):
                    u = np.atleast_2d(u)
                    nrm = np.zeros((u.shape[0], d))
                    nrm[:, axis] = sign
                    return nrm

                def jac(u):
                    return np.ones(np.atleast_2d(u).shape[0])

                patches.append(BoundaryPatch(np.asarray(dom, dtype=float), param, normal, jac,
                                             tuple([4] * (d - 1)), f"face-{axis}-{side}"))
        return patches

    if isinstance(region, VerticalCylinder):
        m, k = region.m, region.k
        d = m + k
        zc = np.asarray(region.center)
        box = np.asarray(region.sigma_box)
        # lateral face: sphere in z times the sigma box
        sdom, sparam, snormal, sjac, spanels = _sphere_chart(
            m, region.radius, zc, [0.0, 2 * np.pi if m == 2 else np.pi])

        def lat_param(u, sparam=sparam):
            u = np.atleast_2d(u)
            x = np.empty((u.shape[0], d))
            x[:, :m] = sparam(u[:, : m - 1])
            x[:, m:] = u[:, m - 1:]
            return x

        def lat_normal(u, snormal=snormal):
            u = np.atleast_2d(u)
            nrm = np.zeros((u.shape[0], d))
            nrm[:, :m] = snormal(u[:, : m - 1])
            return nrm

        def lat_jac(u, sjac=sjac):
            u = np.atleast_2d(u)
            return sjac(u[:, : m - 1])

        dom = np.vstack([sdom, box])
        patches.append(BoundaryPatch(dom, lat_param, lat_normal, lat_jac,
                                     tuple([4] * (m - 1) + [4] * k), "lateral"))
        # 2k flat sigma faces: solid z-ball (polar) times remaining sigma box
        for ell in range(k):
            for side, val in enumerate(box[ell]):
                others = [j for j in range(k) if j != ell]
                sign = -1.0 if side == 0 else 1.0
                rdom = np.vstack([[[0.0, region.radius]],
                                  _sphere_chart(m, 1.0, np.zeros(m),
                                                [0.0, 2 * np.pi if m == 2 else np.pi])[0],
                                  box[others]]) if m >= 2 else None
                if m == 1:
                    raise ValueError("need horizontal dimension >= 2")

                def face_param(u, ell=ell, val=val, others=tuple(others)):
                    u = np.atleast_2d(u)
                    x = np.empty((u.shape[0], d))
                    _, sp, _, _, _ = _sphere_chart(m, 1.0, np.zeros(m),
                                                   [0.0, 2 * np.pi if m == 2 else np.pi])
                    x[:, :m] = zc[None, :] + u[:, 0:1] * sp(u[:, 1:m])
                    x[:, m + ell] = val
                    for col, j in enumerate(others):
                        x[:, m + j] = u[:, m + col]
                    return x

                def face_normal(u, ell=ell, sign=sign):
                    u = np.atleast_2d(u)
                    nrm = np.zeros((u.shape[0], d))
                    nrm[:, m + ell] = sign
                    return nrm

                def face_jac(u):
                    u = np.atleast_2d(u)
                    _, _, _, sj, _ = _sphere_chart(m, 1.0, np.zeros(m),
                                                   [0.0, 2 * np.pi if m == 2 else np.pi])
                    return u[:, 0] ** (m - 1) * sj(u[:, 1:m])

                patches.append(BoundaryPatch(np.asarray(rdom, dtype=float), face_param,
                                             face_normal, face_jac,
                                             tuple([4] * (d - 1)), f"sigma-face-{ell}-{side}"))
        return patches

    raise TypeError(f"not a region: {region!r}")


def horizontal_normal_length(spec: GroupSpec, x: np.ndarray, nrm: np.ndarray) -> np.ndarray:
    """|N_H| at boundary points x with Euclidean unit normals nrm (batched)."""
    x = np.atleast_2d(x)
    nrm = np.atleast_2d(nrm)
    m, k = spec.m, spec.k
    z = x[:, :m]
    nh = nrm[:, :m].copy()
    for ell in range(k):
        nh += 0.5 * (z @ spec.J[ell].T) * nrm[:, m + ell][:, None]
    return np.sqrt(np.sum(nh * nh, axis=1))


def surface_integral(spec_or_none, region, integrand, refine=1, order=8) -> float:
    total = 0.0
    for patch in boundary_patches(region):
        u, w = patch.rule(refine=refine, order=order)
        x = patch.param(u)
        nrm = patch.normal(u)
        total += float(np.sum(w * patch.jacobian(u) * integrand(x, nrm)))
    return total


def horizontal_perimeter(spec: GroupSpec, region, rel_tol: float = 1e-8,
                         max_doublings: int = 7) -> float:
    """Surface-integral horizontal perimeter for piecewise-C1 regions.

    Refines the patch quadrature by doubling until two successive values
    agree to rel_tol relative.
    """
    if isinstance(region, HorizontalHalfSpace):
        raise Unbounded("horizontal perimeter of a half-space is infinite")

    def integrand(x, nrm):
        return horizontal_normal_length(spec, x, nrm)

    prev = surface_integral(spec, region, integrand, refine=1)
    refine = 2
    for _ in range(max_doublings):
        cur = surface_integral(spec, region, integrand, refine=refine)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev, refine = cur, refine * 2
    raise AccuracyError("horizontal perimeter did not converge under refinement",
                        estimate=abs(cur - prev))


def euclidean_surface_area(region, refine=2) -> float:
    """Patch-sum of Euclidean areas (used to validate the patch tiling)."""
    return surface_integral(None, region, lambda x, nrm: np.ones(len(np.atleast_2d(x))),
                            refine=refine)


# ---------------------------------------------------------------------------
# volume quadrature and the variational lower bound

def volume_rule(region, refine: int = 1, order: int = 8):
    """Quadrature (points (N, d), weights) over a bounded region."""
    if isinstance(region, CoordinateBox):
        rules = [panel_rule(uniform_edges(a, b, max(2, 4 * refine)), order)
                 for a, b in region.bounds]
        return tensor_rule(*rules)
    if isinstance(region, VerticalCylinder):
        m, k = region.m, region.k
        zc = np.asarray(region.center)
        rad = panel_rule(uniform_edges(0.0, region.radius, max(2, 4 * refine)), order)
        sdom, sparam, _, sjac, _ = _sphere_chart(m, 1.0, np.zeros(m),
                                                 [0.0, 2 * np.pi if m == 2 else np.pi])
        ang_rules = [panel_rule(uniform_edges(a, b, max(2, 4 * refine)), order) for a, b in sdom]
        sig_rules = [panel_rule(uniform_edges(a, b, max(2, 4 * refine)), order)
                     for a, b in region.sigma_box]
        pts, w = tensor_rule(rad, *ang_rules, *sig_rules)
        r = pts[:, 0]
        ang = pts[:, 1:m]
        x = np.empty((pts.shape[0], m + k))
        x[:, :m] = zc[None, :] + r[:, None] * sparam(ang)
        x[:, m:] = pts[:, m:]
        w = w * r ** (m - 1) * sjac(ang)
        return x, w
    if isinstance(region, EuclideanBall):
        d = len(region.center)
        c = np.asarray(region.center)
        rad = panel_rule(uniform_edges(0.0, region.radius, max(2, 4 * refine)), order)
        sdom, sparam, _, sjac, _ = _sphere_chart(d, 1.0, np.zeros(d),
                                                 [0.0, 2 * np.pi if d == 2 else np.pi])
        ang_rules = [panel_rule(uniform_edges(a, b, max(2, 4 * refine)), order) for a, b in sdom]
        pts, w = tensor_rule(rad, *ang_rules)
        r = pts[:, 0]
        ang = pts[:, 1:]
        x = c[None, :] + r[:, None] * sparam(ang)
        w = w * r ** (d - 1) * sjac(ang)
        return x, w
    raise Unbounded("volume rule needs a bounded region")


@dataclass
class VectorField:
    """Horizontal test field with an analytic Euclidean Jacobian.

    values(x) -> (N, m); jacobian(x) -> (N, m, m + k) with entries
    d zeta_j / d x_i in the last index.
    """

    values: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


def _bounding_box(region):
    if isinstance(region, VerticalCylinder):
        lo = [c - region.radius for c in region.center] + [a for a, _ in region.sigma_box]
        hi = [c + region.radius for c in region.center] + [b for _, b in region.sigma_box]
    elif isinstance(region, CoordinateBox):
        lo = [a for a, _ in region.bounds]
        hi = [b for _, b in region.bounds]
    elif isinstance(region, EuclideanBall):
        lo = [c - region.radius for c in region.center]
        hi = [c + region.radius for c in region.center]
    else:
        raise Unbounded("region has no bounding box")
    return np.asarray(lo), np.asarray(hi)


def variational_lower_bound(spec: GroupSpec, region, field: VectorField,
                            refine: int = 2, margin: float = 0.5) -> float:
    """Integrated horizontal divergence of an admissible test field over E.

    By the sup definition of the variational perimeter this is a lower
    bound for horizontal_perimeter up to quadrature error.  Raises
    FieldNotAdmissible if sum_j zeta_j^2 exceeds 1 on a sample grid.
    """
    lo, hi = _bounding_box(region)
    lo, hi = lo - margin, hi + margin
    axes = [np.linspace(a, b, 9) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    sample = np.stack([g.ravel() for g in mesh], axis=-1)
    norms = np.sum(field.values(sample) ** 2, axis=1)
    worst = float(np.max(norms))
    if worst > 1.0 + 1e-9:
        raise FieldNotAdmissible(f"max |zeta|^2 = {worst:.6f} > 1 on the sample grid")

    x, w = volume_rule(region, refine=refine)
    jac = field.jacobian(x)
    m, k = spec.m, spec.k
    z = x[:, :m]
    div = np.einsum("njj->n", jac[:, :, :m])
    for ell in range(k):
        div += 0.5 * np.einsum("nj,nj->n", z @ spec.J[ell].T, jac[:, :, m + ell])
    return float(np.sum(w * div))


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _smoothstep_d(x):
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


def cylinder_boundary_field(region: VerticalCylinder, shell: float = 0.3,
                            margin: float = 0.3) -> VectorField:
    """Near-optimal admissible field for a vertical cylinder.

    Radial in z (so the twist term vanishes), rising smoothly to the
    outward horizontal normal across a shell inside the lateral face and
    tapering off outside; the vertical profile is 1 across the whole
    sigma box and decays only beyond it, so the field captures the full
    lateral contribution 2 pi R h.
    """
    if not 0 < shell < region.radius:
        raise ValueError("shell must lie inside the cylinder radius")
    zc = np.asarray(region.center)
    R = region.radius
    box = np.asarray(region.sigma_box)
    m = region.m

    def radial_profile(rho):
        up = _smoothstep((rho - (R - shell)) / shell)
        down = _smoothstep((R + shell - rho) / shell)
        return up * down

    def radial_profile_d(rho):
        up = _smoothstep((rho - (R - shell)) / shell)
        down = _smoothstep((R + shell - rho) / shell)
        dup = _smoothstep_d((rho - (R - shell)) / shell) / shell
        ddown = -_smoothstep_d((R + shell - rho) / shell) / shell
        return dup * down + up * ddown

    def sigma_profile(sig):
        eta = np.ones(sig.shape[0])
        parts = []
        for ell, (a, b) in enumerate(box):
            left = _smoothstep((sig[:, ell] - (a - margin)) / margin)
            right = _smoothstep(((b + margin) - sig[:, ell]) / margin)
            parts.append((left, right))
            eta = eta * left * right
        return eta, parts

    def values(x):
        x = np.atleast_2d(x)
        z = x[:, :m] - zc[None, :]
        rho = np.linalg.norm(z, axis=1)
        phi = radial_profile(rho)
        eta, _ = sigma_profile(x[:, m:])
        safe = np.where(rho > 1e-12, rho, 1.0)
        return (phi * eta / safe)[:, None] * z

    def jacobian(x):
        x = np.atleast_2d(x)
        n = x.shape[0]
        d = x.shape[1]
        z = x[:, :m] - zc[None, :]
        rho = np.linalg.norm(z, axis=1)
        safe = np.where(rho > 1e-12, rho, 1.0)
        u = z / safe[:, None]
        phi = radial_profile(rho)
        dphi = radial_profile_d(rho)
        eta, parts = sigma_profile(x[:, m:])
        out = np.zeros((n, m, d))
        # d zeta_j / d z_i = eta [ phi' u_i u_j + phi (delta_ij - u_i u_j)/rho ]
        uij = u[:, None, :] * u[:, :, None]
        eye = np.eye(m)[None, :, :]
        out[:, :, :m] = eta[:, None, None] * (
            dphi[:, None, None] * uij + (phi / safe)[:, None, None] * (eye - uij))
        for ell, (a, b) in enumerate(box):
            left, right = parts[ell]
            dleft = _smoothstep_d((x[:, m + ell] - (a - margin)) / margin) / margin
            dright = -_smoothstep_d(((b + margin) - x[:, m + ell]) / margin) / margin
            deta = (dleft * right + left * dright)
            for lp, (l2, r2) in enumerate(parts):
                if lp != ell:
                    deta = deta * l2 * r2
            out[:, :, m + ell] = (phi * deta)[:, None] * u
        zero = rho <= (R - shell)
        out[zero] = 0.0
        return out

    return VectorField(values=values, jacobian=jacobian)


# ---------------------------------------------------------------------------
# serialization

def region_to_json(region) -> str:
    if isinstance(region, VerticalCylinder):
        doc = {"type": "vertical_cylinder", "center": list(region.center),
               "radius": region.radius, "sigma_box": [list(p) for p in region.sigma_box]}
    elif isinstance(region, CoordinateBox):
        doc = {"type": "coordinate_box", "bounds": [list(p) for p in region.bounds],
               "m": region.m}
    elif isinstance(region, EuclideanBall):
        doc = {"type": "euclidean_ball", "center": list(region.center),
               "radius": region.radius, "m": region.m}
    elif isinstance(region, HorizontalHalfSpace):
        doc = {"type": "horizontal_half_space", "normal": list(region.normal),
               "offset": region.offset}
    else:
        raise TypeError(f"not a region: {region!r}")
    return json.dumps(doc, sort_keys=True)


def region_from_json(text: str):
    doc = json.loads(text)
    kind = doc.get("type")
    if kind == "vertical_cylinder":
        return VerticalCylinder(tuple(doc["center"]), doc["radius"],
                                tuple(tuple(p) for p in doc["sigma_box"]))
    if kind == "coordinate_box":
        return CoordinateBox(tuple(tuple(p) for p in doc["bounds"]), doc["m"])
    if kind == "euclidean_ball":
        return EuclideanBall(tuple(doc["center"]), doc["radius"], doc["m"])
    if kind == "horizontal_half_space":
        return HorizontalHalfSpace(tuple(doc["normal"]), doc["offset"])
    raise ValueError(f"unknown region type {kind!r}")


def resolve_region(spec: GroupSpec, name: str):
    """Builtin region strings or a JSON file path.

    Builtins: 'cylinder:R,h' (centered, sigma in (0, h) per vertical
    coordinate), 'box:a,b;a,b;...', 'ball:rho'.
    """
    if name.startswith("cylinder:"):
        R, h = (float(v) for v in name.split(":", 1)[1].split(","))
        return VerticalCylinder(tuple([0.0] * spec.m), R, tuple([(0.0, h)] * spec.k))
    if name.startswith("box:"):
        pairs = [tuple(float(v) for v in p.split(",")) for p in name.split(":", 1)[1].split(";")]
        return CoordinateBox(tuple(pairs), spec.m)
    if name.startswith("ball:"):
        rho = float(name.split(":", 1)[1])
        return EuclideanBall(tuple([0.0] * (spec.m + spec.k)), rho, spec.m)
    try:
        with open(name, "r", encoding="utf-8") as fh:
            return region_from_json(fh.read())
    except FileNotFoundError:
        raise ValueError(f"unknown region '{name}'") from None
