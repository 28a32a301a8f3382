"""Step-two Carnot groups in logarithmic coordinates.

A group is determined by the horizontal dimension m, the vertical
dimension k and the skew-symmetric matrices J_1..J_k defining the
bracket through <J(sigma) z, z'> = <[z, z'], sigma>.  Points live in
R^m x R^k with the polynomial product

    (z, s) o (z', s') = (z + z', s + s' + 1/2 <J_l z, z'>_l),

non-isotropic dilations act by (z, s) -> (r z, r^2 s), and Haar measure
is Lebesgue measure, scaling with exponent Q = m + 2k.

The spectral helpers expose the matrix functions of sqrt(A(lambda)),
A(lambda) = J(lambda)^T J(lambda), that the heat-kernel formula needs:
the log-determinant of the x/sinh(x) envelope and the x/tanh(x)
quadratic-form matrix, both evaluated through a symmetric
eigendecomposition for stability.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import JNotInjective, NotBracketGenerating, NotSkew, Unsupported
from .special import log_sinh_ratio, tanh_ratio

__all__ = [
    "GroupSpec",
    "GroupPoint",
    "SpectralData",
    "make_heisenberg",
    "make_h1_times_r",
    "make_quaternionic",
    "make_custom",
    "resolve_group",
    "group_to_json",
    "group_from_json",
    "identity",
    "point",
    "multiply",
    "inverse",
    "dilate",
    "spectral",
    "kernel_weights",
]

_SKEW_TOL = 1e-12
_MAX_M = 16
_MAX_K = 4


@dataclass
class GroupSpec:
    """A validated step-two group: dimensions and Kaplan matrices.

    Instances are immutable after construction (arrays are marked
    read-only) and safe to share across workers.
    """

    m: int
    k: int
    J: np.ndarray          # shape (k, m, m), each slice skew-symmetric
    name: str = ""
    _key: str = field(default="", repr=False)

    def __post_init__(self):
        self.J = np.ascontiguousarray(np.asarray(self.J, dtype=float))
        if self.J.shape != (self.k, self.m, self.m):
            raise ValueError(f"J has shape {self.J.shape}, expected {(self.k, self.m, self.m)}")
        self.J.flags.writeable = False
        digest = hashlib.sha256(self.J.tobytes()).hexdigest()[:16]
        object.__setattr__(self, "_key", f"{self.m}:{self.k}:{digest}")

    @property
    def Q(self) -> int:
        """Homogeneous dimension m + 2k (Haar measure scaling exponent)."""
        return self.m + 2 * self.k

    def kaplan(self, lam) -> np.ndarray:
        """J(lambda) = sum_l lambda_l J_l for one or many lambda vectors."""
        lam = np.asarray(lam, dtype=float)
        if lam.shape[-1] != self.k:
            raise ValueError("lambda has wrong vertical dimension")
        return np.einsum("...l,lij->...ij", lam, self.J)

    def vertical_form(self, z, zp) -> np.ndarray:
        """The k-vector (<J_l z, z'>)_l entering the group law."""
        z = np.asarray(z, dtype=float)
        zp = np.asarray(zp, dtype=float)
        return np.einsum("lij,...i,...j->...l", self.J, z, zp)

    def key(self) -> str:
        return self._key

    def __eq__(self, other):
        return isinstance(other, GroupSpec) and self._key == other._key

    def __hash__(self):
        return hash(self._key)


@dataclass
class GroupPoint:
    """A point in logarithmic coordinates (z, sigma)."""

    z: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float).reshape(-1)
        self.sigma = np.asarray(self.sigma, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.sigma))):
            raise ValueError("point coordinates must be finite")

    def coords(self) -> np.ndarray:
        return np.concatenate([self.z, self.sigma])


@dataclass
class SpectralData:
    """Eigendecomposition of A(lambda): mu_i = sqrt of eigenvalues, ascending."""

    mu: np.ndarray
    vectors: np.ndarray


def _validate(m: int, k: int, J: np.ndarray) -> None:
    if m < 1 or k < 1:
        raise ValueError("need m >= 1 and k >= 1")
    if m > _MAX_M or k > _MAX_K:
        raise Unsupported(f"desk-scale limits are m <= {_MAX_M}, k <= {_MAX_K}")
    for idx in range(k):
        asym = np.max(np.abs(J[idx] + J[idx].T))
        if asym > _SKEW_TOL:
            raise NotSkew(f"J_{idx + 1} is not skew-symmetric (|J+J^T|_max = {asym:.2e})")
    flat = J.reshape(k, m * m)
    if np.linalg.matrix_rank(flat, tol=1e-10) < k:
        raise JNotInjective("J matrices are linearly dependent")
    # bracket vectors b_ij = (<J_l e_i, e_j>)_l = (J_l)_{ji} must span R^k
    rows = []
    for i in range(m):
        for j in range(i + 1, m):
            rows.append(J[:, j, i])
    rank = np.linalg.matrix_rank(np.asarray(rows), tol=1e-10)
    if rank < k:
        raise NotBracketGenerating("brackets [V1, V1] do not span the vertical layer")


def make_custom(m: int, k: int, J_list, name: str = "") -> GroupSpec:
    """Build and validate a group from explicit Kaplan matrices.

    Raises NotSkew / JNotInjective / NotBracketGenerating identifying
    the violated invariant.
    """
    J = np.asarray(J_list, dtype=float)
    if J.shape != (k, m, m):
        raise ValueError(f"expected {k} matrices of shape {m}x{m}")
    _validate(m, k, J)
    return GroupSpec(m=m, k=k, J=J, name=name)


def make_heisenberg(n: int) -> GroupSpec:
    """The Heisenberg group H^n: m = 2n, k = 1.

    Convention: J_1 is block-diagonal with n blocks [[0, 1], [-1, 0]],
    so A(lambda) = lambda^2 I.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = 2 * n
    J1 = np.zeros((m, m))
    for b in range(n):
        J1[2 * b, 2 * b + 1] = 1.0
        J1[2 * b + 1, 2 * b] = -1.0
    return make_custom(m, 1, J1[None], name=f"heisenberg:{n}")


def make_h1_times_r() -> GroupSpec:
    """H^1 x R: m = 3, k = 1; A(lambda) has a zero eigenvalue."""
    J1 = np.zeros((3, 3))
    J1[0, 1] = 1.0
    J1[1, 0] = -1.0
    return make_custom(3, 1, J1[None], name="h1xr")


def make_quaternionic() -> GroupSpec:
    """Heisenberg-type group with m = 4, k = 2 (quaternionic model).

    J_1, J_2 are left multiplication by i, j on R^4 = H: they are skew,
    square to -I and anticommute, so A(lambda) = |lambda|^2 I.
    """
    Ji = np.array([
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    Jj = np.array([
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ])
    return make_custom(4, 2, np.stack([Ji, Jj]), name="quaternionic")


def group_to_json(spec: GroupSpec) -> str:
    doc = {"m": spec.m, "k": spec.k, "J": [Ji.tolist() for Ji in spec.J]}
    return json.dumps(doc, sort_keys=True)


def group_from_json(text: str) -> GroupSpec:
    doc = json.loads(text)
    return make_custom(int(doc["m"]), int(doc["k"]), np.asarray(doc["J"], dtype=float))


def resolve_group(name: str) -> GroupSpec:
    """Resolve a builtin name ('heisenberg:n', 'h1xr', 'quaternionic') or a JSON file path."""
    if name.startswith("heisenberg:"):
        return make_heisenberg(int(name.split(":", 1)[1]))
    if name == "h1xr":
        return make_h1_times_r()
    if name == "quaternionic":
        return make_quaternionic()
    try:
        with open(name, "r", encoding="utf-8") as fh:
            return group_from_json(fh.read())
    except FileNotFoundError:
        raise ValueError(f"unknown group '{name}'") from None


def identity(spec: GroupSpec) -> GroupPoint:
    return GroupPoint(np.zeros(spec.m), np.zeros(spec.k))


def point(spec: GroupSpec, coords) -> GroupPoint:
    """Split a flat (m+k)-vector into a GroupPoint."""
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if coords.size != spec.m + spec.k:
        raise ValueError(f"expected {spec.m + spec.k} coordinates, got {coords.size}")
    return GroupPoint(coords[: spec.m], coords[spec.m:])


def _check_dims(spec: GroupSpec, *pts: GroupPoint) -> None:
    for g in pts:
        if g.z.size != spec.m or g.sigma.size != spec.k:
            raise ValueError("point dimensions do not match the group")


def multiply(spec: GroupSpec, g: GroupPoint, gp: GroupPoint) -> GroupPoint:
    _check_dims(spec, g, gp)
    twist = 0.5 * spec.vertical_form(g.z, gp.z)
    return GroupPoint(g.z + gp.z, g.sigma + gp.sigma + twist)


def inverse(g: GroupPoint) -> GroupPoint:
    return GroupPoint(-g.z, -g.sigma)


def dilate(spec: GroupSpec, r: float, g: GroupPoint) -> GroupPoint:
    if r <= 0:
        raise ValueError("dilation factor must be positive")
    _check_dims(spec, g)
    return GroupPoint(r * g.z, r * r * g.sigma)


def relative_coordinates(spec: GroupSpec, g: GroupPoint, gp: GroupPoint):
    """Coordinates (w, tau) of g^{-1} o g'; the kernel depends only on these."""
    _check_dims(spec, g, gp)
    w = gp.z - g.z
    tau = gp.sigma - g.sigma - 0.5 * spec.vertical_form(g.z, gp.z)
    return w, tau


def spectral(spec: GroupSpec, lam) -> SpectralData:
    """Eigendecomposition of A(lambda) = J(lambda)^T J(lambda).

    mu are the (nonnegative, ascending) eigenvalues of sqrt(A(lambda)).
    """
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != spec.k:
        raise ValueError("lambda has wrong dimension")
    Jl = spec.kaplan(lam)
    A = Jl.T @ Jl
    evals, vecs = np.linalg.eigh(A)
    mu = np.sqrt(np.clip(evals, 0.0, None))
    return SpectralData(mu=mu, vectors=vecs)


def kernel_weights(sd: SpectralData):
    """Heat-kernel envelope weights from a spectral decomposition.

    Returns (log_det_j, M) with log_det_j = sum_i log(mu_i / sinh mu_i)
    and M = V diag(mu_i / tanh mu_i) V^T, using the identity
    j(x) cosh(x) = x / tanh(x) so nothing overflows.  M - I is PSD.
    """
    log_det_j = float(np.sum(log_sinh_ratio(sd.mu)))
    diag = tanh_ratio(sd.mu)
    M = (sd.vectors * diag) @ sd.vectors.T
    return log_det_j, M


def is_htype(spec: GroupSpec, tol: float = 1e-10, n_samples: int = 6) -> bool:
    """Check A(lambda) = |lambda|^2 I on deterministic sample directions."""
    rng = np.random.default_rng(12345)
    for _ in range(n_samples):
        lam = rng.standard_normal(spec.k)
        lam /= np.linalg.norm(lam)
        Jl = spec.kaplan(lam)
        A = Jl.T @ Jl
        if np.max(np.abs(A - np.eye(spec.m))) > tol:
            return False
    return True
