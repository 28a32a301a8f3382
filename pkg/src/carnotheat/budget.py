"""Quadrature and sampling budgets.

A single frozen record carries every knob that influences numerical
cost: truncation radii, panel densities, Monte Carlo sample counts,
tolerances and the master seed.  Budgets are hashable so computed
objects (kernel tables, deficit curves) can be cached against them, and
every report echoes the budget it was produced with.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

__all__ = ["QuadratureBudget", "stable_seed"]


@dataclass(frozen=True)
class QuadratureBudget:
    # lambda-integral controls
    lambda_radius: float | None = None      # None -> auto from envelope decay
    lambda_order: int = 8                   # GL order per lambda panel
    lambda_base_width: float = 0.25         # panel width at zero frequency
    oscillation_panels: float = 4.0         # panels per oscillation period
    max_lambda_nodes: int = 400_000
    # spatial truncation (units of sqrt(t) / t after scaling to t=1)
    spatial_cut: float = 8.0                # Gaussian radius in scaled z
    vertical_cut: float = 30.0              # scaled sigma truncation
    collar_constant: float = 6.0            # deficit collar half-width c*(sqrt(t)+t)
    # spatial quadrature
    spatial_order: int = 8
    refine: float = 1.0                     # >1 -> denser panel ladders everywhere
    # kernel table resolution (k=1 fast path)
    table_r_max: float = 15.0
    table_r_step: float = 0.02
    table_u_step: float = 0.05
    # Monte Carlo
    mc_samples: int = 200_000
    mc_strata: int = 64
    # tolerances and reproducibility
    target_tol: float = 1e-9
    seed: int = 91452

    def scaled(self, factor: float) -> "QuadratureBudget":
        """Return a budget with node/sample counts scaled by `factor`."""
        if factor <= 0:
            raise ValueError("budget scale must be positive")
        return replace(
            self,
            refine=self.refine * factor,
            mc_samples=max(1, int(self.mc_samples * factor)),
            table_r_step=self.table_r_step / factor,
            table_u_step=self.table_u_step / factor,
        )

    def key(self) -> tuple:
        return tuple(sorted(self.__dict__.items()))


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary hashable parts.

    Uses sha256 of the repr so the value is stable across processes
    (unlike built-in str hashing).
    """
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big") >> 1
