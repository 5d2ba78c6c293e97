r"""Error norms and order-of-convergence fits.

All norms act on spectra laid out as (x-mode, k) arrays, carry the
periodic x direction through Parseval (a 1/Lx factor on the squared
norm), and evaluate the velocity direction in physical space so the
equilibrium and polynomial weights are pointwise multipliers.  Three
flavors are exposed: the plain phase-space L2, the relative L2 with a
1/M weight, and the convergence norm that additionally damps the tails
with ``<v>^{-2b}`` so heavy-tailed errors stay integrable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .equilibrium import EquilibriumTable
from .grids import GridSpec, v_fourier

__all__ = [
    "NormSpec",
    "weighted_error",
    "observed_order",
    "zeta_reference",
]

_KINDS = ("L2_xv", "L2_Minv", "Weighted_Minv")


@dataclass(frozen=True)
class NormSpec:
    """Which error norm to use; ``b`` only matters for Weighted_Minv."""

    kind: str = "Weighted_Minv"
    b: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"norm kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == "Weighted_Minv" and self.b is None:
            raise ValueError("Weighted_Minv requires the tail exponent b")


def weighted_error(
    f_num: np.ndarray,
    f_ref: np.ndarray,
    spec: NormSpec,
    equilibrium: EquilibriumTable,
    grid: GridSpec,
) -> float:
    """Norm of ``f_num - f_ref`` for spectra on the (x-mode, k) lattice."""
    f_num = np.asarray(f_num)
    f_ref = np.asarray(f_ref)
    expect = (grid.Nx, grid.Nv)
    if f_num.shape != expect or f_ref.shape != expect:
        raise ValueError(f"spectra must have shape {expect}, got {f_num.shape} and {f_ref.shape}")
    if equilibrium.grid != grid:
        raise ValueError("equilibrium table was built on a different grid")
    if spec.kind == "Weighted_Minv":
        b_cap = equilibrium.d + 2.0 * equilibrium.s
        if not (1.0 < spec.b <= b_cap):
            raise ValueError(f"tail exponent b={spec.b} outside (1, {b_cap}] for s={equilibrium.s}")
    diff = v_fourier(f_num - f_ref, grid, "inverse")
    dens = np.abs(diff) ** 2
    if spec.kind != "L2_xv":
        dens = dens / equilibrium.M_values[None, :]
    if spec.kind == "Weighted_Minv":
        dens = dens * (1.0 + grid.v_nodes**2) ** (-spec.b)
    return float(np.sqrt(grid.dv / grid.Lx * np.sum(dens)))


def observed_order(pairs) -> tuple[float, float]:
    """Least-squares slope of log(err) against log(param).

    Returns the slope and the worst relative deviation of the data from
    the fitted line; a large residual means the sequence is not yet in
    its asymptotic range and the slope should not be trusted.
    """
    pts = [(float(p), float(e)) for p, e in pairs]
    kept = [(p, e) for p, e in pts if e > 0]
    if len(kept) < len(pts):
        warnings.warn("dropping nonpositive error values from order fit", stacklevel=2)
    if len(kept) < 3:
        raise ValueError(f"order fit needs at least 3 positive points, have {len(kept)}")
    lp = np.log([p for p, _ in kept])
    le = np.log([e for _, e in kept])
    slope, intercept = np.polyfit(lp, le, 1)
    fit = np.exp(slope * lp + intercept)
    residual = float(np.max(np.abs(fit / np.exp(le) - 1.0)))
    return float(slope), residual


def zeta_reference(s: float, beta: float, b: float | None = None) -> float:
    """Predicted uniform-in-eps convergence rate in dt.

    The rate comes from balancing the splitting and relaxation errors and
    switches form at s = 1/2; ``b`` is accepted so call sites can pass the
    full norm configuration, but the rate does not depend on it.  A
    nonpositive result means beta is too large for this s.
    """
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if s <= 0.5:
        zeta = 2.0 * s / (1.0 + 3.0 * s) - beta * (3.0 + 9.0 * s + 4.0 * s**2) / (1.0 + 3.0 * s)
    else:
        zeta = 4.0 * s / (3.0 + 4.0 * s) - 2.0 * beta * (13.0 * s - 2.0 + 16.0 * s**2) / (3.0 + 4.0 * s)
    if zeta <= 0:
        raise ValueError(f"rate exponent {zeta:.4g} is not positive for s={s}, beta={beta}")
    return float(zeta)
