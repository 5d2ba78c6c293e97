r"""Grids, Fourier conventions, and spectrum interpolation.

Every other module builds on the conventions fixed here:

* the spatial domain is the periodic box ``[0, Lx)`` sampled at ``Nx``
  equispaced nodes, with modes ``xi_j = 2*pi*j/Lx`` for
  ``j = -Nx/2 .. Nx/2-1`` (ascending order, mode 0 in the middle);
* the velocity domain is the box ``[-Lv/2, Lv/2)`` sampled at ``Nv``
  nodes, with dual modes ``k_m = 2*pi*m/Lv``, same ordering;
* velocity transforms are continuum-normalized: the forward transform
  approximates ``ghat(k) = int g(v) exp(-i k v) dv`` (trapezoid sum on
  the periodic grid) and the inverse carries the ``1/(2*pi)`` factor,
  so transformed arrays can be compared directly against closed-form
  Fourier integrals.

All functions are pure and operate on the last axis of their input, so
fields shaped ``(Nx, Nv)`` go through unchanged machinery.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "VelocityRep",
    "GridSpec",
    "x_modes",
    "v_fourier",
    "x_fourier",
    "sample_spectrum",
    "sampling_stencil",
]


class VelocityRep(enum.Enum):
    """Which representation the velocity axis of a field is in."""

    PHYSICAL = "physical"
    FOURIER = "fourier"


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the phase-space box.

    Parameters
    ----------
    d : spatial dimension carried by the types (the stepper implements d=1).
    Lx : period of the spatial box.
    Nx : number of spatial modes, even power of two, >= 8.
    Lv : full width of the velocity box, v in [-Lv/2, Lv/2).
    Nv : number of velocity nodes, even power of two, >= 8.
    """

    d: int = 1
    Lx: float = 2.0 * np.pi
    Nx: int = 64
    Lv: float = 400.0
    Nv: int = 4096

    def __post_init__(self):
        if self.d != 1:
            raise ValueError(f"only d=1 is implemented, got d={self.d}")
        for name, n in (("Nx", self.Nx), ("Nv", self.Nv)):
            if n < 8 or n % 2 != 0 or n & (n - 1) != 0:
                raise ValueError(f"{name} must be an even power of two >= 8, got {n}")
        if not (self.Lx > 0 and self.Lv > 0):
            raise ValueError("Lx and Lv must be positive")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dv(self) -> float:
        return self.Lv / self.Nv

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.Lv

    @property
    def x_nodes(self) -> np.ndarray:
        return self.dx * np.arange(self.Nx)

    @property
    def v_nodes(self) -> np.ndarray:
        return -0.5 * self.Lv + self.dv * np.arange(self.Nv)

    @property
    def k_nodes(self) -> np.ndarray:
        return self.dk * np.arange(-self.Nv // 2, self.Nv // 2)


def x_modes(grid: GridSpec) -> np.ndarray:
    """Spatial modes xi_j = 2*pi*j/Lx, j = -Nx/2 .. Nx/2-1, ascending."""
    return (2.0 * np.pi / grid.Lx) * np.arange(-grid.Nx // 2, grid.Nx // 2)


def v_fourier(values: np.ndarray, grid: GridSpec, direction: str = "forward") -> np.ndarray:
    """Continuum-normalized velocity transform along the last axis.

    ``forward`` maps physical samples on ``grid.v_nodes`` to coefficients
    ``ghat(k_m) ~ int g(v) exp(-i k_m v) dv`` on ``grid.k_nodes``;
    ``inverse`` undoes it exactly (machine-precision roundtrip).
    """
    values = np.asarray(values)
    if values.shape[-1] != grid.Nv:
        raise ValueError(f"last axis has length {values.shape[-1]}, expected Nv={grid.Nv}")
    if direction == "forward":
        # v_nodes start at -Lv/2, so rotate v=0 to the front before the DFT;
        # the mode axis comes out in ascending order after fftshift.
        return grid.dv * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(values, axes=-1)), axes=-1)
    if direction == "inverse":
        return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(values, axes=-1)), axes=-1) / grid.dv
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def x_fourier(values: np.ndarray, grid: GridSpec, direction: str = "forward") -> np.ndarray:
    """Spatial transform along the last axis, same continuum convention.

    Forward coefficients approximate ``int_0^Lx rho(x) exp(-i xi_j x) dx``,
    which is exact for band-limited data; the x grid starts at 0 so no node
    phase is needed.
    """
    values = np.asarray(values)
    if values.shape[-1] != grid.Nx:
        raise ValueError(f"last axis has length {values.shape[-1]}, expected Nx={grid.Nx}")
    if direction == "forward":
        return grid.dx * np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1)
    if direction == "inverse":
        return np.fft.ifft(np.fft.ifftshift(values, axes=-1), axis=-1) / grid.dx
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def sampling_stencil(grid: GridSpec, k_star: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cubic 4-point interpolation stencil on the k grid.

    Returns ``(indices, weights)`` with shapes ``k_star.shape + (4,)`` such
    that ``sum(coeffs[indices] * weights, axis=-1)`` interpolates a spectrum
    at ``k_star``.  Targets outside the grid get all-zero weights (spectra
    handled here decay below round-off before the grid ends).
    """
    k_star = np.asarray(k_star, dtype=float)
    k_first = grid.k_nodes[0]
    k_last = grid.k_nodes[-1]
    p = (k_star - k_first) / grid.dk
    base = np.clip(np.floor(p).astype(np.int64) - 1, 0, grid.Nv - 4)
    t = p - base
    # Lagrange weights for nodes at local offsets 0, 1, 2, 3.
    w = np.empty(k_star.shape + (4,))
    w[..., 0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0
    w[..., 1] = t * (t - 2.0) * (t - 3.0) / 2.0
    w[..., 2] = -t * (t - 1.0) * (t - 3.0) / 2.0
    w[..., 3] = t * (t - 1.0) * (t - 2.0) / 6.0
    outside = (k_star < k_first - 1e-12) | (k_star > k_last + 1e-12)
    w[outside] = 0.0
    idx = base[..., None] + np.arange(4)
    return idx, w


def sample_spectrum(coeffs: np.ndarray, grid: GridSpec, k_star) -> np.ndarray:
    """Evaluate a k-grid spectrum at arbitrary real targets.

    Cubic interpolation for targets inside the grid, exact at the nodes and
    on polynomials up to degree three; returns 0 beyond the last node on
    either side (decay closure).
    """
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (grid.Nv,):
        raise ValueError(f"coeffs must have shape ({grid.Nv},), got {coeffs.shape}")
    scalar = np.isscalar(k_star) or np.ndim(k_star) == 0
    idx, w = sampling_stencil(grid, np.atleast_1d(np.asarray(k_star, dtype=float)))
    out = np.sum(coeffs[idx] * w, axis=-1)
    return out[0] if scalar else out
