r"""Source term coupling the macro profile to the velocity equilibrium.

The stiff stage of the splitting needs the bilinear interaction

    I(eta, M)(x, v) = C_{s,d} P.V. int (eta(x,v) - eta(x,w)) (M(w) - M(v))
                                       / |v - w|^{1+2s} dw

evaluated for the shifted profile ``eta(x, v) = h(x + eps v)``.  In double
Fourier variables (x-mode xi, velocity frequency k) this collapses to a
closed form,

    Ihat(xi, k) = hhat(xi) * (|k|^{2s} - |eps xi|^{2s} - |k - eps xi|^{2s})
                           * Mhat(k - eps xi),

so the time stepper never discretizes the singular integral.  The
physical-space quadrature here exists only to validate that expression and
the ``eps^s`` smallness the splitting analysis rests on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .equilibrium import EquilibriumTable, build_equilibrium, equilibrium_hat
from .fracops import normalization_constant
from .grids import GridSpec, v_fourier, x_fourier, x_modes

__all__ = [
    "CouplingSpectrum",
    "coupling_hat",
    "coupling_quadrature",
    "coupling_scaling_probe",
]


@dataclass(frozen=True)
class CouplingSpectrum:
    """Closed-form coupling coefficients on the (x-mode, k) lattice."""

    values: np.ndarray  # complex, shape (Nx, Nv)
    eps: float
    s: float

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("coupling values must be a 2-d (x-mode, k) array")


def _check_bracket_bound(values, h_hat, a, k, s):
    """Sub-additivity bound: |bracket| <= 2 |a|^s |k-a|^s, weighted by Mhat."""
    cap = (
        2.0
        * np.abs(h_hat)[:, None]
        * np.abs(a)[:, None] ** s
        * np.abs(k[None, :] - a[:, None]) ** s
        * equilibrium_hat(k[None, :] - a[:, None], s)
    )
    bad = np.abs(values) > cap + 1e-12
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise AssertionError(
            f"coupling bound violated at mode ({i}, {j}): "
            f"|value|={np.abs(values[i, j]):.3e} > cap={cap[i, j]:.3e}"
        )


def coupling_hat(
    h_hat: np.ndarray,
    eps: float,
    grid: GridSpec,
    s: float,
    equilibrium: EquilibriumTable | None = None,
) -> CouplingSpectrum:
    """Closed-form coupling spectrum for the shifted profile h(x + eps v).

    ``h_hat`` holds x-Fourier coefficients in ascending mode order.  The
    result satisfies Ihat(0, k) = 0 and Ihat(xi, eps xi) = 0 identically,
    and the sub-additivity bound is asserted on every build.
    """
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    h_hat = np.asarray(h_hat, dtype=complex)
    if h_hat.shape != (grid.Nx,):
        raise ValueError(f"h_hat must have shape ({grid.Nx},), got {h_hat.shape}")
    if equilibrium is not None and equilibrium.s != s:
        raise ValueError("equilibrium table was built for a different s")
    xi = x_modes(grid)
    k = grid.k_nodes
    a = eps * xi  # velocity-frequency shift per x-mode
    two_s = 2.0 * s
    bracket = (
        np.abs(k[None, :]) ** two_s
        - np.abs(a[:, None]) ** two_s
        - np.abs(k[None, :] - a[:, None]) ** two_s
    )
    values = h_hat[:, None] * bracket * equilibrium_hat(k[None, :] - a[:, None], s)
    _check_bracket_bound(values, h_hat, a, k, s)
    return CouplingSpectrum(values=values, eps=eps, s=s)


def _shifted_profile(h_hat: np.ndarray, eps: float, grid: GridSpec) -> np.ndarray:
    """Samples eta(x_i, v_n) = h(x_i + eps v_n), shape (Nx, Nv).

    Trigonometric evaluation through the phase shift exp(i xi eps v), exact
    for band-limited h.
    """
    xi = x_modes(grid)
    phase = np.exp(1j * eps * np.outer(grid.v_nodes, xi))  # (Nv, Nx)
    eta = x_fourier(h_hat[None, :] * phase, grid, "inverse").real
    return eta.T  # (Nx, Nv)


def coupling_quadrature(
    h_samples: np.ndarray,
    eps: float,
    grid: GridSpec,
    s: float,
    equilibrium: EquilibriumTable,
) -> np.ndarray:
    """Physical-space trapezoid oracle for the coupling term, shape (Nx, Nv).

    The diagonal node is dropped; the central cell's contribution is
    restored analytically from the product of centered-difference slopes,
    which captures its O(dv^{2-2s}) size.  The integration variable runs
    over a doubled velocity box (the shifted profile is defined everywhere
    and the equilibrium is rebuilt there), which keeps the heavy equilibrium
    tail from polluting values near the edges of the requested box; beyond
    the doubled box the contribution is dropped.  A sanity oracle rather
    than a precision reference.
    """
    h_samples = np.asarray(h_samples, dtype=float)
    if h_samples.shape != (grid.Nx,):
        raise ValueError(f"h_samples must have shape ({grid.Nx},), got {h_samples.shape}")
    if equilibrium.s != s:
        raise ValueError("equilibrium table was built for a different s")
    h_hat = x_fourier(h_samples.astype(complex), grid, "forward")
    ext = GridSpec(Lx=grid.Lx, Nx=grid.Nx, Lv=2.0 * grid.Lv, Nv=2 * grid.Nv)
    eta = _shifted_profile(h_hat, eps, ext)  # (Nx, 2 Nv)
    M = build_equilibrium(ext, s).M_values
    Nv, dv = ext.Nv, ext.dv

    j = np.arange(-(Nv - 1), Nv)
    K = np.zeros(2 * Nv - 1)
    K[j != 0] = (np.abs(j[j != 0]) * dv) ** (-(1.0 + 2.0 * s))
    K1 = dv ** (-(1.0 + 2.0 * s))

    def conv(arr):  # (..., Nv) against the offset kernel
        full = fftconvolve(arr, K[None, :] if arr.ndim == 2 else K, axes=-1)
        return full[..., Nv - 1 : 2 * Nv - 1]

    ones = np.ones(Nv)
    conv_1 = conv(ones)
    conv_M = conv(M)
    conv_eta = conv(eta)
    conv_etaM = conv(eta * M[None, :])

    # trapezoid weights: dv everywhere, half at the one-cell offsets and at
    # the two domain-boundary nodes
    def half_corrections(samples):
        left = np.concatenate((np.zeros_like(samples[..., :1]), samples[..., :-1]), axis=-1)
        right = np.concatenate((samples[..., 1:], np.zeros_like(samples[..., :1])), axis=-1)
        return 0.5 * K1 * (left + right)

    v = ext.v_nodes
    edge_kernels = []
    for vedge in (v[0], v[-1]):
        dist = np.abs(v - vedge)
        ker = np.zeros(Nv)
        ker[dist > 0] = dist[dist > 0] ** (-(1.0 + 2.0 * s))
        edge_kernels.append(ker)

    def weighted_sum(samples, conv_samples):
        out = conv_samples - half_corrections(samples)
        out = out - 0.5 * edge_kernels[0] * samples[..., :1]
        out = out - 0.5 * edge_kernels[1] * samples[..., -1:]
        return dv * out

    S1 = weighted_sum(ones, conv_1)  # sum_w omega K
    SM = weighted_sum(M, conv_M)
    Seta = weighted_sum(eta, conv_eta)
    SetaM = weighted_sum(eta * M[None, :], conv_etaM)

    main = eta * SM[None, :] - eta * M[None, :] * S1[None, :] - SetaM + M[None, :] * Seta

    d_eta = np.gradient(eta, dv, axis=-1)
    d_M = np.gradient(M, dv)
    central = -2.0 * d_eta * d_M[None, :] * dv ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)

    out = normalization_constant(s, grid.d) * (main + central)
    lo = grid.Nv // 2  # requested box sits in the middle of the doubled one
    return out[:, lo : lo + grid.Nv]


def coupling_scaling_probe(
    h_samples: np.ndarray,
    grid: GridSpec,
    s: float,
    eps_list,
) -> float:
    """Fitted slope of log ||I||_{M^{-1}} against log eps.

    The coupling should vanish like eps^s; the probe fits the observed
    order from the closed form over the supplied eps values (at least 3,
    spanning a decade).
    """
    eps_arr = np.asarray(sorted(eps_list, reverse=True), dtype=float)
    if eps_arr.size < 3:
        raise ValueError("need at least 3 eps values to fit a slope")
    if eps_arr[0] / eps_arr[-1] < 8.0 * (1.0 - 1e-9):
        raise ValueError("eps values must span close to a decade (ratio >= 8)")
    h_samples = np.asarray(h_samples, dtype=float)
    if not np.any(h_samples):
        raise ValueError("zero profile: coupling norms vanish, slope undefined")
    h_hat = x_fourier(h_samples.astype(complex), grid, "forward")
    table = build_equilibrium(grid, s)
    M = table.M_values
    norms = []
    for eps in eps_arr:
        spec = coupling_hat(h_hat, float(eps), grid, s, table)
        phys = v_fourier(spec.values, grid, "inverse")
        nrm2 = (1.0 / grid.Lx) * grid.dv * np.sum(np.abs(phys) ** 2 / M[None, :])
        norms.append(np.sqrt(nrm2))
    slope = np.polyfit(np.log(eps_arr), np.log(norms), 1)[0]
    return float(slope)
