r"""Asymptotic-preserving splitting scheme for the scaled kinetic equation.

State is kept as a macro profile ``h_hat(xi)`` plus a micro remainder
``g_hat(xi, k)``; the full phase-space spectrum is recovered as
``h_hat(xi) Mhat(k - eps xi) + g_hat(xi, k)`` (the macro part rides along
the shifted characteristics, which is what makes the decomposition exact
for transport).  One time step advances, in order:

  1. the macro density by one implicit step of the fractional heat flow,
  2. the micro part by a stiff half-step: ``(alpha + gamma - L) g* =
     alpha g^n - I(new macro, M)`` solved by the cached resolvent per
     x-mode, with ``alpha = eps^{2s}/dt``,
  3. the micro part by the transport correction ``(alpha - gamma +
     i eps xi v) g^{n+1} = alpha g*``, diagonal in (x-mode, physical v).

The stabilization constant gamma depends on where (eps, dt) sits relative
to the kinetic/diffusive crossover ``eps^{2s} = dt^{2 s beta}``; the
selector enforces the admissible windows and guarantees gamma != alpha so
the transport division is always safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import coupling_hat
from .equilibrium import EquilibriumTable, equilibrium_hat
from .exact import InitialData
from .fracops import ResolventQuadrature, frac_heat_multiplier, lfp_resolvent
from .grids import GridSpec, v_fourier, x_modes

__all__ = [
    "SchemeError",
    "SimParams",
    "GammaPolicy",
    "SchemeState",
    "decompose_initial",
    "select_gamma",
    "step_eta",
    "step_g_half",
    "step_g_transport",
    "step",
    "recompose_f",
    "splitting_defect",
]


class SchemeError(RuntimeError):
    """Raised for infeasible parameter combinations or broken invariants."""


@dataclass(frozen=True)
class SimParams:
    """Scaling, step size, and norm parameters for one run."""

    s: float
    eps: float
    dt: float
    T: float
    grid: GridSpec
    beta: float = 0.1
    b: float | None = None
    d: int = 1
    t0: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise ValueError(f"s must lie strictly in (0, 1), got {self.s}")
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.d != 1:
            raise ValueError("only d = 1 is implemented")
        if not (0.0 < self.beta < 1.0 / (6.0 * self.s)):
            raise ValueError(f"beta={self.beta} outside (0, 1/(6 s)) = (0, {1/(6*self.s):.4g})")
        if self.b is None:
            object.__setattr__(self, "b", 1.0 + 2.0 * self.s)
        b_cap = min(self.d + 2.0 * self.s, self.d / 2.0 + 3.0 * self.s)
        if not (1.0 < self.b <= b_cap):
            raise ValueError(f"weight exponent b={self.b} outside (1, {b_cap}]")
        if not (0.0 < self.t0 <= self.T):
            raise ValueError(f"need 0 < t0 <= T, got t0={self.t0}, T={self.T}")

    @property
    def alpha(self) -> float:
        return self.eps ** (2.0 * self.s) / self.dt


@dataclass(frozen=True)
class GammaPolicy:
    """Regime classification and the stabilization constant for it."""

    regime: str  # RegimeI | RegimeII_small | RegimeII_mid
    gamma: float
    alpha: float
    lam2: float = 5.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.gamma == self.alpha:
            raise ValueError("gamma must differ from alpha (transport step divides by the gap)")
        if self.regime == "RegimeI":
            ub = min(np.sqrt((self.lam2 - 4.0) / self.lam2) * self.alpha, 4.0)
            if not (2.0 < self.gamma <= ub + 1e-12):
                raise ValueError(f"Regime I gamma={self.gamma} outside (2, {ub}]")
        elif self.regime == "RegimeII_small":
            if abs(self.gamma - np.sqrt(3.0)) > 1e-12:
                raise ValueError("small-scale Regime II pins gamma = sqrt(3)")
        elif self.regime != "RegimeII_mid":
            raise ValueError(f"unknown regime {self.regime!r}")


def select_gamma(params: SimParams) -> GammaPolicy:
    """Classify (eps, dt) and pick the stabilization constant.

    Kinetic side (``eps^{2s} >= dt^{2 s beta}``): the admissible window is
    ``(2, min{sqrt((lam2-4)/lam2) alpha, 4}]``; the concrete pick is 2.5
    (splitting constants grow with gamma, so stay near the lower end)
    capped by the window.  An empty window means alpha is too small to be
    in this regime at all, which is reported rather than patched over.
    """
    two_s = 2.0 * params.s
    eps_pow = params.eps**two_s
    crossover = params.dt ** (two_s * params.beta)
    alpha = params.alpha
    if eps_pow >= crossover:
        ub = float(min(np.sqrt(0.2) * alpha, 4.0))  # lam2 = 5
        if ub <= 2.0:
            raise SchemeError(
                f"kinetic-regime stabilization window (2, {ub:.4g}] is empty: "
                f"alpha={alpha:.4g} too small for eps={params.eps}, dt={params.dt}"
            )
        return GammaPolicy(regime="RegimeI", gamma=min(2.5, ub), alpha=alpha)
    if eps_pow < params.dt:
        return GammaPolicy(regime="RegimeII_small", gamma=float(np.sqrt(3.0)), alpha=alpha)
    gamma = float(np.sqrt(3.0) * params.dt ** (two_s * params.beta - 1.0))
    return GammaPolicy(regime="RegimeII_mid", gamma=gamma, alpha=alpha)


@dataclass(frozen=True)
class SchemeState:
    """Macro/micro spectra after n steps; immutable, each step returns a new one."""

    h_hat: np.ndarray  # (Nx,) complex
    g_hat: np.ndarray  # (Nx, Nv) complex
    n: int
    t: float

    def __post_init__(self):
        if self.h_hat.ndim != 1 or self.g_hat.ndim != 2 or self.g_hat.shape[0] != self.h_hat.shape[0]:
            raise ValueError("state shapes inconsistent: h (Nx,), g (Nx, Nv)")
        if not (np.all(np.isfinite(self.h_hat)) and np.all(np.isfinite(self.g_hat))):
            raise SchemeError(f"non-finite coefficients in state at step {self.n}")
        g_norm = np.linalg.norm(self.g_hat)
        zero = np.abs(self.g_hat[self.h_hat.shape[0] // 2, self.g_hat.shape[1] // 2])
        if g_norm > 0 and zero > 1e-10 * g_norm:
            raise SchemeError(
                f"micro mass leaked: |g(0,0)| = {zero:.3e} vs norm {g_norm:.3e} at step {self.n}"
            )

    @property
    def mass(self) -> complex:
        """Total mass of the recomposed state (the zero-zero coefficient)."""
        return self.h_hat[self.h_hat.shape[0] // 2]


def decompose_initial(init: InitialData, params: SimParams) -> SchemeState:
    """Split separable initial data into macro profile and micro remainder.

    ``h^0 = rho_in`` and ``g^0(xi, k) = rho_in(xi) (chi_hat(k) -
    Mhat(k - eps xi))``; with the equilibrium profile and eps -> 0 the
    micro part vanishes identically.
    """
    if init.grid != params.grid:
        raise ValueError("initial data and run parameters use different grids")
    if init.eps != params.eps or init.s != params.s:
        raise ValueError("initial data and run parameters disagree on eps or s")
    grid = params.grid
    k = grid.k_nodes
    shift = k[None, :] - params.eps * x_modes(grid)[:, None]
    chi = np.asarray(init.chi_hat(k), dtype=complex)
    g = init.rho_hat[:, None] * (chi[None, :] - equilibrium_hat(shift, params.s))
    return SchemeState(h_hat=init.rho_hat.copy(), g_hat=g, n=0, t=0.0)


def step_eta(state: SchemeState, params: SimParams) -> np.ndarray:
    """Advance the macro profile by one implicit fractional-heat step."""
    xi = x_modes(params.grid)
    return frac_heat_multiplier(state.h_hat, xi, params.dt, params.s)


def step_g_half(
    state: SchemeState,
    h_next: np.ndarray,
    policy: GammaPolicy,
    params: SimParams,
    equilibrium: EquilibriumTable | None = None,
    quad: ResolventQuadrature | None = None,
) -> np.ndarray:
    """Stiff half-step: resolve ``(alpha + gamma - L)`` against the source.

    The source is ``alpha g^n`` minus the coupling spectrum built from the
    just-advanced macro profile; the resolvent acts mode-by-mode in k and
    is cached across steps since lambda = alpha + gamma never changes
    within a run.
    """
    lam = policy.alpha + policy.gamma
    source = policy.alpha * state.g_hat - coupling_hat(
        h_next, params.eps, params.grid, params.s, equilibrium
    ).values
    return lfp_resolvent(source, lam, params.grid, params.s, quad)


def step_g_transport(
    g_half: np.ndarray,
    policy: GammaPolicy,
    params: SimParams,
) -> np.ndarray:
    """Transport correction, diagonal in (x-mode, physical velocity)."""
    if policy.gamma == policy.alpha:
        raise SchemeError("gamma equals alpha; transport multiplier undefined")
    grid = params.grid
    phys = v_fourier(g_half, grid, "inverse")
    denom = (policy.alpha - policy.gamma) + 1j * params.eps * np.outer(
        x_modes(grid), grid.v_nodes
    )
    return v_fourier(policy.alpha * phys / denom, grid, "forward")


def step(
    state: SchemeState,
    params: SimParams,
    policy: GammaPolicy,
    equilibrium: EquilibriumTable | None = None,
    quad: ResolventQuadrature | None = None,
) -> SchemeState:
    """One full step: macro flow, stiff half-step, transport correction."""
    h_next = step_eta(state, params)
    g_half = step_g_half(state, h_next, policy, params, equilibrium, quad)
    g_next = step_g_transport(g_half, policy, params)
    new = SchemeState(h_hat=h_next, g_hat=g_next, n=state.n + 1, t=state.t + params.dt)
    drift = abs(new.mass - state.mass)
    if drift > 1e-10 * max(abs(state.mass), 1e-300):
        raise SchemeError(f"mass drifted by {drift:.3e} in step {new.n}")
    return new


def recompose_f(
    state: SchemeState,
    params: SimParams,
    equilibrium: EquilibriumTable | None = None,
) -> np.ndarray:
    """Full phase-space spectrum ``h_hat(xi) Mhat(k - eps xi) + g_hat``."""
    if equilibrium is not None and equilibrium.s != params.s:
        raise ValueError("equilibrium table was built for a different s")
    grid = params.grid
    shift = grid.k_nodes[None, :] - params.eps * x_modes(grid)[:, None]
    return state.h_hat[:, None] * equilibrium_hat(shift, params.s) + state.g_hat


def splitting_defect(
    g_next: np.ndarray,
    g_half: np.ndarray,
    params: SimParams,
    m: float = 0.0,
) -> float:
    """Weighted L2 size of the transport correction ``g^{n+1} - g^{n+1/2}``.

    The velocity weight ``<v>^m`` must satisfy ``m < s + d/2`` or the
    heavy tails make the norm meaningless.
    """
    if not (m < params.s + params.d / 2.0):
        raise ValueError(f"moment weight m={m} must be below s + d/2 = {params.s + params.d/2}")
    grid = params.grid
    diff = v_fourier(g_next - g_half, grid, "inverse")
    w = (1.0 + grid.v_nodes**2) ** m
    total = grid.dv / grid.Lx * np.sum(w[None, :] * np.abs(diff) ** 2)
    return float(np.sqrt(total))
