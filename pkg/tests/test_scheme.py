"""Time stepper: regime selection, conservation, fixed points, defect law."""

import numpy as np
import pytest

from levyfp.equilibrium import equilibrium_hat
from levyfp.exact import InitialData, exact_lfp_hat, gaussian_macro_data
from levyfp.grids import GridSpec, v_fourier, x_modes
from levyfp.metrics import NormSpec, observed_order, weighted_error
from levyfp.scheme import (
    GammaPolicy,
    SchemeError,
    SchemeState,
    SimParams,
    decompose_initial,
    recompose_f,
    select_gamma,
    splitting_defect,
    step,
    step_g_transport,
)


def _params(grid, eps, dt, **kw):
    return SimParams(s=0.5, eps=eps, dt=dt, T=1.0, grid=grid, **kw)


def test_sim_params_validation(verification_grid):
    grid = verification_grid
    good = _params(grid, 0.8, 1e-2)
    assert good.b == 2.0  # defaulted to 1 + 2s
    assert good.alpha == 0.8 / 1e-2
    for kw in (
        {"eps": 0.0},
        {"dt": 0.0},
        {"beta": 0.0},
        {"beta": 0.4},       # above 1/(6s)
        {"b": 1.0},          # weight window is open at 1
        {"b": 2.5},          # above min(d+2s, d/2+3s)
        {"t0": 0.0},
        {"t0": 2.0},         # beyond T
    ):
        with pytest.raises(ValueError):
            _params(grid, kw.pop("eps", 0.8), kw.pop("dt", 1e-2), **kw)
    with pytest.raises(ValueError):
        SimParams(s=1.0, eps=0.8, dt=1e-2, T=1.0, grid=grid)


def test_gamma_selection_worked_values(verification_grid):
    grid = verification_grid
    kinetic = select_gamma(_params(grid, 0.8, 2e-3))
    assert kinetic.regime == "RegimeI"
    assert kinetic.gamma == 2.5
    assert kinetic.alpha == 0.8 / 2e-3

    small = select_gamma(_params(grid, 1e-3, 2e-3))
    assert small.regime == "RegimeII_small"
    assert small.gamma == np.sqrt(3.0)

    mid = select_gamma(_params(grid, 0.2, 1e-3))
    assert mid.regime == "RegimeII_mid"
    ref = np.sqrt(3.0) * (1e-3) ** (2 * 0.5 * 0.1 - 1.0)
    assert abs(mid.gamma - ref) < 1e-12 * ref
    assert abs(mid.gamma - 868.081752747) < 1e-6


def test_gamma_selection_boundary_is_kinetic(verification_grid):
    grid = verification_grid
    dt = 1e-3
    eps_star = float(dt**0.1)  # eps^{2s} == dt^{2 s beta} exactly at s=0.5
    assert select_gamma(_params(grid, eps_star, dt)).regime == "RegimeI"
    below = select_gamma(_params(grid, eps_star * (1.0 - 1e-9), dt))
    assert below.regime == "RegimeII_mid"


def test_gamma_selection_reports_empty_window(verification_grid):
    with pytest.raises(SchemeError, match="window"):
        select_gamma(_params(verification_grid, 0.95, 0.5))


def test_gamma_policy_validation():
    GammaPolicy(regime="RegimeI", gamma=2.5, alpha=400.0)  # valid
    with pytest.raises(ValueError):
        GammaPolicy(regime="RegimeI", gamma=0.0, alpha=400.0)
    with pytest.raises(ValueError):
        GammaPolicy(regime="RegimeII_mid", gamma=3.0, alpha=3.0)
    with pytest.raises(ValueError):
        GammaPolicy(regime="RegimeI", gamma=5.0, alpha=400.0)  # above the cap 4
    with pytest.raises(ValueError):
        GammaPolicy(regime="RegimeII_small", gamma=1.7, alpha=0.01)
    with pytest.raises(ValueError):
        GammaPolicy(regime="elsewhere", gamma=1.0, alpha=2.0)


def test_state_invariants():
    h = np.zeros(8, dtype=complex)
    h[4] = 1.0
    g = np.zeros((8, 16), dtype=complex)
    SchemeState(h_hat=h, g_hat=g, n=0, t=0.0)  # valid
    with pytest.raises(ValueError):
        SchemeState(h_hat=h, g_hat=np.zeros((4, 16), dtype=complex), n=0, t=0.0)
    bad = g.copy()
    bad[0, 0] = np.nan
    with pytest.raises(SchemeError, match="non-finite"):
        SchemeState(h_hat=h, g_hat=bad, n=0, t=0.0)
    leaked = g.copy()
    leaked[4, 8] = 1.0  # micro mass in the (0, 0) mode
    with pytest.raises(SchemeError, match="leaked"):
        SchemeState(h_hat=h, g_hat=leaked, n=1, t=0.1)


def test_decompose_closed_form(verification_grid):
    grid = verification_grid
    rho = np.ones(grid.Nx, dtype=complex)
    eps = 0.1
    init = InitialData(rho_hat=rho, eps=eps, s=0.5, grid=grid)
    state = decompose_initial(init, _params(grid, eps, 1e-2))
    # at (xi = 1, k = 0): g = Mhat(0) - Mhat(-eps) = 1 - e^{-eps}
    row = grid.Nx // 2 + 1
    col = grid.Nv // 2
    ref = 1.0 - np.exp(-eps)
    assert abs(state.g_hat[row, col] - ref) < 1e-15
    assert np.all(state.h_hat == rho)
    assert state.n == 0 and state.t == 0.0


def test_decompose_vanishes_with_eps(verification_grid):
    grid = verification_grid
    init = gaussian_macro_data(grid, 0.5, 1e-12)
    state = decompose_initial(init, _params(grid, 1e-12, 1e-2))
    assert float(np.max(np.abs(state.g_hat))) < 1e-11


def test_decompose_rejects_mismatched_setup(verification_grid):
    grid = verification_grid
    other = GridSpec(Lx=grid.Lx, Nx=grid.Nx, Lv=grid.Lv, Nv=2 * grid.Nv)
    init = gaussian_macro_data(grid, 0.5, 0.3)
    with pytest.raises(ValueError):
        decompose_initial(init, _params(other, 0.3, 1e-2))
    with pytest.raises(ValueError):
        decompose_initial(init, _params(grid, 0.4, 1e-2))
    with pytest.raises(ValueError):
        decompose_initial(init, SimParams(s=0.75, eps=0.3, dt=1e-2, T=1.0, grid=grid))


def test_recompose_inverts_decompose(verification_grid):
    grid = verification_grid
    init = gaussian_macro_data(grid, 0.5, 0.3)
    params = _params(grid, 0.3, 1e-2)
    state = decompose_initial(init, params)
    f0 = recompose_f(state, params)
    ref = init.rho_hat[:, None] * equilibrium_hat(grid.k_nodes, 0.5)[None, :]
    assert np.max(np.abs(f0 - ref)) < 1e-14


def test_macro_flow_is_the_exact_multiplier(verification_grid, verification_equilibrium):
    grid = verification_grid
    params = _params(grid, 0.8, 4e-3)
    policy = select_gamma(params)
    init = gaussian_macro_data(grid, 0.5, 0.8)
    state = decompose_initial(init, params)
    for _ in range(10):
        state = step(state, params, policy, verification_equilibrium)
    xi = x_modes(grid)
    ref = init.rho_hat / (1.0 + params.dt * np.abs(xi)) ** 10
    assert np.max(np.abs(state.h_hat - ref)) < 1e-13 * np.max(np.abs(ref))


def test_transport_multiplier_worked_value(verification_grid):
    grid = verification_grid
    eps, dt = 0.8, 1e-3
    params = _params(grid, eps, dt)
    policy = select_gamma(params)  # alpha = 800, gamma = 2.5
    assert policy.alpha == 800.0
    phys = np.zeros((grid.Nx, grid.Nv), dtype=complex)
    row = grid.Nx // 2 + 2  # xi = 2
    col = int(np.argmin(np.abs(grid.v_nodes - 5.0)))
    phys[row, col] = 1.0
    g_half = v_fourier(phys, grid, "forward")
    out_phys = v_fourier(step_g_transport(g_half, policy, params), grid, "inverse")
    xi_v = 2.0 * grid.v_nodes[col]
    ref = 800.0 / (797.5 + 1j * eps * xi_v)
    assert abs(out_phys[row, col] - ref) < 1e-12 * abs(ref)
    # every multiplier modulus is bounded by alpha / (alpha - gamma)
    assert abs(ref) <= 800.0 / 797.5 + 1e-12


def test_transport_refuses_gamma_equal_alpha(verification_grid):
    params = _params(verification_grid, 0.8, 1e-3)
    policy = GammaPolicy(regime="RegimeII_mid", gamma=3.0, alpha=3.0001)
    object.__setattr__(policy, "gamma", policy.alpha)  # force the degenerate pair
    with pytest.raises(SchemeError):
        step_g_transport(np.zeros((params.grid.Nx, params.grid.Nv), complex), policy, params)


def test_global_equilibrium_is_a_fixed_point(verification_grid, verification_equilibrium):
    grid = verification_grid
    rho = np.zeros(grid.Nx, dtype=complex)
    rho[grid.Nx // 2] = 1.0
    init = InitialData(rho_hat=rho, eps=0.3, s=0.5, grid=grid)
    params = _params(grid, 0.3, 1e-2)
    policy = select_gamma(params)
    state = decompose_initial(init, params)
    assert np.all(state.g_hat == 0.0)
    for _ in range(10):
        state = step(state, params, policy, verification_equilibrium)
    assert np.all(state.g_hat == 0.0)
    assert np.array_equal(state.h_hat, rho)
    f = recompose_f(state, params, verification_equilibrium)
    assert np.max(np.abs(f[grid.Nx // 2] - equilibrium_hat(grid.k_nodes, 0.5))) < 1e-15


def test_mass_is_conserved_exactly(verification_grid, verification_equilibrium):
    grid = verification_grid
    params = _params(grid, 0.8, 4e-3)
    policy = select_gamma(params)
    init = gaussian_macro_data(grid, 0.5, 0.8)
    state = decompose_initial(init, params)
    mass0 = state.mass
    for _ in range(100):
        state = step(state, params, policy, verification_equilibrium)
    assert abs(state.mass - mass0) <= 1e-12 * abs(mass0)
    assert state.n == 100
    assert abs(state.t - 0.4) < 1e-12


def test_kinetic_regime_error_decays_in_dt(verification_grid, verification_equilibrium):
    grid = verification_grid
    eps, T = 0.8, 0.1
    spec = NormSpec("Weighted_Minv", b=2.0)
    init = gaussian_macro_data(grid, 0.5, eps)
    xi = x_modes(grid)[:, None]
    kk = grid.k_nodes[None, :]
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        params = SimParams(s=0.5, eps=eps, dt=dt, T=T, grid=grid, b=2.0)
        policy = select_gamma(params)
        state = decompose_initial(init, params)
        n = int(round(T / dt))
        for _ in range(n):
            state = step(state, params, policy, verification_equilibrium)
        f_num = recompose_f(state, params, verification_equilibrium)
        oracle = exact_lfp_hat(n * dt, xi, kk, init)
        errs.append((dt, weighted_error(f_num, oracle, spec, verification_equilibrium, grid)))
    assert errs[0][1] > errs[1][1] > errs[2][1]
    slope, _ = observed_order(errs)
    assert slope > 0.4


def test_splitting_defect_halves_with_dt(verification_grid, verification_equilibrium):
    from levyfp.scheme import step_eta, step_g_half

    grid = verification_grid
    init = gaussian_macro_data(grid, 0.5, 0.8)
    defects = []
    for dt in (4e-3, 2e-3, 1e-3):
        params = _params(grid, 0.8, dt)
        policy = select_gamma(params)
        state = decompose_initial(init, params)
        h1 = step_eta(state, params)
        g_half = step_g_half(state, h1, policy, params, verification_equilibrium)
        g_next = step_g_transport(g_half, policy, params)
        defects.append(splitting_defect(g_next, g_half, params, m=0.0))
    r1 = defects[0] / defects[1]
    r2 = defects[1] / defects[2]
    assert 1.6 <= r1 <= 2.4 and 1.6 <= r2 <= 2.4
    assert abs(r1 - 1.994) < 0.05
    assert abs(r2 - 1.998) < 0.05


def test_splitting_defect_weight_window(verification_grid):
    params = _params(verification_grid, 0.8, 1e-2)
    g = np.zeros((verification_grid.Nx, verification_grid.Nv), dtype=complex)
    assert splitting_defect(g, g, params, m=0.0) == 0.0
    with pytest.raises(ValueError):
        splitting_defect(g, g, params, m=1.0)  # at s + d/2 the weight diverges
