r"""Experiment orchestration: single runs, (eps, dt) sweeps, property suites.

A sweep is a cross product of eps and dt values over one configuration.
Each cell is a pure pipeline (build equilibrium, build initial data,
classify the regime, step to the final time, measure errors against the
closed-form solution and against the diffusion limit), so cells can run
in a process pool; results are gathered in configuration order and the
output is identical whether the pool has one worker or many.  A failed
cell becomes a row with a failure tag instead of aborting the sweep.

The property runner executes the analytic test suites (inequality
sampling, equilibrium shape, resolvent identity, coupling scaling,
scheme bookkeeping) and reports one verdict per suite.  A deliberately
corrupted equilibrium table can be injected through the ``fault`` hook
to confirm the suites actually reject bad tables.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .coupling import coupling_hat, coupling_scaling_probe
from .equilibrium import (
    EquilibriumTable,
    build_equilibrium,
    derivative_ratio_check,
    equilibrium_hat,
)
from .exact import (
    InitialData,
    elementary_inequality_suite,
    exact_lfp_hat,
    exponent_gap_probe,
    gaussian_macro_data,
    limit_state_hat,
)
from .fracops import lfp_resolvent
from .grids import GridSpec, x_modes
from .metrics import NormSpec, observed_order, weighted_error
from .scheme import (
    SchemeError,
    SimParams,
    decompose_initial,
    recompose_f,
    select_gamma,
    splitting_defect,
    step,
    step_eta,
    step_g_half,
    step_g_transport,
)

__all__ = [
    "SweepConfig",
    "ErrorRecord",
    "SweepResult",
    "SuiteReport",
    "run_single",
    "run_sweep",
    "run_properties",
    "write_records_csv",
    "write_summary_json",
]

_CSV_COLUMNS = (
    "s",
    "eps",
    "dt",
    "regime",
    "gamma",
    "b",
    "err_oracle",
    "err_limit",
    "order_dt",
    "runtime_s",
    "status",
)

_ALL_SUITES = ("inequality", "equilibrium", "resolvent", "coupling", "exact", "scheme")


@dataclass(frozen=True)
class SweepConfig:
    """Everything one sweep needs; immutable and process-pool friendly."""

    s: float = 0.5
    beta: float = 0.1
    b: float | None = None
    eps_list: tuple = (0.8,)
    dt_list: tuple = (1e-2,)
    T: float = 1.0
    t0: float = 0.1
    Lx: float = 2.0 * np.pi
    Nx: int = 64
    Lv: float = 400.0
    Nv: int = 4096
    init: str = "gaussian"  # gaussian | uniform
    center: float | None = None  # default Lx/2
    width: float = 0.5
    chi: str = "equilibrium"  # equilibrium | heat
    suites: tuple = _ALL_SUITES
    seed: int = 12345
    n_samples: int = 100_000
    timeseries: bool = False

    def __post_init__(self):
        if len(self.eps_list) == 0 or len(self.dt_list) == 0:
            raise ValueError("eps_list and dt_list must be nonempty")
        if not (0.0 < self.t0 <= self.T):
            raise ValueError(f"need 0 < t0 <= T, got t0={self.t0}, T={self.T}")
        if self.init not in ("gaussian", "uniform"):
            raise ValueError(f"unknown initial profile {self.init!r}")
        if self.chi not in ("equilibrium", "heat"):
            raise ValueError(f"unknown velocity profile {self.chi!r}")
        unknown = set(self.suites) - set(_ALL_SUITES)
        if unknown:
            raise ValueError(f"unknown suites {sorted(unknown)}; available: {_ALL_SUITES}")
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        object.__setattr__(self, "dt_list", tuple(float(d) for d in self.dt_list))
        # every cell must classify cleanly before any work starts
        for eps in self.eps_list:
            for dt in self.dt_list:
                select_gamma(self.sim_params(eps, dt))

    def grid(self) -> GridSpec:
        return GridSpec(Lx=self.Lx, Nx=self.Nx, Lv=self.Lv, Nv=self.Nv)

    def sim_params(self, eps: float, dt: float) -> SimParams:
        return SimParams(
            s=self.s, eps=eps, dt=dt, T=self.T, grid=self.grid(),
            beta=self.beta, b=self.b, t0=self.t0,
        )

    def norm_spec(self) -> NormSpec:
        b = self.b if self.b is not None else 1.0 + 2.0 * self.s
        return NormSpec("Weighted_Minv", b=b)


@dataclass(frozen=True)
class ErrorRecord:
    """One sweep cell: where it ran, what it measured, how long it took."""

    s: float
    eps: float
    dt: float
    regime: str
    gamma: float
    b: float
    err_oracle: float
    err_limit: float
    runtime_s: float
    status: str = "ok"
    order_dt: float | None = None  # filled after the per-eps fit
    mass_drift: float = 0.0

    def __post_init__(self):
        if self.status == "ok":
            if not (self.err_oracle >= 0 and self.err_limit >= 0):
                raise ValueError("error norms must be nonnegative")
            if self.regime not in ("RegimeI", "RegimeII_small", "RegimeII_mid"):
                raise ValueError(f"unknown regime tag {self.regime!r}")


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    order_dt_by_eps: dict
    order_eps_by_dt: dict
    uniformity: float
    max_mass_drift: float


def build_initial(config: SweepConfig, grid: GridSpec, eps: float) -> InitialData:
    """Initial data from the config: macro profile and velocity profile."""
    chi_hat = None
    if config.chi == "heat":
        chi_hat = lambda k: np.exp(-np.asarray(k, dtype=float) ** 2 / 2.0)
    if config.init == "uniform":
        rho = np.zeros(grid.Nx, dtype=complex)
        rho[grid.Nx // 2] = 1.0
        return InitialData(rho_hat=rho, eps=eps, s=config.s, grid=grid, chi_hat=chi_hat)
    return gaussian_macro_data(
        grid, config.s, eps, center=config.center, width=config.width, chi_hat=chi_hat
    )


def run_single(
    config: SweepConfig,
    eps: float,
    dt: float,
    trace_path: str | None = None,
) -> ErrorRecord:
    """Execute one cell and measure both errors at the final time.

    The step count is the nearest integer to T/dt, and the oracle is
    evaluated at the time actually reached, so the comparison is exact
    even when dt does not divide T.  Any failure is captured in the
    record's status instead of propagating.
    """
    tic = time.perf_counter()
    try:
        params = config.sim_params(eps, dt)
        policy = select_gamma(params)
        n_steps = max(1, int(round(config.T / dt)))
        grid = params.grid
        equilibrium = build_equilibrium(grid, config.s)
        init = build_initial(config, grid, eps)
        state = decompose_initial(init, params)
        mass0 = state.mass
        rows = []
        if trace_path is not None:
            rows.append(_trace_row(state, config, equilibrium, params))
        for _ in range(n_steps):
            state = step(state, params, policy, equilibrium)
            if trace_path is not None:
                rows.append(_trace_row(state, config, equilibrium, params))
        t_final = n_steps * dt
        f_num = recompose_f(state, params, equilibrium)
        xi = x_modes(grid)[:, None]
        k = grid.k_nodes[None, :]
        spec = config.norm_spec()
        err_oracle = weighted_error(
            f_num, exact_lfp_hat(t_final, xi, k, init), spec, equilibrium, grid
        )
        err_limit = weighted_error(
            f_num, limit_state_hat(t_final, xi, k, init), spec, equilibrium, grid
        )
        drift = abs(state.mass - mass0) / max(abs(mass0), 1e-300)
        if trace_path is not None:
            _write_trace(trace_path, rows)
        return ErrorRecord(
            s=config.s, eps=eps, dt=dt, regime=policy.regime, gamma=policy.gamma,
            b=spec.b, err_oracle=err_oracle, err_limit=err_limit,
            runtime_s=time.perf_counter() - tic, mass_drift=drift,
        )
    except Exception as exc:  # failures are data, the sweep goes on
        return ErrorRecord(
            s=config.s, eps=eps, dt=dt, regime="", gamma=float("nan"),
            b=config.norm_spec().b, err_oracle=float("nan"), err_limit=float("nan"),
            runtime_s=time.perf_counter() - tic,
            status=f"{type(exc).__name__}: {exc}",
        )


def _trace_row(state, config, equilibrium, params):
    grid = params.grid
    g_norm = float(np.sqrt(grid.dk / (2.0 * np.pi * grid.Lx) * np.sum(np.abs(state.g_hat) ** 2)))
    f_hat = recompose_f(state, params, equilibrium)
    f_norm = float(np.sqrt(grid.dk / (2.0 * np.pi * grid.Lx) * np.sum(np.abs(f_hat) ** 2)))
    return (float(state.t), float(state.mass.real), g_norm, f_norm)


def _write_trace(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "mass", "g_norm", "f_norm"))
        for r in rows:
            w.writerow([repr(x) for x in r])


def _cell(args):
    config, eps, dt = args
    return run_single(config, eps, dt)


def run_sweep(config: SweepConfig, jobs: int = 1) -> SweepResult:
    """Run the full eps x dt cross product and fit convergence orders.

    Records come back in configuration order regardless of the worker
    count.  The per-eps order in dt is written back onto the records;
    the cross fits and the uniformity statistic (worst error at the
    finest dt across eps) go into the result.
    """
    cells = [(config, eps, dt) for eps in config.eps_list for dt in config.dt_list]
    if jobs <= 1 or len(cells) == 1:
        records = [_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_cell, cells, chunksize=1))

    n_dt = len(config.dt_list)
    order_dt_by_eps = {}
    for i, eps in enumerate(config.eps_list):
        row = records[i * n_dt : (i + 1) * n_dt]
        order = _safe_order([(r.dt, r.err_oracle) for r in row if r.status == "ok"])
        order_dt_by_eps[eps] = order
        if order is not None:
            for j, r in enumerate(row):
                records[i * n_dt + j] = replace(r, order_dt=order)

    order_eps_by_dt = {}
    for j, dt in enumerate(config.dt_list):
        col = [records[i * n_dt + j] for i in range(len(config.eps_list))]
        order_eps_by_dt[dt] = _safe_order([(r.eps, r.err_oracle) for r in col if r.status == "ok"])

    finest = min(config.dt_list)
    at_finest = [
        r.err_oracle for r in records if r.dt == finest and r.status == "ok"
    ]
    uniformity = float(max(at_finest)) if at_finest else float("nan")
    drifts = [r.mass_drift for r in records if r.status == "ok"]
    return SweepResult(
        records=tuple(records),
        order_dt_by_eps=order_dt_by_eps,
        order_eps_by_dt=order_eps_by_dt,
        uniformity=uniformity,
        max_mass_drift=float(max(drifts)) if drifts else float("nan"),
    )


def _safe_order(pairs):
    ok = [(p, e) for p, e in pairs if np.isfinite(e) and e > 0]
    if len(ok) < 3:
        return None
    slope, _ = observed_order(ok)
    return slope


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_CSV_COLUMNS)
        for r in records:
            w.writerow(
                [
                    repr(r.s), repr(r.eps), repr(r.dt), r.regime, repr(r.gamma),
                    repr(r.b), repr(r.err_oracle), repr(r.err_limit),
                    "" if r.order_dt is None else repr(r.order_dt),
                    repr(r.runtime_s), r.status,
                ]
            )


def write_summary_json(path, config: SweepConfig, result: SweepResult | None = None,
                       report: "SuiteReport | None" = None) -> None:
    doc = {"config": _config_doc(config)}
    if result is not None:
        doc["sweep"] = {
            "cells": len(result.records),
            "failed": sum(1 for r in result.records if r.status != "ok"),
            "order_dt_by_eps": {repr(k): v for k, v in result.order_dt_by_eps.items()},
            "order_eps_by_dt": {repr(k): v for k, v in result.order_eps_by_dt.items()},
            "uniformity_U": _json_num(result.uniformity),
            "max_mass_drift": _json_num(result.max_mass_drift),
        }
    if report is not None:
        doc["suites"] = {
            name: {"passed": passed, "detail": detail}
            for name, (passed, detail) in sorted(report.verdicts.items())
        }
        doc["all_passed"] = report.all_passed
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_doc(config: SweepConfig) -> dict:
    doc = {}
    for f in fields(config):
        val = getattr(config, f.name)
        if isinstance(val, tuple):
            val = list(val)
        doc[f.name] = val
    return doc


def _json_num(x: float):
    return None if not np.isfinite(x) else float(x)


@dataclass(frozen=True)
class SuiteReport:
    verdicts: dict  # name -> (passed, detail)

    @property
    def all_passed(self) -> bool:
        return all(p for p, _ in self.verdicts.values())


def run_properties(config: SweepConfig, fault: str | None = None) -> SuiteReport:
    """Run the analytic property suites and collect one verdict per suite.

    ``fault="negate_equilibrium"`` flips the sign of the tabulated
    equilibrium before the suites see it; the shape and normalization
    suites must then fail, which is how the harness proves the checks
    have teeth.  Suites run serially with seeds derived from the config.
    """
    if fault not in (None, "negate_equilibrium"):
        raise ValueError(f"unknown fault {fault!r}")
    grid = config.grid()
    s = config.s
    equilibrium = build_equilibrium(grid, s)
    if fault == "negate_equilibrium":
        equilibrium = replace(equilibrium, M_values=-equilibrium.M_values)

    verdicts = {}

    def record(name, passed, detail):
        verdicts[name] = (bool(passed), detail)

    if "inequality" in config.suites:
        bad = elementary_inequality_suite(config.n_samples, seed=config.seed)
        record("inequality", bad == 0, f"{bad} violations in {config.n_samples} samples")

    if "equilibrium" in config.suites:
        positive = bool(np.all(equilibrium.M_values > 0))
        mass = float(grid.dv * equilibrium.M_values.sum())
        mass_ok = abs(mass - 1.0) <= 2.0 * equilibrium.tail_mass_estimate + 1e-9
        slope = float(equilibrium.fitted_tail_slope()) if positive else float("nan")
        slope_ok = positive and abs(slope + (1.0 + 2.0 * s)) <= 0.2
        ratio = derivative_ratio_check(equilibrium, m=1)
        ratio_ok = abs(ratio - 1.0) <= 1e-3
        record(
            "equilibrium",
            positive and mass_ok and slope_ok and ratio_ok,
            f"positive={positive} mass={mass:.6f} tail_slope={slope:.3f} "
            f"moment_ratio={ratio:.6f}",
        )

    if "resolvent" in config.suites:
        # the identity does not need the production grid; keep the dense
        # per-lambda operators small so the cache stays cheap
        rgrid = GridSpec(Lx=config.Lx, Nx=8, Lv=min(config.Lv, 200.0),
                         Nv=min(config.Nv, 2048))
        worst = 0.0
        for s_chk in (0.25, 0.5, 0.75):
            eq_hat = equilibrium_hat(rgrid.k_nodes, s_chk).astype(complex)[None, :]
            for lam in (0.5, 1.0, 10.0):
                out = lfp_resolvent(eq_hat, lam, rgrid, s_chk)
                ref = eq_hat / lam
                worst = max(worst, float(np.max(np.abs(out - ref)) / np.max(np.abs(ref))))
        record("resolvent", worst <= 1e-8, f"kernel identity worst relative error {worst:.3e}")

    if "coupling" in config.suites:
        rng = np.random.default_rng(config.seed)
        h = rng.standard_normal(grid.Nx) + 1j * rng.standard_normal(grid.Nx)
        spect = coupling_hat(h, 0.3, grid, s)  # bound is asserted inside the build
        neutral = float(np.max(np.abs(spect.values[grid.Nx // 2, :])))
        slope = coupling_scaling_probe(
            _probe_profile(grid), grid, s, eps_list=(0.4, 0.2, 0.1, 0.05, 0.025)
        )
        record(
            "coupling",
            neutral <= 1e-12 and abs(slope - s) <= 0.15,
            f"zero-mode sup {neutral:.3e}, scaling slope {slope:.3f} (target {s})",
        )

    if "exact" in config.suites:
        gap_slope = exponent_gap_probe(
            xi=4.0, k=-1.0, s=s, t=1.0, eps_list=(0.2, 0.1, 0.05, 0.025)
        )
        record("exact", gap_slope >= 0.35, f"exponent gap slope {gap_slope:.3f}")

    if "scheme" in config.suites:
        detail, ok = _scheme_suite(config)
        record("scheme", ok, detail)

    return SuiteReport(verdicts=verdicts)


def _probe_profile(grid: GridSpec):
    """Physical macro samples with a couple of active modes."""
    return 1.0 + 0.5 * np.cos(2.0 * np.pi * grid.x_nodes / grid.Lx)


def _scheme_suite(config: SweepConfig):
    """Mass conservation plus the halving law of the splitting defect."""
    grid = GridSpec(Lx=config.Lx, Nx=min(config.Nx, 32), Lv=min(config.Lv, 100.0),
                    Nv=min(config.Nv, 512))
    s = config.s
    equilibrium = build_equilibrium(grid, s)
    eps = 0.8
    init = gaussian_macro_data(grid, s, eps, width=config.width)
    defects = []
    for dt in (4e-3, 2e-3):
        params = SimParams(s=s, eps=eps, dt=dt, T=1.0, grid=grid, beta=config.beta)
        policy = select_gamma(params)
        state = decompose_initial(init, params)
        h1 = step_eta(state, params)
        gh = step_g_half(state, h1, policy, params, equilibrium)
        gn = step_g_transport(gh, policy, params)
        defects.append(splitting_defect(gn, gh, params, m=0.0))
    ratio = defects[0] / defects[1]

    params = SimParams(s=s, eps=eps, dt=4e-3, T=1.0, grid=grid, beta=config.beta)
    policy = select_gamma(params)
    state = decompose_initial(init, params)
    mass0 = state.mass
    try:
        for _ in range(20):
            state = step(state, params, policy, equilibrium)
        drift = abs(state.mass - mass0) / abs(mass0)
        ok = drift <= 1e-10 and 1.6 <= ratio <= 2.4
        return f"mass drift {drift:.3e} over 20 steps, defect halving ratio {ratio:.3f}", ok
    except SchemeError as exc:
        return f"scheme aborted: {exc}", False
