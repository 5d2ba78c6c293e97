"""Sweep driver: cell execution, ordering, persistence, property suites."""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from levyfp.harness import (
    ErrorRecord,
    SweepConfig,
    build_initial,
    run_properties,
    run_single,
    run_sweep,
    write_records_csv,
    write_summary_json,
)
from levyfp.scheme import SchemeError

_SMALL = dict(Nx=16, Lv=100.0, Nv=512)


def test_config_validation():
    SweepConfig(**_SMALL)  # defaults classify
    with pytest.raises(ValueError):
        SweepConfig(eps_list=(), **_SMALL)
    with pytest.raises(ValueError):
        SweepConfig(dt_list=(), **_SMALL)
    with pytest.raises(ValueError):
        SweepConfig(init="ramp", **_SMALL)
    with pytest.raises(ValueError):
        SweepConfig(chi="cauchy", **_SMALL)
    with pytest.raises(ValueError):
        SweepConfig(suites=("inequality", "nosuch"), **_SMALL)
    with pytest.raises(ValueError):
        SweepConfig(T=0.05, **_SMALL)  # default t0 = 0.1 exceeds T
    # an infeasible cell is rejected up front, before any expensive work
    with pytest.raises(SchemeError):
        SweepConfig(eps_list=(0.95,), dt_list=(0.5,), **_SMALL)


def test_config_coerces_lists_to_floats():
    config = SweepConfig(eps_list=[1, "0.5"], dt_list=["1e-2"], **_SMALL)
    assert config.eps_list == (1.0, 0.5)
    assert config.dt_list == (0.01,)
    assert isinstance(config.eps_list[0], float)


def test_uniform_initial_state_is_stationary(tmp_path):
    config = SweepConfig(
        init="uniform", eps_list=(0.3,), dt_list=(1e-2,), T=0.05, t0=0.02, **_SMALL
    )
    rec = run_single(config, 0.3, 1e-2)
    assert rec.status == "ok"
    assert rec.err_oracle <= 1e-8
    assert rec.err_limit <= 1e-8
    assert rec.mass_drift == 0.0
    assert rec.regime == "RegimeII_mid"


def test_run_single_is_deterministic():
    config = SweepConfig(eps_list=(0.8,), dt_list=(5e-3,), T=0.05, t0=0.02, **_SMALL)
    a = run_single(config, 0.8, 5e-3)
    b = run_single(config, 0.8, 5e-3)
    assert replace(a, runtime_s=0.0) == replace(b, runtime_s=0.0)
    assert a.err_oracle > 0.0


def test_run_single_writes_trace(tmp_path):
    config = SweepConfig(eps_list=(0.8,), dt_list=(1e-2,), T=0.05, t0=0.02, **_SMALL)
    trace = tmp_path / "trace.csv"
    run_single(config, 0.8, 1e-2, trace_path=str(trace))
    with open(trace, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "mass", "g_norm", "f_norm"]
    assert len(rows) == 1 + 1 + 5  # header, initial state, five steps
    masses = [float(r[1]) for r in rows[1:]]
    assert max(masses) - min(masses) < 1e-12 * abs(masses[0])


@pytest.fixture(scope="module")
def small_sweep():
    config = SweepConfig(
        eps_list=(0.8, 0.5), dt_list=(4e-3, 2e-3, 1e-3), T=0.05, t0=0.02, **_SMALL
    )
    return config, run_sweep(config)


def test_sweep_record_layout(small_sweep):
    config, result = small_sweep
    assert len(result.records) == 6
    seen = [(r.eps, r.dt) for r in result.records]
    assert seen == [(e, d) for e in config.eps_list for d in config.dt_list]
    assert all(r.status == "ok" for r in result.records)
    # slower regimes stay classified per cell
    assert result.records[0].regime == "RegimeI"
    assert result.records[3].regime == "RegimeII_mid"


def test_sweep_orders_and_uniformity(small_sweep):
    config, result = small_sweep
    for i, eps in enumerate(config.eps_list):
        row = result.records[3 * i : 3 * i + 3]
        fitted = result.order_dt_by_eps[eps]
        assert fitted is not None
        assert all(r.order_dt == fitted for r in row)
    # two eps points cannot support a cross fit
    assert all(v is None for v in result.order_eps_by_dt.values())
    finest = [r.err_oracle for r in result.records if r.dt == 1e-3]
    assert result.uniformity == max(finest)
    assert result.max_mass_drift <= 1e-10


def test_parallel_sweep_matches_serial(small_sweep):
    config, serial = small_sweep
    parallel = run_sweep(config, jobs=2)
    for a, b in zip(serial.records, parallel.records):
        assert replace(a, runtime_s=0.0) == replace(b, runtime_s=0.0)
    assert parallel.uniformity == serial.uniformity


def test_sweep_captures_cell_failures(tmp_path):
    # a velocity box this coarse cannot hold the s = 0.9 equilibrium, and the
    # driver is expected to record that instead of crashing the sweep
    config = SweepConfig(
        s=0.9, eps_list=(0.5,), dt_list=(1e-2,), T=0.05, t0=0.02,
        Nx=8, Lv=30.0, Nv=32,
    )
    result = run_sweep(config)
    rec = result.records[0]
    assert rec.status.startswith("EquilibriumError")
    assert np.isnan(rec.err_oracle) and np.isnan(rec.err_limit)
    assert rec.order_dt is None
    assert np.isnan(result.uniformity)
    path = tmp_path / "records.csv"
    write_records_csv(result.records, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 2
    assert rows[1][-1].startswith("EquilibriumError")
    assert rows[1][-3] == ""  # no order on a failed row


def test_records_csv_roundtrip(small_sweep, tmp_path):
    _, result = small_sweep
    path = tmp_path / "records.csv"
    write_records_csv(result.records, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "s", "eps", "dt", "regime", "gamma", "b",
        "err_oracle", "err_limit", "order_dt", "runtime_s", "status",
    ]
    assert len(rows) == 7
    first = result.records[0]
    assert float(rows[1][1]) == first.eps
    assert float(rows[1][6]) == first.err_oracle  # repr() round-trips exactly
    assert float(rows[1][8]) == first.order_dt


def test_summary_json_is_reproducible(small_sweep, tmp_path):
    config, result = small_sweep
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_summary_json(p1, config, result=result)
    write_summary_json(p2, config, result=result)
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text())
    assert doc["config"]["s"] == 0.5
    assert doc["sweep"]["cells"] == 6
    assert doc["sweep"]["failed"] == 0
    assert doc["sweep"]["uniformity_U"] == result.uniformity


@pytest.fixture(scope="module")
def property_config():
    return SweepConfig(Nx=16, Lv=200.0, Nv=2048, n_samples=10_000)


def test_property_suites_all_pass(property_config):
    report = run_properties(property_config)
    assert set(report.verdicts) == {
        "inequality", "equilibrium", "resolvent", "coupling", "exact", "scheme"
    }
    for name, (passed, detail) in report.verdicts.items():
        assert passed, f"{name}: {detail}"
    assert report.all_passed


def test_fault_injection_trips_only_the_table_check(property_config):
    # suites that rebuild their own equilibrium are blind to the fault by
    # construction, so the cheap ones suffice to show the isolation
    config = replace(
        property_config, suites=("inequality", "equilibrium", "coupling", "scheme")
    )
    report = run_properties(config, fault="negate_equilibrium")
    assert not report.verdicts["equilibrium"][0]
    assert report.verdicts["inequality"][0]
    assert report.verdicts["coupling"][0]
    assert report.verdicts["scheme"][0]
    assert not report.all_passed


def test_property_suite_validation(property_config):
    with pytest.raises(ValueError):
        run_properties(property_config, fault="drop_mass")
    bad = replace(property_config, n_samples=0, suites=("inequality",))
    with pytest.raises(ValueError):
        run_properties(bad)


def test_suite_subset_reports_only_those(property_config):
    config = replace(property_config, suites=("inequality", "exact"))
    report = run_properties(config)
    assert set(report.verdicts) == {"inequality", "exact"}
    assert report.all_passed


def test_build_initial_profiles(verification_grid):
    config = SweepConfig(Nx=32, Lv=100.0, Nv=512, init="uniform", chi="heat")
    init = build_initial(config, verification_grid, 0.2)
    assert init.chi_hat(0.0) == 1.0
    assert abs(init.chi_hat(2.0) - np.exp(-2.0)) < 1e-15
    rho = init.rho_hat
    assert rho[verification_grid.Nx // 2] == 1.0
    assert np.count_nonzero(rho) == 1
