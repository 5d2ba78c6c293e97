"""Asymptotic-preserving micro-macro solver for the scaled Levy-Fokker-Planck
equation, with exact Fourier-space reference solutions and a verification
harness.

The public surface is re-exported here; see the module docstrings for the
conventions (continuum-normalized transforms, ascending mode order).
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("levyfp")
except PackageNotFoundError:  # pragma: no cover - source tree without install
    __version__ = "0.0.0+src"

from .grids import GridSpec, VelocityRep, sample_spectrum, v_fourier, x_fourier, x_modes
from .equilibrium import (
    EquilibriumTable,
    build_equilibrium,
    derivative_ratio_check,
    dump_equilibrium_csv,
    equilibrium_hat,
    tail_constant_exact,
)
from .fracops import (
    ResolventQuadrature,
    commutator_probe,
    frac_heat_multiplier,
    frac_laplacian_multiplier,
    frac_laplacian_quadrature,
    lfp_apply,
    lfp_resolvent,
    normalization_constant,
)
from .coupling import CouplingSpectrum, coupling_hat, coupling_quadrature, coupling_scaling_probe
from .exact import (
    InitialData,
    continuous_gap_norm,
    elementary_inequality_suite,
    exact_lfp_hat,
    exponent_gap_probe,
    exponent_integral,
    gaussian_macro_data,
    limit_state_hat,
)
from .scheme import (
    GammaPolicy,
    SchemeError,
    SchemeState,
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
from .metrics import NormSpec, observed_order, weighted_error, zeta_reference
from .harness import (
    ErrorRecord,
    SuiteReport,
    SweepConfig,
    SweepResult,
    run_properties,
    run_single,
    run_sweep,
    write_records_csv,
    write_summary_json,
)

__all__ = [
    "GridSpec",
    "VelocityRep",
    "x_modes",
    "v_fourier",
    "x_fourier",
    "sample_spectrum",
    "EquilibriumTable",
    "equilibrium_hat",
    "build_equilibrium",
    "derivative_ratio_check",
    "dump_equilibrium_csv",
    "tail_constant_exact",
    "ResolventQuadrature",
    "normalization_constant",
    "frac_laplacian_multiplier",
    "frac_laplacian_quadrature",
    "lfp_apply",
    "lfp_resolvent",
    "frac_heat_multiplier",
    "commutator_probe",
    "CouplingSpectrum",
    "coupling_hat",
    "coupling_quadrature",
    "coupling_scaling_probe",
    "InitialData",
    "gaussian_macro_data",
    "exponent_integral",
    "exact_lfp_hat",
    "limit_state_hat",
    "continuous_gap_norm",
    "elementary_inequality_suite",
    "exponent_gap_probe",
    "SimParams",
    "GammaPolicy",
    "SchemeState",
    "SchemeError",
    "decompose_initial",
    "select_gamma",
    "step_eta",
    "step_g_half",
    "step_g_transport",
    "step",
    "recompose_f",
    "splitting_defect",
    "NormSpec",
    "weighted_error",
    "observed_order",
    "zeta_reference",
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
