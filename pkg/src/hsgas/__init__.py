"""Second-order energy bound for the hard-sphere Bose gas on the unit torus."""

from .scattering import (
    GasParameters,
    NeumannSolution,
    RadialProfile,
    ShellTable,
    ParameterError,
    solve_neumann,
    eval_f,
    radial_fourier,
    omega_hat_closed,
    chi_moment_hats,
)
from .lattice import MomentumShell, CubeCutoff, enumerate_shells, cube_iterate
from .correlation import (
    CorrelationProfiles,
    CorrelationTables,
    build_profiles,
    build_tables,
    eta_coefficient,
    d_coefficient_radial,
    d_coefficient_convolution,
    vg_coefficient,
    scattering_residual,
)
from .bogoliubov import (
    QuadraticCoefficients,
    ModelRegimeError,
    build_coefficients,
    dispersion,
    vacuum_quadratic_shift,
)
from .energy import (
    EnergyReport,
    c_nl,
    compute_report,
    mvac,
    lhy_sum,
    i_zero,
    e_lambda,
    closed_form_target,
    chisq_identity_check,
)
from .quadrature import ConvergenceError

__version__ = "0.1.0"

__all__ = [
    "GasParameters",
    "NeumannSolution",
    "RadialProfile",
    "ShellTable",
    "MomentumShell",
    "CubeCutoff",
    "CorrelationProfiles",
    "CorrelationTables",
    "QuadraticCoefficients",
    "EnergyReport",
    "ParameterError",
    "ModelRegimeError",
    "ConvergenceError",
    "solve_neumann",
    "eval_f",
    "radial_fourier",
    "omega_hat_closed",
    "chi_moment_hats",
    "enumerate_shells",
    "cube_iterate",
    "build_profiles",
    "build_tables",
    "eta_coefficient",
    "d_coefficient_radial",
    "d_coefficient_convolution",
    "vg_coefficient",
    "scattering_residual",
    "build_coefficients",
    "dispersion",
    "vacuum_quadratic_shift",
    "c_nl",
    "compute_report",
    "mvac",
    "lhy_sum",
    "i_zero",
    "e_lambda",
    "closed_form_target",
    "chisq_identity_check",
]
