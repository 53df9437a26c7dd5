"""Mean-field bosons on a flux-threaded ring: closed-form half-flux states,
a pseudospectral NLSE solver, and experiments comparing the rotating-soliton
and stationary ground-state branches."""

__version__ = "0.1.0"

from .analytic import (  # noqa: E402
    HalfFluxAnalytic,
    RingProblem,
    asymptotic_delta_energy,
    canonical_alpha,
    critical_coupling,
    half_flux_energy,
    half_flux_mu,
    half_flux_record,
    half_flux_state,
    solve_modulus,
    uniform_branch_energy,
    wilczek_rotating_energy,
)
from .elliptic import EllipticModulus, complete_E, complete_K, jacobi_cn_sn_dn  # noqa: E402
from .fields import LAB, TWISTED, RingGrid, WaveField, gauge_transform  # noqa: E402
from .solver import (  # noqa: E402
    SolverConfig,
    StationaryState,
    apply_hamiltonian,
    energy_and_mu,
    imaginary_time_ground_state,
    real_time_evolve,
    residual_norm,
)

__all__ = [
    "EllipticModulus",
    "HalfFluxAnalytic",
    "LAB",
    "RingGrid",
    "RingProblem",
    "SolverConfig",
    "StationaryState",
    "TWISTED",
    "WaveField",
    "apply_hamiltonian",
    "asymptotic_delta_energy",
    "canonical_alpha",
    "complete_E",
    "complete_K",
    "critical_coupling",
    "energy_and_mu",
    "gauge_transform",
    "half_flux_energy",
    "half_flux_mu",
    "half_flux_record",
    "half_flux_state",
    "imaginary_time_ground_state",
    "jacobi_cn_sn_dn",
    "real_time_evolve",
    "residual_norm",
    "solve_modulus",
    "uniform_branch_energy",
    "wilczek_rotating_energy",
]
