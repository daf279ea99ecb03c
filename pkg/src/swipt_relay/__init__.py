"""Near-optimal resource allocation for a SWIPT dynamic decode-and-forward relay."""
from .bounds import chord_harvest_bound, half_theta_pt, lower_bound_tau, tangent_rate_bound
from .model import (
    Allocation,
    ChannelState,
    DomainError,
    SystemParams,
    circuit_powers,
    energy_balance_residual,
    f1,
    f2,
    pt_ceiling,
    rate_rd,
    rate_sr,
    snr_rd,
    snr_sr,
    theta0,
)
from .montecarlo import (
    ConfigError,
    FadingSpec,
    McConfig,
    Policy,
    average_throughput,
    sample_rician_gain,
    solve_policy,
    sweep,
)
from .oracle import (
    ConvergenceError,
    GridSpec,
    IpReport,
    brute_force_fixed_theta,
    brute_force_solve,
    interior_point_fixed_theta,
)
from .solver import (
    KktReport,
    SolveReport,
    SolverConfig,
    Status,
    check_feasibility,
    solve,
    solve_fixed_theta,
    verify_kkt,
)

__all__ = [
    "Allocation",
    "average_throughput",
    "brute_force_fixed_theta",
    "brute_force_solve",
    "ChannelState",
    "check_feasibility",
    "chord_harvest_bound",
    "circuit_powers",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "energy_balance_residual",
    "f1",
    "f2",
    "FadingSpec",
    "GridSpec",
    "half_theta_pt",
    "interior_point_fixed_theta",
    "IpReport",
    "KktReport",
    "lower_bound_tau",
    "McConfig",
    "Policy",
    "pt_ceiling",
    "rate_rd",
    "rate_sr",
    "sample_rician_gain",
    "snr_rd",
    "snr_sr",
    "solve",
    "solve_fixed_theta",
    "solve_policy",
    "SolverConfig",
    "SolveReport",
    "Status",
    "sweep",
    "SystemParams",
    "tangent_rate_bound",
    "theta0",
    "verify_kkt",
]

__version__ = "0.1.0"
