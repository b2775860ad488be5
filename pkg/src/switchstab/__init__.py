"""Simulation, signal-class validation and stability certificates for switched systems."""

from .certify import (
    CertificateReport,
    CertifyOptions,
    PredictedLimit,
    Status,
    Verdict,
    check_convergence,
    check_corollary_final,
    check_meagre_output,
    empirical_stability_test,
    simple_cycles,
)
from .errors import (
    Blowup,
    ConfigError,
    DomainViolation,
    HorizonError,
    InfeasibleSpecError,
    SignalError,
    UndecidableError,
)
from .integrator import Trajectory, sample_state, simulate
from .limit_sets import (
    SetEstimate,
    converges_to,
    hausdorff,
    hausdorff_directed,
    omega_limit,
    omega_sharp,
    weakly_meagre_estimate,
)
from .lyapunov import (
    LyapunovPair,
    check_decrease_inequality,
    in_Z_V,
    monitor_v,
    quadratic_pair,
)
from .observability import Subspace, intersect, kernel, unobservable_subspace, zero_output_membership
from .signals import (
    ADT,
    Dwell,
    Ergodic,
    Graph,
    Intersection,
    SetValuedMap,
    SwitchingSignal,
    count_switches,
    generate,
    next_switch_time,
    shift,
    validate,
)
from .system import Domain, Mode, SwitchedSystem, system_from_json

__all__ = [
    "ADT",
    "Blowup",
    "CertificateReport",
    "CertifyOptions",
    "check_convergence",
    "check_corollary_final",
    "check_decrease_inequality",
    "check_meagre_output",
    "ConfigError",
    "converges_to",
    "count_switches",
    "Domain",
    "DomainViolation",
    "Dwell",
    "empirical_stability_test",
    "Ergodic",
    "generate",
    "Graph",
    "hausdorff",
    "hausdorff_directed",
    "HorizonError",
    "in_Z_V",
    "InfeasibleSpecError",
    "intersect",
    "Intersection",
    "kernel",
    "LyapunovPair",
    "Mode",
    "monitor_v",
    "next_switch_time",
    "omega_limit",
    "omega_sharp",
    "PredictedLimit",
    "quadratic_pair",
    "sample_state",
    "SetEstimate",
    "SetValuedMap",
    "shift",
    "SignalError",
    "simple_cycles",
    "simulate",
    "Status",
    "Subspace",
    "SwitchedSystem",
    "SwitchingSignal",
    "system_from_json",
    "Trajectory",
    "UndecidableError",
    "unobservable_subspace",
    "validate",
    "Verdict",
    "weakly_meagre_estimate",
    "zero_output_membership",
]
