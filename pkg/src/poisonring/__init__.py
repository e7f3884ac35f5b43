"""Data-poisoning fault injection for integer programs.

Wrap values with make_poisoned() and route operators through binop()/unop();
every application records an OperatorEvent and may emit a deviated result per
the value's PoisonPolicy (deterministic/intermittent effect, always/transient
lifetime, infectious propagation). Includes Dijkstra's K-state self-stabilizing
token ring as the reference workload plus trace analytics and a CLI.
"""

from ._backend import KERNEL_BACKEND
from .poison_core import (
    ArithmeticFault,
    DeviationModel,
    EvalContext,
    PoisonPolicy,
    PoisonedScalar,
    PolicyError,
    binop,
    clean_value_of,
    deviate,
    is_poisoned,
    kernel_backend,
    make_poisoned,
    unop,
    with_suppression,
)
from .ring_sim import (
    Injection,
    RingConfig,
    RingState,
    ScenarioError,
    has_privilege,
    out,
    perturb,
    privilege_vector,
    run,
    update,
)
from .trace_metrics import (
    DeviationStats,
    OperatorEvent,
    RunRecord,
    SnapshotEvent,
    TraceFormatError,
    convergence_point,
    deviation_stats,
    dumps_record,
    is_legitimate,
    loads_record,
    read_record,
    token_count,
    write_record,
)
from .cli import GOLDEN_PREFIX, Scenario, execute_scenario, load_scenario, reference_scenario

__version__ = "0.1.0"

__all__ = [
    "ArithmeticFault",
    "DeviationModel",
    "DeviationStats",
    "EvalContext",
    "GOLDEN_PREFIX",
    "Injection",
    "KERNEL_BACKEND",
    "OperatorEvent",
    "PoisonPolicy",
    "PoisonedScalar",
    "PolicyError",
    "RingConfig",
    "RingState",
    "RunRecord",
    "Scenario",
    "ScenarioError",
    "SnapshotEvent",
    "TraceFormatError",
    "binop",
    "clean_value_of",
    "convergence_point",
    "deviate",
    "deviation_stats",
    "dumps_record",
    "execute_scenario",
    "has_privilege",
    "is_legitimate",
    "is_poisoned",
    "kernel_backend",
    "load_scenario",
    "loads_record",
    "make_poisoned",
    "out",
    "reference_scenario",
    "perturb",
    "privilege_vector",
    "read_record",
    "run",
    "token_count",
    "unop",
    "update",
    "with_suppression",
    "write_record",
]
