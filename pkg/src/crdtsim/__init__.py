"""Delta-state CRDT library and deterministic gossip-network simulator."""

from .lattice import (
    AWSet,
    CausalContext,
    Dot,
    GCounter,
    GMap,
    LatticeState,
    Pair,
    Workflow,
    awset_add,
    awset_contains,
    awset_elements,
    awset_remove,
    gcounter_increment,
    gcounter_value,
    gmap_set_true,
    join,
)
from .encoding import encode_state, encoded_size
from .workflow import current_task, is_task_complete, mark_complete, wcrdt_new
from .simulator import ExperimentConfig, RunReport, run_experiment

__all__ = [
    "AWSet",
    "CausalContext",
    "Dot",
    "GCounter",
    "GMap",
    "LatticeState",
    "Pair",
    "Workflow",
    "awset_add",
    "awset_contains",
    "awset_elements",
    "awset_remove",
    "gcounter_increment",
    "gcounter_value",
    "gmap_set_true",
    "join",
    "encode_state",
    "encoded_size",
    "current_task",
    "is_task_complete",
    "mark_complete",
    "wcrdt_new",
    "ExperimentConfig",
    "RunReport",
    "run_experiment",
]
