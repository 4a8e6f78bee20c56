"""Tag-to-billboard-slot allocation by one-to-many bipartite matching."""

__version__ = "0.1.0"

from .baselines import (
    BestEdgeAllocator,
    ExhaustiveOracle,
    MaxDegreeAllocator,
    RandomAllocator,
    TopSlotRandomTagAllocator,
    allocate_bm,
    allocate_mda,
    allocate_random,
    allocate_tsrt,
    oracle_optimal,
)
from .data import (
    BillboardRecord,
    Horizon,
    SlotId,
    SlotInventory,
    TagAffinity,
    TrajectoryRecord,
    build_exposure,
    expand_slots,
    generate_synthetic,
    load_affinities,
    load_billboards,
    load_trajectories,
)
from .graph import ThetaPruner, WeightedBipartiteGraph, build_graph, prune
from .influence import InfluenceEngine
from .matcher import (
    UNASSIGNED,
    Allocation,
    OMBMAllocator,
    approximation_report,
    best_counterpart,
    find_dominating_edges,
    ombm_allocate,
    verify_lemmas,
)
from .selection import SelectionResult, SlotTagSelector, stochastic_greedy_select

__all__ = [
    "allocate_bm",
    "allocate_mda",
    "allocate_random",
    "allocate_tsrt",
    "Allocation",
    "approximation_report",
    "best_counterpart",
    "BestEdgeAllocator",
    "BillboardRecord",
    "build_exposure",
    "build_graph",
    "ExhaustiveOracle",
    "expand_slots",
    "find_dominating_edges",
    "generate_synthetic",
    "Horizon",
    "InfluenceEngine",
    "load_affinities",
    "load_billboards",
    "load_trajectories",
    "MaxDegreeAllocator",
    "ombm_allocate",
    "OMBMAllocator",
    "oracle_optimal",
    "prune",
    "RandomAllocator",
    "SelectionResult",
    "SlotId",
    "SlotInventory",
    "SlotTagSelector",
    "stochastic_greedy_select",
    "TagAffinity",
    "ThetaPruner",
    "TopSlotRandomTagAllocator",
    "TrajectoryRecord",
    "UNASSIGNED",
    "verify_lemmas",
    "WeightedBipartiteGraph",
]
