"""Iteration-aware GPU memory planning from allocation traces.

Pipeline: detect the repeating iteration of a trace, extract circular
per-variable lifetimes for one window, then either pack resident
variables into a static pool (offset planning), plan swaps to meet a
byte limit (candidate scoring, transfer scheduling, simulation), or
both combined.
"""
from .autoswap import (
    MIB,
    SCORE_NAMES,
    ScoreWeights,
    SwapCandidate,
    TransferModel,
    absence_slots,
    apply_absence,
    attach_scores,
    combined_scores,
    filter_candidates,
    gap_area,
    optimize_weights,
    planned_peak,
    score_aoa,
    score_doa,
    score_wdoa,
    select_by_score,
    select_by_swdoa,
    selection_report,
    standardize,
    swdoa_scores,
)
from .errors import (
    GraphTooLarge,
    InvalidSpec,
    InvariantViolation,
    LimitUnreachable,
    MalformedRecord,
    MemplanError,
    MissingVariable,
    PeriodNotFound,
    SwapDeadlock,
)
from .estimators import IterationAnalyzer, PoolPlanner, SwapPlanner
from .iteration import (
    Access,
    DetectedIteration,
    IterationProfile,
    LoadProfile,
    VariableLifetime,
    compute_load_profile,
    detect_iteration,
    extract_lifetimes,
    profile_report,
)
from .smartpool import (
    ConflictGraph,
    LookupTable,
    PoolPlan,
    brute_force_optimal_footprint,
    build_conflict_graph,
    check_plan,
    conflict_graph_from_arcs,
    make_lookup_table,
    plan_pool,
)
from .swapsim import (
    DelayedOp,
    LoadCurve,
    SimulationResult,
    SwapEvent,
    SwapSchedule,
    build_schedule,
    combine_with_pool,
    compute_load_min,
    simulate,
    simulation_report,
)
from .synth import WorkloadSpec, generate_synthetic_trace, vgg_like
from .trace import (
    EventKind,
    Trace,
    TraceEvent,
    load_trace,
    parse_trace,
    save_trace,
    serialize_trace,
    validate_trace,
)

__version__ = "0.1.0"

__all__ = [
    "Access",
    "ConflictGraph",
    "DelayedOp",
    "DetectedIteration",
    "EventKind",
    "GraphTooLarge",
    "InvalidSpec",
    "InvariantViolation",
    "IterationAnalyzer",
    "IterationProfile",
    "LimitUnreachable",
    "LoadCurve",
    "LoadProfile",
    "LookupTable",
    "MalformedRecord",
    "MemplanError",
    "MIB",
    "MissingVariable",
    "PeriodNotFound",
    "PoolPlan",
    "PoolPlanner",
    "SCORE_NAMES",
    "ScoreWeights",
    "SimulationResult",
    "SwapCandidate",
    "SwapDeadlock",
    "SwapEvent",
    "SwapPlanner",
    "SwapSchedule",
    "Trace",
    "TraceEvent",
    "TransferModel",
    "VariableLifetime",
    "WorkloadSpec",
    "brute_force_optimal_footprint",
    "build_conflict_graph",
    "build_schedule",
    "check_plan",
    "conflict_graph_from_arcs",
    "combine_with_pool",
    "compute_load_min",
    "compute_load_profile",
    "detect_iteration",
    "extract_lifetimes",
    "filter_candidates",
    "generate_synthetic_trace",
    "load_trace",
    "make_lookup_table",
    "optimize_weights",
    "parse_trace",
    "plan_pool",
    "profile_report",
    "save_trace",
    "score_aoa",
    "score_doa",
    "score_wdoa",
    "select_by_score",
    "select_by_swdoa",
    "absence_slots",
    "apply_absence",
    "attach_scores",
    "combined_scores",
    "gap_area",
    "planned_peak",
    "selection_report",
    "serialize_trace",
    "simulate",
    "standardize",
    "simulation_report",
    "swdoa_scores",
    "validate_trace",
    "vgg_like",
    "__version__",
]
