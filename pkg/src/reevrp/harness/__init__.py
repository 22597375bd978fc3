"""Instance generation, depot assignment and scenario sweeps."""
from .costs import BASELINE_COST_INPUTS, CostInputs, CostOrderingViolated, derive_costs
from .depots import DepotAssignment, InsufficientCapacity, assign_depots
from .generator import (
    ClusterTooLarge,
    GeneratorConfig,
    aggregate_superlocations,
    cluster_service,
    generate_instance,
    held_karp,
)
from .sweep import MetricsReport, ScenarioConfig, builtin_grid, gap_metrics, load_grid, run_sweep

__all__ = [
    "BASELINE_COST_INPUTS",
    "ClusterTooLarge",
    "CostInputs",
    "CostOrderingViolated",
    "DepotAssignment",
    "GeneratorConfig",
    "InsufficientCapacity",
    "MetricsReport",
    "ScenarioConfig",
    "aggregate_superlocations",
    "assign_depots",
    "builtin_grid",
    "cluster_service",
    "derive_costs",
    "gap_metrics",
    "generate_instance",
    "held_karp",
    "load_grid",
    "run_sweep",
]
