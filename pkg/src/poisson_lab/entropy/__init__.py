"""Information functions, the Poisson entropy function, cylinder sums and rate estimators."""
from .cylinders import (
    CurvePoint,
    CylinderCurve,
    LocalPartition,
    RefinedPartitionTable,
    brute_force_cylinder_masses,
    cylinder_entropy_curve,
    pruning_band,
    refined_tables,
)
from .estimators import BlockStatistics, lz76_complexity, lz_entropy_rate, plug_in_entropy_rate
from .information import (
    conditional_information,
    conditional_information_all,
    decomposition_residual,
    information,
    information_function,
)
from .parry import parry_markov_step_entropy
from .poisson import poisson_entropy_function, suspension_partition_entropy

__all__ = [
    "BlockStatistics",
    "CurvePoint",
    "CylinderCurve",
    "LocalPartition",
    "RefinedPartitionTable",
    "brute_force_cylinder_masses",
    "conditional_information",
    "conditional_information_all",
    "cylinder_entropy_curve",
    "decomposition_residual",
    "information",
    "information_function",
    "lz76_complexity",
    "lz_entropy_rate",
    "parry_markov_step_entropy",
    "plug_in_entropy_rate",
    "poisson_entropy_function",
    "pruning_band",
    "refined_tables",
    "suspension_partition_entropy",
]
