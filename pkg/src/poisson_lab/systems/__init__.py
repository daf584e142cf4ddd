from .markov import (
    Cylinder,
    FiniteChain,
    MarkovSystem,
    RandomWalk,
    RenewalChain,
    Row,
    build_finite_chain,
    build_random_walk,
    build_renewal_chain,
    cylinder_measure,
)
from .returns import ReturnDistribution, classify_recurrence, make_tail
from .tower import TowerStage, TowerSystem, build_tower

__all__ = [
    "Cylinder",
    "FiniteChain",
    "MarkovSystem",
    "RandomWalk",
    "RenewalChain",
    "ReturnDistribution",
    "Row",
    "TowerStage",
    "TowerSystem",
    "build_finite_chain",
    "build_random_walk",
    "build_renewal_chain",
    "build_tower",
    "classify_recurrence",
    "cylinder_measure",
    "make_tail",
]
