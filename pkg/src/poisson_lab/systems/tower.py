"""Cutting-and-stacking towers.

Stage ``n`` holds ``c_n`` columns of equal width ``eps_n``.  Going to stage
``n+1`` every column is cut into ``k_n`` vertical pieces of width
``eps_n / k_n``, the ``c_n k_n`` pieces are split in order into ``c_{n+1}``
consecutive groups, each group is stacked into one column, and ``s_n`` spacer
intervals are put on top of every new column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class TowerStage:
    n: int
    cuts: int            # k_n used to reach the next stage (0 on the last stage)
    columns: int         # c_n
    heights: tuple[int, ...]
    spacers: int         # spacers added per column when this stage was formed
    width: Fraction | float
    total_mass: Fraction | float

    @property
    def criterion(self) -> float:
        """``c_n eps_n log(1/eps_n)``."""
        return self.columns * float(self.width) * _log_inv(self.width)


def _log_inv(w) -> float:
    if isinstance(w, Fraction):
        return math.log(w.denominator) - math.log(w.numerator)
    return -math.log(w)


@dataclass(frozen=True)
class TowerSystem:
    stages: tuple[TowerStage, ...]
    exact: bool

    @property
    def epsilon(self) -> list:
        return [s.width for s in self.stages]

    @property
    def column_counts(self) -> list[int]:
        return [s.columns for s in self.stages]

    @property
    def rank_one(self) -> bool:
        return all(s.columns == 1 for s in self.stages)

    @property
    def max_columns(self) -> int:
        return max(s.columns for s in self.stages)

    def criterion_sequence(self) -> np.ndarray:
        return np.array([s.criterion for s in self.stages])

    def criterion_verdict(self, tol: float = 1e-3) -> str:
        """``converging`` when the last criterion value is below ``tol`` and the
        second half of the sequence is nonincreasing; ``violating`` when the
        last third stays at or above ``tol``; otherwise ``inconclusive``."""
        seq = self.criterion_sequence()
        half = seq[len(seq) // 2:]
        if seq[-1] < tol and np.all(np.diff(half) <= 1e-15):
            return "converging"
        if np.min(seq[-max(1, len(seq) // 3):]) >= tol:
            return "violating"
        return "inconclusive"

    def to_rows(self) -> list[dict]:
        return [
            {"n": s.n, "cuts": s.cuts, "columns": s.columns, "spacers": s.spacers,
             "epsilon": float(s.width), "total_mass": float(s.total_mass),
             "max_height": max(s.heights), "criterion": s.criterion}
            for s in self.stages
        ]


def build_tower(
    schedule: Sequence[Mapping],
    eps0=1,
    heights: Iterable[int] = (1,),
    exact: bool | None = None,
) -> TowerSystem:
    """Build a tower from schedule rows ``{"cuts": k_n, "columns": c_{n+1},
    "spacers": s_n}``.  ``columns`` defaults to 1; ``spacers`` to 0.

    Widths are exact fractions when ``eps0`` is rational (int, Fraction, or a
    string like ``"1/3"``), floats otherwise.
    """
    if exact is None:
        exact = not isinstance(eps0, float)
    width = Fraction(eps0) if exact else float(eps0)
    if width <= 0:
        raise ValueError("initial width must be positive")
    hs = [int(h) for h in heights]
    if not hs or min(hs) < 1:
        raise ValueError("initial heights must be positive")
    zero = Fraction(0) if exact else 0.0
    stages = []
    mass = width * sum(hs)
    added = 0
    for n, row in enumerate(schedule):
        k = int(row["cuts"])
        c_next = int(row.get("columns", 1))
        spacers = int(row.get("spacers", 0))
        if k < 2:
            raise ValueError(f"stage {n}: cuts must be >= 2, otherwise widths do not tend to 0")
        if not 1 <= c_next <= len(hs) * k:
            raise ValueError(f"stage {n}: cannot form {c_next} columns from {len(hs) * k} pieces")
        if spacers < 0:
            raise ValueError(f"stage {n}: negative spacer count")
        stages.append(TowerStage(n, k, len(hs), tuple(hs), added, width, mass))
        pieces = np.repeat(np.array(hs, dtype=object), k)
        hs = [int(sum(g)) + spacers for g in np.array_split(pieces, c_next)]
        width = width / k
        mass = mass + width * spacers * c_next
        added = spacers
    stages.append(TowerStage(len(schedule), 0, len(hs), tuple(hs), added, width, mass))
    ws = [s.width for s in stages]
    if any(b >= a for a, b in zip(ws, ws[1:])) or ws[-1] <= zero:
        raise ValueError("widths must decrease strictly to 0")
    return TowerSystem(tuple(stages), exact)


def schedule_with_columns(eps0, cuts: Sequence[int], column_rule, spacers: int = 0) -> list[dict]:
    """Schedule whose column count at each new stage is ``column_rule(eps_{n+1})``,
    clipped to the number of available pieces."""
    width = Fraction(eps0)
    cols = 1
    rows = []
    for k in cuts:
        width = width / k
        c_next = max(1, min(int(column_rule(width)), cols * k))
        rows.append({"cuts": int(k), "columns": c_next, "spacers": spacers})
        cols = c_next
    return rows


def violating_column_rule(width) -> int:
    """``ceil(1 / (eps log(1/eps)))``: keeps ``c_n eps_n log(1/eps_n)`` near 1."""
    return math.ceil(1.0 / (float(width) * _log_inv(width)))
