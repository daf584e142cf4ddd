"""Key-value system definitions (YAML or JSON).

Schema (``kind`` selects which keys apply)::

    kind: renewal            # renewal | random-walk | finite | tower
    f: ["1/2", "1/2"]        # renewal: explicit prefix f_1..f_N (fractions allowed)
    tail:                    # renewal: optional analytic tail for n > N
      name: telescoping      # power | telescoping | heavylog | geometric
      scale: 1.0             # family parameters (exponent, ratio, ...)
    prefix_from_tail: 0      # renewal, no f: materialize this many values of the tail
    total: 1                 # renewal: declared total mass, checked against the tail
    window: 200              # renewal: largest explicit state; walk: [lo, hi]
    step: {"1": "1/2", "-1": "1/2"}   # random-walk
    matrix: [[...], ...]     # finite
    states: [0, 1, 2]        # finite, optional labels
    eps0: 1                  # tower
    heights: [1]             # tower
    stages: [{cuts: 2, columns: 1, spacers: 0}]   # tower schedule rows
    repeat: 20               # tower: repeat the stage list this many times
    column_rule: violating   # tower: derive columns from eps_n instead
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .markov import FiniteChain, MarkovSystem, RandomWalk, RenewalChain
from .returns import ReturnDistribution
from .tower import TowerSystem, build_tower, schedule_with_columns, violating_column_rule

Number = Union[int, float, str]


class TailSpec(BaseModel):
    model_config = ConfigDict(extra="allow")
    name: str
    scale: float = 1.0


class StageSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    cuts: int = Field(ge=2)
    columns: int = Field(default=1, ge=1)
    spacers: int = Field(default=0, ge=0)


class SystemSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["renewal", "random-walk", "finite", "tower"]
    f: Optional[list[Number]] = None
    tail: Optional[TailSpec] = None
    prefix_from_tail: int = Field(default=0, ge=0)
    total: Optional[float] = None
    window: Optional[Union[int, list[int]]] = None
    step: Optional[dict[int, Number]] = None
    matrix: Optional[list[list[Number]]] = None
    states: Optional[list[int]] = None
    eps0: Number = 1
    heights: list[int] = Field(default_factory=lambda: [1])
    stages: Optional[list[StageSpec]] = None
    repeat: int = Field(default=1, ge=1)
    column_rule: Optional[Literal["violating"]] = None

    @model_validator(mode="after")
    def _kind_fields(self):
        if self.kind == "renewal" and self.f is None and self.tail is None:
            raise ValueError("renewal system needs `f` and/or `tail`")
        if self.kind == "random-walk":
            if not self.step:
                raise ValueError("random-walk system needs a nonempty `step`")
            if not (isinstance(self.window, list) and len(self.window) == 2):
                raise ValueError("random-walk `window` must be [lo, hi]")
        if self.kind == "finite" and not self.matrix:
            raise ValueError("finite system needs `matrix`")
        if self.kind == "tower" and not self.stages:
            raise ValueError("tower system needs `stages`")
        return self

    def return_distribution(self) -> ReturnDistribution:
        tail_params = None
        if self.tail is not None:
            tail_params = {k: v for k, v in self.tail.model_dump().items() if k != "name"}
        if self.f is None:
            return ReturnDistribution.from_tail(self.tail.name, prefix_len=self.prefix_from_tail, **tail_params)
        return ReturnDistribution.from_values(
            self.f, tail=self.tail.name if self.tail else None, tail_params=tail_params, total=self.total
        )

    def build(self) -> Union[MarkovSystem, TowerSystem]:
        if self.kind == "renewal":
            window = self.window if isinstance(self.window, int) else None
            return RenewalChain(self.return_distribution(), window)
        if self.kind == "random-walk":
            return RandomWalk(self.step, (self.window[0], self.window[1]))
        if self.kind == "finite":
            return FiniteChain(self.matrix, self.states)
        rows = [s.model_dump() for s in self.stages] * self.repeat
        if self.column_rule == "violating":
            rows = schedule_with_columns(self.eps0, [r["cuts"] for r in rows], violating_column_rule,
                                         spacers=rows[0]["spacers"])
        eps0 = self.eps0 if not isinstance(self.eps0, str) else self.eps0
        return build_tower(rows, eps0=eps0, heights=self.heights)


def load_system(path: str | Path) -> Union[MarkovSystem, TowerSystem]:
    import yaml

    data = yaml.safe_load(Path(path).read_text())
    if isinstance(data, dict) and "system" in data:
        data = data["system"]
    return SystemSpec.model_validate(data).build()


def dump_ints(path: str | Path, seq: Any) -> None:
    """Newline-delimited integers (paths, induced sequences)."""
    arr = np.asarray(seq, dtype=np.int64)
    Path(path).write_text("".join(f"{int(x)}\n" for x in arr))


def load_ints(path: str | Path) -> np.ndarray:
    text = Path(path).read_text().split()
    return np.array([int(x) for x in text], dtype=np.int64)
