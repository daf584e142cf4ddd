"""Scenario files: schema, loading and line-numbered diagnostics.

A scenario is a YAML (or JSON) mapping::

    name: telescoping-entropy
    seed: 20240611            # required when an experiment is randomized
    system: {kind: renewal, tail: {name: telescoping}}
    budget_seconds: 300       # optional
    experiments:
      - kind: markov-entropy
        params: {core: [1], cylinder_depth: 20}
        tolerance: 1.0e-12

Experiment kinds and their parameters are listed in ``EXPERIMENT_PARAMS``.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..systems.config import SystemSpec

ExperimentKind = Literal["markov-entropy", "quasi-finite", "cylinder-curve", "tower-criterion",
                         "suspension-tests", "marked-lemma", "additivity"]

RANDOMIZED = {"suspension-tests", "marked-lemma", "additivity"}

# accepted parameter names per kind; defaults live in the runner
EXPERIMENT_PARAMS: dict[str, set[str]] = {
    "markov-entropy": {"core", "horizon", "cap", "cylinder_depth", "cylinder_tolerance", "simulate",
                       "n_returns", "window", "suspension_horizon", "replicas"},
    "quasi-finite": {"core", "horizon", "tail_tol", "unseen_cells", "expect"},
    "cylinder-curve": {"cells", "depth", "prune_tol", "prune_error", "reference"},
    "tower-criterion": {"expect", "stage"},
    "suspension-tests": {"lambdas", "cells", "n_seeds", "horizon", "covariance", "multiplicity"},
    "marked-lemma": {"models", "n_seeds", "n_se"},
    "additivity": {"t", "s", "n_seeds", "cells"},
}
NEEDS_SYSTEM = {"markov-entropy", "quasi-finite", "cylinder-curve", "tower-criterion",
                "suspension-tests", "additivity"}


class Experiment(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    name: Optional[str] = None
    params: dict[str, Any] = Field(default_factory=dict)
    tolerance: Optional[float] = None
    seed: Optional[int] = None

    @field_validator("tolerance")
    @classmethod
    def _positive(cls, v):
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValueError("tolerance must be a positive finite number")
        return v

    @model_validator(mode="after")
    def _known_params(self):
        unknown = set(self.params) - EXPERIMENT_PARAMS[self.kind]
        if unknown:
            raise ValueError(f"unknown parameter(s) for {self.kind}: {sorted(unknown)}; "
                             f"allowed: {sorted(EXPERIMENT_PARAMS[self.kind])}")
        return self

    @property
    def label(self) -> str:
        return self.name or self.kind


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    seed: Optional[int] = None
    system: Optional[SystemSpec] = None
    budget_seconds: Optional[float] = Field(default=None, gt=0)
    experiments: list[Experiment] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistency(self):
        if self.seed is None and any(e.kind in RANDOMIZED and e.seed is None for e in self.experiments):
            raise ValueError("randomized experiments need a root `seed` (scenario-level or per experiment)")
        if self.system is None and any(e.kind in NEEDS_SYSTEM for e in self.experiments):
            raise ValueError("these experiments need a `system`")
        labels = [e.label for e in self.experiments]
        dup = sorted({x for x in labels if labels.count(x) > 1})
        if dup:
            raise ValueError(f"experiment names must be unique (give `name`): {dup}")
        return self


class ScenarioError(Exception):
    """Schema or syntax problems, one message per offending field."""

    def __init__(self, source: str, problems: list[str]):
        self.source = source
        self.problems = problems
        super().__init__("\n".join(f"{source}: {p}" for p in problems))


def _node_at(node, loc: tuple) -> Any:
    """Follow a pydantic error location through a composed YAML node tree."""
    best = node
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == str(key)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = best = nxt
    return best


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ScenarioError(source, [f"{where}YAML syntax error: {getattr(exc, 'problem', exc)}"]) from None
    if not isinstance(data, dict):
        raise ScenarioError(source, ["line 1: scenario must be a mapping"])
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and x.startswith("function-")))
            if "unknown parameter" in err["msg"]:
                loc = loc + ("params",)
            node = _node_at(root, loc) if root is not None else None
            line = f"line {node.start_mark.line + 1}: " if node is not None else ""
            field = ".".join(str(x) for x in loc) or "<root>"
            problems.append(f"{line}{field}: {err['msg']}")
        raise ScenarioError(source, problems) from None


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    return parse_scenario(p.read_text(), str(p))


def builtin_dir() -> Path:
    return Path(__file__).with_name("scenarios")


def builtin_scenarios() -> dict[str, Path]:
    return {p.stem: p for p in sorted(builtin_dir().glob("*.yaml"))}


def resolve(config: str) -> Path:
    """A path, or the name of a built-in scenario."""
    p = Path(config)
    if p.exists():
        return p
    known = builtin_scenarios()
    if config in known:
        return known[config]
    raise FileNotFoundError(f"no scenario file or built-in scenario named {config!r}")
