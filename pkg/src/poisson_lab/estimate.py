"""The entropy record passed between modules and written to disk."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

METHODS = ("exact-formula", "cylinder-sum", "plug-in", "lz", "abramov-sim", "partition-sum", "suspension-sim", "marked-mc")


def _enc(x: Any) -> Any:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {str(k): _enc(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_enc(v) for v in x]
    if hasattr(x, "item"):  # numpy scalars
        return _enc(x.item())
    return x


def _dec(x: Any) -> Any:
    if x in ("inf", "-inf", "nan"):
        return float(x)
    return x


@dataclass(frozen=True)
class EntropyEstimate:
    """An entropy in nats with an interval ``lower <= value <= upper``.

    Infinite values are allowed.  In JSON, non-finite floats are written as
    the strings ``"inf"``, ``"-inf"``, ``"nan"``.
    """

    value: float
    lower: float
    upper: float
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("value", "lower", "upper"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if not (self.lower <= self.value <= self.upper):
            raise ValueError(f"interval [{self.lower}, {self.upper}] does not contain {self.value}")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack

    def to_dict(self) -> dict:
        return _enc(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyEstimate":
        return cls(float(_dec(d["value"])), float(_dec(d["lower"])), float(_dec(d["upper"])), d["method"],
                   {k: _dec(v) for k, v in d.get("meta", {}).items()})

    @classmethod
    def from_json(cls, text: str) -> "EntropyEstimate":
        return cls.from_dict(json.loads(text))


def exact(value: float, method: str = "exact-formula", **meta) -> EntropyEstimate:
    return EntropyEstimate(value, value, value, method, meta)
