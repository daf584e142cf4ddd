import math

import pytest

from poisson_lab.estimate import EntropyEstimate, exact


def test_roundtrip_with_infinity():
    e = EntropyEstimate(math.inf, 3.0, math.inf, "exact-formula", {"status": "divergent"})
    back = EntropyEstimate.from_json(e.to_json())
    assert back.value == math.inf and back.lower == 3.0 and back.meta["status"] == "divergent"
    assert '"inf"' in e.to_json()


def test_interval_order_enforced():
    with pytest.raises(ValueError):
        EntropyEstimate(1.0, 2.0, 3.0, "plug-in")


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        EntropyEstimate(1.0, 1.0, 1.0, "guess")


def test_exact_helper_and_contains():
    e = exact(0.5)
    assert e.lower == e.value == e.upper == 0.5
    assert e.contains(0.5) and not e.contains(0.6)
    assert e.finite
