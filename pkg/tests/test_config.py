import pytest
from pydantic import ValidationError

from poisson_lab.systems import RandomWalk, RenewalChain, TowerSystem
from poisson_lab.systems.config import SystemSpec, dump_ints, load_ints, load_system


def test_renewal_spec():
    sys = SystemSpec.model_validate({"kind": "renewal", "f": ["1/2", "1/2"]}).build()
    assert isinstance(sys, RenewalChain)


def test_tail_spec():
    sys = SystemSpec.model_validate({"kind": "renewal", "tail": {"name": "telescoping"}, "window": 50}).build()
    assert sys.window[-1] == 50


def test_walk_spec_requires_window():
    with pytest.raises(ValidationError):
        SystemSpec.model_validate({"kind": "random-walk", "step": {1: 0.5, -1: 0.5}})
    sys = SystemSpec.model_validate({"kind": "random-walk", "step": {1: 0.5, -1: 0.5}, "window": [-3, 3]}).build()
    assert isinstance(sys, RandomWalk)


def test_tower_spec():
    sys = SystemSpec.model_validate({"kind": "tower", "stages": [{"cuts": 2}], "repeat": 4}).build()
    assert isinstance(sys, TowerSystem) and len(sys.stages) == 5


def test_unknown_key_rejected():
    with pytest.raises(ValidationError):
        SystemSpec.model_validate({"kind": "renewal", "f": [1], "colour": "red"})


def test_yaml_roundtrip(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("system:\n  kind: renewal\n  f: ['1']\n")
    assert isinstance(load_system(p), RenewalChain)
    dump_ints(tmp_path / "x.txt", [3, 2, 1])
    assert load_ints(tmp_path / "x.txt").tolist() == [3, 2, 1]
