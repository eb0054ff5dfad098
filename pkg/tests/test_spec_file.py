import json
from fractions import Fraction

import pytest

from perfect_sampling.errors import KernelMismatch, NotStationary
from perfect_sampling.spec_file import load_chain_spec

TOY = {
    "n": 3,
    "matrix": [["1/2", "1/2", 0], ["1/2", 0, "1/2"], [0, "1/2", "1/2"]],
    "order": "linear",
    "labels": ["a", "b", "c"],
    "rule": {"kind": "table", "atoms": [{"p": "1/2", "map": [0, 0, 1]}, {"p": "1/2", "map": [1, 2, 2]}]},
}


def test_load_from_file(tmp_path):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(TOY))
    spec = load_chain_spec(path)
    assert spec.kernel.exact_pi == (Fraction(1, 3),) * 3
    assert spec.rule.maps == ((0, 0, 1), (1, 2, 2))
    assert spec.kernel.space.label(2) == "c" and spec.kernel.space.top == 2


def test_rule_kinds():
    for kind in ("independent", "inverse-cdf"):
        spec = load_chain_spec({**TOY, "rule": {"kind": kind}})
        assert spec.rule.name == kind
    assert load_chain_spec({k: v for k, v in TOY.items() if k != "rule"}).rule is None
    with pytest.raises(ValueError):
        load_chain_spec({**TOY, "rule": {"kind": "magic"}})


def test_partial_order_pairs():
    spec = load_chain_spec({**TOY, "order": [[0, 1], [1, 2]]})
    assert spec.kernel.space.le(0, 2)


def test_validation_errors():
    with pytest.raises(KernelMismatch):
        load_chain_spec({**TOY, "rule": {"kind": "table", "atoms": [{"p": 1, "map": [0, 0, 0]}]}})
    with pytest.raises(NotStationary):
        load_chain_spec({**TOY, "pi": ["1/2", "1/4", "1/4"]})
    with pytest.raises(ValueError):
        load_chain_spec({**TOY, "n": 4})
