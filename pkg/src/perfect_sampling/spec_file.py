"""Loading chains and rules from JSON chain files.

Format::

    {"n": 3,
     "matrix": [["1/2", "1/2", 0], ...],
     "pi": ["1/3", "1/3", "1/3"],              # optional
     "order": "linear" | [[a, b], ...],          # optional, pairs mean a <= b
     "labels": ["a", "b", "c"],                  # optional
     "rule": {"kind": "table", "atoms": [{"p": "1/2", "map": [0, 0, 1]}, ...]}
           | {"kind": "independent"}
           | {"kind": "inverse-cdf", "ordering": [0, 1, 2]}}

Probabilities may be numbers or "p/q" strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .chain import DiscreteKernel, StateSpace, validate_kernel
from .rules import TransitionRule, make_independent_transitions_rule, make_inverse_cdf_rule, make_table_rule


@dataclass(frozen=True)
class ChainSpec:
    kernel: DiscreteKernel
    rule: Optional[TransitionRule]


def build_space(spec: dict) -> StateSpace:
    n = int(spec["n"])
    labels = tuple(spec["labels"]) if spec.get("labels") is not None else None
    order = spec.get("order")
    if order is None:
        return StateSpace(n, labels=labels)
    if order == "linear":
        return StateSpace.linear(n, labels=labels)
    return StateSpace.from_pairs(n, [tuple(p) for p in order], labels=labels)


def build_rule(kernel: DiscreteKernel, rule_spec: dict) -> TransitionRule:
    kind = rule_spec.get("kind")
    if kind == "table":
        return make_table_rule(rule_spec["atoms"], kernel=kernel)
    if kind == "independent":
        return make_independent_transitions_rule(kernel)
    if kind == "inverse-cdf":
        return make_inverse_cdf_rule(kernel, rule_spec.get("ordering"))
    raise ValueError(f"unknown rule kind {kind!r}")


def load_chain_spec(source: Union[str, Path, dict]) -> ChainSpec:
    spec = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    space = build_space(spec)
    if len(spec["matrix"]) != space.size:
        raise ValueError("matrix size does not match n")
    kernel = validate_kernel(spec["matrix"], pi=spec.get("pi"), space=space)
    rule = build_rule(kernel, spec["rule"]) if spec.get("rule") else None
    return ChainSpec(kernel, rule)
