import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_chains
from perfect_sampling.chain import StateSpace, validate_kernel
from perfect_sampling.coalescence import (
    BoundingInterval,
    default_tracker,
    full_tracking_process,
    members,
    monotone_bounding_process,
    run_detection,
)
from perfect_sampling.errors import DriverMismatch, NoBounds, NotMonotone
from perfect_sampling.models import birth_death_chain, random_walk_chain
from perfect_sampling.rules import make_inverse_cdf_rule, make_table_rule


def images(rule, drivers):
    states = set(range(rule.n))
    for u in drivers:
        states = {rule.map(x, u) for x in states}
    return states


def test_full_tracking_matches_brute_force(toy):
    full = full_tracking_process(toy.independent)
    drivers = [u for u, _ in toy.independent.atoms()]
    for seq in itertools.product(drivers, repeat=2):
        res = run_detection(full, seq)
        assert members(res.final_state) == images(toy.independent, seq)
        assert res.detected == (len(images(toy.independent, seq)) == 1)


def test_first_hit_and_absorption(toy):
    full = full_tracking_process(toy.monotone)
    # atom 0 = (0,0,1), atom 1 = (1,2,2)
    res = run_detection(full, [0, 0, 1])
    assert res.detected and res.first_hit == 2 and members(res.final_state) == {1}
    assert run_detection(full, [0, 1, 0]).detected is False


def test_one_state_chain_detects_at_zero():
    k = validate_kernel([[1]])
    rule = make_table_rule([(1, (0,))], kernel=k)
    res = run_detection(full_tracking_process(rule), [])
    assert res.detected and res.first_hit == 0


def test_default_tracker_choice(toy):
    assert default_tracker(toy.monotone).name == "bounding"
    assert default_tracker(toy.independent).name == "full"


def test_bounding_rejects_non_monotone(toy):
    with pytest.raises(NotMonotone):
        monotone_bounding_process(toy.independent)


def test_bounding_needs_bounds():
    space = StateSpace.from_pairs(3, [(0, 1)])
    k = validate_kernel([["1/3"] * 3] * 3, space=space)
    rule = make_table_rule([("1/3", (0, 0, 0)), ("1/3", (1, 1, 1)), ("1/3", (2, 2, 2))], kernel=k)
    with pytest.raises(NoBounds):
        monotone_bounding_process(rule)


def test_driver_checking(toy):
    with pytest.raises(DriverMismatch):
        run_detection(full_tracking_process(toy.monotone), [0.3])


@pytest.mark.parametrize("n", [2, 4, 6])
def test_bounding_sandwiches_every_path(n):
    _, rule = random_walk_chain(n)
    bounding = monotone_bounding_process(rule)
    rng = random.Random(n)
    for _ in range(200):
        seq = [rule.sample_driver(rng) for _ in range(rng.randrange(1, 3 * n * n))]
        res = run_detection(bounding, seq)
        img = images(rule, seq)
        assert isinstance(res.final_state, BoundingInterval)
        assert res.final_state.lower == min(img) and res.final_state.upper == max(img)
        assert res.detected == (len(img) == 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=4, max_size=4), st.lists(st.integers(1, 4), min_size=4, max_size=4))
def test_bounding_on_monotone_birth_death(up, down):
    ups = [f"{v}/8" for v in up[:-1]] + [0]
    downs = [0] + [f"{v}/8" for v in down[1:]]
    k, rule = birth_death_chain(ups, downs)
    table = rule.to_table_rule()
    bounding = monotone_bounding_process(table)
    full = full_tracking_process(table)
    drivers = [u for u, _ in table.atoms()]
    for seq in itertools.product(drivers, repeat=2):
        assert run_detection(bounding, seq).detected == run_detection(full, seq).detected
