import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_chains
from perfect_sampling.chain import reverse_kernel, validate_kernel
from perfect_sampling.coalescence import full_tracking_process, run_detection
from perfect_sampling.errors import EnumerationTooLarge, IrrationalEntries
from perfect_sampling.fill import FIXED, FillConfig, fill_attempt
from perfect_sampling.oracle import (
    ExactDistribution,
    exact_cftp_time_law,
    exact_fill_report,
    exact_forward_coalescence,
    exact_joint_T_W,
    pi_average_check,
)
from perfect_sampling.rules import make_independent_transitions_rule, make_inverse_cdf_rule


def brute_force_report(kernel, rule, t, z):
    """Direct enumeration over (path, drivers) without any dynamic programming."""
    pi = kernel.exact_pi
    E = kernel.exact
    n = kernel.n
    full = full_tracking_process(rule)
    acc = [Fraction(0)] * n
    for path in itertools.product(range(n), repeat=t):
        path = list(path) + [z]
        w = Fraction(1)
        for s in range(t):
            # backward weight K~(x_{s+1}, x_s) = pi(x_s) K(x_s, x_{s+1}) / pi(x_{s+1})
            w *= pi[path[s]] * E[path[s]][path[s + 1]] / pi[path[s + 1]]
        if not w:
            continue
        steps = [rule.conditional_atoms(path[s], path[s + 1]) for s in range(t)]
        for combo in itertools.product(*steps):
            q = Fraction(1)
            for _, p in combo:
                q *= p
            if run_detection(full, [u for u, _ in combo]).detected:
                acc[path[0]] += w * q
    return sum(acc), acc


def test_toy_regression_values(toy, toy_rev):
    rep = exact_fill_report(toy.kernel, toy_rev, toy.monotone, 3, 0)
    assert rep.p_accept == Fraction(3, 4) and rep.outcome_count == 8
    assert exact_fill_report(toy.kernel, toy_rev, toy.independent, 2, 0).outcome_count == 64


@pytest.mark.parametrize("t", [1, 2, 3])
def test_dp_matches_brute_force(toy, toy_rev, t):
    for rule in (toy.monotone, toy.independent):
        for z in range(3):
            rep = exact_fill_report(toy.kernel, toy_rev, rule, t, z)
            p, acc = brute_force_report(toy.kernel, rule, t, z)
            assert rep.p_accept == p
            if p:
                assert rep.conditional_output == tuple(a / p for a in acc)


def test_brute_force_on_random_chains():
    for kernel, rule in random_chains(10, seed=3):
        rev = reverse_kernel(kernel)
        for z in range(3):
            if kernel.exact_pi[z]:
                assert exact_fill_report(kernel, rev, rule, 2, z).p_accept == brute_force_report(kernel, rule, 2, z)[0]


def test_pi_average_on_random_chains_and_rules():
    for kernel, rule in random_chains(20, seed=41):
        rev = reverse_kernel(kernel)
        for r in (rule, make_inverse_cdf_rule(kernel), make_independent_transitions_rule(kernel)):
            for t in (1, 2):
                assert pi_average_check(kernel, rev, r, t)[2]


def test_accepted_output_is_pi_for_every_seed():
    # conditional output law equals pi whenever acceptance is possible
    for kernel, rule in random_chains(20, seed=5):
        rev = reverse_kernel(kernel)
        for z in range(3):
            if not kernel.exact_pi[z]:
                continue
            rep = exact_fill_report(kernel, rev, rule, 3, z)
            if rep.p_accept:
                assert rep.conditional_output == kernel.exact_pi


def test_forward_coalescence_monotone(toy):
    assert exact_forward_coalescence(toy.kernel, toy.monotone, 2) == Fraction(1, 2)
    assert exact_forward_coalescence(toy.kernel, toy.monotone, 0) == 0
    values = [exact_forward_coalescence(toy.kernel, toy.independent, t) for t in range(6)]
    assert values == sorted(values)


def test_monte_carlo_agrees_with_oracle(toy, toy_rev):
    exact = exact_fill_report(toy.kernel, toy_rev, toy.monotone, 3, 2).p_accept
    cfg = FillConfig(horizon=3, seed_state=2, retry=FIXED)
    rng = random.Random(10)
    n = 20_000
    hits = sum(fill_attempt(toy.kernel, toy_rev, toy.monotone, cfg, rng).accepted for _ in range(n))
    assert abs(hits / n - float(exact)) < 0.015


def test_joint_T_W_factorizes(toy, toy_rev):
    joint = exact_joint_T_W(toy.kernel, toy_rev, toy.independent, 4)
    assert joint.t_w_factorizes() and joint.w_x0_factorizes()
    assert joint.block_mass + joint.residual == 1
    assert joint.t_law() == exact_cftp_time_law(toy.independent, 4)


def test_caps_and_irrational_entries(toy, toy_rev):
    with pytest.raises(EnumerationTooLarge):
        exact_fill_report(toy.kernel, toy_rev, toy.independent, 4, 0, cap=100)
    a = 2 ** 0.5 / 3
    k = validate_kernel([[1 - a, a], [a, 1 - a]])
    with pytest.raises(IrrationalEntries):
        exact_fill_report(k, reverse_kernel(k), make_inverse_cdf_rule(k), 1, 0)


def test_exact_distribution():
    d = ExactDistribution((Fraction(1, 2), Fraction(1, 2)))
    assert d == (Fraction(1, 2), Fraction(1, 2)) and d.to_json() == ["1/2", "1/2"]
    with pytest.raises(ValueError):
        ExactDistribution((Fraction(1, 2), Fraction(1, 3)))


def test_one_state_chain():
    k = validate_kernel([[1]])
    rule = make_independent_transitions_rule(k)
    assert exact_cftp_time_law(rule, 3) == {0: 1, 1: 0, 2: 0, 3: 0}
    assert exact_fill_report(k, reverse_kernel(k), rule, 1, 0).p_accept == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_pi_average_identity_property(seed, t):
    (kernel, rule), = random_chains(1, seed=seed)
    assert pi_average_check(kernel, reverse_kernel(kernel), rule, t)[2]
