import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perfect_sampling.chain import (
    StateSpace,
    reverse_kernel,
    solve_stationary,
    solve_stationary_exact,
    step_backward,
    to_fraction,
    validate_kernel,
)
from perfect_sampling.errors import NonStochasticRow, NoUniqueStationary, NotStationary, ZeroMassState


def test_two_state_stationary():
    k = validate_kernel([[0.9, 0.1], [0.3, 0.7]])
    assert np.allclose(k.pi, [0.75, 0.25], atol=1e-12)
    assert k.exact_pi == (Fraction(3, 4), Fraction(1, 4))


def test_rational_strings_are_exact():
    k = validate_kernel([["1/2", "1/2"], ["1/3", "2/3"]])
    assert k.exact[1] == (Fraction(1, 3), Fraction(2, 3))
    assert k.exact_pi == (Fraction(2, 5), Fraction(3, 5))


def test_to_fraction_rejects_irrational_looking_floats():
    assert to_fraction(0.25) == Fraction(1, 4)
    assert to_fraction("7/9") == Fraction(7, 9)
    assert to_fraction(float(np.pi) / 10) is None


def test_bad_rows_raise():
    with pytest.raises(NonStochasticRow):
        validate_kernel([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(NonStochasticRow):
        validate_kernel([[1.2, -0.2], [0.5, 0.5]])


def test_supplied_pi_must_be_stationary():
    with pytest.raises(NotStationary):
        validate_kernel([[0.9, 0.1], [0.3, 0.7]], pi=[0.5, 0.5])


def test_two_closed_classes():
    with pytest.raises(NoUniqueStationary):
        solve_stationary(np.eye(3))
    with pytest.raises(NoUniqueStationary):
        solve_stationary_exact(((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))))


def test_transient_state_has_zero_mass():
    k = validate_kernel([[0, "1/2", "1/2"], [0, "1/2", "1/2"], [0, "1/2", "1/2"]])
    assert k.exact_pi == (0, Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(ZeroMassState):
        reverse_kernel(k)
    rev = reverse_kernel(k, strict=False)
    assert np.allclose(rev.matrix.sum(axis=1), 1)


def test_step_backward_frequency():
    k = validate_kernel([[0.9, 0.1], [0.3, 0.7]])
    rev = reverse_kernel(k)
    # K~(1, 0) = pi(0) K(0, 1) / pi(1) = 0.75 * 0.1 / 0.25
    assert rev.matrix[1, 0] == pytest.approx(0.3)
    rng = random.Random(11)
    n = 10**6
    hits = sum(step_backward(rev, 1, rng) == 0 for _ in range(n))
    assert abs(hits / n - 0.3) < 0.005


def test_forward_step_frequencies(toy):
    rng = random.Random(3)
    counts = np.zeros((3, 3))
    for x in range(3):
        for _ in range(20_000):
            counts[x, toy.kernel.step(x, rng)] += 1
    freq = counts / counts.sum(axis=1, keepdims=True)
    assert np.allclose(freq, toy.kernel.matrix, atol=0.015)


def test_state_space_orders():
    lin = StateSpace.linear(4)
    assert (lin.bottom, lin.top) == (0, 3)
    diamond = StateSpace.from_pairs(4, [(0, 1), (0, 2), (1, 3), (2, 3)])
    assert diamond.le(0, 3) and not diamond.le(1, 2)
    assert (diamond.bottom, diamond.top) == (0, 3)
    anti = StateSpace.from_predicate(3, lambda x, y: x == y)
    assert anti.bottom is None and anti.top is None
    with pytest.raises(ValueError):
        StateSpace.from_pairs(2, [(0, 1), (1, 0)])


@st.composite
def positive_matrices(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    rows = [
        draw(st.lists(st.integers(1, 9), min_size=n, max_size=n))
        for _ in range(n)
    ]
    return [[Fraction(v, sum(r)) for v in r] for r in rows]


@settings(max_examples=60, deadline=None)
@given(positive_matrices())
def test_reverse_of_reverse_is_kernel(rows):
    k = validate_kernel(rows)
    rev = reverse_kernel(k)
    assert np.allclose(rev.matrix.sum(axis=1), 1)
    # pi(x) K(x, y) = pi(y) K~(y, x)
    flow = k.pi[:, None] * k.matrix
    assert np.allclose(flow, (k.pi[:, None] * rev.matrix).T, atol=1e-12)
    back = reverse_kernel(validate_kernel(rev.exact))
    assert back.exact == k.exact


@settings(max_examples=60, deadline=None)
@given(positive_matrices())
def test_exact_pi_matches_float_solve(rows):
    k = validate_kernel(rows)
    assert sum(k.exact_pi) == 1
    assert np.allclose([float(q) for q in k.exact_pi], k.pi, atol=1e-9)


def test_reversal_examples(toy):
    assert reverse_kernel(toy.kernel).exact == toy.kernel.exact
    ident = validate_kernel([[1, 0, 0], [0, 1, 0], [0, 0, 1]], pi=["1/3", "1/3", "1/3"])
    assert np.array_equal(reverse_kernel(ident).matrix, np.eye(3))
    k = validate_kernel([[0.9, 0.1], [0.3, 0.7]], pi=[0.75, 0.25])
    assert np.allclose(reverse_kernel(k).matrix, k.matrix)
