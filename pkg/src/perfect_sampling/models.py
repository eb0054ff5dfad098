"""Canonical chains: the three-state toy walk, walks on {0..n}, birth-death chains, MTF."""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction
from itertools import accumulate, permutations
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .chain import STOCHASTIC_TOL, DiscreteKernel, StateSpace, to_fraction, validate_kernel
from .coalescence import DetectionProcess
from .errors import DriverMismatch, ImpossibleTransition, IrrationalEntries
from .rules import ATOM, InverseCdfRule, IndependentRule, TableRule, TransitionRule

HALF = Fraction(1, 2)


class ToyChain(NamedTuple):
    kernel: DiscreteKernel
    monotone: TableRule
    independent: IndependentRule


def random_walk_chain(n: int) -> tuple[DiscreteKernel, TableRule]:
    """Symmetric walk on ``{0..n}`` holding with probability 1/2 at the ends.

    Atom 0 steps down (0 stays), atom 1 steps up (n stays); both have mass 1/2.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    size = n + 1
    rows = [[Fraction(0)] * size for _ in range(size)]
    for x in range(size):
        rows[x][max(x - 1, 0)] += HALF
        rows[x][min(x + 1, n)] += HALF
    kernel = validate_kernel(rows, pi=[Fraction(1, size)] * size, space=StateSpace.linear(size))
    down = [max(x - 1, 0) for x in range(size)]
    up = [min(x + 1, n) for x in range(size)]
    return kernel, TableRule([(HALF, down), (HALF, up)], kernel=kernel)


def toy_chain() -> ToyChain:
    kernel, monotone = random_walk_chain(2)
    return ToyChain(kernel, monotone, IndependentRule(kernel))


def birth_death_chain(up: Sequence, down: Sequence) -> tuple[DiscreteKernel, InverseCdfRule]:
    """Chain on ``{0..n}`` moving up w.p. ``up[x]``, down w.p. ``down[x]``, else holding.

    Returned with its inverse-CDF rule under the natural order, which is
    monotone whenever the kernel is stochastically monotone.
    """
    size = len(up)
    if len(down) != size or size < 1:
        raise ValueError("up and down must have equal nonzero length")
    q_up = [to_fraction(v) for v in up]
    q_down = [to_fraction(v) for v in down]
    exact = all(v is not None for v in q_up + q_down)
    zero = Fraction(0) if exact else 0.0
    ups = q_up if exact else [float(v) for v in up]
    downs = q_down if exact else [float(v) for v in down]
    rows = []
    for x in range(size):
        row = [zero] * size
        if x + 1 < size:
            row[x + 1] += ups[x]
        if x > 0:
            row[x - 1] += downs[x]
        row[x] += 1 - sum(row)
        rows.append(row)
    kernel = validate_kernel(rows, space=StateSpace.linear(size))
    return kernel, InverseCdfRule(kernel)


# move-to-front -------------------------------------------------------------


def _rank(perm: Sequence[int]) -> int:
    """Lexicographic rank of a permutation of 1..n."""
    n = len(perm)
    rest = sorted(perm)
    r = 0
    for i, v in enumerate(perm):
        j = rest.index(v)
        r += j * math.factorial(n - 1 - i)
        rest.pop(j)
    return r


def _unrank(r: int, n: int) -> tuple[int, ...]:
    rest = list(range(1, n + 1))
    out = []
    for i in range(n, 0, -1):
        j, r = divmod(r, math.factorial(i - 1))
        out.append(rest.pop(j))
    return tuple(out)


def move_to_front(perm: tuple[int, ...], record: int) -> tuple[int, ...]:
    return (record,) + tuple(v for v in perm if v != record)


class MtfRule(TransitionRule):
    """Move-to-front list update.  States are ranks of list arrangements; drivers are records 1..n."""

    kind = ATOM
    name = "mtf"
    TABLE_LIMIT = 7

    def __init__(self, weights: Sequence):
        n = len(weights)
        w = np.array([float(Fraction(v)) if isinstance(v, str) else float(v) for v in weights])
        if n < 1 or np.any(w <= 0) or abs(w.sum() - 1) > STOCHASTIC_TOL:
            raise ValueError("request weights must be positive and sum to 1")
        self.records = n
        self.weights = tuple(w.tolist())
        q = [to_fraction(v) for v in weights]
        self.exact_weights = tuple(q) if all(v is not None for v in q) and sum(q) == 1 else None
        self._cum = list(accumulate(self.weights))
        size = math.factorial(n)
        labels = tuple(permutations(range(1, n + 1))) if n <= self.TABLE_LIMIT else None
        self.space = StateSpace(size, labels=labels)
        self._table = None
        if labels is not None:
            self._table = tuple(
                tuple(_rank(move_to_front(p, r)) for p in labels) for r in range(1, n + 1)
            )

    def arrangement(self, state: int) -> tuple[int, ...]:
        return self.space.labels[state] if self.space.labels else _unrank(state, self.records)

    def rank(self, arrangement: Sequence[int]) -> int:
        return _rank(arrangement)

    def map(self, state, driver):
        if self._table is not None:
            return self._table[driver - 1][state]
        return _rank(move_to_front(_unrank(state, self.records), driver))

    def check_driver(self, driver):
        if isinstance(driver, bool) or not isinstance(driver, (int, np.integer)):
            raise DriverMismatch("expected a record number")
        if not 1 <= driver <= self.records:
            raise DriverMismatch(f"record {driver} out of range")

    def sample_driver(self, rng):
        return min(bisect_right(self._cum, rng.random() * self._cum[-1]), self.records - 1) + 1

    def _preimage(self, x_prev, x_next):
        before, after = self.arrangement(x_prev), self.arrangement(x_next)
        rec = after[0]
        if move_to_front(before, rec) != after:
            raise ImpossibleTransition(f"no request turns {before} into {after}")
        return rec

    def impute_driver(self, x_prev, x_next, rng):
        # at most one record can produce a given arrangement
        return self._preimage(x_prev, x_next)

    @property
    def enumerable(self):
        return self.exact_weights is not None

    def atoms(self):
        if self.exact_weights is None:
            raise IrrationalEntries("request weights are not rational")
        return [(r, p) for r, p in enumerate(self.exact_weights, start=1)]

    def conditional_atoms(self, x_prev, x_next):
        if self.exact_weights is None:
            raise IrrationalEntries("request weights are not rational")
        return [(self._preimage(x_prev, x_next), Fraction(1))]

    def kernel(self) -> DiscreteKernel:
        """Explicit kernel over all n! arrangements (small n only)."""
        if self._table is None:
            raise ValueError("explicit kernel only for small record counts")
        size = self.space.size
        weights = self.exact_weights or self.weights
        zero = Fraction(0) if self.exact_weights else 0.0
        rows = [[zero] * size for _ in range(size)]
        for r, w in enumerate(weights, start=1):
            for x in range(size):
                rows[x][self.map(x, r)] += w
        return validate_kernel(rows, pi=mtf_stationary(weights), space=self.space)


def mtf_stationary(weights: Sequence) -> list:
    """Stationary law of MTF: records appear in order of sampling without replacement."""
    n = len(weights)
    out = []
    for perm in permutations(range(1, n + 1)):
        p = 1
        remaining = sum(weights)
        for r in perm:
            w = weights[r - 1]
            p = p * w / remaining
            remaining -= w
        out.append(p)
    return out


def mtf_detection_process(n: int) -> DetectionProcess:
    """Set of records requested so far; certifies coalescence once it has n-1 members."""

    def step(seen, record):
        return seen | {record}

    def target(seen):
        return len(seen) >= n - 1

    return DetectionProcess("mtf-requested", frozenset(), step, target)


def mtf_process(weights: Sequence) -> tuple[MtfRule, DetectionProcess]:
    rule = MtfRule(weights)
    tracker = mtf_detection_process(rule.records)
    return rule, DetectionProcess(tracker.name, tracker.initial, tracker.step, tracker.is_target, rule.check_driver)
