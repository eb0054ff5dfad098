"""Transition rules: deterministic update maps driven by random tokens.

A rule realises a kernel as ``K(x, y) = mu{u : phi(x, u) = y}``.  Three driver
shapes are supported:

* ``"table"``: a full destination table ``u`` with ``phi(x, u) = u[x]``;
* ``"unit-interval"``: a real ``u`` in [0, 1) fed to an inverse CDF;
* ``"finite-atom"``: an integer index into a finite list of maps.

Besides forward application every rule can *impute* a driver, i.e. draw from
the conditional law of ``U`` given ``phi(x_prev, U) = x_next``.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .chain import STOCHASTIC_TOL, DiscreteKernel, StateSpace, to_fraction
from .errors import (
    BadWeights,
    DriverMismatch,
    EnumerationTooLarge,
    ImpossibleTransition,
    IrrationalEntries,
    KernelMismatch,
    NoOrder,
)

ENUMERATION_CAP = 10**6

TABLE = "table"
UNIT = "unit-interval"
ATOM = "finite-atom"


class TransitionRule:
    """Base class.  Subclasses implement ``map``, the samplers and enumeration."""

    kind: str
    space: StateSpace
    name: str = "rule"

    @property
    def n(self) -> int:
        return self.space.size

    def map(self, state: int, driver) -> int:  # unchecked fast path
        raise NotImplementedError

    def check_driver(self, driver) -> None:
        raise NotImplementedError

    def apply(self, state: int, driver) -> int:
        if not 0 <= state < self.n:
            raise IndexError(f"state {state} out of range")
        self.check_driver(driver)
        return self.map(state, driver)

    def sample_driver(self, rng):
        raise NotImplementedError

    def impute_driver(self, x_prev: int, x_next: int, rng):
        raise NotImplementedError

    @property
    def enumerable(self) -> bool:
        return False

    def atoms(self) -> list[tuple[object, Fraction]]:
        raise IrrationalEntries(f"{self.name} rule has no exact enumeration")

    def conditional_atoms(self, x_prev: int, x_next: int) -> list[tuple[object, Fraction]]:
        raise IrrationalEntries(f"{self.name} rule has no exact enumeration")

    def driver_to_json(self, driver):
        return list(driver) if isinstance(driver, tuple) else driver

    def induced_kernel_exact(self) -> tuple[tuple[Fraction, ...], ...]:
        n = self.n
        rows = [[Fraction(0)] * n for _ in range(n)]
        for u, p in self.atoms():
            for x in range(n):
                rows[x][self.map(x, u)] += p
        return tuple(tuple(r) for r in rows)


def _require(kernel: DiscreteKernel, x_prev: int, x_next: int):
    if kernel.matrix[x_prev, x_next] <= 0:
        raise ImpossibleTransition(f"K({x_prev}, {x_next}) = 0")


class IndependentRule(TransitionRule):
    """Destination table with independent rows ``u[x] ~ K(x, .)``."""

    kind = TABLE
    name = "independent"

    def __init__(self, kernel: DiscreteKernel, cap: int = ENUMERATION_CAP):
        self.kernel = kernel
        self.space = kernel.space
        self.cap = cap
        self.supports = tuple(tuple(int(y) for y in np.flatnonzero(row > 0)) for row in kernel.matrix)
        self.size = math.prod(len(s) for s in self.supports)

    def map(self, state, driver):
        return driver[state]

    def check_driver(self, driver):
        if not isinstance(driver, tuple) or len(driver) != self.n:
            raise DriverMismatch(f"expected a destination table of length {self.n}")
        if any(not 0 <= v < self.n for v in driver):
            raise DriverMismatch("destination out of range")

    def sample_driver(self, rng):
        step = self.kernel.step
        return tuple(step(x, rng) for x in range(self.n))

    def impute_driver(self, x_prev, x_next, rng):
        _require(self.kernel, x_prev, x_next)
        step = self.kernel.step
        return tuple(x_next if x == x_prev else step(x, rng) for x in range(self.n))

    @property
    def enumerable(self):
        return self.kernel.exact is not None and self.size <= self.cap

    def _check_enumerable(self, size):
        if self.kernel.exact is None:
            raise IrrationalEntries("kernel entries are not rational")
        if size > self.cap:
            raise EnumerationTooLarge(f"{size} driver atoms exceed cap {self.cap}")

    def atoms(self):
        self._check_enumerable(self.size)
        E = self.kernel.exact
        out = []
        for table in itertools.product(*self.supports):
            p = Fraction(1)
            for x, y in enumerate(table):
                p *= E[x][y]
            out.append((table, p))
        return out

    def conditional_atoms(self, x_prev, x_next):
        _require(self.kernel, x_prev, x_next)
        self._check_enumerable(self.size // len(self.supports[x_prev]))
        E = self.kernel.exact
        supports = [((x_next,) if x == x_prev else s) for x, s in enumerate(self.supports)]
        out = []
        for table in itertools.product(*supports):
            p = Fraction(1)
            for x, y in enumerate(table):
                if x != x_prev:
                    p *= E[x][y]
            out.append((table, p))
        return out


class InverseCdfRule(TransitionRule):
    """``phi(x, u)`` = first state y (in ``ordering``) whose cumulative mass exceeds u.

    Each destination owns the half-open segment ``[F(x, y-), F(x, y))``.
    """

    kind = UNIT
    name = "inverse-cdf"

    def __init__(self, kernel: DiscreteKernel, ordering: Optional[Sequence[int]] = None):
        n = kernel.n
        ordering = tuple(range(n)) if ordering is None else tuple(int(v) for v in ordering)
        if sorted(ordering) != list(range(n)):
            raise ValueError("ordering must be a permutation of the states")
        self.kernel = kernel
        self.space = kernel.space
        self.ordering = ordering
        K = kernel.matrix
        cum = []
        for x in range(n):
            c = np.cumsum([K[x, y] for y in ordering])
            last = max(i for i, y in enumerate(ordering) if K[x, y] > 0)
            c[last:] = 1.0
            cum.append(c.tolist())
        self.cum = tuple(cum)
        self.exact_cum = None
        if kernel.exact is not None:
            E = kernel.exact
            self.exact_cum = tuple(
                tuple(itertools.accumulate(E[x][y] for y in ordering)) for x in range(n)
            )

    def map(self, state, driver):
        if isinstance(driver, Fraction):
            i = bisect_right(self.exact_cum[state], driver)
        else:
            i = bisect_right(self.cum[state], driver)
        return self.ordering[min(i, self.n - 1)]

    def check_driver(self, driver):
        if isinstance(driver, bool) or not isinstance(driver, (float, Fraction, int)):
            raise DriverMismatch("expected a real driver in [0, 1)")
        if not 0 <= driver < 1:
            raise DriverMismatch("driver must lie in [0, 1)")
        if isinstance(driver, Fraction) and self.exact_cum is None:
            raise DriverMismatch("rational drivers need a rational kernel")

    def sample_driver(self, rng):
        return rng.random()

    def segment(self, x_prev: int, x_next: int, exact: bool = False):
        cum = self.exact_cum if exact else self.cum
        if exact and cum is None:
            raise IrrationalEntries("kernel entries are not rational")
        i = self.ordering.index(x_next)
        lo = cum[x_prev][i - 1] if i > 0 else (Fraction(0) if exact else 0.0)
        return lo, cum[x_prev][i]

    def impute_driver(self, x_prev, x_next, rng):
        _require(self.kernel, x_prev, x_next)
        lo, hi = self.segment(x_prev, x_next)
        u = lo + (hi - lo) * rng.random()
        return u if u < hi else lo

    def breakpoints(self) -> list[Fraction]:
        if self.exact_cum is None:
            raise IrrationalEntries("kernel entries are not rational")
        pts = {Fraction(0), Fraction(1)}
        for row in self.exact_cum:
            pts.update(row)
        return sorted(p for p in pts if 0 <= p <= 1)

    def _intervals(self):
        pts = self.breakpoints()
        return list(zip(pts[:-1], pts[1:]))

    @property
    def enumerable(self):
        return self.exact_cum is not None

    def atoms(self):
        return [((a + b) / 2, b - a) for a, b in self._intervals()]

    def conditional_atoms(self, x_prev, x_next):
        _require(self.kernel, x_prev, x_next)
        lo, hi = self.segment(x_prev, x_next, exact=True)
        mass = hi - lo
        return [((a + b) / 2, (b - a) / mass) for a, b in self._intervals() if lo <= a and b <= hi]

    def to_table_rule(self) -> "TableRule":
        """Finite-atom rule with one atom per constant piece of ``phi``."""
        atoms = [(p, [self.map(x, u) for x in range(self.n)]) for u, p in self.atoms()]
        return TableRule(atoms, kernel=self.kernel, space=self.space)

    def stochastically_monotone(self) -> bool:
        """Adjacent rows (in ``ordering``) have pointwise nonincreasing CDFs."""
        rows = [self.cum[x] for x in self.ordering]
        return all(
            all(b <= a + STOCHASTIC_TOL for a, b in zip(lo, hi)) for lo, hi in zip(rows, rows[1:])
        )


class TableRule(TransitionRule):
    """Finite list of (probability, full state map) atoms; drivers are atom indices."""

    kind = ATOM
    name = "table"

    def __init__(self, atoms, kernel: Optional[DiscreteKernel] = None, space: Optional[StateSpace] = None):
        parsed = []
        for atom in atoms:
            if isinstance(atom, dict):
                p, m = atom["p"], atom["map"]
            else:
                p, m = atom
            parsed.append((p, tuple(int(v) for v in m)))
        if not parsed:
            raise BadWeights("rule needs at least one atom")
        n = len(parsed[0][1])
        if space is None:
            space = kernel.space if kernel is not None else StateSpace(n)
        self.space = space
        self.kernel = kernel
        if any(len(m) != space.size or any(not 0 <= v < space.size for v in m) for _, m in parsed):
            raise BadWeights("every map must be total on the state space")
        floats = np.array([float(Fraction(p)) if isinstance(p, str) else float(p) for p, _ in parsed])
        if np.any(floats < 0) or abs(floats.sum() - 1.0) > STOCHASTIC_TOL:
            raise BadWeights("atom probabilities must be nonnegative and sum to 1")
        exact = [to_fraction(p) for p, _ in parsed]
        self.exact_weights = tuple(exact) if all(q is not None for q in exact) and sum(exact) == 1 else None
        self.weights = tuple(floats.tolist())
        self.maps = tuple(m for _, m in parsed)
        self._cum = _cum_list(self.weights)

        n = space.size
        induced = np.zeros((n, n))
        for w, m in zip(self.weights, self.maps):
            for x in range(n):
                induced[x, m[x]] += w
        self.induced = induced
        if kernel is not None:
            if kernel.n != n:
                raise KernelMismatch("rule and kernel have different state spaces")
            if kernel.exact is not None and self.exact_weights is not None:
                ok = self.induced_kernel_exact() == kernel.exact
            else:
                ok = np.max(np.abs(induced - kernel.matrix)) <= STOCHASTIC_TOL
            if not ok:
                raise KernelMismatch("rule does not induce the supplied kernel")

        self._cond = {}
        for x in range(n):
            for u, m in enumerate(self.maps):
                if self.weights[u] > 0:
                    self._cond.setdefault((x, m[x]), []).append(u)
        self._cond_cum = {k: _cum_list([self.weights[u] for u in v]) for k, v in self._cond.items()}

    def map(self, state, driver):
        return self.maps[driver][state]

    def check_driver(self, driver):
        if isinstance(driver, bool) or not isinstance(driver, (int, np.integer)):
            raise DriverMismatch("expected an integer atom index")
        if not 0 <= driver < len(self.maps):
            raise DriverMismatch(f"atom index {driver} out of range")

    def sample_driver(self, rng):
        return _draw(self._cum, rng)

    def impute_driver(self, x_prev, x_next, rng):
        key = (x_prev, x_next)
        if key not in self._cond:
            raise ImpossibleTransition(f"no atom maps {x_prev} to {x_next}")
        return self._cond[key][_draw(self._cond_cum[key], rng)]

    @property
    def enumerable(self):
        return self.exact_weights is not None

    def atoms(self):
        if self.exact_weights is None:
            raise IrrationalEntries("atom weights are not rational")
        return [(u, p) for u, p in enumerate(self.exact_weights) if p > 0]

    def conditional_atoms(self, x_prev, x_next):
        if self.exact_weights is None:
            raise IrrationalEntries("atom weights are not rational")
        us = self._cond.get((x_prev, x_next))
        if not us:
            raise ImpossibleTransition(f"no atom maps {x_prev} to {x_next}")
        total = sum(self.exact_weights[u] for u in us)
        return [(u, self.exact_weights[u] / total) for u in us]


def _cum_list(weights) -> tuple[list[float], int]:
    last = max(i for i, w in enumerate(weights) if w > 0)
    return list(itertools.accumulate(weights)), last


def _draw(cum, rng) -> int:
    acc, last = cum
    return min(bisect_right(acc, rng.random() * acc[-1]), last)


def make_independent_transitions_rule(kernel: DiscreteKernel, cap: int = ENUMERATION_CAP) -> IndependentRule:
    return IndependentRule(kernel, cap)


def make_inverse_cdf_rule(kernel: DiscreteKernel, ordering=None) -> InverseCdfRule:
    return InverseCdfRule(kernel, ordering)


def make_table_rule(atoms, kernel: Optional[DiscreteKernel] = None, space: Optional[StateSpace] = None) -> TableRule:
    return TableRule(atoms, kernel=kernel, space=space)


def is_monotone(rule: TransitionRule, space: Optional[StateSpace] = None) -> Optional[bool]:
    """True/False when decidable, None when the driver space cannot be scanned.

    Enumerable rules are checked atom by atom.  An inverse-CDF rule over a
    kernel without rational entries certifies itself when the order is the
    linear order it was built with (monotone iff stochastically monotone).
    """
    space = space or rule.space
    if not space.ordered:
        raise NoOrder("state space carries no partial order")
    n = space.size
    pairs = [(x, y) for x in range(n) for y in range(n) if x != y and space.le(x, y)]
    if rule.enumerable:
        try:
            drivers = [u for u, _ in rule.atoms()]
        except EnumerationTooLarge:
            drivers = None
        if drivers is not None:
            return all(space.le(rule.map(x, u), rule.map(y, u)) for u in drivers for x, y in pairs)
    if isinstance(rule, InverseCdfRule):
        chain_order = all(space.le(a, b) for a, b in zip(rule.ordering, rule.ordering[1:]))
        comparable = all(space.le(x, y) or space.le(y, x) for x in range(n) for y in range(n))
        if chain_order and comparable:
            return rule.stochastically_monotone()
    return None
