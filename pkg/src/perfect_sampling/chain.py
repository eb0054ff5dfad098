"""Finite-state Markov kernels, stationary distributions and time reversal."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NonStochasticRow, NoUniqueStationary, NotStationary, ZeroMassState

STOCHASTIC_TOL = 1e-12
STATIONARY_TOL = 1e-9
MAX_DENOMINATOR = 10**6
DENSE_SOLVE_LIMIT = 2000


def to_fraction(value) -> Optional[Fraction]:
    """Exact rational for ``value`` or None when it has no small-denominator form.

    Strings ("1/3", "0.25") and ints are exact by construction; floats are
    accepted when some p/q with q <= 10**6 rounds to exactly the same float.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    x = float(value)
    if not np.isfinite(x):
        return None
    frac = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    return frac if float(frac) == x else None


def _parse(value) -> tuple[float, Optional[Fraction]]:
    if isinstance(value, str):
        frac = Fraction(value.strip())
        return float(frac), frac
    return float(value), to_fraction(value)


def _exact_rows(rows) -> Optional[tuple[tuple[Fraction, ...], ...]]:
    if any(v is None for row in rows for v in row):
        return None
    return tuple(tuple(row) for row in rows)


@dataclass(frozen=True)
class StateSpace:
    """States ``0..size-1`` with optional labels and partial order.

    ``leq[x][y]`` is True iff x <= y.  Bottom and top are detected from the
    order when not given.
    """

    size: int
    labels: Optional[tuple] = None
    leq: Optional[tuple[tuple[bool, ...], ...]] = None
    bottom: Optional[int] = None
    top: Optional[int] = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("state space must be nonempty")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("labels must have one entry per state")
        if self.leq is None:
            if self.bottom is not None or self.top is not None:
                raise ValueError("bottom/top need a partial order")
            return
        n = self.size
        le = self.leq
        for x in range(n):
            if not le[x][x]:
                raise ValueError("partial order is not reflexive")
            for y in range(n):
                if x != y and le[x][y] and le[y][x]:
                    raise ValueError("partial order is not antisymmetric")
                for z in range(n):
                    if le[x][y] and le[y][z] and not le[x][z]:
                        raise ValueError("partial order is not transitive")
        if self.bottom is None:
            lows = [b for b in range(n) if all(le[b][x] for x in range(n))]
            object.__setattr__(self, "bottom", lows[0] if lows else None)
        elif not all(le[self.bottom][x] for x in range(n)):
            raise ValueError("bottom is not below every state")
        if self.top is None:
            highs = [t for t in range(n) if all(le[x][t] for x in range(n))]
            object.__setattr__(self, "top", highs[0] if highs else None)
        elif not all(le[x][self.top] for x in range(n)):
            raise ValueError("top is not above every state")

    @classmethod
    def linear(cls, size: int, labels=None) -> "StateSpace":
        leq = tuple(tuple(x <= y for y in range(size)) for x in range(size))
        return cls(size, labels=labels, leq=leq)

    @classmethod
    def from_pairs(cls, size: int, pairs, labels=None) -> "StateSpace":
        """Order generated (reflexive-transitive closure) by pairs ``a <= b``."""
        le = np.eye(size, dtype=bool)
        for a, b in pairs:
            le[a, b] = True
        for k in range(size):
            le |= le[:, [k]] & le[[k], :]
        return cls(size, labels=labels, leq=tuple(tuple(map(bool, r)) for r in le))

    @classmethod
    def from_predicate(cls, size: int, le: Callable[[int, int], bool], labels=None):
        leq = tuple(tuple(bool(le(x, y)) for y in range(size)) for x in range(size))
        return cls(size, labels=labels, leq=leq)

    @property
    def ordered(self) -> bool:
        return self.leq is not None

    def le(self, x: int, y: int) -> bool:
        return self.leq[x][y]

    def label(self, x: int):
        return x if self.labels is None else self.labels[x]


def probability_vector(weights) -> np.ndarray:
    w = np.array([_parse(v)[0] for v in weights], dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > STOCHASTIC_TOL:
        raise ValueError("weights must be nonnegative and sum to 1")
    return w


def _cumulative(matrix: np.ndarray) -> tuple[list[float], ...]:
    rows = []
    for row in matrix:
        cum = np.cumsum(row)
        last = int(np.flatnonzero(row > 0)[-1])
        cum[last:] = 1.0
        rows.append(cum.tolist())
    return tuple(rows)


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Row-stochastic matrix with its stationary distribution.

    ``exact`` / ``exact_pi`` hold rational copies when every entry is
    rational; the enumeration oracle requires them.
    """

    matrix: np.ndarray
    pi: np.ndarray
    space: StateSpace
    exact: Optional[tuple[tuple[Fraction, ...], ...]] = None
    exact_pi: Optional[tuple[Fraction, ...]] = None
    cum: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)
        self.pi.setflags(write=False)
        object.__setattr__(self, "cum", _cumulative(self.matrix))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def step(self, state: int, rng) -> int:
        return bisect_right(self.cum[state], rng.random())


class ReversedKernel(DiscreteKernel):
    """Time reversal of a kernel with respect to its stationary distribution."""


def _check_rows(matrix: np.ndarray):
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise ValueError("kernel must be a nonempty square matrix")
    if np.any(matrix < 0):
        raise NonStochasticRow("negative entry")
    dev = np.abs(matrix.sum(axis=1) - 1.0)
    if np.any(dev > STOCHASTIC_TOL):
        raise NonStochasticRow(f"row {int(np.argmax(dev))} sums to {matrix.sum(axis=1)[np.argmax(dev)]!r}")


def validate_kernel(matrix, pi=None, space: Optional[StateSpace] = None, strict_exact=False) -> DiscreteKernel:
    parsed = [[_parse(v) for v in row] for row in matrix]
    K = np.array([[f for f, _ in row] for row in parsed], dtype=float)
    _check_rows(K)
    n = K.shape[0]
    exact = _exact_rows([[q for _, q in row] for row in parsed])
    if exact is not None and any(sum(row) != 1 for row in exact):
        exact = None
    if space is None:
        space = StateSpace(n)
    elif space.size != n:
        raise ValueError("state space size does not match the matrix")

    exact_pi = None
    if pi is not None:
        pparsed = [_parse(v) for v in pi]
        p = np.array([f for f, _ in pparsed], dtype=float)
        if len(p) != n or np.any(p < 0) or abs(p.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError("pi must be a probability vector of length n")
        if np.max(np.abs(p @ K - p)) > STATIONARY_TOL:
            raise NotStationary("supplied pi does not satisfy pi K = pi")
        qs = [q for _, q in pparsed]
        if exact is not None and all(q is not None for q in qs) and _exact_fixed_point(exact, qs):
            exact_pi = tuple(qs)
    else:
        p = solve_stationary(K)
    if exact is not None and exact_pi is None and n <= 200:
        try:
            exact_pi = solve_stationary_exact(exact)
        except NoUniqueStationary:
            exact_pi = None
        if exact_pi is not None and np.max(np.abs(np.array([float(q) for q in exact_pi]) - p)) > STATIONARY_TOL:
            exact_pi = None
    return DiscreteKernel(K, p, space, exact, exact_pi)


def _exact_fixed_point(exact, pi) -> bool:
    n = len(exact)
    if sum(pi) != 1:
        return False
    return all(sum(pi[x] * exact[x][y] for x in range(n)) == pi[y] for y in range(n))


def _closed_classes(K: np.ndarray) -> int:
    graph = csr_matrix(K > 0)
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    closed = np.ones(ncomp, dtype=bool)
    rows, cols = graph.nonzero()
    leaving = labels[rows] != labels[cols]
    closed[labels[rows[leaving]]] = False
    return int(closed.sum())


def solve_stationary(matrix) -> np.ndarray:
    K = np.asarray(matrix, dtype=float)
    _check_rows(K)
    if _closed_classes(K) != 1:
        raise NoUniqueStationary("chain has more than one recurrent class")
    n = K.shape[0]
    if n <= DENSE_SOLVE_LIMIT:
        A = np.vstack([K.T - np.eye(n), np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        pi = np.linalg.lstsq(A, b, rcond=None)[0]
    else:
        pi = _power_iteration(K)
    pi = np.where(pi < 0, 0.0, pi)
    pi /= pi.sum()
    if np.max(np.abs(pi @ K - pi)) > STATIONARY_TOL:
        raise NoUniqueStationary("stationary solve did not converge")
    return pi


def _power_iteration(K: np.ndarray, tol=1e-12, max_iter=10**6) -> np.ndarray:
    n = K.shape[0]
    lazy = 0.5 * (K + np.eye(n))
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    raise NoUniqueStationary("power iteration did not converge")


def solve_stationary_exact(exact) -> tuple[Fraction, ...]:
    """Rational solution of pi K = pi, sum(pi) = 1 by Gauss-Jordan elimination."""
    n = len(exact)
    # rows: (K^T - I) pi = 0, then the normalisation row
    rows = [[exact[x][y] - (1 if x == y else 0) for x in range(n)] + [Fraction(0)] for y in range(n)]
    rows.append([Fraction(1)] * n + [Fraction(1)])
    pivot_row = 0
    pivots = []
    for col in range(n):
        piv = next((r for r in range(pivot_row, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[pivot_row], rows[piv] = rows[piv], rows[pivot_row]
        lead = rows[pivot_row][col]
        rows[pivot_row] = [v / lead for v in rows[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[pivot_row])]
        pivots.append(col)
        pivot_row += 1
    if len(pivots) != n or any(row[-1] != 0 for row in rows[n:]):
        raise NoUniqueStationary("stationary distribution is not unique")
    return tuple(rows[i][-1] for i in range(n))


def reverse_kernel(kernel: DiscreteKernel, strict: bool = True) -> ReversedKernel:
    """K~(y, x) = pi(x) K(x, y) / pi(y).

    Rows of zero-mass states raise ZeroMassState unless ``strict`` is off,
    in which case they are set to uniform (such states are never visited
    from a pi-distributed start).
    """
    K, pi = kernel.matrix, kernel.pi
    n = kernel.n
    zero = pi <= 0
    if strict and np.any(zero):
        raise ZeroMassState(f"states {np.flatnonzero(zero).tolist()} have zero stationary mass")
    with np.errstate(divide="ignore", invalid="ignore"):
        R = (pi[:, None] * K).T / pi[:, None]
    R[zero] = 1.0 / n
    R = R / R.sum(axis=1, keepdims=True)
    exact = None
    if kernel.exact is not None and kernel.exact_pi is not None:
        P, E = kernel.exact_pi, kernel.exact
        exact = tuple(
            tuple(P[x] * E[x][y] / P[y] if P[y] else Fraction(1, n) for x in range(n))
            for y in range(n)
        )
    return ReversedKernel(R, pi.copy(), kernel.space, exact, kernel.exact_pi)


def step_backward(rev: ReversedKernel, state: int, rng) -> int:
    if not 0 <= state < rev.n:
        raise IndexError(f"state {state} out of range")
    return bisect_right(rev.cum[state], rng.random())


def sample_state(weights: Sequence[float], rng) -> int:
    """Draw an index from a probability vector (used for seed distributions)."""
    u = rng.random()
    acc = 0.0
    last = 0
    for i, w in enumerate(weights):
        if w > 0:
            acc += w
            last = i
            if u < acc:
                return i
    return last
