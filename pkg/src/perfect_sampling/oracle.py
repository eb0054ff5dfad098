"""Exact enumeration in rational arithmetic.

Nothing here simulates.  Backward paths are enumerated with their exact
reversed-kernel weights, and for every path each imputed-driver assignment
is enumerated with its exact conditional weight.  The detection process is
then run deterministically.  These routines are the ground truth that the
samplers are tested against.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .chain import DiscreteKernel, ReversedKernel
from .coalescence import DetectionProcess, full_tracking_process
from .errors import EnumerationTooLarge, IrrationalEntries
from .rules import TransitionRule

ORACLE_CAP = 10**7


def q2s(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class ExactDistribution:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.weights) != 1:
            raise ValueError("exact distribution must sum to 1")

    def __getitem__(self, x: int) -> Fraction:
        return self.weights[x]

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        if isinstance(other, ExactDistribution):
            return self.weights == other.weights
        return tuple(self.weights) == tuple(other)

    def to_json(self) -> list[str]:
        return [q2s(w) for w in self.weights]


@dataclass(frozen=True)
class AcceptanceReport:
    p_accept: Fraction
    conditional_output: Optional[ExactDistribution]
    outcome_count: int

    def to_dict(self) -> dict:
        return {
            "p_accept": q2s(self.p_accept),
            "conditional": None if self.conditional_output is None else self.conditional_output.to_json(),
            "outcome_count": self.outcome_count,
        }


def _exact_pi(kernel: DiscreteKernel) -> tuple[Fraction, ...]:
    if kernel.exact is None or kernel.exact_pi is None:
        raise IrrationalEntries("oracle needs a kernel with rational entries and rational pi")
    return kernel.exact_pi


def _exact_rev(rev: ReversedKernel):
    if rev.exact is None:
        raise IrrationalEntries("oracle needs a rational reversed kernel")
    return rev.exact


def _backward_paths(R, z: int, t: int):
    """Yield (path, weight) with path[0..t], path[t] = z, weighted by the reversed kernel."""
    n = len(R)

    def rec(path, w):
        if len(path) == t + 1:
            yield path[::-1], w
            return
        x = path[-1]
        for y in range(n):
            r = R[x][y]
            if r:
                yield from rec(path + [y], w * r)

    yield from rec([z], Fraction(1))


def _detect_prob(tracker: DetectionProcess, steps) -> Fraction:
    """P(detection by the end) when step s has driver law ``steps[s]`` (list of (u, q))."""
    d0 = tracker.initial
    dist = {(d0, tracker.is_target(d0)): Fraction(1)}
    step, target = tracker.step, tracker.is_target
    for atoms in steps:
        new: dict = defaultdict(Fraction)
        for (d, hit), p in dist.items():
            if hit:
                new[(d, True)] += p
                continue
            for u, q in atoms:
                d2 = step(d, u)
                new[(d2, target(d2))] += p * q
        dist = new
    return sum((p for (_, hit), p in dist.items() if hit), Fraction(0))


def exact_fill_report(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    t: int,
    seed_state: int,
    tracker: Optional[DetectionProcess] = None,
    cap: int = ORACLE_CAP,
) -> AcceptanceReport:
    """Acceptance probability of one attempt from seed ``seed_state`` and the law of its output."""
    pi = _exact_pi(kernel)
    R = _exact_rev(rev)
    if pi[seed_state] == 0:
        raise ValueError("seed state has zero stationary mass")
    tracker = tracker or full_tracking_process(rule)
    accepted = [Fraction(0)] * kernel.n
    count = 0
    for path, w in _backward_paths(R, seed_state, t):
        steps = [rule.conditional_atoms(path[s - 1], path[s]) for s in range(1, t + 1)]
        size = 1
        for atoms in steps:
            size *= len(atoms)
        count += size
        if count > cap:
            raise EnumerationTooLarge(f"more than {cap} simulation outcomes")
        accepted[path[0]] += w * _detect_prob(tracker, steps)
    p = sum(accepted)
    cond = ExactDistribution(tuple(a / p for a in accepted)) if p else None
    return AcceptanceReport(p, cond, count)


def exact_forward_coalescence(
    kernel: Optional[DiscreteKernel],
    rule: TransitionRule,
    t: int,
    tracker: Optional[DetectionProcess] = None,
    cap: int = ORACLE_CAP,
) -> Fraction:
    """P(detection within t) for iid unconditioned drivers."""
    tracker = tracker or full_tracking_process(rule)
    atoms = rule.atoms()
    # detection states are merged per step, so the work is linear in t
    if len(atoms) > cap:
        raise EnumerationTooLarge(f"{len(atoms)} driver atoms exceed cap {cap}")
    return _detect_prob(tracker, [atoms] * t)


def pi_average_check(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    t: int,
    tracker: Optional[DetectionProcess] = None,
) -> tuple[Fraction, Fraction, bool]:
    """pi-average of per-seed acceptance probabilities vs forward coalescence within t."""
    pi = _exact_pi(kernel)
    lhs = Fraction(0)
    for z, w in enumerate(pi):
        if w:
            lhs += w * exact_fill_report(kernel, rev, rule, t, z, tracker=tracker).p_accept
    rhs = exact_forward_coalescence(kernel, rule, t, tracker=tracker)
    return lhs, rhs, lhs == rhs


def _constant(g: tuple) -> bool:
    return all(v == g[0] for v in g)


@dataclass(frozen=True)
class JointTW:
    """Exact law of (T, W, X_0) for the infinite-window sampler with X_0 ~ pi, on T <= t_max."""

    table: dict
    t_max: int
    pi: tuple[Fraction, ...]

    @property
    def block_mass(self) -> Fraction:
        return sum(self.table.values(), Fraction(0))

    @property
    def residual(self) -> Fraction:
        return 1 - self.block_mass

    def tw(self) -> dict:
        out: dict = defaultdict(Fraction)
        for (T, w, _), p in self.table.items():
            out[(T, w)] += p
        return dict(out)

    def t_law(self) -> dict[int, Fraction]:
        out = {T: Fraction(0) for T in range(self.t_max + 1)}
        for (T, _, _), p in self.table.items():
            out[T] += p
        return out

    def t_w_factorizes(self) -> bool:
        """P(T=k, W=w) = P(T=k) pi(w) for every k <= t_max."""
        law, tw = self.t_law(), self.tw()
        return all(
            tw.get((T, w), 0) == law[T] * self.pi[w] for T in law for w in range(len(self.pi))
        )

    def w_x0_factorizes(self) -> bool:
        """W and X_0 independent on the enumerated block."""
        n = len(self.pi)
        joint: dict = defaultdict(Fraction)
        for (_, w, x0), p in self.table.items():
            joint[(w, x0)] += p
        mass = self.block_mass
        mw = [sum(joint.get((w, x), 0) for x in range(n)) for w in range(n)]
        mx = [sum(joint.get((w, x), 0) for w in range(n)) for x in range(n)]
        return all(joint.get((w, x), 0) * mass == mw[w] * mx[x] for w in range(n) for x in range(n))


def exact_joint_T_W(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    t_max: int,
    cap: int = ORACLE_CAP,
) -> JointTW:
    """Enumerate the infinite-window sampler with X_0 ~ pi and full coalescence checks.

    The state carried backwards is (X_-k, composed map from time -k to 0, X_0).
    """
    pi = _exact_pi(kernel)
    R = _exact_rev(rev)
    n = kernel.n
    table: dict = defaultdict(Fraction)
    identity = tuple(range(n))
    if n == 1:
        table[(0, 0, 0)] = Fraction(1)
        return JointTW(dict(table), t_max, pi)
    frontier: dict = defaultdict(Fraction)
    for x0, w in enumerate(pi):
        if w:
            frontier[(x0, identity, x0)] += w
    fmap = rule.map
    work = 0
    for k in range(1, t_max + 1):
        new: dict = defaultdict(Fraction)
        for (x, g, x0), w in frontier.items():
            for y in range(n):
                r = R[x][y]
                if not r:
                    continue
                atoms = rule.conditional_atoms(y, x)
                work += len(atoms)
                if work > cap:
                    raise EnumerationTooLarge(f"more than {cap} enumeration steps")
                for u, q in atoms:
                    g2 = tuple(g[fmap(z, u)] for z in range(n))
                    p = w * r * q
                    if _constant(g2):
                        assert g2[0] == x0
                        table[(k, y, x0)] += p
                    else:
                        new[(y, g2, x0)] += p
        frontier = new
    return JointTW(dict(table), t_max, pi)


def exact_cftp_time_law(rule: TransitionRule, t_max: int) -> dict[int, Fraction]:
    """Law of the backward coalescence time, by composing iid maps outside-in."""
    n = rule.n
    law = {T: Fraction(0) for T in range(t_max + 1)}
    if n == 1:
        law[0] = Fraction(1)
        return law
    atoms = rule.atoms()
    fmap = rule.map
    # g is the composite map from time -k to time 0
    frontier = {tuple(range(n)): Fraction(1)}
    for k in range(1, t_max + 1):
        new: dict = defaultdict(Fraction)
        for g, w in frontier.items():
            for u, q in atoms:
                g2 = tuple(g[fmap(z, u)] for z in range(n))
                if _constant(g2):
                    law[k] += w * q
                else:
                    new[g2] += w * q
        frontier = new
    return law


def bayes_joint_laws(kernel: DiscreteKernel, rev: ReversedKernel, rule: TransitionRule) -> tuple[dict, dict]:
    """Joint law of (x_prev, x_next, u) built forwards and built backwards-then-imputed."""
    pi = _exact_pi(kernel)
    R = _exact_rev(rev)
    n = kernel.n
    forward: dict = defaultdict(Fraction)
    for x, w in enumerate(pi):
        if w:
            for u, p in rule.atoms():
                forward[(x, rule.map(x, u), u)] += w * p
    backward: dict = defaultdict(Fraction)
    for y, w in enumerate(pi):
        if not w:
            continue
        for x in range(n):
            if R[y][x]:
                for u, q in rule.conditional_atoms(x, y):
                    backward[(x, y, u)] += w * R[y][x] * q
    return dict(forward), dict(backward)
