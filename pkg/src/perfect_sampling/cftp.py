"""Coupling from the past and the infinite-window variant of Fill's algorithm.

Both look backwards from time 0 over windows of growing width.  CFTP draws
fresh drivers for each new time index and reuses them across windows.  The
infinite-window sampler instead runs the reversed chain ``X_0, X_-1, ...``
and imputes each driver from the observed transition ``X_{s-1} -> X_s``;
it reports ``W = X_-T`` where ``T`` is the first window width that
certifies coalescence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .chain import DiscreteKernel, ReversedKernel, reverse_kernel, sample_state, step_backward
from .coalescence import DetectionProcess, default_tracker, run_detection
from .errors import WindowLimitExceeded
from .rng import as_rng
from .rules import TransitionRule

WINDOW_CAP = 2**20
EVERY = "every-t"
POWERS_OF_TWO = "powers-of-2"


class DriverLog:
    """Drivers indexed by time 0, -1, -2, ...; each index is assigned at most once."""

    def __init__(self):
        self._drivers: dict[int, object] = {}

    def __contains__(self, s: int) -> bool:
        return s in self._drivers

    def __getitem__(self, s: int):
        return self._drivers[s]

    def __setitem__(self, s: int, driver):
        if s > 0:
            raise KeyError("driver times are nonpositive")
        if s in self._drivers:
            raise ValueError(f"driver at time {s} already assigned")
        self._drivers[s] = driver

    def __len__(self) -> int:
        return len(self._drivers)

    def draw(self, s: int, rule: TransitionRule, rng):
        if s not in self._drivers:
            self[s] = rule.sample_driver(rng)
        return self._drivers[s]

    def window(self, t: int) -> list:
        """Drivers for times -t+1, ..., 0 in forward order."""
        return [self._drivers[s] for s in range(-t + 1, 1)]

    def items(self):
        return sorted(self._drivers.items(), reverse=True)


@dataclass
class BackwardRun:
    T: int
    output: int
    policy: str
    markov_steps: int
    W: Optional[int] = None
    trajectory: Optional[list[int]] = field(default=None, repr=False)
    drivers: DriverLog = field(default_factory=DriverLog, repr=False)

    def to_dict(self) -> dict:
        d = {"T": self.T, "output": self.output, "policy": self.policy, "markov_steps": self.markov_steps}
        if self.W is not None:
            d["W"] = self.W
        return d


def _reference_state(rule: TransitionRule) -> int:
    return rule.space.bottom if rule.space.bottom is not None else 0


def _window_output(rule: TransitionRule, drivers: Sequence, start: int) -> int:
    x = start
    for u in drivers:
        x = rule.map(x, u)
    return x


def cftp_replay(rule: TransitionRule, tracker: DetectionProcess, log: DriverLog, cap: int = WINDOW_CAP) -> BackwardRun:
    """Re-run CFTP on a fixed driver log; widths beyond the log are not tried."""
    t = 1
    steps = 0
    while t <= cap and -t + 1 in log:
        window = log.window(t)
        steps += t
        if run_detection(tracker, window, check=False).detected:
            return BackwardRun(t, _window_output(rule, window, _reference_state(rule)), "cftp", steps, drivers=log)
        t *= 2
    raise WindowLimitExceeded("driver log exhausted before coalescence")


def cftp_sample(
    kernel: Optional[DiscreteKernel],
    rule: TransitionRule,
    tracker: Optional[DetectionProcess] = None,
    rng=None,
    cap: int = WINDOW_CAP,
) -> BackwardRun:
    """Windows of width 1, 2, 4, ...; ``T`` is the first width that coalesces.

    ``kernel`` is only used for a consistency check and may be None (MTF).
    """
    if kernel is not None and kernel.n != rule.n:
        raise ValueError("rule and kernel have different state spaces")
    tracker = tracker or default_tracker(rule)
    rng = as_rng(rng)
    log = DriverLog()
    t = 1
    steps = 0
    while t <= cap:
        for s in range(-t + 1, 1):
            log.draw(s, rule, rng)
        window = log.window(t)
        steps += t
        if run_detection(tracker, window, check=False).detected:
            out = _window_output(rule, window, _reference_state(rule))
            return BackwardRun(t, out, "cftp", steps, drivers=log)
        t *= 2
    raise WindowLimitExceeded(f"no coalescence within window width {cap}")


def _should_check(t: int, policy: str) -> bool:
    if policy == EVERY:
        return True
    if policy == POWERS_OF_TWO:
        return t & (t - 1) == 0
    raise ValueError(f"unknown check policy {policy!r}")


def fill_infinite_window(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    tracker: Optional[DetectionProcess] = None,
    seed_distribution: Union[int, Sequence[float], None] = None,
    check_policy: str = POWERS_OF_TWO,
    rng=None,
    cap: int = WINDOW_CAP,
) -> BackwardRun:
    """Extend the reversed path one step at a time, imputing drivers as it goes.

    ``seed_distribution`` is a state, a probability vector, or None for pi.
    """
    tracker = tracker or default_tracker(rule)
    rng = as_rng(rng)
    seed = kernel.pi if seed_distribution is None else seed_distribution
    x0 = seed if isinstance(seed, int) else sample_state(seed, rng)
    if kernel.pi[x0] <= 0:
        raise ValueError("seed state has zero stationary mass")
    path = [x0]  # path[k] = X_{-k}
    drivers: list = []  # drivers[k] = U_{-k}
    log = DriverLog()
    steps = 0
    if tracker.is_target(tracker.initial):
        return BackwardRun(0, x0, check_policy, 0, W=x0, trajectory=path, drivers=log)
    t = 0
    while t < cap:
        t += 1
        prev = step_backward(rev, path[-1], rng)
        u = rule.impute_driver(prev, path[-1], rng)
        path.append(prev)
        drivers.append(u)
        log[-(t - 1)] = u
        steps += 2
        if _should_check(t, check_policy):
            steps += t
            # forward order: U_{-t+1}, ..., U_0
            if run_detection(tracker, reversed(drivers), check=False).detected:
                return BackwardRun(t, x0, check_policy, steps, W=prev, trajectory=path, drivers=log)
    raise WindowLimitExceeded(f"no coalescence within window width {cap}")


@dataclass
class ConnectionRow:
    t: int
    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


@dataclass
class ConnectionReport:
    rows: list[ConnectionRow]
    t_max: int
    block_mass: Fraction
    independent: bool
    t_law_matches_cftp: bool

    @property
    def ok(self) -> bool:
        return all(r.equal for r in self.rows) and self.independent and self.t_law_matches_cftp

    def to_dict(self) -> dict:
        return {
            "rows": [{"t": r.t, "lhs": _q(r.lhs), "rhs": _q(r.rhs), "equal": r.equal} for r in self.rows],
            "t_max": self.t_max,
            "block_mass": _q(self.block_mass),
            "W_X0_independent": self.independent,
            "T_law_matches_cftp": self.t_law_matches_cftp,
            "ok": self.ok,
        }


def _q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def connection_diagnostic(kernel: DiscreteKernel, rule: TransitionRule, t_max: int, tracker=None) -> ConnectionReport:
    """Exact checks linking Fill's acceptance probabilities with CFTP.

    For each t <= t_max: the pi-average over seeds of the acceptance
    probability equals the forward coalescence probability within t.  For
    the infinite-window sampler started from pi, ``W`` and ``X_0`` are
    independent on the enumerated block ``T <= t_max`` and the law of ``T``
    matches CFTP's backward coalescence time.
    """
    from .oracle import exact_cftp_time_law, exact_joint_T_W, pi_average_check

    rev = reverse_kernel(kernel, strict=False)
    rows = []
    for t in range(0, t_max + 1):
        lhs, rhs, _ = pi_average_check(kernel, rev, rule, t, tracker=tracker)
        rows.append(ConnectionRow(t, lhs, rhs))
    joint = exact_joint_T_W(kernel, rev, rule, t_max)
    cftp_law = exact_cftp_time_law(rule, t_max)
    return ConnectionReport(
        rows=rows,
        t_max=t_max,
        block_mass=joint.block_mass,
        independent=joint.w_x0_factorizes(),
        t_law_matches_cftp=joint.t_law() == cftp_law,
    )
