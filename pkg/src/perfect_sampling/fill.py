"""Fill's rejection sampler for general chains, with restart strategies.

One attempt runs the reversed chain for ``t`` steps from a seed state,
imputes the forward drivers that are consistent with that path, and accepts
the path's far end iff the drivers alone certify coalescence.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

from .chain import DiscreteKernel, ReversedKernel, reverse_kernel, sample_state, step_backward
from .coalescence import DetectionProcess, default_tracker, run_detection
from .errors import MaxAttemptsExceeded
from .models import random_walk_chain
from .rng import as_rng, derive_rng
from .rules import TransitionRule

FIXED = "fixed"
DOUBLING = "doubling"


@dataclass
class FillConfig:
    horizon: int
    seed_state: Union[int, Sequence[float]] = 0
    tracker: Optional[DetectionProcess] = None
    retry: str = DOUBLING
    max_attempts: int = 30
    rng_seed: Optional[object] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if self.retry not in (FIXED, DOUBLING):
            raise ValueError(f"unknown retry policy {self.retry!r}")
        if self.max_attempts < 0:
            raise ValueError("max_attempts must be nonnegative")


@dataclass
class RunRecord:
    attempt_index: int
    horizon: int
    seed_state: int
    accepted: bool
    output: Optional[int]
    markov_steps: int
    first_hit: Optional[int]
    trajectory: list[int] = field(repr=False)
    drivers: list = field(repr=False)
    sample: Optional[int] = None

    def to_dict(self, full: bool = False, rule: Optional[TransitionRule] = None) -> dict:
        d = asdict(self)
        if full:
            if rule is not None:
                d["drivers"] = [rule.driver_to_json(u) for u in self.drivers]
        else:
            del d["trajectory"], d["drivers"]
        return d


def _check_seed(kernel: DiscreteKernel, seed):
    if isinstance(seed, int):
        if kernel.pi[seed] <= 0:
            raise ValueError(f"seed state {seed} has zero stationary mass")
    elif any(w > 0 and p <= 0 for w, p in zip(seed, kernel.pi)):
        raise ValueError("seed distribution is not absolutely continuous w.r.t. pi")


def _draw_seed(seed, rng) -> int:
    return seed if isinstance(seed, int) else sample_state(seed, rng)


def fill_attempt(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    config: FillConfig,
    rng,
    attempt_index: int = 0,
    horizon: Optional[int] = None,
) -> RunRecord:
    t = config.horizon if horizon is None else horizon
    rng = as_rng(rng)
    tracker = config.tracker or default_tracker(rule)
    z = _draw_seed(config.seed_state, rng)
    path = [0] * (t + 1)
    path[t] = z
    for s in range(t, 0, -1):
        path[s - 1] = step_backward(rev, path[s], rng)
    impute = rule.impute_driver
    drivers = [impute(path[s - 1], path[s], rng) for s in range(1, t + 1)]
    # the tracker sees only the drivers, never the path
    hit = run_detection(tracker, drivers, check=False)
    return RunRecord(
        attempt_index=attempt_index,
        horizon=t,
        seed_state=z,
        accepted=hit.detected,
        output=path[0] if hit.detected else None,
        markov_steps=2 * t,
        first_hit=hit.first_hit,
        trajectory=path,
        drivers=drivers,
    )


def fill_sample(
    kernel: DiscreteKernel,
    rev: ReversedKernel,
    rule: TransitionRule,
    config: FillConfig,
    rng=None,
    sample: Optional[int] = None,
) -> tuple[int, list[RunRecord]]:
    """Repeat independent attempts until one is accepted.

    With ``config.rng_seed`` set, attempt ``i`` uses the stream derived from
    ``(rng_seed, i)``; otherwise attempts draw sequentially from ``rng``.
    """
    _check_seed(kernel, config.seed_state)
    if config.tracker is None:
        config = FillConfig(**{**config.__dict__, "tracker": default_tracker(rule)})
    base = as_rng(rng) if config.rng_seed is None else None
    attempts = []
    t = config.horizon
    for i in range(config.max_attempts):
        stream = base if base is not None else derive_rng(config.rng_seed, i)
        rec = fill_attempt(kernel, rev, rule, config, stream, attempt_index=i, horizon=t)
        rec.sample = sample
        attempts.append(rec)
        if rec.accepted:
            return rec.output, attempts
        if config.retry == DOUBLING:
            t *= 2
    raise MaxAttemptsExceeded(attempts)


def fill_many(kernel, rev, rule, config: FillConfig, reps: int, seed) -> list[tuple[int, list[RunRecord]]]:
    """``reps`` independent samples; sample ``r`` uses seed stream ``(seed, r)``."""
    tracker = config.tracker or default_tracker(rule)
    out = []
    for r in range(reps):
        cfg = FillConfig(**{**config.__dict__, "tracker": tracker, "rng_seed": f"{seed}/{r}"})
        out.append(fill_sample(kernel, rev, rule, cfg, sample=r))
    return out


def total_markov_steps(attempts: Sequence[RunRecord]) -> int:
    return sum(a.markov_steps for a in attempts)


@dataclass(frozen=True)
class CurvePoint:
    c: float
    horizon: int
    successes: int
    replications: int

    @property
    def p(self) -> float:
        return self.successes / self.replications

    @property
    def se(self) -> float:
        p = self.p
        return math.sqrt(p * (1 - p) / self.replications)


def acceptance_curve(n: int, c_grid: Sequence[float], replications: int, rng=None) -> list[CurvePoint]:
    """Monte Carlo success probability of one attempt at ``t = ceil(c n^2)``.

    Uses the walk on ``{0..n}`` with its monotone rule, seeded at 0.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    kernel, rule = random_walk_chain(n)
    rev = reverse_kernel(kernel)
    tracker = default_tracker(rule)
    rng = as_rng(rng)
    points = []
    for c in c_grid:
        t = max(1, math.ceil(c * n * n))
        cfg = FillConfig(horizon=t, seed_state=0, tracker=tracker, retry=FIXED)
        hits = sum(fill_attempt(kernel, rev, rule, cfg, rng).accepted for _ in range(replications))
        points.append(CurvePoint(float(c), t, hits, replications))
    return points
