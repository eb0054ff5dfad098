"""Detection processes: conservative certificates that all coupled paths have merged.

A detection process evolves from a fixed initial state using only the
drivers, ``D_s = step(D_{s-1}, U_s)``.  Coalescence is certified once
``D_s`` enters the target set for some ``s <= t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Optional

from .errors import NoBounds, NotMonotone
from .rules import TransitionRule, is_monotone


@dataclass(frozen=True)
class DetectionProcess:
    name: str
    initial: Hashable
    step: Callable[[Any, Any], Any]
    is_target: Callable[[Any], bool]
    check_driver: Optional[Callable[[Any], None]] = None


class DetectionResult(NamedTuple):
    detected: bool
    first_hit: Optional[int]
    final_state: Any


class BoundingInterval(NamedTuple):
    lower: int
    upper: int


def members(mask: int) -> frozenset[int]:
    """Decode an image-set bitmask into its set of states."""
    out = []
    x = 0
    while mask:
        if mask & 1:
            out.append(x)
        mask >>= 1
        x += 1
    return frozenset(out)


def full_tracking_process(rule: TransitionRule) -> DetectionProcess:
    """Track the image ``{Y_s(x)}`` of the whole state space as a bitmask."""
    n = rule.n
    fmap = rule.map

    def step(mask, u):
        out = 0
        x = 0
        while mask:
            if mask & 1:
                out |= 1 << fmap(x, u)
            mask >>= 1
            x += 1
        return out

    def single(mask):
        return mask & (mask - 1) == 0

    return DetectionProcess("full", (1 << n) - 1, step, single, rule.check_driver)


def monotone_bounding_process(rule: TransitionRule, bottom: Optional[int] = None, top: Optional[int] = None) -> DetectionProcess:
    """Follow the paths from the bottom and top states; they sandwich every other path."""
    space = rule.space
    bottom = space.bottom if bottom is None else bottom
    top = space.top if top is None else top
    if bottom is None or top is None:
        raise NoBounds("state space has no bottom/top element")
    if is_monotone(rule, space) is not True:
        raise NotMonotone(f"{rule.name} rule is not certified monotone")
    fmap = rule.map

    def step(d, u):
        return BoundingInterval(fmap(d[0], u), fmap(d[1], u))

    def met(d):
        return d[0] == d[1]

    return DetectionProcess("bounding", BoundingInterval(bottom, top), step, met, rule.check_driver)


def default_tracker(rule: TransitionRule) -> DetectionProcess:
    """Monotone bounding when the rule allows it, full tracking otherwise."""
    space = rule.space
    if space.ordered and space.bottom is not None and space.top is not None:
        if is_monotone(rule, space) is True:
            return monotone_bounding_process(rule)
    return full_tracking_process(rule)


def run_detection(process: DetectionProcess, drivers: Iterable, check: bool = True) -> DetectionResult:
    """Evolve the process over ``drivers`` (times 1..t), always to the end.

    ``first_hit`` is the first s (0 included) with the state in the target set.
    """
    d = process.initial
    first = 0 if process.is_target(d) else None
    step, target = process.step, process.is_target
    validate = process.check_driver if check else None
    for s, u in enumerate(drivers, start=1):
        if validate is not None:
            validate(u)
        d = step(d, u)
        if first is None and target(d):
            first = s
    return DetectionResult(first is not None, first, d)
