import random
from collections import Counter
from fractions import Fraction

import pytest

from perfect_sampling.cftp import (
    EVERY,
    POWERS_OF_TWO,
    DriverLog,
    cftp_replay,
    cftp_sample,
    connection_diagnostic,
    fill_infinite_window,
)
from perfect_sampling.chain import reverse_kernel
from perfect_sampling.coalescence import full_tracking_process
from perfect_sampling.errors import WindowLimitExceeded
from perfect_sampling.models import mtf_process, mtf_stationary, random_walk_chain
from perfect_sampling.oracle import exact_cftp_time_law
from perfect_sampling.stats import chi_square_gof


def test_driver_log_assign_once():
    log = DriverLog()
    log[0] = 1
    log[-1] = 0
    with pytest.raises(ValueError):
        log[0] = 0
    with pytest.raises(KeyError):
        log[1] = 0
    assert log.window(2) == [0, 1]
    assert log.items() == [(0, 1), (-1, 0)]


def test_cftp_reuses_drivers_and_replays(toy):
    rng = random.Random(9)
    for _ in range(200):
        run = cftp_sample(toy.kernel, toy.monotone, rng=rng)
        assert run.T & (run.T - 1) == 0
        assert len(run.drivers) == run.T
        again = cftp_replay(toy.monotone, full_tracking_process(toy.monotone), run.drivers)
        assert (again.T, again.output) == (run.T, run.output)


def test_cftp_output_is_constant_map_value(toy):
    rng = random.Random(2)
    run = cftp_sample(toy.kernel, toy.independent, rng=rng)
    outs = set()
    for x in range(3):
        for u in run.drivers.window(run.T):
            x = toy.independent.map(x, u)
        outs.add(x)
    assert outs == {run.output}


def test_cftp_time_law_matches_exact(toy):
    law = exact_cftp_time_law(toy.monotone, 8)
    # windows 1, 2, 4, 8: T is the first power of two at or beyond the coalescence time
    expected = {1: law[1], 2: law[2], 4: law[3] + law[4], 8: sum(law[k] for k in range(5, 9))}
    rng = random.Random(12)
    n = 20_000
    counts = Counter(cftp_sample(toy.kernel, toy.monotone, rng=rng).T for _ in range(n))
    for T, p in expected.items():
        assert abs(counts[T] / n - float(p)) < 0.015


def test_window_cap(toy):
    with pytest.raises(WindowLimitExceeded):
        # the independent rule cannot coalesce in one step
        cftp_sample(toy.kernel, toy.independent, rng=random.Random(1), cap=1)


def test_mtf_cftp_output_law():
    w = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    rule, tracker = mtf_process(w)
    rng = random.Random(31)
    counts = Counter(cftp_sample(None, rule, tracker, rng).output for _ in range(12_000))
    target = [float(p) for p in mtf_stationary(w)]
    assert chi_square_gof([counts[x] for x in range(6)], target).p_value > 1e-3


@pytest.mark.parametrize("policy", [EVERY, POWERS_OF_TWO])
def test_infinite_window_output_law(toy, toy_rev, policy):
    rng = random.Random(6)
    counts = Counter(fill_infinite_window(toy.kernel, toy_rev, toy.monotone, check_policy=policy, rng=rng).W
                     for _ in range(9000))
    assert chi_square_gof([counts[x] for x in range(3)], toy.kernel.pi).p_value > 1e-3


def test_infinite_window_run_structure(toy, toy_rev):
    rng = random.Random(7)
    for _ in range(100):
        run = fill_infinite_window(toy.kernel, toy_rev, toy.independent, check_policy=EVERY, rng=rng)
        assert run.W == run.trajectory[run.T] and run.output == run.trajectory[0]
        # the logged drivers carry X_{-T} to X_0
        x = run.W
        for u in run.drivers.window(run.T):
            x = toy.independent.map(x, u)
        assert x == run.output


def test_infinite_window_policies_agree_on_T_law(toy, toy_rev):
    rng = random.Random(4)
    every = Counter(fill_infinite_window(toy.kernel, toy_rev, toy.monotone, check_policy=EVERY, rng=rng).T
                    for _ in range(20_000))
    law = exact_cftp_time_law(toy.monotone, 6)
    for k in range(1, 7):
        assert abs(every[k] / 20_000 - float(law[k])) < 0.015


@pytest.mark.parametrize("rule_name", ["monotone", "independent"])
def test_connection_diagnostic(toy, rule_name):
    rule = getattr(toy, rule_name)
    rep = connection_diagnostic(toy.kernel, rule, 3)
    assert rep.ok
    d = rep.to_dict()
    assert all(row["equal"] for row in d["rows"])


def test_connection_diagnostic_on_walk():
    kernel, rule = random_walk_chain(3)
    assert connection_diagnostic(kernel, rule, 4).ok
