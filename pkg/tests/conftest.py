import random
from fractions import Fraction

import pytest

from perfect_sampling.chain import reverse_kernel, validate_kernel
from perfect_sampling.models import birth_death_chain, mtf_process, random_walk_chain, toy_chain
from perfect_sampling.rules import make_table_rule

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy():
    return toy_chain()


@pytest.fixture(scope="session")
def toy_rev(toy):
    return reverse_kernel(toy.kernel)


def random_rational_chain(rng: random.Random, n: int = 3, atoms: int = 3, denom: int = 6):
    """A random table rule with rational atom weights and the kernel it induces."""
    cuts = sorted(rng.sample(range(1, denom), atoms - 1))
    bounds = [0, *cuts, denom]
    weights = [Fraction(b - a, denom) for a, b in zip(bounds, bounds[1:])]
    maps = [tuple(rng.randrange(n) for _ in range(n)) for _ in weights]
    rows = [[Fraction(0)] * n for _ in range(n)]
    for p, m in zip(weights, maps):
        for x in range(n):
            rows[x][m[x]] += p
    return rows, list(zip(weights, maps))


def irreducible(rows) -> bool:
    n = len(rows)
    for start in range(n):
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for y in range(n):
                if rows[x][y] and y not in seen:
                    seen.add(y)
                    stack.append(y)
        if len(seen) < n:
            return False
    return True


def random_chains(count: int, seed: int = 20240601, n: int = 3):
    """``count`` irreducible random rational chains with their table rules."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        rows, atoms = random_rational_chain(rng, n=n, atoms=rng.choice([2, 3, 4]))
        if not irreducible(rows):
            continue
        kernel = validate_kernel(rows)
        out.append((kernel, make_table_rule(atoms, kernel=kernel)))
    return out


def fixture_chains():
    """Named (kernel, rule) pairs used by the exact checks."""
    toy = toy_chain()
    walk4, walk_rule = random_walk_chain(4)
    bd, bd_rule = birth_death_chain(["1/3", "1/4", "1/2", 0], [0, "1/2", "1/4", "1/3"])
    mtf_rule, _ = mtf_process([Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)])
    fixtures = {
        "toy-monotone": (toy.kernel, toy.monotone),
        "toy-independent": (toy.kernel, toy.independent),
        "walk4-monotone": (walk4, walk_rule),
        "birth-death-inverse-cdf": (bd, bd_rule),
        "mtf3": (mtf_rule.kernel(), mtf_rule),
    }
    for i, (k, r) in enumerate(random_chains(5, seed=7)):
        fixtures[f"random-{i}"] = (k, r)
    return fixtures
