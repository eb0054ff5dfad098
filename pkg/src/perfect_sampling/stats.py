"""Chi-square goodness of fit and independence tests for sampler output.

The chi-square tail is computed here from the regularized incomplete gamma
function (series below ``a + 1``, Lentz continued fraction above).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import TooFewSamples

LEVELS = (0.05, 0.01, 0.001)
_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_cf(a, x))


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper tail P(chi2_dof >= statistic)."""
    if statistic <= 0:
        return 1.0
    return gamma_q(dof / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class GofReport:
    statistic: float
    dof: int
    p_value: float
    reject_at: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "reject_at": {str(k): v for k, v in self.reject_at.items()},
        }


def _reject(p: float) -> dict:
    return {a: p < a for a in LEVELS}


def chi_square_gof(counts: Sequence[int], expected: Sequence[float]) -> GofReport:
    """Pearson test of observed counts against a probability vector.

    Cells with zero expected mass must be empty and do not count towards the
    degrees of freedom.
    """
    obs = np.asarray(counts, dtype=float)
    exp = np.asarray(expected, dtype=float)
    if obs.shape != exp.shape:
        raise ValueError("counts and expected must have the same length")
    total = obs.sum()
    if total < 5 * len(obs):
        raise TooFewSamples(f"{int(total)} samples for {len(obs)} cells")
    live = exp > 0
    if np.any(obs[~live] > 0):
        return GofReport(math.inf, int(live.sum()) - 1, 0.0, _reject(0.0))
    dof = int(live.sum()) - 1
    if dof < 1:
        raise ValueError("need at least two cells with positive expected mass")
    e = total * exp[live] / exp[live].sum()
    stat = float(np.sum((obs[live] - e) ** 2 / e))
    p = chi2_sf(stat, dof)
    return GofReport(stat, dof, p, _reject(p))


@dataclass(frozen=True)
class IndependenceReport:
    table: np.ndarray
    statistic: float
    dof: int
    p_value: float
    boundaries: tuple
    reject_at: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "table": self.table.tolist(),
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "bucket_boundaries": list(self.boundaries),
            "reject_at": {str(k): v for k, v in self.reject_at.items()},
        }


def chi_square_independence(table) -> tuple[float, int, float]:
    tab = np.asarray(table, dtype=float)
    tab = tab[tab.sum(axis=1) > 0][:, tab.sum(axis=0) > 0]
    r, c = tab.shape
    dof = (r - 1) * (c - 1)
    if dof < 1:
        return 0.0, 0, 1.0
    expected = np.outer(tab.sum(axis=1), tab.sum(axis=0)) / tab.sum()
    stat = float(np.sum((tab - expected) ** 2 / expected))
    return stat, dof, chi2_sf(stat, dof)


def _bucketize(runtimes: np.ndarray, buckets: int) -> tuple[np.ndarray, tuple]:
    qs = np.quantile(runtimes, np.arange(1, buckets) / buckets)
    bounds = np.unique(qs)
    # bucket j holds runtimes in (bounds[j-1], bounds[j]]
    return np.searchsorted(bounds, runtimes, side="left"), tuple(float(b) for b in bounds)


def interruptibility_test(
    samples: Iterable[tuple[int, float]],
    buckets: int = 4,
    min_samples: int = 10_000,
    n_states: Optional[int] = None,
) -> IndependenceReport:
    """Chi-square independence of output state and runtime bucket.

    ``samples`` are (output, runtime) pairs from successful runs.  Runtime
    buckets are cut at empirical quantiles; a bucket whose column total is
    too small for the chi-square approximation is merged into its neighbour.
    """
    pairs = list(samples)
    if len(pairs) < min_samples:
        raise TooFewSamples(f"{len(pairs)} runs, need {min_samples}")
    outputs = np.array([o for o, _ in pairs], dtype=int)
    runtimes = np.array([r for _, r in pairs], dtype=float)
    cols, bounds = _bucketize(runtimes, buckets)
    n_states = n_states or int(outputs.max()) + 1
    table = np.zeros((n_states, len(bounds) + 1), dtype=int)
    np.add.at(table, (outputs, cols), 1)
    table = table[:, table.sum(axis=0) > 0]
    table = _merge_sparse_columns(table)
    stat, dof, p = chi_square_independence(table)
    return IndependenceReport(table, stat, dof, p, bounds, _reject(p))


def _merge_sparse_columns(table: np.ndarray, min_expected: float = 5.0) -> np.ndarray:
    rows = table.sum(axis=1)
    live_rows = rows[rows > 0]
    total = table.sum()
    cols = [table[:, j].copy() for j in range(table.shape[1])]

    def sparse(col):
        return live_rows.size and (live_rows.min() * col.sum() / total) < min_expected

    while len(cols) > 1 and sparse(cols[-1]):
        last = cols.pop()
        cols[-1] = cols[-1] + last
    j = 0
    while j < len(cols) - 1 and len(cols) > 1:
        if sparse(cols[j]):
            cols[j + 1] = cols[j + 1] + cols.pop(j)
        else:
            j += 1
    return np.stack(cols, axis=1)


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def samples_from_log(records: Sequence[dict]) -> list[tuple[int, float]]:
    """(output, runtime) pairs from a run log.

    Fill logs hold one line per attempt grouped by ``sample``; runtime is
    the total Markov steps of the group.  Backward-run logs (CFTP and the
    infinite-window sampler) hold one line per run; runtime is ``T``.
    """
    if records and "T" in records[0]:
        return [(int(r["W"] if r.get("W") is not None else r["output"]), float(r["T"])) for r in records]
    groups: dict = {}
    for r in records:
        g = groups.setdefault(r.get("sample"), {"steps": 0, "output": None})
        g["steps"] += r["markov_steps"]
        if r["accepted"]:
            g["output"] = r["output"]
    return [(g["output"], float(g["steps"])) for g in groups.values() if g["output"] is not None]
