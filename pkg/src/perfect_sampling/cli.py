"""Command-line front end.

Chains are presets (``toy``, ``walk:N``, ``mtf:N``) or JSON chain files.
Every command prints one JSON document to stdout; rationals are "p/q"
strings and floats carry 12 significant digits.  Replication ``r`` always
uses the random stream derived from ``(--seed, r)``, so output does not
depend on ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import __version__
from .cftp import EVERY, POWERS_OF_TWO, cftp_sample, connection_diagnostic, fill_infinite_window
from .chain import DiscreteKernel, reverse_kernel
from .coalescence import DetectionProcess, default_tracker, full_tracking_process, monotone_bounding_process
from .errors import MaxAttemptsExceeded, PerfectSamplingError
from .fill import DOUBLING, FIXED, FillConfig, acceptance_curve, fill_sample, total_markov_steps
from .models import MtfRule, mtf_process, random_walk_chain, toy_chain
from .oracle import exact_fill_report, pi_average_check, q2s
from .rng import derive_rng
from .rules import TransitionRule, make_independent_transitions_rule, make_inverse_cdf_rule
from .spec_file import load_chain_spec
from .stats import chi_square_gof, interruptibility_test, read_jsonl, samples_from_log


@dataclass
class Setup:
    kernel: Optional[DiscreteKernel]
    rule: TransitionRule
    tracker: DetectionProcess

    @property
    def rev(self):
        if self.kernel is None:
            raise ValueError("this chain has no explicit kernel to reverse")
        if not hasattr(self, "_rev"):
            self._rev = reverse_kernel(self.kernel)
        return self._rev


def resolve(chain: str, rule_name: str = "auto", tracker_name: str = "auto") -> Setup:
    if chain.startswith("mtf:"):
        n = int(chain.split(":", 1)[1])
        rule, tracker = mtf_process([Fraction(1, n)] * n)
        kernel = rule.kernel() if n <= 5 else None
        return Setup(kernel, rule, tracker)
    file_rule = None
    if chain == "toy":
        kernel, monotone = random_walk_chain(2)
    elif chain.startswith("walk:"):
        kernel, monotone = random_walk_chain(int(chain.split(":", 1)[1]))
    else:
        spec = load_chain_spec(chain)
        kernel, monotone, file_rule = spec.kernel, None, spec.rule
    if rule_name == "auto":
        rule = file_rule or monotone or make_independent_transitions_rule(kernel)
    elif rule_name == "monotone":
        rule = monotone or file_rule
        if rule is None:
            raise ValueError("chain file defines no rule; pick --rule independent or inverse-cdf")
    elif rule_name == "independent":
        rule = make_independent_transitions_rule(kernel)
    elif rule_name == "inverse-cdf":
        rule = make_inverse_cdf_rule(kernel)
    else:
        raise ValueError(f"unknown rule {rule_name!r}")
    if tracker_name == "full":
        tracker = full_tracking_process(rule)
    elif tracker_name == "bounding":
        tracker = monotone_bounding_process(rule)
    else:
        tracker = default_tracker(rule)
    return Setup(kernel, rule, tracker)


def _label(rule: TransitionRule, x: int):
    if isinstance(rule, MtfRule):
        return list(rule.arrangement(x))
    return rule.space.label(x)


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, Fraction):
        return q2s(obj)
    return obj


def _emit(doc: dict):
    sys.stdout.write(json.dumps(_round(doc), sort_keys=True) + "\n")


def _seed_state(value: str):
    return None if value == "pi" else int(value)


# replication workers (module level so they pickle) ---------------------------


def _fill_rep(setup: Setup, args: dict, r: int):
    kernel = setup.kernel
    rev = setup.rev
    seed = args["z"] if args["z"] is not None else kernel.pi.tolist()
    cfg = FillConfig(
        horizon=args["t"],
        seed_state=seed,
        tracker=setup.tracker,
        retry=args["retry"],
        max_attempts=args["max_attempts"],
        rng_seed=f"fill/{args['seed']}/{r}",
    )
    try:
        out, attempts = fill_sample(kernel, rev, setup.rule, cfg, sample=r)
    except MaxAttemptsExceeded as exc:
        return {"error": str(exc), "log": [a.to_dict() for a in exc.attempts]}
    return {"output": out, "log": [a.to_dict() for a in attempts]}


def _cftp_rep(setup: Setup, args: dict, r: int):
    run = cftp_sample(setup.kernel, setup.rule, setup.tracker, derive_rng("cftp", args["seed"], r), cap=args["cap"])
    return {**run.to_dict(), "sample": r}


def _fill_inf_rep(setup: Setup, args: dict, r: int):
    run = fill_infinite_window(
        setup.kernel, setup.rev, setup.rule, setup.tracker, args["z"], args["policy"],
        derive_rng("fill-inf", args["seed"], r), cap=args["cap"],
    )
    return {**run.to_dict(), "sample": r}


def _chunk(worker, args, indices):
    # each process builds the chain once and reuses it for its block of replications
    setup = resolve(args["chain"], args["rule"], args["tracker"])
    return [worker(setup, args, r) for r in indices]


def _replicate(worker, args: dict, reps: int, jobs: int) -> list:
    if jobs <= 1 or reps < 2:
        return _chunk(worker, args, range(reps))
    size = -(-reps // (jobs * 4))
    chunks = [range(i, min(i + size, reps)) for i in range(0, reps, size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_chunk, [worker] * len(chunks), [args] * len(chunks), chunks)
        return [res for part in parts for res in part]


def _write_jsonl(path: str, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(_round(row), sort_keys=True) + "\n")


def _counts(outputs, n):
    counts = [0] * n
    for x in outputs:
        counts[x] += 1
    return counts


def _gof(counts, kernel):
    if kernel is None or sum(counts) < 5 * len(counts):
        return None
    return chi_square_gof(counts, kernel.pi).to_dict()


# commands --------------------------------------------------------------------


def cmd_fill(a) -> int:
    args = {"chain": a.chain, "rule": a.rule, "tracker": a.tracker, "t": a.t, "z": _seed_state(a.z),
            "retry": a.retry, "max_attempts": a.max_attempts, "seed": a.seed}
    setup = resolve(a.chain, a.rule, a.tracker)
    if setup.kernel is None or isinstance(setup.rule, MtfRule):
        raise ValueError("fill needs an explicit kernel with a reversible sampler; MTF supports cftp only")
    results = _replicate(_fill_rep, args, a.reps, a.jobs)
    if a.log:
        _write_jsonl(a.log, [rec for res in results for rec in res["log"]])
    failed = [r for r in results if "error" in r]
    if failed:
        _emit({"error": "MaxAttemptsExceeded", "message": failed[0]["error"], "failed_samples": len(failed)})
        return 1
    outputs = [r["output"] for r in results]
    counts = _counts(outputs, setup.kernel.n)
    _emit({
        "command": "fill",
        "chain": a.chain,
        "rule": setup.rule.name,
        "t": a.t,
        "retry": a.retry,
        "seed": a.seed,
        "reps": a.reps,
        "samples": [_label(setup.rule, x) for x in outputs],
        "counts": counts,
        "attempts": [len(r["log"]) for r in results],
        "markov_steps": [sum(rec["markov_steps"] for rec in r["log"]) for r in results],
        "gof": _gof(counts, setup.kernel),
    })
    return 0


def _backward_cmd(a, worker, name: str, extra: dict) -> int:
    setup = resolve(a.chain, a.rule, a.tracker)
    args = {"chain": a.chain, "rule": a.rule, "tracker": a.tracker, "seed": a.seed, "cap": a.cap, **extra}
    runs = _replicate(worker, args, a.reps, a.jobs)
    if a.log:
        _write_jsonl(a.log, runs)
    key = "W" if name == "fill-inf" else "output"
    outputs = [r[key] for r in runs]
    doc = {
        "command": name,
        "chain": a.chain,
        "rule": setup.rule.name,
        "seed": a.seed,
        "reps": a.reps,
        "samples": [_label(setup.rule, x) for x in outputs],
        "T": [r["T"] for r in runs],
    }
    if setup.rule.n <= 1000:
        counts = _counts(outputs, setup.rule.n)
        doc["counts"] = counts
        doc["gof"] = _gof(counts, setup.kernel)
    if name == "fill-inf":
        doc["policy"] = a.policy
    _emit(doc)
    return 0


def cmd_cftp(a) -> int:
    return _backward_cmd(a, _cftp_rep, "cftp", {})


def cmd_fill_inf(a) -> int:
    return _backward_cmd(a, _fill_inf_rep, "fill-inf", {"z": _seed_state(a.z), "policy": a.policy})


def cmd_enumerate(a) -> int:
    setup = resolve(a.chain, a.rule, a.tracker)
    rev = reverse_kernel(setup.kernel, strict=False)
    report = exact_fill_report(setup.kernel, rev, setup.rule, a.t, a.z, tracker=setup.tracker)
    _emit({"command": "enumerate", "chain": a.chain, "rule": setup.rule.name, "t": a.t, "z": a.z, **report.to_dict()})
    return 0


def cmd_check(a) -> int:
    setup = resolve(a.chain, a.rule, a.tracker)
    rev = reverse_kernel(setup.kernel, strict=False)
    rows = []
    for t in range(a.t + 1):
        lhs, rhs, eq = pi_average_check(setup.kernel, rev, setup.rule, t, tracker=setup.tracker)
        rows.append({"t": t, "lhs": q2s(lhs), "rhs": q2s(rhs), "equal": eq})
    conn = connection_diagnostic(setup.kernel, setup.rule, a.t)
    ok = all(r["equal"] for r in rows) and conn.ok
    _emit({"command": "check", "chain": a.chain, "rule": setup.rule.name, "pi_average": rows,
           "connection": conn.to_dict(), "ok": ok})
    return 0 if ok else 1


def cmd_curve(a) -> int:
    grid = [float(c) for c in a.c_grid.split(",")]
    points = acceptance_curve(a.n, grid, a.reps, derive_rng("curve", a.seed))
    rows = [{"c": p.c, "t": p.horizon, "successes": p.successes, "reps": p.replications, "p": p.p, "se": p.se}
            for p in points]
    if a.csv:
        with open(a.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(_round(rows))
    _emit({"command": "curve", "n": a.n, "seed": a.seed, "points": rows})
    return 0


def cmd_test_interrupt(a) -> int:
    samples = samples_from_log(read_jsonl(a.log))
    rep = interruptibility_test(samples, buckets=a.buckets, min_samples=a.min_samples)
    _emit({"command": "test-interrupt", "samples": len(samples), **rep.to_dict()})
    return 0


def cmd_schema(a) -> int:
    sys.stdout.write(json.dumps(SCHEMAS[a.name], indent=2, sort_keys=True) + "\n")
    return 0


# schemas ---------------------------------------------------------------------

_Q = {"type": "string", "pattern": r"^-?\d+/\d+$"}
_GOF = {"type": ["object", "null"], "required": ["statistic", "dof", "p_value", "reject_at"]}
_BASE = {"command": {"type": "string"}, "chain": {"type": "string"}, "rule": {"type": "string"}}

SCHEMAS = {
    "fill": {
        "type": "object",
        "required": ["command", "samples", "counts", "attempts", "markov_steps", "t", "seed"],
        "properties": {**_BASE, "samples": {"type": "array"}, "counts": {"type": "array", "items": {"type": "integer"}},
                       "attempts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                       "markov_steps": {"type": "array", "items": {"type": "integer"}},
                       "t": {"type": "integer", "minimum": 1}, "gof": _GOF},
    },
    "cftp": {
        "type": "object",
        "required": ["command", "samples", "T"],
        "properties": {**_BASE, "samples": {"type": "array"}, "T": {"type": "array", "items": {"type": "integer"}},
                       "gof": _GOF},
    },
    "fill-inf": {
        "type": "object",
        "required": ["command", "samples", "T", "policy"],
        "properties": {**_BASE, "samples": {"type": "array"}, "T": {"type": "array", "items": {"type": "integer"}},
                       "policy": {"enum": [EVERY, POWERS_OF_TWO]}, "gof": _GOF},
    },
    "enumerate": {
        "type": "object",
        "required": ["command", "p_accept", "conditional", "outcome_count", "t", "z"],
        "properties": {**_BASE, "p_accept": _Q, "conditional": {"type": ["array", "null"], "items": _Q},
                       "outcome_count": {"type": "integer"}},
    },
    "check": {
        "type": "object",
        "required": ["command", "pi_average", "connection", "ok"],
        "properties": {**_BASE, "ok": {"type": "boolean"},
                       "pi_average": {"type": "array", "items": {"type": "object", "required": ["t", "lhs", "rhs", "equal"],
                                                                  "properties": {"lhs": _Q, "rhs": _Q}}},
                       "connection": {"type": "object", "required": ["rows", "W_X0_independent", "T_law_matches_cftp"]}},
    },
    "curve": {
        "type": "object",
        "required": ["command", "n", "points"],
        "properties": {"command": {"type": "string"}, "n": {"type": "integer"},
                       "points": {"type": "array", "items": {"type": "object", "required": ["c", "t", "p", "se"]}}},
    },
    "test-interrupt": {
        "type": "object",
        "required": ["command", "table", "statistic", "dof", "p_value", "bucket_boundaries"],
        "properties": {"command": {"type": "string"}, "p_value": {"type": "number", "minimum": 0, "maximum": 1}},
    },
    "error": {
        "type": "object",
        "required": ["error", "message"],
        "properties": {"error": {"type": "string"}, "message": {"type": "string"}},
    },
}


def build_parser() -> argparse.ArgumentParser:
    env_seed = os.environ.get("PS_SEED")
    default_seed = int(env_seed) if env_seed else 0

    p = argparse.ArgumentParser(prog="perfect-sampling", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, chain=True):
        if chain:
            sp.add_argument("--chain", required=True, help="toy | walk:N | mtf:N | path to a JSON chain file")
            sp.add_argument("--rule", default="auto", choices=["auto", "monotone", "independent", "inverse-cdf"])
            sp.add_argument("--tracker", default="auto", choices=["auto", "full", "bounding"])
        sp.add_argument("--seed", type=int, default=default_seed, help="RNG seed (env PS_SEED)")

    def reps(sp):
        sp.add_argument("--reps", type=int, default=1)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--log", help="write a JSON-lines run log here")

    sp = sub.add_parser("fill", help="Fill's rejection sampler with restarts")
    common(sp)
    reps(sp)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--z", default="0", help="seed state, or 'pi' to draw it from pi")
    sp.add_argument("--retry", choices=[FIXED, DOUBLING], default=DOUBLING)
    sp.add_argument("--max-attempts", type=int, default=30)
    sp.set_defaults(func=cmd_fill)

    sp = sub.add_parser("cftp", help="coupling from the past")
    common(sp)
    reps(sp)
    sp.add_argument("--cap", type=int, default=2**20)
    sp.set_defaults(func=cmd_cftp)

    sp = sub.add_parser("fill-inf", help="infinite-window variant")
    common(sp)
    reps(sp)
    sp.add_argument("--z", default="pi", help="seed state for X_0, or 'pi'")
    sp.add_argument("--policy", choices=[EVERY, POWERS_OF_TWO], default=POWERS_OF_TWO)
    sp.add_argument("--cap", type=int, default=2**20)
    sp.set_defaults(func=cmd_fill_inf)

    sp = sub.add_parser("enumerate", help="exact acceptance report")
    common(sp)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--z", type=int, default=0)
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("check", help="exact pi-average and CFTP connection checks")
    common(sp)
    sp.add_argument("--t", type=int, required=True, help="largest horizon checked")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("curve", help="acceptance probability at t = ceil(c n^2)")
    common(sp, chain=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--c-grid", default="0.25,0.5,1,2")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("test-interrupt", help="output/runtime independence test over a run log")
    sp.add_argument("--log", required=True)
    sp.add_argument("--buckets", type=int, default=4)
    sp.add_argument("--min-samples", type=int, default=10_000)
    sp.set_defaults(func=cmd_test_interrupt)

    sp = sub.add_parser("schema", help="print the JSON schema of a command's output")
    sp.add_argument("name", choices=sorted(SCHEMAS))
    sp.set_defaults(func=cmd_schema)
    return p


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PerfectSamplingError, ValueError, OSError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return 1


def main():
    sys.exit(run_cli())
