"""Fill vs CFTP vs the infinite-window sampler on one chain.

Reports output-law fit, mean Markov steps, and the output/runtime
independence test for each sampler.

    python3 scripts/compare_fill_cftp.py --chain toy --reps 20000
"""

import argparse
import statistics

from perfect_sampling.cftp import cftp_sample, fill_infinite_window
from perfect_sampling.chain import reverse_kernel
from perfect_sampling.cli import resolve
from perfect_sampling.fill import DOUBLING, FillConfig, fill_many, total_markov_steps
from perfect_sampling.rng import derive_rng
from perfect_sampling.stats import chi_square_gof, interruptibility_test


def summarize(name, runs, pi):
    counts = [0] * len(pi)
    for x, _ in runs:
        counts[x] += 1
    gof = chi_square_gof(counts, pi)
    ind = interruptibility_test(runs, min_samples=min(len(runs), 10_000))
    mean = statistics.fmean(r for _, r in runs)
    print(f"{name:16s} gof p={gof.p_value:8.4f}  mean runtime={mean:9.2f}  output/runtime p={ind.p_value:8.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--chain", default="toy")
    ap.add_argument("--rule", default="auto")
    ap.add_argument("--t", type=int, default=2, help="initial Fill horizon")
    ap.add_argument("--reps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    setup = resolve(args.chain, args.rule)
    kernel, rule, tracker = setup.kernel, setup.rule, setup.tracker
    rev = reverse_kernel(kernel)
    pi = list(kernel.pi)

    cfg = FillConfig(horizon=args.t, seed_state=pi, tracker=tracker, retry=DOUBLING, max_attempts=60)
    fill = [(x, total_markov_steps(a)) for x, a in fill_many(kernel, rev, rule, cfg, args.reps, seed=args.seed)]
    summarize("fill (doubling)", fill, pi)

    rng = derive_rng("compare", "cftp", args.seed)
    cftp = []
    for _ in range(args.reps):
        run = cftp_sample(kernel, rule, tracker, rng)
        cftp.append((run.output, run.T))
    summarize("cftp", cftp, pi)

    rng = derive_rng("compare", "fill-inf", args.seed)
    inf = []
    for _ in range(args.reps):
        run = fill_infinite_window(kernel, rev, rule, tracker, rng=rng)
        inf.append((run.W, run.T))
    summarize("infinite-window", inf, pi)


if __name__ == "__main__":
    main()
