"""Benchmark the numba match kernel against the numpy fallback.

Two workload shapes, matching how the package actually spends time:

* tournament: every pair from the default 15-strategy roster, 10
  repetitions of 200 turns, in one batch (1050 matches).
* evolution: one generation of fitness evaluation, 40 random 10-state
  genomes each meeting the full roster for 10 repetitions of 20 turns
  (6000 short matches).

Run:  python benchmarks/bench_kernels.py [--repeat N]

The first numba call pays JIT compilation; a warmup run keeps that out
of the timings.  The numpy path loops over turns in Python and
vectorizes across the batch, so it looks best on wide batches of short
matches and worst on long matches; numba wins everywhere, by more on
the tournament shape.
"""

import argparse
import time

import numpy as np

from ipdlab import default_registry, roster_default
from ipdlab.evolution import random_genome
from ipdlab.kernels import HAS_NUMBA, fsm_program, play_batch
from ipdlab.rng import SplitMix64, derive_seed


def tournament_batch():
    reg = default_registry()
    entries = [reg.get(sid.name) for sid in roster_default()]
    progs_a, progs_b, seeds = [], [], []
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, b = sorted((entries[i], entries[j]), key=lambda e: e.id.name)
            for rep in range(10):
                progs_a.append(a.program)
                progs_b.append(b.program)
                seeds.append(derive_seed(0, "match", a.id.name, b.id.name, rep))
    return progs_a, progs_b, 200, seeds


def evolution_batch():
    reg = default_registry()
    opponents = [reg.get(sid.name) for sid in roster_default()]
    progs_a, progs_b, seeds = [], [], []
    for g in range(40):
        genome = fsm_program(random_genome(10, SplitMix64(derive_seed(1, "bench", g)), f"g{g}"))
        for idx, opp in enumerate(opponents):
            for rep in range(10):
                progs_a.append(genome)
                progs_b.append(opp.program)
                seeds.append(derive_seed(2, g, idx, rep))
    return progs_a, progs_b, 20, seeds


def run(name, batch, backends, repeat):
    progs_a, progs_b, turns, seeds = batch()
    results = {}
    timings = {}
    for backend in backends:
        play_batch(progs_a, progs_b, turns, 0.0, seeds, backend=backend)  # warmup / JIT
        best = float("inf")
        for _ in range(repeat):
            start = time.perf_counter()
            out = play_batch(progs_a, progs_b, turns, 0.0, seeds, backend=backend)
            best = min(best, time.perf_counter() - start)
        results[backend] = out
        timings[backend] = best
    if len(backends) == 2:
        a, b = (results[be] for be in backends)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]), \
            "backends disagree; determinism contract broken"
    matches = len(seeds)
    print(f"{name}: {matches} matches x {turns} turns")
    for backend in backends:
        per = timings[backend] / matches * 1e6
        print(f"  {backend:>6s}  {timings[backend] * 1e3:9.2f} ms   {per:8.2f} us/match")
    if len(backends) == 2:
        ratio = timings[backends[1]] / timings[backends[0]]
        print(f"  {backends[0]} is {ratio:.1f}x faster")
    print()


def main():
    parser = argparse.ArgumentParser(description="kernel backend benchmark")
    parser.add_argument("--repeat", type=int, default=5,
                        help="timed repetitions per workload (best is reported)")
    args = parser.parse_args()

    backends = ["numba", "numpy"] if HAS_NUMBA else ["numpy"]
    if not HAS_NUMBA:
        print("numba not importable; timing the numpy path only\n")
    run("tournament", tournament_batch, backends, args.repeat)
    run("evolution", evolution_batch, backends, args.repeat)


if __name__ == "__main__":
    main()
