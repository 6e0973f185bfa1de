"""Time graph construction plus reachability on synthetic programs of growing size.

    python3 scripts/scaling.py --sizes 5000 10000 20000 40000
"""

import argparse
import gc
import statistics
import time
from dataclasses import dataclass

from cpsopt.cfa import analyze
from cpsopt.reflow import build_graph, reach_map
from cpsopt.synth import chain_program

NODES_PER_FUNCTION = 16


@dataclass
class ScalingConfig:
    sizes: tuple = (5000, 10000, 20000)
    runs: int = 5
    fanout: int = 2
    seed: int = 0


def time_once(p, r):
    gc.collect()
    gc.disable()
    try:
        start = time.perf_counter()
        g = build_graph(p, r)
        reach_map(g)
        return time.perf_counter() - start, len(g.nodes)
    finally:
        gc.enable()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=list(ScalingConfig.sizes))
    ap.add_argument("--runs", type=int, default=ScalingConfig.runs)
    ap.add_argument("--fanout", type=int, default=ScalingConfig.fanout)
    ap.add_argument("--seed", type=int, default=ScalingConfig.seed)
    cfg = ScalingConfig(**vars(ap.parse_args()))

    print(f"{'nodes':>8} {'median s':>10} {'ratio':>6}")
    prev = None
    for target in cfg.sizes:
        p = chain_program(max(1, target // NODES_PER_FUNCTION), cfg.seed, cfg.fanout)
        r = analyze(p)
        samples = [time_once(p, r) for _ in range(cfg.runs)]
        t = statistics.median(s for s, _ in samples)
        ratio = f"{t / prev:6.2f}" if prev else "     -"
        print(f"{samples[0][1]:>8} {t:>10.4f} {ratio}")
        prev = t


if __name__ == "__main__":
    main()
