"""Time the three-branch DDPM and the adaptive convolution against the loop reference.

    python scripts/bench_ddpm.py --size 80 --repeats 5
"""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from hdfnet import oracles
from hdfnet.dynfilter import DILATIONS, adaptive_conv, ddpm_forward, init_ddpm


@dataclass
class BenchConfig:
    size: int = 80
    channels: int = 64
    reduced: int = 16
    repeats: int = 5
    seed: int = 0
    skip_reference: bool = False


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run(cfg: BenchConfig):
    rng = np.random.default_rng(cfg.seed)
    params = init_ddpm(rng, channels=cfg.channels, reduced=cfg.reduced, tm_channels=cfg.channels)
    f_drgb = rng.standard_normal((1, cfg.channels, cfg.size, cfg.size))
    f_tm = rng.standard_normal((1, cfg.channels, cfg.size, cfg.size))
    t = best_of(lambda: ddpm_forward(f_drgb, f_tm, params), cfg.repeats)
    print(f"ddpm forward 1x{cfg.channels}x{cfg.size}x{cfg.size}: {t * 1e3:.1f} ms")

    f_r = rng.standard_normal((1, cfg.reduced, cfg.size, cfg.size))
    kern = rng.standard_normal((1, 9, cfg.size, cfg.size))
    for d in DILATIONS:
        fast = best_of(lambda: adaptive_conv(f_r, kern, d), cfg.repeats)
        line = f"adaptive conv d={d}: {fast * 1e3:.2f} ms"
        if not cfg.skip_reference:
            slow = best_of(lambda: oracles.adaptive_conv_loops(f_r, kern, d), 1)
            line += f", loop reference {slow:.2f} s, speed-up {slow / fast:.0f}x"
        print(line)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=BenchConfig.size)
    ap.add_argument("--repeats", type=int, default=BenchConfig.repeats)
    ap.add_argument("--seed", type=int, default=BenchConfig.seed)
    ap.add_argument("--skip-reference", action="store_true")
    args = ap.parse_args()
    run(BenchConfig(size=args.size, repeats=args.repeats, seed=args.seed, skip_reference=args.skip_reference))


if __name__ == "__main__":
    main()
