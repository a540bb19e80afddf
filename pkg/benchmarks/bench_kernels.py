#!/usr/bin/env python3
"""Benchmark the batched-FK kernel backends (compiled vs pure NumPy).

The batched fingertip FK is the hot loop behind workspace sampling: one
opposability run evaluates it for 2 x 25,000 configurations per finger.
"""

import argparse
import time

import numpy as np

from dexkin import kernels
from dexkin.kinematics import pack_chain
from dexkin.model import build_archetype


def bench(func, packed, q, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*packed, q)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200_000, help="batch size")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    model = build_archetype("leap")
    chain = model.chains["index"]
    packed = pack_chain(chain)
    rng = np.random.default_rng(0)
    lim = chain.joint_limits()
    q = rng.uniform(lim[:, 0], lim[:, 1], size=(args.n, chain.dof))

    backends = kernels.available_backends()
    print(f"batched tip FK, leap index finger, n={args.n} (best of {args.repeats})")
    times = {}
    for name, mod in sorted(backends.items()):
        # agreement check before timing
        ref = backends["numpy"].batch_tip_positions(*packed, q[:128])
        got = mod.batch_tip_positions(*packed, q[:128])
        assert np.allclose(ref, got, atol=1e-12), f"{name} disagrees with numpy"
        times[name] = bench(mod.batch_tip_positions, packed, q, args.repeats)
        rate = args.n / times[name] / 1e6
        print(f"  {name:8s} {times[name] * 1e3:9.2f} ms   {rate:6.2f} M configs/s")
    if "cython" in times:
        print(f"  speedup  {times['numpy'] / times['cython']:.2f}x (cython over numpy)")
    else:
        print("  compiled backend not built; only numpy timed")
    print(f"selected backend at import: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
