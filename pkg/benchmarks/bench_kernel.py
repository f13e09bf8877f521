"""Compiled vs pure-Python board kernel.

    python3 benchmarks/bench_kernel.py [--positions 40] [--repeat 5]

Times the hot kernel calls on random mid-game positions for each backend
and prints the per-call cost and the speed-up. Results must agree; the
script exits nonzero if they do not.
"""
import argparse
import sys
import timeit

import numpy as np

from aigap import _pykernel
from aigap.board import apply_move, initial_state
from aigap.synth import random_moves

try:
    from aigap import _ckernel
except ImportError:
    _ckernel = None


def positions(n, size, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        state = initial_state(size)
        for m in random_moves(rng, size, int(rng.integers(size * 2, size * size // 2 + size))):
            state = apply_move(state, m)
        out.append((state.grid, size, int(state.to_move), -1 if state.ko_index is None else state.ko_index))
    return out


CALLS = {
    "legal_points": lambda k, g, s, c, ko: k.legal_points(g, s, c, ko),
    "successor_scores": lambda k, g, s, c, ko: k.successor_scores(g, s, c, ko),
    "state_score": lambda k, g, s, c, ko: k.state_score(g, s, c),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--positions", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=20201116)
    args = ap.parse_args(argv)
    if _ckernel is None:
        print("compiled kernel not built; run `pip install --no-build-isolation -e .` first")
        return 1

    print(f"{'size':>4}  {'call':<18} {'python us':>11} {'cython us':>11} {'speed-up':>9}")
    for size in (9, 13, 19):
        pos = positions(args.positions, size, args.seed + size)
        for name, call in CALLS.items():
            for p in pos:
                if call(_ckernel, *p) != call(_pykernel, *p):
                    print(f"backends disagree on {name} (size {size})")
                    return 2
            per = {}
            for label, k in (("python", _pykernel), ("cython", _ckernel)):
                t = min(timeit.repeat(lambda: [call(k, *p) for p in pos], number=1, repeat=args.repeat))
                per[label] = t / len(pos) * 1e6
            print(f"{size:>4}  {name:<18} {per['python']:>11.1f} {per['cython']:>11.1f} "
                  f"{per['python'] / per['cython']:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
