"""Time the compiled kernels against their NumPy/pure-Python twins.

Run with ``python benchmarks/bench_kernels.py``. Both backends are imported
directly, so the result does not depend on ``SEQSEL_PURE_PYTHON``.
"""

import argparse
import timeit

import numpy as np

from seqsel import _kernels_py

try:
    from seqsel import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    x = rng.uniform(0.0, 200.0, 20000)
    field = rng.standard_normal((2, 2**18)) + 1j * rng.standard_normal((2, 2**18))
    d = rng.standard_normal((1, 2**17)) + 1j * rng.standard_normal((1, 2**17))
    return {
        "log_gammainc_lower(s=64, 2e4 pts)": lambda m: m.log_gammainc_lower(64.0, x),
        "nonlinear_phase(2 x 2^18)": lambda m: m.nonlinear_phase(field.copy(), 1e-3),
        "window_energy(2^17, n=64)": lambda m: m.window_energy(d, 64),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    print(f"{'kernel':36s}" + "".join(f"{name:>12s}" for name, _ in backends) + f"{'speedup':>10s}")
    for label, fn in cases(rng).items():
        best = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        speed = f"{best[0] / best[1]:9.1f}x" if len(best) == 2 else f"{'n/a':>10s}"
        print(f"{label:36s}" + "".join(f"{t * 1e3:10.2f}ms" for t in best) + speed)


if __name__ == "__main__":
    main()
