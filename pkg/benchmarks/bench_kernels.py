"""Time the numba and numpy kernels side by side.

    python3 benchmarks/bench_kernels.py [--n 10 12 14] [--repeat 20]

Also times one full energy + gradient evaluation under each backend in a
subprocess, since the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from forge import kernels
from forge._accel import HAVE_NUMBA

GRADIENT_SNIPPET = """
import timeit
import numpy as np
from forge import kernels
from forge.graph import generate_regular_graph
from forge.optimize.gradient import Problem, energy_and_angle_gradient
from forge.quantum import AngleSchedule
prob = Problem(generate_regular_graph({n}, 3, 1))
rng = np.random.default_rng(0)
sched = AngleSchedule(rng.uniform(0, 1, {p}), rng.uniform(0, 1, {p}))
energy_and_angle_gradient(prob, sched)
t = min(timeit.repeat(lambda: energy_and_angle_gradient(prob, sched), number=1, repeat={repeat}))
print(kernels.BACKEND, t)
"""


def _best(fn, repeat):
    fn()  # warm-up (triggers compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(sizes, repeat):
    rows = []
    for n in sizes:
        rng = np.random.default_rng(n)
        dim = 1 << n
        psi = (rng.normal(size=dim) + 1j * rng.normal(size=dim)).astype(np.complex128)
        lam = psi.copy()
        diag = rng.normal(size=dim)
        out = np.empty_like(psi)
        factors = np.exp(-0.3j * diag)
        cases = {
            "mixer": (lambda f: lambda: f(psi, 0.3, n), "mixer_inplace"),
            "hamiltonian": (lambda f: lambda: f(psi, n, 0.7, 0.4, diag, out), "hamiltonian_apply"),
            "hx_inner": (lambda f: lambda: f(lam, psi, n), "hx_inner"),
            "phase": (lambda f: lambda: f(0.3, diag, out), "phase_factors"),
            "backward": (lambda f: lambda: f(lam, psi, 0.2, factors, diag, n), "backward_layer"),
        }
        for label, (make, name) in cases.items():
            t_np = _best(make(getattr(kernels, name + "_np")), repeat)
            t_nb = _best(make(getattr(kernels, name + "_nb")), repeat) if HAVE_NUMBA else float("nan")
            rows.append((n, label, t_np, t_nb))
    return rows


def gradient_table(n, p, repeat):
    out = {}
    for flag in ("1", ""):
        env = dict(os.environ, FORGE_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", GRADIENT_SNIPPET.format(n=n, p=p, repeat=repeat)],
                             env=env, capture_output=True, text=True, check=True)
        backend, t = res.stdout.split()
        out[backend] = float(t)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[10, 12, 14])
    ap.add_argument("--p", type=int, default=64, help="layers for the gradient timing")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    print(f"{'n':>3} {'kernel':<12} {'numpy [ms]':>11} {'numba [ms]':>11} {'speed-up':>9}")
    for n, label, t_np, t_nb in kernel_table(args.n, args.repeat):
        print(f"{n:>3} {label:<12} {1e3 * t_np:11.4f} {1e3 * t_nb:11.4f} {t_np / t_nb:9.2f}")
    n = max(args.n)
    grad = gradient_table(n, args.p, max(3, args.repeat // 4))
    t_np, t_nb = grad.get("numpy", float("nan")), grad.get("numba", float("nan"))
    print(f"\nenergy + gradient, n={n}, P={args.p}: numpy {1e3 * t_np:.2f} ms, numba {1e3 * t_nb:.2f} ms, "
          f"speed-up {t_np / t_nb:.2f}")


if __name__ == "__main__":
    main()
