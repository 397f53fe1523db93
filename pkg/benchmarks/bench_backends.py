"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_backends.py [--size 640x480] [--repeat 5]

Kernel timings call the ``*_np`` / ``*_nb`` functions directly.  The short
ALM run is done in subprocesses with ``FRINGETV_NUMBA`` set to 1 and 0, since
the backend is chosen at import time.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fringetv import _kernels

ALM_SNIPPET = """
import time
from fringetv import _kernels
from fringetv.alm import alm_demodulate
from fringetv.common import SolverConfig
from fringetv.synth import SyntheticSpec, synthesize
gt = synthesize(SyntheticSpec(width={w}, height={h}))
cfg = SolverConfig(max_outer_iters={iters})
alm_demodulate(gt.g, gt.omega, SolverConfig(max_outer_iters=1), log_energy=False)  # warm-up / JIT
t0 = time.perf_counter()
alm_demodulate(gt.g, gt.omega, cfg, log_energy=False)
print(_kernels.backend(), time.perf_counter() - t0)
"""


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(h, w, repeat):
    rng = np.random.default_rng(0)
    s = rng.standard_normal((h, w))
    v = rng.standard_normal((2, h, w))
    coeff = rng.uniform(0, 10, (h, w))
    kappa = rng.uniform(0.5, 2, (h, w))
    x0 = np.zeros((h, w))
    cases = {
        "grad": (lambda: _kernels.grad_np(s), lambda: _kernels.grad_nb(s)),
        "div": (lambda: _kernels.div_np(v), lambda: _kernels.div_nb(v)),
        "soft_threshold": (lambda: _kernels.soft_threshold_np(v, 11.5),
                           lambda: _kernels.soft_threshold_nb(v, 11.5)),
        "apply": (lambda: _kernels.apply_np(coeff, 11.5, kappa, s),
                  lambda: _kernels.apply_nb(coeff, 11.5, kappa, True, s)),
        "pcg (200 it max)": (lambda: _kernels.pcg_np(coeff, 11.5, None, s, x0, 1e-6, 200, True),
                             lambda: _kernels.pcg_nb(coeff, 11.5, _kernels._EMPTY, False, s, x0, 1e-6, 200, True)),
    }
    for np_fn, nb_fn in cases.values():
        nb_fn()  # compile
    rows = []
    for name, (np_fn, nb_fn) in cases.items():
        t_np, t_nb = best_of(np_fn, repeat), best_of(nb_fn, repeat)
        rows.append((name, t_np, t_nb))
    return rows


def alm_run(h, w, iters, flag):
    env = dict(os.environ, FRINGETV_NUMBA=flag)
    code = ALM_SNIPPET.format(w=w, h=h, iters=iters)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", default="640x480")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--alm-iters", type=int, default=10)
    args = ap.parse_args()
    w, h = (int(x) for x in args.size.lower().split("x"))
    if not _kernels.NUMBA_AVAILABLE:
        sys.exit("numba is not installed; nothing to compare")

    print(f"grid {w}x{h}, best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, t_np, t_nb in kernel_table(h, w, args.repeat):
        print(f"{name:<18}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}")

    res = {flag: alm_run(h, w, args.alm_iters, flag) for flag in ("1", "0")}
    t_nb, t_np = res["1"][1], res["0"][1]
    print(f"{'alm x' + str(args.alm_iters):<18}{1e3 * t_np:>12.0f}{1e3 * t_nb:>12.0f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
