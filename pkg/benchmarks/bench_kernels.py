"""Wall-time comparison of the two kernel builds.

Backend selection happens at import time (PAINLEVEKIT_DISABLE_NUMBA), so
each measurement runs in a child process with a clean environment.  Every
child warms its kernel once before timing; the table reports the best of
--repeat runs per cell.

    python3 benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = ("darboux-filter", "dopri5-path")


def _work(name):
    from fractions import Fraction

    from painlevekit import catalog, numint
    from painlevekit.dvariety import SearchBounds, darboux_search

    if name == "darboux-filter":
        inst = catalog.instantiate("S2", {"alpha": Fraction(1, 2)})
        bounds = SearchBounds(2, 1, 3)
        return lambda: darboux_search(inst.derivation, bounds)
    inst = catalog.instantiate("S2", {"alpha": Fraction(-1, 2)})
    path = [1, 3 + 2j, 6, 2 - 1j]
    return lambda: numint.integrate(inst, (1, 0.3, 0), path, tol=1e-13)


def run_child(name, repeat):
    from painlevekit import _accel

    fn = _work(name)
    fn()  # warm-up: jit compilation and module caches stay untimed
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    print(json.dumps({
        "workload": name,
        "backend": "numba" if _accel.HAS_NUMBA else "numpy",
        "best": min(runs),
        "runs": runs,
    }))


def run_parent(repeat):
    cells = {}
    for name in WORKLOADS:
        for disable in ("", "1"):
            env = dict(os.environ, PAINLEVEKIT_DISABLE_NUMBA=disable)
            out = subprocess.run(
                [sys.executable, os.path.abspath(__file__),
                 "--workload", name, "--repeat", str(repeat)],
                env=env, capture_output=True, text=True, check=True)
            rec = json.loads(out.stdout.strip().splitlines()[-1])
            expected = "numpy" if disable else "numba"
            if rec["backend"] != expected:
                raise SystemExit("expected %s backend, child reports %s "
                                 "(is numba installed?)"
                                 % (expected, rec["backend"]))
            cells[(name, rec["backend"])] = rec["best"]

    print("%-16s %12s %12s %10s" % ("workload", "numba", "numpy", "speedup"))
    for name in WORKLOADS:
        nb = cells[(name, "numba")]
        np_ = cells[(name, "numpy")]
        print("%-16s %11.4fs %11.4fs %9.1fx" % (name, nb, np_, np_ / nb))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--workload", choices=WORKLOADS,
                    help="internal: run one workload in this process")
    args = ap.parse_args()
    if args.workload:
        run_child(args.workload, args.repeat)
    else:
        run_parent(args.repeat)


if __name__ == "__main__":
    main()
