#!/usr/bin/env python3
"""The three eigensolver strategies side by side.

Storage-free Lanczos needs nothing but matrix-vector products yet burns many
of them; shift-invert Lanczos converges in few outer steps but must solve
every inner system to full accuracy; Jacobi-Davidson tolerates crude inner
solves until an eigenpair is nearly converged.  All three must agree.
"""

import time

import numpy as np

import andeig as ae

m, w = 10, 16.5
a = ae.build_anderson(ae.AndersonConfig(m=m, w=w, seed=1))
scfg = ae.SolverConfig(n_wanted=5, seed=1)
print(f"anderson m={m}, w={w}: n={a.n}\n")

t0 = time.perf_counter()
factor = ae.factorize(a)
t_factor = time.perf_counter() - t0
print(f"multilevel factor: {t_factor:.2f} s, fill {factor.fill_ratio:.2f}\n")

results = {}

t0 = time.perf_counter()
pairs = ae.cwi_solve(a, scfg)
results["cwi"] = (pairs, time.perf_counter() - t0,
                  f"{4 * a.n} matvecs x 2 passes, no basis stored")

solver = ae.ShiftInvertSolver(a, 0.0, factor=factor)
t0 = time.perf_counter()
pairs = ae.si_lanczos_ir(a, solver, scfg)
results["silanczos"] = (pairs, time.perf_counter() - t0,
                        f"{solver.calls} inner solves, "
                        f"{solver.total_iterations} sqmr iterations")

inner = {"n": 0}
def trace(event):
    if event.get("inner"):
        inner["n"] += event["inner"]

t0 = time.perf_counter()
pairs = ae.jd_solve(a, lambda theta: factor, scfg, trace=trace)
results["jd"] = (pairs, time.perf_counter() - t0,
                 f"{inner['n']} sqmr iterations across the correction solves")

reference = None
for name, (pairs, seconds, note) in results.items():
    values = np.sort([p.value for p in pairs])
    if reference is None:
        reference = values
    dev = np.abs(values - reference).max()
    print(f"{name:>9}: {seconds:6.2f} s   {note}")
    print(f"{'':>9}  eigenvalues {np.array_str(values, precision=8)}")
    print(f"{'':>9}  max cross-solver deviation {dev:.2e}\n")
