"""Command-line harness: matrix generation, eigensolver runs, benchmark
tables, matching diagnostics, and oracle verification.

Subcommands: generate | solve | bench | match | verify.  Settings can come
from a config file (flat key=value INI sections [matrix], [factor],
[solver], [bench]) with command-line flags taking precedence.  Relative
output paths resolve against $ANDEIG_OUTPUT_DIR when that is set.

Exit codes: 0 success, 1 usage/config error, 2 numerical failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
import time

import numpy as np

from .anderson import (
    AndersonConfig,
    Boundary,
    Disorder,
    build_anderson,
    site_coords,
    wavefunction_probabilities,
)
from .dense import dense_eig
from .eigensolvers import (
    InnerSolveError,
    ShiftInvertSolver,
    SolverConfig,
    SolverStagnationError,
    cwi_solve,
    jd_solve,
    si_lanczos_ir,
)
from .matching import StructurallySingularError, symmetric_matching
from .mlildl import FactorBreakdownError, FactorParams, factorize
from .sparse import (
    MatrixFormatError,
    SparseSymMatrix,
    read_matrix_market,
    to_dense,
    write_matrix_market,
)

OUTPUT_DIR_ENV = "ANDEIG_OUTPUT_DIR"

#: Benchmark CSV schema, stable and documented (README: "Benchmark output").
BENCH_COLUMNS = [
    "m", "w", "boundary", "disorder", "seed", "solver", "status", "n", "nnz",
    "time_s", "fill_ratio", "outer_iters", "inner_total", "inner_avg",
    "max_residual",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _resolve_out(path: str) -> str:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _parse_list(text, conv):
    return [conv(tok) for tok in str(text).split(",") if tok.strip()]


def _load_config(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise OSError(f"config file not found: {path}")
    return cp


def _cfg_get(cp, section, key, flag_value, default, conv=str):
    """Flag > config file > built-in default."""
    if flag_value is not None:
        return flag_value
    if cp is not None and cp.has_option(section, key):
        return conv(cp.get(section, key))
    return default


def _matrix_from_args(args, cp) -> tuple[SparseSymMatrix, AndersonConfig | None]:
    path = _cfg_get(cp, "matrix", "path", getattr(args, "matrix", None), None)
    if path is not None:
        return read_matrix_market(path), None
    m = _cfg_get(cp, "matrix", "m", args.m, None, int)
    if m is None:
        raise UsageError("need either --matrix FILE or --m M")
    boundary = Boundary(_cfg_get(cp, "matrix", "boundary", args.boundary, "periodic"))
    disorder = Disorder(_cfg_get(cp, "matrix", "disorder", args.disorder, "diagonal"))
    cfg = AndersonConfig(
        m=int(m),
        w=float(_cfg_get(cp, "matrix", "w", args.w, 16.5, float)),
        boundary=boundary,
        disorder=disorder,
        shift=float(_cfg_get(cp, "matrix", "shift", args.shift, 1.28, float)),
        seed=int(_cfg_get(cp, "matrix", "seed", args.seed, 1, int)),
    )
    return build_anderson(cfg), cfg


def _factor_params(args, cp) -> FactorParams:
    eps = _cfg_get(cp, "factor", "epsilon", args.epsilon, "auto")
    if args.no_matching is not None:
        matching = not args.no_matching
    elif cp is not None and cp.has_option("factor", "matching"):
        matching = cp.getboolean("factor", "matching")
    else:
        matching = True
    if args.no_aggressive_drop is not None:
        aggressive = not args.no_aggressive_drop
    elif cp is not None and cp.has_option("factor", "aggressive_drop"):
        aggressive = cp.getboolean("factor", "aggressive_drop")
    else:
        aggressive = True
    ordering = None
    perm_file = getattr(args, "perm_file", None)
    if perm_file:
        ordering = _read_permutation_file(perm_file)
    return FactorParams(
        kappa=float(_cfg_get(cp, "factor", "kappa", args.kappa, 5.0, float)),
        epsilon=None if str(eps) == "auto" else float(eps),
        tau=float(_cfg_get(cp, "factor", "tau", args.tau, 0.1, float)),
        max_levels=int(_cfg_get(cp, "factor", "max_levels", args.max_levels, 25, int)),
        small_block_cutoff=int(_cfg_get(cp, "factor", "cutoff", args.cutoff, 200, int)),
        enable_matching=matching,
        enable_aggressive_drop=aggressive,
        ordering_override=ordering,
    )


def _read_permutation_file(path) -> np.ndarray:
    """One 1-based original index per line, listed in elimination order."""
    order = []
    with open(path, "r", encoding="ascii") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                order.append(int(line) - 1)
    return np.asarray(order, dtype=np.int64)


def _solver_config(args, cp) -> SolverConfig:
    return SolverConfig(
        n_wanted=int(_cfg_get(cp, "solver", "n_wanted", args.n_wanted, 5, int)),
        target_sigma=float(_cfg_get(cp, "solver", "target", args.target, 0.0, float)),
        max_basis=int(_cfg_get(cp, "solver", "max_basis", args.max_basis, 20, int)),
        restart_size=int(_cfg_get(cp, "solver", "restart_size", args.restart_size, 8, int)),
        outer_tol=float(_cfg_get(cp, "solver", "outer_tol", args.outer_tol, 1e-8, float)),
        seed=int(_cfg_get(cp, "solver", "seed", args.solver_seed, 1, int)),
        cwi_factor=float(_cfg_get(cp, "solver", "cwi_factor", args.cwi_factor, 4.0, float)),
    )


class _TraceRecorder:
    def __init__(self, stream=None):
        self.stream = stream
        self.outer = 0
        self.inner_total = 0

    def __call__(self, event):
        if event.get("outer"):
            self.outer = max(self.outer, event["outer"])
        if event.get("inner"):
            self.inner_total += event["inner"]
        if self.stream is not None:
            fields = " ".join(f"{k}={v}" for k, v in event.items() if v is not None)
            print(f"trace {fields}", file=self.stream)


def _run_solver(name, a, fparams, scfg, trace):
    """Returns (pairs, info dict with timings/iteration counts)."""
    info = {"solver": name}
    t0 = time.perf_counter()
    if name == "cwi":
        pairs = cwi_solve(a, scfg, trace=trace)
        info["fill_ratio"] = ""
        info["outer_iters"] = ""
        info["inner_total"] = ""
    elif name == "silanczos":
        t1 = time.perf_counter()
        solver = ShiftInvertSolver(a, scfg.target_sigma, params=fparams)
        info["factor_time_s"] = time.perf_counter() - t1
        info["factor_report"] = solver.factor.stats_report()
        pairs = si_lanczos_ir(a, solver, scfg, trace=trace)
        info["fill_ratio"] = f"{_solver_fill(solver):.4f}"
        info["outer_iters"] = trace.outer if trace else ""
        info["inner_total"] = solver.total_iterations
        info["inner_calls"] = solver.calls
    elif name == "jd":
        t1 = time.perf_counter()
        factor = factorize(_shift_matrix(a, scfg.target_sigma), fparams)
        info["factor_time_s"] = time.perf_counter() - t1
        info["factor_report"] = factor.stats_report()
        pairs = jd_solve(a, lambda theta: factor, scfg, trace=trace)
        info["fill_ratio"] = f"{factor.fill_ratio:.4f}"
        info["outer_iters"] = trace.outer if trace else ""
        info["inner_total"] = trace.inner_total if trace else ""
    else:
        raise UsageError(f"unknown solver {name!r}; pick cwi, silanczos, or jd")
    info["time_s"] = time.perf_counter() - t0
    return pairs, info


def _solver_fill(solver: ShiftInvertSolver) -> float:
    return solver.factor.fill_ratio


def _shift_matrix(a: SparseSymMatrix, sigma: float) -> SparseSymMatrix:
    if sigma == 0.0:
        return a
    vals = a.values.copy()
    vals[a.row_starts[1:] - 1] -= sigma
    return SparseSymMatrix(a.n, a.row_starts, a.col_indices, vals, _validate=False)


def _add_matrix_args(p):
    p.add_argument("--matrix", help="Matrix Market file to load instead of generating")
    p.add_argument("--m", type=int, help="grid edge length (n = m^3)")
    p.add_argument("--w", type=float, help="disorder strength (default 16.5)")
    p.add_argument("--boundary", choices=["periodic", "hardwall"])
    p.add_argument("--disorder", choices=["diagonal", "offdiagonal"])
    p.add_argument("--shift", type=float, help="diagonal shift of the off-diagonal model")
    p.add_argument("--seed", type=int, help="disorder seed (default 1)")


def _add_factor_args(p):
    p.add_argument("--kappa", type=float, help="inverse-norm pivot bound (default 5)")
    p.add_argument("--epsilon", help="drop threshold, number or 'auto' (=1/sqrt(n))")
    p.add_argument("--tau", type=float, help="aggressive-drop constant (default 0.1)")
    p.add_argument("--max-levels", type=int, dest="max_levels")
    p.add_argument("--cutoff", type=int, help="dense finish dimension (default 200)")
    p.add_argument("--no-matching", action="store_const", const=True, dest="no_matching")
    p.add_argument("--no-aggressive-drop", action="store_const", const=True,
                   dest="no_aggressive_drop")


def _add_solver_args(p):
    p.add_argument("--solver", choices=["cwi", "silanczos", "jd"])
    p.add_argument("--n-wanted", type=int, dest="n_wanted")
    p.add_argument("--target", type=float, help="target shift (default 0)")
    p.add_argument("--max-basis", type=int, dest="max_basis")
    p.add_argument("--restart-size", type=int, dest="restart_size")
    p.add_argument("--outer-tol", type=float, dest="outer_tol")
    p.add_argument("--solver-seed", type=int, dest="solver_seed")
    p.add_argument("--cwi-factor", type=float, dest="cwi_factor")
    p.add_argument("--perm-file", dest="perm_file",
                   help="file with one index per line overriding the fill ordering")


def cmd_generate(args) -> int:
    cp = _load_config(args.config) if args.config else None
    a, cfg = _matrix_from_args(args, cp)
    if cfg is None:
        raise UsageError("generate needs Anderson parameters, not --matrix")
    out = _resolve_out(args.out)
    write_matrix_market(a, out)
    print(f"n {a.n}")
    print(f"nnz {a.nnz_lower}")
    print(f"seed {cfg.seed}")
    print(f"wrote {out}")
    return 0


def cmd_solve(args) -> int:
    cp = _load_config(args.config) if args.config else None
    a, acfg = _matrix_from_args(args, cp)
    fparams = _factor_params(args, cp)
    scfg = _solver_config(args, cp)
    solver = _cfg_get(cp, "solver", "name", args.solver, "jd")
    trace = _TraceRecorder(sys.stdout if args.trace else None)
    pairs, info = _run_solver(solver, a, fparams, scfg, trace)
    if args.trace and info.get("factor_report"):
        print(info["factor_report"])
    norm1 = a.norm1()
    print(f"matrix n={a.n} nnz={a.nnz_lower} norm1={norm1:.6g}")
    print(f"solver {solver}: {info['time_s']:.3f} s"
          + (f" (factor {info['factor_time_s']:.3f} s)" if "factor_time_s" in info else ""))
    if info.get("fill_ratio"):
        print(f"fill ratio {info['fill_ratio']}")
    if info.get("inner_total") not in ("", None):
        print(f"iterations outer={info.get('outer_iters')} inner={info['inner_total']}")
    est_bytes = a.nnz_lower * 16 + (0 if solver == "cwi" else int(float(info["fill_ratio"] or 0)
                                                                  * a.nnz_lower * 16))
    print(f"memory estimate {est_bytes / 1e6:.2f} MB")
    for p in pairs:
        print(f"lambda {p.value:+.15e}  residual {p.residual:.3e}  "
              f"converged {p.converged}  mult {p.multiplicity_hint}")
    if args.dump_probabilities:
        _dump_probabilities(pairs, acfg, a.n, _resolve_out(args.dump_probabilities))
    if args.verify:
        return _verify_pairs(a, pairs, args.verify_tol, norm1)
    if not all(p.converged for p in pairs):
        return 2
    return 0


def _dump_probabilities(pairs, acfg, n, path):
    with open(path, "w", encoding="ascii") as f:
        header = ["i", "j", "k"] if acfg is not None else ["index"]
        header += [f"p{t}" for t in range(len(pairs))]
        f.write("\t".join(header) + "\n")
        probs = [wavefunction_probabilities(p.vector) for p in pairs]
        for idx in range(n):
            if acfg is not None:
                i, j, k = site_coords(idx, acfg.m)
                cells = [str(i), str(j), str(k)]
            else:
                cells = [str(idx)]
            cells += [f"{pr[idx]:.17e}" for pr in probs]
            f.write("\t".join(cells) + "\n")
    print(f"wrote probabilities {path}")


def _verify_pairs(a, pairs, tol, norm1, quiet=False) -> int:
    if a.n > 5000:
        raise UsageError(f"--verify needs n <= 5000 (got {a.n})")
    w_ref, v_ref = dense_eig(to_dense(a))
    max_err = 0.0
    max_sin = 0.0
    for p in pairs:
        err = float(np.min(np.abs(w_ref - p.value)))
        max_err = max(max_err, err)
        cluster = np.abs(w_ref - p.value) <= max(1e-6 * norm1, 10 * err)
        basis = v_ref[:, cluster]
        proj = p.vector - basis @ (basis.T @ p.vector)
        max_sin = max(max_sin, float(np.linalg.norm(proj)))
    ok = max_err <= tol * norm1 and max_sin <= 1e-5
    if not quiet:
        print(f"verify: max eigenvalue error {max_err:.3e} "
              f"({max_err / norm1:.3e} of norm1), max principal-angle sine {max_sin:.3e} "
              f"-> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 2


def cmd_verify(args) -> int:
    cp = _load_config(args.config) if args.config else None
    a, _ = _matrix_from_args(args, cp)
    if a.n > 5000:
        raise UsageError(f"verify needs n <= 5000 (got {a.n})")
    fparams = _factor_params(args, cp)
    scfg = _solver_config(args, cp)
    solvers = _parse_list(args.solvers, str) if args.solvers else ["cwi", "silanczos", "jd"]
    worst = 0
    for name in solvers:
        trace = _TraceRecorder(None)
        pairs, _info = _run_solver(name, a, fparams, scfg, trace)
        print(f"[{name}]", end=" ")
        worst = max(worst, _verify_pairs(a, pairs, args.tol, a.norm1()))
    return worst


def cmd_match(args) -> int:
    cp = _load_config(args.config) if args.config else None
    a, _ = _matrix_from_args(args, cp)
    try:
        result = symmetric_matching(a)
    except StructurallySingularError as exc:
        print(f"matching failed: {exc}", file=sys.stderr)
        return 2
    out = open(_resolve_out(args.out), "w", encoding="ascii") if args.out else sys.stdout
    try:
        print(f"# symmetric matching of n={a.n} matrix", file=out)
        print("# blocks (1-based indices)", file=out)
        for blk in result.blocks:
            members = " ".join(str(i + 1) for i in blk.members)
            print(f"block {members}", file=out)
        print("# permutation p_s (new order of original 1-based indices)", file=out)
        order = " ".join(str(i + 1) for i in result.p_s.inverse)
        print(f"order {order}", file=out)
        print("# scaling diagonal", file=out)
        for i, d in enumerate(result.scaling.d):
            print(f"scale {i + 1} {float(d)!r}", file=out)
        if result.scaling.fallback:
            print("# note: dual scaling overflowed; rescale-by-max fallback used", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
            print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    cp = _load_config(args.config) if args.config else None
    ms = _parse_list(_cfg_get(cp, "bench", "m_list", args.m_list, "8"), int)
    ws = _parse_list(_cfg_get(cp, "bench", "w_list", args.w_list, "16.5"), float)
    kappas = _parse_list(_cfg_get(cp, "bench", "kappa_list", args.kappa_list, "5"), float)
    seeds = _parse_list(_cfg_get(cp, "bench", "seeds", args.seeds, "1"), int)
    solvers = _parse_list(_cfg_get(cp, "bench", "solvers", args.solvers, "jd"), str)
    eps_raw = _cfg_get(cp, "bench", "epsilon_list", args.epsilon_list, "auto")
    eps_list = [None if tok == "auto" else float(tok) for tok in str(eps_raw).split(",")]
    cutoff = int(_cfg_get(cp, "factor", "cutoff", args.cutoff, 200, int))
    out = _resolve_out(args.out)
    rows = []
    _write_csv(out, rows)  # header survives even when the grid is empty
    for m in ms:
        for w in ws:
            for seed in seeds:
                acfg = AndersonConfig(m=m, w=w, seed=seed)
                a = build_anderson(acfg)
                for kappa in kappas:
                    for eps in eps_list:
                        fparams = FactorParams(kappa=kappa, epsilon=eps,
                                               small_block_cutoff=cutoff)
                        for name in solvers:
                            rows.append(_bench_row(a, acfg, fparams, name, args, cp))
                            _write_csv(out, rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _bench_row(a, acfg, fparams, name, args, cp):
    scfg = _solver_config(args, cp)
    trace = _TraceRecorder(None)
    row = {
        "m": acfg.m, "w": acfg.w, "boundary": acfg.boundary.value,
        "disorder": acfg.disorder.value, "seed": acfg.seed, "solver": name,
        "n": a.n, "nnz": a.nnz_lower,
    }
    try:
        pairs, info = _run_solver(name, a, fparams, scfg, trace)
        inner = info.get("inner_total")
        outer = info.get("outer_iters")
        row.update({
            "status": "ok",
            "time_s": f"{info['time_s']:.3f}",
            "fill_ratio": info.get("fill_ratio", ""),
            "outer_iters": outer if outer not in (None, "") else "",
            "inner_total": inner if inner not in (None, "") else "",
            "inner_avg": f"{inner / max(outer, 1):.2f}"
            if isinstance(inner, int) and isinstance(outer, int) and outer else "",
            "max_residual": f"{max(p.residual for p in pairs):.3e}",
        })
    except (FactorBreakdownError, SolverStagnationError, InnerSolveError,
            StructurallySingularError) as exc:
        row.update({"status": f"failed: {exc.__class__.__name__}", "time_s": "",
                    "fill_ratio": "", "outer_iters": "", "inner_total": "",
                    "inner_avg": "", "max_residual": ""})
    return row


def _write_csv(path, rows):
    with open(path, "w", newline="", encoding="ascii") as f:
        writer = csv.DictWriter(f, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _build_parser() -> _Parser:
    parser = _Parser(prog="andeig",
                     description="Interior eigenpairs of Anderson-model matrices")
    parser.add_argument("--config", help="INI config file with sections "
                        "[matrix], [factor], [solver], [bench]")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write an Anderson matrix as Matrix Market")
    _add_matrix_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one eigensolver and print the pairs")
    _add_matrix_args(p)
    _add_factor_args(p)
    _add_solver_args(p)
    p.add_argument("--trace", action="store_true", help="stream per-iteration lines")
    p.add_argument("--dump-probabilities", dest="dump_probabilities",
                   help="write per-site |x|^2 TSV for the returned pairs")
    p.add_argument("--verify", action="store_true",
                   help="append a dense-oracle comparison (n <= 5000)")
    p.add_argument("--verify-tol", type=float, default=1e-7, dest="verify_tol")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="sweep parameter grids into a CSV table")
    _add_factor_args(p)
    _add_solver_args(p)
    p.add_argument("--m-list", dest="m_list")
    p.add_argument("--w-list", dest="w_list")
    p.add_argument("--kappa-list", dest="kappa_list")
    p.add_argument("--epsilon-list", dest="epsilon_list")
    p.add_argument("--seeds", dest="seeds")
    p.add_argument("--solvers", dest="solvers", help="comma list: cwi,silanczos,jd")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("match", help="dump matching blocks, permutation, scaling")
    _add_matrix_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("verify", help="compare solver output against the dense oracle")
    _add_matrix_args(p)
    _add_factor_args(p)
    _add_solver_args(p)
    p.add_argument("--solvers", help="comma list to verify (default all three)")
    p.add_argument("--tol", type=float, default=1e-7,
                   help="eigenvalue tolerance relative to norm1")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FactorBreakdownError, SolverStagnationError, InnerSolveError,
            StructurallySingularError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, MatrixFormatError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
