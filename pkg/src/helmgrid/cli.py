"""Command-line entry points: solve, sweep, spectrum, bench.

Configuration comes from an optional ``key = value`` text file plus flag
overrides (flags win).  All outputs are CSV (UTF-8, comma separator, ``.``
decimal point, one header row, fixed column order) or JSON.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .blocked import TilePlan, bench
from .grid import ConstantK, WedgeK
from .problems import DEFAULT_PPW, ProblemConfig, setup_problem, shifted_operator, solve, sweep
from .spectrum import design_for_operator, jacobi_weights_for, symbol_samples

RESIDUALS_COLUMNS = ["iteration", "relative_residual"]
DIAGNOSTICS_COLUMNS = ["cycle", "level", "cgc_ratio", "pre_residual", "post_residual"]
SOLUTION_COLUMNS = ["ix", "iy", "re", "im"]
SWEEP_COLUMNS = ["k", "n", "iterations", "converged", "wall_time"]
SAMPLES_COLUMNS = ["re", "im", "level", "hf"]
TRIANGLES_COLUMNS = [
    "level",
    "v1_re", "v1_im", "v2_re", "v2_im", "v3_re", "v3_im",
    "w1_re", "w1_im", "w2_re", "w2_im", "w3_re", "w3_im",
    "achieved_stability", "achieved_smoothing",
]
BENCH_COLUMNS = [
    "plan", "time_ms", "mlups", "flops_per_point", "est_bytes_per_point",
    "intensity", "variance_flagged",
]


def write_csv(path: Path, columns, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def parse_k_spec(text: str):
    """``"40"`` -> ConstantK(40); ``"wedge:10,20,40[:0.33,0.67]"`` -> WedgeK."""
    text = text.strip()
    if text.startswith("wedge:"):
        parts = text.split(":")
        ks = [float(v) for v in parts[1].split(",")]
        if len(ks) != 3:
            raise ValueError(f"wedge spec needs three k values, got {parts[1]!r}")
        if len(parts) > 2:
            a, b = (float(v) for v in parts[2].split(","))
            return WedgeK(ks[0], ks[1], ks[2], interfaces=(a, b))
        return WedgeK(ks[0], ks[1], ks[2])
    return ConstantK(float(text))


def read_config_file(path: str) -> dict:
    """Plain ``key = value`` lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


_INT_KEYS = {"n", "layer_width", "levels", "nu_pre", "nu_post", "restart", "max_iter", "seed"}
_FLOAT_KEYS = {"sigma_max", "beta", "tol"}
_STR_KEYS = {"smoother", "precond", "rhs", "ramp"}


def config_from_sources(file_values: dict, args: argparse.Namespace) -> ProblemConfig:
    config = ProblemConfig()
    for key, value in file_values.items():
        if key == "k":
            config = replace(config, k=parse_k_spec(value))
        elif key in _INT_KEYS:
            config = replace(config, **{key: int(value)})
        elif key in _FLOAT_KEYS:
            config = replace(config, **{key: float(value)})
        elif key in _STR_KEYS:
            config = replace(config, **{key: value})
        else:
            raise ValueError(f"unknown config key {key!r}")
    overrides = {}
    for key in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "k", None) is not None:
        overrides["k"] = parse_k_spec(args.k)
    config = replace(config, **overrides)
    return config.validate()


def run_solve(config: ProblemConfig, out_dir: Path, diagnostics: bool = False,
              write_solution: bool = False) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    x, report, problem = solve(config, collect_diagnostics=diagnostics)

    payload = {"config": config_summary(config), "report": report.to_dict()}
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    write_csv(
        out_dir / "residuals.csv",
        RESIDUALS_COLUMNS,
        [(i, f"{r:.16e}") for i, r in enumerate(report.residual_history)],
    )
    if diagnostics and report.diagnostics is not None:
        write_csv(
            out_dir / "diagnostics.csv",
            DIAGNOSTICS_COLUMNS,
            [
                (r["cycle"], r["level"], f"{r['cgc_ratio']:.16e}",
                 f"{r['pre_residual']:.16e}", f"{r['post_residual']:.16e}")
                for r in report.diagnostics.rows
            ],
        )
    if write_solution:
        nx, ny = x.shape
        rows = [
            (ix, iy, f"{x[ix, iy].real:.16e}", f"{x[ix, iy].imag:.16e}")
            for iy in range(ny)
            for ix in range(nx)
        ]
        write_csv(out_dir / "solution.csv", SOLUTION_COLUMNS, rows)
    print(
        f"solve: {'converged' if report.converged else report.status} in "
        f"{report.iterations} iterations, final residual {report.final_residual:.3e}"
    )
    return 0 if report.converged else 3


def run_sweep(k_list, ppw: float, config: ProblemConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, fit = sweep(k_list, ppw=ppw, base=config)
    write_csv(
        out_dir / "sweep.csv",
        SWEEP_COLUMNS,
        [
            (f"{r['k']:g}", r["n"], r["iterations"], int(r["converged"]), f"{r['wall_time']:.6f}")
            for r in rows
        ],
    )
    (out_dir / "sweep_fit.json").write_text(json.dumps(fit, indent=2), encoding="utf-8")
    print(
        f"sweep: iterations vs k slope {fit['slope']:.3f}, "
        f"R^2 {fit['r_squared']:.4f} over k = {[r['k'] for r in rows]}"
    )
    return 0 if all(r["converged"] for r in rows) else 3


def run_spectrum(config: ProblemConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = setup_problem(config, with_designs=True)
    sample_rows = []
    triangle_rows = []
    for ell, level in enumerate(problem.hierarchy.levels):
        samples = symbol_samples(level.op, theta_count=config.theta_count, level=ell)
        sample_rows.extend(
            (f"{z.real:.16e}", f"{z.imag:.16e}", ell, int(hf))
            for z, hf in zip(samples.points, samples.hf_mask)
        )
        design = level.design
        v = design.triangle.vertices
        w = design.weights
        triangle_rows.append(
            (ell,
             f"{v[0].real:.16e}", f"{v[0].imag:.16e}",
             f"{v[1].real:.16e}", f"{v[1].imag:.16e}",
             f"{v[2].real:.16e}", f"{v[2].imag:.16e}",
             f"{w.w1.real:.16e}", f"{w.w1.imag:.16e}",
             f"{w.w2.real:.16e}", f"{w.w2.imag:.16e}",
             f"{w.w3.real:.16e}", f"{w.w3.imag:.16e}",
             f"{w.achieved_stability:.16e}", f"{w.achieved_smoothing:.16e}")
        )
    write_csv(out_dir / "spectrum_samples.csv", SAMPLES_COLUMNS, sample_rows)
    write_csv(out_dir / "spectrum_triangles.csv", TRIANGLES_COLUMNS, triangle_rows)
    print(f"spectrum: {len(triangle_rows)} levels, {len(sample_rows)} samples")
    return 0


def parse_tiles(text: str, n: int):
    plans = []
    for token in text.split(","):
        token = token.strip()
        size = n if token == "full" else int(token)
        plans.append(TilePlan(size, size))
    return plans


def run_bench(config: ProblemConfig, tiles: str, repetitions: int, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    op = shifted_operator(config)
    design = design_for_operator(op, theta_count=config.theta_count, budget=config.budget)
    weights = jacobi_weights_for(design, op)
    plans = parse_tiles(tiles, config.n)
    if not plans:
        raise ValueError("empty tile plan list")
    rows = bench(op, weights, plans, repetitions=repetitions, rng_seed=config.seed)
    write_csv(
        out_dir / "bench.csv",
        BENCH_COLUMNS,
        [
            (r.plan, f"{r.time_ms:.6f}", f"{r.mlups:.3f}", f"{r.flops_per_point:.3f}",
             f"{r.est_bytes_per_point:.3f}", f"{r.intensity:.4f}", int(r.variance_flagged))
            for r in rows
        ],
    )
    best = min(rows, key=lambda r: r.time_ms)
    print(f"bench: fastest plan {best.plan} at {best.mlups:.1f} MLUP/s")
    return 0


def config_summary(config: ProblemConfig) -> dict:
    k = config.k
    k_desc = (
        {"kind": "constant", "k0": k.k0}
        if isinstance(k, ConstantK)
        else {"kind": "wedge", "k_top": k.k_top, "k_mid": k.k_mid, "k_bot": k.k_bot,
              "interfaces": list(k.interfaces)}
    )
    return {
        "n": config.n,
        "k": k_desc,
        "layer_width": config.layer_width,
        "sigma_max": config.sigma_max,
        "beta": config.beta,
        "precond": config.precond,
        "smoother": config.smoother,
        "levels": config.levels,
        "nu_pre": config.nu_pre,
        "nu_post": config.nu_post,
        "tol": config.tol,
        "restart": config.restart,
        "max_iter": config.max_iter,
        "rhs": config.rhs,
        "seed": config.seed,
    }


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--n", type=int, help="interior grid points per axis")
    p.add_argument("--k", help="wave number: a float or wedge:kt,km,kb[:a,b]")
    p.add_argument("--beta", type=float, help="complex shift of the preconditioner")
    p.add_argument("--sigma-max", dest="sigma_max", type=float, help="peak layer stretch")
    p.add_argument("--layer-width", dest="layer_width", type=int, help="layer cells per side")
    p.add_argument("--smoother", choices=["poly3", "gmres3"], help="level smoother")
    p.add_argument("--precond", choices=["grid", "csl"], help="preconditioner flavor")
    p.add_argument("--levels", type=int, help="maximum multigrid levels")
    p.add_argument("--tol", type=float, help="relative residual tolerance")
    p.add_argument("--restart", type=int, help="FGMRES restart length")
    p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap")
    p.add_argument("--seed", type=int, help="seed for random right-hand sides")
    p.add_argument("--rhs", choices=["point", "random"], help="right-hand side kind")
    p.add_argument("--out-dir", dest="out_dir", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmgrid",
        description="2D Helmholtz solver with complex-shifted-grid multigrid preconditioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one configuration")
    _add_common_flags(p_solve)
    p_solve.add_argument("--diagnostics", action="store_true",
                         help="record per-cycle coarse-grid-correction ratios")
    p_solve.add_argument("--write-solution", action="store_true",
                         help="also write the solution field (large)")

    p_sweep = sub.add_parser("sweep", help="iteration counts across wave numbers")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--k-list", dest="k_list", required=True,
                         help="comma-separated wave numbers, e.g. 10,20,40,80")
    p_sweep.add_argument("--ppw", type=float, default=DEFAULT_PPW,
                         help="points per wavelength fixing n per k")

    p_spec = sub.add_parser("spectrum", help="per-level symbol samples, triangles, weights")
    _add_common_flags(p_spec)

    p_bench = sub.add_parser("bench", help="cache-blocked smoother benchmark")
    _add_common_flags(p_bench)
    p_bench.add_argument("--tiles", default="8,16,32,64,full",
                         help="comma-separated tile sizes; 'full' = whole domain")
    p_bench.add_argument("--reps", type=int, default=5, help="timing repetitions")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        config = config_from_sources(file_values, args)
        out_dir = Path(args.out_dir)
        if args.command == "solve":
            return run_solve(config, out_dir, diagnostics=args.diagnostics,
                             write_solution=args.write_solution)
        if args.command == "sweep":
            k_list = [float(v) for v in args.k_list.split(",")]
            return run_sweep(k_list, args.ppw, config, out_dir)
        if args.command == "spectrum":
            return run_spectrum(config, out_dir)
        if args.command == "bench":
            return run_bench(config, args.tiles, args.reps, out_dir)
        raise ValueError(f"unknown command {args.command!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
