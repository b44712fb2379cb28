"""Model problems: configuration, setup, solve, sweep.

The physical problem is the Helmholtz equation on the unit square with a
complex-scaled absorbing layer; the preconditioner is one V-cycle of multigrid
on the same problem discretized on a complex-shifted grid (or, equivalently up
to a scalar, with a complex-shifted Laplacian), driven by outer FGMRES.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .grid import ConstantK, WedgeK, build_stretched_grid, build_wavenumber_field, rotate_grid
from .krylov import fgmres, gmres_baseline
from .multigrid import CycleDiagnostics, Hierarchy, build_hierarchy, v_cycle
from .smoother import SmootherKind
from .stencil import StencilOperator

__all__ = [
    "ProblemConfig",
    "Problem",
    "setup_problem",
    "shifted_operator",
    "make_preconditioner",
    "solve",
    "solve_baseline",
    "sweep",
    "pick_grid_size",
    "linear_fit",
]

DEFAULT_PPW = 10.0


@dataclass(frozen=True)
class ProblemConfig:
    """Validated knobs for one solve; defaults give the canonical constant-k case."""

    n: int = 63
    k: ConstantK | WedgeK = ConstantK(20.0)
    layer_width: int | None = None
    sigma_max: float = 1.0
    ramp: str = "quadratic"
    beta: float = 0.5
    precond: str = "grid"  # "grid" (complex-shifted grid) or "csl"
    smoother: str = "gmres3"  # "poly3" or "gmres3"
    levels: int = 32
    nu_pre: int = 1
    nu_post: int = 1
    tol: float = 1e-6
    restart: int = 20
    max_iter: int = 500
    rhs: str = "point"  # "point" or "random"
    seed: int = 0
    theta_count: int = 64
    budget: int = 20000

    def validate(self) -> "ProblemConfig":
        if self.n < 3:
            raise ValueError(f"grid size n must be >= 3, got {self.n}")
        if self.beta <= 0:
            raise ValueError(f"shift beta must be > 0, got {self.beta}")
        if self.sigma_max < 0:
            raise ValueError(f"sigma_max must be >= 0, got {self.sigma_max}")
        if self.layer_width is not None and not (0 <= self.layer_width <= self.n / 4):
            raise ValueError(f"layer_width must be in [0, n/4], got {self.layer_width}")
        if self.precond not in ("grid", "csl"):
            raise ValueError(f"precond must be 'grid' or 'csl', got {self.precond!r}")
        if self.smoother not in ("poly3", "gmres3"):
            raise ValueError(f"smoother must be 'poly3' or 'gmres3', got {self.smoother!r}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.nu_pre < 0 or self.nu_post < 0:
            raise ValueError("nu_pre and nu_post must be >= 0")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.restart < 1:
            raise ValueError(f"restart must be >= 1, got {self.restart}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.rhs not in ("point", "random"):
            raise ValueError(f"rhs must be 'point' or 'random', got {self.rhs!r}")
        if self.theta_count < 8:
            raise ValueError(f"theta_count must be >= 8, got {self.theta_count}")
        if isinstance(self.k, ConstantK) and self.k.k0 <= 0:
            raise ValueError(f"wave number k must be positive, got {self.k.k0}")
        return self

    def smoother_kind(self) -> SmootherKind:
        return SmootherKind("poly3") if self.smoother == "poly3" else SmootherKind("gmres", 3)


@dataclass(eq=False)
class Problem:
    config: ProblemConfig
    physical_op: StencilOperator
    shifted_op: StencilOperator
    hierarchy: Hierarchy
    b: np.ndarray


def shifted_operator(config: ProblemConfig) -> StencilOperator:
    """The preconditioner-side operator alone (complex-shifted grid or CSL)."""
    config = config.validate()
    g = build_stretched_grid(config.n, config.layer_width, config.sigma_max, config.ramp)
    kf = build_wavenumber_field(config.k, g)
    if config.precond == "grid":
        return StencilOperator(rotate_grid(g, config.beta), kf, mode="precond_grid")
    return StencilOperator(g.with_kind("precond_csl"), kf, mode="precond_csl", csl_beta=config.beta)


def setup_problem(config: ProblemConfig, with_designs: bool | None = None) -> Problem:
    """Grids, operators, hierarchy and right-hand side for one configuration."""
    config = config.validate()
    g = build_stretched_grid(config.n, config.layer_width, config.sigma_max, config.ramp)
    kf = build_wavenumber_field(config.k, g)
    a_op = StencilOperator(g, kf, mode="physical")
    if config.precond == "grid":
        m_op = StencilOperator(rotate_grid(g, config.beta), kf, mode="precond_grid")
    else:
        m_op = StencilOperator(
            g.with_kind("precond_csl"), kf, mode="precond_csl", csl_beta=config.beta
        )
    hierarchy = build_hierarchy(
        m_op,
        smoother=config.smoother_kind(),
        max_levels=config.levels,
        theta_count=config.theta_count,
        budget=config.budget,
        with_designs=with_designs,
    )
    hierarchy.nu_pre = config.nu_pre
    hierarchy.nu_post = config.nu_post
    return Problem(
        config=config,
        physical_op=a_op,
        shifted_op=m_op,
        hierarchy=hierarchy,
        b=make_rhs(config),
    )


def make_rhs(config: ProblemConfig) -> np.ndarray:
    n = config.n
    if config.rhs == "point":
        b = np.zeros((n, n), dtype=complex)
        b[n // 2, n // 2] = 1.0
        return b
    rng = np.random.default_rng(config.seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def make_preconditioner(hierarchy: Hierarchy, diagnostics: CycleDiagnostics | None = None):
    """One V-cycle from a zero guess, tagging cycles for the diagnostics log."""
    counter = itertools.count()
    def precondition(v):
        u, _ = v_cycle(hierarchy, v, diagnostics=diagnostics, cycle_index=next(counter))
        return u
    return precondition


def solve(
    config: ProblemConfig,
    collect_diagnostics: bool = False,
    problem: Problem | None = None,
):
    """FGMRES on the physical operator, preconditioned by one V-cycle on the
    shifted operator.  Returns ``(x, report, problem)``."""
    if problem is None:
        problem = setup_problem(config)
    diagnostics = CycleDiagnostics() if collect_diagnostics else None
    x, report = fgmres(
        problem.physical_op.apply,
        make_preconditioner(problem.hierarchy, diagnostics),
        problem.b,
        tol=config.tol,
        restart=config.restart,
        max_iter=config.max_iter,
        diagnostics=diagnostics,
    )
    return x, report, problem


def solve_baseline(config: ProblemConfig, max_iter: int = 2000, problem: Problem | None = None):
    """Unpreconditioned restarted GMRES on the same physical system."""
    if problem is None:
        config = config.validate()
        g = build_stretched_grid(config.n, config.layer_width, config.sigma_max, config.ramp)
        kf = build_wavenumber_field(config.k, g)
        a_op = StencilOperator(g, kf, mode="physical")
        b = make_rhs(config)
    else:
        a_op, b = problem.physical_op, problem.b
    return gmres_baseline(a_op.apply, b, tol=config.tol, restart=config.restart, max_iter=max_iter)


# ---------------------------------------------------------------------------
# wave-number sweep


def _coarsening_depth(n: int, coarsest_max: int = 9) -> tuple[int, int]:
    depth = 1
    while n > coarsest_max and n % 2 == 1:
        n = (n - 1) // 2
        depth += 1
    return depth, n


def pick_grid_size(k: float, ppw: float = DEFAULT_PPW, tol: float = 0.05) -> int:
    """Odd n with k*h within ``tol`` of the 2*pi/ppw target, preferring sizes
    whose repeated halving reaches the coarsest-level cap."""
    target = 2.0 * np.pi / ppw
    lo = int(np.ceil(k / (target * (1 + tol)) - 1))
    hi = int(np.floor(k / (target * (1 - tol)) - 1))
    best = None
    for n in range(max(lo, 3), hi + 1):
        if n % 2 == 0:
            continue
        depth, coarsest = _coarsening_depth(n)
        kh_err = abs(k / (n + 1) / target - 1.0)
        score = (coarsest <= 9, depth, -kh_err)
        if best is None or score > best[0]:
            best = (score, n)
    if best is None:
        raise ValueError(f"no odd grid size keeps k*h within {tol:.0%} of target for k={k}")
    return best[1]


def linear_fit(x, y) -> dict:
    """Least-squares line y = a*x + c with the coefficient of determination."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return {"slope": 0.0, "intercept": float(y[0]) if y.size else 0.0, "r_squared": 1.0}
    a, c = np.polyfit(x, y, 1)
    resid = y - (a * x + c)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(a), "intercept": float(c), "r_squared": r2}


def sweep(k_list, ppw: float = DEFAULT_PPW, base: ProblemConfig | None = None):
    """Solve one problem per wave number; rows are ordered by k.

    Returns ``(rows, fit)`` where each row holds (k, n, iterations, converged,
    wall_time) and ``fit`` is the least-squares line of iterations vs k.
    """
    if base is None:
        base = ProblemConfig()
    rows = []
    for k in sorted(k_list):
        n = pick_grid_size(k, ppw)
        config = replace(base, n=n, k=ConstantK(float(k)))
        _, report, _ = solve(config)
        rows.append(
            {
                "k": float(k),
                "n": n,
                "iterations": report.iterations,
                "converged": report.converged,
                "wall_time": report.wall_time,
            }
        )
    fit = linear_fit([r["k"] for r in rows], [r["iterations"] for r in rows])
    return rows, fit
