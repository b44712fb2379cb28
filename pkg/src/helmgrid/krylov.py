"""Outer Krylov solvers: flexible GMRES and an unpreconditioned baseline.

FGMRES is right-preconditioned and stores the preconditioned vectors, so the
preconditioner may change from iteration to iteration -- required when the
multigrid smoother is itself GMRES.  Residual norms come from the Arnoldi
least-squares recurrence, with an explicit residual check at convergence.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

__all__ = ["SolveReport", "fgmres", "gmres_baseline"]


@dataclass(eq=False)
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    wall_time: float
    status: str = "converged"
    final_residual: float = 0.0
    diagnostics: object = None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "status": self.status,
            "final_residual": self.final_residual,
            "wall_time": self.wall_time,
            "residual_history": list(map(float, self.residual_history)),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _givens(a: complex, b: complex):
    if a == 0:
        return 0.0, 1.0 + 0.0j
    absa = abs(a)
    r = np.hypot(absa, abs(b))
    c = absa / r
    s = (a / absa) * np.conj(b) / r
    return c, s


def _dot(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a.ravel(), b.ravel()))


def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a.ravel()))


def _gmres_core(apply_A, precondition, b, tol, restart, max_iter, diagnostics):
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if restart < 1:
        raise ValueError(f"restart must be >= 1, got {restart}")
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=complex)
    b_norm = _norm(b)
    history = [1.0]
    if b_norm == 0.0:
        return np.zeros_like(b), SolveReport(
            converged=True,
            iterations=0,
            residual_history=history,
            wall_time=time.perf_counter() - t0,
            status="converged",
            final_residual=0.0,
            diagnostics=diagnostics,
        )

    x = np.zeros_like(b)
    iterations = 0
    status = "maxiter"
    converged = False

    while iterations < max_iter:
        r = b - apply_A(x)
        r_norm = _norm(r)
        cycle_start = history[-1]
        if r_norm / b_norm <= tol:
            converged, status = True, "converged"
            break

        vs = [r / r_norm]
        zs = []
        m = restart
        h = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = r_norm
        k_done = 0
        signal = None

        for k in range(m):
            z = vs[k] if precondition is None else precondition(vs[k])
            zs.append(z)
            w = apply_A(z)
            for j in range(k + 1):
                h[j, k] = _dot(vs[j], w)
                w = w - h[j, k] * vs[j]
            w_norm = _norm(w)
            h[k + 1, k] = w_norm
            happy = w_norm <= 1e-14 * max(1.0, float(np.abs(h[: k + 2, k]).max()))

            for j in range(k):
                t = cs[j] * h[j, k] + sn[j] * h[j + 1, k]
                h[j + 1, k] = -np.conj(sn[j]) * h[j, k] + cs[j] * h[j + 1, k]
                h[j, k] = t
            cs[k], sn[k] = _givens(h[k, k], h[k + 1, k])
            h[k, k] = cs[k] * h[k, k] + sn[k] * h[k + 1, k]
            h[k + 1, k] = 0.0
            g[k + 1] = -np.conj(sn[k]) * g[k]
            g[k] = cs[k] * g[k]
            if abs(h[k, k]) == 0.0:
                break  # singular projection; rebuild from the true residual

            iterations += 1
            k_done = k + 1
            est = abs(g[k + 1]) / b_norm
            history.append(est)
            if est <= tol:
                signal = "converged"
                break
            if iterations >= max_iter:
                signal = "maxiter"
                break
            if happy:
                signal = "converged"  # invariant Krylov space: iterate is exact
                break
            vs.append(w / w_norm)

        y = np.zeros(k_done, dtype=complex)
        for i in range(k_done - 1, -1, -1):
            y[i] = (g[i] - h[i, i + 1 : k_done] @ y[i + 1 : k_done]) / h[i, i]
        for j in range(k_done):
            x = x + y[j] * zs[j]

        if signal == "converged":
            true_res = _norm(b - apply_A(x)) / b_norm
            history[-1] = true_res
            if true_res <= tol:
                converged, status = True, "converged"
                break
        if signal == "maxiter":
            status = "maxiter"
            break
        # no residual decrease over the cycle (a full restart, or an early
        # breakdown that could make no progress): report stagnation
        if history[-1] >= cycle_start * (1.0 - 1e-12):
            status = "stagnation"
            break

    final = _norm(b - apply_A(x)) / b_norm
    return x, SolveReport(
        converged=converged,
        iterations=iterations,
        residual_history=history,
        wall_time=time.perf_counter() - t0,
        status=status if not converged else "converged",
        final_residual=final,
        diagnostics=diagnostics,
    )


def fgmres(
    apply_A,
    precondition,
    b: np.ndarray,
    tol: float = 1e-6,
    restart: int = 20,
    max_iter: int = 500,
    diagnostics=None,
):
    """Flexible right-preconditioned GMRES from a zero initial guess.

    Parameters
    ----------
    apply_A : callable
        The physical operator, field -> field.
    precondition : callable or None
        Approximate inverse of the shifted operator (one V-cycle from a zero
        guess); may vary between calls.  ``None`` means identity.
    b : ndarray
        Right-hand side field.
    tol : float
        Convergence threshold on ``||b - A x|| / ||b||``.
    restart, max_iter : int
        Restart length and total inner-iteration cap.
    diagnostics : optional
        Attached to the report (e.g. the preconditioner's CycleDiagnostics).

    Returns
    -------
    (x, SolveReport)
        Stagnation (no residual decrease over a full restart) and the
        iteration cap are reported as distinct statuses.
    """
    return _gmres_core(apply_A, precondition, b, tol, restart, max_iter, diagnostics)


def gmres_baseline(
    apply_A,
    b: np.ndarray,
    tol: float = 1e-6,
    restart: int = 20,
    max_iter: int = 2000,
):
    """Standard restarted GMRES without preconditioning; same report format."""
    return _gmres_core(apply_A, None, b, tol, restart, max_iter, None)
