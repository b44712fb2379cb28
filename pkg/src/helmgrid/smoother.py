"""Level smoothers: three damped Jacobi sweeps, or GMRES(3) on the defect.

The cubic smoother applies damped Jacobi with three different complex weights;
its error propagation is the cubic ``p(Dinv A)`` in the Jacobi-preconditioned
operator.  The GMRES smoother solves the defect equation ``A c = r0`` with a
zero initial correction and m Arnoldi steps, picking its own coefficients
anew at every call, so it is not a fixed linear operator across calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectrum import SmootherWeights
from .stencil import StencilOperator

__all__ = ["SmootherKind", "damped_jacobi", "poly3_smooth", "gmres_smooth", "weight_triple"]


@dataclass(frozen=True)
class SmootherKind:
    """Smoother selector for a hierarchy: ``poly3`` or ``gmres`` with m steps."""

    name: str = "gmres"
    m: int = 3

    def __post_init__(self):
        if self.name not in ("poly3", "gmres"):
            raise ValueError(f"unknown smoother kind {self.name!r}")
        if self.name == "gmres" and self.m < 1:
            raise ValueError(f"gmres smoother needs m >= 1, got {self.m}")


def weight_triple(weights) -> tuple[complex, complex, complex]:
    """Extract (w1, w2, w3) from a SmootherWeights or a plain 3-sequence."""
    if isinstance(weights, SmootherWeights):
        return (weights.w1, weights.w2, weights.w3)
    w1, w2, w3 = weights
    return (complex(w1), complex(w2), complex(w3))


def damped_jacobi(op: StencilOperator, u: np.ndarray, b: np.ndarray, w: complex) -> np.ndarray:
    """One damped Jacobi sweep: ``u + w * Dinv * (b - A u)``.

    The weighted inverse diagonal is formed once as a full-domain array so the
    cache-blocked kernel can slice the identical coefficients and reproduce
    this sweep bit for bit.
    """
    return u + (b - op.apply(u)) * (w / op.diag)


def poly3_smooth(op: StencilOperator, u: np.ndarray, b: np.ndarray, weights) -> np.ndarray:
    """Three damped Jacobi sweeps with weights w1, w2, w3, in that order."""
    w1, w2, w3 = weight_triple(weights)
    u = damped_jacobi(op, u, b, w1)
    u = damped_jacobi(op, u, b, w2)
    return damped_jacobi(op, u, b, w3)


def gmres_smooth(op: StencilOperator, u: np.ndarray, b: np.ndarray, m: int = 3) -> np.ndarray:
    """GMRES(m) on the defect equation from a zero correction.

    Runs m Arnoldi steps (modified Gram-Schmidt, one reorthogonalization pass
    when orthogonality loss exceeds 1e-8) and returns ``u + c`` with ``c``
    minimizing ``||r0 - A c||`` over the Krylov space; stops early on happy
    breakdown, and returns ``u`` unchanged when ``r0 = 0``.
    """
    if m < 1:
        raise ValueError(f"need m >= 1 Arnoldi steps, got {m}")
    r0 = op.residual(b, u)
    beta = np.linalg.norm(r0)
    if beta == 0.0:
        return u.astype(complex, copy=True)

    vs = [r0 / beta]
    h = np.zeros((m + 1, m), dtype=complex)
    k_done = 0
    for k in range(m):
        w = op.apply(vs[k])
        norm_before = np.linalg.norm(w)
        for j in range(k + 1):
            h[j, k] = np.vdot(vs[j], w)
            w -= h[j, k] * vs[j]
        if np.linalg.norm(w) < 1e-8 * norm_before:
            for j in range(k + 1):
                corr = np.vdot(vs[j], w)
                h[j, k] += corr
                w -= corr * vs[j]
        h[k + 1, k] = np.linalg.norm(w)
        k_done = k + 1
        if h[k + 1, k] < 1e-14 * max(beta, 1.0):
            break  # happy breakdown: Krylov space is invariant
        vs.append(w / h[k + 1, k])

    e1 = np.zeros(k_done + 1, dtype=complex)
    e1[0] = beta
    y, *_ = np.linalg.lstsq(h[: k_done + 1, :k_done], e1, rcond=None)
    c = np.zeros_like(r0)
    for j in range(k_done):
        c += y[j] * vs[j]
    return u + c
