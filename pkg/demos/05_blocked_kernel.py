"""Cache-blocked fused smoothing: load a tile once, apply all three sweeps.

Stencil sweeps are memory bound: a few flops per value read from slow memory.
Fusing the three damped-Jacobi sweeps over a tile loaded once (plus three
ghost layers, recomputed redundantly instead of communicated) multiplies the
work per byte moved.  The result is identical to the naive triple sweep, bit
for bit, for every tile plan.
"""

import numpy as np

from helmgrid import (
    ConstantK,
    StencilOperator,
    TilePlan,
    bench,
    blocked_poly3,
    build_stretched_grid,
    build_wavenumber_field,
    design_for_operator,
    poly3_smooth,
    rotate_grid,
)
from helmgrid.spectrum import jacobi_weights_for

n = 129
g = build_stretched_grid(n, sigma_max=1.0)
kf = build_wavenumber_field(ConstantK(40.0), g)
op = StencilOperator(rotate_grid(g, 0.5), kf, mode="precond_grid")
weights = jacobi_weights_for(design_for_operator(op, budget=8000), op)

rng = np.random.default_rng(0)
u = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
reference = poly3_smooth(op, u, b, weights)
blocked = blocked_poly3(op, u, b, weights, TilePlan(32, 32))
print(f"blocked result identical to the naive triple sweep: "
      f"{bool(np.all(blocked == reference))}")

print("\nthroughput and traffic model over a tile ladder "
      "(flops include halo recomputation):")
plans = [TilePlan(t, t) for t in (8, 16, 32, 64, n)]
rows = bench(op, weights, plans, repetitions=5)
print(f"{'plan':>9} {'time_ms':>9} {'MLUP/s':>8} {'flops/pt':>9} "
      f"{'bytes/pt':>9} {'flops/byte':>10}")
for r in rows:
    print(f"{r.plan:>9} {r.time_ms:9.2f} {r.mlups:8.1f} {r.flops_per_point:9.1f} "
          f"{r.est_bytes_per_point:9.1f} {r.intensity:10.2f}")
print("\nas tiles grow: redundant flops shrink toward 156/point, estimated")
print("traffic shrinks toward 32 bytes/point, and arithmetic intensity rises")
