"""Solve the Neumann Poisson problem on the spherical cap, end to end.

The assembled operator is a symmetric positive-semidefinite matrix whose
null space is the constants; the right side is orthogonal to it by
construction, and the additive constant is fixed by the weighted
mean-zero condition.
"""

import numpy as np

from nlpoisson import assemble, boundary_trace, build_cloud, e2_error, get_case, solve_mean_zero

case = get_case("hemisphere2")
cloud = build_cloud("hemisphere2", t=20, seed=1)
system = assemble(cloud, mode="full")

S = system.S
print(f"operator: {S.shape[0]} x {S.shape[1]}, nnz = {S.count_nonzero()}")
print(f"  exact symmetry: max|S - S^T| = {abs(S - S.T).max()}")
print(f"  constants in the null space: max|S 1| = {np.abs(S @ np.ones(cloud.n0)).max():.3e}")
print(f"  right side sums to {system.rhs.sum():.3e}")

result = solve_mean_zero(system)
print(f"\nCG converged = {result.converged} in {result.iterations} iterations, "
      f"relative residual {result.residual:.2e}")
print(f"weighted mean of U: {float(result.U @ cloud.A):.2e}")

u_exact = case.exact_u(cloud.points)
print(f"relative L2 error e2 = {e2_error(result.U, cloud):.5f}")

err = result.U - u_exact
print("\nerror by height band (no boundary layer blows up):")
for lo, hi in ((0.5, 0.6), (0.6, 0.8), (0.8, 1.001)):
    band = (cloud.points[:, 2] >= lo) & (cloud.points[:, 2] < hi)
    print(f"  z in [{lo:.1f}, {hi:.1f}): rms error {np.sqrt((err[band] ** 2).mean()):.5f}"
          f"  over {band.sum()} points")

V = boundary_trace(system.coupling, cloud.A, result.U)
uq = case.exact_u(cloud.boundary)
print(f"\nboundary trace vs exact rim values: max deviation {np.abs(V - uq).max():.4f}"
      f"  (first order in delta = {cloud.delta:.3f})")
