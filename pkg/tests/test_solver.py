"""Projected and plain CG against dense factorization oracles."""

import numpy as np
import pytest

from nlpoisson.assembly import assemble
from nlpoisson.geometry import build_cloud, get_case
from nlpoisson.solver import _project_mean, cg, solve_mean_zero, solve_spd
from nlpoisson.variants import assemble_lambda


def dense_mean_zero_solution(system):
    """Minimum-norm least-squares solve, shifted to A-weighted zero mean."""
    U, *_ = np.linalg.lstsq(system.S.toarray(), system.rhs, rcond=None)
    return U - float(U @ system.A / system.A.sum())


def test_solve_matches_dense_oracle(small_system):
    res = solve_mean_zero(small_system, tol=1e-12)
    assert res.converged
    assert res.residual <= 1e-12
    want = dense_mean_zero_solution(small_system)
    assert np.abs(res.U - want).max() <= 1e-8 * max(1.0, np.abs(want).max())
    total = float(res.U @ small_system.A)
    assert abs(total) <= 1e-12 * max(np.abs(res.U).max(), 1.0) * small_system.A.sum()


def test_zero_rhs_short_circuits(small_system):
    import dataclasses
    system = dataclasses.replace(small_system, rhs=np.zeros(small_system.S.shape[0]))
    res = solve_mean_zero(system)
    assert res.iterations == 0 and res.converged
    assert np.all(res.U == 0.0) and np.all(res.V == 0.0)


def test_initial_guess_irrelevant(small_system, rng):
    a = solve_mean_zero(small_system, tol=1e-12)
    x0 = rng.standard_normal(small_system.S.shape[0])
    b = solve_mean_zero(small_system, tol=1e-12, x0=x0)
    assert np.abs(a.U - b.U).max() <= 1e-8 * max(1.0, np.abs(a.U).max())


def test_rhs_must_be_orthogonal(small_system):
    import dataclasses
    bad = dataclasses.replace(small_system,
                              rhs=small_system.rhs + 1e-3)
    with pytest.raises(ValueError, match="orthogonal"):
        solve_mean_zero(bad)


def test_projection_idempotent(rng):
    x = rng.standard_normal(257)
    once = x.copy()
    _project_mean(once)
    twice = once.copy()
    _project_mean(twice)
    assert np.abs(twice - once).max() <= 1e-15 * np.abs(once).max()


def test_error_energy_norm_monotone(small_system):
    """CG decreases the S-energy norm of the error at every iteration."""
    S = small_system.S
    star = dense_mean_zero_solution(small_system)
    iterates = []
    solve_mean_zero(small_system, tol=1e-13, callback=iterates.append)
    energies = []
    for x in iterates:
        e = x - x.mean() - (star - star.mean())
        energies.append(float(e @ (S @ e)))
    energies = np.array(energies)
    assert np.all(np.diff(energies) <= 1e-12 * np.maximum(energies[:-1], 1e-30))


def test_preconditioned_agrees(small_system):
    plain = solve_mean_zero(small_system, tol=1e-12)
    pre = solve_mean_zero(small_system, tol=1e-12, precondition=True)
    assert pre.converged
    assert np.abs(plain.U - pre.U).max() <= 1e-8 * max(1.0, np.abs(plain.U).max())


def test_determinism_repeat_solve(small_system):
    a = solve_mean_zero(small_system, tol=1e-11)
    b = solve_mean_zero(small_system, tol=1e-11)
    assert np.array_equal(a.U, b.U)
    assert a.iterations == b.iterations


def _lambda_system(t=5, lam=1.0):
    cloud = build_cloud("hemisphere2", t, 1)
    case = get_case("hemisphere2")

    def f_man(x):
        return case.forcing(x) + lam * case.exact_u(x)

    return assemble_lambda(cloud, lam=lam, f=f_man)


def test_spd_matches_dense_oracle():
    system = _lambda_system()
    res = solve_spd(system, tol=1e-12)
    assert res.converged
    want = np.linalg.solve(system.S.toarray(), system.rhs)
    assert np.abs(res.U - want).max() <= 1e-8 * max(1.0, np.abs(want).max())


def test_spd_zero_rhs():
    import dataclasses
    system = dataclasses.replace(_lambda_system(), rhs=np.zeros(40))
    res = solve_spd(system)
    assert np.all(res.U == 0.0) and res.iterations == 0


def test_spd_large_lambda_fast():
    """Strong absorption dominates the diagonal; Jacobi CG needs few sweeps."""
    system = _lambda_system(lam=50.0)
    res = solve_spd(system, tol=1e-10, precondition=True)
    assert res.converged
    assert res.iterations < 50
    want = np.linalg.solve(system.S.toarray(), system.rhs)
    assert np.abs(res.U - want).max() <= 1e-8 * max(1.0, np.abs(want).max())


def test_max_iter_flags_nonconvergence(small_system):
    res = solve_mean_zero(small_system, tol=1e-13, max_iter=2)
    assert not res.converged
    assert res.iterations == 2
    assert res.residual > 1e-13
