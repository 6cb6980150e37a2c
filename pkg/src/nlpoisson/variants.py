"""Generalized models: absorption term, non-homogeneous flux, nonlinearity.

Three extensions of the base model share its diffusion and boundary
blocks:

* an absorption (reaction) term lambda(x) u, discretized in
  energy-consistent form through kernel-smoothed averages so the system
  becomes strictly positive definite and the mean-zero constraint is
  dropped;
* a prescribed non-homogeneous boundary flux g, which only changes the
  right side;
* a nonlinear absorption lambda u |u|^(2p-2), solved by damped Picard
  iteration on frozen coefficients with energy monitoring.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse

from .assembly import (
    NonlocalSystem,
    assemble,
    bar_matrix,
    boundary_trace,
    interior_laplacian,
    smoothed_forcing,
)
from .geometry import PointCloud, get_case
from .kernels import KernelProfile, cosine_profile
from .solver import SolveResult, cg, solve_mean_zero

VARIANT_KINDS = ("lambda_poisson", "nonhomogeneous", "nonlinear")
THETA_MIN = 1.0 / 16.0


@dataclass
class VariantConfig:
    """Parameters of the generalized models.

    lam is a positive constant or scalar field; g the boundary flux for
    the non-homogeneous model; p > 1 the nonlinear exponent; theta the
    initial Picard damping factor.
    """

    kind: str = "lambda_poisson"
    lam: float | Callable[[np.ndarray], np.ndarray] = 1.0
    g: Callable[[np.ndarray], np.ndarray] | None = None
    p: float = 1.5
    theta: float = 1.0
    picard_tol: float = 1e-10
    picard_max: int = 50
    f: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(
                f"unknown variant kind {self.kind!r}; expected {VARIANT_KINDS}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("damping theta must lie in (0, 1]")


def _lambda_values(lam, points: np.ndarray) -> np.ndarray:
    vals = lam(points) if callable(lam) else np.full(points.shape[0], float(lam))
    vals = np.asarray(vals, dtype=float)
    if np.any(vals < 0):
        raise ValueError("lambda must be nonnegative")
    return vals


def smoothing_weights(cloud: PointCloud, delta: float | None = None,
                      profile: KernelProfile | None = None) -> np.ndarray:
    """Interior smoothing mass w2_j = sum_i Kbar(p_j, p_i) A_i."""
    return bar_matrix(cloud, delta, profile) @ cloud.A


def averaging_matrix(cloud: PointCloud, delta: float | None = None,
                     profile: KernelProfile | None = None,
                     omega2: np.ndarray | None = None) -> sparse.csr_matrix:
    """Row-stochastic smoother P with P_ji = Kbar(p_j, p_i) A_i / w2_j."""
    bar = bar_matrix(cloud, delta, profile)
    if omega2 is None:
        omega2 = bar @ cloud.A
    if np.any(omega2 <= 0.0):
        j = int(np.argmin(omega2))
        raise ValueError(f"smoothing mass w2({j}) = {omega2[j]:.3e} <= 0")
    return (sparse.diags(1.0 / omega2) @ bar @ sparse.diags(cloud.A)).tocsr()


def _absorption_matrix(base: NonlocalSystem, Pbar: sparse.csr_matrix,
                       omega2: np.ndarray, w_interior: np.ndarray,
                       w_boundary: np.ndarray) -> sparse.csr_matrix:
    """Energy-consistent absorption block, exactly symmetric by factoring.

    Returns P^T diag(w w2 A) P + (A Z) diag(wb omega L) (A Z)^T.
    """
    cloud = base.cloud
    k_int = (sparse.diags(np.sqrt(w_interior * omega2 * cloud.A)) @ Pbar).tocsr()
    k_int.sort_indices()
    M = (k_int.T @ k_int).tocsr()
    coupling = base.coupling
    wb = w_boundary * coupling.omega_hat * coupling.L
    if np.any(wb != 0.0):
        az = (sparse.diags(cloud.A) @ coupling.zeta).T
        k_bnd = (sparse.diags(np.sqrt(wb)) @ az).tocsr()
        k_bnd.sort_indices()
        M = (M + k_bnd.T @ k_bnd).tocsr()
    return M


def assemble_lambda(cloud: PointCloud, delta: float | None = None,
                    profile: KernelProfile | None = None,
                    lam: float | Callable = 1.0,
                    f: Callable | None = None) -> NonlocalSystem:
    """System for the absorption model; strictly PD for lambda > 0.

    The right side keeps the smoothed forcing without mean removal: the
    mean-zero constraint no longer applies.
    """
    delta = cloud.delta if delta is None else delta
    profile = profile or cosine_profile()
    base = assemble(cloud, delta, profile, mode="full", f=f)
    lam_p = _lambda_values(lam, cloud.points)
    lam_q = _lambda_values(lam, cloud.boundary)
    omega2 = smoothing_weights(cloud, delta, profile)
    Pbar = averaging_matrix(cloud, delta, profile, omega2)
    S = (base.S + _absorption_matrix(base, Pbar, omega2, lam_p, lam_q)).tocsr()
    return NonlocalSystem(S=S, rhs=cloud.A * base.f_delta, coupling=base.coupling,
                          A=cloud.A, delta=delta, mode="full", cloud=cloud,
                          profile=profile, f_delta=base.f_delta, mean_shift=0.0)


def source_nonhomogeneous(cloud: PointCloud, delta: float | None = None,
                          profile: KernelProfile | None = None,
                          f: Callable | None = None,
                          g: Callable | None = None) -> tuple[np.ndarray, float]:
    """Source with boundary-flux data folded in, A-weighted mean removed.

    F_i = fd_i + sum_k (2 Kbar(p_i, q_k) + zeta(p_i, q_k)) g(q_k) L_k,
    minus the constant that zeroes sum_i F_i A_i.  Warns when the discrete
    compatibility sum(f A) + sum(g L) exceeds 1e-3 in relative size.
    """
    delta = cloud.delta if delta is None else delta
    profile = profile or cosine_profile()
    case = get_case(cloud.case_name)
    f = f or case.forcing
    fd = smoothed_forcing(cloud, delta, profile, f, mode="full")
    if g is not None:
        gq = np.asarray(g(cloud.boundary), dtype=float)
        fp = np.asarray(f(cloud.points), dtype=float)
        comp = float(fp @ cloud.A + gq @ cloud.L)
        scale = float(np.abs(fp) @ cloud.A + np.abs(gq) @ cloud.L)
        if scale > 0 and abs(comp) > 1e-3 * scale:
            warnings.warn(
                f"discrete compatibility violated: sum(f A) + sum(g L) = "
                f"{comp:.3e} ({abs(comp) / scale:.2e} relative)")
        from .assembly import _cross_pairs
        from .kernels import pair_eval
        rows, cols = _cross_pairs(cloud.points, cloud.boundary, 2.0 * delta)
        if len(rows):
            disp = cloud.points[rows] - cloud.boundary[cols]
            sq = (disp**2).sum(axis=1)
            bar = pair_eval(profile, "bar", sq, delta, cloud.m)
            zeta = -(disp * cloud.normals[cols]).sum(axis=1) * bar
            contrib = (2.0 * bar + zeta) * gq[cols] * cloud.L[cols]
            fd = fd + np.bincount(rows, weights=contrib, minlength=cloud.n0)
    shift = float(fd @ cloud.A / cloud.A.sum())
    return fd - shift, shift


def assemble_nonhomogeneous(cloud: PointCloud, delta: float | None = None,
                            profile: KernelProfile | None = None,
                            f: Callable | None = None,
                            g: Callable | None = None) -> NonlocalSystem:
    """Base full-model system with the non-homogeneous right side."""
    delta = cloud.delta if delta is None else delta
    profile = profile or cosine_profile()
    base = assemble(cloud, delta, profile, mode="full", f=f)
    F, shift = source_nonhomogeneous(cloud, delta, profile, f, g)
    return NonlocalSystem(S=base.S, rhs=cloud.A * F, coupling=base.coupling,
                          A=cloud.A, delta=delta, mode="full", cloud=cloud,
                          profile=profile, f_delta=F + shift, mean_shift=shift)


class _NonlinearWork:
    """Shared factors for the nonlinear iteration and its energy."""

    def __init__(self, cloud: PointCloud, delta: float, profile: KernelProfile,
                 config: VariantConfig):
        if config.p < 1.0:
            raise ValueError("nonlinear exponent p must be >= 1")
        if callable(config.lam):
            raise ValueError("nonlinear model takes a constant lambda")
        if float(config.lam) <= 0.0:
            raise ValueError("nonlinear model requires lambda > 0")
        if cloud.m > 2 and config.p >= cloud.m / (cloud.m - 2):
            warnings.warn(
                f"exponent p = {config.p} is not subcritical for m = {cloud.m}"
                f" (p < {cloud.m / (cloud.m - 2):.3g} expected)")
        self.cloud = cloud
        self.delta = delta
        self.profile = profile
        self.config = config
        self.base = assemble(cloud, delta, profile, mode="full", f=config.f)
        self.omega2 = smoothing_weights(cloud, delta, profile)
        self.Pbar = averaging_matrix(cloud, delta, profile, self.omega2)
        self.rhs = cloud.A * self.base.f_delta
        self.RA = interior_laplacian(cloud, delta, profile)

    def averages(self, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ubar = self.Pbar @ U
        uhat = boundary_trace(self.base.coupling, self.cloud.A, U)
        return ubar, uhat

    def frozen_matrix(self, U: np.ndarray) -> sparse.csr_matrix:
        lam, p = float(self.config.lam), self.config.p
        ubar, uhat = self.averages(U)
        w_int = lam * np.abs(ubar) ** (2.0 * p - 2.0)
        w_bnd = lam * np.abs(uhat) ** (2.0 * p - 2.0)
        M = _absorption_matrix(self.base, self.Pbar, self.omega2, w_int, w_bnd)
        return (self.base.S + M).tocsr()

    def energy(self, U: np.ndarray) -> float:
        """Discrete energy whose critical points solve the discrete model.

        Five terms: pairwise diffusion, the two absorption averages, the
        boundary-gradient quadratic in its cancelled-constant form
        V^T RbarL V, minus the source pairing.  The diffusion prefactor
        1/(4 delta^2) on the double sum makes the gradient of the whole
        expression exactly (S + frozen absorption) U - A f_delta.
        """
        lam, p = float(self.config.lam), self.config.p
        cloud, base = self.cloud, self.base
        # (1/4 delta^2) sum_ij (u_i - u_j)^2 K A A  ==  U^T RA U / (2 delta^2)
        diff = 0.5 / (self.delta * self.delta) * float(U @ (self.RA @ U))
        ubar, uhat = self.averages(U)
        t2 = lam / (2.0 * p) * float((self.omega2 * np.abs(ubar) ** (2 * p)) @ cloud.A)
        t3 = lam / (2.0 * p) * float(
            (base.coupling.omega_hat * np.abs(uhat) ** (2 * p)) @ base.coupling.L)
        t4 = float(uhat @ (base.coupling.RbarL @ uhat))
        t5 = -float((U * base.f_delta) @ cloud.A)
        return diff + t2 + t3 + t4 + t5


def energy_J_delta(cloud: PointCloud, delta: float | None,
                   profile: KernelProfile | None, config: VariantConfig,
                   U: np.ndarray) -> float:
    """Discrete nonlinear energy: diffusion, two absorption terms, the
    boundary-gradient term in its cancelled-constant form, minus the
    source pairing."""
    delta = cloud.delta if delta is None else delta
    profile = profile or cosine_profile()
    return _NonlinearWork(cloud, delta, profile, config).energy(U)


def nonlinear_solve(cloud: PointCloud, delta: float | None = None,
                    profile: KernelProfile | None = None,
                    config: VariantConfig | None = None,
                    inner_tol: float = 1e-12) -> SolveResult:
    """Damped Picard iteration on frozen absorption coefficients.

    Each step freezes lambda |ubar|^(2p-2) and lambda |uhat|^(2p-2),
    solves the resulting strictly PD linear system, and blends with
    damping theta.  Steps that would raise the recorded energy retry with
    theta halved (not below 1/16, after which the step is accepted and
    the result flagged).  The returned residual is the relative residual
    of the discrete nonlinear system at the final iterate.
    """
    delta = cloud.delta if delta is None else delta
    profile = profile or cosine_profile()
    config = config or VariantConfig(kind="nonlinear")
    work = _NonlinearWork(cloud, delta, profile, config)
    rhs = work.rhs
    rnorm = float(np.linalg.norm(rhs))
    n = cloud.n0

    if rnorm == 0.0:
        U = np.zeros(n)
        V = np.zeros(cloud.m0)
        return SolveResult(U=U, V=V, residual=0.0, iterations=0, converged=True,
                           energy_history=[work.energy(U)], energy_monotone=True)

    start = solve_mean_zero(work.base, tol=inner_tol)
    U = start.U
    energies = [work.energy(U)]
    theta = config.theta
    monotone = True
    converged = False
    steps = 0
    streak = 0
    slack = 1e-12
    for steps in range(1, config.picard_max + 1):
        S_n = work.frozen_matrix(U)
        Ustar, _, _, _ = cg(S_n, rhs, tol=inner_tol, max_iter=20 * n, x0=U)
        halved = False
        while True:
            trial = (1.0 - theta) * U + theta * Ustar
            J_trial = work.energy(trial)
            if J_trial <= energies[-1] + slack * max(1.0, abs(energies[-1])):
                break
            if theta <= THETA_MIN:
                monotone = False
                break
            theta = 0.5 * theta
            halved = True
        # recover damping after a few clean steps so contraction stays fast;
        # cap below the undamped map, which can cycle for this nonlinearity
        streak = 0 if halved else streak + 1
        cap = min(config.theta, 0.5)
        if streak >= 3 and theta < cap:
            theta = min(2.0 * theta, cap)
            streak = 0
        step_size = float(np.max(np.abs(trial - U)))
        U = trial
        energies.append(J_trial)
        if step_size <= config.picard_tol:
            converged = True
            break

    S_final = work.frozen_matrix(U)
    residual = float(np.linalg.norm(S_final @ U - rhs)) / rnorm
    V = boundary_trace(work.base.coupling, cloud.A, U)
    return SolveResult(U=U, V=V, residual=residual, iterations=steps,
                       converged=converged, energy_history=energies,
                       energy_monotone=monotone)
