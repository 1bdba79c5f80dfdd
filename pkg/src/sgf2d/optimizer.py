"""Projected-gradient solver for the tracking control problem on a norm ball.

The admissible set is the centered ball of radius L in the discrete
L2(0,T;H1) norm; projection is radial (exact for a centered ball in a
Hilbert norm). Steps use Barzilai-Borwein seeding with Armijo backtracking.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .adjoint import AdjointState, gradient_field, solve_adjoint
from .spaces import DomainConstants, solenoidal_projection_values, stream_from_coeffs
from .state import (
    ProblemData,
    StateSolution,
    Trajectory,
    control_h1_norm,
    l2q_inner,
    l2q_norm,
    left_weights,
    slice_dots,
    solve_state,
    trap_weights,
)


def cost(u: Trajectory, y: Trajectory, y_d, lam: float) -> float:
    """Tracking-plus-regularization objective.

    Tracking term uses left-rectangle time weights (making the adjoint
    terminal condition exact), control term uses trapezoid weights.
    """
    m, dt = y.m_steps, y.dt
    h2 = y.grid.h ** 2
    if y_d is None:
        target = np.zeros_like(y.data)
    elif isinstance(y_d, Trajectory):
        target = y_d.data
    else:
        target = np.broadcast_to(np.stack([y_d.u1, y_d.u2]), y.data.shape)
    rho = left_weights(m, dt)
    mis = y.data - target
    track = 0.5 * h2 * np.dot(rho, slice_dots(mis, mis))
    tau = trap_weights(u.m_steps, u.dt)
    ctrl = 0.5 * lam * h2 * np.dot(tau, slice_dots(u.data, u.data))
    return float(track + ctrl)


def project_Uad(u: Trajectory, L: float) -> Trajectory:
    """Metric projection onto the centered L2(0,T;H1) ball of radius L."""
    if L <= 0:
        raise ValueError("L must be positive")
    r = control_h1_norm(u)
    if r <= L:
        return u
    return u * (L / r)


def vi_residual(u: Trajectory, g: Trajectory, L: float) -> float:
    """Natural residual ||u - proj(u - g)||_{L2(Q)} of the variational inequality."""
    d = u - project_Uad(u - g, L)
    return l2q_norm(d, trap_weights(u.m_steps, u.dt))


class IterRecord(NamedTuple):
    iteration: int
    J: float
    grad_norm: float
    step: float
    vi: float


@dataclass
class OptimizeOptions:
    tol: float | None = None
    max_iter: int = 500
    armijo_c: float = 1e-4
    max_halvings: int = 40
    initial_step: float = 1.0


@dataclass
class OptimizeReport:
    iterates: list
    u_final: Trajectory
    J_final: float
    converged: bool
    message: str
    wall_time: float
    final_norm_h1_max: float
    final_norm_h3_max: float
    tol: float

    @property
    def n_iterations(self) -> int:
        return len(self.iterates)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iteration,J,grad_norm,step,vi_residual\n")
            for rec in self.iterates:
                fh.write(
                    f"{rec.iteration},{rec.J:.17g},{rec.grad_norm:.17g},"
                    f"{rec.step:.17g},{rec.vi:.17g}\n"
                )


def _evaluate(pd: ProblemData, u: Trajectory):
    sol = solve_state(u, pd)
    J = cost(u, sol.velocity, pd.y_d, pd.lam)
    return sol, J


def optimize(
    pd: ProblemData, u_init: Trajectory | None = None, opts: OptimizeOptions | None = None
) -> OptimizeReport:
    """Projected gradient descent; J decreases on every accepted step and
    every iterate stays admissible. Stops at vi_residual <= tol."""
    opts = opts or OptimizeOptions()
    t0 = time.perf_counter()
    tau = trap_weights(pd.m_steps, pd.dt)

    u = project_Uad(u_init if u_init is not None else pd.zero_control(), pd.L)
    sol, J = _evaluate(pd, u)
    tol = opts.tol if opts.tol is not None else 1e-8 * (1.0 + abs(J))
    g = gradient_field(u, solve_adjoint(sol, None, pd), pd.lam)

    records: list[IterRecord] = []
    prev_u = prev_g = None
    step = opts.initial_step
    last_step = 0.0
    converged = False
    message = "iteration cap reached"

    for it in range(opts.max_iter):
        vi = vi_residual(u, g, pd.L)
        records.append(IterRecord(it, J, l2q_norm(g, tau), last_step, vi))
        if vi <= tol:
            converged = True
            message = "vi residual within tolerance"
            break

        if prev_u is not None:
            s = u.data - prev_u
            dg = g.data - prev_g
            h2 = pd.grid.h ** 2
            num = h2 * np.dot(tau, slice_dots(s, s))
            den = h2 * np.dot(tau, slice_dots(s, dg))
            if den > 0:
                step = min(max(num / den, 1e-14), 1e14)

        accepted = False
        t = step
        for _ in range(opts.max_halvings + 1):
            trial = project_Uad((u - t * g), pd.L)
            decrease = l2q_inner(g, trial - u, tau)
            # decrease <= 0 is not automatic for radial projection; require it
            # so accepted steps never increase J
            if decrease <= 0.0:
                trial_sol, trial_J = _evaluate(pd, trial)
                if trial_J <= J + opts.armijo_c * decrease:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            message = "line search failed (no sufficient decrease)"
            break

        prev_u, prev_g = u.data, g.data
        u, sol, J = trial, trial_sol, trial_J
        last_step = t
        g = gradient_field(u, solve_adjoint(sol, None, pd), pd.lam)
    else:
        # cap reached: record the final point
        vi = vi_residual(u, g, pd.L)
        records.append(IterRecord(opts.max_iter, J, l2q_norm(g, tau), last_step, vi))
        converged = vi <= tol

    return OptimizeReport(
        iterates=records,
        u_final=u,
        J_final=J,
        converged=converged,
        message=message,
        wall_time=time.perf_counter() - t0,
        final_norm_h1_max=float(np.max(sol.norms_h1)),
        final_norm_h3_max=float(np.max(sol.norms_h3)),
        tol=tol,
    )


def solenoidal_part(u: Trajectory) -> Trajectory:
    """Canonical divergence-free representative of each slice.

    The dynamics only sees the curl of the control, so controls are compared
    modulo curl-free components; this picks the stream-generated member.
    """
    h = u.grid.h
    out = np.empty_like(u.data)
    for k in range(u.m_steps + 1):
        out[k, 0], out[k, 1] = solenoidal_projection_values(u.data[k, 0], u.data[k, 1], h)
    return Trajectory(u.grid, u.dt, u.kind, out)


def start_control(pd: ProblemData, seed: int, index: int, scale: float = 0.45) -> Trajectory:
    """Deterministic admissible random start: time-modulated stream modes."""
    rng = np.random.default_rng([seed, index])
    coeffs = rng.standard_normal((8, 8))
    psi = stream_from_coeffs(pd.grid, coeffs)
    from .grid import velocity_from_stream

    v = velocity_from_stream(psi)
    tmod = 1.0 + 0.5 * np.cos(
        np.pi * np.linspace(0.0, 1.0, pd.m_steps + 1) * (1 + index % 2)
    )
    data = tmod[:, None, None, None] * np.stack([v.u1, v.u2])[None]
    u = Trajectory(pd.grid, pd.dt, "control", data)
    r = control_h1_norm(u)
    if r == 0.0:
        return u
    return u * (scale * pd.L / r)


@dataclass
class MultiStartReport:
    reports: list
    distances: np.ndarray
    max_distance: float
    distance_tol: float
    all_within_tol: bool
    uniqueness_threshold: float | None
    lambda_exceeds_threshold: bool | None
    illustrative: bool | None


def multi_start_uniqueness(
    pd: ProblemData,
    n_starts: int,
    seed: int,
    constants: DomainConstants | None = None,
    opts: OptimizeOptions | None = None,
) -> MultiStartReport:
    """Optimize from several random admissible starts and compare the minima.

    Distances are taken between solenoidal parts of the final controls in
    the L2(Q) norm (controls are determined modulo curl-free parts only).
    """
    if n_starts < 2:
        raise ValueError("n_starts must be >= 2")
    reports = [
        optimize(pd, start_control(pd, seed, i), opts) for i in range(n_starts)
    ]
    tau = trap_weights(pd.m_steps, pd.dt)
    sol_parts = [solenoidal_part(r.u_final) for r in reports]
    distances = np.zeros((n_starts, n_starts))
    for i in range(n_starts):
        for j in range(i + 1, n_starts):
            d = l2q_norm(sol_parts[i] - sol_parts[j], tau)
            distances[i, j] = distances[j, i] = d
    max_distance = float(distances.max())
    distance_tol = 1e-5 * pd.L

    threshold = exceeds = illustrative = None
    if constants is not None:
        from .certificates import CertificateInputs, certify

        report = certify(CertificateInputs.from_problem(pd, constants))
        threshold = report.uniqueness_threshold
        exceeds = pd.lam > threshold
        illustrative = report.illustrative

    return MultiStartReport(
        reports=reports,
        distances=distances,
        max_distance=max_distance,
        distance_tol=distance_tol,
        all_within_tol=max_distance <= distance_tol,
        uniqueness_threshold=threshold,
        lambda_exceeds_threshold=exceeds,
        illustrative=illustrative,
    )
