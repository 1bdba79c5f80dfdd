"""Backward-in-time discrete adjoint: exact transpose of the tangent solver.

The adjoint recursion transposes each linearized step. With left-rectangle
weights on the tracking term the terminal adjoint is exactly zero, and the
control-space pairing (trapezoid weights) satisfies the discrete duality
identity to roundoff; both are contracts tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridMismatchError, VectorField2D, arakawa, d1c, d2c
from .sensitivity import solve_linearized
from .state import (
    ProblemData,
    StateSolution,
    Trajectory,
    get_ops,
    left_weights,
    slice_dots,
    trap_weights,
)


@dataclass(frozen=True)
class AdjointState:
    """Adjoint bundle: velocity representative p plus vorticity-space internals.

    p is scaled so that sum_k tau_k h^2 <p_k, w_k> is the derivative of the
    tracking term along w; p[m] = 0 and p[0] = 0 exactly.
    """

    pd: ProblemData
    p: np.ndarray
    mu: np.ndarray
    r: np.ndarray

    @property
    def p_traj(self) -> Trajectory:
        return Trajectory(self.pd.grid, self.pd.dt, "adjoint", self.p)

    @property
    def terminal_index(self) -> int:
        return self.pd.m_steps


def _check_base(base: StateSolution, pd: ProblemData) -> None:
    b = base.pd
    if (
        b.grid != pd.grid
        or b.m_steps != pd.m_steps
        or b.alpha != pd.alpha
        or b.nu != pd.nu
        or b.T != pd.T
    ):
        raise ValueError("base solution was produced under different problem data")


def _adjoint_core(base: StateSolution, source: np.ndarray, pd: ProblemData) -> AdjointState:
    """Backward sweep driven by the vector-field source trajectory.

    source[k] is the integrand paired against the velocity tangent with
    left-rectangle time weights rho_k (rho_m = 0).
    """
    ops = get_ops(pd)
    n = pd.grid.n_interior
    m = pd.m_steps
    h = pd.grid.h
    h2 = h * h
    dt = pd.dt
    rho = left_weights(m, dt)
    tau = trap_weights(m, dt)

    mu = np.zeros((m + 1, n, n))
    r = np.zeros_like(mu)
    p = np.zeros((m + 1, 2, n, n))

    def source_term(k: int) -> np.ndarray:
        if rho[k] == 0.0:
            return np.zeros((n, n))
        curl_s = d1c(source[k, 1], h) - d2c(source[k, 0], h)
        return rho[k] * h2 * ops.inv_Ha(ops.inv_P(curl_s))

    mu[m] = source_term(m)
    for k in range(m - 1, -1, -1):
        r[k + 1] = ops.inv_Hb(ops.Ha(mu[k + 1]))
        mu[k] = (
            r[k + 1]
            - dt
            * (
                ops.inv_Ha(ops.inv_P(arakawa(r[k + 1], base.q[k], h)))
                - arakawa(r[k + 1], base.psi[k], h)
            )
            + source_term(k)
        )

    for k in range(1, m + 1):
        scale = dt / (tau[k] * h2)
        p[k, 0] = scale * d2c(r[k], h)
        p[k, 1] = -scale * d1c(r[k], h)

    return AdjointState(pd, p, mu, r)


def solve_adjoint(base: StateSolution, y_d, pd: ProblemData) -> AdjointState:
    """Adjoint of the tracking objective: source is the mismatch y - y_d."""
    _check_base(base, pd)
    if y_d is None:
        target = pd.target_stack()
    elif isinstance(y_d, Trajectory):
        if y_d.grid != pd.grid or y_d.m_steps != pd.m_steps or not y_d.is_vector:
            raise GridMismatchError("target trajectory is not aligned with the problem")
        target = y_d.data
    elif isinstance(y_d, VectorField2D):
        if y_d.grid != pd.grid:
            raise GridMismatchError("target lives on a different grid")
        target = np.broadcast_to(
            np.stack([y_d.u1, y_d.u2]), base.y.shape
        )
    else:
        raise ValueError("y_d must be a Trajectory, a VectorField2D, or None")
    return _adjoint_core(base, base.y - target, pd)


def duality_gap(
    base: StateSolution, w: Trajectory, phi_source: Trajectory, pd: ProblemData
) -> float:
    """|<S'(u)w, phi>_rho - <w, A*(phi)>_tau|: zero up to roundoff."""
    _check_base(base, pd)
    tangent = solve_linearized(base, w, pd)
    rho = left_weights(pd.m_steps, pd.dt)
    tau = trap_weights(pd.m_steps, pd.dt)
    h2 = pd.grid.h ** 2
    lhs = h2 * np.dot(rho, slice_dots(tangent.z, phi_source.data))
    adj = _adjoint_core(base, phi_source.data, pd)
    rhs = h2 * np.dot(tau, slice_dots(w.data, adj.p))
    return float(abs(lhs - rhs))


def gradient_field(u: Trajectory, p: AdjointState, lam: float) -> Trajectory:
    """Control-space gradient representative g = lam*u + p.

    Contract: sum_k tau_k h^2 <g_k, w_k> equals the directional derivative
    of the full cost along any direction w.
    """
    if u.grid != p.pd.grid or u.m_steps != p.pd.m_steps:
        raise GridMismatchError("control and adjoint are not aligned")
    return Trajectory(u.grid, u.dt, "control", lam * u.data + p.p)
