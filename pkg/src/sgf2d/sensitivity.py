"""Exact first and second derivatives of the discrete control-to-state map.

These differentiate the stepper itself (not a re-discretization of the
linearized equations), so the adjoint built on top is an exact transpose
and gradient/duality checks are limited only by roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridMismatchError, arakawa, d1c, d2c
from .state import ProblemData, StateSolution, Trajectory, get_ops


@dataclass(frozen=True)
class TangentState:
    """Tangent bundle: velocity tangent z plus its vorticity-space companions."""

    pd: ProblemData
    z: np.ndarray
    dq: np.ndarray
    dpsi: np.ndarray

    @property
    def z_traj(self) -> Trajectory:
        return Trajectory(self.pd.grid, self.pd.dt, "tangent", self.z)

    @property
    def q_tangent(self) -> Trajectory:
        return Trajectory(self.pd.grid, self.pd.dt, "potential_vorticity", self.dq)


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


def solve_linearized(base: StateSolution, w: Trajectory, pd: ProblemData) -> TangentState:
    """Tangent z = S'(u)[w]: the derivative of every discrete step, z(0) = 0."""
    _check_base(base, pd)
    if w.grid != pd.grid or not w.is_vector or w.m_steps != pd.m_steps:
        raise GridMismatchError("direction w is not aligned with the problem")
    ops = get_ops(pd)
    n = pd.grid.n_interior
    m = pd.m_steps
    h = pd.grid.h
    dt = pd.dt

    dq = np.zeros((m + 1, n, n))
    dpsi = np.zeros_like(dq)
    z = np.zeros((m + 1, 2, n, n))

    for k in range(m):
        curl_w = d1c(w.data[k + 1, 1], h) - d2c(w.data[k + 1, 0], h)
        rhs = dq[k] + dt * (
            curl_w
            - arakawa(dq[k], base.psi[k], h)
            - arakawa(base.q[k], dpsi[k], h)
        )
        dom = ops.inv_Hb(rhs)
        dq[k + 1] = ops.Ha(dom)
        dpsi[k + 1] = ops.inv_P(dom)
        z[k + 1, 0] = d2c(dpsi[k + 1], h)
        z[k + 1, 1] = -d1c(dpsi[k + 1], h)

    return TangentState(pd, z, dq, dpsi)


def solve_second(
    base: StateSolution, t1: TangentState, t2: TangentState, pd: ProblemData
) -> TangentState:
    """Second derivative S''(u)[w1, w2] given the two first-order tangents.

    Same propagator as solve_linearized, no control forcing, bilinear source
    from the interaction of the two tangents; symmetric in (t1, t2) by
    construction.
    """
    _check_base(base, pd)
    for t in (t1, t2):
        if t.pd is not pd:
            _check_base(base, t.pd)
    ops = get_ops(pd)
    n = pd.grid.n_interior
    m = pd.m_steps
    h = pd.grid.h
    dt = pd.dt

    ddq = np.zeros((m + 1, n, n))
    ddpsi = np.zeros_like(ddq)
    zz = np.zeros((m + 1, 2, n, n))

    for k in range(m):
        cross = arakawa(t1.dq[k], t2.dpsi[k], h) + arakawa(t2.dq[k], t1.dpsi[k], h)
        rhs = ddq[k] + dt * (
            -cross
            - arakawa(ddq[k], base.psi[k], h)
            - arakawa(base.q[k], ddpsi[k], h)
        )
        dom = ops.inv_Hb(rhs)
        ddq[k + 1] = ops.Ha(dom)
        ddpsi[k + 1] = ops.inv_P(dom)
        zz[k + 1, 0] = d2c(ddpsi[k + 1], h)
        zz[k + 1, 1] = -d1c(ddpsi[k + 1], h)

    return TangentState(pd, zz, ddq, ddpsi)
