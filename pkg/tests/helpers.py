"""Field constructors shared by the test modules (not a test file)."""

import numpy as np

from sgf2d.grid import Grid, ScalarField2D, VectorField2D, velocity_from_stream
from sgf2d.spaces import stream_from_coeffs


def single_mode_stream(grid, k, l, amp=1.0):
    coeffs = np.zeros((k, l))
    coeffs[k - 1, l - 1] = amp
    return stream_from_coeffs(grid, coeffs)


def mode_mu(grid, k, l):
    # discrete eigenvalue of -lap5 for the (k, l) sine mode
    h = grid.h
    return (4.0 / h**2) * (np.sin(k * np.pi * h / 2) ** 2 + np.sin(l * np.pi * h / 2) ** 2)


def windowed_stream(grid, coeffs, power=2):
    """Random polynomial modulated by a sin^power window.

    The stream vanishes at the walls to order `power`, so the velocity
    vanishes to order power-1; unlike pure sine/squared-sine mode sums the
    family has no parity symmetry, so trilinear integrals do not degenerate.
    """
    x1, x2 = grid.coords()
    w = (np.sin(np.pi * x1) ** power) * (np.sin(np.pi * x2) ** power)
    poly = np.zeros(grid.shape)
    for i in range(coeffs.shape[0]):
        for j in range(coeffs.shape[1]):
            poly += coeffs[i, j] * x1**i * x2**j
    return ScalarField2D(grid, w * poly)


def windowed_velocity(grid, rng, power=2, degree=3, amplitude=1.0):
    coeffs = amplitude * rng.standard_normal((degree, degree))
    return velocity_from_stream(windowed_stream(grid, coeffs, power))


def smooth_raw_field(grid, seed):
    # generic smooth vector field with O(1) wall values, no structure at all
    x1, x2 = grid.coords()
    r = np.random.default_rng(seed).standard_normal(6)
    u1 = r[0] * np.sin(1.3 * x1 + 0.2) * np.cos(0.7 * x2) + r[1] * x1 * x2 + r[2]
    u2 = r[3] * np.cos(0.9 * x1) * np.sin(1.1 * x2 + 0.5) + r[4] * x2**2 + r[5] * x1
    return VectorField2D(grid, u1, u2)


def smooth_control(pd, seed, amplitude=0.05, n_modes=3):
    """Control trajectory of stream velocities with a smooth time profile."""
    from sgf2d.state import Trajectory

    rng = np.random.default_rng(seed)
    n = pd.grid.n_interior
    data = np.zeros((pd.m_steps + 1, 2, n, n))
    coeffs = amplitude * rng.standard_normal((n_modes, n_modes))
    coeffs2 = amplitude * rng.standard_normal((n_modes, n_modes))
    for k in range(pd.m_steps + 1):
        t = k * pd.dt
        v = velocity_from_stream(
            stream_from_coeffs(pd.grid, np.cos(np.pi * t) * coeffs + np.sin(2 * np.pi * t) * coeffs2)
        )
        data[k, 0], data[k, 1] = v.u1, v.u2
    return Trajectory(pd.grid, pd.dt, "control", data)
