"""Free decay of a single vorticity mode, checked against the exact factor.

With u = 0 and psi0 = sin(pi x1) sin(pi x2) the semi-implicit scheme damps
the (1,1) eigenmode by ((1 + a*mu) / (1 + a*mu + nu*dt*mu))^m after m steps,
which converges to exp(-mu*nu*T / (1 + a*mu)) as dt -> 0, mu the discrete
Laplacian eigenvalue.  Halving dt should halve the gap between the two.
"""

import math
import warnings

import numpy as np

from sgf2d import Grid, ProblemData, solve_state, stream_from_coeffs, velocity_from_stream

alpha = 0.2
nu = 0.5
T = 0.5
n_grid = 64


def main():
    g = Grid(n_grid)
    y0 = velocity_from_stream(stream_from_coeffs(g, np.array([[1.0]])))
    mu = (4.0 - 4.0 * math.cos(math.pi * g.h)) / g.h ** 2
    exact = math.exp(-mu * nu * T / (1.0 + alpha * mu))

    print(f"grid {n_grid}^2, alpha={alpha}, nu={nu}, T={T}")
    print(f"discrete eigenvalue mu = {mu:.6f}, exact decay factor = {exact:.8f}")
    print(f"{'steps':>6} {'measured':>12} {'rel error':>10}")
    prev = None
    for m in (50, 100, 200, 400):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # CFL advisory; the mode self-advects by zero
            pd = ProblemData(alpha=alpha, nu=nu, T=T, grid=g, m_steps=m, y0=y0)
        sol = solve_state(None, pd)
        ratio = np.linalg.norm(sol.omega[m]) / np.linalg.norm(sol.omega[0])
        err = abs(ratio / exact - 1.0)
        note = "" if prev is None else f"  (x{err / prev:.3f} vs previous)"
        print(f"{m:>6} {ratio:>12.8f} {err:>10.2e}{note}")
        prev = err


if __name__ == "__main__":
    main()
