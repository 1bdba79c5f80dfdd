"""Uniform interior grid on the unit square and the finite-difference toolbox.

Fields live on the n x n interior nodes of (0,1)^2 with spacing
h = 1/(n+1). Scalar quantities carried here (stream function, vorticity,
potential vorticity) vanish on the walls, so differential stencils extend
them by a zero ghost ring. ``values[i, j]`` samples the point
(x1, x2) = ((i+1)h, (j+1)h): axis 0 is x1, axis 1 is x2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.fft import dstn
from scipy.sparse.linalg import LinearOperator, cg


class GridMismatchError(ValueError):
    """Operands live on different grids."""


class SolverDivergenceError(RuntimeError):
    """An elliptic solve failed to reach its residual tolerance."""


@dataclass(frozen=True)
class Grid:
    """Interior nodes of the unit square: n_interior per axis, h = 1/(n_interior+1)."""

    n_interior: int

    def __post_init__(self):
        if self.n_interior < 3:
            raise ValueError(f"n_interior must be >= 3, got {self.n_interior}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_interior, self.n_interior)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (X1, X2) of interior node coordinates, x1 along axis 0."""
        x = np.arange(1, self.n_interior + 1) * self.h
        return np.meshgrid(x, x, indexing="ij")


def _frozen(values, shape) -> np.ndarray:
    a = np.array(values, dtype=np.float64, order="C")
    if a.shape != shape:
        raise ValueError(f"values shape {a.shape} does not match grid {shape}")
    if not np.isfinite(a).all():
        raise ValueError("field contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField2D:
    """Scalar samples on the interior grid; boundary value implied zero."""

    grid: Grid
    values: np.ndarray
    boundary_rule: str = "dirichlet_zero"

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))
        if self.boundary_rule != "dirichlet_zero":
            raise ValueError(f"unsupported boundary rule {self.boundary_rule!r}")


@dataclass(frozen=True)
class VectorField2D:
    """Two-component field on the interior grid.

    ``divergence_free`` is set by constructions that guarantee it
    (velocity_from_stream); ``stream`` then carries the generating stream
    function, which the advection operator requires.
    """

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray
    divergence_free: bool = False
    stream: ScalarField2D | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "u1", _frozen(self.u1, self.grid.shape))
        object.__setattr__(self, "u2", _frozen(self.u2, self.grid.shape))
        if self.stream is not None and self.stream.grid != self.grid:
            raise GridMismatchError("stream function lives on a different grid")


def same_grid(*fields) -> Grid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError(f"grids differ: {g} vs {f.grid}")
    return g


# ---------------------------------------------------------------------------
# array-level stencils (zero Dirichlet ghost ring)

def pad0(v: np.ndarray) -> np.ndarray:
    return np.pad(v, 1)


def lap5(v: np.ndarray, h: float) -> np.ndarray:
    """Standard 5-point Laplacian with zero ghost values."""
    p = pad0(v)
    return (
        p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * v
    ) / (h * h)


def d1c(v: np.ndarray, h: float) -> np.ndarray:
    """Centered d/dx1 with zero ghosts."""
    p = pad0(v)
    return (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * h)


def d2c(v: np.ndarray, h: float) -> np.ndarray:
    """Centered d/dx2 with zero ghosts."""
    p = pad0(v)
    return (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * h)


def arakawa(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """Arakawa Jacobian J(a,b) ~ da/dx1 db/dx2 - da/dx2 db/dx1.

    Zero ghost ring on both arguments. The induced trilinear form
    sum(c * J(a,b)) is exactly antisymmetric in every argument pair, which
    is what the conservation and transposition contracts rely on.
    """
    ap, bp = pad0(a), pad0(b)
    aE, aW = ap[2:, 1:-1], ap[:-2, 1:-1]
    aN, aS = ap[1:-1, 2:], ap[1:-1, :-2]
    aNE, aNW = ap[2:, 2:], ap[:-2, 2:]
    aSE, aSW = ap[2:, :-2], ap[:-2, :-2]
    bE, bW = bp[2:, 1:-1], bp[:-2, 1:-1]
    bN, bS = bp[1:-1, 2:], bp[1:-1, :-2]
    bNE, bNW = bp[2:, 2:], bp[:-2, 2:]
    bSE, bSW = bp[2:, :-2], bp[:-2, :-2]

    j1 = (aE - aW) * (bN - bS) - (aN - aS) * (bE - bW)
    j2 = aE * (bNE - bSE) - aW * (bNW - bSW) - aN * (bNE - bNW) + aS * (bSE - bSW)
    j3 = aNE * (bN - bE) - aSW * (bW - bS) - aNW * (bN - bW) + aSE * (bE - bS)
    return (j1 + j2 + j3) / (12.0 * h * h)


# ---------------------------------------------------------------------------
# spectral (DST-I) elliptic solves

@lru_cache(maxsize=32)
def _neg_lap_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues of -lap5 on the n x n interior grid: all positive."""
    h = 1.0 / (n + 1)
    k = np.arange(1, n + 1)
    lam = (4.0 / (h * h)) * np.sin(k * np.pi * h / 2.0) ** 2
    return lam[:, None] + lam[None, :]


def _dst2(v: np.ndarray) -> np.ndarray:
    return dstn(v, type=1)


def _idst2(v: np.ndarray) -> np.ndarray:
    n = v.shape[0]
    return dstn(v, type=1) / (2.0 * (n + 1)) ** 2


def poisson_solve_values(
    omega: np.ndarray, h: float, method: str = "dst", maxiter: int | None = None
) -> np.ndarray:
    """Solve -lap5(psi) = omega with zero Dirichlet boundary."""
    n = omega.shape[0]
    if method == "dst":
        return _idst2(_dst2(omega) / _neg_lap_eigenvalues(n))
    if method == "cg":
        return _cg_solve(omega, h, a=None, maxiter=maxiter)
    raise ValueError(f"unknown elliptic method {method!r}")


def helmholtz_solve_values(
    rhs: np.ndarray, a: float, h: float, method: str = "dst", maxiter: int | None = None
) -> np.ndarray:
    """Solve (I - a*lap5) f = rhs with zero Dirichlet boundary, a > 0."""
    if a <= 0:
        raise ValueError(f"helmholtz coefficient must be positive, got {a}")
    n = rhs.shape[0]
    if method == "dst":
        return _idst2(_dst2(rhs) / (1.0 + a * _neg_lap_eigenvalues(n)))
    if method == "cg":
        return _cg_solve(rhs, h, a=a, maxiter=maxiter)
    raise ValueError(f"unknown elliptic method {method!r}")


def _cg_solve(rhs: np.ndarray, h: float, a: float | None, maxiter: int | None = None) -> np.ndarray:
    """Conjugate-gradient fallback; relative residual 1e-11, cap 10*n^2."""
    n = rhs.shape[0]
    if maxiter is None:
        maxiter = 10 * n * n

    def matvec(x):
        v = x.reshape(n, n)
        if a is None:
            out = -lap5(v, h)
        else:
            out = v - a * lap5(v, h)
        return out.ravel()

    op = LinearOperator((n * n, n * n), matvec=matvec, dtype=np.float64)
    b = rhs.ravel()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(rhs)
    x, _info = cg(op, b, rtol=1e-13, atol=0.0, maxiter=maxiter)
    res = np.linalg.norm(matvec(x) - b) / bnorm
    if res > 1e-11:
        raise SolverDivergenceError(
            f"cg stalled at relative residual {res:.3e} (cap {maxiter} iterations)"
        )
    return x.reshape(n, n)


# ---------------------------------------------------------------------------
# field-level operations

def laplacian(f: ScalarField2D) -> ScalarField2D:
    """5-point Laplacian with zero Dirichlet ghosts."""
    return ScalarField2D(f.grid, lap5(f.values, f.grid.h))


def helmholtz_solve(
    rhs: ScalarField2D, a: float, method: str = "dst", maxiter: int | None = None
) -> ScalarField2D:
    """Invert (I - a*Laplacian) with zero Dirichlet boundary."""
    return ScalarField2D(
        rhs.grid, helmholtz_solve_values(rhs.values, a, rhs.grid.h, method, maxiter)
    )


def poisson_solve(
    omega: ScalarField2D, method: str = "dst", maxiter: int | None = None
) -> ScalarField2D:
    """Stream function recovery: solve -Laplacian(psi) = omega, psi = 0 on walls."""
    return ScalarField2D(
        omega.grid, poisson_solve_values(omega.values, omega.grid.h, method, maxiter)
    )


def velocity_from_stream(psi: ScalarField2D) -> VectorField2D:
    """y = (d2 psi, -d1 psi): divergence-free with zero normal trace."""
    h = psi.grid.h
    return VectorField2D(
        psi.grid,
        d2c(psi.values, h),
        -d1c(psi.values, h),
        divergence_free=True,
        stream=psi,
    )


def curl2d(v: VectorField2D) -> ScalarField2D:
    """Scalar curl d(v2)/dx1 - d(v1)/dx2 by centered differences."""
    h = v.grid.h
    return ScalarField2D(v.grid, d1c(v.u2, h) - d2c(v.u1, h))


def divergence(v: VectorField2D) -> ScalarField2D:
    """Centered discrete divergence (diagnostic for the divergence-free flag)."""
    h = v.grid.h
    return ScalarField2D(v.grid, d1c(v.u1, h) + d2c(v.u2, h))


def advect(y: VectorField2D, q: ScalarField2D) -> ScalarField2D:
    """Arakawa discretization of y . grad q for stream-function velocities.

    Requires y to carry its stream function (produced by
    velocity_from_stream); the conservation properties hold through the
    stream-function form J(q, psi).
    """
    same_grid(y, q)
    if not y.divergence_free or y.stream is None:
        raise ValueError(
            "advect requires a divergence-free velocity produced by velocity_from_stream"
        )
    return ScalarField2D(q.grid, arakawa(q.values, y.stream.values, q.grid.h))


def cross_quadrature(q: ScalarField2D, z: VectorField2D, phi: VectorField2D) -> float:
    """Quadrature of (q x z) . phi where q x z = q*(-z2, z1)."""
    g = same_grid(q, z, phi)
    h2 = g.h * g.h
    return float(h2 * np.sum(q.values * (z.u1 * phi.u2 - z.u2 * phi.u1)))
