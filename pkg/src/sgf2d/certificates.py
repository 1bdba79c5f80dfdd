"""Explicit stability constants, optimality thresholds, and Hessian forms.

lambda1..lambda4 are closed-form a priori bounds (state, linearized state,
transposed linearization, adjoint state); the second-order sufficiency
threshold 2*K_hat*lambda3^2*lambda4 and the uniqueness threshold
2*K_hat*lambda2^2*lambda4 are built from them. The quadratic form
J''(u)[w,w] is evaluated exactly for the discrete objective (default) or
from the per-slice integrand (method="pointwise").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adjoint import AdjointState, solve_adjoint
from .grid import arakawa, VectorField2D
from .sensitivity import solve_linearized, solve_second
from .spaces import DomainConstants, inner_l2, norm_hk
from .state import (
    ProblemData,
    StateSolution,
    Trajectory,
    _h1_sq_slice,
    left_weights,
    nonlinear_term,
    slice_dots,
    trap_weights,
)

_READINGS = ("printed", "derived")


@dataclass(frozen=True)
class CertificateInputs:
    """Everything the lambda-formulas consume.

    norm_u_L1H1 is the L1-in-time H1-in-space control norm; when only the
    admissible radius L is known it is bounded by sqrt(T)*L and
    u_norm_source records that a bound (not the actual norm) was used.
    """

    alpha: float
    nu: float
    T: float
    norm_y0_H3: float
    norm_u_L1H1: float
    norm_yd_L2Q: float
    constants: DomainConstants
    lam: float = 0.0
    u_norm_source: str = "ball_bound"

    def __post_init__(self):
        for name in ("alpha", "nu", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("norm_y0_H3", "norm_u_L1H1", "norm_yd_L2Q", "lam"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.u_norm_source not in ("actual", "ball_bound"):
            raise ValueError("u_norm_source must be 'actual' or 'ball_bound'")

    @classmethod
    def from_problem(
        cls,
        pd: ProblemData,
        constants: DomainConstants,
        u: Trajectory | None = None,
        u_norm_source: str = "ball_bound",
    ) -> "CertificateInputs":
        h = pd.grid.h
        tau = trap_weights(pd.m_steps, pd.dt)
        if u_norm_source == "ball_bound":
            n_u = math.sqrt(pd.T) * pd.L
        elif u_norm_source == "actual":
            if u is None:
                raise ValueError("u_norm_source='actual' requires the control u")
            slice_h1 = np.array(
                [
                    math.sqrt(_h1_sq_slice(u.data[k, 0], u.data[k, 1], h))
                    for k in range(pd.m_steps + 1)
                ]
            )
            n_u = float(np.dot(tau, slice_h1))
        else:
            raise ValueError("u_norm_source must be 'actual' or 'ball_bound'")
        target = pd.target_stack()
        n_yd = math.sqrt(
            h * h * float(np.dot(tau, slice_dots(target, target)))
        )
        return cls(
            alpha=pd.alpha,
            nu=pd.nu,
            T=pd.T,
            norm_y0_H3=norm_hk(pd.y0, 3),
            norm_u_L1H1=n_u,
            norm_yd_L2Q=n_yd,
            constants=constants,
            lam=pd.lam,
            u_norm_source=u_norm_source,
        )


def compute_lambda1(ci: CertificateInputs) -> float:
    """lambda1^2 = (1 + 4*K*alpha_hat)(|y0|_{H3}^2 + |u|_{L1(0,T;H1)}^2)."""
    alpha_hat = max(1.0 / (2.0 * ci.alpha), 2.0 * ci.alpha)
    s = ci.norm_y0_H3 ** 2 + ci.norm_u_L1H1 ** 2
    return math.sqrt((1.0 + 4.0 * ci.constants.K * alpha_hat) * s)


def compute_lambda2(ci: CertificateInputs, lambda1: float) -> float:
    """lambda2^2 = Kt[(1 + C2*T*(1+1/a)*C1*l1/a) e^{C2*T(1+(1+1/a)*C1*l1)} + 1/(a*nu)]."""
    a, c = ci.alpha, ci.constants
    growth = c.C2 * ci.T * (1.0 + 1.0 / a) * c.C1 * lambda1 / a
    expo = math.exp(c.C2 * ci.T * (1.0 + (1.0 + 1.0 / a) * c.C1 * lambda1))
    return math.sqrt(c.K_tilde * ((1.0 + growth) * expo + 1.0 / (a * ci.nu)))


def _lambda3_sq(ci: CertificateInputs, lambda1: float, reading: str) -> float:
    a, c = ci.alpha, ci.constants
    A = c.C3 * ci.T * c.C1 * lambda1 * (1.0 + a) / a ** 2
    B = c.C3 * ci.T * (1.0 + c.C1 * lambda1 * (1.0 + 1.0 / a))
    paren = 1.0 + (2.0 / a) * c.C3 * ci.T * c.C1 * lambda1 * (1.0 + 1.0 / a) * math.exp(A)
    if reading == "printed":
        # grouping exactly as displayed: one product of all four factors
        return c.K_tilde * (1.0 / (a * ci.nu)) * math.exp(A) * paren * math.exp(B)
    if reading == "derived":
        # grouping the derivation supports: dissipative term added, not multiplied
        return c.K_tilde * (paren * math.exp(B) + (1.0 / (a * ci.nu)) * math.exp(A))
    raise ValueError(f"unknown lambda3 reading {reading!r}")


def compute_lambda3(ci: CertificateInputs, lambda1: float, reading: str = "printed") -> float:
    """Transposed-linearization bound; see lambda3_discrepancy for the two readings."""
    return math.sqrt(_lambda3_sq(ci, lambda1, reading))


def compute_lambda4(ci: CertificateInputs, lambda1: float) -> float:
    """Adjoint bound: 2*Kt[(1 + C4*T*C1*l1*(1+1/a)/a e^{A}) e^{B} + e^{E}/(a*nu)]
    times (C1^2*l1^2/a^2 + |y_d|^2)."""
    a, c = ci.alpha, ci.constants
    A = c.C4 * ci.T * c.C1 * lambda1 * (1.0 + a) / a ** 2
    B = c.C4 * ci.T * (1.0 + c.C1 * lambda1 * (1.0 + 1.0 / a))
    E = c.C4 * ci.T * c.C1 * lambda1 * (1.0 + a) ** 2 / a
    bracket = (
        1.0 + (1.0 / a) * c.C4 * ci.T * c.C1 * lambda1 * (1.0 + 1.0 / a) * math.exp(A)
    ) * math.exp(B) + (1.0 / (a * ci.nu)) * math.exp(E)
    data = c.C1 ** 2 * lambda1 ** 2 / a ** 2 + ci.norm_yd_L2Q ** 2
    return math.sqrt(2.0 * c.K_tilde * bracket * data)


_REPORT_FLOATS = (
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda3_printed",
    "lambda3_derived",
    "lambda3_rel_discrepancy",
    "lambda4",
    "lam",
    "coercivity_threshold",
    "uniqueness_threshold",
)
_REPORT_BOOLS = ("verdict_second_order", "verdict_uniqueness", "illustrative")
_REPORT_STRS = ("lambda3_reading", "u_norm_source")


@dataclass(frozen=True)
class CertificateReport:
    lambda1: float
    lambda2: float
    lambda3: float
    lambda3_printed: float
    lambda3_derived: float
    lambda3_rel_discrepancy: float
    lambda3_reading: str
    lambda4: float
    lam: float
    coercivity_threshold: float
    uniqueness_threshold: float
    verdict_second_order: bool
    verdict_uniqueness: bool
    illustrative: bool
    u_norm_source: str
    constants_source: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.coercivity_threshold < 0 or self.uniqueness_threshold < 0:
            raise ValueError("thresholds must be nonnegative")
        if self.verdict_second_order != (self.lam > self.coercivity_threshold):
            raise ValueError("second-order verdict inconsistent with stored values")
        if self.verdict_uniqueness != (self.lam > self.uniqueness_threshold):
            raise ValueError("uniqueness verdict inconsistent with stored values")

    def to_text(self) -> str:
        lines = ["# optimality certificate"]
        for name in _REPORT_FLOATS:
            lines.append(f"{name} = {getattr(self, name):.17g}")
        for name in _REPORT_BOOLS:
            lines.append(f"{name} = {'true' if getattr(self, name) else 'false'}")
        for name in _REPORT_STRS:
            lines.append(f"{name} = {getattr(self, name)}")
        for cname in sorted(self.constants_source):
            lines.append(f"source_{cname} = {self.constants_source[cname]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CertificateReport":
        kw: dict = {"constants_source": {}}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, _, val = (s.strip() for s in line.partition("="))
            if key in _REPORT_FLOATS:
                kw[key] = float(val)
            elif key in _REPORT_BOOLS:
                if val not in ("true", "false"):
                    raise ValueError(f"line {lineno}: {key} must be true or false")
                kw[key] = val == "true"
            elif key in _REPORT_STRS:
                kw[key] = val
            elif key.startswith("source_"):
                kw["constants_source"][key[len("source_"):]] = val
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        return cls(**kw)

    def write_text(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    def write_csv(self, path) -> None:
        names = list(_REPORT_FLOATS) + list(_REPORT_BOOLS) + list(_REPORT_STRS)
        names += [f"source_{c}" for c in sorted(self.constants_source)]
        vals = [f"{getattr(self, n):.17g}" for n in _REPORT_FLOATS]
        vals += ["true" if getattr(self, n) else "false" for n in _REPORT_BOOLS]
        vals += [getattr(self, n) for n in _REPORT_STRS]
        vals += [self.constants_source[c] for c in sorted(self.constants_source)]
        with open(path, "w") as fh:
            fh.write(",".join(names) + "\n")
            fh.write(",".join(vals) + "\n")


def certify(ci: CertificateInputs, lambda3_reading: str = "printed") -> CertificateReport:
    """Evaluate all four constants, both thresholds, and both verdicts.

    The lambda3 display admits two parenthesizations; both are always
    evaluated and their relative discrepancy reported, with the selected
    reading feeding the thresholds.
    """
    if lambda3_reading not in _READINGS:
        raise ValueError(f"lambda3_reading must be one of {_READINGS}")
    l1 = compute_lambda1(ci)
    l2 = compute_lambda2(ci, l1)
    l3p = compute_lambda3(ci, l1, "printed")
    l3d = compute_lambda3(ci, l1, "derived")
    l3 = l3p if lambda3_reading == "printed" else l3d
    l4 = compute_lambda4(ci, l1)
    disc = abs(l3p - l3d) / max(l3p, l3d) if max(l3p, l3d) > 0 else 0.0
    k_hat = ci.constants.K_hat
    coer = 2.0 * k_hat * l3 ** 2 * l4
    uniq = 2.0 * k_hat * l2 ** 2 * l4
    return CertificateReport(
        lambda1=l1,
        lambda2=l2,
        lambda3=l3,
        lambda3_printed=l3p,
        lambda3_derived=l3d,
        lambda3_rel_discrepancy=disc,
        lambda3_reading=lambda3_reading,
        lambda4=l4,
        lam=ci.lam,
        coercivity_threshold=coer,
        uniqueness_threshold=uniq,
        verdict_second_order=ci.lam > coer,
        verdict_uniqueness=ci.lam > uniq,
        illustrative=ci.constants.any_default,
        u_norm_source=ci.u_norm_source,
        constants_source=dict(ci.constants.source),
    )


def check_state_bound(base: StateSolution, ci: CertificateInputs):
    """max_t |y(t)|_{H3}^2 against the a priori bound C1^2 lambda1^2 / alpha^2.

    Advisory when any constant is a unit default; an honest check only with
    supplied or estimated constants.
    """
    from .spaces import InequalityCheck

    lambda1 = compute_lambda1(ci)
    lhs = float(np.max(base.norms_h3)) ** 2
    rhs = (ci.constants.C1 * lambda1 / ci.alpha) ** 2
    return InequalityCheck(lhs, rhs, lhs <= rhs * (1.0 + 1e-12))


def check_adjoint_bound(adj: AdjointState, ci: CertificateInputs):
    """max_t |p(t)|_{H2}^2 against lambda4^2.  Advisory with default constants."""
    from .spaces import InequalityCheck

    lambda4 = compute_lambda4(ci, compute_lambda1(ci))
    g = adj.pd.grid
    lhs = max(
        norm_hk(VectorField2D(g, adj.p[k, 0], adj.p[k, 1]), 2)
        for k in range(adj.pd.m_steps + 1)
    ) ** 2
    rhs = lambda4 ** 2
    return InequalityCheck(lhs, rhs, lhs <= rhs * (1.0 + 1e-12))


def hessian_quadratic_form(
    base: StateSolution,
    w: Trajectory,
    pd: ProblemData,
    lam: float,
    method: str = "exact",
) -> float:
    """J''(u)[w,w] for the discrete tracking objective.

    method="exact" differentiates the discrete objective itself (agrees with
    second differences to O(eps^2) and polarizes exactly); "pointwise"
    evaluates the integrand |z|^2 + lam|w|^2 - 2(p, curl upsilon(z) x z)
    slice by slice with trapezoid weights.
    """
    tan = solve_linearized(base, w, pd)
    adj = solve_adjoint(base, None, pd)
    m, dt, h = pd.m_steps, pd.dt, pd.grid.h
    h2 = h * h
    rho = left_weights(m, dt)
    tau = trap_weights(m, dt)
    if method == "exact":
        track = h2 * float(np.dot(rho, slice_dots(tan.z, tan.z)))
        reg = lam * h2 * float(np.dot(tau, slice_dots(w.data, w.data)))
        cross = 0.0
        for k in range(m):
            cross += float(
                np.vdot(adj.r[k + 1], arakawa(tan.dq[k], tan.dpsi[k], h))
            )
        return track + reg - 2.0 * dt * cross
    if method == "pointwise":
        g = pd.grid
        total = 0.0
        for k in range(m + 1):
            zk = VectorField2D(g, tan.z[k, 0], tan.z[k, 1])
            pk = VectorField2D(g, adj.p[k, 0], adj.p[k, 1])
            wk = w.slice(k)
            total += tau[k] * (
                inner_l2(zk, zk)
                + lam * inner_l2(wk, wk)
                - 2.0 * nonlinear_term(zk, pk, pd.alpha)
            )
        return total
    raise ValueError(f"unknown method {method!r}")


def hessian_bilinear_form(
    base: StateSolution, w1: Trajectory, w2: Trajectory, pd: ProblemData, lam: float
) -> float:
    """Mixed second derivative J''(u)[w1,w2] through the second-order tangent.

    Polarization identity: Q(w1+w2) - Q(w1) - Q(w2) equals twice this value
    (exactly, for the exact quadratic form).
    """
    t1 = solve_linearized(base, w1, pd)
    t2 = solve_linearized(base, w2, pd)
    second = solve_second(base, t1, t2, pd)
    m, dt, h = pd.m_steps, pd.dt, pd.grid.h
    h2 = h * h
    rho = left_weights(m, dt)
    tau = trap_weights(m, dt)
    mis = base.y - pd.target_stack()
    track = h2 * float(np.dot(rho, slice_dots(t1.z, t2.z)))
    track += h2 * float(np.dot(rho, slice_dots(mis, second.z)))
    reg = lam * h2 * float(np.dot(tau, slice_dots(w1.data, w2.data)))
    return track + reg
