"""Acceptance checks: ten numbered end-to-end criteria, one test apiece.

Each test appends a PASS/FAIL line to ``conftest.acceptance_lines`` (printed
by the terminal-summary hook after the run) and then asserts on the same
condition, so the verdicts are visible even in a fully green run.  Scenario
sizes are chosen so the module finishes in about a minute.
"""

import math
import warnings

import numpy as np
import pytest

import conftest
from sgf2d.adjoint import duality_gap, gradient_field, solve_adjoint
from sgf2d.certificates import (
    CertificateInputs,
    certify,
    compute_lambda1,
    compute_lambda2,
    compute_lambda3,
    compute_lambda4,
    hessian_quadratic_form,
)
from sgf2d.grid import Grid, cross_quadrature, velocity_from_stream
from sgf2d.optimizer import (
    OptimizeOptions,
    cost,
    multi_start_uniqueness,
    optimize,
    start_control,
)
from sgf2d.sensitivity import solve_linearized, solve_second
from sgf2d.spaces import (
    DomainConstants,
    check_inequality,
    estimate_constant,
    sample_field,
    stream_from_coeffs,
)
from sgf2d.state import (
    ProblemData,
    Trajectory,
    apply_upsilon,
    control_h1_norm,
    curl_upsilon,
    l2q_norm,
    left_weights,
    slice_dots,
    solve_state,
    trap_weights,
    trilinear_b,
)

from helpers import smooth_control, windowed_stream


def record(num, ok, detail):
    line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}"
    conftest.acceptance_lines.append(line)
    assert ok, line


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def stream_velocity(grid, coeffs):
    return velocity_from_stream(stream_from_coeffs(grid, np.asarray(coeffs, dtype=float)))


def random_stream_velocity(grid, seed, amplitude, n_modes):
    rng = np.random.default_rng(seed)
    return stream_velocity(grid, amplitude * rng.standard_normal((n_modes, n_modes)))


def constant_control(pd, vf):
    n = pd.grid.n_interior
    data = np.broadcast_to(
        np.stack([vf.u1, vf.u2]), (pd.m_steps + 1, 2, n, n)
    ).copy()
    return Trajectory(pd.grid, pd.dt, "control", data)


# ---------------------------------------------------------------------------
# shared scenarios

@pytest.fixture(scope="module")
def bench():
    """Tracking problem with an active nonlinearity on 32^2 x 50."""
    g = Grid(32)
    pd = ProblemData(
        alpha=0.5,
        nu=0.1,
        T=0.5,
        grid=g,
        m_steps=50,
        y0=random_stream_velocity(g, 12, 0.005, 3),
        y_d=random_stream_velocity(g, 7, 0.3, 2),
        L=5.0,
        lam=1e-3,
    )
    u = smooth_control(pd, 3, amplitude=0.02)
    return pd, u, solve_state(u, pd)


@pytest.fixture(scope="module")
def taylor(bench):
    """Sup-norm Taylor remainders of the control-to-state map at three eps."""
    pd, u, base = bench
    w = smooth_control(pd, 4)
    w = w * (3.0 / l2q_norm(w, trap_weights(pd.m_steps, pd.dt)))
    tan = solve_linearized(base, w, pd)
    tt = solve_second(base, tan, tan, pd)
    r1, r2 = [], []
    for eps in (1e-2, 5e-3, 2.5e-3):
        yp = solve_state(u + w * eps, pd)
        d = yp.y - base.y - eps * tan.z
        r1.append(float(np.max(np.abs(d))))
        r2.append(float(np.max(np.abs(d - 0.5 * eps * eps * tt.z))))
    return r1, r2


@pytest.fixture(scope="module")
def estimated_constants():
    """Empirical Korn/elliptic/trilinear constants on a 16^2 grid."""
    g = Grid(16)
    samples, seed = 100, 2026
    est = {
        kind: estimate_constant(kind, samples, seed, grid=g)
        for kind in ("korn", "elliptic", "trilinear")
    }
    src = {name: "default_unit" for name in ("C1", "C2", "C3", "C4")}
    src.update({"K": "estimated", "K_tilde": "estimated", "K_hat": "estimated"})
    dc = DomainConstants(
        K=est["korn"], K_tilde=est["elliptic"], K_hat=est["trilinear"], source=src
    )
    return dc, g, samples, seed


def certification_problem(grid, m_steps, lam):
    # y0 = 0 keeps lambda1 small, so the exponentials in the thresholds stay
    # representable; the ball radius enters lambda1 through sqrt(T)*L
    return ProblemData(
        alpha=0.5,
        nu=2.0,
        T=0.5,
        grid=grid,
        m_steps=m_steps,
        y0=stream_velocity(grid, [[0.0]]),
        y_d=random_stream_velocity(grid, 7, 0.05, 2),
        L=0.3,
        lam=lam,
    )


# ---------------------------------------------------------------------------
# criteria 1-4: derivatives of the control-to-state map

def test_criterion_01_adjoint_duality(bench):
    pd, _, base = bench
    rho = left_weights(pd.m_steps, pd.dt)
    h2 = pd.grid.h ** 2
    worst = 0.0
    for i in range(10):
        w = smooth_control(pd, 100 + i, amplitude=0.5, n_modes=4)
        phi = smooth_control(pd, 200 + i, amplitude=0.5, n_modes=4)
        gap = duality_gap(base, w, phi, pd)
        pairing = h2 * float(
            np.dot(rho, slice_dots(solve_linearized(base, w, pd).z, phi.data))
        )
        worst = max(worst, gap / abs(pairing))
    record(
        1,
        worst <= 1e-10,
        f"max relative duality gap {worst:.2e} over 10 random (w, phi) pairs "
        f"on 32^2 x 50 (tol 1e-10)",
    )


def test_criterion_02_gradient_vs_central_differences(bench):
    pd, u0, base0 = bench
    tau = trap_weights(pd.m_steps, pd.dt)
    h2 = pd.grid.h ** 2
    eps = 1e-4
    controls = [u0, smooth_control(pd, 5, amplitude=0.02), smooth_control(pd, 6, amplitude=0.02)]
    worst = 0.0
    for u in controls:
        assert control_h1_norm(u) <= pd.L
        sol = base0 if u is u0 else solve_state(u, pd)
        grad = gradient_field(u, solve_adjoint(sol, pd.y_d, pd), pd.lam)
        for j in range(5):
            w = smooth_control(pd, 300 + j, amplitude=1.0, n_modes=4)
            w = w * (1.0 / float(np.max(np.abs(w.data))))
            directional = h2 * float(np.dot(tau, slice_dots(grad.data, w.data)))
            jp = cost(u + w * eps, solve_state(u + w * eps, pd).velocity, pd.y_d, pd.lam)
            jm = cost(u - w * eps, solve_state(u - w * eps, pd).velocity, pd.y_d, pd.lam)
            fd = (jp - jm) / (2.0 * eps)
            worst = max(worst, abs(directional - fd) / abs(fd))
    record(
        2,
        worst <= 1e-6,
        f"adjoint gradient vs central differences: max rel error {worst:.2e} "
        f"over 3 admissible controls x 5 directions at eps=1e-4 (tol 1e-6)",
    )


def test_criterion_03_first_order_taylor(taylor):
    r1, _ = taylor
    ratios = (r1[0] / r1[1], r1[1] / r1[2])
    ok = all(3.6 <= r <= 4.4 for r in ratios)
    record(
        3,
        ok,
        f"first-order remainder ratios {ratios[0]:.2f}, {ratios[1]:.2f} under "
        f"eps halving (window [3.6, 4.4])",
    )


def test_criterion_04_second_order_taylor_and_polarization(bench, taylor):
    pd, _, base = bench
    _, r2 = taylor
    ratios = (r2[0] / r2[1], r2[1] / r2[2])
    ok_ratio = all(7.0 <= r <= 9.0 for r in ratios)

    w1 = smooth_control(pd, 8, amplitude=0.02)
    w2 = smooth_control(pd, 9, amplitude=0.02)
    t1 = solve_linearized(base, w1, pd)
    t2 = solve_linearized(base, w2, pd)
    t12 = solve_linearized(base, w1 + w2, pd)
    lhs = solve_second(base, t12, t12, pd).z
    rhs = (
        solve_second(base, t1, t1, pd).z
        + 2.0 * solve_second(base, t1, t2, pd).z
        + solve_second(base, t2, t2, pd).z
    )
    polar = float(np.max(np.abs(lhs - rhs))) / float(np.max(np.abs(lhs)))
    record(
        4,
        ok_ratio and polar <= 1e-8,
        f"second-order remainder ratios {ratios[0]:.2f}, {ratios[1]:.2f} "
        f"(window [7, 9]); polarization gap {polar:.2e} relative (tol 1e-8)",
    )


# ---------------------------------------------------------------------------
# criterion 5: forward solver against the exact single-mode decay factor

def test_criterion_05_single_mode_decay():
    g = Grid(64)
    alpha, nu, T = 0.2, 0.5, 0.5
    y0 = stream_velocity(g, [[1.0]])
    mu = (4.0 - 4.0 * math.cos(math.pi * g.h)) / g.h ** 2
    expected = math.exp(-mu * nu * T / (1.0 + alpha * mu))
    errs = []
    for m in (200, 400):
        with warnings.catch_warnings():
            # the CFL advisory fires, but a single mode advects itself by zero
            warnings.simplefilter("ignore")
            pd = ProblemData(alpha=alpha, nu=nu, T=T, grid=g, m_steps=m, y0=y0)
        sol = solve_state(None, pd)
        ratio = float(np.linalg.norm(sol.omega[m]) / np.linalg.norm(sol.omega[0]))
        errs.append(abs(ratio / expected - 1.0))
    halving = errs[1] / errs[0]
    ok = errs[0] <= 1e-2 and 0.4 <= halving <= 0.6
    record(
        5,
        ok,
        f"single-mode vorticity decay error {errs[0]:.2e} at 64^2 x 200 "
        f"(tol 1e-2); error ratio {halving:.3f} under dt halving (window [0.4, 0.6])",
    )


# ---------------------------------------------------------------------------
# criterion 6: stability bounds at inputs where every factor collapses

def test_criterion_06_lambda_spot_values():
    def crafted(norm_y0, norm_yd):
        return CertificateInputs(
            alpha=0.5,
            nu=2.0,
            T=1.0,
            norm_y0_H3=norm_y0,
            norm_u_L1H1=0.0,
            norm_yd_L2Q=norm_yd,
            constants=DomainConstants(),
            lam=0.0,
        )

    ci0 = crafted(0.0, 1.0)
    e = math.e
    checks = [
        (compute_lambda1(crafted(1.0, 0.0)), math.sqrt(5.0)),
        (compute_lambda2(ci0, 0.0), math.sqrt(e + 1.0)),
        (compute_lambda3(ci0, 0.0, "printed"), math.sqrt(e)),
        (compute_lambda3(ci0, 0.0, "derived"), math.sqrt(e + 1.0)),
        (compute_lambda4(ci0, 0.0), math.sqrt(2.0 * (e + 1.0))),
    ]
    worst = max(rel(a, b) for a, b in checks)
    record(
        6,
        worst <= 1e-12,
        f"stability bounds at collapsing inputs: max rel error {worst:.2e} "
        f"across lambda1, lambda2, both lambda3 groupings, lambda4 (tol 1e-12)",
    )


# ---------------------------------------------------------------------------
# criteria 7-8: certified convexity and uniqueness, with estimated constants

def test_criterion_07_hessian_coercivity(estimated_constants):
    dc, _, _, _ = estimated_constants
    g = Grid(16)
    probe = certification_problem(g, 10, 0.0)
    rep = certify(CertificateInputs.from_problem(probe, dc))
    coer = rep.coercivity_threshold
    lam = 2.0 * coer
    pd = certification_problem(g, 10, lam)
    base = solve_state(None, pd)
    tau = trap_weights(pd.m_steps, pd.dt)
    min_margin = np.inf
    ok = math.isfinite(coer)
    for i in range(20):
        w = start_control(pd, 40, i)
        q = hessian_quadratic_form(base, w, pd, lam)
        bound = (lam - coer) * l2q_norm(w, tau) ** 2
        min_margin = min(min_margin, q - bound)
        ok = ok and q > bound
    record(
        7,
        ok,
        f"hessian form exceeds (lam - threshold)|w|^2 for 20 random admissible "
        f"w at lam = 2x coercivity threshold {coer:.3f} (min margin {min_margin:.1e})",
    )


def test_criterion_08_multistart_uniqueness(estimated_constants):
    dc, _, _, _ = estimated_constants
    g = Grid(12)
    probe = certification_problem(g, 8, 0.0)
    rep = certify(CertificateInputs.from_problem(probe, dc))
    lam = 2.0 * rep.uniqueness_threshold
    assert math.isfinite(lam)

    pd = certification_problem(g, 8, lam)
    opts = OptimizeOptions(max_iter=400, tol=1e-12, initial_step=1.0 / (1.0 + lam))
    ms = multi_start_uniqueness(pd, 4, 11, dc, opts)
    ok = (
        bool(ms.lambda_exceeds_threshold)
        and ms.all_within_tol
        and all(r.converged for r in ms.reports)
    )

    # contrast run at lam = 0: spread recorded, no uniqueness claim attached
    ms0 = multi_start_uniqueness(
        certification_problem(g, 8, 0.0), 4, 11, None, OptimizeOptions(max_iter=40)
    )
    record(
        8,
        ok,
        f"4 starts at lam = 2x uniqueness threshold ({lam:.2e}): max pairwise "
        f"solenoidal distance {ms.max_distance:.1e} <= {ms.distance_tol:.1e}; "
        f"lam=0 contrast spread {ms0.max_distance:.1e} (recorded, no claim)",
    )


# ---------------------------------------------------------------------------
# criterion 9: a-priori inequalities and the antisymmetry identity

def test_criterion_09_inequalities_and_antisymmetry(estimated_constants):
    dc, g16, samples, seed = estimated_constants
    failures = 0
    for kind in ("korn", "elliptic", "trilinear"):
        for i in range(samples):
            chk = check_inequality(kind, sample_field(kind, i, seed, grid=g16), dc)
            failures += 0 if chk.holds else 1

    g = Grid(63)
    rng = np.random.default_rng(2026)
    worst = 0.0
    for _ in range(20):
        cy, cz, cphi = 1.5e-4 * rng.standard_normal((3, 3, 3))
        y = velocity_from_stream(windowed_stream(g, cy, 3))
        z = velocity_from_stream(windowed_stream(g, cz, 2))
        phi = velocity_from_stream(windowed_stream(g, cphi, 2))
        uy = apply_upsilon(y, 0.4)
        lhs = cross_quadrature(curl_upsilon(y, 0.4), z, phi)
        rhs = trilinear_b(phi, z, uy) - trilinear_b(z, phi, uy)
        worst = max(worst, abs(lhs - rhs))
    record(
        9,
        failures == 0 and worst <= 1e-10,
        f"Korn/elliptic/trilinear inequalities hold on {samples} sampled fields "
        f"each with estimated constants ({failures} failures); antisymmetry "
        f"identity worst gap {worst:.1e} over 20 smooth triples (tol 1e-10)",
    )


# ---------------------------------------------------------------------------
# criterion 10: optimizer drives a reachable-target cost down by 1000x

def test_criterion_10_reachable_target_reduction():
    g = Grid(16)
    alpha, nu, T, m = 0.05, 0.02, 2.0, 24
    y0 = stream_velocity(g, [[0.0]])
    pd_fwd = ProblemData(alpha=alpha, nu=nu, T=T, grid=g, m_steps=m, y0=y0)
    u_hat = constant_control(pd_fwd, stream_velocity(g, [[0.05]]))
    y_d = solve_state(u_hat, pd_fwd).velocity
    pd = ProblemData(
        alpha=alpha,
        nu=nu,
        T=T,
        grid=g,
        m_steps=m,
        y0=y0,
        y_d=y_d,
        L=2.0 * control_h1_norm(u_hat),
        lam=1e-4,
    )
    res = optimize(pd, opts=OptimizeOptions(max_iter=400))
    j0 = res.iterates[0].J
    vi = res.iterates[-1].vi
    reduction = j0 / res.J_final
    ok = res.converged and reduction >= 1e3 and vi <= 1e-8 * (1.0 + j0)
    record(
        10,
        ok,
        f"reachable tracking target: J reduced {reduction:.0f}x from J(0)={j0:.3e} "
        f"(need >= 1000x); final vi residual {vi:.1e} <= {1e-8 * (1.0 + j0):.1e}",
    )
