"""Forward solver: stepping, decay laws, energy, trilinear evaluators."""

import warnings

import numpy as np
import pytest

from sgf2d.certificates import CertificateInputs, check_state_bound
from sgf2d.grid import (
    Grid,
    GridMismatchError,
    ScalarField2D,
    VectorField2D,
    arakawa,
    cross_quadrature,
    d1c,
    d2c,
    lap5,
    velocity_from_stream,
)
from sgf2d.spaces import DomainConstants, norm_hk, norm_V, stream_from_coeffs
from sgf2d.state import (
    BlowUpError,
    ProblemData,
    Trajectory,
    apply_upsilon,
    control_h1_norm,
    curl_upsilon,
    l2q_inner,
    left_weights,
    nonlinear_term,
    solve_state,
    step_state,
    trap_weights,
    trilinear_b,
)

from helpers import (
    mode_mu,
    single_mode_stream,
    smooth_control,
    smooth_raw_field,
    windowed_stream,
    windowed_velocity,
)


def small_problem(n=16, m=5, seed=5, **kw):
    g = Grid(n)
    rng = np.random.default_rng(seed)
    y0 = velocity_from_stream(stream_from_coeffs(g, 0.02 * rng.standard_normal((3, 3))))
    params = dict(alpha=0.3, nu=0.2, T=0.1, grid=g, m_steps=m, y0=y0)
    params.update(kw)
    return ProblemData(**params)


class TestTrajectory:
    def test_zeros_and_kinds(self):
        g = Grid(6)
        u = Trajectory.zeros(g, 4, 0.1, "control")
        assert u.m_steps == 4 and u.is_vector and u.data.shape == (5, 2, 6, 6)
        q = Trajectory.zeros(g, 4, 0.1, "potential_vorticity")
        assert not q.is_vector and q.data.shape == (5, 6, 6)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            Trajectory.zeros(Grid(6), 4, 0.1, "pressure")

    def test_shape_and_dt_validated(self):
        g = Grid(6)
        with pytest.raises(ValueError):
            Trajectory(g, 0.1, "velocity", np.zeros((5, 6, 6)))  # scalar data, vector kind
        with pytest.raises(ValueError):
            Trajectory(g, 0.1, "stream", np.zeros((1, 6, 6)))  # single slice
        with pytest.raises(ValueError):
            Trajectory(g, 0.0, "stream", np.zeros((3, 6, 6)))

    def test_nonfinite_rejected(self):
        g = Grid(6)
        data = np.zeros((3, 6, 6))
        data[1, 2, 2] = np.inf
        with pytest.raises(ValueError):
            Trajectory(g, 0.1, "stream", data)

    def test_immutable(self):
        u = Trajectory.zeros(Grid(6), 3, 0.1, "control")
        with pytest.raises(ValueError):
            u.data[0, 0, 0, 0] = 1.0

    def test_from_fields_round_trip(self):
        g = Grid(7)
        fields = [smooth_raw_field(g, s) for s in range(3)]
        tr = Trajectory.from_fields(fields, 0.5, "velocity")
        for k, f in enumerate(fields):
            s = tr.slice(k)
            assert np.array_equal(s.u1, f.u1) and np.array_equal(s.u2, f.u2)
        assert len(tr.slices) == 3

    def test_arithmetic(self):
        g = Grid(6)
        rng = np.random.default_rng(1)
        a = Trajectory(g, 0.1, "control", rng.standard_normal((3, 2, 6, 6)))
        b = Trajectory(g, 0.1, "control", rng.standard_normal((3, 2, 6, 6)))
        assert np.array_equal((a + b).data, a.data + b.data)
        assert np.array_equal((a - b).data, a.data - b.data)
        assert np.array_equal((2.0 * a).data, 2.0 * a.data)


class TestTimeQuadrature:
    def test_weight_sums(self):
        lw = left_weights(8, 0.125)
        tw = trap_weights(8, 0.125)
        assert lw.sum() == pytest.approx(1.0) and lw[-1] == 0.0
        assert tw.sum() == pytest.approx(1.0)
        assert tw[0] == tw[-1] == pytest.approx(0.0625)

    def test_l2q_hand_value(self):
        # constant field 1 on a 3x3 grid: h^2 * 9 = 9/16 per slice, trapezoid sums to T=1
        g = Grid(3)
        tr = Trajectory(g, 0.25, "stream", np.ones((5, 3, 3)))
        w = trap_weights(4, 0.25)
        assert l2q_inner(tr, tr, w) == pytest.approx(0.5625, rel=1e-14)

    def test_l2q_mismatch(self):
        a = Trajectory.zeros(Grid(5), 3, 0.1, "control")
        b = Trajectory.zeros(Grid(6), 3, 0.1, "control")
        with pytest.raises(GridMismatchError):
            l2q_inner(a, b, trap_weights(3, 0.1))

    def test_control_h1_norm_constant_in_time(self):
        g = Grid(9)
        v = smooth_raw_field(g, 3)
        T, m = 0.8, 10
        data = np.broadcast_to(np.stack([v.u1, v.u2]), (m + 1, 2, 9, 9)).copy()
        u = Trajectory(g, T / m, "control", data)
        assert control_h1_norm(u) == pytest.approx(np.sqrt(T) * norm_hk(v, 1), rel=1e-12)


class TestProblemData:
    def test_parameter_validation(self):
        g = Grid(8)
        y0 = velocity_from_stream(single_mode_stream(g, 1, 1, 0.01))
        ok = dict(alpha=0.5, nu=0.1, T=1.0, grid=g, m_steps=10, y0=y0)
        for bad in (
            dict(alpha=0.0),
            dict(nu=-1.0),
            dict(T=0.0),
            dict(m_steps=0),
            dict(L=0.0),
            dict(lam=-0.1),
        ):
            with pytest.raises(ValueError):
                ProblemData(**{**ok, **bad})

    def test_y0_must_have_stream(self):
        g = Grid(8)
        y0 = VectorField2D(g, np.zeros(g.shape), np.zeros(g.shape))
        with pytest.raises(ValueError, match="stream"):
            ProblemData(alpha=0.5, nu=0.1, T=1.0, grid=g, m_steps=10, y0=y0)

    def test_target_validation(self):
        pd = small_problem()
        g = pd.grid
        bad = Trajectory.zeros(g, pd.m_steps + 1, pd.dt, "velocity")
        with pytest.raises(ValueError):
            small_problem(y_d=bad)
        with pytest.raises(ValueError):
            small_problem(y_d=np.zeros((2, 16, 16)))

    def test_cfl_warning(self):
        g = Grid(8)
        y0 = velocity_from_stream(single_mode_stream(g, 1, 1, 2.0))
        with pytest.warns(UserWarning, match="CFL"):
            ProblemData(alpha=0.5, nu=0.1, T=10.0, grid=g, m_steps=10, y0=y0)

    def test_dt(self):
        pd = small_problem(m=8, T=0.4)
        assert pd.dt == pytest.approx(0.05)

    def test_target_stack_shapes(self):
        pd = small_problem(m=4)
        assert np.array_equal(pd.target_stack(), np.zeros((5, 2, 16, 16)))
        v = velocity_from_stream(single_mode_stream(pd.grid, 1, 2, 0.3))
        pdc = small_problem(m=4, y_d=v)
        stack = pdc.target_stack()
        assert stack.shape == (5, 2, 16, 16)
        assert np.array_equal(stack[3, 0], v.u1)


class TestStepState:
    def test_zero_everything(self):
        pd = small_problem()
        g = pd.grid
        zero = np.zeros(g.shape)
        q = ScalarField2D(g, zero)
        y = velocity_from_stream(ScalarField2D(g, zero))
        u = VectorField2D(g, zero, zero)
        q1, om1, ps1, y1 = step_state(q, y, u, pd)
        for f in (q1.values, om1.values, ps1.values, y1.u1, y1.u2):
            assert np.all(f == 0.0)

    def test_single_mode_amplification_factor(self):
        # advection vanishes on a single mode (q is proportional to psi),
        # so the step acts diagonally: omega *= (1+a*mu)/(1+(a+nu*dt)*mu)
        pd = small_problem(n=16, m=10, T=0.5, alpha=0.4, nu=0.25)
        g = pd.grid
        psi0 = single_mode_stream(g, 1, 1, 0.02)
        mu = mode_mu(g, 1, 1)
        omega0 = mu * psi0.values
        q0 = ScalarField2D(g, (1.0 + pd.alpha * mu) * omega0)
        y0 = velocity_from_stream(psi0)
        u = VectorField2D(g, np.zeros(g.shape), np.zeros(g.shape))
        q1, om1, ps1, _ = step_state(q0, y0, u, pd)
        factor = (1.0 + pd.alpha * mu) / (1.0 + (pd.alpha + pd.nu * pd.dt) * mu)
        assert np.abs(om1.values - factor * omega0).max() < 1e-13 * np.abs(omega0).max()
        assert np.abs(q1.values - (1.0 + pd.alpha * mu) * om1.values).max() < 1e-13
        assert np.abs(ps1.values - om1.values / mu).max() < 1e-13

    def test_linear_in_control_at_zero_state(self):
        pd = small_problem()
        g = pd.grid
        zero = np.zeros(g.shape)
        q = ScalarField2D(g, zero)
        y = velocity_from_stream(ScalarField2D(g, zero))
        u = smooth_raw_field(g, 7)
        _, om1, _, _ = step_state(q, y, u, pd)
        u2 = VectorField2D(g, 2.0 * u.u1, 2.0 * u.u2)
        _, om2, _, _ = step_state(q, y, u2, pd)
        scale = np.abs(om1.values).max()
        assert np.abs(om2.values - 2.0 * om1.values).max() < 1e-12 * scale

    def test_input_checks(self):
        pd = small_problem()
        other = Grid(9)
        zero9 = np.zeros(other.shape)
        q = ScalarField2D(other, zero9)
        y = velocity_from_stream(ScalarField2D(other, zero9))
        u = VectorField2D(other, zero9, zero9)
        with pytest.raises(GridMismatchError):
            step_state(q, y, u, pd)
        g = pd.grid
        zero = np.zeros(g.shape)
        bare = VectorField2D(g, zero, zero)  # no stream attached
        with pytest.raises(ValueError, match="stream"):
            step_state(ScalarField2D(g, zero), bare, VectorField2D(g, zero, zero), pd)


class TestSolveState:
    def test_zero_data_zero_trajectory(self):
        g = Grid(12)
        y0 = velocity_from_stream(ScalarField2D(g, np.zeros(g.shape)))
        pd = ProblemData(alpha=0.5, nu=0.1, T=1.0, grid=g, m_steps=6, y0=y0)
        sol = solve_state(None, pd)
        assert np.all(sol.y == 0.0) and np.all(sol.q == 0.0)
        assert np.all(sol.norms_h3 == 0.0)

    def test_control_alignment_checked(self):
        pd = small_problem(m=5)
        with pytest.raises(ValueError):
            solve_state(Trajectory.zeros(pd.grid, 6, pd.dt, "control"), pd)
        with pytest.raises(GridMismatchError):
            solve_state(Trajectory.zeros(Grid(9), 5, pd.dt, "control"), pd)

    def test_single_mode_decay_law_and_first_order(self):
        # semi-discrete law: omega(T) = omega0 * exp(-mu nu T / (1 + alpha mu));
        # the backward-Euler-in-time error is first order, so it halves with dt
        g = Grid(31)
        psi0 = single_mode_stream(g, 1, 1, 0.01)
        y0 = velocity_from_stream(psi0)
        mu = mode_mu(g, 1, 1)
        nu, T, alpha = 0.5, 0.5, 0.2
        law = np.exp(-mu * nu * T / (1.0 + alpha * mu))
        errs = []
        for m in (100, 200):
            pd = ProblemData(alpha=alpha, nu=nu, T=T, grid=g, m_steps=m, y0=y0)
            sol = solve_state(None, pd)
            got = np.abs(sol.omega[-1]).max() / np.abs(sol.omega[0]).max()
            errs.append(abs(got - law) / law)
        assert errs[0] < 0.01
        assert 0.4 < errs[1] / errs[0] < 0.6

    def test_norms_recorded(self):
        pd = small_problem(m=4)
        sol = solve_state(None, pd)
        assert sol.norms_h1.shape == (5,) and sol.norms_h3.shape == (5,)
        assert sol.norms_h1[0] == pytest.approx(norm_hk(pd.y0, 1), rel=1e-13)
        assert np.all(sol.norms_h1 <= sol.norms_h3 + 1e-15)

    def test_velocity_accessors_agree(self):
        pd = small_problem(m=4)
        sol = solve_state(smooth_control(pd, 2), pd)
        vf = sol.velocity_field(3)
        sl = sol.velocity.slice(3)
        assert np.abs(vf.u1 - sl.u1).max() == 0.0
        assert vf.stream is not None

    def test_weak_form_residual(self):
        # the step rearranges to (q1-q0)/dt + J(q0,psi0) - nu*lap(om1) - curl u = 0;
        # pair the assembled residual against 20 random unit test fields
        pd = small_problem(n=16, m=5)
        u = smooth_control(pd, 11)
        sol = solve_state(u, pd)
        g, h, dt = pd.grid, pd.grid.h, pd.dt
        rng = np.random.default_rng(0)
        worst = 0.0
        for k in range(pd.m_steps):
            curl_u = d1c(u.data[k + 1, 1], h) - d2c(u.data[k + 1, 0], h)
            resid = (
                (sol.q[k + 1] - sol.q[k]) / dt
                - pd.nu * lap5(sol.omega[k + 1], h)
                - curl_u
                + arakawa(sol.q[k], sol.psi[k], h)
            )
            for _ in range(20):
                phi = rng.standard_normal(g.shape)
                phi /= np.sqrt(h * h * np.sum(phi * phi))
                worst = max(worst, abs(h * h * np.sum(resid * phi)))
        assert worst < 1e-9

    def test_energy_nonincreasing_diffusive_regime(self):
        rng = np.random.default_rng(9)
        g = Grid(20)
        y0 = velocity_from_stream(stream_from_coeffs(g, 0.01 * rng.standard_normal((3, 3))))
        pd = ProblemData(alpha=0.2, nu=1.0, T=0.5, grid=g, m_steps=40, y0=y0)
        sol = solve_state(None, pd)
        values = [norm_V(sol.velocity.slice(k), pd.alpha) for k in range(pd.m_steps + 1)]
        for a, b in zip(values, values[1:]):
            assert b <= a * (1.0 + 1e-10)
        assert values[-1] < 0.5 * values[0]

    def test_blow_up_reported_with_step(self):
        g = Grid(16)
        y0 = velocity_from_stream(single_mode_stream(g, 2, 2, 5.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # deliberately CFL-violating
            pd = ProblemData(alpha=0.05, nu=1e-6, T=4.0, grid=g, m_steps=40, y0=y0)
        with pytest.raises(BlowUpError, match="blew up at step") as exc:
            solve_state(None, pd)
        assert 1 <= exc.value.step <= 40

    def test_h3_a_priori_bound_advisory(self):
        # max_t |y|_H3^2 <= (C1 lambda1 / alpha)^2; with unit constants and a
        # decaying run the bound holds with a wide margin
        rng = np.random.default_rng(9)
        g = Grid(20)
        y0 = velocity_from_stream(stream_from_coeffs(g, 0.01 * rng.standard_normal((3, 3))))
        pd = ProblemData(alpha=0.2, nu=1.0, T=0.5, grid=g, m_steps=40, y0=y0)
        sol = solve_state(None, pd)
        ci = CertificateInputs.from_problem(pd, DomainConstants(), u=pd.zero_control(), u_norm_source="actual")
        chk = check_state_bound(sol, ci)
        assert chk.lhs == pytest.approx(float(np.max(sol.norms_h3)) ** 2, rel=1e-14)
        assert chk.holds


class TestTrilinearForm:
    def test_zero_arguments(self):
        g = Grid(9)
        z = smooth_raw_field(g, 1)
        zero = VectorField2D(g, np.zeros(g.shape), np.zeros(g.shape))
        assert trilinear_b(zero, z, z) == 0.0
        assert trilinear_b(z, zero, z) == 0.0
        assert trilinear_b(z, z, zero) == 0.0

    def test_antisymmetry_refines(self):
        # b(phi,z,zt) = -b(phi,zt,z) for div-free phi with zero normal trace;
        # the quadrature residual shrinks under two mesh halvings
        rng = np.random.default_rng(77)
        cphi = rng.standard_normal((3, 3))
        errs = []
        for n in (15, 31, 63):
            g = Grid(n)
            phi = velocity_from_stream(windowed_stream(g, cphi, 2))
            z, zt = smooth_raw_field(g, 1), smooth_raw_field(g, 2)
            b1, b2 = trilinear_b(phi, z, zt), trilinear_b(phi, zt, z)
            errs.append(abs(b1 + b2) / (abs(b1) + abs(b2)))
        assert errs[1] < 0.4 * errs[0]
        assert errs[2] < 0.4 * errs[1]

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            trilinear_b(smooth_raw_field(Grid(8), 1), smooth_raw_field(Grid(8), 2), smooth_raw_field(Grid(9), 3))


class TestNonlinearTerm:
    def test_zero_field(self):
        g = Grid(9)
        zero = VectorField2D(g, np.zeros(g.shape), np.zeros(g.shape))
        phi = smooth_raw_field(g, 4)
        assert nonlinear_term(zero, phi, 0.5) == 0.0

    def test_self_pairing_vanishes(self):
        # (curl upsilon(z) x z, z): the cross product z x z cancels pointwise,
        # so the discrete value is exactly zero, not just O(h^2)
        g = Grid(15)
        rng = np.random.default_rng(21)
        z = velocity_from_stream(stream_from_coeffs(g, rng.standard_normal((3, 3))))
        assert nonlinear_term(z, z, 0.4) == 0.0

    def test_transport_identity_refines(self):
        # (curl upsilon(y) x z, phi) = b(phi,z,upsilon(y)) - b(z,phi,upsilon(y)):
        # exact in the continuum; the two discrete routes agree to O(h^2) when
        # the vorticity of y vanishes at the walls (cubic window)
        rng = np.random.default_rng(77)
        cy, cz, cphi = rng.standard_normal((3, 3, 3))
        alpha = 0.4
        errs = []
        for n in (31, 63):
            g = Grid(n)
            y = velocity_from_stream(windowed_stream(g, cy, 3))
            z = velocity_from_stream(windowed_stream(g, cz, 2))
            phi = velocity_from_stream(windowed_stream(g, cphi, 2))
            uy = apply_upsilon(y, alpha)
            lhs = cross_quadrature(curl_upsilon(y, alpha), z, phi)
            rhs = trilinear_b(phi, z, uy) - trilinear_b(z, phi, uy)
            errs.append(abs(lhs - rhs) / abs(lhs))
        assert errs[0] < 0.02
        assert errs[1] < 0.4 * errs[0]

    def test_upsilon_operators_consistent(self):
        # curl_upsilon is (I - alpha lap) curl2d; on a single sine mode the
        # wide curl reduces to the wide Laplacian away from the wall ring
        g = Grid(17)
        z = velocity_from_stream(single_mode_stream(g, 2, 1, 0.5))
        w = curl_upsilon(z, 0.0)
        from sgf2d.grid import curl2d

        assert np.abs(w.values - curl2d(z).values).max() == 0.0
        uz = apply_upsilon(z, 0.0)
        assert np.abs(uz.u1 - z.u1).max() == 0.0
