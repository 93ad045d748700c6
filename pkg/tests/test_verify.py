import numpy as np
import pytest

from orbits.errors import InvalidInputError, NearCollisionError, SingularLoopError
from orbits.fields import make_preset
from orbits.loops import ANTIPERIODIC, PERIODIC, from_function, make_loop, perturb
from orbits.reparam import sigma_map, time_map
from orbits.solver import SolveOptions, solve_critical
from orbits.verify import (Thresholds, beta_mu, collision_times, energy_along, integrate_ode,
                           mu_from_collisions, ode_residual, shooting_gap, verify_solution,
                           winding_mod2)

from .conftest import A_COL, R_CIRC, nonvanishing_loop

KEPLER = make_preset("kepler")


def q_circle(r, n=128):
    return from_function(lambda t: r * np.exp(2j * np.pi * t), n, PERIODIC)


def z_collision(n=128):
    return from_function(lambda t: A_COL * np.cos(np.pi * t), n, ANTIPERIODIC)


class TestOdeResidual:
    def test_kepler_circle(self):
        assert ode_residual(q_circle(R_CIRC), KEPLER) < 1e-8

    def test_rotating_circle(self):
        om = 0.6
        r = (2 * np.pi + om) ** (-2 / 3)
        m = make_preset("rotating_kepler", {"omega": om})
        assert ode_residual(q_circle(r), m) < 1e-8
        # the retrograde balance belongs to the reversed circle, not this one
        assert ode_residual(q_circle((2 * np.pi - om) ** (-2 / 3)), m) > 1.0

    def test_collision_orbit_with_window(self):
        z = z_collision()
        tc = collision_times(z)
        assert tc == pytest.approx([0.5], abs=1e-12)
        q = sigma_map(z)
        assert ode_residual(q, KEPLER, exclusion=tc, source=z) < 1e-5
        # the source's collisions are excluded automatically
        assert ode_residual(q, KEPLER, source=z) < 1e-5

    def test_singular_outside_windows(self):
        z = z_collision()
        with pytest.raises(SingularLoopError):
            ode_residual(sigma_map(z), KEPLER)

    def test_twisted_q_rejected(self):
        with pytest.raises(InvalidInputError):
            ode_residual(z_collision(), KEPLER)

    def test_non_solution_is_flagged(self):
        assert ode_residual(q_circle(2.0), KEPLER) > 1.0


class TestBetaMu:
    def test_circle(self):
        fit = beta_mu(q_circle(R_CIRC), KEPLER)
        assert fit.mu_fit == pytest.approx(-1.0, abs=1e-7)
        assert np.allclose(fit.beta.samples, -1 / R_CIRC ** 3, atol=1e-7)
        assert fit.imag_defect < 1e-8

    def test_non_critical_circle(self):
        # q = 2 e^{2 pi i t}: beta = -4 pi^2, so beta |q|^3 = -32 pi^2 (constant, but far from -1)
        fit = beta_mu(q_circle(2.0), KEPLER)
        assert fit.mu_fit == pytest.approx(-32 * np.pi ** 2, rel=1e-12)
        assert abs(fit.mu_fit + 1) > 100

    def test_non_solution_fit_defect(self):
        q = make_loop(q_circle(0.5).samples * (1 + 0.1 * np.cos(2 * np.pi * q_circle(0.5).nodes)))
        fit = beta_mu(q, KEPLER)
        assert fit.fit_defect > 1.0

    def test_singular(self):
        with pytest.raises(SingularLoopError):
            beta_mu(sigma_map(z_collision()), KEPLER)

    def test_converged_solution_imag_defect(self):
        m = make_preset("forced_stark", {"f": 0.2, "f_im": 0.1})
        seed = from_function(lambda t: np.sqrt(R_CIRC) * np.exp(1j * np.pi * t), 128, ANTIPERIODIC)
        z, rep = solve_critical(seed, m)
        assert rep.converged
        fit = beta_mu(sigma_map(z), m, source=z)
        assert fit.imag_defect < 1e-8
        assert fit.mu_fit == pytest.approx(-1.0, abs=1e-6)


class TestMuFromCollisions:
    def test_cosine(self):
        assert mu_from_collisions(z_collision()) == pytest.approx([-1.0], abs=1e-9)

    def test_collision_free(self):
        z = from_function(lambda t: np.exp(1j * np.pi * t), 16, ANTIPERIODIC)
        assert mu_from_collisions(z) == []

    def test_pairwise_equal_on_solutions(self):
        m = make_preset("forced_stark", {"f": 0.5})
        a = (1 / (2 * np.pi ** 2)) ** (1 / 6)
        seed = perturb(from_function(lambda t: a * np.cos(2 * np.pi * t), 128, PERIODIC),
                       np.random.default_rng(0), 0.03)
        z, rep = solve_critical(seed, m, SolveOptions(parity=PERIODIC, newton_switch_tol=1e6))
        assert rep.converged
        mus = mu_from_collisions(z)
        assert len(mus) == 2
        assert abs(mus[0] - mus[1]) < 1e-7
        assert mus == pytest.approx([-1, -1], abs=1e-6)


class TestIntegrate:
    def test_circle_gap(self):
        r = R_CIRC
        traj = integrate_ode(r, 2j * np.pi * r, KEPLER, 1.0)
        q1, v1 = traj.end
        assert abs(q1 - r) + abs(v1 - 2j * np.pi * r) < 1e-6
        assert shooting_gap(q_circle(r), KEPLER) < 1e-6

    def test_radial_drop_aborts(self):
        with pytest.raises(NearCollisionError) as info:
            integrate_ode(1.0, 0.0, KEPLER, 2.0)
        # radial Kepler from rest at 1 reaches the origin at t = pi / (2 sqrt 2)
        assert info.value.time < np.pi / (2 * np.sqrt(2))
        assert info.value.time == pytest.approx(np.pi / (2 * np.sqrt(2)), abs=1e-3)

    def test_zero_duration(self):
        traj = integrate_ode(0.4 + 0.1j, 1j, KEPLER, 0.0)
        q, v = traj.end
        assert q == 0.4 + 0.1j and v == 1j

    def test_bad_inputs(self):
        with pytest.raises(NearCollisionError):
            integrate_ode(1e-4, 1.0, KEPLER, 1.0)
        with pytest.raises(InvalidInputError):
            integrate_ode(1.0, 1.0, KEPLER, -1.0)

    def test_max_step(self):
        traj = integrate_ode(R_CIRC, 2j * np.pi * R_CIRC, KEPLER, 0.5, h=0.01)
        assert np.max(np.diff(traj.t)) <= 0.01 + 1e-15


class TestEnergy:
    def test_circle(self):
        values, drift = energy_along(q_circle(R_CIRC), KEPLER)
        assert np.allclose(values.samples, -1 / (2 * R_CIRC), atol=1e-10)
        assert np.allclose(values.samples, 2 * np.pi ** 2 * R_CIRC ** 2 - 1 / R_CIRC, atol=1e-10)
        assert drift < 1e-9

    def test_constant_loop(self):
        c = 0.5 + 0.2j
        m = make_preset("rotating_kepler", {"omega": 1.0})
        values, drift = energy_along(make_loop(np.full(16, c)), m)
        assert np.allclose(values.samples, -1 / abs(c) - abs(c) ** 2 / 2)
        assert drift == 0

    def test_time_dependent_reports_drift(self):
        m = make_preset("forced_stark", {"f": 0.3})
        seed = from_function(lambda t: np.sqrt(R_CIRC) * np.exp(1j * np.pi * t), 128, ANTIPERIODIC)
        z, _ = solve_critical(seed, m)
        _, drift = energy_along(sigma_map(z), m, source=z)
        assert np.isfinite(drift) and drift > 0

    def test_singular(self):
        with pytest.raises(SingularLoopError):
            energy_along(sigma_map(z_collision()), KEPLER)


class TestWindingMod2:
    def test_examples(self):
        from orbits.loops import winding_number

        z = from_function(lambda t: np.exp(1j * np.pi * t), 32, ANTIPERIODIC)
        assert winding_mod2(z) == "odd" and winding_number(sigma_map(z)) == 1
        z = from_function(lambda t: np.exp(2j * np.pi * t), 32, PERIODIC)
        assert winding_mod2(z) == "even" and winding_number(sigma_map(z)) == 2
        assert winding_mod2(z_collision()) == "odd"

    @pytest.mark.parametrize("parity", [PERIODIC, ANTIPERIODIC])
    def test_agrees_with_q_winding_and_involution(self, parity):
        from orbits.loops import winding_number

        rng = np.random.default_rng(1)
        for _ in range(10):
            z = nonvanishing_loop(rng, 32, parity)
            w = int(winding_number(sigma_map(z)))
            assert winding_mod2(z) == ("odd" if w % 2 else "even")
            assert winding_mod2(-z) == winding_mod2(z)


class TestVerifySolution:
    def test_circle_passes(self):
        seed = from_function(lambda t: 1.05 * np.sqrt(R_CIRC) * np.exp(1j * np.pi * t), 128, ANTIPERIODIC)
        z, _ = solve_critical(seed, KEPLER)
        rep = verify_solution(z, KEPLER)
        assert rep.passed, rep.failures
        assert rep.energy_drift < 1e-6 and rep.shooting_gap < 1e-5
        assert rep.winding_mod2 == "odd" and rep.mu_j == []

    def test_collision_passes(self):
        rep = verify_solution(z_collision(), KEPLER)
        assert rep.passed, rep.failures
        assert rep.mu_fit is None and rep.shooting_gap is None
        assert rep.mu_j == pytest.approx([-1.0], abs=1e-9)

    def test_non_solution_fails(self):
        z = from_function(lambda t: 0.8 * np.exp(1j * np.pi * t), 64, ANTIPERIODIC)
        rep = verify_solution(z, KEPLER)
        assert not rep.passed
        assert {"ode_residual", "mu_fit", "shooting_gap"} <= set(rep.failures)

    def test_delay_and_ode_verdicts_agree(self):
        from orbits.action import delay_residual

        good = z_collision()
        bad = from_function(lambda t: 0.9 * A_COL * np.cos(np.pi * t), 128, ANTIPERIODIC)
        for z, ok in ((good, True), (bad, False)):
            delay_ok = np.abs(delay_residual(z, KEPLER).samples).max() < 1e-6
            ode_ok = verify_solution(z, KEPLER).ode_residual_sup < 1e-5
            assert delay_ok == ode_ok == ok

    def test_thresholds_respected(self):
        rep = verify_solution(z_collision(), KEPLER, Thresholds(ode_residual=1e-300))
        assert not rep.passed and rep.failures == ["ode_residual"]
        assert rep.thresholds["ode_residual"] == 1e-300

    def test_time_map_consistency(self):
        z = z_collision()
        assert time_map(z).collisions == pytest.approx((0.5,), abs=1e-12)
