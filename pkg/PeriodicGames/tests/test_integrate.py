import math

import numpy as np
import pytest

from app.core.errors import DivergenceError, DomainError, ShapeError
from app.dynamics import FtrlField, GdaField, ReplicatorField, Regularizer
from app.games import dummy_player_game, fig1_gda_game, nonperiodic_game, prop2_game
from app.games.builders import TWO_PI
from app.integrate import IntegratorConfig, Trajectory, integrate, map_jacobian_fd, poincare_map

PROP2_PERIOD = 3.0 * math.pi


class NanField(GdaField):
    def __call__(self, t, s):
        if t > 1.0:
            return np.full_like(s, np.nan)
        return super().__call__(t, s)


def terminal_error(step):
    field = GdaField(prop2_game())
    traj = integrate(field, np.array([1.0, 0.0]), 0.0, PROP2_PERIOD, IntegratorConfig(step=step))
    return float(np.max(np.abs(traj.final - np.array([1.0, 0.0]))))


class TestRk4:
    def test_rotation_matches_closed_form(self):
        # [0, π) 上 A = -1：x1' = -x2, x2' = x1
        field = GdaField(prop2_game())
        traj = integrate(field, np.array([1.0, 0.0]), 0.0, 1.0, IntegratorConfig(step=1e-3))
        assert traj.final == pytest.approx([math.cos(1.0), math.sin(1.0)], abs=1e-12)

    def test_returns_after_one_period(self):
        assert terminal_error(1e-3) <= 1e-6

    def test_fourth_order_convergence(self):
        ratio = terminal_error(0.02) / terminal_error(0.01)
        assert 12.0 < ratio < 20.0

    def test_breakpoints_are_samples(self):
        field = GdaField(prop2_game())
        traj = integrate(field, np.array([1.0, 0.0]), 0.0, 2 * PROP2_PERIOD, IntegratorConfig(step=0.1))
        for mark in (math.pi, 1.5 * math.pi, PROP2_PERIOD, PROP2_PERIOD + math.pi):
            assert np.min(np.abs(traj.times - mark)) <= 1e-12
        assert traj.t0 == 0.0
        assert traj.t1 == pytest.approx(2 * PROP2_PERIOD)

    def test_piecewise_constant_is_exact_at_breakpoints(self):
        field = GdaField(dummy_player_game(), fixed_x2=[1.0])
        traj = integrate(field, np.array([0.0, 1.0]), 0.0, 3.0, IntegratorConfig(step=0.3))
        x1 = traj.column("x0_0")
        assert x1[np.argmin(np.abs(traj.times - 1.0))] == pytest.approx(1.0, abs=1e-12)
        assert traj.final == pytest.approx([-1.0, 1.0], abs=1e-12)

    def test_sample_every(self):
        field = GdaField(prop2_game())
        dense = integrate(field, np.array([1.0, 0.0]), 0.0, PROP2_PERIOD, IntegratorConfig(step=0.01))
        sparse = integrate(field, np.array([1.0, 0.0]), 0.0, PROP2_PERIOD, IntegratorConfig(step=0.01, sample_every=10))
        assert len(sparse) < len(dense) / 5
        assert sparse.final == pytest.approx(dense.final, abs=1e-14)
        assert np.min(np.abs(sparse.times - math.pi)) <= 1e-12

    def test_rk45_agrees_with_rk4(self):
        field = GdaField(prop2_game())
        rk45 = integrate(field, np.array([1.0, 0.0]), 0.0, PROP2_PERIOD, IntegratorConfig(step=0.05, method="rk45"))
        assert rk45.final == pytest.approx([1.0, 0.0], abs=1e-7)


class TestIntegratorErrors:
    def test_divergence_reports_time(self):
        with pytest.raises(DivergenceError) as info:
            integrate(NanField(prop2_game()), np.array([1.0, 0.0]), 0.0, 2.0, IntegratorConfig(step=0.01))
        assert 1.0 < info.value.t <= 2.0

    def test_step_too_large(self):
        with pytest.raises(ValueError):
            integrate(GdaField(prop2_game()), np.array([1.0, 0.0]), 0.0, 1.0, IntegratorConfig(step=2.0))

    def test_aperiodic_needs_explicit_step(self):
        with pytest.raises(ValueError):
            integrate(GdaField(nonperiodic_game()), np.array([1.0, 0.0]), 2.0, 3.0)

    def test_aperiodic_game_from_time_zero(self):
        with pytest.raises(DomainError):
            integrate(GdaField(nonperiodic_game()), np.array([1.0, 0.0]), 0.0, 1.0, IntegratorConfig(step=0.01))

    def test_empty_interval(self):
        with pytest.raises(ValueError):
            integrate(GdaField(prop2_game()), np.array([1.0, 0.0]), 1.0, 1.0)

    def test_state_length(self):
        with pytest.raises(ShapeError):
            integrate(GdaField(prop2_game()), np.array([1.0, 0.0, 0.0]), 0.0, 1.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(step=-1.0)
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")
        with pytest.raises(ValueError):
            IntegratorConfig(sample_every=0)


class TestTrajectory:
    def test_columns_and_slice(self, sin_mp):
        traj = integrate(ReplicatorField(sin_mp), [np.array([0.7, 0.3]), np.array([0.4, 0.6])], 0.0, 2 * math.pi)
        assert traj.kind == "replicator"
        assert traj.player_sizes() == [2, 2]
        assert traj.column("x0_0") + traj.column("x0_1") == pytest.approx(np.ones(len(traj)), abs=1e-10)
        part = traj.slice(1.0, 2.0)
        assert part.t0 >= 1.0 and part.t1 <= 2.0
        with pytest.raises(KeyError):
            traj.column("y0_0")

    def test_strategy_and_z_views(self, sin_mp):
        x0 = [np.array([0.7, 0.3]), np.array([0.4, 0.6])]
        y0 = np.concatenate([np.log(xi) for xi in x0])
        ftrl = integrate(FtrlField(sin_mp), y0, 0.0, 2 * math.pi)
        replicator = integrate(ReplicatorField(sin_mp), x0, 0.0, 2 * math.pi)
        strategies = ftrl.to_strategies(Regularizer.ENTROPIC)
        assert strategies.labels == replicator.labels
        assert strategies.states == pytest.approx(replicator.states, abs=1e-8)
        z_from_y = ftrl.to_z()
        z_from_x = replicator.to_z()
        assert z_from_y.labels == ("z0_0", "z1_0")
        assert z_from_y.states == pytest.approx(z_from_x.states, abs=1e-8)
        assert z_from_y.to_strategies().states == pytest.approx(replicator.states, abs=1e-8)

    def test_gda_has_no_strategy_view(self):
        traj = integrate(GdaField(prop2_game()), np.array([1.0, 0.0]), 0.0, 1.0)
        with pytest.raises(ValueError):
            traj.to_strategies()

    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            Trajectory(np.array([0.0, 1.0]), np.zeros((2, 3)), ("a0_0", "a0_1"))
        with pytest.raises(ValueError):
            Trajectory(np.array([1.0, 0.0]), np.zeros((2, 1)), ("a0_0",))


class TestPoincare:
    def test_period_map_returns_to_start(self):
        field = GdaField(prop2_game())
        cfg = IntegratorConfig(step=1e-3)
        assert poincare_map(field, np.array([1.0, 0.0]), PROP2_PERIOD, 1, cfg) == pytest.approx([1.0, 0.0], abs=1e-6)
        assert poincare_map(field, np.array([0.3, 0.4]), PROP2_PERIOD, 2, cfg) == pytest.approx([0.3, 0.4], abs=1e-6)

    def test_invalid_arguments(self):
        field = GdaField(prop2_game())
        with pytest.raises(ValueError):
            poincare_map(field, np.array([1.0, 0.0]), PROP2_PERIOD, 0)
        with pytest.raises(ValueError):
            poincare_map(field, np.array([1.0, 0.0]), -1.0)

    def test_two_periods_compose(self):
        field = GdaField(fig1_gda_game())
        cfg = IntegratorConfig(step=1e-3 * TWO_PI)
        s = np.array([0.6, -0.2, 0.1, 0.5])
        twice = poincare_map(field, s, TWO_PI, 2, cfg)
        composed = poincare_map(field, poincare_map(field, s, TWO_PI, 1, cfg), TWO_PI, 1, cfg)
        assert twice == pytest.approx(composed, abs=1e-8)

    def test_gda_period_map_keeps_norm(self, rng):
        field = GdaField(fig1_gda_game())
        cfg = IntegratorConfig(step=1e-3 * TWO_PI)
        for _ in range(3):
            s = rng.normal(size=4)
            assert np.linalg.norm(poincare_map(field, s, TWO_PI, 1, cfg)) == \
                pytest.approx(np.linalg.norm(s), abs=1e-6)

    def test_jacobian_of_linear_map(self):
        matrix = np.array([[2.0, 1.0], [0.5, -1.0]])
        jac = map_jacobian_fd(lambda s: matrix @ s, np.array([0.3, -0.2]), 1e-4)
        assert jac == pytest.approx(matrix, abs=1e-10)
        with pytest.raises(ValueError):
            map_jacobian_fd(lambda s: s, np.zeros(2), 0.0)
