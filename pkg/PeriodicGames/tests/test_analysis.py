import math

import numpy as np
import pytest

from app.analysis import (
    coupling_functional,
    divergence_trace,
    fenchel_coupling,
    gda_energy,
    half_period_symmetry_residual,
    invariant_drift,
    kl_divergence,
    kl_sum,
    min_distance_after,
    recurrence_scan,
    regret,
    regret_bound,
    sup_distances,
    time_average,
    time_average_utility,
    volume_ratio,
)
from app.core.errors import DomainError, ShapeError
from app.dynamics import FtrlField, GdaField, ReplicatorField, Regularizer, ZField, payoffs_from_strategies
from app.games import (
    MATCHING_PENNIES,
    Modulation,
    PayoffSchedule,
    fig1_gda_game,
    prop2_game,
    shifting_equilibrium_game,
)
from app.games.builders import TWO_PI, two_player_game, uniform_equilibrium
from app.integrate import IntegratorConfig, Trajectory, integrate

X0 = [np.array([0.7, 0.3]), np.array([0.4, 0.6])]


def circle_trajectory(period=3.0, horizon=10.0, spacing=0.1):
    times = np.arange(int(round(horizon / spacing)) + 1) * spacing
    angle = TWO_PI * times / period
    return Trajectory(times, np.column_stack([np.cos(angle), np.sin(angle)]), ("x0_0", "x1_0"), "gda")


class TestInvariants:
    def test_gda_energy_is_conserved(self):
        traj = integrate(GdaField(fig1_gda_game()), np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 5 * TWO_PI)
        report = invariant_drift(traj, gda_energy, "gda_energy")
        assert report.initial == pytest.approx(0.5)
        assert report.max_rel_drift <= 1e-6

    def test_fenchel_coupling_equals_kl(self, rng, sin_mp):
        for _ in range(100):
            x = [rng.dirichlet(np.ones(2)) for _ in range(2)]
            y = [np.log(xi) + rng.normal() for xi in x]
            assert fenchel_coupling(sin_mp, Regularizer.ENTROPIC, y) == pytest.approx(kl_sum(sin_mp, x), abs=1e-10)

    @pytest.mark.parametrize("reg", list(Regularizer))
    def test_fenchel_coupling_is_conserved(self, reg, sin_mp):
        field = FtrlField(sin_mp, reg)
        traj = integrate(field, payoffs_from_strategies(reg, X0).flatten(), 0.0, 5 * TWO_PI)
        report = invariant_drift(traj, coupling_functional(sin_mp, reg, "ftrl"), "fenchel_coupling")
        assert report.max_rel_drift <= 1e-5

    def test_kl_sum_is_conserved_on_chain(self, toroid4):
        x0 = [np.array([p, 1.0 - p]) for p in (0.3, 0.6, 0.75, 0.45)]
        traj = integrate(ReplicatorField(toroid4), x0, 0.0, 5 * TWO_PI)
        report = invariant_drift(traj, coupling_functional(toroid4, Regularizer.ENTROPIC, "replicator"), "kl_sum")
        assert report.max_rel_drift <= 1e-5

    def test_z_functional_matches_ftrl_functional(self, rng, sin_mp):
        field = ZField(sin_mp)
        y = rng.normal(size=4)
        z = np.array([y[0] - y[1], y[2] - y[3]])
        for reg in Regularizer:
            on_y = coupling_functional(sin_mp, reg, "ftrl")(y)
            on_z = coupling_functional(sin_mp, reg, "z", field.benchmarks)(z)
            assert on_z == pytest.approx(on_y, abs=1e-12)

    def test_coupling_needs_equilibrium(self):
        with pytest.raises(DomainError):
            fenchel_coupling(shifting_equilibrium_game(), Regularizer.ENTROPIC, [np.zeros(2), np.zeros(2)])

    def test_replicator_needs_entropic(self, sin_mp):
        with pytest.raises(ValueError):
            coupling_functional(sin_mp, Regularizer.EUCLIDEAN, "replicator")

    def test_kl_divergence(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))
        with pytest.raises(DomainError):
            kl_divergence([0.5, 0.5], [1.0, 0.0])
        with pytest.raises(ShapeError):
            kl_divergence([1.0], [0.5, 0.5])

    def test_drift_of_zero_initial_value_is_absolute(self):
        traj = Trajectory(np.array([0.0, 1.0, 2.0]), np.array([[0.0], [0.1], [-0.3]]), ("x0_0",))
        report = invariant_drift(traj, lambda s: float(s[0]), "first")
        assert report.max_abs_drift == pytest.approx(0.3)
        assert report.max_rel_drift == pytest.approx(0.3)


class TestRecurrence:
    def test_returns_of_a_rotation(self):
        traj = circle_trajectory()
        events = recurrence_scan(traj, traj.initial, 0.05, exclude_until=1.0)
        assert [e.t_return for e in events] == pytest.approx([3.0, 6.0, 9.0])
        assert all(e.distance < 1e-9 for e in events)

    def test_no_return_inside_exclusion(self):
        traj = circle_trajectory()
        events = recurrence_scan(traj, traj.initial, 0.05, exclude_until=9.5)
        assert events == []
        assert min_distance_after(traj, traj.initial, 9.5) > 0.05

    def test_coordinate_subset(self):
        traj = circle_trajectory()
        d = sup_distances(traj, traj.initial, coords=["x0_0"])
        assert d == pytest.approx(np.abs(traj.column("x0_0") - 1.0))
        events = recurrence_scan(traj, [1.0], 0.05, exclude_until=1.0, coords=[0])
        assert len(events) == 3

    def test_invalid_arguments(self):
        traj = circle_trajectory()
        with pytest.raises(ValueError):
            recurrence_scan(traj, traj.initial, 0.0, exclude_until=1.0)
        with pytest.raises(ValueError):
            recurrence_scan(traj, traj.initial, 0.1, exclude_until=0.0)
        with pytest.raises(ShapeError):
            recurrence_scan(traj, [1.0, 0.0, 0.0], 0.1, exclude_until=1.0)


class TestAverages:
    def test_gda_time_average_is_not_the_equilibrium(self):
        traj = integrate(GdaField(prop2_game()), np.array([1.0, 0.0]), 0.0, 3 * math.pi, IntegratorConfig(step=1e-3))
        expected = np.array([-2.0, 2.0]) / (3 * math.pi)
        assert time_average(traj) == pytest.approx(expected, abs=1e-4)

    def test_time_average_utility_vanishes(self, sin_mp):
        traj = integrate(ReplicatorField(sin_mp), X0, 0.0, 20 * TWO_PI)
        u0 = time_average_utility(sin_mp, traj, 0)
        u1 = time_average_utility(sin_mp, traj, 1)
        assert np.max(np.abs(u0 + u1)) <= 1e-12
        assert abs(u0[-1]) <= 1e-2

    @pytest.mark.parametrize("reg", list(Regularizer))
    def test_regret_bound(self, reg, sin_mp):
        y0 = np.array([0.0, 0.0, 0.4, 0.0])
        traj = integrate(FtrlField(sin_mp, reg), y0, 0.0, 100.0, IntegratorConfig(step=5e-3))
        for player, start in ((0, y0[:2]), (1, y0[2:])):
            times, values = regret(sin_mp, traj, player, reg)
            mask = times >= 1.0
            bound = regret_bound(reg, start) / times[mask]
            assert np.all(values[mask] <= bound + 1e-9)

    def test_regret_bound_values(self):
        assert regret_bound(Regularizer.ENTROPIC, np.zeros(2)) == pytest.approx(math.log(2.0))
        assert regret_bound(Regularizer.EUCLIDEAN, np.zeros(2)) == pytest.approx(0.25)

    def test_regret_needs_payoff_trajectory(self, sin_mp):
        traj = integrate(ReplicatorField(sin_mp), X0, 0.0, 1.0)
        with pytest.raises(ValueError):
            regret(sin_mp, traj, 0)

    def test_half_period_symmetry(self, sin_mp):
        traj = integrate(ReplicatorField(sin_mp), X0, 0.0, TWO_PI)
        assert half_period_symmetry_residual(traj, "x0_0") <= 1e-6
        uneven = Trajectory(np.array([0.0, 0.3, 1.0]), np.zeros((3, 1)), ("x0_0",))
        with pytest.raises(ValueError):
            half_period_symmetry_residual(uneven, "x0_0")

    def test_shifted_modulation_breaks_symmetry(self):
        schedule = PayoffSchedule.single(MATCHING_PENNIES, Modulation.sine(1.0, 1.0, 0.7), TWO_PI)
        game = two_player_game(schedule, uniform_equilibrium(MATCHING_PENNIES))
        traj = integrate(ReplicatorField(game), X0, 0.0, TWO_PI)
        assert half_period_symmetry_residual(traj, 0) > 1e-3


class TestVolume:
    def test_gda_divergence_vanishes(self, rng):
        field = GdaField(fig1_gda_game())
        for t in rng.uniform(0.0, TWO_PI, 20):
            assert abs(divergence_trace(field, t, rng.normal(size=4))) <= 1e-6

    def test_z_divergence_vanishes(self, rng, toroid4):
        field = ZField(toroid4)
        for t in rng.uniform(0.0, TWO_PI, 20):
            assert abs(divergence_trace(field, t, rng.normal(size=field.dim))) <= 1e-6

    def test_replicator_divergence_in_strategy_space(self):
        # 两名玩家的迹合计为 m(t)·(q - p)，不为零
        base = np.array([[2.0, 0.0], [0.0, 1.0]])
        game = two_player_game(PayoffSchedule.single(base, Modulation.sine(1.0, 1.0, 0.0), TWO_PI))
        field = ReplicatorField(game)
        x = [np.array([0.7, 0.3]), np.array([0.4, 0.6])]
        assert divergence_trace(field, math.pi / 2, x) == pytest.approx(-0.3, abs=1e-6)

    def test_period_map_preserves_volume(self, sin_mp):
        gda = GdaField(prop2_game())
        assert volume_ratio(gda, 3 * math.pi, np.array([1.0, 0.0]), 1e-4, IntegratorConfig(step=1e-3)) == \
            pytest.approx(1.0, abs=1e-5)
        z = ZField(sin_mp)
        assert volume_ratio(z, TWO_PI, np.array([0.8, -0.4])) == pytest.approx(1.0, abs=1e-4)
