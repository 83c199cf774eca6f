import math

import numpy as np
import pytest

from app.core.errors import DomainError, NumericError, ShapeError
from app.core.state import FtrlState, GdaState, ZState
from app.dynamics import (
    FtrlField,
    GdaField,
    ReplicatorField,
    Regularizer,
    ZField,
    choice_map,
    conjugate,
    ftrl_field,
    gda_field,
    make_field,
    payoff_vector,
    payoffs_from_strategies,
    reduced_choice_map,
    regularizer_range,
    regularizer_value,
    replicator_field,
    z_field,
    z_from_strategies,
    z_reduce,
)
from app.dynamics.regularizers import project_simplex
from app.games import MATCHING_PENNIES, Modulation, PayoffSchedule, dummy_player_game, prop2_game
from app.games.builders import TWO_PI, two_player_game, uniform_equilibrium


class TestChoiceMap:
    def test_entropic(self):
        assert choice_map(Regularizer.ENTROPIC, [0.0, 0.0]) == pytest.approx([0.5, 0.5])
        assert choice_map(Regularizer.ENTROPIC, [math.log(3.0), 0.0]) == pytest.approx([0.75, 0.25])

    def test_entropic_large_payoffs(self):
        x = choice_map(Regularizer.ENTROPIC, [1000.0, 0.0])
        assert np.all(np.isfinite(x))
        assert x == pytest.approx([1.0, 0.0])

    def test_euclidean_projection(self):
        assert choice_map(Regularizer.EUCLIDEAN, [2.0, 0.0]) == pytest.approx([1.0, 0.0])
        assert choice_map(Regularizer.EUCLIDEAN, [0.3, 0.1]) == pytest.approx([0.6, 0.4])

    @pytest.mark.parametrize("reg", list(Regularizer))
    def test_shift_invariance(self, reg, rng):
        for _ in range(10):
            y = rng.normal(size=4)
            c = rng.normal() * 10
            assert np.allclose(choice_map(reg, y + c), choice_map(reg, y), atol=1e-12)

    def test_projection_against_brute_force(self, rng):
        # 在单纯形的细网格上找最近点
        grid = [np.array([a, b, 1.0 - a - b]) for a in np.linspace(0, 1, 201) for b in np.linspace(0, 1, 201)
                if a + b <= 1.0 + 1e-12]
        for _ in range(3):
            y = rng.normal(size=3)
            best = min(grid, key=lambda x: float(np.sum((x - y) ** 2)))
            assert np.allclose(project_simplex(y), best, atol=1e-2)

    def test_nan_input(self):
        with pytest.raises(NumericError):
            choice_map(Regularizer.ENTROPIC, [float("nan"), 0.0])


class TestRegularizers:
    def test_conjugate(self):
        assert conjugate(Regularizer.ENTROPIC, [0.0, 0.0]) == pytest.approx(math.log(2.0))
        assert conjugate(Regularizer.EUCLIDEAN, [0.0, 0.0]) == pytest.approx(-0.25)

    def test_fenchel_young_equality(self, rng):
        for reg in Regularizer:
            y = rng.normal(size=3)
            x = choice_map(reg, y)
            assert conjugate(reg, y) == pytest.approx(float(x @ y) - regularizer_value(reg, x), abs=1e-12)

    def test_range(self):
        assert regularizer_range(Regularizer.ENTROPIC, 2) == pytest.approx((-math.log(2.0), 0.0))
        assert regularizer_range(Regularizer.EUCLIDEAN, 2) == pytest.approx((0.25, 0.5))
        with pytest.raises(DomainError):
            regularizer_range(Regularizer.ENTROPIC, 0)


class TestFields:
    def test_payoff_vector(self, sin_mp):
        schedule = PayoffSchedule.single(MATCHING_PENNIES, Modulation.constant(1.0), TWO_PI)
        game = two_player_game(schedule, uniform_equilibrium(MATCHING_PENNIES))
        x = [np.array([0.5, 0.5]), np.array([0.75, 0.25])]
        assert payoff_vector(game, 0, 0.3, x) == pytest.approx([0.5, -0.5])
        assert payoff_vector(sin_mp, 1, 0.3, [np.array([0.5, 0.5]), np.array([0.75, 0.25])]) == pytest.approx([0.0, 0.0])
        with pytest.raises(ShapeError):
            payoff_vector(game, 2, 0.3, x)

    def test_gda_field(self):
        game = prop2_game()
        ds = gda_field(game, 0.5, GdaState([1.0], [0.0]))
        assert ds.x1 == pytest.approx([0.0])
        assert ds.x2 == pytest.approx([1.0])
        with pytest.raises(ShapeError):
            gda_field(game, 0.5, GdaState([1.0, 0.0], [0.0]))

    def test_gda_field_flat_matches_functional(self, rng):
        game = prop2_game()
        field = GdaField(game)
        s = rng.normal(size=2)
        assert field(4.0, s) == pytest.approx(gda_field(game, 4.0, field.unpack(s)).flatten())

    def test_dummy_player_is_frozen(self):
        field = GdaField(dummy_player_game(), fixed_x2=[1.0])
        assert field(0.5, np.array([0.0, 1.0])) == pytest.approx([1.0, 0.0])
        assert field(2.0, np.array([0.0, 1.0])) == pytest.approx([-1.0, 0.0])

    def test_replicator_stays_on_simplex(self, rng, sin_mp):
        x = [rng.dirichlet(np.ones(2)) for _ in range(2)]
        for dx in replicator_field(sin_mp, 1.0, x):
            assert dx.sum() == pytest.approx(0.0, abs=1e-12)

    def test_ftrl_field_is_payoff_vector(self, sin_mp):
        s = FtrlState((np.array([math.log(3.0), 0.0]), np.zeros(2)))
        dy = ftrl_field(sin_mp, math.pi / 2, s)
        x1 = np.array([0.75, 0.25])
        # v_1 = A x_2 = 0，v_2 = -A^T x_1
        assert dy.y[0] == pytest.approx([0.0, 0.0])
        assert dy.y[1] == pytest.approx(-np.array([[1.0, -1.0], [-1.0, 1.0]]).T @ x1)

    def test_z_reduction(self, rng):
        y = FtrlState((rng.normal(size=3), rng.normal(size=2)))
        z = z_reduce(y)
        assert z.benchmarks == (2, 1)
        assert z.z[0] == pytest.approx(y.y[0][:2] - y.y[0][2])
        for reg in Regularizer:
            for zi, yi, beta in zip(z.z, y.y, z.benchmarks):
                assert reduced_choice_map(reg, zi, beta) == pytest.approx(choice_map(reg, yi))

    def test_z_field_matches_ftrl_field(self, rng, sin_mp):
        y = FtrlState((rng.normal(size=2), rng.normal(size=2)))
        z = z_reduce(y, (0, 0))
        dy = ftrl_field(sin_mp, 0.7, y)
        dz = z_field(sin_mp, 0.7, z)
        for dyi, dzi in zip(dy.y, dz.z):
            assert dzi == pytest.approx([dyi[1] - dyi[0]])

    def test_z_from_strategies(self):
        z = z_from_strategies([np.array([0.75, 0.25]), np.array([0.5, 0.5])], (1, 1))
        assert isinstance(z, ZState)
        assert z.z[0] == pytest.approx([math.log(3.0)])
        assert z.z[1] == pytest.approx([0.0])

    def test_payoffs_from_strategies(self):
        x = [np.array([0.7, 0.3]), np.array([0.4, 0.6])]
        for reg in Regularizer:
            y = payoffs_from_strategies(reg, x)
            for xi, yi in zip(x, y.y):
                assert choice_map(reg, yi) == pytest.approx(xi)
        with pytest.raises(DomainError):
            payoffs_from_strategies(Regularizer.ENTROPIC, [np.array([1.0, 0.0])])


class TestVectorFields:
    def test_labels(self, sin_mp):
        assert GdaField(prop2_game()).labels == ["x0_0", "x1_0"]
        assert FtrlField(sin_mp).labels == ["y0_0", "y0_1", "y1_0", "y1_1"]
        assert ReplicatorField(sin_mp).labels == ["x0_0", "x0_1", "x1_0", "x1_1"]
        assert ZField(sin_mp).labels == ["z0_0", "z1_0"]

    def test_z_field_strategies(self, sin_mp):
        field = ZField(sin_mp)
        x = field.strategies(np.array([math.log(3.0), 0.0]))
        assert x[0] == pytest.approx([0.75, 0.25])
        assert x[1] == pytest.approx([0.5, 0.5])

    def test_make_field(self, sin_mp):
        assert make_field(sin_mp, "ftrl", Regularizer.EUCLIDEAN).reg is Regularizer.EUCLIDEAN
        assert make_field(sin_mp, "z").kind == "z"
        with pytest.raises(ValueError):
            make_field(sin_mp, "gda")
        with pytest.raises(ValueError):
            make_field(prop2_game(), "replicator")
        with pytest.raises(ValueError):
            make_field(sin_mp, "hedge")

    def test_breakpoints_are_forwarded(self):
        field = GdaField(prop2_game())
        assert field.breakpoints(0.0, 3 * math.pi) == pytest.approx([math.pi, 1.5 * math.pi])
