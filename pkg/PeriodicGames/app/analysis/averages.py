import logging
from typing import Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from app.core.errors import ShapeError
from app.core.state import split_flat
from app.dynamics.regularizers import Regularizer, conjugate, regularizer_value
from app.games.models import PolymatrixGame
from app.integrate.integrator import Trajectory

logger = logging.getLogger("Averages")


def time_average(traj: Trajectory) -> np.ndarray:
    """各坐标的梯形积分除以经过的时间"""
    if len(traj) < 2:
        raise ValueError("时间平均至少需要 2 个样本")
    return trapezoid(traj.states, traj.times, axis=0) / (traj.t1 - traj.t0)


def _running_average(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    integral = cumulative_trapezoid(values, times, initial=0.0)
    elapsed = times - times[0]
    out = np.empty_like(values)
    out[0] = values[0]
    out[1:] = integral[1:] / elapsed[1:]
    return out


def utility_series(game: PolymatrixGame, traj: Trajectory, player: int,
                   reg: Regularizer = Regularizer.ENTROPIC) -> np.ndarray:
    """u_i(x(τ), τ) 在每个样本上的取值"""
    if not 0 <= player < game.num_players:
        raise ShapeError(f"玩家 {player} 不存在（共 {game.num_players} 名玩家）")
    strategies = traj.to_strategies(reg)
    u = np.empty(len(traj))
    for k, (t, s) in enumerate(zip(strategies.times, strategies.states)):
        x = split_flat(s, game.actions)
        u[k] = float(game.neighbor_payoff(player, t, x) @ x[player])
    return u


def time_average_utility(game: PolymatrixGame, traj: Trajectory, player: int,
                         reg: Regularizer = Regularizer.ENTROPIC) -> np.ndarray:
    """(1/t)∫ u_i(x(τ), τ)dτ 的时间序列，第一个样本取 u_i(x(t0), t0)"""
    return _running_average(utility_series(game, traj, player, reg), traj.times)


def regret_bound(reg: Regularizer, y0) -> float:
    """max_α [h*(y0) - y0_α + h(e_α)]，y0 = 0 时等于 h_max - h_min"""
    y0 = np.asarray(y0, dtype=float)
    vertex_value = regularizer_value(reg, np.eye(1, y0.size, 0).ravel())
    return conjugate(reg, y0) - float(y0.min()) + vertex_value


def regret(game: PolymatrixGame, traj: Trajectory, player: int,
           reg: Regularizer = Regularizer.ENTROPIC) -> Tuple[np.ndarray, np.ndarray]:
    """max_α (y_iα(t) - y_iα(t0))/t - (1/t)∫ u_i dτ，对 t > t0 的每个样本

    Returns:
        (times, regret): 不含 t0
    """
    if traj.kind != "ftrl":
        raise ValueError("遗憾需要收益空间 (ftrl) 轨迹中的累计收益 y")
    if len(traj) < 2:
        raise ValueError("遗憾至少需要 2 个样本")
    offset = int(np.cumsum([0, *game.actions])[player])
    block = traj.states[:, offset:offset + game.actions[player]]
    u = utility_series(game, traj, player, reg)
    elapsed = traj.times[1:] - traj.times[0]
    best = np.max(block[1:] - block[0], axis=1) / elapsed
    earned = cumulative_trapezoid(u, traj.times) / elapsed
    return traj.times[1:], best - earned


def half_period_symmetry_residual(traj: Trajectory, coordinate: Union[int, str]) -> float:
    """max |x(c+t) - x(c-t)|，c 为轨迹时间区间的中点

    Raises:
        ValueError: 采样网格关于中点不对称
    """
    times = traj.times
    center2 = times[0] + times[-1]
    tol = 1e-9 * max(1.0, abs(center2))
    if np.max(np.abs(times + times[::-1] - center2)) > tol:
        raise ValueError("采样网格关于 T/2 不对称")
    column = traj.column(coordinate) if isinstance(coordinate, str) else traj.states[:, coordinate]
    return float(np.max(np.abs(column - column[::-1])))
