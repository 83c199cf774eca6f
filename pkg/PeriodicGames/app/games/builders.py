import logging
import math
from typing import Optional, Sequence

import numpy as np

from app.games.models import BilinearGame, Edge, PolymatrixGame
from app.games.modulation import Modulation
from app.games.schedule import PayoffSchedule, Segment

logger = logging.getLogger("GameBuilders")

# 标准 Matching Pennies 收益矩阵
MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])
# 平移均衡反例中后 3/4 周期使用的矩阵，其混合均衡为 (0.9091, 0.0909)
SHIFTED_EQUILIBRIUM_MATRIX = np.array([[0.05, -0.5], [-0.5, 5.0]])

TWO_PI = 2.0 * math.pi


def uniform_equilibrium(base: np.ndarray) -> Optional[tuple]:
    """若均匀策略是 base 的内点均衡（双方纯策略收益都为常数），返回它"""
    base = np.asarray(base, dtype=float)
    xi = np.full(base.shape[0], 1.0 / base.shape[0])
    xj = np.full(base.shape[1], 1.0 / base.shape[1])
    v_i, v_j = base @ xj, base.T @ xi
    if np.ptp(v_i) <= 1e-12 and np.ptp(v_j) <= 1e-12:
        return xi, xj
    return None


def two_player_game(schedule: PayoffSchedule, equilibrium=None, name: str = "two_player") -> PolymatrixGame:
    """由 A(t) 构造 {A(t), -A(t)^T} 两人零和多矩阵博弈"""
    edge = Edge(0, 1, schedule, schedule.negated_transpose())
    return PolymatrixGame(schedule.shape, (edge,), equilibrium, name)


def build_cycle_chain(num_players: int, modulations: Sequence[Modulation], base=MATCHING_PENNIES,
                      period: float = TWO_PI, name: str = "cycle_chain") -> PolymatrixGame:
    """构造环形链（'toroid'）多矩阵博弈：玩家 i 与 (i+1) mod N 对弈

    Args:
        num_players: 玩家数 (>= 3)
        modulations: 每条边一个调制函数
        base: 每条边的基础矩阵
        period: 所有边共享的周期

    Returns:
        PolymatrixGame: 每条边为 {m(t)·base, -m(t)·base^T}
    """
    if num_players < 3:
        raise ValueError(f"环形链至少需要 3 名玩家，收到 {num_players}")
    if len(modulations) != num_players:
        raise ValueError(f"需要 {num_players} 个调制函数（每条边一个），收到 {len(modulations)}")
    base = np.asarray(base, dtype=float)
    if base.shape[0] != base.shape[1]:
        raise ValueError("环形链要求所有玩家动作数相同，基础矩阵必须为方阵")

    edges = []
    for i, modulation in enumerate(modulations):
        forward = PayoffSchedule.single(base, modulation, period)
        edges.append(Edge(i, (i + 1) % num_players, forward, forward.negated_transpose()))

    equilibrium = None
    pair = uniform_equilibrium(base)
    if pair is not None:
        equilibrium = tuple(pair[0].copy() for _ in range(num_players))
    logger.debug(f"[Builders] 构造 {num_players} 人环形链，{len(edges)} 条边")
    return PolymatrixGame(tuple([base.shape[0]] * num_players), tuple(edges), equilibrium, name)


def fig1_schedule(base=MATCHING_PENNIES) -> PayoffSchedule:
    """周期 2π 的缩放：[0, 3π/2) 上为 sin(t)，[3π/2, 2π) 上为 (2/π)(t - 2π)"""
    return PayoffSchedule.piecewise(base, [
        (0.0, 1.5 * math.pi, Modulation.sine(1.0, 1.0, 0.0)),
        (1.5 * math.pi, TWO_PI, Modulation.linear(2.0 / math.pi, -4.0)),
    ], TWO_PI)


def fig1_gda_game() -> BilinearGame:
    return BilinearGame(fig1_schedule(), "fig1_gda_mp")


def fig1_replicator_game() -> PolymatrixGame:
    return two_player_game(fig1_schedule(), uniform_equilibrium(MATCHING_PENNIES), "fig1_mp")


def prop2_game() -> BilinearGame:
    """标量博弈，T = 3π，A(t) 在 [0,π)、[π,3π/2)、[3π/2,3π) 上分别为 -1、1、-1"""
    return BilinearGame(PayoffSchedule.piecewise([[1.0]], [
        (0.0, math.pi, Modulation.constant(-1.0)),
        (math.pi, 1.5 * math.pi, Modulation.constant(1.0)),
        (1.5 * math.pi, 3.0 * math.pi, Modulation.constant(-1.0)),
    ], 3.0 * math.pi), "tavg_gda")


def nonperiodic_game() -> BilinearGame:
    """A(t) = 1/t^2：有时间不变均衡但不是周期的"""
    return BilinearGame(PayoffSchedule.single([[1.0]], Modulation.power(1.0, -2.0), None), "cex_nonperiodic")


def dummy_player_game() -> BilinearGame:
    """T = 3，A(t) 在 [0,1) 上为 1、[1,3) 上为 -1：周期但没有时间不变均衡"""
    return BilinearGame(PayoffSchedule.piecewise([[1.0]], [
        (0.0, 1.0, Modulation.constant(1.0)),
        (1.0, 3.0, Modulation.constant(-1.0)),
    ], 3.0), "cex_no_invariant_eq")


def sine_mp_game(period: float = TWO_PI, amplitude: float = 1.0) -> PolymatrixGame:
    """γ(t) = sin(2πt/T) 缩放的 Matching Pennies"""
    schedule = PayoffSchedule.single(MATCHING_PENNIES, Modulation.sine(amplitude, TWO_PI / period, 0.0), period)
    return two_player_game(schedule, uniform_equilibrium(MATCHING_PENNIES), "sine_mp")


def shifting_equilibrium_game(period: float = TWO_PI) -> PolymatrixGame:
    """前 1/4 周期为 Matching Pennies，其余时间为均衡不同的零和博弈，不声明均衡"""
    quarter = period / 4.0
    schedule = PayoffSchedule(MATCHING_PENNIES, (
        Segment(0.0, quarter, Modulation.constant(1.0)),
        Segment(quarter, period, Modulation.constant(1.0), SHIFTED_EQUILIBRIUM_MATRIX),
    ), period)
    return two_player_game(schedule, None, "cex_ftrl_shifting_eq")
