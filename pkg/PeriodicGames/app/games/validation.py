import logging
from typing import Dict, Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from app.core.config import config
from app.core.errors import ShapeError, UnsupportedGameError
from app.core.state import JointStrategy
from app.games.models import BilinearGame, PolymatrixGame

logger = logging.getLogger("GameValidation")


def utility(game: PolymatrixGame, player: int, t: float, x: JointStrategy) -> float:
    """u_i(x, t) = <v_i(x, t), x_i>"""
    if not 0 <= player < game.num_players:
        raise ShapeError(f"玩家 {player} 不存在（共 {game.num_players} 名玩家）")
    joint = game.check_strategy(x)
    return float(joint[player] @ game.neighbor_payoff(player, t, joint))


def zero_sum_residual(game: PolymatrixGame, t: float, x: JointStrategy) -> float:
    """|Σ_i u_i(x, t)|，零和博弈应当 ≤ 1e-10"""
    joint = game.check_strategy(x)
    total = sum(float(xi @ vi) for xi, vi in zip(joint, game.payoff_vectors(t, joint)))
    return abs(total)


def equilibrium_residual(game: PolymatrixGame, t: float) -> float:
    """内点均衡下每名玩家所有纯策略收益应相等，返回最大的收益差"""
    if game.equilibrium is None:
        raise ValueError(f"博弈 '{game.name}' 没有声明均衡")
    payoffs = game.payoff_vectors(t, game.equilibrium)
    return max(float(v.max() - v.min()) for v in payoffs)


def game_value(game: PolymatrixGame, t: float) -> float:
    """两人零和博弈在时刻 t 的值 V(t) = u_1(x*, t)

    三人及以上的多矩阵博弈中单个玩家的值没有定义。
    """
    if game.num_players != 2:
        raise UnsupportedGameError(f"博弈值只对两人博弈有定义，'{game.name}' 有 {game.num_players} 名玩家")
    if game.equilibrium is None:
        raise ValueError(f"博弈 '{game.name}' 没有声明均衡")
    return utility(game, 0, t, game.equilibrium)


def period_average_value(game: PolymatrixGame, samples: int = 4001) -> float:
    """V̄ = (1/T)∫_0^T V(τ)dτ，在含断点的网格上用梯形公式积分"""
    if game.period is None:
        raise ValueError("非周期博弈没有周期平均值")
    grid = np.union1d(np.linspace(0.0, game.period, samples), game.breakpoints(0.0, game.period))
    values = [game_value(game, t) for t in grid]
    return float(trapezoid(values, grid) / game.period)


def check_game(game: Union[BilinearGame, PolymatrixGame], samples: Optional[int] = None,
               seed: Optional[int] = None, tolerance: Optional[float] = None) -> Dict[str, Dict]:
    """对博弈做结构检查：周期性、零和残差、均衡残差

    Args:
        game: 待检查的博弈
        samples: 采样时刻数
        seed: 随机联合策略的种子
        tolerance: 残差容差

    Returns:
        Dict[str, Dict]: 每项检查的 {"value": 最大残差, "passed": 是否通过}
    """
    samples = samples or config.CHECK_SAMPLES
    tolerance = config.RESIDUAL_TOLERANCE if tolerance is None else tolerance
    rng = np.random.default_rng(config.DEFAULT_SEED if seed is None else seed)
    period = game.period
    results: Dict[str, Dict] = {}

    if period is None:
        results["periodicity"] = {"value": float("inf"), "passed": False}
        times = rng.uniform(1.0, 10.0, samples)
    else:
        times = rng.uniform(0.0, period, samples)
        schedules = [game.schedule] if isinstance(game, BilinearGame) else game.schedules()
        drift = max(
            float(np.max(np.abs(s(t) - s(t + period)))) for s in schedules for t in times[:10]
        )
        # t 与 t+T 的约化时间只差舍入误差，按相对量计
        results["periodicity"] = {"value": drift, "passed": drift <= 1e-9}

    if isinstance(game, BilinearGame):
        # 双线性博弈按构造零和，(0,0) 总是均衡
        results["zero_sum"] = {"value": 0.0, "passed": True}
        results["equilibrium"] = {"value": 0.0, "passed": True}
        return results

    zero_sum = 0.0
    for t in times:
        x = [rng.dirichlet(np.ones(n)) for n in game.actions]
        zero_sum = max(zero_sum, zero_sum_residual(game, t, x))
    results["zero_sum"] = {"value": zero_sum, "passed": zero_sum <= tolerance}

    if game.equilibrium is None:
        results["equilibrium"] = {"value": float("nan"), "passed": False}
    else:
        eq = max(equilibrium_residual(game, t) for t in times)
        results["equilibrium"] = {"value": eq, "passed": eq <= tolerance}
    for name, row in results.items():
        logger.debug(f"[Check] {game.name}: {name} = {row['value']:.3e} ({'ok' if row['passed'] else 'FAIL'})")
    return results
