import logging
from typing import Callable, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import rel_entr

from app.core.errors import DomainError, ShapeError
from app.core.state import FtrlState, GdaState, JointStrategy, split_flat
from app.dynamics.regularizers import Regularizer, conjugate, regularizer_value
from app.games.models import PolymatrixGame
from app.integrate.integrator import Trajectory

logger = logging.getLogger("Invariants")

Functional = Callable[[np.ndarray], float]


class DriftReport(BaseModel):
    functional: str
    initial: float
    max_abs_drift: float = Field(default=0.0, ge=0.0)
    max_rel_drift: float = Field(default=0.0, ge=0.0)


def gda_energy(s: Union[GdaState, np.ndarray]) -> float:
    """½(‖x1‖² + ‖x2‖²)，沿 GDA 轨迹守恒"""
    vec = s.flatten() if isinstance(s, GdaState) else np.asarray(s, dtype=float)
    return 0.5 * float(vec @ vec)


def _interior_equilibrium(game: PolymatrixGame, reg: Regularizer):
    if game.equilibrium is None:
        raise DomainError(f"博弈 '{game.name}' 没有声明均衡，Fenchel 耦合无定义")
    if reg is Regularizer.ENTROPIC and not game.has_interior_equilibrium:
        raise DomainError("熵正则下均衡必须在单纯形内部（h(x*) 含 log 0）")
    return game.equilibrium


def fenchel_coupling(game: PolymatrixGame, reg: Regularizer,
                     y: Union[FtrlState, Sequence[np.ndarray], np.ndarray]) -> float:
    """Σ_i h*(y_i) - <x*_i, y_i> + h(x*_i)

    熵正则下等于 Σ_i KL(x*_i ‖ Q(y_i))。对 y_i 整体平移不变，因此 z 状态在基准处补 0 后也可直接代入。
    """
    equilibrium = _interior_equilibrium(game, reg)
    if isinstance(y, FtrlState):
        parts = y.y
    elif isinstance(y, np.ndarray):
        parts = split_flat(y, game.actions)
    else:
        parts = tuple(np.asarray(yi, dtype=float) for yi in y)
    if len(parts) != game.num_players:
        raise ShapeError(f"收益状态包含 {len(parts)} 名玩家，博弈有 {game.num_players} 名")
    total = 0.0
    for xi, yi in zip(equilibrium, parts):
        total += conjugate(reg, yi) - float(xi @ yi) + regularizer_value(reg, xi)
    return total


def kl_divergence(p, q) -> float:
    """KL(p ‖ q) = Σ p log(p/q)，约定 0·log0 = 0"""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ShapeError(f"KL 的两个分布维度不同: {p.shape} vs {q.shape}")
    if np.any((p > 0) & (q <= 0)):
        raise DomainError(f"supp(p) 不包含于 supp(q): p={p.tolist()}, q={q.tolist()}")
    return float(rel_entr(p, q).sum())


def kl_sum(game: PolymatrixGame, x: JointStrategy) -> float:
    """Σ_i KL(x*_i ‖ x_i)"""
    equilibrium = _interior_equilibrium(game, Regularizer.ENTROPIC)
    joint = game.check_strategy(x)
    return sum(kl_divergence(xs, xi) for xs, xi in zip(equilibrium, joint))


def coupling_functional(game: PolymatrixGame, reg: Regularizer, kind: str,
                        benchmarks: Sequence[int] = ()) -> Functional:
    """按轨迹类型返回扁平状态上的 Fenchel 耦合

    ftrl 直接使用 y；z 在基准位置补 0；replicator 仅支持熵正则，使用 y = log x。
    """
    if kind == "ftrl":
        return lambda s: fenchel_coupling(game, reg, s)
    if kind == "z":
        betas = list(benchmarks) or [n - 1 for n in game.actions]

        def from_z(s: np.ndarray) -> float:
            parts = split_flat(s, [n - 1 for n in game.actions])
            return fenchel_coupling(game, reg, [np.insert(zi, b, 0.0) for zi, b in zip(parts, betas)])
        return from_z
    if kind == "replicator":
        if reg is not Regularizer.ENTROPIC:
            raise ValueError("策略空间轨迹只对应熵正则（复制子动力学）")
        return lambda s: kl_sum(game, split_flat(s, game.actions))
    raise ValueError(f"{kind} 轨迹没有 Fenchel 耦合")


def invariant_drift(traj: Trajectory, functional: Functional, name: str = "functional") -> DriftReport:
    """统计泛函相对 t0 取值的最大绝对/相对漂移

    初值为 0 时相对漂移按绝对漂移报告。
    """
    values = np.array([functional(s) for s in traj.states])
    initial = float(values[0])
    max_abs = float(np.max(np.abs(values - initial)))
    max_rel = max_abs / abs(initial) if initial != 0.0 else max_abs
    logger.debug(f"[Invariants] {name}: 初值 {initial:.6g}，最大漂移 {max_abs:.3e} (相对 {max_rel:.3e})")
    return DriftReport(functional=name, initial=initial, max_abs_drift=max_abs, max_rel_drift=max_rel)
