import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.errors import DomainError, ShapeError
from app.core.state import FtrlState, GdaState, JointStrategy, ZState, split_flat
from app.dynamics.regularizers import Regularizer, choice_map
from app.games.models import BilinearGame, PolymatrixGame

logger = logging.getLogger("Dynamics")


# ---------------------------------------------------------------------------
# 函数形式的向量场
# ---------------------------------------------------------------------------

def gda_field(game: BilinearGame, t: float, s: GdaState) -> GdaState:
    """GDA: ẋ1 = A(t) x2, ẋ2 = -A(t)^T x1"""
    if s.dims != game.dims:
        raise ShapeError(f"状态维度 {s.dims} 与博弈维度 {game.dims} 不符")
    A = game.payoff(t)
    return GdaState(A @ s.x2, -A.T @ s.x1)


def payoff_vector(game: PolymatrixGame, player: int, t: float, x: JointStrategy) -> np.ndarray:
    """v_i(x, t) = Σ_{j:(i,j)∈E} A^{ij}(t) x_j，满足 u_i = <v_i, x_i>"""
    if not 0 <= player < game.num_players:
        raise ShapeError(f"玩家 {player} 不存在（共 {game.num_players} 名玩家）")
    return game.neighbor_payoff(player, t, game.check_strategy(x))


def strategies_from_payoffs(reg: Regularizer, s: FtrlState) -> List[np.ndarray]:
    return [choice_map(reg, yi) for yi in s.y]


def ftrl_field(game: PolymatrixGame, t: float, s: FtrlState,
               reg: Regularizer = Regularizer.ENTROPIC) -> FtrlState:
    """ẏ_i = v_i(Q(y), t)；策略总是由 y 经选择映射重新计算"""
    if s.actions != game.actions:
        raise ShapeError(f"状态动作数 {s.actions} 与博弈 {game.actions} 不符")
    x = strategies_from_payoffs(reg, s)
    return FtrlState(tuple(game.payoff_vectors(t, x)))


def replicator_field(game: PolymatrixGame, t: float, x: JointStrategy) -> List[np.ndarray]:
    """复制子动力学 ẋ_{iα} = x_{iα}(v_{iα} - <v_i, x_i>)，各玩家分量之和为 0"""
    joint = game.check_strategy(x)
    field = []
    for xi, vi in zip(joint, game.payoff_vectors(t, joint)):
        field.append(xi * (vi - vi @ xi))
    return field


def default_benchmarks(actions: Sequence[int]) -> Tuple[int, ...]:
    # 默认以最后一个动作为基准
    return tuple(n - 1 for n in actions)


def z_reduce(s: FtrlState, benchmarks: Optional[Sequence[int]] = None) -> ZState:
    """z_{iα} = y_{iα} - y_{iβ_i}，去掉基准坐标（动作编号从 0 开始）"""
    benchmarks = default_benchmarks(s.actions) if benchmarks is None else tuple(benchmarks)
    if len(benchmarks) != len(s.y):
        raise ShapeError(f"基准动作数 {len(benchmarks)} 与玩家数 {len(s.y)} 不符")
    z = []
    for yi, beta in zip(s.y, benchmarks):
        if not 0 <= beta < yi.size:
            raise ShapeError(f"基准动作 {beta} 超出范围 [0, {yi.size})")
        z.append(np.delete(yi - yi[beta], beta))
    return ZState(tuple(z), benchmarks)


def lift_z(zi: np.ndarray, beta: int) -> np.ndarray:
    """Π_i 的一个原像：在基准位置插入 0"""
    return np.insert(np.asarray(zi, dtype=float), beta, 0.0)


def reduced_choice_map(reg: Regularizer, zi: np.ndarray, beta: int) -> np.ndarray:
    """Q̂_i(z_i) = Q_i(y_i)，对任意满足 Π_i(y_i) = z_i 的 y_i 成立（Q 平移不变）"""
    return choice_map(reg, lift_z(zi, beta))


def z_field(game: PolymatrixGame, t: float, z: ZState,
            reg: Regularizer = Regularizer.ENTROPIC) -> ZState:
    """ż_{iα} = v_{iα}(Q̂(z), t) - v_{iβ_i}(Q̂(z), t)"""
    if z.actions != game.actions:
        raise ShapeError(f"状态动作数 {z.actions} 与博弈 {game.actions} 不符")
    x = [reduced_choice_map(reg, zi, beta) for zi, beta in zip(z.z, z.benchmarks)]
    dz = []
    for vi, beta in zip(game.payoff_vectors(t, x), z.benchmarks):
        dz.append(np.delete(vi - vi[beta], beta))
    return ZState(tuple(dz), z.benchmarks)


def z_from_strategies(x: JointStrategy, benchmarks: Sequence[int]) -> ZState:
    """熵正则下 y = log x 是 Q 的一个原像，由此得到内点策略对应的 z"""
    y = tuple(np.log(np.asarray(xi, dtype=float)) for xi in x)
    return z_reduce(FtrlState(y), benchmarks)


def payoffs_from_strategies(reg: Regularizer, x: JointStrategy) -> FtrlState:
    """Q 的一个原像：熵正则取 y = log x（要求内点），欧氏正则取 y = x"""
    parts = []
    for xi in x:
        xi = np.asarray(xi, dtype=float)
        if reg is Regularizer.ENTROPIC:
            if np.any(xi <= 0):
                raise DomainError(f"熵正则要求内点策略，收到 {xi.tolist()}")
            parts.append(np.log(xi))
        else:
            parts.append(xi.copy())
    return FtrlState(tuple(parts))


# ---------------------------------------------------------------------------
# 扁平状态向量上的向量场（供积分器使用）
# ---------------------------------------------------------------------------

Game = Union[BilinearGame, PolymatrixGame]


class VectorField(ABC):
    """非自治向量场 f(t, s)，s 为扁平 numpy 向量"""

    kind: str = ""

    def __init__(self, game: Game):
        self.game = game

    @property
    def period(self) -> Optional[float]:
        return self.game.period

    def breakpoints(self, t0: float, t1: float) -> List[float]:
        return self.game.breakpoints(t0, t1)

    @property
    @abstractmethod
    def labels(self) -> List[str]:
        """每个坐标的列名，形如 x0_1 (玩家 0 的动作 1)"""

    @property
    def dim(self) -> int:
        return len(self.labels)

    @abstractmethod
    def __call__(self, t: float, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError("子类必须实现 __call__")


class GdaField(VectorField):
    """GDA 向量场；fixed_x2 不为空时玩家 2 是固定策略的哑玩家"""

    kind = "gda"

    def __init__(self, game: BilinearGame, fixed_x2: Optional[np.ndarray] = None):
        super().__init__(game)
        self.fixed_x2 = None if fixed_x2 is None else np.atleast_1d(np.asarray(fixed_x2, dtype=float))
        if self.fixed_x2 is not None and self.fixed_x2.shape != (game.dims[1],):
            raise ShapeError(f"哑玩家策略维度 {self.fixed_x2.shape} 与 n_2={game.dims[1]} 不符")

    @property
    def labels(self) -> List[str]:
        n1, n2 = self.game.dims
        return [f"x0_{a}" for a in range(n1)] + [f"x1_{a}" for a in range(n2)]

    def pack(self, s: GdaState) -> np.ndarray:
        return s.flatten()

    def unpack(self, vec: np.ndarray) -> GdaState:
        return GdaState.from_flat(vec, self.game.dims)

    def __call__(self, t: float, s: np.ndarray) -> np.ndarray:
        n1 = self.game.dims[0]
        A = self.game.payoff(t)
        x1, x2 = s[:n1], s[n1:]
        if self.fixed_x2 is not None:
            return np.concatenate([A @ self.fixed_x2, np.zeros_like(x2)])
        return np.concatenate([A @ x2, -A.T @ x1])


class FtrlField(VectorField):
    """收益空间中的 FTRL 向量场 ẏ = v(Q(y), t)"""

    kind = "ftrl"

    def __init__(self, game: PolymatrixGame, reg: Regularizer = Regularizer.ENTROPIC):
        super().__init__(game)
        self.reg = reg

    @property
    def labels(self) -> List[str]:
        return [f"y{i}_{a}" for i, n in enumerate(self.game.actions) for a in range(n)]

    def pack(self, s: FtrlState) -> np.ndarray:
        return s.flatten()

    def unpack(self, vec: np.ndarray) -> FtrlState:
        return FtrlState.from_flat(vec, self.game.actions)

    def strategies(self, vec: np.ndarray) -> List[np.ndarray]:
        return [choice_map(self.reg, yi) for yi in split_flat(vec, self.game.actions)]

    def __call__(self, t: float, s: np.ndarray) -> np.ndarray:
        return np.concatenate(self.game.payoff_vectors(t, self.strategies(s)))


class ReplicatorField(VectorField):
    """策略空间中的复制子动力学（熵正则 FTRL 的闭式形式）"""

    kind = "replicator"

    @property
    def labels(self) -> List[str]:
        return [f"x{i}_{a}" for i, n in enumerate(self.game.actions) for a in range(n)]

    def pack(self, x: JointStrategy) -> np.ndarray:
        return np.concatenate([np.asarray(xi, dtype=float) for xi in x])

    def unpack(self, vec: np.ndarray) -> List[np.ndarray]:
        return list(split_flat(vec, self.game.actions))

    def __call__(self, t: float, s: np.ndarray) -> np.ndarray:
        x = split_flat(s, self.game.actions)
        parts = []
        for xi, vi in zip(x, self.game.payoff_vectors(t, x)):
            parts.append(xi * (vi - vi @ xi))
        return np.concatenate(parts)


class ZField(VectorField):
    """约化的收益差动力学 ż，在 z 空间中是无散的"""

    kind = "z"

    def __init__(self, game: PolymatrixGame, reg: Regularizer = Regularizer.ENTROPIC,
                 benchmarks: Optional[Sequence[int]] = None):
        super().__init__(game)
        self.reg = reg
        self.benchmarks = default_benchmarks(game.actions) if benchmarks is None else tuple(benchmarks)

    @property
    def labels(self) -> List[str]:
        return [f"z{i}_{a}" for i, (n, beta) in enumerate(zip(self.game.actions, self.benchmarks))
                for a in range(n) if a != beta]

    def pack(self, z: ZState) -> np.ndarray:
        return z.flatten()

    def unpack(self, vec: np.ndarray) -> ZState:
        return ZState.from_flat(vec, self.game.actions, self.benchmarks)

    def strategies(self, vec: np.ndarray) -> List[np.ndarray]:
        parts = split_flat(vec, [n - 1 for n in self.game.actions])
        return [reduced_choice_map(self.reg, zi, beta) for zi, beta in zip(parts, self.benchmarks)]

    def __call__(self, t: float, s: np.ndarray) -> np.ndarray:
        dz = []
        for vi, beta in zip(self.game.payoff_vectors(t, self.strategies(s)), self.benchmarks):
            dz.append(np.delete(vi - vi[beta], beta))
        return np.concatenate(dz)


def make_field(game: Game, dynamics: str, reg: Regularizer = Regularizer.ENTROPIC) -> VectorField:
    """按名称构造向量场：gda | ftrl | replicator | z"""
    if dynamics == "gda":
        if not isinstance(game, BilinearGame):
            raise ValueError("GDA 动力学需要双线性博弈")
        return GdaField(game)
    if not isinstance(game, PolymatrixGame):
        raise ValueError(f"{dynamics} 动力学需要多矩阵博弈")
    if dynamics == "ftrl":
        return FtrlField(game, reg)
    if dynamics == "replicator":
        return ReplicatorField(game)
    if dynamics == "z":
        return ZField(game, reg)
    raise ValueError(f"未知的动力学类型 '{dynamics}'，可选: gda, ftrl, replicator, z")
