from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from app.core.errors import ShapeError

# 混合策略校验的容差
SIMPLEX_TOLERANCE = 1e-12

JointStrategy = Sequence[np.ndarray]


def check_mixed_strategy(probs, tol: float = SIMPLEX_TOLERANCE) -> np.ndarray:
    """校验并返回一个混合策略（非负、和为 1）

    Args:
        probs: 概率向量
        tol: 求和与非负性的容差

    Returns:
        np.ndarray: float64 概率向量
    """
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ShapeError(f"混合策略必须是非空一维向量，收到形状 {p.shape}")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol * max(1, p.size):
        raise ValueError(f"不是合法的混合策略: {p.tolist()}")
    return p


def check_joint_strategy(x: JointStrategy, actions: Sequence[int]) -> List[np.ndarray]:
    """校验联合策略与各玩家动作数一致"""
    if len(x) != len(actions):
        raise ShapeError(f"联合策略包含 {len(x)} 个玩家，博弈有 {len(actions)} 个玩家")
    joint = []
    for i, (xi, n) in enumerate(zip(x, actions)):
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (n,):
            raise ShapeError(f"玩家 {i} 的策略维度 {xi.shape} 与动作数 {n} 不符")
        joint.append(xi)
    return joint


def split_flat(vec: np.ndarray, sizes: Sequence[int]) -> Tuple[np.ndarray, ...]:
    """按各段长度切分扁平状态向量"""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (sum(sizes),):
        raise ShapeError(f"状态长度 {vec.shape} 与期望的 {sum(sizes)} 不符")
    offsets = np.cumsum([0, *sizes])
    return tuple(vec[offsets[k]:offsets[k + 1]] for k in range(len(sizes)))


@dataclass(frozen=True, eq=False)
class GdaState:
    """GDA 状态：两名玩家的无约束策略向量"""
    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x1", np.atleast_1d(np.asarray(self.x1, dtype=float)))
        object.__setattr__(self, "x2", np.atleast_1d(np.asarray(self.x2, dtype=float)))

    @property
    def dims(self) -> Tuple[int, int]:
        return self.x1.size, self.x2.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.x1, self.x2])

    @classmethod
    def from_flat(cls, vec: np.ndarray, dims: Tuple[int, int]) -> "GdaState":
        x1, x2 = split_flat(vec, dims)
        return cls(x1.copy(), x2.copy())


@dataclass(frozen=True, eq=False)
class FtrlState:
    """FTRL 状态：每名玩家的累计收益向量 y_i，策略 x_i = Q_i(y_i) 由选择映射导出"""
    y: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(np.asarray(yi, dtype=float) for yi in self.y))

    @property
    def actions(self) -> Tuple[int, ...]:
        return tuple(yi.size for yi in self.y)

    def flatten(self) -> np.ndarray:
        return np.concatenate(self.y)

    @classmethod
    def from_flat(cls, vec: np.ndarray, actions: Sequence[int]) -> "FtrlState":
        return cls(tuple(part.copy() for part in split_flat(vec, actions)))


@dataclass(frozen=True, eq=False)
class ZState:
    """约化状态：z_{iα} = y_{iα} - y_{iβ_i}，β_i 为每名玩家的基准动作"""
    z: Tuple[np.ndarray, ...]
    benchmarks: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(np.asarray(zi, dtype=float) for zi in self.z))
        object.__setattr__(self, "benchmarks", tuple(int(b) for b in self.benchmarks))
        if len(self.z) != len(self.benchmarks):
            raise ShapeError("每名玩家必须有且仅有一个基准动作")

    @property
    def actions(self) -> Tuple[int, ...]:
        return tuple(zi.size + 1 for zi in self.z)

    def flatten(self) -> np.ndarray:
        return np.concatenate(self.z)

    @classmethod
    def from_flat(cls, vec: np.ndarray, actions: Sequence[int], benchmarks: Sequence[int]) -> "ZState":
        parts = split_flat(vec, [n - 1 for n in actions])
        return cls(tuple(part.copy() for part in parts), tuple(benchmarks))
