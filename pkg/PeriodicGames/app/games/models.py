import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import DomainError, ScheduleError, ShapeError
from app.core.state import JointStrategy, check_joint_strategy, check_mixed_strategy
from app.games.schedule import PayoffSchedule

logger = logging.getLogger("GameModels")


def _merge_breakpoints(schedules: Sequence[PayoffSchedule], t0: float, t1: float) -> List[float]:
    marks = set()
    for schedule in schedules:
        marks.update(schedule.breakpoints(t0, t1))
    return sorted(marks)


@dataclass(frozen=True, eq=False)
class BilinearGame:
    """周期零和双线性博弈：玩家 1 收益 x1^T A(t) x2，玩家 2 收益为其相反数"""
    schedule: PayoffSchedule
    name: str = "bilinear"

    @property
    def dims(self) -> Tuple[int, int]:
        return self.schedule.shape

    @property
    def period(self) -> Optional[float]:
        return self.schedule.period

    @property
    def equilibrium(self) -> Tuple[np.ndarray, np.ndarray]:
        # (0, 0) 总是时间不变的均衡
        return np.zeros(self.dims[0]), np.zeros(self.dims[1])

    def payoff(self, t: float) -> np.ndarray:
        return self.schedule(t)

    def breakpoints(self, t0: float, t1: float) -> List[float]:
        return self.schedule.breakpoints(t0, t1)


@dataclass(frozen=True, eq=False)
class Edge:
    """无向边 (i, j)，携带 A^{ij}(t) (n_i×n_j) 与 A^{ji}(t) (n_j×n_i)"""
    i: int
    j: int
    forward: PayoffSchedule
    backward: PayoffSchedule


@dataclass(frozen=True, eq=False)
class PolymatrixGame:
    """周期零和多矩阵博弈

    每名玩家的收益是其所有关联边上双矩阵博弈收益之和；equilibrium 为声明的共同内点均衡 x*，
    不做求解。
    """
    actions: Tuple[int, ...]
    edges: Tuple[Edge, ...]
    equilibrium: Optional[Tuple[np.ndarray, ...]] = None
    name: str = "polymatrix"
    _incident: Tuple[Tuple[Tuple[int, PayoffSchedule], ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(n) for n in self.actions))
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(self.actions) < 2:
            raise ValueError(f"多矩阵博弈至少需要 2 名玩家，收到 {len(self.actions)}")
        if any(n < 1 for n in self.actions):
            raise ShapeError(f"动作数必须为正: {self.actions}")

        incident: List[List[Tuple[int, PayoffSchedule]]] = [[] for _ in self.actions]
        periods = set()
        for edge in self.edges:
            if not (0 <= edge.i < self.num_players and 0 <= edge.j < self.num_players) or edge.i == edge.j:
                raise ShapeError(f"非法的边 ({edge.i}, {edge.j})")
            ni, nj = self.actions[edge.i], self.actions[edge.j]
            if edge.forward.shape != (ni, nj) or edge.backward.shape != (nj, ni):
                raise ShapeError(
                    f"边 ({edge.i}, {edge.j}) 的矩阵形状 {edge.forward.shape}/{edge.backward.shape} "
                    f"与动作数 ({ni}, {nj}) 不符"
                )
            periods.update({edge.forward.period, edge.backward.period})
            incident[edge.i].append((edge.j, edge.forward))
            incident[edge.j].append((edge.i, edge.backward))
        if len(periods) > 1:
            raise ScheduleError(f"所有边的时间表必须共享同一周期，收到 {sorted(periods, key=str)}")
        object.__setattr__(self, "_incident", tuple(tuple(items) for items in incident))

        if self.equilibrium is not None:
            equilibrium = tuple(check_mixed_strategy(xi) for xi in self.equilibrium)
            check_joint_strategy(equilibrium, self.actions)
            if any(np.any(xi <= 0) for xi in equilibrium):
                raise DomainError(f"声明的均衡必须在单纯形内部，收到 {[xi.tolist() for xi in equilibrium]}")
            object.__setattr__(self, "equilibrium", equilibrium)

    @property
    def num_players(self) -> int:
        return len(self.actions)

    @property
    def period(self) -> Optional[float]:
        if not self.edges:
            return None
        return self.edges[0].forward.period

    @property
    def has_interior_equilibrium(self) -> bool:
        return self.equilibrium is not None and all(np.all(xi > 0) for xi in self.equilibrium)

    def schedules(self) -> List[PayoffSchedule]:
        return [s for edge in self.edges for s in (edge.forward, edge.backward)]

    def breakpoints(self, t0: float, t1: float) -> List[float]:
        return _merge_breakpoints(self.schedules(), t0, t1)

    def neighbor_payoff(self, player: int, t: float, x: Sequence[np.ndarray]) -> np.ndarray:
        """v_i(x, t) = Σ_j A^{ij}(t) x_j，假定 x 已通过校验"""
        v = np.zeros(self.actions[player])
        for j, schedule in self._incident[player]:
            scale, base = schedule.coefficient_at(t)
            if scale != 0.0:
                v += scale * (base @ x[j])
        return v

    def payoff_vectors(self, t: float, x: JointStrategy) -> List[np.ndarray]:
        """所有玩家的收益向量 v_i(x, t)"""
        return [self.neighbor_payoff(i, t, x) for i in range(self.num_players)]

    def check_strategy(self, x: JointStrategy) -> List[np.ndarray]:
        return check_joint_strategy(x, self.actions)
