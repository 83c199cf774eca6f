import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import softmax

from app.core.config import config
from app.core.errors import DivergenceError, DomainError, ShapeError
from app.dynamics.fields import VectorField
from app.dynamics.regularizers import Regularizer, project_simplex

logger = logging.getLogger("Integrator")

_LABEL_PATTERN = re.compile(r"^([a-z]+)(\d+)_(\d+)$")


@dataclass(frozen=True)
class IntegratorConfig:
    """积分器配置

    step 为 None 时取 STEP_FRACTION * T；非周期博弈必须显式给出步长。
    sample_every 是采样间隔（每多少个 RK4 步保留一个样本），区间端点总会被保留。
    """
    step: Optional[float] = None
    method: Literal["rk4", "rk45"] = "rk4"
    rtol: float = config.RK45_RTOL
    atol: float = config.RK45_ATOL
    sample_every: int = 1

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError(f"步长必须为正，收到 {self.step}")
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"未知的积分方法 '{self.method}'，可选: rk4, rk45")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError(f"容差必须为正，收到 rtol={self.rtol}, atol={self.atol}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every 必须 >= 1，收到 {self.sample_every}")

    def resolve_step(self, period: Optional[float]) -> float:
        if period is None:
            if self.step is None:
                raise ValueError("非周期博弈没有默认步长，请显式指定 step")
            return self.step
        step = self.step if self.step is not None else config.STEP_FRACTION * period
        if step > period / 10.0:
            raise ValueError(f"步长 {step} 超过 T/10 = {period / 10.0}")
        return step


@dataclass(frozen=True, eq=False)
class Trajectory:
    """带时间戳的扁平状态序列

    kind 取值 gda | ftrl | replicator | z，与 labels 的前缀 x / y / x / z 对应。
    """
    times: np.ndarray
    states: np.ndarray
    labels: Tuple[str, ...]
    kind: str = ""

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "states", np.atleast_2d(np.asarray(self.states, dtype=float)))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.states.shape != (self.times.size, len(self.labels)):
            raise ShapeError(
                f"轨迹形状 {self.states.shape} 与 {self.times.size} 个时刻、{len(self.labels)} 个坐标不符"
            )
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("轨迹时刻必须严格递增")

    def __len__(self) -> int:
        return self.times.size

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def column(self, label: str) -> np.ndarray:
        try:
            return self.states[:, self.labels.index(label)]
        except ValueError:
            raise KeyError(f"轨迹中没有列 '{label}'，可用列: {', '.join(self.labels)}") from None

    def slice(self, t0: float, t1: float) -> "Trajectory":
        mask = (self.times >= t0) & (self.times <= t1)
        return Trajectory(self.times[mask], self.states[mask], self.labels, self.kind)

    def player_sizes(self) -> List[int]:
        """按标签前缀 <p><i>_<a> 统计每名玩家的坐标数"""
        sizes: List[int] = []
        for label in self.labels:
            match = _LABEL_PATTERN.match(label)
            if match is None:
                raise ValueError(f"无法解析坐标标签 '{label}'")
            player = int(match.group(2))
            if player == len(sizes):
                sizes.append(0)
            sizes[player] += 1
        return sizes

    def to_strategies(self, reg: Regularizer = Regularizer.ENTROPIC,
                      benchmarks: Optional[Sequence[int]] = None) -> "Trajectory":
        """把 y 或 z 轨迹映射为策略轨迹 x = Q(y)"""
        if self.kind == "replicator":
            return self
        if self.kind not in ("ftrl", "z"):
            raise ValueError(f"{self.kind} 轨迹没有对应的混合策略")
        sizes = self.player_sizes()
        blocks = np.split(self.states, np.cumsum(sizes)[:-1], axis=1)
        if self.kind == "z":
            # 缺省基准是最后一个动作，插入位置恰为 z 的长度
            benchmarks = list(sizes) if benchmarks is None else list(benchmarks)
            blocks = [np.insert(block, beta, 0.0, axis=1) for block, beta in zip(blocks, benchmarks)]
        parts = []
        for block in blocks:
            if reg is Regularizer.ENTROPIC:
                parts.append(softmax(block, axis=1))
            else:
                parts.append(np.apply_along_axis(project_simplex, 1, block))
        labels = [f"x{i}_{a}" for i, block in enumerate(parts) for a in range(block.shape[1])]
        return Trajectory(self.times, np.hstack(parts), labels, "replicator")

    def to_z(self, benchmarks: Optional[Sequence[int]] = None) -> "Trajectory":
        """约化到 z 空间；策略轨迹使用 y = log x 这一原像"""
        if self.kind == "z":
            return self
        if self.kind not in ("ftrl", "replicator"):
            raise ValueError(f"{self.kind} 轨迹不能约化到 z 空间")
        sizes = self.player_sizes()
        benchmarks = [n - 1 for n in sizes] if benchmarks is None else list(benchmarks)
        blocks = np.split(self.states, np.cumsum(sizes)[:-1], axis=1)
        parts, labels = [], []
        for i, (block, beta) in enumerate(zip(blocks, benchmarks)):
            if self.kind == "replicator":
                if np.any(block <= 0):
                    raise DomainError(f"玩家 {i} 的策略不在单纯形内部，log x 无定义")
                block = np.log(block)
            parts.append(np.delete(block - block[:, [beta]], beta, axis=1))
            labels.extend(f"z{i}_{a}" for a in range(block.shape[1]) if a != beta)
        return Trajectory(self.times, np.hstack(parts), labels, "z")


def as_flat(field: VectorField, s0) -> np.ndarray:
    """接受扁平向量、带 flatten() 的状态对象或联合策略"""
    if isinstance(s0, np.ndarray):
        return s0.astype(float, copy=True).ravel()
    if hasattr(s0, "flatten"):
        return s0.flatten()
    return field.pack(s0)


def _nodes(field: VectorField, t0: float, t1: float, breakpoints: Optional[Sequence[float]]) -> List[float]:
    marks = field.breakpoints(t0, t1) if breakpoints is None else list(breakpoints)
    tol = 1e-12 * max(1.0, abs(t0), abs(t1))
    nodes = [t0]
    for mark in sorted(marks):
        if nodes[-1] + tol < mark < t1 - tol:
            nodes.append(float(mark))
    nodes.append(t1)
    return nodes


def _inside(a: float, b: float) -> Callable[[float], float]:
    """把阶段时刻限制在区间内部，使两端点处的求值取区间内侧的极限"""
    delta = min(1e-12 * max(1.0, abs(a), abs(b)), (b - a) / 4.0)
    lo, hi = a + delta, b - delta
    return lambda t: min(max(t, lo), hi)


def _check_finite(y: np.ndarray, t: float):
    if not np.all(np.isfinite(y)):
        raise DivergenceError(t)


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, h: float, y: np.ndarray,
             clamp: Callable[[float], float]) -> np.ndarray:
    k1 = f(clamp(t), y)
    k2 = f(clamp(t + 0.5 * h), y + 0.5 * h * k1)
    k3 = f(clamp(t + 0.5 * h), y + 0.5 * h * k2)
    k4 = f(clamp(t + h), y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_interval(field: VectorField, y: np.ndarray, a: float, b: float, h: float,
                  sample_every: int) -> Tuple[List[float], List[np.ndarray], np.ndarray]:
    n = max(1, math.ceil((b - a) / h - 1e-9))
    hh = (b - a) / n
    clamp = _inside(a, b)
    times, states = [], []
    for k in range(n):
        t = a + k * hh
        y = rk4_step(field, t, hh, y, clamp)
        t_next = b if k == n - 1 else a + (k + 1) * hh
        _check_finite(y, t_next)
        if (k + 1) % sample_every == 0 or k == n - 1:
            times.append(t_next)
            states.append(y)
    return times, states, y


def _rk45_interval(field: VectorField, y: np.ndarray, a: float, b: float, h: float,
                   cfg: IntegratorConfig) -> Tuple[List[float], List[np.ndarray], np.ndarray]:
    clamp = _inside(a, b)
    sol = solve_ivp(lambda t, s: field(clamp(t), s), (a, b), y, method="RK45",
                    rtol=cfg.rtol, atol=cfg.atol, max_step=h)
    if sol.status < 0:
        t_fail = float(sol.t[-1]) if sol.t.size else a
        raise DivergenceError(t_fail, f"RK45 失败于 t={t_fail}: {sol.message}")
    states = [sol.y[:, k] for k in range(1, sol.t.size)]
    for t, s in zip(sol.t[1:], states):
        _check_finite(s, float(t))
    times = [float(t) for t in sol.t[1:]]
    times[-1] = b
    kept = list(range(cfg.sample_every - 1, len(times), cfg.sample_every))
    if not kept or kept[-1] != len(times) - 1:
        kept.append(len(times) - 1)
    return [times[k] for k in kept], [states[k] for k in kept], states[-1]


def integrate(field: VectorField, s0, t0: float, t1: float, cfg: Optional[IntegratorConfig] = None,
              breakpoints: Optional[Sequence[float]] = None) -> Trajectory:
    """在 [t0, t1] 上积分非自治 ODE，步长截断使每个断点都恰好是一个采样点

    Args:
        field: 向量场
        s0: 初始状态（扁平向量或状态对象）
        t0: 起始时刻
        t1: 终止时刻 (> t0)
        cfg: 积分器配置，缺省为 RK4 且 h = STEP_FRACTION * T
        breakpoints: 覆盖向量场自带的断点

    Returns:
        Trajectory: 包含 t0、t1 与区间内所有断点的轨迹
    """
    cfg = cfg or IntegratorConfig()
    if not t1 > t0:
        raise ValueError(f"积分区间必须满足 t1 > t0，收到 [{t0}, {t1}]")
    y = as_flat(field, s0)
    if y.shape != (field.dim,):
        raise ShapeError(f"初始状态长度 {y.size} 与向量场维度 {field.dim} 不符")
    _check_finite(y, t0)
    # 阶段时刻会被限制在区间内部，起点本身单独求值一次以暴露定义域错误
    field(float(t0), y)
    h = cfg.resolve_step(field.period)
    nodes = _nodes(field, float(t0), float(t1), breakpoints)
    logger.debug(f"[Integrator] {cfg.method} 积分 [{t0}, {t1}]，h={h}，{len(nodes) - 1} 个光滑区间")

    times: List[float] = [float(t0)]
    states: List[np.ndarray] = [y.copy()]
    for a, b in zip(nodes[:-1], nodes[1:]):
        if cfg.method == "rk4":
            seg_times, seg_states, y = _rk4_interval(field, y, a, b, h, cfg.sample_every)
        else:
            seg_times, seg_states, y = _rk45_interval(field, y, a, b, h, cfg)
        times.extend(seg_times)
        states.extend(seg_states)
    return Trajectory(np.array(times), np.vstack(states), tuple(field.labels), field.kind)
