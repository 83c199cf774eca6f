import bisect
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import ScheduleError, ShapeError
from app.games.modulation import Modulation


@dataclass(frozen=True, eq=False)
class Segment:
    """时间表中的一个半开区间 [t_start, t_end)，可选地覆盖基础矩阵"""
    t_start: float
    t_end: float
    modulation: Modulation
    base: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.base is not None:
            object.__setattr__(self, "base", np.atleast_2d(np.asarray(self.base, dtype=float)))


@dataclass(frozen=True, eq=False)
class PayoffSchedule:
    """T 周期、分段光滑的收益矩阵 A(t) = m(t mod T) * base

    period 为 None 时表示非周期时间表，区间覆盖 [0, ∞)，按绝对时间求值。
    """
    base: np.ndarray
    segments: Tuple[Segment, ...]
    period: Optional[float]
    _starts: List[float] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_2d(np.asarray(self.base, dtype=float)))
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.base.ndim != 2:
            raise ShapeError(f"基础矩阵必须是二维的，收到形状 {self.base.shape}")
        self._validate_coverage()
        object.__setattr__(self, "_starts", [seg.t_start for seg in self.segments])

    def _validate_coverage(self):
        if self.period is not None and not (self.period > 0 and math.isfinite(self.period)):
            raise ScheduleError(f"周期必须为正有限数，收到 {self.period}")
        if not self.segments:
            raise ScheduleError("时间表至少需要一个区间")
        horizon = self.period if self.period is not None else math.inf
        if self.segments[0].t_start != 0.0:
            raise ScheduleError(f"第一个区间必须从 0 开始，收到 {self.segments[0].t_start}")
        for k, seg in enumerate(self.segments):
            if not seg.t_end > seg.t_start:
                raise ScheduleError(f"区间 {k} 为空: [{seg.t_start}, {seg.t_end})")
            if seg.base is not None and seg.base.shape != self.base.shape:
                raise ShapeError(f"区间 {k} 的覆盖矩阵形状 {seg.base.shape} 与基础矩阵 {self.base.shape} 不符")
            if k + 1 < len(self.segments) and self.segments[k + 1].t_start != seg.t_end:
                raise ScheduleError(
                    f"区间 {k} 结束于 {seg.t_end}，下一区间开始于 {self.segments[k + 1].t_start}（存在缺口或重叠）"
                )
        if self.segments[-1].t_end != horizon:
            raise ScheduleError(f"最后一个区间必须结束于 {horizon}，收到 {self.segments[-1].t_end}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.base.shape

    @property
    def is_periodic(self) -> bool:
        return self.period is not None

    def reduce_time(self, t: float) -> float:
        """t mod T，用 t - T*floor(t/T) 保证结果落在 [0, T)"""
        if self.period is None:
            return t
        tau = t - self.period * math.floor(t / self.period)
        if tau >= self.period:
            tau -= self.period
        return max(tau, 0.0)

    def segment_at(self, t: float) -> Tuple[Segment, float]:
        tau = self.reduce_time(t)
        idx = bisect.bisect_right(self._starts, tau) - 1
        if idx < 0 or tau >= self.segments[idx].t_end:
            raise ScheduleError(f"t={t} (约化后 {tau}) 不落在任何区间内")
        return self.segments[idx], tau

    def coefficient_at(self, t: float) -> Tuple[float, np.ndarray]:
        """返回 (m(t), 当前区间的基础矩阵)，避免为标量调制构造新矩阵"""
        seg, tau = self.segment_at(t)
        base = seg.base if seg.base is not None else self.base
        return seg.modulation(tau), base

    def __call__(self, t: float) -> np.ndarray:
        scale, base = self.coefficient_at(t)
        return scale * base

    def breakpoints(self, t0: float, t1: float) -> List[float]:
        """返回 (t0, t1) 内部所有可能的不连续时刻"""
        tol = 1e-12 * max(1.0, abs(t0), abs(t1))
        if self.period is None:
            marks = [seg.t_start for seg in self.segments[1:]]
        else:
            marks = []
            for k in range(math.floor(t0 / self.period), math.ceil(t1 / self.period) + 1):
                marks.extend(k * self.period + seg.t_start for seg in self.segments)
        return sorted({m for m in marks if t0 + tol < m < t1 - tol})

    def negated_transpose(self) -> "PayoffSchedule":
        """构造对手的零和收益时间表 -A(t)^T"""
        segments = tuple(
            Segment(seg.t_start, seg.t_end, seg.modulation, None if seg.base is None else -seg.base.T)
            for seg in self.segments
        )
        return PayoffSchedule(-self.base.T, segments, self.period)

    @classmethod
    def single(cls, base, modulation: Modulation, period: Optional[float]) -> "PayoffSchedule":
        end = period if period is not None else math.inf
        return cls(base, (Segment(0.0, end, modulation),), period)

    @classmethod
    def piecewise(cls, base, pieces: Sequence[Tuple[float, float, Modulation]], period: Optional[float]) -> "PayoffSchedule":
        return cls(base, tuple(Segment(a, b, m) for a, b, m in pieces), period)


def eval_payoff(schedule: PayoffSchedule, t: float) -> np.ndarray:
    """在时刻 t 求收益矩阵，保证 eval(t) == eval(t + kT)

    Args:
        schedule: 收益时间表
        t: 时刻 (t >= 0)

    Returns:
        np.ndarray: 收益矩阵
    """
    if t < 0:
        raise ValueError(f"时刻必须非负，收到 t={t}")
    return schedule(t)
