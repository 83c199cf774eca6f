import logging
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from app.core.errors import ShapeError
from app.integrate.integrator import Trajectory

logger = logging.getLogger("Recurrence")

Coordinates = Optional[Sequence[Union[int, str]]]


class RecurrenceEvent(BaseModel):
    t_return: float
    distance: float


def _select(traj: Trajectory, ref, coords: Coordinates):
    ref = np.asarray(ref, dtype=float).ravel()
    if coords is None:
        idx = np.arange(len(traj.labels))
    else:
        idx = np.array([traj.labels.index(c) if isinstance(c, str) else int(c) for c in coords])
    if ref.size == len(traj.labels):
        ref = ref[idx]
    if ref.size != idx.size:
        raise ShapeError(f"参考状态长度 {ref.size} 与所选坐标数 {idx.size} 不符")
    return traj.states[:, idx], ref


def sup_distances(traj: Trajectory, ref, coords: Coordinates = None) -> np.ndarray:
    states, ref = _select(traj, ref, coords)
    return np.max(np.abs(states - ref), axis=1)


def recurrence_scan(traj: Trajectory, ref, eps: float, exclude_until: float,
                    coords: Coordinates = None) -> List[RecurrenceEvent]:
    """找出 exclude_until 之后与 ref 的 sup 距离小于 eps 的局部极小样本

    Args:
        traj: 轨迹
        ref: 参考状态（通常是初值）
        eps: 邻域半径 (> 0)
        exclude_until: 忽略此前的样本 (> t0)
        coords: 可选的坐标子集（标签或下标）

    Returns:
        List[RecurrenceEvent]: 可能为空
    """
    if not eps > 0:
        raise ValueError(f"eps 必须为正，收到 {eps}")
    if not exclude_until > traj.t0:
        raise ValueError(f"exclude_until={exclude_until} 必须大于起始时刻 {traj.t0}")
    mask = traj.times >= exclude_until
    times = traj.times[mask]
    d = sup_distances(traj, ref, coords)[mask]

    events = []
    last = d.size - 1
    for k in range(d.size):
        if d[k] >= eps:
            continue
        # 平台只报告第一个样本
        if (k == 0 or d[k] < d[k - 1]) and (k == last or d[k] <= d[k + 1]):
            events.append(RecurrenceEvent(t_return=float(times[k]), distance=float(d[k])))
    logger.debug(f"[Recurrence] eps={eps}，t>={exclude_until}：{len(events)} 次回归")
    return events


def min_distance_after(traj: Trajectory, ref, t: float, coords: Coordinates = None) -> float:
    """t 之后（含）的最小 sup 距离"""
    mask = traj.times >= t
    if not mask.any():
        raise ValueError(f"轨迹在 t>={t} 没有样本")
    return float(sup_distances(traj, ref, coords)[mask].min())
