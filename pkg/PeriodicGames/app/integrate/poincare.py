import logging
from typing import Callable, Optional

import numpy as np

from app.dynamics.fields import VectorField
from app.integrate.integrator import IntegratorConfig, as_flat, integrate

logger = logging.getLogger("Poincare")

StateMap = Callable[[np.ndarray], np.ndarray]


def poincare_map(field: VectorField, s, period: float, k: int = 1,
                 cfg: Optional[IntegratorConfig] = None, t0: float = 0.0) -> np.ndarray:
    """φ^{kT}(s)：从 t0 出发恰好积分 k 个周期后的状态"""
    if k < 1:
        raise ValueError(f"周期数 k 必须 >= 1，收到 {k}")
    if not period > 0:
        raise ValueError(f"周期必须为正，收到 {period}")
    # 只需要终点，稀疏采样以免保存整条轨迹
    cfg = cfg or IntegratorConfig()
    sparse = IntegratorConfig(cfg.step, cfg.method, cfg.rtol, cfg.atol, sample_every=1 << 30)
    traj = integrate(field, as_flat(field, s), t0, t0 + k * period, sparse)
    return traj.final.copy()


def period_map(field: VectorField, period: float, cfg: Optional[IntegratorConfig] = None,
               t0: float = 0.0) -> StateMap:
    return lambda s: poincare_map(field, s, period, 1, cfg, t0)


def map_jacobian_fd(state_map: StateMap, s, bump: float) -> np.ndarray:
    """中心差分 Jacobian：第 i 列为 (F(s + b e_i) - F(s - b e_i)) / 2b

    Args:
        state_map: 状态到状态的映射
        s: 求导点
        bump: 差分步长 (> 0)

    Returns:
        np.ndarray: d×d 矩阵
    """
    if not bump > 0:
        raise ValueError(f"差分步长必须为正，收到 {bump}")
    s = np.asarray(s, dtype=float).ravel()
    columns = []
    for i in range(s.size):
        e = np.zeros_like(s)
        e[i] = bump
        columns.append((np.asarray(state_map(s + e)) - np.asarray(state_map(s - e))) / (2.0 * bump))
    jac = np.column_stack(columns)
    logger.debug(f"[Poincare] {s.size}×{s.size} 差分 Jacobian，bump={bump}")
    return jac
