import logging
from typing import Optional

import numpy as np

from app.dynamics.fields import VectorField
from app.integrate.integrator import IntegratorConfig, as_flat
from app.integrate.poincare import map_jacobian_fd, period_map

logger = logging.getLogger("Volume")


def divergence_trace(field: VectorField, t: float, s, bump: float = 1e-5) -> float:
    """Σ_i ∂f_i/∂s_i，中心差分"""
    if not bump > 0:
        raise ValueError(f"差分步长必须为正，收到 {bump}")
    s = as_flat(field, s)
    trace = 0.0
    for i in range(s.size):
        e = np.zeros_like(s)
        e[i] = bump
        trace += (field(t, s + e)[i] - field(t, s - e)[i]) / (2.0 * bump)
    return float(trace)


def volume_ratio(field: VectorField, period: float, s, bump: float = 1e-4,
                 cfg: Optional[IntegratorConfig] = None) -> float:
    """|det Dφ^T(s)|，Dφ^T 由中心差分近似"""
    jac = map_jacobian_fd(period_map(field, period, cfg), as_flat(field, s), bump)
    ratio = abs(float(np.linalg.det(jac)))
    logger.debug(f"[Volume] {field.kind} 周期映射体积比 {ratio:.12f}")
    return ratio
