from enum import Enum
from typing import Tuple

import numpy as np
from scipy.special import logsumexp, softmax, xlogy

from app.core.errors import DomainError, NumericError


class Regularizer(str, Enum):
    # h(x) = Σ x_α log x_α，对应复制子动力学
    ENTROPIC = "entropic"
    # h(x) = ½‖x‖²
    EUCLIDEAN = "euclidean"


def _check_finite(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.isnan(y).any():
        raise NumericError(f"选择映射的输入含有 NaN: {y.tolist()}")
    return y


def project_simplex(y: np.ndarray) -> np.ndarray:
    """欧氏投影到单纯形：argmin_{x ∈ Δ} ‖x - y‖²，先排序再取阈值"""
    u = np.sort(y)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, y.size + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def choice_map(reg: Regularizer, y) -> np.ndarray:
    """Q(y) = argmax_{x ∈ Δ} <x, y> - h(x)

    Args:
        reg: 正则化函数类型
        y: 累计收益向量

    Returns:
        np.ndarray: 混合策略
    """
    y = _check_finite(y)
    if reg is Regularizer.ENTROPIC:
        # scipy 的 softmax 内部先减去最大值，y 线性增长时不会溢出
        return softmax(y)
    return project_simplex(y)


def regularizer_value(reg: Regularizer, x) -> float:
    """h(x)，约定 0·log0 = 0"""
    x = np.asarray(x, dtype=float)
    if reg is Regularizer.ENTROPIC:
        return float(xlogy(x, x).sum())
    return 0.5 * float(x @ x)


def conjugate(reg: Regularizer, y) -> float:
    """凸共轭 h*(y) = max_{x ∈ Δ} <x, y> - h(x)"""
    y = _check_finite(y)
    if reg is Regularizer.ENTROPIC:
        return float(logsumexp(y))
    x = project_simplex(y)
    return float(x @ y) - 0.5 * float(x @ x)


def regularizer_range(reg: Regularizer, n: int) -> Tuple[float, float]:
    """单纯形上 h 的 (最小值, 最大值)；最小值在均匀策略，最大值在顶点"""
    if n < 1:
        raise DomainError(f"动作数必须为正，收到 {n}")
    if reg is Regularizer.ENTROPIC:
        return -float(np.log(n)), 0.0
    return 0.5 / n, 0.5
