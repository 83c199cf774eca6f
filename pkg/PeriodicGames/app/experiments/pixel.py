from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import expit, logit

from app.core.errors import ShapeError


class PixelCode(BaseModel):
    """x_{i,1} ↦ 255·σ(gain·(x_{i,1} - center))，灰度复制到 RGB 三个通道"""
    gain: float = Field(default=10.0, gt=0)
    center: float = 0.5


def first_action_probs(x: Union[Sequence[np.ndarray], np.ndarray]) -> np.ndarray:
    """联合策略中每名玩家第一个动作的概率"""
    if isinstance(x, np.ndarray) and x.ndim == 1:
        return x.astype(float)
    return np.array([float(np.asarray(xi)[0]) for xi in x])


def encode_channels(x, code: PixelCode, shape: Tuple[int, int]) -> np.ndarray:
    """量化前的通道值，H×W 浮点数，范围 (0, 255)"""
    probs = first_action_probs(x)
    height, width = shape
    if probs.size != height * width:
        raise ShapeError(f"{probs.size} 名玩家无法排成 {height}×{width} 的网格")
    return 255.0 * expit(code.gain * (probs - code.center)).reshape(height, width)


def encode_grid(x, code: PixelCode, shape: Tuple[int, int] = (8, 8)) -> np.ndarray:
    """按行优先把玩家映射到像素，返回 H×W×3 uint8 图像"""
    gray = np.rint(encode_channels(x, code, shape)).astype(np.uint8)
    return np.repeat(gray[:, :, None], 3, axis=2)


def decode_grid(channels: np.ndarray, code: PixelCode) -> np.ndarray:
    """encode 的逆映射：由通道值恢复 x_{i,1}（行优先展平）

    对 uint8 图像只使用第一个通道，精度受量化限制。
    """
    channels = np.asarray(channels, dtype=float)
    if channels.ndim == 3:
        channels = channels[:, :, 0]
    ratio = np.clip(channels / 255.0, 1e-12, 1.0 - 1e-12)
    return (code.center + logit(ratio) / code.gain).ravel()


def image_distance(a: np.ndarray, b: np.ndarray) -> float:
    """平均绝对通道差，归一化到 [0, 1]"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"图像尺寸不同: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)) / 255.0)
