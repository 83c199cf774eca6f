import csv
import json
import logging
import os
from typing import Any, Dict

import numpy as np
from PIL import Image

from app.core.config import config
from app.integrate.integrator import Trajectory

logger = logging.getLogger("IO")


def format_number(value: float) -> str:
    return f"{value:.{config.CSV_SIGNIFICANT_DIGITS}g}"


def write_trajectory_csv(traj: Trajectory, path: str) -> str:
    """写出轨迹 CSV：表头 t,<label...>，每个样本一行，17 位有效数字"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t", *traj.labels])
        for t, state in zip(traj.times, traj.states):
            writer.writerow([format_number(t), *(format_number(v) for v in state)])
    logger.debug(f"[IO] 写出轨迹 {path} ({len(traj)} 行)")
    return path


def read_trajectory_csv(path: str, kind: str = "") -> Trajectory:
    """读取轨迹 CSV；kind 缺省时按列名前缀推断"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "t":
        raise ValueError(f"{path} 不是轨迹 CSV（表头必须以 t 开头）")
    labels = rows[0][1:]
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    if data.size == 0:
        raise ValueError(f"{path} 没有任何样本")
    return Trajectory(data[:, 0], data[:, 1:], labels, kind or infer_kind(labels))


def infer_kind(labels) -> str:
    prefixes = {label.split("_")[0].rstrip("0123456789") for label in labels}
    if prefixes == {"y"}:
        return "ftrl"
    if prefixes == {"z"}:
        return "z"
    if prefixes == {"x"}:
        # 两名玩家的无约束 GDA 与复制子同为 x 前缀，由调用方显式区分
        return "replicator"
    return ""


def write_json(data: Dict[str, Any], path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))
        f.write("\n")
    return path


def read_json(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_ppm(image: np.ndarray, path: str) -> str:
    """把 H×W×3 uint8 图像写成二进制 PPM (P6)"""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError(f"PPM 需要 H×W×3 的 uint8 图像，收到 {image.shape} {image.dtype}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(image).save(path, format="PPM")
    return path


def read_ppm(path: str) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
