import logging
import os
from typing import Any, Dict, List, Mapping, Optional, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from pydantic import BaseModel, Field, field_validator  # noqa: E402

from app.core.config import config  # noqa: E402
from app.integrate.integrator import Trajectory  # noqa: E402

logger = logging.getLogger("Plotting")

# 序列名 -> (横坐标, 纵坐标)
Columns = Dict[str, Tuple[np.ndarray, np.ndarray]]


class PlotSpec(BaseModel):
    series: List[str] = Field(min_length=1)
    output: str
    xlabel: str = "t"
    ylabel: str = ""
    title: Optional[str] = None

    @field_validator("series")
    @classmethod
    def _strip(cls, value: List[str]) -> List[str]:
        names = [name.strip() for name in value if name.strip()]
        if not names:
            raise ValueError("至少需要一条序列")
        return names

    def resolve(self, columns: Mapping[str, Any]) -> None:
        missing = [name for name in self.series if name not in columns]
        if missing:
            raise KeyError(f"找不到序列 {', '.join(missing)}，可用: {', '.join(columns)}")


def columns_from_trajectory(traj: Trajectory, extra: Optional[Mapping[str, np.ndarray]] = None) -> Columns:
    """轨迹的每一列以及与轨迹时刻对齐的附加序列"""
    columns = {label: (traj.times, traj.states[:, k]) for k, label in enumerate(traj.labels)}
    for name, values in (extra or {}).items():
        columns[name] = (traj.times, np.asarray(values, dtype=float))
    return columns


def columns_from_report(report: Mapping[str, Any]) -> Columns:
    """报告 JSON 中的 series 字段，每条序列带自己的时间轴"""
    return {
        name: (np.asarray(entry["t"], dtype=float), np.asarray(entry["value"], dtype=float))
        for name, entry in report.get("series", {}).items()
    }


def emit_svg(plot: PlotSpec, columns: Columns) -> str:
    """把所选序列画成折线图并写出独立的 SVG 文件

    输出对相同输入逐字节一致：固定哈希盐，不写日期元数据。

    Raises:
        KeyError: 序列不存在
        ValueError: 序列为空
    """
    plot.resolve(columns)
    for name in plot.series:
        x, y = columns[name]
        if len(x) == 0 or len(x) != len(y):
            raise ValueError(f"序列 '{name}' 为空或横纵坐标长度不一致")

    os.makedirs(os.path.dirname(os.path.abspath(plot.output)), exist_ok=True)
    with plt.rc_context({"svg.hashsalt": config.SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        try:
            for name in plot.series:
                x, y = columns[name]
                ax.plot(x, y, label=name, linewidth=1.0)
            ax.set_xlabel(plot.xlabel)
            if plot.ylabel:
                ax.set_ylabel(plot.ylabel)
            if plot.title:
                ax.set_title(plot.title)
            ax.legend(loc="best")
            fig.tight_layout()
            fig.savefig(plot.output, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.debug(f"[Plotting] 写出 {plot.output}（{len(plot.series)} 条序列）")
    return plot.output
