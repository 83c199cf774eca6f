import asyncio
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from app.experiments.report import Report
from app.integrate.integrator import Trajectory

logger = logging.getLogger("BaseExperiment")

# 写入 CSV 的最大行数，更长的轨迹按固定步幅抽稀
MAX_CSV_ROWS = 20000
# 报告中每条时间序列保留的点数
SERIES_POINTS = 201


class ExperimentParam:
    """实验可覆盖参数的定义"""

    def __init__(self, name: str, param_type: str, description: str, default: Any = None,
                 enum_values: Optional[List[str]] = None):
        self.name = name
        self.param_type = param_type
        self.description = description
        self.default = default
        self.enum_values = enum_values

    def to_dict(self) -> Dict[str, Any]:
        result = {
            "name": self.name,
            "type": self.param_type,
            "description": self.description,
            "default": self.default,
        }
        if self.enum_values:
            result["enum"] = self.enum_values
        return result

    def coerce(self, raw: Any) -> Any:
        """把命令行传入的字符串转换成参数类型"""
        if not isinstance(raw, str) or self.param_type == "string":
            return raw
        if self.param_type == "integer":
            return int(raw)
        if self.param_type == "float":
            return float(raw)
        if self.param_type == "boolean":
            if raw.lower() not in ("true", "false", "1", "0"):
                raise ValueError(f"参数 {self.name} 必须是布尔值，收到 '{raw}'")
            return raw.lower() in ("true", "1")
        return raw


@dataclass
class ExperimentResult:
    """一次实验运行的产物，由 runner 负责落盘"""
    report: Report
    trajectory: Optional[Trajectory] = None
    frames: List[Tuple[float, np.ndarray]] = field(default_factory=list)
    plot_series: List[str] = field(default_factory=list)
    plot_data: Dict[str, np.ndarray] = field(default_factory=dict)


class BaseExperiment(ABC):
    """所有命名实验的基类"""

    name: str = ""
    description: str = ""
    parameters: List[ExperimentParam] = []

    def __init__(self):
        if not self.name or not self.description:
            raise ValueError(f"实验类 {self.__class__.__name__} 必须定义 name 和 description 属性")

    @classmethod
    def get_definition(cls) -> Dict[str, Any]:
        return {
            "name": cls.name,
            "description": cls.description,
            "parameters": [param.to_dict() for param in cls.parameters],
        }

    def validate_params(self, **kwargs) -> Tuple[bool, str]:
        """验证覆盖参数

        Returns:
            Tuple[bool, str]: (是否验证通过, 错误信息)
        """
        known = {param.name: param for param in self.parameters}
        for key in kwargs:
            if key not in known:
                return False, f"未知参数: {key}，可选: {', '.join(known) or '无'}"
        for name, value in kwargs.items():
            param = known[name]
            if param.param_type == "string" and not isinstance(value, str):
                return False, f"参数 {name} 必须是字符串类型"
            elif param.param_type == "integer" and (isinstance(value, bool) or not isinstance(value, int)):
                return False, f"参数 {name} 必须是整数类型"
            elif param.param_type == "float" and (isinstance(value, bool) or not isinstance(value, (int, float))):
                return False, f"参数 {name} 必须是浮点数类型"
            elif param.param_type == "boolean" and not isinstance(value, bool):
                return False, f"参数 {name} 必须是布尔类型"
            if param.enum_values and value not in param.enum_values:
                return False, f"参数 {name} 必须是以下值之一: {', '.join(param.enum_values)}"
        return True, ""

    def resolve_params(self, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """合并默认值与覆盖值，字符串覆盖值会先按类型转换"""
        known = {param.name: param for param in self.parameters}
        coerced = {}
        for key, value in (overrides or {}).items():
            coerced[key] = known[key].coerce(value) if key in known else value
        ok, error = self.validate_params(**coerced)
        if not ok:
            raise ValueError(f"[{self.name}] {error}")
        params = {param.name: param.default for param in self.parameters}
        params.update(coerced)
        return params

    @abstractmethod
    def run(self, params: Dict[str, Any], seed: int) -> ExperimentResult:
        raise NotImplementedError("子类必须实现 run 方法")

    async def execute(self, params: Dict[str, Any], seed: int) -> ExperimentResult:
        """在执行器中运行同步的数值积分，避免阻塞事件循环"""
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, self.run, params, seed)


def thin(traj: Trajectory, max_rows: int = MAX_CSV_ROWS) -> Trajectory:
    """按固定步幅抽稀轨迹，保留首尾样本"""
    if len(traj) <= max_rows:
        return traj
    stride = math.ceil(len(traj) / max_rows)
    idx = np.arange(0, len(traj), stride)
    if idx[-1] != len(traj) - 1:
        idx = np.append(idx, len(traj) - 1)
    return Trajectory(traj.times[idx], traj.states[idx], traj.labels, traj.kind)


def downsample(times: np.ndarray, values: np.ndarray, points: int = SERIES_POINTS) -> Tuple[List[float], List[float]]:
    idx = np.unique(np.linspace(0, len(times) - 1, min(points, len(times))).round().astype(int))
    return [float(v) for v in times[idx]], [float(v) for v in np.asarray(values)[idx]]
