from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from app.analysis.invariants import DriftReport
from app.analysis.recurrence import RecurrenceEvent


class ExperimentSpec(BaseModel):
    """一次命名实验的冻结参数"""
    name: str
    game: str
    dynamics: str
    regularizer: Optional[str] = None
    initial: List[List[float]]
    t0: float = 0.0
    horizon: float
    period: Optional[float] = None
    step: float
    method: str = "rk4"
    analyses: List[str] = Field(default_factory=list)
    seed: int = 0
    params: Dict[str, Any] = Field(default_factory=dict)


class Report(BaseModel):
    spec: ExperimentSpec
    drift: Dict[str, DriftReport] = Field(default_factory=dict)
    recurrence: Dict[str, List[RecurrenceEvent]] = Field(default_factory=dict)
    time_averages: Dict[str, List[float]] = Field(default_factory=dict)
    values: Dict[str, Any] = Field(default_factory=dict)
    # 每条序列都带自己的 "t" 键：{"name": {"t": [...], "value": [...]}}
    series: Dict[str, Dict[str, List[float]]] = Field(default_factory=dict)
    checks: Dict[str, bool] = Field(default_factory=dict)
    wall_clock: float = 0.0
    outputs: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _analyses_present_once(self):
        for analysis in self.spec.analyses:
            hits = sum(analysis in group for group in (self.drift, self.recurrence, self.time_averages, self.values))
            if hits != 1:
                raise ValueError(f"分析 '{analysis}' 在报告中出现 {hits} 次，应恰好一次")
        return self

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def deterministic_dump(self) -> Dict[str, Any]:
        """去掉墙钟时间后的内容，用于比较两次运行"""
        data = self.model_dump(mode="json")
        data.pop("wall_clock", None)
        return data
