from typing import Iterable, Optional


class PeriodicGamesError(ValueError):
    """所有领域错误的基类"""


class ScheduleError(PeriodicGamesError):
    """收益时间表不合法：区间覆盖有缺口、重叠或周期不一致"""


class ShapeError(PeriodicGamesError):
    """维度不匹配或玩家编号不存在"""


class DomainError(PeriodicGamesError):
    """数学定义域之外的输入，例如 log 0 或支撑集不包含"""


class NumericError(PeriodicGamesError):
    """输入中含有 NaN"""


class UnsupportedGameError(PeriodicGamesError):
    """该操作不支持此类博弈（例如三人及以上的博弈值）"""


class DivergenceError(PeriodicGamesError):
    """积分过程中状态出现 NaN/Inf"""

    def __init__(self, t: float, message: Optional[str] = None):
        self.t = t
        super().__init__(message or f"积分在 t={t:.17g} 处发散 (NaN/Inf)")


class UnknownExperimentError(PeriodicGamesError):
    """实验名称未注册"""

    def __init__(self, name: str, registered: Iterable[str]):
        self.name = name
        self.registered = sorted(registered)
        super().__init__(f"未知实验 '{name}'，已注册: {', '.join(self.registered)}")
