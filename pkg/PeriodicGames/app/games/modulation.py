import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Dict

from app.core.errors import DomainError


class ModulationKind(str, Enum):
    CONSTANT = "constant"
    SINE = "sine"
    LINEAR = "linear"
    # c * t^p，只用于非周期的反例博弈 (A(t) = 1/t^2)
    POWER = "power"


@dataclass(frozen=True)
class Modulation:
    """标量调制函数 m(t)，在所属区间内光滑

    各类型使用的参数：
        CONSTANT: value
        SINE: amplitude * sin(angular_frequency * t + phase)
        LINEAR: slope * t + intercept
        POWER: coefficient * t ** exponent
    """
    kind: ModulationKind
    value: float = 0.0
    amplitude: float = 1.0
    angular_frequency: float = 1.0
    phase: float = 0.0
    slope: float = 0.0
    intercept: float = 0.0
    coefficient: float = 1.0
    exponent: float = 1.0

    @classmethod
    def constant(cls, value: float) -> "Modulation":
        return cls(ModulationKind.CONSTANT, value=float(value))

    @classmethod
    def sine(cls, amplitude: float = 1.0, angular_frequency: float = 1.0, phase: float = 0.0) -> "Modulation":
        return cls(ModulationKind.SINE, amplitude=float(amplitude),
                   angular_frequency=float(angular_frequency), phase=float(phase))

    @classmethod
    def linear(cls, slope: float, intercept: float) -> "Modulation":
        return cls(ModulationKind.LINEAR, slope=float(slope), intercept=float(intercept))

    @classmethod
    def power(cls, coefficient: float, exponent: float) -> "Modulation":
        return cls(ModulationKind.POWER, coefficient=float(coefficient), exponent=float(exponent))

    def __call__(self, t: float) -> float:
        if self.kind is ModulationKind.CONSTANT:
            return self.value
        if self.kind is ModulationKind.SINE:
            return self.amplitude * math.sin(self.angular_frequency * t + self.phase)
        if self.kind is ModulationKind.LINEAR:
            return self.slope * t + self.intercept
        if self.exponent < 0 and t <= 0:
            raise DomainError(f"负指数的幂函数调制在 t={t} 处没有定义（要求 t > 0）")
        return self.coefficient * t ** self.exponent

    def to_dict(self) -> Dict[str, Any]:
        """只导出当前类型用到的参数（对应 JSON 博弈描述中的 "mod" 字段）"""
        used = {
            ModulationKind.CONSTANT: ("value",),
            ModulationKind.SINE: ("amplitude", "angular_frequency", "phase"),
            ModulationKind.LINEAR: ("slope", "intercept"),
            ModulationKind.POWER: ("coefficient", "exponent"),
        }[self.kind]
        data = asdict(self)
        return {"kind": self.kind.value, **{key: data[key] for key in used}}
