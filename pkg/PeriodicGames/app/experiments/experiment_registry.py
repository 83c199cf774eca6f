import logging
from typing import Any, Dict, List, Optional, Type

from app.core.errors import UnknownExperimentError
from app.experiments.base_experiment import BaseExperiment
from app.experiments.catalog import BUILTIN_EXPERIMENTS

logger = logging.getLogger("ExperimentRegistry")


class ExperimentRegistry:
    """实验注册表，按名称管理所有命名实验"""

    def __init__(self):
        self._experiments: Dict[str, Type[BaseExperiment]] = {}  # 实验名称 -> 实验类
        self.register_builtin_experiments()

    def register_builtin_experiments(self):
        for experiment_class in BUILTIN_EXPERIMENTS:
            self.register_experiment(experiment_class)
        logger.debug(f"[ExperimentRegistry] 已注册 {len(BUILTIN_EXPERIMENTS)} 个内置实验")

    def register_experiment(self, experiment_class: Type[BaseExperiment]) -> bool:
        """注册实验

        Args:
            experiment_class: 实验类

        Returns:
            bool: 是否注册成功
        """
        name = experiment_class.name
        if name in self._experiments:
            logger.warning(f"[ExperimentRegistry] 实验 '{name}' 已存在，跳过注册")
            return False
        self._experiments[name] = experiment_class
        return True

    def unregister_experiment(self, name: str) -> bool:
        if name not in self._experiments:
            logger.warning(f"[ExperimentRegistry] 实验 '{name}' 不存在，跳过注销")
            return False
        self._experiments.pop(name)
        return True

    def get_experiment(self, name: str) -> Optional[Type[BaseExperiment]]:
        return self._experiments.get(name)

    def get_experiment_instance(self, name: str) -> BaseExperiment:
        """获取实验实例

        Raises:
            UnknownExperimentError: 名称未注册，错误信息列出所有已注册名称
        """
        experiment_class = self.get_experiment(name)
        if experiment_class is None:
            raise UnknownExperimentError(name, self._experiments)
        return experiment_class()

    def get_all_experiments(self) -> List[Type[BaseExperiment]]:
        return list(self._experiments.values())

    def get_names(self) -> List[str]:
        return list(self._experiments)

    def get_definitions(self) -> List[Dict[str, Any]]:
        return [experiment_class.get_definition() for experiment_class in self.get_all_experiments()]

    def is_registered(self, name: str) -> bool:
        return name in self._experiments


# 创建全局实验注册表实例
experiment_registry = ExperimentRegistry()
