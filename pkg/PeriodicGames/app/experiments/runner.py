import asyncio
import logging
import os
import time
from typing import Any, Dict, List, Optional

from app.core.config import config
from app.experiments.base_experiment import ExperimentResult
from app.experiments.experiment_registry import experiment_registry
from app.experiments.report import Report
from app.utils.io import write_json, write_ppm, write_trajectory_csv
from app.utils.plotting import PlotSpec, columns_from_trajectory, emit_svg

logger = logging.getLogger("ExperimentRunner")


def _write_outputs(result: ExperimentResult, job_dir: str) -> Dict[str, str]:
    """落盘实验产物，返回相对 job_dir 的路径"""
    outputs = {}
    if result.trajectory is not None:
        write_trajectory_csv(result.trajectory, os.path.join(job_dir, "trajectory.csv"))
        outputs["trajectory"] = "trajectory.csv"
    for k, (t, image) in enumerate(result.frames):
        filename = f"frame_{t:.3f}.ppm"
        write_ppm(image, os.path.join(job_dir, filename))
        outputs[f"frame_{k}"] = filename
    if result.trajectory is not None and result.plot_series:
        plot = PlotSpec(series=result.plot_series, output=os.path.join(job_dir, "plot.svg"),
                        title=result.report.spec.name)
        emit_svg(plot, columns_from_trajectory(result.trajectory, result.plot_data))
        outputs["plot"] = "plot.svg"
    return outputs


def _finish(result: ExperimentResult, started: float, outdir: Optional[str]) -> Report:
    report = result.report
    name = report.spec.name
    if outdir is not None:
        job_dir = os.path.join(outdir, name)
        report.outputs = _write_outputs(result, job_dir)
        report.outputs["report"] = "report.json"
    report.wall_clock = time.perf_counter() - started
    if outdir is not None:
        write_json(report.model_dump(mode="json"), os.path.join(outdir, name, "report.json"))
    failed = [check for check, ok in report.checks.items() if not ok]
    if failed:
        logger.warning(f"[Runner] {name} 未通过检查: {', '.join(failed)}")
    else:
        logger.info(f"[Runner] {name} 完成，用时 {report.wall_clock:.2f}s，所有检查通过")
    return report


def run_named(name: str, overrides: Optional[Dict[str, Any]] = None, seed: Optional[int] = None,
              outdir: Optional[str] = None) -> Report:
    """运行一个命名实验

    Args:
        name: 已注册的实验名称
        overrides: 参数覆盖，值可以是字符串（按参数类型转换）
        seed: 随机种子，缺省取配置中的 DEFAULT_SEED
        outdir: 输出根目录；为 None 时不落盘

    Returns:
        Report: 实验报告
    """
    experiment = experiment_registry.get_experiment_instance(name)
    params = experiment.resolve_params(overrides)
    seed = config.DEFAULT_SEED if seed is None else seed
    logger.info(f"[Runner] 运行 {name} (seed={seed})")
    started = time.perf_counter()
    return _finish(experiment.run(params, seed), started, outdir)


async def run_named_async(name: str, overrides: Optional[Dict[str, Any]] = None, seed: Optional[int] = None,
                          outdir: Optional[str] = None) -> Report:
    experiment = experiment_registry.get_experiment_instance(name)
    params = experiment.resolve_params(overrides)
    seed = config.DEFAULT_SEED if seed is None else seed
    started = time.perf_counter()
    result = await experiment.execute(params, seed)
    return _finish(result, started, outdir)


async def _gather_all(names: List[str], seed: Optional[int], outdir: Optional[str]):
    tasks = [run_named_async(name, seed=seed, outdir=outdir) for name in names]
    return await asyncio.gather(*tasks, return_exceptions=True)


def run_all(seed: Optional[int] = None, outdir: Optional[str] = None,
            names: Optional[List[str]] = None) -> Dict[str, Any]:
    """并发运行全部（或指定的）实验，每个实验写入各自的子目录

    Returns:
        Dict[str, Any]: 名称 -> Report，失败的实验对应异常对象
    """
    names = names or experiment_registry.get_names()
    results = asyncio.run(_gather_all(names, seed, outdir))
    outcome = {}
    for name, result in zip(names, results):
        if isinstance(result, Exception):
            logger.warning(f"[Runner] {name} 运行失败: {result}")
        outcome[name] = result
    return outcome
