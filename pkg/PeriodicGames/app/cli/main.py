import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.table import Table

from app.core.config import config
from app.core.errors import DomainError, PeriodicGamesError, UnknownExperimentError
from app.dynamics import Regularizer, make_field, payoffs_from_strategies
from app.games import BilinearGame, check_game, load_game
from app.integrate import IntegratorConfig, integrate

logger = logging.getLogger("CLI")

console = Console()

LOG_FORMAT = "[%(asctime)s] %(levelname)s - %(name)s: %(message)s"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """命令行参数本身有误"""


def setup_logging(level: Optional[str] = None) -> None:
    """配置根日志记录器：控制台输出到 stderr，配置了 LOG_DIR 时同时写文件"""
    root_logger = logging.getLogger()
    root_logger.setLevel((level or config.LOG_LEVEL).upper())
    # 只替换本函数安装的处理器，重复调用不会叠加输出
    for handler in [h for h in root_logger.handlers if getattr(h, "_periodic_games", False)]:
        root_logger.removeHandler(handler)
        handler.close()

    log_format = logging.Formatter(LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_DIR:
        os.makedirs(config.LOG_DIR, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(config.LOG_DIR, "periodic_games.log"), encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(log_format)
        handler._periodic_games = True
        root_logger.addHandler(handler)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def _parse_overrides(items: Optional[List[str]]) -> Dict[str, str]:
    overrides = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"覆盖参数必须写成 k=v，收到 '{item}'")
        overrides[key.strip()] = value.strip()
    return overrides


def _initial_state(dynamics: str, reg: Regularizer, x0: Any):
    if not isinstance(x0, list) or not all(isinstance(xi, list) for xi in x0):
        raise UsageError("--x0 必须是每名玩家一个数组的 JSON，例如 [[0.7,0.3],[0.4,0.6]]")
    if dynamics == "gda":
        return np.concatenate([np.asarray(xi, dtype=float) for xi in x0])
    if dynamics == "ftrl":
        return payoffs_from_strategies(reg, x0).flatten()
    return [np.asarray(xi, dtype=float) for xi in x0]


def cmd_simulate(args) -> int:
    from app.analysis import coupling_functional, gda_energy, invariant_drift, time_average
    from app.utils.io import write_json, write_trajectory_csv

    game = load_game(args.game)
    reg = Regularizer(args.regularizer)
    field = make_field(game, args.dynamics, reg)
    s0 = _initial_state(args.dynamics, reg, json.loads(args.x0))

    if game.period is None:
        if args.step is None or args.t1 is None:
            raise UsageError("非周期博弈需要显式给出 --step 和 --t1")
        t1 = args.t1
    else:
        t1 = args.t0 + args.periods * game.period
    cfg = IntegratorConfig(step=args.step, method=args.method)
    traj = integrate(field, s0, args.t0, t1, cfg)

    summary: Dict[str, Any] = {"game": game.name, "dynamics": args.dynamics, "t0": traj.t0, "t1": traj.t1,
                               "samples": len(traj), "time_average": time_average(traj).tolist()}
    if args.dynamics == "gda":
        summary["gda_energy"] = invariant_drift(traj, gda_energy, "gda_energy").model_dump()
    else:
        try:
            functional = coupling_functional(game, reg, traj.kind)
            summary["fenchel_coupling"] = invariant_drift(traj, functional, "fenchel_coupling").model_dump()
        except DomainError as e:
            logger.warning(f"[CLI] 跳过 Fenchel 耦合: {e}")

    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(traj, os.path.join(args.out, "trajectory.csv"))
    write_json(summary, os.path.join(args.out, "summary.json"))
    console.print(f"已写出 {len(traj)} 个样本到 {args.out}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from app.experiments.runner import run_all, run_named

    outdir = config.output_dir(args.out)
    overrides = _parse_overrides(args.override)
    if args.name == "all":
        if overrides:
            raise UsageError("--name all 不接受 --override")
        outcome = run_all(seed=args.seed, outdir=outdir)
    else:
        outcome = {args.name: run_named(args.name, overrides, args.seed, outdir)}

    table = Table(title=f"实验结果 ({outdir})")
    table.add_column("实验", no_wrap=True)
    table.add_column("结果")
    table.add_column("用时 (s)", justify="right")
    status = EXIT_OK
    for name, report in outcome.items():
        if isinstance(report, Exception):
            table.add_row(name, f"[red]错误: {report}[/red]", "-")
            status = EXIT_VALIDATION
            continue
        failed = [check for check, ok in report.checks.items() if not ok]
        if failed:
            status = EXIT_VALIDATION
        table.add_row(name, "[green]通过[/green]" if not failed else f"[red]未通过: {', '.join(failed)}[/red]",
                      f"{report.wall_clock:.2f}")
    console.print(table)
    return status


def cmd_check(args) -> int:
    game = load_game(args.game)
    rows = check_game(game, samples=args.samples, seed=args.seed)
    table = Table(title=f"博弈检查: {game.name}")
    table.add_column("检查")
    table.add_column("最大残差", justify="right")
    table.add_column("结果")
    for name, row in rows.items():
        table.add_row(name, f"{row['value']:.3e}", "[green]ok[/green]" if row["passed"] else "[red]FAIL[/red]")
    console.print(table)
    return EXIT_OK if all(row["passed"] for row in rows.values()) else EXIT_VALIDATION


def cmd_analyze(args) -> int:
    from app.analysis import (
        coupling_functional,
        gda_energy,
        invariant_drift,
        min_distance_after,
        recurrence_scan,
        time_average,
    )
    from app.utils.io import read_trajectory_csv, write_json

    game = load_game(args.game)
    traj = read_trajectory_csv(args.trajectory, "gda" if isinstance(game, BilinearGame) else "")
    reg = Regularizer(args.regularizer)
    result: Dict[str, Any] = {"trajectory": args.trajectory, "samples": len(traj)}

    if args.invariant == "energy":
        if traj.kind != "gda":
            raise UsageError("能量函数只适用于 GDA 轨迹")
        result["gda_energy"] = invariant_drift(traj, gda_energy, "gda_energy").model_dump()
    elif args.invariant == "fenchel":
        functional = coupling_functional(game, reg, traj.kind)
        result["fenchel_coupling"] = invariant_drift(traj, functional, "fenchel_coupling").model_dump()

    if args.recurrence is not None:
        exclude = args.exclude_until
        if exclude is None:
            if game.period is None:
                raise UsageError("非周期博弈需要 --exclude-until")
            exclude = traj.t0 + game.period
        # 策略空间轨迹在 z 空间中比较
        scan = traj.to_z() if traj.kind in ("ftrl", "replicator") and reg is Regularizer.ENTROPIC else traj
        events = recurrence_scan(scan, scan.initial, args.recurrence, exclude)
        result["recurrence"] = [event.model_dump() for event in events]
        result["min_distance"] = min_distance_after(scan, scan.initial, exclude)

    if args.time_average:
        result["time_average"] = dict(zip(traj.labels, time_average(traj).tolist()))

    if args.out:
        write_json(result, args.out)
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_plot(args) -> int:
    from app.utils.io import read_json, read_trajectory_csv
    from app.utils.plotting import PlotSpec, columns_from_report, columns_from_trajectory, emit_svg

    if args.input.endswith(".json"):
        columns = columns_from_report(read_json(args.input))
    else:
        columns = columns_from_trajectory(read_trajectory_csv(args.input))
    plot = PlotSpec(series=args.series.split(","), output=args.out, title=args.title)
    emit_svg(plot, columns)
    console.print(f"已写出 {args.out}")
    return EXIT_OK


def cmd_list(args) -> int:
    from app.experiments.experiment_registry import experiment_registry

    table = Table(title="已注册的实验")
    table.add_column("名称", no_wrap=True)
    table.add_column("说明")
    table.add_column("参数")
    for definition in experiment_registry.get_definitions():
        params = ", ".join(f"{p['name']}={p['default']}" for p in definition["parameters"])
        table.add_row(definition["name"], definition["description"], params)
    console.print(table)
    return EXIT_OK


# ---------------------------------------------------------------------------
# 参数解析
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="periodic-games", description="周期零和博弈中学习动力学的数值实验")
    parser.add_argument("--log-level", default=None, help="日志级别，默认取 LOG_LEVEL 环境变量")
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="随机种子")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="积分一个博弈描述文件上的动力学")
    p.add_argument("--game", required=True, help="博弈描述 JSON")
    p.add_argument("--dynamics", required=True, choices=["gda", "ftrl", "replicator"])
    p.add_argument("--regularizer", default="entropic", choices=["entropic", "euclidean"])
    p.add_argument("--x0", required=True, help="初始策略 JSON，每名玩家一个数组")
    p.add_argument("--periods", type=float, default=1.0, help="积分周期数")
    p.add_argument("--step", type=float, default=None, help="RK4 步长，默认 1e-3·T")
    p.add_argument("--method", default="rk4", choices=["rk4", "rk45"])
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, default=None, help="非周期博弈的终止时刻")
    p.add_argument("--out", required=True, help="输出目录")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("reproduce", help="运行命名实验")
    p.add_argument("--name", required=True, help="实验名称，或 all")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="随机种子")
    p.add_argument("--override", action="append", metavar="K=V", help="覆盖实验参数，可重复")
    p.add_argument("--out", default=None, help="输出根目录，默认 PERIODIC_GAMES_OUT")
    p.set_defaults(handler=cmd_reproduce)

    p = sub.add_parser("check", help="检查博弈的零和、周期性与均衡残差")
    p.add_argument("--game", required=True)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="随机联合策略的种子")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("analyze", help="分析轨迹 CSV")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--game", required=True)
    p.add_argument("--regularizer", default="entropic", choices=["entropic", "euclidean"])
    p.add_argument("--recurrence", type=float, default=None, metavar="EPS")
    p.add_argument("--exclude-until", type=float, default=None, help="回归扫描忽略此前的样本，默认 t0 + T")
    p.add_argument("--invariant", choices=["energy", "fenchel"], default=None)
    p.add_argument("--time-average", action="store_true")
    p.add_argument("--out", default=None, help="同时写出 JSON 结果")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("plot", help="把轨迹 CSV 或报告中的序列画成 SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--series", required=True, help="逗号分隔的序列名")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default=None)
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("list", help="列出已注册的实验")
    p.set_defaults(handler=cmd_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    setup_logging(args.log_level)

    try:
        return args.handler(args)
    except UnknownExperimentError as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PeriodicGamesError as e:
        logger.error(f"[CLI] {args.command} 失败: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, KeyError, OSError) as e:
        # JSON/pydantic 解析错误、缺失文件与非法参数都按用法错误处理
        print(f"用法错误: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
