import logging
import math
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from app.core.errors import ShapeError
from app.games.models import BilinearGame, Edge, PolymatrixGame
from app.games.modulation import Modulation, ModulationKind
from app.games.schedule import PayoffSchedule, Segment

logger = logging.getLogger("GameLoader")

Game = Union[BilinearGame, PolymatrixGame]


class ModulationSpec(BaseModel):
    kind: ModulationKind
    value: float = 0.0
    amplitude: float = 1.0
    angular_frequency: float = 1.0
    phase: float = 0.0
    slope: float = 0.0
    intercept: float = 0.0
    coefficient: float = 1.0
    exponent: float = 1.0


class SegmentSpec(BaseModel):
    start: float
    # 非周期时间表的最后一个区间用 null 表示 +∞
    end: Optional[float] = None
    mod: ModulationSpec
    base: Optional[List[List[float]]] = None


class ScheduleSpec(BaseModel):
    base: List[List[float]]
    segments: List[SegmentSpec]


class EdgeSpec(ScheduleSpec):
    i: int
    j: int
    # 显式给出 A^{ji}(t)；缺省为 -m(t)·base^T
    reverse: Optional[ScheduleSpec] = None


class GameSpec(BaseModel):
    type: Literal["bilinear", "polymatrix"]
    period: Optional[float] = None
    players: int = 2
    name: str = "game"
    edges: List[EdgeSpec] = Field(default_factory=list)
    equilibrium: Optional[List[List[float]]] = None


def _build_schedule(spec: ScheduleSpec, period: Optional[float]) -> PayoffSchedule:
    segments = []
    for seg in spec.segments:
        end = seg.end if seg.end is not None else math.inf
        modulation = Modulation(**seg.mod.model_dump())
        segments.append(Segment(seg.start, end, modulation, None if seg.base is None else np.asarray(seg.base)))
    return PayoffSchedule(np.asarray(spec.base, dtype=float), tuple(segments), period)


def build_game(spec: GameSpec) -> Game:
    """把 JSON 博弈描述转换成博弈对象"""
    if spec.type == "bilinear":
        if len(spec.edges) != 1:
            raise ShapeError(f"双线性博弈必须恰好有一条边，收到 {len(spec.edges)}")
        return BilinearGame(_build_schedule(spec.edges[0], spec.period), spec.name)

    actions: List[Optional[int]] = [None] * spec.players
    edges = []
    for edge_spec in spec.edges:
        forward = _build_schedule(edge_spec, spec.period)
        if edge_spec.reverse is not None:
            backward = _build_schedule(edge_spec.reverse, spec.period)
        else:
            backward = forward.negated_transpose()
        for player, n in ((edge_spec.i, forward.shape[0]), (edge_spec.j, forward.shape[1])):
            if not 0 <= player < spec.players:
                raise ShapeError(f"边 ({edge_spec.i}, {edge_spec.j}) 引用了不存在的玩家 {player}")
            if actions[player] not in (None, n):
                raise ShapeError(f"玩家 {player} 的动作数不一致: {actions[player]} 与 {n}")
            actions[player] = n
        edges.append(Edge(edge_spec.i, edge_spec.j, forward, backward))
    if any(n is None for n in actions):
        raise ShapeError(f"存在不属于任何边的玩家: {[i for i, n in enumerate(actions) if n is None]}")

    equilibrium = None
    if spec.equilibrium is not None:
        equilibrium = tuple(np.asarray(xi, dtype=float) for xi in spec.equilibrium)
    return PolymatrixGame(tuple(actions), tuple(edges), equilibrium, spec.name)


def load_game(source: Union[str, Dict[str, Any], GameSpec]) -> Game:
    """从文件路径、字典或 GameSpec 加载博弈

    Args:
        source: JSON 文件路径、已解析的字典或 GameSpec

    Returns:
        Game: BilinearGame 或 PolymatrixGame
    """
    if isinstance(source, GameSpec):
        spec = source
    elif isinstance(source, dict):
        spec = GameSpec.model_validate(source)
    else:
        with open(source, "r", encoding="utf-8") as f:
            spec = GameSpec.model_validate_json(f.read())
    game = build_game(spec)
    logger.info(f"[Loader] 加载博弈 '{spec.name}' ({spec.type}, 周期 {spec.period})")
    return game


def _dump_schedule(schedule: PayoffSchedule) -> Dict[str, Any]:
    segments = []
    for seg in schedule.segments:
        item: Dict[str, Any] = {
            "start": seg.t_start,
            "end": seg.t_end if math.isfinite(seg.t_end) else None,
            "mod": seg.modulation.to_dict(),
        }
        if seg.base is not None:
            item["base"] = seg.base.tolist()
        segments.append(item)
    return {"base": schedule.base.tolist(), "segments": segments}


def dump_game(game: Game) -> Dict[str, Any]:
    """导出为 JSON 博弈描述（load_game 的逆操作）"""
    if isinstance(game, BilinearGame):
        return {"type": "bilinear", "name": game.name, "period": game.period, "players": 2,
                "edges": [{"i": 0, "j": 1, **_dump_schedule(game.schedule)}]}
    edges = []
    for edge in game.edges:
        item = {"i": edge.i, "j": edge.j, **_dump_schedule(edge.forward)}
        item["reverse"] = _dump_schedule(edge.backward)
        edges.append(item)
    data: Dict[str, Any] = {"type": "polymatrix", "name": game.name, "period": game.period,
                            "players": game.num_players, "edges": edges}
    if game.equilibrium is not None:
        data["equilibrium"] = [xi.tolist() for xi in game.equilibrium]
    return data
