import os

import numpy as np
import pytest

from app.games import load_game, sine_mp_game

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURE_DIR, name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sin_mp():
    """γ(t) = sin(t) 缩放的两人 Matching Pennies，T = 2π"""
    return sine_mp_game()


@pytest.fixture
def toroid4():
    return load_game(fixture_path("toroid4.json"))


@pytest.fixture
def output_env(tmp_path, monkeypatch):
    """把默认输出目录重定向到临时目录"""
    monkeypatch.setenv("PERIODIC_GAMES_OUT", str(tmp_path / "out"))
    return tmp_path / "out"


@pytest.fixture
def fixture_file():
    return fixture_path
