# === 命令行入口: run_games.py ===
# 用法: python run_games.py reproduce --name tavg_gda --out output
import os
import sys

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
if BASE_DIR not in sys.path:
    sys.path.insert(0, BASE_DIR)

from app.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
