import os
from typing import Optional

from dotenv import load_dotenv

# 加载 .env 文件
load_dotenv()

# 获取PeriodicGames根目录
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


class Config:
    # --- Output Settings ---
    OUTPUT_DIR = os.getenv("PERIODIC_GAMES_OUT", os.path.join(BASE_DIR, "output"))
    CSV_SIGNIFICANT_DIGITS = 17
    # 固定 SVG 内部 id 的哈希盐，保证同样输入得到逐字节相同的图
    SVG_HASH_SALT = "periodic-games"

    # --- Integrator Settings ---
    # 默认 RK4 步长 = STEP_FRACTION * T
    STEP_FRACTION = float(os.getenv("PERIODIC_GAMES_STEP_FRACTION", "1e-3"))
    RK45_RTOL = 1e-9
    RK45_ATOL = 1e-12

    # --- Validation Settings ---
    RESIDUAL_TOLERANCE = 1e-10
    CHECK_SAMPLES = 100

    # --- Reproducibility ---
    DEFAULT_SEED = int(os.getenv("PERIODIC_GAMES_SEED", "0"))

    # --- System Paths ---
    LOG_DIR = os.getenv("LOG_DIR")
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    def output_dir(self, override: Optional[str] = None) -> str:
        """解析输出目录：命令行参数 > 环境变量 PERIODIC_GAMES_OUT > 默认目录"""
        if override:
            return override
        return os.getenv("PERIODIC_GAMES_OUT", self.OUTPUT_DIR)


config = Config()
