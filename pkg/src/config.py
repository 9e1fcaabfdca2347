"""
Central configuration: reads environment variables and defines constants.
"""

import os
from fractions import Fraction
from pathlib import Path

# ── Paths ────────────────────────────────────────────────────────────────────
PROJECT_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.getenv("ICP_DATA_DIR", str(PROJECT_ROOT / "data")))
RUNS_DIR = DATA_DIR / "runs"

FACTORS_FILE = DATA_DIR / "factors.json"          # irreducible factors h1..h23
KNOWN_ICPS_FILE = DATA_DIR / "known_icps.json"   # published polynomials, degrees 147..244
SMALL_ICPS_FILE = DATA_DIR / "small_icps.json"    # seeds for small-degree bounds

# ── Telegram (optional run reports) ──────────────────────────────────────────
TELEGRAM_BOT_TOKEN: str = os.getenv("TELEGRAM_BOT_TOKEN", "")
TELEGRAM_CHAT_ID: str = os.getenv("TELEGRAM_CHAT_ID", "")
TELEGRAM_API_URL = f"https://api.telegram.org/bot{TELEGRAM_BOT_TOKEN}"
TELEGRAM_TIMEOUT = 30              # seconds

# ── Norm oracle ──────────────────────────────────────────────────────────────
DEFAULT_REL_TOL = Fraction(1, 10**12)
ROOT_PRECISION_BITS = 80           # scaling used for certified n-th roots
MAX_REFINE_ROUNDS = 60             # bracket halvings before a point is kept as-is

# ── Cutting plane (LSIP) ─────────────────────────────────────────────────────
CUT_EPS_FACTOR = Fraction(1, 10**10)   # eps = factor × incumbent norm
CUT_MAX_ITERATIONS = 50
POINT_DENOMINATOR_BITS = 20        # discretization points are dyadic rationals

# ── Branch and bound ─────────────────────────────────────────────────────────
C0_INFLATION = Fraction(1, 10**9)  # c_0 is multiplied by (1 + this)
CHECKPOINT_INTERVAL = float(os.getenv("ICP_CHECKPOINT_SECONDS", "600"))

# ── Forced factors / resultant search ────────────────────────────────────────
DEDUCTION_MAX_DENOMINATOR = 8      # candidates ax - b with 1 <= a <= 8
POOL_MAX_DENOMINATOR = 12          # evaluation fractions w/v with v <= 12
LP_BOUND_POINTS = 200              # discretization size for coefficient ranges

# ── Combined search ──────────────────────────────────────────────────────────
HANDOFF_REMAINING = 11             # unknown coefficients left for the resultant search
WORKER_COUNT = int(os.getenv("ICP_WORKERS", "1"))

# ── Reporting ────────────────────────────────────────────────────────────────
T_DECIMALS = 8                     # published t values are rounded up to this many places
