import os

from dotenv import load_dotenv

load_dotenv()

# ─── Paths ───────────────────────────────────────────────
CACHE_DIR = os.getenv("QONSENSUS_CACHE_DIR", os.path.join(".cache", "ensembles"))
LOG_DIR = os.getenv("QONSENSUS_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("QONSENSUS_LOG_LEVEL", "INFO")

# ─── Ensemble Generation ────────────────────────────────
DEFAULT_ENSEMBLE_SIZE = 100  # Base clusterings per dataset
DEFAULT_MAX_ITERS = 100  # Lloyd iteration cap
DEFAULT_N_INIT = 10  # Random-center restarts per member, lowest inertia kept
K_MIN = 2  # Lower end of the random K range
K_RANGE_FACTOR = 3  # Upper end is K_RANGE_FACTOR * K̃

# ─── Model Compilation ──────────────────────────────────
QUANTIZATION_SCALE = 100  # Similarities live on the integer scale [0, 100]
PAIRWISE_PENALTY = 2**14  # One-hot weight A for the similarity model
CORRELATION_PENALTY = 2**15  # One-hot weight B for the correlation model
MAX_COEFFICIENT = 2**63 - 1

# ─── Annealer ────────────────────────────────────────────
DEFAULT_RUNS = 8
DEFAULT_SWEEPS = 2000  # Stands in for the three-second budget at Iris scale
DEFAULT_T_FINAL = 1.0
DEFAULT_OFFSET_INCREMENT = None  # None scales it to the model, see offset_step()
DEFAULT_WORKERS = int(os.getenv("QONSENSUS_WORKERS", "1"))

# ─── Oracle Guards ───────────────────────────────────────
MAX_ENUMERATION_POINTS = 12
MAX_CONSENSUS_POINTS = 10
MAX_BRUTE_FORCE_VARS = 24

# ─── Reporting ───────────────────────────────────────────
RECORD_SCHEMA_VERSION = 1
BEST_THRESHOLD = 0.0025  # Methods within this of the best mean ARI tie for best
FLOAT_DIGITS = 6

METHODS = ["da-sm", "da-cr", "da-bin", "hac"]
K_MODES = ["k_true", "2k_true", "explicit"]
