"""Constants for shtarkov-lab configuration."""

import os

# Enumeration budgets (number of items an exhaustive search may visit)
DEFAULT_TREE_BUDGET = int(os.getenv("SHTARKOV_LAB_TREE_BUDGET", str(10**6)))
DEFAULT_SEQUENCE_BUDGET = int(os.getenv("SHTARKOV_LAB_SEQUENCE_BUDGET", str(10**6)))
DEFAULT_SIMPLEX_BUDGET = int(os.getenv("SHTARKOV_LAB_SIMPLEX_BUDGET", str(10**6)))
DEFAULT_COVER_BUDGET = int(os.getenv("SHTARKOV_LAB_COVER_BUDGET", str(10**6)))

# Global budget ceiling; every budget is clamped to it when set
GLOBAL_BUDGET_ENV = "SHTARKOV_LAB_BUDGET"

# Tolerances
DISTRIBUTION_TOLERANCE = 1e-12
NORMALIZATION_TOLERANCE = 1e-12
EQUALITY_TOLERANCE = 1e-9
SUBPROBABILITY_TOLERANCE = 1e-12
COVER_TOLERANCE = 1e-12
DESIGN_NORM_TOLERANCE = 1e-12
REGRET_ACCOUNTING_TOLERANCE = 1e-10

# Truncation
DEFAULT_DELTA_GRID = (0.1, 0.03, 0.01, 0.003, 0.001)
MAX_HORIZON_FOR_M = 62

# Projected-gradient maximizer for the linear class
PROJECTED_GRADIENT_ITERATIONS = 500
PROJECTED_GRADIENT_STEP = 0.1
PROJECTED_GRADIENT_TOLERANCE = 1e-10

# Grid-refinement fallback oracle
GRID_REFINE_POINTS = 101
GRID_REFINE_ROUNDS = 60

# Monte Carlo
DEFAULT_MC_SAMPLES = 10**5
DEFAULT_SEED = 0
