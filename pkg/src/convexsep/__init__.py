"""Convex separation toolkit: minimum-distance search over oracle-presented sets."""

from .engine import (
    MemoryBuffer,
    OracleAnswer,
    Outcome,
    RunConfig,
    RunRecord,
    Witness,
    certify_witness,
    check_stop_witness,
    compute_epsilon,
    run,
    step_memory,
    step_plain,
)
from .errors import (
    BudgetExceeded,
    ConvexSepError,
    DegenerateDirection,
    DimensionMismatch,
    ExactOracleUnavailable,
    InsufficientData,
    NonConvergence,
    NonUnitVector,
    NoSeparation,
    Stalled,
)
from .fits import SlopeFit, fit_exponential, fit_loglog_slope
from .hullproj import HullProjection, kkt_residual, project
from .sets import (
    BallSet,
    BoxSet,
    ConvexBody,
    HullSet,
    ProductHullSet,
    SetMetadata,
    exact_hull_distance,
    set_from_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]
