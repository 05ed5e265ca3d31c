"""Minimum-distance iteration over a convex set presented by a linear oracle.

Given a target ``r`` and a set ``S`` reachable only through a routine that
(approximately) maximizes linear functionals over ``S``, the engine builds a
sequence of points ``s_k`` in ``S`` with non-increasing distances to ``r``.
It answers the weak separation question: either some ``s_k`` comes within
``delta`` of ``r``, or a separating functional (witness) is certified from an
exact oracle answer.

Three operating modes fall out of one loop:

* plain (``memory=1``): each step moves along the segment from ``s_k`` to the
  oracle point, with the step size from :func:`compute_epsilon`;
* memory (``memory=m>1``): the last ``m`` oracle points are kept in a FIFO
  buffer and ``r`` is projected onto the hull of the buffer plus ``s_k``;
* heuristic oracle: the per-step oracle only lower-bounds the maximum; a
  plateau in the distance trace triggers a single exact-oracle call that can
  still certify separation (:func:`certify_witness`).
"""

from __future__ import annotations

import enum
import json
import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirection, DimensionMismatch, ExactOracleUnavailable, BudgetExceeded
from .hullproj import project

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class OracleAnswer:
    """Point of S returned by an oracle for some direction ``c``.

    ``overlap`` is ``c . point``; for an exact oracle this equals
    ``max_{s in S} c . s``, for a heuristic one it is only a lower bound
    (the point itself is still guaranteed to lie in S).
    """

    point: np.ndarray
    overlap: float
    exact: bool


@dataclass(frozen=True)
class Witness:
    """Separating functional certifying that the target lies outside S.

    ``direction`` is stored unit-norm; ``local_bound`` is the exact maximum
    of the functional over S, so ``margin = value_at_r - local_bound > 0``
    proves separation.
    """

    direction: np.ndarray
    local_bound: float
    value_at_r: float
    margin: float

    @property
    def dimension(self) -> int:
        return int(np.asarray(self.direction).size)

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "c": [float(v) for v in np.asarray(self.direction).ravel()],
            "local_bound": float(self.local_bound),
            "value_at_r": float(self.value_at_r),
            "margin": float(self.margin),
        }


@dataclass
class IterateState:
    """One engine iterate: counter, current point, exact distance, step size."""

    k: int
    s: np.ndarray
    d: float
    epsilon: float | None = None


class MemoryBuffer:
    """FIFO store of the last ``capacity`` oracle points.

    When a point is added to a full buffer the oldest entry is evicted;
    there is no deduplication here, the projection solver prunes duplicates.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: deque[np.ndarray] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[np.ndarray]:
        return list(self._entries)

    def add(self, point: np.ndarray) -> bool:
        """Append a point; returns True if the oldest entry was evicted."""
        evicted = len(self._entries) == self.capacity
        self._entries.append(np.asarray(point, float))
        return evicted


class Outcome(enum.Enum):
    INSIDE_WITHIN_DELTA = "inside_within_delta"
    SEPARATED = "separated"
    ITERATION_BUDGET_EXHAUSTED = "iteration_budget_exhausted"

    @property
    def exit_code(self) -> int:
        return {
            Outcome.INSIDE_WITHIN_DELTA: 0,
            Outcome.SEPARATED: 2,
            Outcome.ITERATION_BUDGET_EXHAUSTED: 3,
        }[self]


@dataclass
class RunConfig:
    """Knobs for :func:`run`.

    ``memory=1`` selects the plain variant.  ``stop_tolerance`` is both the
    numerical slack of the positive-overlap stopping test and the relative
    improvement threshold of the plateau detector (window
    ``plateau_window``).  Benchmark runs set ``stop_on_separation=False`` to
    record the full distance trace even after a witness is found.
    """

    delta: float = 1e-6
    max_iterations: int = 10_000
    memory: int = 1
    stop_tolerance: float = 1e-7
    plateau_window: int = 100
    diameter_hint: float | None = None
    rng_seed: int = 0
    initial_point: np.ndarray | None = None
    stop_on_separation: bool = True
    certify_on_plateau: bool = True
    projection_tol: float = 1e-10

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.stop_tolerance <= 0:
            raise ValueError("stop_tolerance must be > 0")


@dataclass
class RunRecord:
    """Full trace of one engine run.

    ``d_history[k]`` is the distance of iterate ``s_k`` (recomputed from the
    point, never accumulated), so it has one more entry than the per-step
    columns.  ``overlaps[k]`` holds the stopping-test quantity
    ``(r - s_k) . (r - s'_k)`` of step ``k``.
    """

    outcome: Outcome
    d_history: np.ndarray
    epsilons: np.ndarray
    overlaps: np.ndarray
    wallclock_us: np.ndarray
    witness: Witness | None
    separation_iteration: int | None
    final_point: np.ndarray
    config: RunConfig = field(repr=False, default=None)

    @property
    def iterations(self) -> int:
        return len(self.overlaps)

    @property
    def final_distance(self) -> float:
        return float(self.d_history[-1])

    def distance_at(self, k: int) -> float:
        """Distance after k iterations (checkpoint accessor)."""
        return float(self.d_history[k])

    def to_csv(self, fileobj) -> None:
        fileobj.write("k,d_k,epsilon_k,overlap,wallclock_us\n")
        for k in range(self.iterations):
            fileobj.write(
                f"{k},{self.d_history[k]:.17g},{self.epsilons[k]:.17g},"
                f"{self.overlaps[k]:.17g},{self.wallclock_us[k]:.17g}\n")

    def witness_json(self) -> str | None:
        if self.witness is None:
            return None
        return json.dumps(self.witness.to_json(), indent=2)


def compute_epsilon(d_vec, v_vec, tol: float | None = None) -> float:
    """Optimal convex-combination coefficient for one plain step.

    ``d_vec = r - s_k`` is the current residual and ``v_vec = d'_k - d_k =
    s_k - s'_k`` the residual drift of the step.  Returns
    ``min(-(d_vec . v_vec) / (v_vec . v_vec), 1)`` clamped to [0, 1]; when
    the unclamped value is below 1, the new residual is orthogonal to
    ``v_vec``.

    Raises :class:`DegenerateDirection` when ``||v_vec||`` falls below
    ``tol`` (default ``1e-12 * max(1, ||d_vec||)``), which signals that the
    oracle point coincides with the iterate, i.e. convergence.
    """
    d = np.asarray(d_vec, float)
    v = np.asarray(v_vec, float)
    vv = float(v @ v)
    if tol is None:
        tol = DEGENERACY_TOL * max(1.0, float(np.linalg.norm(d)))
    if math.sqrt(vv) < tol:
        raise DegenerateDirection("step direction below degeneracy tolerance")
    eps = -float(d @ v) / vv
    return min(max(eps, 0.0), 1.0)


def step_plain(state: IterateState, answer: OracleAnswer, r) -> tuple[IterateState, bool]:
    """Advance one plain step; returns (new state, converged flag).

    The degenerate case (oracle point equal to the iterate) does not raise:
    the iterate is kept and the flag is set, matching the convention that a
    zero step means the distance can no longer decrease.
    """
    r = np.asarray(r, float)
    v_step = answer.point - state.s
    try:
        eps = compute_epsilon(r - state.s, -v_step,
                              tol=DEGENERACY_TOL * max(1.0, state.d))
    except DegenerateDirection:
        return IterateState(state.k + 1, state.s, state.d, 0.0), True
    s_new = state.s + eps * v_step
    d_new = float(np.linalg.norm(r - s_new))
    if d_new > state.d:  # numerical guard, mathematically impossible
        return IterateState(state.k + 1, state.s, state.d, 0.0), False
    return IterateState(state.k + 1, s_new, d_new, eps), False


def step_memory(state: IterateState, answer: OracleAnswer, buffer: MemoryBuffer, r,
                tol: float = 1e-10, warm_weights=None) -> tuple[IterateState, np.ndarray]:
    """Advance one memory step; ``buffer`` must already contain ``answer.point``.

    Projects ``r`` onto the hull of the buffer entries plus the current
    iterate and returns the new state together with the projection weights
    (aligned to ``buffer.entries + [state.s]``), which make a warm start for
    the next call.  Because ``s_k`` itself is one of the generators the
    distance can only decrease; if the solver returns a marginally worse
    point the iterate is kept.
    """
    r = np.asarray(r, float)
    cols = np.empty((len(buffer) + 1, r.size))
    for i, e in enumerate(buffer.entries):
        cols[i] = e
    cols[-1] = state.s
    proj = project(cols, r, tol=tol, warm_weights=warm_weights)
    if proj.distance <= state.d:
        new = IterateState(state.k + 1, proj.point, proj.distance, None)
        return new, proj.weights
    keep = np.zeros(len(cols))
    keep[-1] = 1.0
    return IterateState(state.k + 1, state.s, state.d, None), keep


def check_stop_witness(overlap: float, tolerance: float) -> bool:
    """Positive-overlap stopping test.

    ``overlap`` must be ``(r - s_k) . (r - s'_k)`` computed from an exact
    oracle answer; a value above ``tolerance`` proves the target lies
    outside the set (any ``s`` in S would contradict the oracle maximality).
    """
    return overlap > tolerance


def certify_witness(r, s_k, exact_support) -> Witness | None:
    """One exact-oracle call turning a near-optimal iterate into a witness.

    Normalizes ``c = (r - s_k) / ||r - s_k||``, asks the exact oracle for
    ``w = max_s c . s`` and emits a witness iff ``c . r - w > 0``.  Returns
    None when the margin is not positive (separation not certifiable from
    this iterate).  Raises :class:`ExactOracleUnavailable` if the set has no
    exact oracle.
    """
    r = np.asarray(r, float)
    s_k = np.asarray(s_k, float)
    gap = r - s_k
    norm = float(np.linalg.norm(gap))
    if norm == 0.0:
        return None
    c = gap / norm
    answer = exact_support(c)
    if not answer.exact:
        raise ExactOracleUnavailable("certification requires an exact oracle answer")
    w = float(answer.overlap)
    value = float(c @ r)
    margin = value - w
    if margin <= 0.0:
        return None
    return Witness(direction=c, local_bound=w, value_at_r=value, margin=margin)


def run(r, body, config: RunConfig | None = None) -> RunRecord:
    """Solve weak separation / minimum distance for ``r`` against ``body``.

    ``body`` is any object exposing ``dim``, ``support(direction) ->
    OracleAnswer`` and optionally ``exact_support(direction)``.  Terminates
    with INSIDE_WITHIN_DELTA as soon as ``d_k < delta`` (this wins ties
    against separation), with SEPARATED when the positive-overlap test fires
    on an exact answer or a plateau certification succeeds, and with
    ITERATION_BUDGET_EXHAUSTED otherwise.  The full distance trace is
    recorded either way.
    """
    cfg = config if config is not None else RunConfig()
    r = np.asarray(r, float).ravel()
    if r.size != body.dim:
        raise DimensionMismatch(f"target has dimension {r.size}, set has {body.dim}")

    if cfg.initial_point is not None:
        s = np.asarray(cfg.initial_point, float).ravel().copy()
        if s.size != body.dim:
            raise DimensionMismatch("initial point dimension mismatch")
    else:
        s = np.asarray(body.support(r).point, float).copy()
    d = float(np.linalg.norm(r - s))

    buffer = MemoryBuffer(cfg.memory) if cfg.memory > 1 else None
    warm: np.ndarray | None = None

    d_hist = [d]
    eps_hist: list[float] = []
    ov_hist: list[float] = []
    wall: list[float] = []
    witness: Witness | None = None
    sep_k: int | None = None
    next_plateau_check = cfg.plateau_window
    plateau_enabled = cfg.certify_on_plateau
    state = IterateState(0, s, d)
    stop_early = False

    for k in range(cfg.max_iterations):
        if state.d < cfg.delta or state.d == 0.0:
            break
        t0 = time.perf_counter()
        direction = r - state.s
        answer = body.support(direction)
        overlap_stop = float(direction @ r) - float(answer.overlap)

        if answer.exact and witness is None and check_stop_witness(overlap_stop, cfg.stop_tolerance):
            witness = Witness(
                direction=direction / state.d,
                local_bound=float(answer.overlap) / state.d,
                value_at_r=float(direction @ r) / state.d,
                margin=overlap_stop / state.d,
            )
            sep_k = k
            if cfg.stop_on_separation:
                eps_hist.append(math.nan)
                ov_hist.append(overlap_stop)
                wall.append((time.perf_counter() - t0) * 1e6)
                stop_early = True
                break

        converged = False
        if buffer is None:
            state, converged = step_plain(state, answer, r)
            eps_hist.append(state.epsilon)
        else:
            evicted = buffer.add(answer.point)
            if warm is not None:
                w_list = warm.tolist()
                if evicted:
                    w_list.pop(0)
                w_list.insert(len(w_list) - 1, 0.0)  # new point enters before s slot
                warm = np.asarray(w_list)
                if warm.size != len(buffer) + 1:
                    warm = None
            state, warm = step_memory(state, answer, buffer, r,
                                      tol=cfg.projection_tol, warm_weights=warm)
            eps_hist.append(math.nan)
        d_hist.append(state.d)
        ov_hist.append(overlap_stop)
        wall.append((time.perf_counter() - t0) * 1e6)

        if converged:
            # Oracle point coincides with the iterate: distance is optimal.
            if witness is None and plateau_enabled and not answer.exact:
                witness = _try_certify(r, state.s, body)
                if witness is not None:
                    sep_k = k
            break

        if (plateau_enabled and witness is None and not answer.exact
                and k + 1 >= next_plateau_check):
            w_len = cfg.plateau_window
            prev = d_hist[k + 1 - w_len]
            if (prev - state.d) / max(state.d, 1e-300) < cfg.stop_tolerance:
                next_plateau_check = k + 1 + w_len
                try:
                    witness = certify_witness(r, state.s, body.exact_support)
                except (ExactOracleUnavailable, BudgetExceeded, AttributeError):
                    plateau_enabled = False
                    witness = None
                if witness is not None:
                    sep_k = k
                    if cfg.stop_on_separation:
                        stop_early = True
                        break

    if (state.d < cfg.delta or state.d == 0.0) and not stop_early:
        outcome = Outcome.INSIDE_WITHIN_DELTA
    elif witness is not None:
        outcome = Outcome.SEPARATED
    else:
        outcome = Outcome.ITERATION_BUDGET_EXHAUSTED

    return RunRecord(
        outcome=outcome,
        d_history=np.asarray(d_hist),
        epsilons=np.asarray(eps_hist, float),
        overlaps=np.asarray(ov_hist, float),
        wallclock_us=np.asarray(wall, float),
        witness=witness,
        separation_iteration=sep_k,
        final_point=state.s,
        config=cfg,
    )


def _try_certify(r, s, body) -> Witness | None:
    try:
        return certify_witness(r, s, body.exact_support)
    except (ExactOracleUnavailable, BudgetExceeded, AttributeError):
        return None
