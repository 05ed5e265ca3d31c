"""Correlation polytopes and the noisy-singlet / noisy-GHZ applications.

Bipartite quantum data lives in an ``n x n`` array ``Q[x, y] = -v a_x . b_y``
built from unit Bloch vectors; the classical region is the hull of rank-one
sign matrices ``a b^T``.  Maximizing a functional ``W`` over that hull only
requires scanning one side,

    w = max_b sum_x | sum_y W[x, y] b_y |,

since the optimal ``a`` is read off as the sign pattern of the inner sums.
The exact oracle enumerates the 2^(n-1) sign vectors of ``b`` (global sign
absorbed by the absolute values) in chunks; the heuristic one runs an
alternating sign ascent from random restarts.  The tripartite case works the
same way with one extra enumerated side.

On top of the oracles sit the two measurement pipelines: the visibility
loop for noisy singlets (engine separation, then a see-saw over Bloch
vectors to re-optimize the witness, then a small decrease of the visibility)
and the fixed-configuration run for noisy GHZ states with planar qubit
observables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import OracleAnswer, Outcome, RunConfig, RunRecord, run
from .errors import BudgetExceeded, NonUnitVector, NoSeparation, Stalled
from .sets import ConvexBody, SetMetadata, register_set_type

UNIT_NORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# quantum points


def _check_unit(vectors, name) -> np.ndarray:
    v = np.asarray(vectors, float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise NonUnitVector(f"{name} must be an (n, 3) array of Bloch vectors")
    norms = np.linalg.norm(v, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        raise NonUnitVector(f"{name} contains a non-unit vector")
    return v


def werner_point(a_vectors, b_vectors, v: float) -> np.ndarray:
    """Correlation array ``Q[x, y] = -v * a_x . b_y`` of a noisy singlet."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    a = _check_unit(a_vectors, "a_vectors")
    b = _check_unit(b_vectors, "b_vectors")
    return -v * (a @ b.T)


def ghz_point(n: int, p: float, angles=None) -> np.ndarray:
    """Correlation array ``Q[x, y, z] = p * cos(ta_x + tb_y + tc_z)``.

    Planar qubit observables; the default angles are ``pi * (i - 1) / n``
    for every party, which gives ``Q = p * cos((x + y + z - 3) pi / n)``
    in 1-based indexing.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    if angles is None:
        theta = np.pi * np.arange(n) / n
        angles = (theta, theta, theta)
    ta, tb, tc = (np.asarray(t, float) for t in angles)
    return p * np.cos(ta[:, None, None] + tb[None, :, None] + tc[None, None, :])


def chsh_vectors() -> tuple[np.ndarray, np.ndarray]:
    """The standard two-setting configuration saturating the quantum bound."""
    s = 1.0 / np.sqrt(2.0)
    a = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    b = np.array([[s, 0.0, s], [s, 0.0, -s]])
    return a, b


def random_unit_vectors(n: int, rng) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# deterministic-strategy oracles, bipartite


def bell2_local_bound(W, cap: int = 30, low_bits: int = 12):
    """Exact maximum of ``W`` over deterministic sign strategies.

    Enumerates the 2^(n-1) sign vectors of the second party (first entry
    pinned to +1) in blocks: the low ``low_bits`` settings are evaluated as
    one dense matrix product, the remaining high settings by incremental
    updates while counting through their codes in increasing order, which
    makes the lowest-code tie-break exact.  Raises
    :class:`BudgetExceeded` above ``cap`` columns.

    Returns ``(w, a, b)`` with the maximizing strategy.
    """
    W = np.asarray(W, float)
    nx, ny = W.shape
    if ny > cap:
        raise BudgetExceeded(f"exact oracle capped at {cap} settings, got {ny}")
    free = ny - 1
    h = min(low_bits, free)
    codes = np.arange(2 ** h)
    Slow = 1.0 - 2.0 * ((codes[None, :] >> np.arange(h)[:, None]) & 1)
    Tlow = W[:, 1:1 + h] @ Slow if h else np.zeros((nx, 1))
    t_high = W[:, 0] + (W[:, 1 + h:].sum(axis=1) if free > h else 0.0)

    best = -np.inf
    best_code = 0
    for hc in range(2 ** (free - h)):
        if hc:
            diff = (hc - 1) ^ hc
            j = 0
            while diff:
                if diff & 1:
                    step = -2.0 if ((hc >> j) & 1) else 2.0
                    t_high = t_high + step * W[:, 1 + h + j]
                j += 1
                diff >>= 1
        vals = np.abs(t_high[:, None] + Tlow).sum(axis=0)
        c = int(np.argmax(vals))
        if vals[c] > best:
            best = float(vals[c])
            best_code = (hc << h) | c
    b = np.ones(ny)
    for j in range(free):
        if (best_code >> j) & 1:
            b[1 + j] = -1.0
    t = W @ b
    a = np.where(t >= 0.0, 1.0, -1.0)
    return float(np.abs(t).sum()), a, b


def bell2_local_bound_heuristic(W, restarts: int = 32, seed=0, inner_cap: int = 200):
    """Alternating sign ascent; a valid lower bound achieved by a vertex.

    Each restart improves ``sum_x |(W b)_x|`` monotonically (update ``a`` as
    the sign pattern of ``W b``, then ``b`` as the sign pattern of
    ``W^T a``) until the value stalls.  Restarts run vectorized; best value
    wins, lowest restart index on ties.
    """
    W = np.asarray(W, float)
    nx, ny = W.shape
    rng = np.random.default_rng(seed)
    B = rng.integers(0, 2, size=(restarts, ny)).astype(float) * 2.0 - 1.0
    vals = np.full(restarts, -1.0)
    for _ in range(inner_cap):
        A = np.where(B @ W.T >= 0.0, 1.0, -1.0)
        new_vals = np.abs(B @ W.T).sum(axis=1)
        if np.max(new_vals - vals) < 1e-12:
            vals = new_vals
            break
        vals = new_vals
        B = np.where(A @ W >= 0.0, 1.0, -1.0)
    i = int(np.argmax(vals))
    b = B[i]
    t = W @ b
    a = np.where(t >= 0.0, 1.0, -1.0)
    return float(np.abs(t).sum()), a, b


# ---------------------------------------------------------------------------
# deterministic-strategy oracles, tripartite


def bell3_local_bound(W, cap: int = 12):
    """Exact tripartite maximum; enumerates two sides, reads off the third.

    ``w = max_{b,c} sum_x |sum_{y,z} W[x,y,z] b_y c_z|`` with the leading
    entry of both ``b`` and ``c`` pinned to +1 (each global flip leaves the
    absolute sums unchanged).  Lowest (c, b) code pair on ties.
    """
    W = np.asarray(W, float)
    n = W.shape[0]
    if W.shape != (n, n, n):
        raise ValueError("tripartite functional must be cubic")
    if n > cap:
        raise BudgetExceeded(f"exact oracle capped at {cap} settings, got {n}")
    free = n - 1
    codes = np.arange(2 ** free)
    S = np.ones((n, 2 ** free))
    if free:
        S[1:] = 1.0 - 2.0 * ((codes[None, :] >> np.arange(free)[:, None]) & 1)
    best = -np.inf
    best_pair = (0, 0)
    for cc in range(2 ** free):
        c = S[:, cc]
        V = W @ c                      # (n, n) contraction over z
        vals = np.abs(V @ S).sum(axis=0)
        bc = int(np.argmax(vals))
        if vals[bc] > best:
            best = float(vals[bc])
            best_pair = (cc, bc)
    cc, bc = best_pair
    c = S[:, cc].copy()
    b = S[:, bc].copy()
    t = (W @ c) @ b
    a = np.where(t >= 0.0, 1.0, -1.0)
    return float(np.abs(t).sum()), a, b, c


def bell3_local_bound_heuristic(W, restarts: int = 64, seed=0, inner_cap: int = 200):
    """Cyclic sign ascent over the three parties (update order a, b, c)."""
    W = np.asarray(W, float)
    n = W.shape[0]
    rng = np.random.default_rng(seed)
    B = rng.integers(0, 2, size=(restarts, n)).astype(float) * 2.0 - 1.0
    C = rng.integers(0, 2, size=(restarts, n)).astype(float) * 2.0 - 1.0
    A = np.ones((restarts, n))
    vals = np.full(restarts, -np.inf)
    for _ in range(inner_cap):
        Ta = np.einsum("xyz,ry,rz->rx", W, B, C)
        A = np.where(Ta >= 0.0, 1.0, -1.0)
        Tb = np.einsum("xyz,rx,rz->ry", W, A, C)
        B = np.where(Tb >= 0.0, 1.0, -1.0)
        Tc = np.einsum("xyz,rx,ry->rz", W, A, B)
        C = np.where(Tc >= 0.0, 1.0, -1.0)
        new_vals = np.einsum("rz,rz->r", Tc, C)
        if np.max(new_vals - vals) < 1e-12:
            vals = new_vals
            break
        vals = new_vals
    i = int(np.argmax(vals))
    a, b, c = A[i].copy(), B[i].copy(), C[i].copy()
    value = float(np.einsum("xyz,x,y,z->", W, a, b, c))
    return value, a, b, c


def strategy_value_2(W, a, b) -> float:
    """Re-evaluate a bipartite strategy from its sign vectors."""
    return float(np.asarray(a) @ np.asarray(W) @ np.asarray(b))


def strategy_value_3(W, a, b, c) -> float:
    return float(np.einsum("xyz,x,y,z->", np.asarray(W), a, b, c))


# ---------------------------------------------------------------------------
# witnesses and bounds


def visibility_bound(W, local_bound: float, q_unit) -> float:
    """Critical-visibility bound ``w / <Q(v=1), W>`` from a separating W.

    Valid whenever the unit-visibility quantum value exceeds the local
    bound; raises :class:`NoSeparation` otherwise.
    """
    q_value = float(np.vdot(np.asarray(q_unit, float), np.asarray(W, float)))
    if q_value <= local_bound:
        raise NoSeparation("functional does not separate at unit visibility")
    return local_bound / q_value


def quantum_seesaw_2party(W, a0=None, b0=None, seed=0, restarts: int = 4,
                          tol: float = 1e-10, max_rounds: int = 1000):
    """Maximize ``tr(Q(v=1) W^T) = -sum W[x,y] a_x . b_y`` over Bloch vectors.

    Alternates the closed-form single-party updates (each row is set to the
    normalized negative weighted sum of the other side), which never
    decrease the value.  Runs once from the warm start plus ``restarts``
    random starts and keeps the best.

    Returns ``(a, b, value)``.
    """
    W = np.asarray(W, float)
    nx, ny = W.shape
    rng = np.random.default_rng(seed)

    def ascend(A, B):
        value = -np.inf
        for _ in range(max_rounds):
            Gb = -(W.T @ A)
            norms = np.linalg.norm(Gb, axis=1, keepdims=True)
            ok = norms[:, 0] > 1e-300
            B = np.where(ok[:, None], Gb / np.maximum(norms, 1e-300), B)
            Ga = -(W @ B)
            norms = np.linalg.norm(Ga, axis=1, keepdims=True)
            ok = norms[:, 0] > 1e-300
            A = np.where(ok[:, None], Ga / np.maximum(norms, 1e-300), A)
            new = -float(np.sum(W * (A @ B.T)))
            if new - value < tol:
                return A, B, new
            value = new
        return A, B, value

    starts = []
    if a0 is not None and b0 is not None:
        starts.append((np.asarray(a0, float).copy(), np.asarray(b0, float).copy()))
    for _ in range(restarts):
        starts.append((random_unit_vectors(nx, rng), random_unit_vectors(ny, rng)))
    best = None
    for A, B in starts:
        A, B, value = ascend(A, B)
        if best is None or value > best[2]:
            best = (A, B, value)
    return best


# ---------------------------------------------------------------------------
# oracle-presented polytopes for the engine


class CorrelationPolytope(ConvexBody):
    """Bipartite correlation polytope as a convex body in R^(n*n).

    ``oracle`` selects the per-step oracle: "exact", "heuristic", or "auto"
    (exact up to ``auto_exact`` settings).  ``exact_support`` always
    enumerates, subject to ``exact_cap``.
    """

    def __init__(self, n: int, oracle: str = "auto", exact_cap: int = 30,
                 auto_exact: int = 20, restarts: int = 32, seed: int = 0):
        self.n = int(n)
        self.dim = self.n * self.n
        self.exact_cap = int(exact_cap)
        self.restarts = int(restarts)
        self.seed = int(seed)
        if oracle not in ("auto", "exact", "heuristic"):
            raise ValueError("oracle must be auto, exact, or heuristic")
        self.exact_steps = oracle == "exact" or (oracle == "auto" and self.n <= auto_exact)
        self._calls = 0

    def _answer(self, c, exact: bool) -> OracleAnswer:
        W = c.reshape(self.n, self.n)
        if exact:
            _, a, b = bell2_local_bound(W, cap=self.exact_cap)
        else:
            _, a, b = bell2_local_bound_heuristic(
                W, restarts=self.restarts, seed=[self.seed, self._calls])
            self._calls += 1
        point = np.outer(a, b).ravel()
        return OracleAnswer(point, float(c @ point), exact)

    def support(self, direction) -> OracleAnswer:
        return self._answer(self._check_dim(direction), self.exact_steps)

    def exact_support(self, direction) -> OracleAnswer:
        return self._answer(self._check_dim(direction), True)

    @property
    def diameter(self) -> float:
        return 2.0 * self.n  # vertices have Frobenius norm n, antipodes included

    def metadata(self, r=None) -> SetMetadata:
        return SetMetadata(diameter=self.diameter)


class CorrelationPolytope3(ConvexBody):
    """Tripartite correlation polytope in R^(n^3)."""

    def __init__(self, n: int, oracle: str = "auto", exact_cap: int = 12,
                 auto_exact: int = 6, restarts: int = 64, seed: int = 0):
        self.n = int(n)
        self.dim = self.n ** 3
        self.exact_cap = int(exact_cap)
        self.restarts = int(restarts)
        self.seed = int(seed)
        if oracle not in ("auto", "exact", "heuristic"):
            raise ValueError("oracle must be auto, exact, or heuristic")
        self.exact_steps = oracle == "exact" or (oracle == "auto" and self.n <= auto_exact)
        self._calls = 0

    def _answer(self, cvec, exact: bool) -> OracleAnswer:
        W = cvec.reshape(self.n, self.n, self.n)
        if exact:
            _, a, b, c = bell3_local_bound(W, cap=self.exact_cap)
        else:
            _, a, b, c = bell3_local_bound_heuristic(
                W, restarts=self.restarts, seed=[self.seed, self._calls])
            self._calls += 1
        point = np.einsum("x,y,z->xyz", a, b, c).ravel()
        return OracleAnswer(point, float(cvec @ point), exact)

    def support(self, direction) -> OracleAnswer:
        return self._answer(self._check_dim(direction), self.exact_steps)

    def exact_support(self, direction) -> OracleAnswer:
        return self._answer(self._check_dim(direction), True)

    @property
    def diameter(self) -> float:
        return 2.0 * self.n ** 1.5

    def metadata(self, r=None) -> SetMetadata:
        return SetMetadata(diameter=self.diameter)


register_set_type("correlation_polytope", lambda s: CorrelationPolytope(
    n=int(s["n"]),
    oracle=s.get("oracle", "auto"),
    restarts=int(s.get("restarts", 32)),
    seed=int(s.get("seed", 0)),
))
register_set_type("correlation_polytope3", lambda s: CorrelationPolytope3(
    n=int(s["n"]),
    oracle=s.get("oracle", "auto"),
    restarts=int(s.get("restarts", 64)),
    seed=int(s.get("seed", 0)),
))


# ---------------------------------------------------------------------------
# measurement-optimization pipelines


@dataclass
class WernerLoopConfig:
    v_start: float = 1.0
    v_step: float = 1e-3
    v_floor: float = 0.70
    engine_iterations: int = 50_000
    engine_memory: int = 1
    delta: float = 1e-6
    seed: int = 0
    max_rounds: int = 400
    init_retries: int = 10
    seesaw_restarts: int = 4
    oracle: str = "auto"


@dataclass
class WernerLoopResult:
    bound: float
    witness: np.ndarray
    local_bound: float
    quantum_value: float
    a_vectors: np.ndarray
    b_vectors: np.ndarray
    v_final: float
    rounds: int
    history: list = field(repr=False, default_factory=list)


def optimize_measurements(n: int, config: WernerLoopConfig | None = None) -> WernerLoopResult:
    """Visibility-descent loop for noisy singlets with ``n`` settings.

    Each round separates the current quantum point from the correlation
    polytope, re-optimizes the measurement vectors for the witness found,
    records the visibility bound it implies, and lowers the visibility past
    the certified bound.  Stops when separation fails (point inside, or
    iteration budget spent without a witness) or the visibility floor is
    reached.  Raises :class:`Stalled` if no round ever separates.
    """
    cfg = config if config is not None else WernerLoopConfig()
    rng = np.random.default_rng(cfg.seed)
    poly = CorrelationPolytope(n, oracle=cfg.oracle, seed=cfg.seed + 1)
    a = random_unit_vectors(n, rng)
    b = random_unit_vectors(n, rng)
    best: WernerLoopResult | None = None
    history: list[tuple[float, float, float]] = []
    v = cfg.v_start
    retries = cfg.init_retries
    rounds = 0

    while v >= cfg.v_floor and rounds < cfg.max_rounds:
        rounds += 1
        q_unit = werner_point(a, b, 1.0)
        rec = run((v * q_unit).ravel(), poly, RunConfig(
            delta=cfg.delta, max_iterations=cfg.engine_iterations,
            memory=cfg.engine_memory, rng_seed=cfg.seed + rounds))
        if rec.outcome is not Outcome.SEPARATED:
            if best is None and retries > 0:
                retries -= 1
                a = random_unit_vectors(n, rng)
                b = random_unit_vectors(n, rng)
                continue
            break
        W = rec.witness.direction.reshape(n, n)
        w = rec.witness.local_bound
        a2, b2, q_value = quantum_seesaw_2party(
            W, a0=a, b0=b, seed=cfg.seed + 7 * rounds, restarts=cfg.seesaw_restarts)
        history.append((v, w, q_value))
        if q_value > w:
            bound = w / q_value
            if best is None or bound < best.bound:
                best = WernerLoopResult(
                    bound=bound, witness=W, local_bound=w, quantum_value=q_value,
                    a_vectors=a2, b_vectors=b2, v_final=v, rounds=rounds,
                    history=history)
            a, b = a2, b2
            v = min(v - cfg.v_step, bound - cfg.v_step)
        else:
            v -= cfg.v_step

    if best is None:
        raise Stalled("no separating witness found before the visibility floor")
    best.rounds = rounds
    best.history = history
    return best


@dataclass
class GhzResult:
    bound: float
    witness: np.ndarray
    local_bound: float
    quantum_value: float
    record: RunRecord
    exact_certified: bool


def ghz_visibility_run(n: int, p: float, iterations: int = 4000, memory: int = 64,
                       seed: int = 0, oracle: str = "auto", certify_cap: int = 12,
                       certify_restarts: int = 512) -> GhzResult:
    """Fixed-configuration GHZ run: converge, then certify the final witness.

    The engine runs to its budget (no early stop) so the witness direction
    comes from the converged iterate rather than from the first firing of
    the stopping test, which would give a much looser bound.
    """
    q1 = ghz_point(n, 1.0)
    r = (p * q1).ravel()
    poly = CorrelationPolytope3(n, oracle=oracle, seed=seed + 1)
    rec = run(r, poly, RunConfig(
        delta=1e-12, max_iterations=iterations, memory=memory, rng_seed=seed,
        stop_on_separation=False, certify_on_plateau=False))
    W = (r - rec.final_point).reshape(n, n, n)
    exact = n <= certify_cap
    if exact:
        w, _, _, _ = bell3_local_bound(W, cap=certify_cap)
    else:
        w, _, _, _ = bell3_local_bound_heuristic(W, restarts=certify_restarts,
                                                 seed=seed + 2)
    bound = visibility_bound(W, w, q1)
    return GhzResult(bound=bound, witness=W, local_bound=w, quantum_value=float(np.vdot(q1, W)),
                     record=rec, exact_certified=exact)
