"""EPR steering of noisy singlet states with a trusted Pauli side.

The quantum data is an ``n x 3`` array whose row ``x`` is ``-v * a_x``
(measurement direction times visibility).  The classical region is the hull
of vertices ``Q[x, y] = a_x * bloch(psi)[y]`` over sign vectors ``a`` and
pure qubit states ``psi``; linear optimization over it reduces to

    max_a  lambda_max( sum_{x,y} W[x,y] a_x sigma_y )  =  max_a || W^T a ||_2

because the operator is traceless, so its top eigenvalue is the norm of its
Pauli coefficient vector.  The exact oracle enumerates sign vectors (global
sign fixed) with a meet-in-the-middle split; the cheap oracle is a see-saw
between the sign vector and the qubit state, restarted from random signs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import OracleAnswer
from .errors import BudgetExceeded, NoSeparation
from .sets import ConvexBody, SetMetadata, register_set_type

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def buckyball_directions() -> np.ndarray:
    """The 30 truncated-icosahedron measurement directions.

    Builds all 60 vertices from the standard coordinate family
    {(0, +-1, +-3phi), (+-1, +-(2+phi), +-2phi), (+-phi, +-2, +-(2phi+1))}
    plus cyclic permutations, normalizes to unit length, then keeps one
    representative per antipodal pair (first nonzero coordinate positive),
    sorted lexicographically.
    """
    base = np.array([
        [0.0, 1.0, 3.0 * GOLDEN],
        [1.0, 2.0 + GOLDEN, 2.0 * GOLDEN],
        [GOLDEN, 2.0, 2.0 * GOLDEN + 1.0],
    ])
    verts = set()
    for b in base:
        for rot in range(3):
            v = np.roll(b, rot)
            for sx in (1.0, -1.0):
                for sy in (1.0, -1.0):
                    for sz in (1.0, -1.0):
                        u = v * np.array([sx, sy, sz])
                        u = u / np.linalg.norm(u)
                        verts.add(tuple(np.round(u, 12)))
    assert len(verts) == 60
    reps = []
    for u in verts:
        arr = np.array(u)
        mask = np.abs(arr) > 1e-12
        first = arr[mask][0]
        if first > 0:
            reps.append(tuple(arr))
    reps.sort()
    out = np.array(reps)
    out /= np.linalg.norm(out, axis=1, keepdims=True)
    assert out.shape == (30, 3)
    return out


def steering_point(directions, v: float) -> np.ndarray:
    """Quantum point ``Q[x, y] = -v * a_x[y]`` for unit directions ``a_x``."""
    a = np.asarray(directions, float)
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return -v * a


@dataclass(frozen=True)
class UnsteerableVertex:
    """Extreme point of the classical region: sign vector plus qubit state."""

    signs: np.ndarray
    state: np.ndarray  # complex amplitudes, unit norm

    def point(self) -> np.ndarray:
        return unsteerable_vertex_point(self)


def bloch_vector(psi) -> np.ndarray:
    """Pauli expectation values of a pure qubit state."""
    psi = np.asarray(psi, complex).ravel()
    a, b = psi[0], psi[1]
    return np.array([
        2.0 * (a.conjugate() * b).real,
        2.0 * (a.conjugate() * b).imag,
        (abs(a) ** 2 - abs(b) ** 2),
    ])


def state_from_bloch(u) -> np.ndarray:
    """Unit eigenvector of ``u . sigma`` for its +1 eigenvalue.

    ``(1 + u_z, u_x + i u_y)`` up to normalization; the south pole needs the
    explicit branch.  Zero input falls back to the north-pole state.
    """
    u = np.asarray(u, float)
    norm = np.linalg.norm(u)
    if norm < 1e-300:
        return np.array([1.0 + 0.0j, 0.0j])
    u = u / norm
    if u[2] < -1.0 + 1e-14:
        return np.array([0.0j, 1.0 + 0.0j])
    psi = np.array([1.0 + u[2], u[0] + 1j * u[1]], dtype=complex)
    return psi / np.linalg.norm(psi)


def unsteerable_vertex_point(vertex: UnsteerableVertex) -> np.ndarray:
    """The ``n x 3`` array realized by a vertex: row x is a_x * bloch(psi)."""
    return np.outer(np.asarray(vertex.signs, float), bloch_vector(vertex.state))


def steering_seesaw_oracle(W, restarts: int = 100, seed=0,
                           inner_cap: int = 1000, tol: float = 1e-12):
    """Lower-bound the steering oracle by restarted see-saw.

    Each restart alternates the closed-form state update (top eigenvector of
    the Pauli coefficient vector) with the sign update
    ``a_x = sign(W_x . bloch)``; the objective ``||W^T a||`` never decreases.
    All restarts run lock-step vectorized; the best final value wins, lowest
    restart index on ties.

    Returns ``(value, UnsteerableVertex)``; the value is a valid lower bound
    on the exact oracle and the vertex reproduces it exactly.
    """
    W = np.asarray(W, float)
    n = W.shape[0]
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 2, size=(restarts, n)).astype(float) * 2.0 - 1.0
    lam = np.full(restarts, -1.0)
    U = np.zeros((restarts, 3))
    for _ in range(inner_cap):
        M = A @ W
        lam_new = np.linalg.norm(M, axis=1)
        safe = np.maximum(lam_new, 1e-300)
        U = M / safe[:, None]
        if np.max(lam_new - lam) < tol:
            lam = lam_new
            break
        lam = lam_new
        A = np.where(U @ W.T >= 0.0, 1.0, -1.0)
    best = int(np.argmax(lam))
    signs = A[best].copy()
    m_vec = signs @ W
    value = float(np.linalg.norm(m_vec))
    vertex = UnsteerableVertex(signs=signs, state=state_from_bloch(m_vec))
    return value, vertex


def steering_exact_oracle(W, cap: int = 24, chunk: int = 256):
    """Exact steering oracle by enumeration over sign vectors.

    The 2^(n-1) sign vectors (global sign fixed on the first row; flipping
    all of ``a`` leaves the norm unchanged) are enumerated meet-in-the-middle:
    partial Pauli sums of two row halves are tabulated and all pairings are
    scanned with vectorized norm evaluations.  Deterministic lowest-code
    tie-break.  Raises :class:`BudgetExceeded` above ``cap`` rows.
    """
    W = np.asarray(W, float)
    n = W.shape[0]
    if n > cap:
        raise BudgetExceeded(f"exact steering oracle capped at {cap} rows, got {n}")
    if n == 1:
        m_vec = W[0]
        value = float(np.linalg.norm(m_vec))
        return value, UnsteerableVertex(np.array([1.0]), state_from_bloch(m_vec))

    def signed_sums(rows, base):
        out = base.reshape(1, 3)
        for row in rows:
            out = np.concatenate([out + row, out - row])  # bit 0 => +1 first
        return out

    free = n - 1
    n_a = free // 2
    SA = signed_sums(W[1:1 + n_a], W[0])
    SB = signed_sums(W[1 + n_a:], np.zeros(3))
    na2 = np.sum(SA ** 2, axis=1)
    nb2 = np.sum(SB ** 2, axis=1)
    best_val2 = -1.0
    best_pair = (0, 0)
    for lo in range(0, SA.shape[0], chunk):
        hi = min(lo + chunk, SA.shape[0])
        cross = SA[lo:hi] @ SB.T
        vals = na2[lo:hi, None] + 2.0 * cross + nb2[None, :]
        flat = int(np.argmax(vals))
        v = float(vals.flat[flat])
        if v > best_val2:
            best_val2 = v
            best_pair = (lo + flat // SB.shape[0], flat % SB.shape[0])
    ca, cb = best_pair
    signs = np.empty(n)
    signs[0] = 1.0
    for j in range(n_a):
        signs[1 + j] = 1.0 if ((ca >> j) & 1) == 0 else -1.0
    for j in range(free - n_a):
        signs[1 + n_a + j] = 1.0 if ((cb >> j) & 1) == 0 else -1.0
    m_vec = signs @ W
    value = float(np.linalg.norm(m_vec))
    return value, UnsteerableVertex(signs=signs, state=state_from_bloch(m_vec))


def steering_bound(local_bound: float, quantum_value: float) -> float:
    """Visibility bound ``w / quantum_value``; requires actual separation."""
    if quantum_value <= local_bound:
        raise NoSeparation("functional does not separate: quantum value <= local bound")
    return local_bound / quantum_value


class UnsteerableSet(ConvexBody):
    """Classical (unsteerable) region as an oracle-presented convex body.

    ``support`` runs the restarted see-saw (answers flagged heuristic) with
    per-call seeds fanned out deterministically from ``seed``;
    ``exact_support`` enumerates, subject to ``exact_cap``.
    """

    def __init__(self, n: int, restarts: int = 100, seed: int = 0,
                 exact_cap: int = 24):
        self.n = int(n)
        self.dim = 3 * self.n
        self.restarts = int(restarts)
        self.seed = int(seed)
        self.exact_cap = int(exact_cap)
        self._calls = 0

    def support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        W = c.reshape(self.n, 3)
        _, vertex = steering_seesaw_oracle(
            W, restarts=self.restarts, seed=[self.seed, self._calls])
        self._calls += 1
        point = unsteerable_vertex_point(vertex).ravel()
        return OracleAnswer(point, float(c @ point), False)

    def exact_support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        W = c.reshape(self.n, 3)
        _, vertex = steering_exact_oracle(W, cap=self.exact_cap)
        point = unsteerable_vertex_point(vertex).ravel()
        return OracleAnswer(point, float(c @ point), True)

    @property
    def diameter(self) -> float:
        # vertices have Frobenius norm sqrt(n) and come in antipodal pairs
        return 2.0 * np.sqrt(self.n)

    def metadata(self, r=None) -> SetMetadata:
        return SetMetadata(diameter=self.diameter)


register_set_type("unsteerable", lambda s: UnsteerableSet(
    n=int(s["n"]),
    restarts=int(s.get("restarts", 100)),
    seed=int(s.get("seed", 0)),
    exact_cap=int(s.get("exact_cap", 24)),
))
