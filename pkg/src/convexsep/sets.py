"""Built-in convex test sets with exact linear-optimization oracles.

Every set exposes ``support(direction) -> OracleAnswer`` (the point of the
set maximizing the functional, deterministic lowest-index tie-break) plus
whatever closed-form geometry it knows: distance of an external point,
boundary gap of an interior one, diameter, curvature.  These feed the
convergence benchmarks and the bound checks in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import OracleAnswer
from .errors import DimensionMismatch, ExactOracleUnavailable
from .hullproj import project


@dataclass(frozen=True)
class SetMetadata:
    """Geometric data used by bound checks where closed forms exist."""

    diameter: float
    dstar: float | None = None
    gap: float | None = None
    curvature: float | None = None


class ConvexBody:
    """Base class: a convex set presented by a linear-optimization oracle."""

    dim: int

    def support(self, direction) -> OracleAnswer:
        raise NotImplementedError

    def exact_support(self, direction) -> OracleAnswer:
        answer = self.support(direction)
        if not answer.exact:
            raise ExactOracleUnavailable(type(self).__name__)
        return answer

    def _check_dim(self, direction) -> np.ndarray:
        c = np.asarray(direction, float).ravel()
        if c.size != self.dim:
            raise DimensionMismatch(f"direction has dimension {c.size}, set has {self.dim}")
        return c


class BoxSet(ConvexBody):
    """Axis-aligned box given per-axis bounds; oracle enumerates vertices.

    Vertex ``i`` takes the upper bound on axis ``j`` iff bit ``j`` of ``i``
    is set, so vertex order (and the tie-break) is fixed by the bounds.
    """

    def __init__(self, bounds):
        bounds = np.asarray(bounds, float)
        if bounds.ndim != 2 or bounds.shape[1] != 2:
            raise ValueError("bounds must be a (dim, 2) array of (lo, hi) pairs")
        if not np.all(np.isfinite(bounds)) or np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("bounds must be finite with lo <= hi")
        self.bounds = bounds
        self.dim = bounds.shape[0]
        if self.dim > 20:
            raise ValueError("vertex enumeration above 2^20 is not supported")
        n = self.dim
        idx = np.arange(2 ** n)
        bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
        self.vertices = np.where(bits == 1, bounds[:, 1], bounds[:, 0]).astype(float)

    def support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        scores = self.vertices @ c
        i = int(np.argmax(scores))
        return OracleAnswer(self.vertices[i].copy(), float(scores[i]), True)

    def clamp(self, r) -> np.ndarray:
        return np.clip(np.asarray(r, float), self.bounds[:, 0], self.bounds[:, 1])

    def distance_to(self, r) -> float:
        return float(np.linalg.norm(np.asarray(r, float) - self.clamp(r)))

    def boundary_gap(self, r) -> float | None:
        """Distance to the boundary for interior points, else None."""
        r = np.asarray(r, float)
        lo_m = r - self.bounds[:, 0]
        hi_m = self.bounds[:, 1] - r
        gap = float(min(lo_m.min(), hi_m.min()))
        return gap if gap > 0 else None

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.bounds[:, 1] - self.bounds[:, 0]))

    def metadata(self, r=None) -> SetMetadata:
        dstar = gap = None
        if r is not None:
            dstar = self.distance_to(r)
            gap = self.boundary_gap(r)
        return SetMetadata(diameter=self.diameter, dstar=dstar, gap=gap)


class BallSet(ConvexBody):
    """Euclidean ball; the oracle is closed form and the boundary is curved
    with parameter ``1 / (2 * radius)``."""

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, float).ravel()
        if radius <= 0:
            raise ValueError("radius must be > 0")
        self.radius = float(radius)
        self.dim = self.center.size

    def support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        norm = float(np.linalg.norm(c))
        if norm == 0.0:
            point = self.center.copy()
        else:
            point = self.center + (self.radius / norm) * c
        return OracleAnswer(point, float(c @ point), True)

    def distance_to(self, r) -> float:
        return max(float(np.linalg.norm(np.asarray(r, float) - self.center)) - self.radius, 0.0)

    def boundary_gap(self, r) -> float | None:
        gap = self.radius - float(np.linalg.norm(np.asarray(r, float) - self.center))
        return gap if gap > 0 else None

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    @property
    def curvature(self) -> float:
        return 1.0 / (2.0 * self.radius)

    def metadata(self, r=None) -> SetMetadata:
        dstar = gap = None
        if r is not None:
            dstar = self.distance_to(r)
            gap = self.boundary_gap(r)
        return SetMetadata(diameter=self.diameter, dstar=dstar, gap=gap,
                           curvature=self.curvature)


class HullSet(ConvexBody):
    """Convex hull of an explicit generator list."""

    def __init__(self, points):
        self.points = np.asarray(points, float)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("points must be a nonempty (m, dim) array")
        self.dim = self.points.shape[1]

    def support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        scores = self.points @ c
        i = int(np.argmax(scores))
        return OracleAnswer(self.points[i].copy(), float(scores[i]), True)

    def exact_distance(self, r, tol: float = 1e-12) -> float:
        """Ground-truth distance via projection onto all generators."""
        return project(self.points, r, tol=tol).distance

    @property
    def diameter(self) -> float:
        # Exact pairwise maximum; fine for the small generator counts we use.
        sq = np.sum(self.points ** 2, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (self.points @ self.points.T)
        return float(np.sqrt(max(d2.max(), 0.0)))

    def metadata(self, r=None) -> SetMetadata:
        dstar = self.exact_distance(r) if r is not None else None
        return SetMetadata(diameter=self.diameter, dstar=dstar)


def exact_hull_distance(points, r, tol: float = 1e-12) -> float:
    """Distance from ``r`` to conv(points), solved exactly."""
    return project(np.asarray(points, float), r, tol=tol).distance


class ProductHullSet(ConvexBody):
    """Hull of a large product family: one of two block vectors per block.

    The generator set is ``{(u_1 or w_1, ..., u_B or w_B)}`` over disjoint
    coordinate blocks, so it has ``2^B`` points but linear maximization
    decomposes blockwise (pick the better of two vectors per block, choice 0
    on ties).  This realizes a reproducible high-dimensional hull whose
    exact oracle runs without enumeration.
    """

    def __init__(self, blocks):
        self.blocks = [np.asarray(b, float) for b in blocks]
        for b in self.blocks:
            if b.shape[0] != 2:
                raise ValueError("each block must hold exactly 2 vectors")
        sizes = [b.shape[1] for b in self.blocks]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.dim = int(self.offsets[-1])

    @classmethod
    def seeded(cls, n_blocks: int = 39, total_dim: int = 400, seed: int = 2039):
        """Reproducible construction with unit-norm block vectors."""
        rng = np.random.default_rng(seed)
        base, rem = divmod(total_dim, n_blocks)
        sizes = [base + 1] * rem + [base] * (n_blocks - rem)
        blocks = []
        for sz in sizes:
            b = rng.standard_normal((2, sz))
            b /= np.linalg.norm(b, axis=1, keepdims=True)
            blocks.append(b)
        return cls(blocks)

    @property
    def n_generators(self) -> int:
        return 2 ** len(self.blocks)

    def support(self, direction) -> OracleAnswer:
        c = self._check_dim(direction)
        point = np.empty(self.dim)
        for i, b in enumerate(self.blocks):
            lo, hi = self.offsets[i], self.offsets[i + 1]
            seg = c[lo:hi]
            # strict > keeps choice 0 on ties (lowest index)
            choice = 1 if b[1] @ seg > b[0] @ seg else 0
            point[lo:hi] = b[choice]
        return OracleAnswer(point, float(c @ point), True)

    def vertex(self, choices) -> np.ndarray:
        point = np.empty(self.dim)
        for i, b in enumerate(self.blocks):
            lo, hi = self.offsets[i], self.offsets[i + 1]
            point[lo:hi] = b[int(choices[i])]
        return point

    def face_center(self, active_blocks) -> np.ndarray:
        """Center of the face spanned by the listed blocks.

        Choice-0 vectors everywhere else, block midpoints on the active
        blocks; a boundary point of the hull expressible with
        ``2^len(active_blocks)`` generators.
        """
        point = np.empty(self.dim)
        active = set(int(a) for a in active_blocks)
        for i, b in enumerate(self.blocks):
            lo, hi = self.offsets[i], self.offsets[i + 1]
            point[lo:hi] = 0.5 * (b[0] + b[1]) if i in active else b[0]
        return point

    def enumerate_generators(self) -> np.ndarray:
        """All 2^B generators; only for small block counts (tests)."""
        nb = len(self.blocks)
        if nb > 16:
            raise ValueError("refusing to enumerate more than 2^16 generators")
        out = np.empty((2 ** nb, self.dim))
        for code in range(2 ** nb):
            out[code] = self.vertex([(code >> i) & 1 for i in range(nb)])
        return out

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum(
            float(np.sum((b[0] - b[1]) ** 2)) for b in self.blocks)))

    def metadata(self, r=None) -> SetMetadata:
        return SetMetadata(diameter=self.diameter)


def set_from_json(spec: dict) -> ConvexBody:
    """Build a set from its JSON description {type, parameters...}.

    Supported types: ``box`` {bounds}, ``ball`` {center, radius}, ``hull``
    {points}, ``product_hull`` {n_blocks, total_dim, seed}.  Application
    polytopes (correlation, unsteerable) are registered by their modules via
    :func:`register_set_type`.
    """
    kind = spec.get("type")
    if kind not in _SET_BUILDERS:
        raise ValueError(f"unknown set type {kind!r}")
    return _SET_BUILDERS[kind](spec)


def register_set_type(name: str, builder) -> None:
    _SET_BUILDERS[name] = builder


_SET_BUILDERS = {
    "box": lambda s: BoxSet(s["bounds"]),
    "ball": lambda s: BallSet(s["center"], s["radius"]),
    "hull": lambda s: HullSet(s["points"]),
    "product_hull": lambda s: ProductHullSet.seeded(
        n_blocks=int(s.get("n_blocks", 39)),
        total_dim=int(s.get("total_dim", 400)),
        seed=int(s.get("seed", 2039)),
    ),
}
