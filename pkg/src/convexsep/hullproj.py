"""Euclidean projection onto the convex hull of a finite point set.

Solves ``min_x ||x @ P - r||_2`` subject to ``x >= 0`` and ``sum(x) = 1``
(``P`` holds one generator per row) with an active-set method: the equality
constraint is handled through its KKT system on the current support, and
negative coordinates trigger the usual restoration step back onto the
simplex.  The method terminates finitely, which matters more here than
asymptotic scaling: typical problems have tens to a few hundred generators
and are re-solved every iteration of the memory variant, where warm starts
from the previous support make most calls a single KKT solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence

DUPLICATE_DISTANCE = 1e-12


@dataclass(frozen=True)
class HullProjection:
    """Result of projecting a target onto conv(points).

    weights sum to one and are nonnegative up to solver slack; entries for
    duplicate generators that were pruned before solving are reported as 0.
    """

    weights: np.ndarray
    point: np.ndarray
    distance: float
    kkt_residual: float

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, float))
        object.__setattr__(self, "point", np.asarray(self.point, float))


def kkt_residual(points, target, weights) -> float:
    """Optimality defect of ``weights`` for the projection of ``target``.

    Returns ``max_j (r - p) . (a_j - p)`` clipped below at zero, where
    ``p = weights @ points``.  Zero (up to tolerance) iff ``p`` is the true
    projection, by the variational inequality for convex sets.
    """
    P = np.asarray(points, float)
    r = np.asarray(target, float)
    x = np.asarray(weights, float)
    p = x @ P
    resid = r - p
    scores = P @ resid - resid @ p
    return float(max(scores.max(), 0.0))


def _dedupe(P: np.ndarray) -> np.ndarray:
    """Indices of representative rows, pruning near-identical generators.

    Exact duplicates are caught by byte identity; near-duplicates (pairwise
    distance below DUPLICATE_DISTANCE) by direct comparison against the
    representatives found so far.  O(m * k) with k distinct rows, which is
    cheap at the sizes we solve.
    """
    m = P.shape[0]
    seen: dict[bytes, int] = {}
    keep: list[int] = []
    for i in range(m):
        key = P[i].tobytes()
        if key in seen:
            continue
        dup = False
        for j in keep:
            diff = P[i] - P[j]
            if diff @ diff < DUPLICATE_DISTANCE * DUPLICATE_DISTANCE:
                dup = True
                break
        if not dup:
            seen[key] = i
            keep.append(i)
    return np.asarray(keep, int)


def _solve_on_support(Pk, r, idx):
    """Minimize ``||y @ P_idx - r||`` subject to sum(y) = 1 (signs free).

    The equality constraint is eliminated by anchoring on the first support
    generator and solving an ordinary least-squares problem in the
    differences.  Working on the generators directly (rather than the Gram
    matrix) keeps full floating-point accuracy for nearly dependent
    supports, which the memory variant produces routinely.
    """
    s = len(idx)
    if s == 1:
        return np.array([1.0])
    anchor = Pk[idx[0]]
    B = (Pk[idx[1:]] - anchor).T
    z, *_ = np.linalg.lstsq(B, r - anchor, rcond=None)
    y = np.empty(s)
    y[1:] = z
    y[0] = 1.0 - z.sum()
    return y


def project(points, target, tol: float = 1e-10, max_iter: int | None = None,
            warm_weights=None) -> HullProjection:
    """Project ``target`` onto the convex hull of the rows of ``points``.

    Parameters
    ----------
    points : (m, dim) array
        Hull generators, one per row.  Must be nonempty.
    target : (dim,) array
    tol : float
        Acceptance threshold on the KKT residual (see :func:`kkt_residual`).
    max_iter : int, optional
        Active-set iteration cap, defaults to ``50 * m``.
    warm_weights : (m,) array, optional
        Feasible-ish starting weights, e.g. from the previous call on a
        slightly different problem.  Negative entries are ignored.

    Raises
    ------
    NonConvergence
        If the iteration cap is hit before the KKT residual drops below
        ``tol`` (signals pathologically conditioned generators).
    """
    P = np.ascontiguousarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("points must be a nonempty (m, dim) array")
    r = np.asarray(target, float).ravel()
    if r.size != P.shape[1]:
        raise ValueError("target dimension does not match points")
    m = P.shape[0]
    if max_iter is None:
        max_iter = 50 * m

    keep = _dedupe(P)
    Pk = P[keep]

    # Initial support: warm start when provided, otherwise the single
    # generator closest to the target.
    x = None
    if warm_weights is not None:
        w = np.asarray(warm_weights, float)
        if w.shape == (m,):
            wk = np.maximum(w[keep], 0.0)
            if wk.sum() > 0:
                wk = wk / wk.sum()
                sup = np.flatnonzero(wk > 0)
                idx = [int(i) for i in sup]
                x = wk[sup].copy()
    if x is None:
        j0 = int(np.argmin(np.sum((Pk - r) ** 2, axis=1)))
        idx = [j0]
        x = np.array([1.0])

    done = False
    for _ in range(max_iter):
        y = _solve_on_support(Pk, r, idx)
        if y.min() < -1e-12:
            # Restoration: walk from the feasible x toward y until the first
            # coordinate hits zero, then drop it from the support.
            shrink = y < x
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = np.where(shrink & (y <= 1e-14), x / (x - y), np.inf)
            alpha = float(steps.min())
            alpha = min(max(alpha, 0.0), 1.0)
            x = x + alpha * (y - x)
            live = x > 1e-14
            if not live.any():
                live[int(np.argmax(x))] = True
            idx = [i for i, keep_i in zip(idx, live) if keep_i]
            x = x[live]
            continue
        x = np.maximum(y, 0.0)
        x = x / x.sum()
        p = x @ Pk[idx]
        resid = r - p
        scores = Pk @ resid - resid @ p
        j = int(np.argmax(scores))
        if scores[j] <= tol:
            done = True
            break
        if j in idx:
            break  # restricted solve cannot improve further; final check decides
        idx.append(j)
        x = np.append(x, 0.0)

    p = x @ Pk[idx]
    resid_max = float(max((Pk @ (r - p) - (r - p) @ p).max(), 0.0))
    if not done and resid_max > tol:
        raise NonConvergence(
            f"projection stalled after {max_iter} iterations "
            f"(kkt residual {resid_max:.3e} > tol {tol:.1e})")

    weights = np.zeros(m)
    for local, wi in zip(idx, x):
        weights[keep[local]] = wi
    return HullProjection(
        weights=weights,
        point=p,
        distance=float(np.linalg.norm(r - p)),
        kkt_residual=resid_max,
    )
