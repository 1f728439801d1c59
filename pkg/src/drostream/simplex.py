"""Inner solvers on the scaled perturbation simplex.

Two pieces live here. ``point_search`` maximizes the linearized certificate
objective over the signed extreme points of the scaled simplex, returning
the argmax vertices and the Frank-Wolfe gap. ``afwa_maximize`` runs
away-step Frank-Wolfe ascent of a concave objective over the unit simplex;
on the unit simplex the barycentric weights of the active set coincide with
the iterate itself, so the classic active-set bookkeeping reduces to the
plain vector update and eviction means zeroing a coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import numpy as np

Array = np.ndarray


class ConcavityError(RuntimeError):
    """Ascent decreased the objective: the restricted objective is not
    concave in the sample argument as the solver requires."""


class SolverError(RuntimeError):
    """An inner solver failed to certify optimality within its budget."""


@dataclass(frozen=True)
class SparseVertex:
    """Signed extreme point of the scaled simplex in perturbation space.

    Densified it has a single entry ``sign * magnitude`` at ``coord``
    (sample index, coordinate index). ``sign == 0`` marks the degenerate
    all-zero-gradient search result; it densifies to zero and never enters
    a vertex set.
    """

    coord: tuple[int, int]
    sign: int
    magnitude: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0, or +1")
        if self.sign != 0 and not self.magnitude > 0:
            raise ValueError("magnitude must be positive")

    @property
    def key(self) -> tuple[tuple[int, int], int]:
        return (self.coord, self.sign)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0


def point_search(
    grads: Array, scale: float, y_current: Array, n_total: Optional[int] = None
) -> tuple[list[SparseVertex], float]:
    """Best signed vertex of the scaled simplex under the linearized objective.

    Parameters
    ----------
    grads : (p, m) array
        Per-row gradients of the perturbation objective at ``y_current``.
    scale : float
        Simplex scale, total transport budget n * eps.
    y_current : (p, m) array
        Current perturbation point the gap is measured from.
    n_total : int, optional
        Sample count normalizing the gap. Defaults to the row count, which
        is exact for plain windows; weighted windows carry multiplicities,
        so fewer rows than samples, and must pass their true count.

    Returns
    -------
    vertices : list of SparseVertex
        Every argmax vertex (ties all included). A single zero-sign
        sentinel when the gradients vanish identically.
    eta : float
        Frank-Wolfe gap (1/n) sum_k <grad_k, vertex_k - y_k>, an upper
        bound on the remaining certificate suboptimality at ``y_current``.
    """
    G = np.asarray(grads, dtype=float)
    y = np.asarray(y_current, dtype=float)
    if G.ndim != 2 or G.shape != y.shape:
        raise ValueError("grads and y_current must both have shape (p, m)")
    if not np.all(np.isfinite(G)):
        raise ValueError("gradients must be finite")
    if not scale > 0:
        raise ValueError("scale must be positive")
    n = float(G.shape[0] if n_total is None else n_total)
    if not n > 0:
        raise ValueError("n_total must be positive")
    base = float(np.vdot(G, y))
    absG = np.abs(G)
    best = float(absG.max())
    if best == 0.0:
        return [SparseVertex((0, 0), 0, 0.0)], -base / n
    ks, js = np.nonzero(absG == best)
    verts = [
        SparseVertex((int(k), int(j)), 1 if G[k, j] > 0 else -1, float(scale))
        for k, j in zip(ks, js)
    ]
    eta = (scale * best - base) / n
    return verts, eta


class ConcaveObjective(Protocol):
    """Duck interface ``afwa_maximize`` expects.

    ``quadratic_along_segments`` declares that t -> value(gamma + t d) is
    quadratic for every segment, enabling the closed-form line search.
    """

    quadratic_along_segments: bool

    def value(self, gamma: Array) -> float: ...

    def grad(self, gamma: Array) -> Array: ...


@dataclass
class AfwaResult:
    weights: Array
    value: float
    iterations: int
    gap: float
    converged: bool
    gaps: Optional[list[float]] = None
    interrupted: bool = False


def _normalize_start(start: Sequence[float]) -> Array:
    g = np.asarray(start, dtype=float).copy()
    if g.ndim != 1 or g.size == 0:
        raise ValueError("start must be a nonempty vector")
    if g.min() < -1e-12 or abs(g.sum() - 1.0) > 1e-9:
        raise ValueError("start weights must lie on the unit simplex")
    g[g < 0] = 0.0
    return g / g.sum()


def _line_search(objective, gamma: Array, d: Array, t_max: float, deriv0: float) -> float:
    """Exact maximization of t -> value(gamma + t d) on [0, t_max].

    Closed form when the objective is quadratic along segments (curvature
    recovered by differencing the directional derivative), otherwise 60
    bisection steps on the directional derivative, tolerance 1e-12 in t.
    """
    if objective.quadratic_along_segments:
        tp = min(t_max, 1.0)
        deriv_tp = float(objective.grad(gamma + tp * d) @ d)
        curv = (deriv_tp - deriv0) / tp
        if curv >= -1e-14 * (1.0 + abs(deriv0)):
            return t_max
        return min(t_max, deriv0 / (-curv))
    if float(objective.grad(gamma + t_max * d) @ d) >= 0.0:
        return t_max
    lo, hi = 0.0, t_max
    for _ in range(60):
        if hi - lo < 1e-12:
            break
        mid = 0.5 * (lo + hi)
        if float(objective.grad(gamma + mid * d) @ d) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def afwa_maximize(
    objective: ConcaveObjective,
    eps: float,
    start: Sequence[float],
    max_iters: int = 1_000_000,
    record_gaps: bool = False,
    interrupt=None,
    tick=None,
) -> AfwaResult:
    """Away-step Frank-Wolfe ascent over the unit simplex.

    Alternates the classic toward-vertex and away-vertex directions, chosen
    by comparing gradient inner products, with exact line search. For away
    steps the maximal step is alpha_v / (1 - alpha_v); hitting it evicts
    the away vertex, while a full toward step collapses the active set to
    the target vertex. Terminates when the Frank-Wolfe gap reaches ``eps``.
    Monotonicity is asserted every iteration; a decrease raises
    ConcavityError. Iteration exhaustion returns ``converged=False`` rather
    than raising so callers can flag it.

    ``tick`` is called with 1 after each iteration (cost accounting);
    ``interrupt`` is polled every 32 iterations and, when it fires, the
    current (feasible, no worse than start) weights are returned with
    ``interrupted=True``.
    """
    gamma = _normalize_start(start)
    val = float(objective.value(gamma))
    if not np.isfinite(val):
        raise SolverError("objective returned a non-finite value")
    gaps: Optional[list[float]] = [] if record_gaps else None
    gap_fw = np.inf
    for it in range(max_iters):
        if interrupt is not None and it and it % 32 == 0 and interrupt():
            return AfwaResult(gamma, val, it, gap_fw, False, gaps,
                              interrupted=True)
        g = np.asarray(objective.grad(gamma), dtype=float)
        if not np.all(np.isfinite(g)):
            raise SolverError("objective returned a non-finite gradient")
        s = int(np.argmax(g))
        avg = float(g @ gamma)
        gap_fw = g[s] - avg
        if gaps is not None:
            gaps.append(gap_fw)
        if gap_fw <= eps:
            return AfwaResult(gamma, val, it, gap_fw, True, gaps)

        active = np.nonzero(gamma > 0)[0]
        v = int(active[np.argmin(g[active])])
        gap_away = avg - g[v]
        if gap_fw >= gap_away or gamma[v] >= 1.0 - 1e-15:
            d = -gamma.copy()
            d[s] += 1.0
            t_max, deriv0, away = 1.0, gap_fw, False
        else:
            d = gamma.copy()
            d[v] -= 1.0
            t_max, deriv0, away = gamma[v] / (1.0 - gamma[v]), gap_away, True

        t = _line_search(objective, gamma, d, t_max, deriv0)
        gamma = gamma + t * d
        if away and t >= t_max * (1.0 - 1e-12):
            gamma[v] = 0.0
        if not away and t >= 1.0 - 1e-12:
            gamma = np.zeros_like(gamma)
            gamma[s] = 1.0
        gamma[gamma < 1e-15] = 0.0
        gamma /= gamma.sum()

        new_val = float(objective.value(gamma))
        if new_val < val - 1e-9 * (1.0 + abs(val)):
            raise ConcavityError(
                "exact-line-search ascent decreased the objective "
                f"({val:.12g} -> {new_val:.12g}); the restricted objective "
                "is not concave"
            )
        val = new_val
        if tick is not None:
            tick(1)
    return AfwaResult(gamma, val, max_iters, gap_fw, False, gaps)
