"""Worst-case expectation certificates over a transport-budget ball.

For a window of samples the certificate is the largest expected cost any
distribution within 1-norm transport budget eps of the (possibly weighted)
empirical measure can produce. After reformulation the search runs over a
scaled simplex of signed per-coordinate perturbations: a vertex search over
the extreme points alternates with away-step Frank-Wolfe over the convex
hull of the vertices found so far, with the current iterate retained as an
extra hull atom, until the Frank-Wolfe gap certifies eps1-optimality.

Weighted windows (compressed streams) are handled here in the budget
coordinates z = theta * y: the per-atom objective scales by theta while the
chain rule cancels theta in the gradient, so the simplex solvers stay
generic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .measures import DiscreteDistribution
from .simplex import (
    ConcavityError,
    SolverError,
    SparseVertex,
    afwa_maximize,
    point_search,
)

Array = np.ndarray


@dataclass(frozen=True)
class DataWindow:
    """Support points with multiplicities: the measure certificates target.

    ``points`` is (p, m); ``theta`` holds positive multiplicities summing to
    ``n_total`` (the stream count). Plain windows have unit multiplicities
    and p == n_total. Arrays are frozen for safe read-only sharing.
    """

    points: Array
    theta: Array
    n_total: int

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        th = np.asarray(self.theta, dtype=float).reshape(-1).copy()
        if pts.shape[0] != th.shape[0]:
            raise ValueError("points and theta must have matching length")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if th.min() <= 0:
            raise ValueError("theta entries must be positive")
        if abs(float(th.sum()) - self.n_total) > 1e-9:
            raise ValueError("theta must sum to n_total within 1e-9")
        pts.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "theta", th)

    @classmethod
    def plain(cls, points: Array) -> "DataWindow":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts, np.ones(pts.shape[0]), pts.shape[0])

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def is_weighted(self) -> bool:
        return self.size != self.n_total or bool(np.any(self.theta != 1.0))

    def measure(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.points, self.theta / self.n_total)


@dataclass
class VertexSet:
    """Simplex vertices discovered so far, all at the current scale.

    Magnitudes always equal n_total * radius for the window being solved;
    `adapt` rebuilds them whenever the window or radius changes. Cardinality
    never exceeds 2 m p and re-finding a member is an invariant breach.
    """

    vertices: list[SparseVertex] = field(default_factory=list)
    n_context: int = 0

    def __post_init__(self):
        self._keys = {v.key for v in self.vertices}
        if len(self._keys) != len(self.vertices):
            raise ValueError("duplicate vertices")

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, vertex: SparseVertex) -> bool:
        return vertex.key in self._keys

    def extend(self, new: list[SparseVertex]) -> None:
        for v in new:
            if v.is_zero:
                raise ValueError("zero sentinel cannot join a vertex set")
            if v.key in self._keys:
                raise ValueError(f"vertex {v.key} already present")
            self.vertices.append(v)
            self._keys.add(v.key)

    def copy(self) -> "VertexSet":
        return VertexSet(list(self.vertices), self.n_context)


@dataclass
class WarmState:
    """Adapted restart state: vertex set, start point in budget coordinates,
    and hull weights over [origin] + vertices (index 0 is the origin atom)."""

    vertex_set: VertexSet
    y_start: Array
    gamma: Array


class CertificateInterrupted(Exception):
    """Raised when the caller's interrupt poll fires between solver rounds;
    carries the partial state so it can be adapted to the grown window,
    plus the work counters of the aborted attempt so callers can account
    for solves that never produced a certificate."""

    def __init__(self, state: WarmState, lp_calls: int = 0, cp_calls: int = 0,
                 afwa_iters: int = 0):
        super().__init__("certificate generation interrupted by data arrival")
        self.state = state
        self.lp_calls = lp_calls
        self.cp_calls = cp_calls
        self.afwa_iters = afwa_iters


@dataclass
class CertificateResult:
    """eps1-optimal certificate for one window.

    ``y_eps1`` holds the physical per-atom perturbations (points move to
    ``points - y_eps1``), ``z`` the budget coordinates theta * y whose total
    1-norm over n_total is the transport budget actually spent. ``gamma``
    are hull weights over [origin] + vertex_set and, with the vertex set,
    form the warm-start state for the next window.
    """

    j_eps1: float
    y_eps1: Array
    z: Array
    worst_case: DiscreteDistribution
    vertex_set: VertexSet
    gamma: Array
    eta: float
    n_total: int
    radius: float
    lp_calls: int
    cp_calls: int
    afwa_iters: int

    @property
    def budget_spent(self) -> float:
        return float(np.abs(self.z).sum()) / self.n_total

    def warm_state(self) -> WarmState:
        return WarmState(self.vertex_set.copy(), self.z.copy(), self.gamma.copy())


def certificate_value(model, x: Array, window: DataWindow, y_phys: Array) -> float:
    """Objective (1/n) sum_k theta_k f(x, point_k - y_k) at a given plan."""
    vals = np.asarray(
        model.eval(x, window.points - np.asarray(y_phys, dtype=float))
    ).reshape(-1)
    return float(window.theta @ vals) / window.n_total


class _Problem:
    """Window-bound oracles in budget coordinates z (z = theta * y)."""

    def __init__(self, model, x: Array, window: DataWindow, scale: float):
        self.model = model
        self.x = np.asarray(x, dtype=float)
        self.window = window
        self.scale = scale
        self._inv_theta = (1.0 / window.theta)[:, None]

    def value(self, z: Array) -> float:
        return certificate_value(self.model, self.x, self.window, z * self._inv_theta)

    def grads(self, z: Array) -> Array:
        # d/dz of theta_k f(x, p_k - z_k/theta_k): theta cancels in the chain rule
        return np.asarray(
            self.model.grad_y(self.x, self.window.points, z * self._inv_theta),
            dtype=float,
        )


class _HullObjective:
    """Concave objective over hull weights for atoms [origin] + vertices.

    Index 0 is the zero perturbation (the slack extreme point of the scaled
    simplex), so every previously folded weight vector is directly a valid
    warm start and the atom set stays affinely independent.
    """

    def __init__(self, problem: _Problem, vertices: list[SparseVertex]):
        self.problem = problem
        self.verts = vertices
        self.quadratic_along_segments = bool(
            getattr(problem.model, "quadratic_in_sample", False)
        )
        self._ks = np.fromiter((v.coord[0] for v in vertices), dtype=int, count=len(vertices))
        self._js = np.fromiter((v.coord[1] for v in vertices), dtype=int, count=len(vertices))
        self._vals = np.fromiter(
            (v.sign * v.magnitude for v in vertices), dtype=float, count=len(vertices)
        )
        p = problem.window.size
        m = problem.window.dimension
        self._shape = (p, m)

    def point(self, gamma: Array) -> Array:
        z = np.zeros(self._shape)
        if len(self.verts):
            np.add.at(z, (self._ks, self._js), gamma[1:] * self._vals)
        return z

    def value(self, gamma: Array) -> float:
        return self.problem.value(self.point(gamma))

    def grad(self, gamma: Array) -> Array:
        G = self.problem.grads(self.point(gamma))
        n = self.problem.window.n_total
        out = np.empty(1 + len(self.verts))
        out[0] = 0.0
        out[1:] = self._vals * G[self._ks, self._js] / n
        return out


def _rebuild_point(gamma: Array, vertices: list[SparseVertex], shape) -> Array:
    z = np.zeros(shape)
    for w, v in zip(gamma[1:], vertices):
        z[v.coord] += w * v.sign * v.magnitude
    return z


def _empty_result(problem: _Problem, window: DataWindow, radius: float) -> CertificateResult:
    z = np.zeros((window.size, window.dimension))
    return CertificateResult(
        j_eps1=problem.value(z),
        y_eps1=z.copy(),
        z=z,
        worst_case=window.measure(),
        vertex_set=VertexSet([], window.n_total),
        gamma=np.array([1.0]),
        eta=0.0,
        n_total=window.n_total,
        radius=radius,
        lp_calls=0,
        cp_calls=0,
        afwa_iters=0,
    )


def generate(
    model,
    x: Array,
    window: DataWindow,
    radius: float,
    eps1: float,
    warm: Optional[WarmState] = None,
    interrupt: Optional[Callable[[], bool]] = None,
    tick: Optional[Callable[[int], None]] = None,
    max_cp_iters: int = 2_000_000,
) -> CertificateResult:
    """eps1-optimal worst-case certificate at decision x.

    Alternates the vertex search with away-step Frank-Wolfe over the hull
    of [origin] + discovered vertices, warm-startable from an adapted
    previous state. ``interrupt`` is polled between rounds and
    aborts via CertificateInterrupted carrying the partial state;
    ``tick`` receives solver cost units (1 per vertex search, 1 per hull
    iteration) for virtual-time accounting.

    The returned value never falls below the plain sample average at x
    minus 1e-9: the origin is a permanent hull atom and warm starts fall
    back to it whenever the adapted point would start lower.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if eps1 <= 0:
        raise ValueError("eps1 must be positive")
    p, m = window.size, window.dimension
    n = window.n_total
    scale = n * radius
    problem = _Problem(model, x, window, scale)
    if radius == 0.0:
        return _empty_result(problem, window, radius)

    if warm is not None:
        vs = warm.vertex_set.copy()
        vs.n_context = n
        for v in vs.vertices:
            if abs(v.magnitude - scale) > 1e-12 * max(1.0, scale):
                raise ValueError(
                    "warm vertex magnitude differs from the current scale; "
                    "adapt the state before reuse"
                )
        z = np.asarray(warm.y_start, dtype=float).copy()
        if z.shape != (p, m):
            raise ValueError(f"warm start has shape {z.shape}, window needs {(p, m)}")
        c = np.asarray(warm.gamma, dtype=float).copy()
        if c.shape != (1 + len(vs),):
            raise ValueError("warm gamma length must be 1 + len(vertex_set)")
        # the origin restart guards the sample-average floor
        j_origin = problem.value(np.zeros((p, m)))
        j_curr = problem.value(z)
        if j_curr < j_origin:
            z = np.zeros((p, m))
            c = np.zeros(1 + len(vs))
            c[0] = 1.0
            j_curr = j_origin
    else:
        vs = VertexSet([], n)
        z = np.zeros((p, m))
        c = np.array([1.0])
        j_curr = problem.value(z)

    lp_calls = cp_calls = afwa_iters = 0
    solved_here = False  # has the current atom set been hull-solved this call
    while True:
        if interrupt is not None and interrupt():
            raise CertificateInterrupted(
                WarmState(vs, z, c), lp_calls, cp_calls, afwa_iters
            )
        G = problem.grads(z)
        omega, eta = point_search(G, scale, z, n_total=n)
        lp_calls += 1
        if tick is not None:
            tick(1)
        assert np.abs(z).sum() / n <= radius + 1e-9, "budget violated"
        if eta <= eps1:
            break
        new = [v for v in omega if not v.is_zero and v not in vs]
        if not new and solved_here:
            # the hull just solved contains the best extreme direction, so its
            # certified gap bounds the true gap; the measured excess is only
            # reconstruction roundoff
            break
        vs.extend(new)
        c = np.concatenate([c, np.zeros(len(new))])

        hull = _HullObjective(problem, vs.vertices)
        res = afwa_maximize(
            hull, eps1, c,
            max_iters=max_cp_iters, interrupt=interrupt, tick=tick,
        )
        afwa_iters += res.iterations
        c = res.weights
        z = hull.point(c)
        if res.interrupted:
            # an aborted ascent is work done but not a solved subproblem
            raise CertificateInterrupted(
                WarmState(vs, z, c), lp_calls, cp_calls, afwa_iters
            )
        cp_calls += 1
        if not res.converged:
            raise SolverError(
                f"hull ascent exhausted {max_cp_iters} iterations "
                f"(gap {res.gap:.3g} > eps1 {eps1:.3g})"
            )
        solved_here = True
        j_new = problem.value(z)
        if j_new < j_curr - 1e-9 * (1.0 + abs(j_curr)):
            raise ConcavityError(
                "certificate objective decreased across a hull solve; the "
                "cost is not concave in the sample argument"
            )
        j_curr = j_new

    y_phys = z / window.theta[:, None]
    worst = DiscreteDistribution(window.points - y_phys, window.theta / n)
    return CertificateResult(
        j_eps1=j_curr,
        y_eps1=y_phys,
        z=z,
        worst_case=worst,
        vertex_set=vs,
        gamma=c,
        eta=eta,
        n_total=n,
        radius=radius,
        lp_calls=lp_calls,
        cp_calls=cp_calls,
        afwa_iters=afwa_iters,
    )


def adapt(
    vertex_set: VertexSet,
    gamma: Array,
    new_n: int,
    new_radius: float,
    new_shape: tuple[int, int],
) -> WarmState:
    """Rescale a converged (or partial) state to a grown window.

    Vertices keep their coordinate and sign but take magnitude
    new_n * new_radius; hull weights are preserved and the start point is
    rebuilt from them, so freshly arrived rows start unperturbed.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (1 + len(vertex_set),):
        raise ValueError("gamma length must be 1 + len(vertex_set)")
    size, dimension = new_shape
    if new_radius == 0.0:
        return WarmState(
            VertexSet([], new_n), np.zeros((size, dimension)), np.array([1.0])
        )
    mag = new_n * new_radius
    new_vertices = [replace(v, magnitude=mag) for v in vertex_set.vertices]
    for v in new_vertices:
        if not (0 <= v.coord[0] < size and 0 <= v.coord[1] < dimension):
            raise ValueError("vertex coordinate outside the new window")
    vs = VertexSet(new_vertices, new_n)
    y = _rebuild_point(gamma, new_vertices, (size, dimension))
    return WarmState(vs, y, gamma.copy())


def revalidate(
    model, x: Array, window: DataWindow, radius: float, warm: WarmState, eps1: float
) -> tuple[bool, float]:
    """One vertex search at the adapted start: is it already eps1-optimal?

    When valid, the adapted value certifies the new window without any hull
    solve (``generate`` with the same warm state returns immediately with
    zero cp_calls).
    """
    scale = window.n_total * radius
    problem = _Problem(model, x, window, scale)
    z = np.asarray(warm.y_start, dtype=float)
    _, eta = point_search(problem.grads(z), scale, z)
    return eta <= eps1, eta
