"""Cost models f(x, xi) with gradient oracles in both arguments.

A model bundles the evaluation oracle with two gradients: the decision
gradient d f / d x, and the perturbation gradient of the map
y -> f(x, xi - y), which is what the inner certificate solvers consume.
Oracles are pure functions and safe to call concurrently. Built-in models
accept a single sample ``(m,)`` or a batch ``(N, m)``; batched calls return
arrays with a leading ``N`` axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Array = np.ndarray

_SYM_TOL = 1e-9


class DomainError(ValueError):
    """Decision outside a model's barrier domain (objective is +inf there)."""


@dataclass(frozen=True)
class CostModel:
    """Bundle of cost oracles shared by every solver.

    Attributes
    ----------
    dimension_d, dimension_m : int
        Decision and sample dimensions.
    eval : callable
        ``eval(x, xi)``, scalar for a single sample, ``(N,)`` for a batch.
        Must be convex in ``x`` and concave in ``xi``.
    grad_x : callable
        ``grad_x(x, xi)``, derivative in the decision, ``(d,)`` or ``(N, d)``.
    grad_y : callable
        ``grad_y(x, xi, y)``, gradient of ``y -> f(x, xi - y)`` with the same
        shape as ``y``.
    project : callable, optional
        Maps a decision back into the feasible domain after a step.
    quadratic_in_sample : bool
        True when ``xi -> f(x, xi)`` is quadratic, so line searches in the
        perturbation space have a closed form.
    """

    dimension_d: int
    dimension_m: int
    eval: Callable[[Array, Array], float | Array]
    grad_x: Callable[[Array, Array], Array]
    grad_y: Callable[[Array, Array, Array], Array]
    project: Optional[Callable[[Array], Array]] = None
    quadratic_in_sample: bool = False


@dataclass(frozen=True)
class Tolerances:
    """Solver tolerances: certificate gap, decision stop, reuse slack.

    ``subgrad_bound`` caps the step lengths the rules may take;
    ``lipschitz`` is the certificate's Lipschitz constant in the decision.
    The reuse slack must leave room under the decision tolerance scaled by
    the latter: 0 < eps1 <= eps_sa < eps2 / max(lipschitz, 1).
    """

    eps1: float
    eps2: float
    eps_sa: float
    subgrad_bound: float = 1.0
    lipschitz: float = 1.0

    def __post_init__(self):
        if not self.eps1 > 0:
            raise ValueError("eps1 must be positive")
        if not self.eps2 > 0:
            raise ValueError("eps2 must be positive")
        if not self.subgrad_bound > 0:
            raise ValueError("subgrad_bound must be positive")
        if not self.lipschitz > 0:
            raise ValueError("lipschitz must be positive")
        if not self.eps1 <= self.eps_sa:
            raise ValueError("eps_sa must be at least eps1")
        mu = max(self.lipschitz, 1.0)
        if not self.eps_sa < self.eps2 / mu:
            raise ValueError(
                "eps_sa must be below eps2 / max(lipschitz, 1) "
                f"({self.eps2 / mu:g}); got {self.eps_sa:g}"
            )

    @property
    def mu(self) -> float:
        return max(self.lipschitz, 1.0)


def _check_square_sym(mat: Array, name: str) -> Array:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError(f"{name} must be finite")
    if np.max(np.abs(mat - mat.T)) > _SYM_TOL * (1.0 + np.max(np.abs(mat))):
        raise ValueError(f"{name} must be symmetric")
    return mat


def quadratic_model(A, B, C) -> CostModel:
    """Quadratic cost x'Ax + x'B xi + xi'C xi.

    ``A`` (d x d) must be positive semi-definite and ``C`` (m x m) negative
    definite, both symmetric; ``B`` is d x m. Convexity in x and strong
    concavity in the sample follow from the eigenvalue checks here.
    """
    A = _check_square_sym(A, "A")
    C = _check_square_sym(C, "C")
    B = np.asarray(B, dtype=float)
    d, m = A.shape[0], C.shape[0]
    if B.shape != (d, m):
        raise ValueError(f"B must have shape ({d}, {m}), got {B.shape}")
    if np.linalg.eigvalsh(A).min() < -1e-9:
        raise ValueError("A must be positive semi-definite")
    if np.linalg.eigvalsh(C).max() >= -1e-12:
        raise ValueError("C must be negative definite")
    AA = A + A.T
    CC = C + C.T

    def _eval(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        base = float(x @ A @ x)
        if xi.ndim == 1:
            return base + float(x @ B @ xi) + float(xi @ C @ xi)
        return base + xi @ (B.T @ x) + np.einsum("ni,ij,nj->n", xi, C, xi)

    def _grad_x(x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        ax = AA @ x
        if xi.ndim == 1:
            return ax + B @ xi
        return ax[None, :] + xi @ B.T

    def _grad_y(x, xi, y):
        # gradient of y -> f(x, xi - y): -(C + C')(xi - y) - B'x
        x = np.asarray(x, dtype=float)
        s = np.asarray(xi, dtype=float) - np.asarray(y, dtype=float)
        bx = B.T @ x
        if s.ndim == 1:
            return -(CC @ s) - bx
        return -(s @ CC) - bx[None, :]

    return CostModel(d, m, _eval, _grad_x, _grad_y, quadratic_in_sample=True)


def portfolio_model(rho: float) -> CostModel:
    """Two-asset allocation cost with a log barrier keeping x in (0, 1).

    f(x, xi) = -xi1 x - xi2 (1 - x) - rho (log x + log(1 - x)) - xi'xi,
    a scalar decision (d=1) against return-rate pairs (m=2). The extended
    objective is +inf outside (0, 1); evaluating there raises DomainError
    (never NaN or a silent overflow). ``project`` clamps iterates back into
    [1e-6, 1 - 1e-6] so barrier gradients stay finite.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    delta = 1e-6

    def _x_scalar(x) -> float:
        x = np.asarray(x, dtype=float)
        x0 = float(x.reshape(-1)[0]) if x.ndim else float(x)
        if not 0.0 < x0 < 1.0:
            raise DomainError(f"decision {x0} outside barrier domain (0, 1)")
        return x0

    def _eval(x, xi):
        x0 = _x_scalar(x)
        xi = np.asarray(xi, dtype=float)
        bar = -rho * (math.log(x0) + math.log1p(-x0))
        if xi.ndim == 1:
            return (
                -xi[0] * x0 - xi[1] * (1.0 - x0) + bar - float(xi @ xi)
            )
        return (
            -xi[:, 0] * x0
            - xi[:, 1] * (1.0 - x0)
            + bar
            - np.einsum("ni,ni->n", xi, xi)
        )

    def _grad_x(x, xi):
        x0 = _x_scalar(x)
        xi = np.asarray(xi, dtype=float)
        bar = -rho * (1.0 / x0 - 1.0 / (1.0 - x0))
        if xi.ndim == 1:
            return np.array([-xi[0] + xi[1] + bar])
        return (-xi[:, 0] + xi[:, 1] + bar)[:, None]

    def _grad_y(x, xi, y):
        # gradient of y -> f(x, xi - y), verified against finite differences
        x0 = _x_scalar(x)
        s = np.asarray(xi, dtype=float) - np.asarray(y, dtype=float)
        if s.ndim == 1:
            return np.array([x0 + 2.0 * s[0], (1.0 - x0) + 2.0 * s[1]])
        out = np.empty_like(s)
        out[:, 0] = x0 + 2.0 * s[:, 0]
        out[:, 1] = (1.0 - x0) + 2.0 * s[:, 1]
        return out

    def _project(x):
        return np.clip(np.asarray(x, dtype=float), delta, 1.0 - delta)

    return CostModel(
        1, 2, _eval, _grad_x, _grad_y, project=_project, quadratic_in_sample=True
    )
