"""Inexact subgradient descent on the certified worst-case objective.

Each step descends along the expected decision gradient under the current
worst-case distribution, which is an eps-subgradient of the certificate
value. Two step-size rules are provided, each paired with the iteration
horizon that guarantees an eps2-accurate epoch; between steps the previous
certificate is revalidated and only refreshed when its gap has drifted
past the reuse tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .certificates import (
    CertificateInterrupted,
    CertificateResult,
    DataWindow,
    certificate_value,
    generate,
    revalidate,
)
from .model import Tolerances

Array = np.ndarray


@dataclass(frozen=True)
class StepSizeRule:
    """Step length schedule plus the epoch horizon it certifies.

    ``alpha(i)`` takes the within-epoch iteration index (0-based) and
    ``horizon`` bounds how many steps an epoch may need before the best
    iterate is eps2-accurate. ``horizon_capped`` flags schedules whose true
    horizon overflowed the representable cap.
    """

    name: str
    alpha: Callable[[int], float]
    horizon: int
    horizon_capped: bool = False


_HORIZON_CAP = 10**18


def _constant_rule(tol: Tolerances) -> StepSizeRule:
    M = tol.subgrad_bound
    slack = tol.eps2 / tol.mu - tol.eps_sa
    rbar = math.ceil(M * M / (slack * slack))
    alpha = M / math.sqrt(rbar + 1.0)
    return StepSizeRule("constant", lambda i: alpha, rbar)


def _harmonic_rule(tol: Tolerances) -> StepSizeRule:
    M = tol.subgrad_bound
    slack = tol.eps2 / tol.mu - tol.eps_sa

    def ok(r: int) -> bool:
        return M * (3.0 - 1.0 / (r + 1.0)) <= 2.0 * slack * math.log(r + 1.0)

    # exact minimum by scan while small; the predicate is only eventually
    # monotone, so the scan cannot be replaced by bisection here
    for r in range(1, 4097):
        if ok(r):
            return StepSizeRule("harmonic", lambda i: M / (i + 1.0), r)
    # past the scan range both sides are monotone: bracket by doubling, bisect
    lo, hi = 4096, 8192
    while not ok(hi):
        if hi >= _HORIZON_CAP:
            return StepSizeRule(
                "harmonic",
                lambda i: M / (i + 1.0),
                _HORIZON_CAP,
                horizon_capped=True,
            )
        lo, hi = hi, min(hi * 2, _HORIZON_CAP)
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return StepSizeRule("harmonic", lambda i: M / (i + 1.0), hi)


def make_rule(name: Literal["constant", "harmonic"], tol: Tolerances) -> StepSizeRule:
    """Build a step rule; requires eps_sa < eps2 / mu (enforced by Tolerances)."""
    if name == "constant":
        return _constant_rule(tol)
    if name == "harmonic":
        return _harmonic_rule(tol)
    raise ValueError(f"unknown step rule {name!r}")


def subgradient(model, x: Array, cert: CertificateResult) -> Array:
    """Expected decision gradient under the certificate's worst-case law."""
    dist = cert.worst_case
    grads = np.asarray(model.grad_x(x, dist.atoms), dtype=float)
    grads = grads.reshape(dist.atoms.shape[0], -1)
    return dist.weights @ grads


def scaled_step(
    model, x: Array, g: Array, alpha: float, norm: Literal["l1", "l2"] = "l1"
) -> Array:
    """Move against g with length alpha, normalizing only oversized gradients."""
    g = np.asarray(g, dtype=float)
    size = float(np.abs(g).sum()) if norm == "l1" else float(np.linalg.norm(g))
    x_new = np.asarray(x, dtype=float) - alpha * g / max(size, 1.0)
    if model.project is not None:
        x_new = model.project(x_new)
    return x_new


@dataclass
class ReuseOutcome:
    """What happened when a step asked for the certificate at its new point."""

    cert: CertificateResult
    reused: bool
    eta: float


def reuse_or_refresh(
    model,
    x_new: Array,
    window: DataWindow,
    radius: float,
    tol: Tolerances,
    prev: CertificateResult,
    interrupt: Optional[Callable[[], bool]] = None,
    tick: Optional[Callable[[int], None]] = None,
) -> ReuseOutcome:
    """Certificate at the stepped decision, cheaply when the old plan holds.

    A single vertex search prices the old perturbation plan at the new
    decision; within the reuse tolerance the old plan's value (re-evaluated
    at x_new) certifies, otherwise a full solve runs warm-started from it.
    """
    warm = prev.warm_state()
    valid, eta = revalidate(model, x_new, window, radius, warm, tol.eps_sa)
    if tick is not None:
        tick(1)
    if valid:
        j = certificate_value(model, x_new, window, prev.y_eps1)
        reused = CertificateResult(
            j_eps1=j,
            y_eps1=prev.y_eps1,
            z=prev.z,
            worst_case=prev.worst_case,
            vertex_set=prev.vertex_set,
            gamma=prev.gamma,
            eta=eta,
            n_total=prev.n_total,
            radius=prev.radius,
            lp_calls=1,
            cp_calls=0,
            afwa_iters=0,
        )
        return ReuseOutcome(reused, True, eta)
    try:
        cert = generate(
            model,
            x_new,
            window,
            radius,
            tol.eps1,
            warm=warm,
            interrupt=interrupt,
            tick=tick,
        )
    except CertificateInterrupted as ci:
        ci.lp_calls += 1  # the failed revalidation search above
        raise
    return ReuseOutcome(cert, False, cert.eta)
