"""Optimal single-axis pulse sequences.

Pure amplitude noise gives a convex quadratic program with a single
equality constraint, solved exactly through its KKT system. Adding
dephasing makes the objective nonconvex; it is minimized by projected
gradient descent on the plane ``sum(theta) = theta_Q`` with forward and
reverse sweeps over the sequence length supplying starting points.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from . import arma
from .control import (
    InfidelityBreakdown,
    NoiseModel,
    PulseSequence,
    infidelity_full,
    uniform_sequence,
)
from .errors import BadInit, NonFiniteObjective, SingularAfterRidge

__all__ = [
    "QpProblem",
    "solve_kkt",
    "solve_qp",
    "kkt_residual",
    "Objective",
    "optimize_full",
    "reverse_init",
    "SweepResult",
    "sweep_lengths",
    "CrossoverRow",
    "crossover_scan",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class QpProblem:
    """Minimize ``x^T A x / 4`` subject to ``sum(x) = target_angle``."""

    covariance: np.ndarray
    target_angle: float

    @classmethod
    def from_model(cls, model, n: int, target_angle: float) -> "QpProblem":
        return cls(arma.covariance_matrix(arma.autocovariance(model, n - 1), n), target_angle)


def _kkt_matrix(cov: np.ndarray) -> np.ndarray:
    n = cov.shape[0]
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = cov
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    return kkt


def solve_kkt(cov, target_angle: float):
    """Solve ``[[A, 1], [1^T, 0]] [x, lam] = [0, theta]``.

    Returns ``(x, lam)``. A numerically singular system is retried once with
    ``1e-12 trace(A) / N`` added to the diagonal of ``A``.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    rhs = np.zeros(n + 1)
    rhs[n] = target_angle
    kkt = _kkt_matrix(cov)
    if np.linalg.cond(kkt) > _COND_LIMIT:
        ridge = 1e-12 * np.trace(cov) / n
        if not ridge > 0:
            raise SingularAfterRidge("covariance has zero trace")
        kkt = _kkt_matrix(cov + ridge * np.eye(n))
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularAfterRidge(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularAfterRidge("KKT solution is not finite")
    return sol[:n], sol[n]


def kkt_residual(cov, x, lam, target_angle: float) -> float:
    """Euclidean norm of the KKT residual at ``(x, lam)``."""
    cov = np.asarray(cov, dtype=float)
    stat = cov @ x + lam
    feas = math.fsum(x) - target_angle
    return float(math.sqrt(stat @ stat + feas * feas))


def solve_qp(problem: QpProblem) -> PulseSequence:
    """Global minimizer ``theta_Q A^{-1} 1 / (1^T A^{-1} 1)`` of the convex QP."""
    x, _ = solve_kkt(problem.covariance, problem.target_angle)
    # absorb the last rounding of the constraint into the sequence
    x = x + (problem.target_angle - math.fsum(x)) / x.size
    return PulseSequence(x, problem.target_angle)


class Objective:
    """Total first-order infidelity ``(A + B + C) / 4`` with analytic gradient.

    Uses dense covariance matrices, so it is a separate code path from
    :func:`armapulse.control.infidelity_full`.
    """

    def __init__(self, noise: NoiseModel, n: int):
        self.n = n
        self.cov_e = arma.covariance_matrix(noise.control_gammas(n), n)
        self.weights = arma.covariance_matrix(noise.dephasing_gammas(n), n) + noise.dephasing_mean**2

    def __call__(self, thetas):
        return self.value_and_grad(thetas)[0]

    def value_and_grad(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        ce_x = self.cov_e @ thetas
        z = np.exp(1j * np.cumsum(thetas))
        wz = self.weights @ np.conj(z)
        dephasing = float(np.real(z @ wz))
        value = (thetas @ ce_x + dephasing) / 4.0
        d_phase = -2.0 * np.imag(z * wz)
        # theta_l moves every accumulated angle Theta_m with m >= l
        d_theta = np.cumsum(d_phase[::-1])[::-1]
        grad = (2.0 * ce_x + d_theta) / 4.0
        return value, grad


def optimize_full(
    noise: NoiseModel,
    theta_q: float,
    n: int,
    init: Optional[PulseSequence] = None,
    max_iters: int = 100_000,
    tol: float = 1e-10,
) -> Tuple[PulseSequence, InfidelityBreakdown]:
    """Projected gradient descent on the total first-order infidelity.

    Steps are taken along the gradient projected onto the zero-sum plane,
    with a Barzilai-Borwein trial length shortened by Armijo backtracking
    (``c = 1e-4``, halving). Stops when the projected gradient norm drops
    below ``tol`` or after ``max_iters`` iterations. The result never has a
    larger objective than ``init``.
    """
    if init is None:
        init = uniform_sequence(theta_q, n)
    if init.n != n:
        raise BadInit(f"initial sequence has {init.n} steps, expected {n}")
    if abs(math.fsum(init.thetas) - theta_q) > 1e-9 * max(1.0, abs(theta_q)):
        raise BadInit("initial sequence does not sum to the target angle")

    objective = Objective(noise, n)
    x = init.thetas.copy()
    f, g = objective.value_and_grad(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NonFiniteObjective("objective is not finite at the initial sequence")
    pg = g - g.mean()
    step = 1.0 / max(np.linalg.norm(objective.cov_e, 2) / 2.0, 1e-300)
    step = min(step, 1.0 / max(np.linalg.norm(pg), 1e-300))

    for _ in range(max_iters):
        pg_norm_sq = float(pg @ pg)
        if math.sqrt(pg_norm_sq) < tol:
            break
        for _halving in range(200):
            x_new = x - step * pg
            f_new, g_new = objective.value_and_grad(x_new)
            if math.isfinite(f_new) and f_new <= f - 1e-4 * step * pg_norm_sq:
                break
            step *= 0.5
        else:
            break  # no decrease representable in floating point
        if not np.all(np.isfinite(g_new)):
            raise NonFiniteObjective("gradient is not finite")
        pg_new = g_new - g_new.mean()
        s = x_new - x
        y = pg_new - pg
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else 2.0 * step
        x, f, pg = x_new, f_new, pg_new

    x = x + (theta_q - math.fsum(x)) / n
    result = PulseSequence(x, theta_q)
    breakdown = infidelity_full(result, noise)
    start = infidelity_full(init, noise)
    if not math.isfinite(breakdown.total):
        raise NonFiniteObjective("final objective is not finite")
    if breakdown.total > start.total:
        return PulseSequence(init.thetas, theta_q), start
    return result, breakdown


def reverse_init(seq: PulseSequence) -> PulseSequence:
    """Starting point of length ``N - 1`` built from a length-``N`` solution.

    Removes the step of smallest magnitude and spreads its angle equally
    over the remaining steps, preserving the total angle.
    """
    if seq.n < 2:
        raise ValueError("cannot shorten a single-step sequence")
    idx = int(np.argmin(np.abs(seq.thetas)))
    removed = seq.thetas[idx]
    rest = np.delete(seq.thetas, idx) + removed / (seq.n - 1)
    rest = rest + (seq.target_angle - math.fsum(rest)) / rest.size
    return PulseSequence(rest, seq.target_angle)


class SweepEntry(NamedTuple):
    sequence: PulseSequence
    breakdown: InfidelityBreakdown
    direction: str


@dataclass
class SweepResult:
    """Per-length optimization results of the forward and reverse passes.

    ``best`` keeps, for each length, the reverse result only when it is
    lower than the forward one by more than 1e-14.
    """

    forward: Dict[int, SweepEntry] = field(default_factory=dict)
    reverse: Dict[int, SweepEntry] = field(default_factory=dict)
    best: Dict[int, SweepEntry] = field(default_factory=dict)

    @property
    def lengths(self) -> List[int]:
        return sorted(self.best)


def sweep_lengths(
    noise: NoiseModel,
    theta_q: float,
    n_min: int,
    n_max: int,
    max_iters: int = 100_000,
    tol: float = 1e-10,
    n_jobs: int = 1,
) -> SweepResult:
    """Optimize every length in ``n_min..n_max`` from two kinds of start.

    The forward pass starts each length from the constant drive. The reverse
    pass walks down from ``n_max``, starting length ``N`` from
    :func:`reverse_init` of the best length-``N+1`` solution.
    """
    if n_min < 1 or n_max < n_min:
        raise ValueError("need 1 <= n_min <= n_max")
    lengths = list(range(n_min, n_max + 1))
    result = SweepResult()

    def forward(n):
        return optimize_full(noise, theta_q, n, None, max_iters, tol)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(forward, lengths))
    else:
        outcomes = [forward(n) for n in lengths]
    for n, (seq, bd) in zip(lengths, outcomes):
        result.forward[n] = SweepEntry(seq, bd, "forward")

    result.best[n_max] = result.forward[n_max]
    for n in range(n_max - 1, n_min - 1, -1):
        init = reverse_init(result.best[n + 1].sequence)
        seq, bd = optimize_full(noise, theta_q, n, init, max_iters, tol)
        result.reverse[n] = SweepEntry(seq, bd, "reverse")
        fwd = result.forward[n]
        result.best[n] = result.reverse[n] if bd.total < fwd.breakdown.total - 1e-14 else fwd
    return result


class CrossoverRow(NamedTuple):
    n: int
    share_a: float
    share_b: float
    share_c: float
    total: float


def crossover_scan(
    noise: NoiseModel,
    theta_q: float,
    lengths,
    sweep: Optional[SweepResult] = None,
    **sweep_kwargs,
) -> List[CrossoverRow]:
    """Relative weight of each infidelity term at the optimized sequences.

    Runs :func:`sweep_lengths` over the span of ``lengths`` unless a
    finished ``sweep`` is supplied.
    """
    lengths = sorted(lengths)
    if sweep is None:
        sweep = sweep_lengths(noise, theta_q, lengths[0], lengths[-1], **sweep_kwargs)
    rows = []
    for n in lengths:
        bd = sweep.best[n].breakdown
        rows.append(CrossoverRow(n, *bd.shares(), bd.total))
    return rows
