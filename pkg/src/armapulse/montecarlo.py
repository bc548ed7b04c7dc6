"""Exact SU(2) Monte Carlo of noisy piecewise-constant control.

Every step is exponentiated in closed form, so the only approximation is
the finite number of sampled noise trajectories. Trajectory ``i`` draws
its amplitude and dephasing noise from generators seeded with
``(seed, i, stream)``, which makes results independent of how the
trajectories are split across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import arma, bounds
from .arma import ArmaModel
from .composite import CompositePulse
from .control import NoiseModel, PulseSequence, infidelity_control_only, infidelity_full
from .errors import AllPerturbationsNonStationary, NonStationary
from .optimizer import QpProblem, solve_qp

__all__ = [
    "SimConfig",
    "FidelityEstimate",
    "step_unitary",
    "step_unitaries",
    "compose",
    "rx",
    "gate_infidelity",
    "trajectory_generators",
    "sample_noise",
    "single_axis_infidelities",
    "simulate_single_axis",
    "simulate_composite",
    "ValidationRow",
    "validate_sequence",
    "RobustnessRow",
    "robustness_sweep",
]

EPS_STREAM = 0
DEPHASING_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    num_trajectories: int = 10_000
    seed: int = 0
    burn_in: Optional[int] = None

    def __post_init__(self):
        if self.num_trajectories < 1:
            raise ValueError("num_trajectories must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


class FidelityEstimate(NamedTuple):
    mean_infidelity: float
    standard_error: float
    num_trajectories: int


def step_unitaries(theta, eps, j, phi) -> np.ndarray:
    """Broadcast version of :func:`step_unitary`; output shape ``(..., 2, 2)``."""
    theta, eps, j, phi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (theta, eps, j, phi)))
    drive = (1.0 + eps) * theta
    vx = drive * np.cos(phi)
    vy = drive * np.sin(phi)
    vz = j
    r = np.sqrt(vx**2 + vy**2 + vz**2)
    c = np.cos(r / 2)
    # sin(r/2)/r without the 0/0 at r = 0
    s = 0.5 * np.sinc(r / (2 * np.pi))
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * vz
    out[..., 0, 1] = -1j * s * (vx - 1j * vy)
    out[..., 1, 0] = -1j * s * (vx + 1j * vy)
    out[..., 1, 1] = c + 1j * s * vz
    return out


def step_unitary(theta: float, eps: float, j: float, phi: float) -> np.ndarray:
    """``exp(-i [(j/2) sz + (1 + eps)(theta/2)(cos phi sx + sin phi sy)])``."""
    return step_unitaries(theta, eps, j, phi)


def compose(steps: np.ndarray) -> np.ndarray:
    """Time-ordered product ``U_N ... U_1`` over axis ``-3``."""
    total = steps[..., 0, :, :]
    for k in range(1, steps.shape[-3]):
        total = steps[..., k, :, :] @ total
    return total


def rx(theta: float) -> np.ndarray:
    return step_unitary(theta, 0.0, 0.0, 0.0)


def gate_infidelity(ideal: np.ndarray, actual: np.ndarray) -> np.ndarray:
    """``1 - |Tr(ideal^dag actual)|^2 / 4``, insensitive to global phase.

    For ``V = ideal^dag actual`` in U(2) this equals
    ``(|V_01|^2 + |V_10|^2) / 2 + |V_00 - V_11|^2 / 4``, which avoids the
    cancellation in ``1 - F`` for near-ideal gates.
    """
    v = ideal.conj().T @ actual
    return (
        (np.abs(v[..., 0, 1]) ** 2 + np.abs(v[..., 1, 0]) ** 2) / 2.0
        + np.abs(v[..., 0, 0] - v[..., 1, 1]) ** 2 / 4.0
    )


def trajectory_generators(seed: int, indices: Sequence[int], stream: int):
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, int(i), stream])))
        for i in indices
    ]


def sample_noise(noise: NoiseModel, n: int, cfg: SimConfig, indices: Optional[Sequence[int]] = None):
    """Amplitude and dephasing-residual samples, each of shape ``(K, n)``."""
    if indices is None:
        indices = range(cfg.num_trajectories)
    eps = arma.sample_trajectories(
        noise.control, n, trajectory_generators(cfg.seed, indices, EPS_STREAM), cfg.burn_in
    )
    if noise.dephasing_residual is None:
        jt = np.zeros_like(eps)
    else:
        jt = arma.sample_trajectories(
            noise.dephasing_residual,
            n,
            trajectory_generators(cfg.seed, indices, DEPHASING_STREAM),
            cfg.burn_in,
        )
    return eps, jt


def single_axis_infidelities(seq: PulseSequence, eps, jt, mu_j: float = 0.0) -> np.ndarray:
    """Per-trajectory gate infidelity against ``R_X(theta_Q)``."""
    steps = step_unitaries(seq.thetas, eps, mu_j + np.asarray(jt), 0.0)
    return gate_infidelity(rx(seq.target_angle), compose(steps))


def _estimate(values: np.ndarray) -> FidelityEstimate:
    k = values.size
    mean = math.fsum(values) / k
    if k < 2:
        return FidelityEstimate(mean, float("nan"), k)
    var = math.fsum((values - mean) ** 2) / (k - 1)
    return FidelityEstimate(mean, math.sqrt(var / k), k)


def _chunked(total: int, n_jobs: int, work) -> np.ndarray:
    chunk = max(1, min(2048, -(-total // max(n_jobs, 1))))
    ranges = [range(s, min(s + chunk, total)) for s in range(0, total, chunk)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(work, ranges))
    else:
        parts = [work(r) for r in ranges]
    return np.concatenate(parts)


def simulate_single_axis(
    seq: PulseSequence, noise: NoiseModel, cfg: SimConfig, n_jobs: int = 1
) -> FidelityEstimate:
    """Mean gate infidelity of a sigma_x sequence under amplitude noise and dephasing."""

    def work(indices):
        eps, jt = sample_noise(noise, seq.n, cfg, indices)
        return single_axis_infidelities(seq, eps, jt, noise.dephasing_mean)

    return _estimate(_chunked(cfg.num_trajectories, n_jobs, work))


def simulate_composite(cp: CompositePulse, amp_noise, cfg: SimConfig, n_jobs: int = 1) -> FidelityEstimate:
    """Mean gate infidelity of a two-axis composite pulse under amplitude noise."""
    thetas = np.asarray(cp.thetas)
    phis = np.asarray(cp.phis)
    ideal = rx(cp.target_angle)

    def work(indices):
        eps = arma.sample_trajectories(
            amp_noise, cp.n, trajectory_generators(cfg.seed, indices, EPS_STREAM), cfg.burn_in
        )
        return gate_infidelity(ideal, compose(step_unitaries(thetas, eps, 0.0, phis)))

    return _estimate(_chunked(cfg.num_trajectories, n_jobs, work))


class ValidationRow(NamedTuple):
    label: str
    n: int
    analytic_infid: float
    mc_infid: float
    mc_se: float
    second_order_bound: float

    @property
    def agrees(self) -> bool:
        return abs(self.analytic_infid - self.mc_infid) <= 3 * self.mc_se + self.second_order_bound


def validate_sequence(
    label: str, seq: PulseSequence, noise: NoiseModel, cfg: SimConfig, n_jobs: int = 1
) -> ValidationRow:
    """First-order prediction, simulated infidelity and the higher-order budget."""
    analytic = infidelity_full(seq, noise).total
    est = simulate_single_axis(seq, noise, cfg, n_jobs)
    bound = bounds.validation_bound(seq, noise)
    return ValidationRow(label, seq.n, analytic, est.mean_infidelity, est.standard_error, bound)


class RobustnessRow(NamedTuple):
    a1: float
    b1: float
    deviation: float
    worst_increase: float
    mean_increase: float
    num_valid: int


def _l1_perturbations(rng: np.random.Generator, radius: float, count: int) -> np.ndarray:
    """Points spread uniformly over the diamond ``|da| + |db| = radius``."""
    split = rng.uniform(0.0, 1.0, count)
    signs = rng.choice([-1.0, 1.0], size=(count, 2))
    return np.column_stack((split, 1.0 - split)) * radius * signs


def robustness_sweep(
    base_models: Sequence[ArmaModel],
    deviations: Sequence[float],
    samples_per_eps: int,
    theta_q: float,
    n: int,
    seed: int = 0,
) -> List[RobustnessRow]:
    """Cost of designing for the wrong ARMA(1,1) model.

    The optimum for each base model is evaluated under perturbed models
    ``(a1 + da, b1 + db)`` with ``|da| + |db|`` equal to each deviation.
    The relative increase is measured against the perturbed model's own
    optimum; non-stationary perturbations are skipped.
    """
    rows = []
    for m_idx, base in enumerate(base_models):
        if base.p != 1 or base.q != 1:
            raise ValueError("robustness sweep expects ARMA(1,1) base models")
        a1, b1 = base.ar_coeffs[0], base.ma_coeffs[0]
        designed = solve_qp(QpProblem.from_model(base, n, theta_q))
        for e_idx, radius in enumerate(deviations):
            rng = np.random.default_rng([seed, m_idx, e_idx])
            increases = []
            for da, db in _l1_perturbations(rng, float(radius), samples_per_eps):
                try:
                    model = ArmaModel((a1 + da,), (b1 + db,), base.sigma_w2)
                except NonStationary:
                    continue
                gammas = arma.autocovariance(model, n - 1)
                matched = solve_qp(QpProblem(arma.covariance_matrix(gammas, n), theta_q))
                best = infidelity_control_only(matched, gammas)
                actual = infidelity_control_only(designed, gammas)
                increases.append((actual - best) / best)
            if not increases:
                raise AllPerturbationsNonStationary(
                    f"no stationary perturbation of ({a1}, {b1}) at deviation {radius}"
                )
            rows.append(
                RobustnessRow(a1, b1, float(radius), max(increases), math.fsum(increases) / len(increases), len(increases))
            )
    return rows
