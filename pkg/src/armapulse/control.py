"""Single-axis pulse sequences, noise models and first-order infidelities.

A sequence applies ``theta_j`` radians of sigma_x rotation in step ``j``
(unit duration). Multiplicative amplitude noise ``eps_j`` and dephasing
``J_j = mu_J + Jtilde_j`` enter the first-order error vector

    a_x = sum_j eps_j theta_j / 2
    a_y = sum_j J_j sin(Theta_j) / 2
    a_z = sum_j J_j cos(Theta_j) / 2

where ``Theta_j = theta_1 + ... + theta_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from . import arma
from .arma import ArmaModel, DcNoiseModel
from .errors import InsufficientLags, LengthMismatch

__all__ = [
    "PulseSequence",
    "NoiseModel",
    "ErrorVector",
    "InfidelityBreakdown",
    "WeakNoiseCheck",
    "uniform_sequence",
    "accumulated_angles",
    "error_vector_first_order",
    "infidelity_control_only",
    "infidelity_full",
    "infidelity_quadratic_oracle",
    "fidelity_series",
    "filter_functions",
    "weak_noise_check",
]

SUM_TOLERANCE = 1e-9


class PulseSequence:
    """Per-step rotation angles summing to the target angle.

    No modulo-2pi wrapping is applied: the angles must add up to
    ``target_angle`` itself.
    """

    def __init__(self, thetas: Sequence[float], target_angle: Optional[float] = None):
        thetas = np.array(thetas, dtype=float).ravel()
        if thetas.size < 1:
            raise ValueError("a pulse sequence needs at least one step")
        if not np.all(np.isfinite(thetas)):
            raise ValueError("pulse angles must be finite")
        total = math.fsum(thetas)
        if target_angle is None:
            target_angle = total
        target_angle = float(target_angle)
        if abs(total - target_angle) > SUM_TOLERANCE * max(1.0, abs(target_angle)):
            raise ValueError(
                f"pulse angles sum to {total!r}, not the target angle {target_angle!r}"
            )
        thetas.setflags(write=False)
        self.thetas = thetas
        self.target_angle = target_angle

    @property
    def n(self) -> int:
        return self.thetas.size

    def __len__(self):
        return self.thetas.size

    def __repr__(self):
        return f"PulseSequence(thetas={self.thetas.tolist()!r}, target_angle={self.target_angle!r})"

    def __eq__(self, other):
        if not isinstance(other, PulseSequence):
            return NotImplemented
        return self.target_angle == other.target_angle and np.array_equal(self.thetas, other.thetas)

    def to_dict(self) -> dict:
        return {"thetas": self.thetas.tolist(), "target_angle": self.target_angle}

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSequence":
        extra = set(data) - {"thetas", "target_angle"}
        if extra:
            raise ValueError(f"unexpected keys for pulse sequence: {sorted(extra)}")
        return cls(data["thetas"], data.get("target_angle"))


def uniform_sequence(theta_q: float, n: int) -> PulseSequence:
    """Constant drive: ``n`` equal steps of ``theta_q / n``."""
    return PulseSequence(np.full(n, theta_q / n), theta_q)


@dataclass(frozen=True)
class NoiseModel:
    """Amplitude noise plus dephasing.

    Parameters
    ----------
    control : ArmaModel or DcNoiseModel
        Multiplicative amplitude noise ``eps``.
    dephasing_mean : float
        Coherent detuning ``mu_J`` in rad per step.
    dephasing_residual : ArmaModel, optional
        Zero-mean stationary part of the dephasing.
    """

    control: Union[ArmaModel, DcNoiseModel]
    dephasing_mean: float = 0.0
    dephasing_residual: Optional[ArmaModel] = None

    def __post_init__(self):
        object.__setattr__(self, "dephasing_mean", float(self.dephasing_mean))
        if not math.isfinite(self.dephasing_mean):
            raise ValueError("dephasing_mean must be finite")
        if self.dephasing_residual is not None:
            arma.validate_model(self.dephasing_residual)

    def control_gammas(self, n: int) -> np.ndarray:
        return arma.autocovariance(self.control, n - 1)

    def dephasing_gammas(self, n: int) -> np.ndarray:
        if self.dephasing_residual is None:
            return np.zeros(n)
        return arma.autocovariance(self.dephasing_residual, n - 1)

    def to_dict(self) -> dict:
        return {
            "control": self.control.to_dict(),
            "dephasing_mean": self.dephasing_mean,
            "dephasing_residual": None
            if self.dephasing_residual is None
            else self.dephasing_residual.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        extra = set(data) - {"control", "dephasing_mean", "dephasing_residual"}
        if extra:
            raise ValueError(f"unexpected keys for noise model: {sorted(extra)}")
        residual = data.get("dephasing_residual")
        if residual is not None:
            residual = arma.model_from_dict(residual)
            if not isinstance(residual, ArmaModel):
                raise ValueError("dephasing_residual must be an ARMA model")
        return cls(
            arma.model_from_dict(data["control"]),
            data.get("dephasing_mean", 0.0),
            residual,
        )


class ErrorVector(NamedTuple):
    ax: float
    ay: float
    az: float

    def norm_sq(self):
        return self.ax**2 + self.ay**2 + self.az**2


@dataclass(frozen=True)
class InfidelityBreakdown:
    """First-order infidelity split into coherent dephasing (A), correlated
    dephasing (B) and control noise (C); ``total = (A + B + C) / 4``."""

    term_a: float
    term_b: float
    term_c: float

    @property
    def total(self) -> float:
        return (self.term_a + self.term_b + self.term_c) / 4.0

    def shares(self):
        """Fractions ``(A, B, C) / (A + B + C)``; all zero for a zero total."""
        s = self.term_a + self.term_b + self.term_c
        if s == 0:
            return (0.0, 0.0, 0.0)
        return (self.term_a / s, self.term_b / s, self.term_c / s)

    def as_row(self):
        return (self.term_a, self.term_b, self.term_c, self.total)


def accumulated_angles(thetas) -> np.ndarray:
    """``Theta_j = theta_1 + ... + theta_j`` for each step."""
    return np.cumsum(thetas, axis=-1)


def error_vector_first_order(seq: PulseSequence, eps_traj, j_traj, mu_j: float = 0.0):
    """First-order error vector for given noise realizations.

    ``eps_traj`` and ``j_traj`` (the zero-mean dephasing residual) have
    length ``N`` or shape ``(K, N)`` for ``K`` realizations. A single
    realization returns an :class:`ErrorVector`, a batch an array of shape
    ``(K, 3)``.
    """
    eps = np.asarray(eps_traj, dtype=float)
    jt = np.asarray(j_traj, dtype=float)
    if eps.shape[-1] != seq.n or jt.shape[-1] != seq.n:
        raise LengthMismatch(
            f"trajectories of length {eps.shape[-1]} and {jt.shape[-1]} for {seq.n} steps"
        )
    phase = accumulated_angles(seq.thetas)
    dephasing = (mu_j + jt) / 2.0
    ax = eps @ seq.thetas / 2.0
    ay = dephasing @ np.sin(phase)
    az = dephasing @ np.cos(phase)
    if eps.ndim == 1 and jt.ndim == 1:
        return ErrorVector(float(ax), float(ay), float(az))
    return np.stack(np.broadcast_arrays(ax, ay, az), axis=-1)


def _lag_products(thetas: np.ndarray, n_lags: int) -> np.ndarray:
    """``sum_j theta_j theta_{j-h}`` for ``h = 0..n_lags-1``."""
    n = thetas.size
    out = np.zeros(n_lags)
    for h in range(min(n_lags, n)):
        out[h] = np.dot(thetas[h:], thetas[: n - h])
    return out


def _lag_cosines(thetas: np.ndarray) -> np.ndarray:
    """``sum_{i=h+1}^{N} cos(theta_{i-h+1} + ... + theta_i)`` for ``h = 0..N-1``."""
    phase = accumulated_angles(thetas)
    n = thetas.size
    out = np.zeros(n)
    out[0] = n
    for h in range(1, n):
        out[h] = np.sum(np.cos(phase[h:] - phase[: n - h]))
    return out


def _check_lags(gammas: np.ndarray, n: int):
    if len(gammas) < n:
        raise InsufficientLags(f"need lags 0..{n - 1}, have {len(gammas)} values")


def _term_c(thetas: np.ndarray, gammas: np.ndarray) -> float:
    n = thetas.size
    lags = _lag_products(thetas, n)
    return float(gammas[0] * lags[0] + 2.0 * np.dot(gammas[1:n], lags[1:]))


def infidelity_control_only(seq: PulseSequence, gammas) -> float:
    """First-order infidelity under amplitude noise alone.

    ``(1/4) [gamma(0) sum theta_j^2 + 2 sum_h gamma(h) sum_j theta_j theta_{j-h}]``,
    equal to ``x^T A x / 4`` for the Toeplitz covariance ``A``.
    """
    gammas = np.asarray(gammas, dtype=float)
    _check_lags(gammas, seq.n)
    return _term_c(seq.thetas, gammas) / 4.0


def infidelity_full(seq: PulseSequence, noise: NoiseModel) -> InfidelityBreakdown:
    """First-order infidelity terms for amplitude noise plus dephasing.

    With ``c(h) = sum_i cos(theta_{i-h+1} + ... + theta_i)`` over the lag
    window,

    * ``A = mu_J^2 (N + 2 sum_h c(h))``
    * ``B = N gamma_J(0) + 2 sum_h gamma_J(h) c(h)``
    * ``C = gamma_eps(0) sum theta^2 + 2 sum_h gamma_eps(h) sum_j theta_j theta_{j-h}``
    """
    n = seq.n
    gam_e = noise.control_gammas(n)
    gam_j = noise.dephasing_gammas(n)
    _check_lags(gam_e, n)
    _check_lags(gam_j, n)
    cosines = _lag_cosines(seq.thetas)
    lag_sum = float(np.sum(cosines[1:]))
    term_a = noise.dephasing_mean**2 * (n + 2.0 * lag_sum)
    term_b = float(gam_j[0] * n + 2.0 * np.dot(gam_j[1:n], cosines[1:]))
    term_c = _term_c(seq.thetas, gam_e)
    return InfidelityBreakdown(term_a, term_b, term_c)


def linear_maps(seq: PulseSequence):
    """Dense maps with ``a_x = m_eps @ eps`` and ``(a_y, a_z) = m_j @ J``.

    Returns ``m_eps`` of shape ``(N,)`` and ``m_j`` of shape ``(2, N)``.
    """
    phase = accumulated_angles(seq.thetas)
    m_eps = seq.thetas / 2.0
    m_j = np.vstack((np.sin(phase), np.cos(phase))) / 2.0
    return m_eps, m_j


def infidelity_quadratic_oracle(seq: PulseSequence, noise: NoiseModel) -> float:
    """Mean squared error-vector norm by dense matrix algebra.

    Independent of the lag-sum formulas in :func:`infidelity_full`; used to
    cross-check them.
    """
    n = seq.n
    cov_e = arma.covariance_matrix(noise.control_gammas(n), n)
    cov_j = arma.covariance_matrix(noise.dephasing_gammas(n), n)
    m_eps, m_j = linear_maps(seq)
    mean_j = m_j @ np.full(n, noise.dephasing_mean)
    return float(
        m_eps @ cov_e @ m_eps + np.trace(m_j @ cov_j @ m_j.T) + mean_j @ mean_j
    )


def fidelity_series(a1_sq_mean: float, terms: int) -> float:
    """Partial sum ``(1/2)[1 + sum_{m=0}^{terms} (-1)^m 4^m / (2m)! x^m]``."""
    if a1_sq_mean < 0:
        raise ValueError("a1_sq_mean must be >= 0")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    parts = [(-4.0 * a1_sq_mean) ** m / math.factorial(2 * m) for m in range(terms + 1)]
    return 0.5 * (1.0 + math.fsum(parts))


def filter_functions(seq: PulseSequence, omegas):
    """Squared amplitude and dephasing filter functions at each frequency.

    ``F_xx(w) = sum_j theta_j e^{i w j}`` and
    ``F_zy(w) = sum_j sin(Theta_j) e^{i w j}``; returns
    ``(|F_xx|^2, |F_zy|^2)`` as arrays shaped like ``omegas``.
    """
    omegas = np.asarray(omegas, dtype=float)
    steps = np.arange(1, seq.n + 1)
    kernel = np.exp(1j * np.multiply.outer(omegas, steps))
    f_xx = kernel @ seq.thetas
    f_zy = kernel @ np.sin(accumulated_angles(seq.thetas))
    return np.abs(f_xx) ** 2, np.abs(f_zy) ** 2


class WeakNoiseCheck(NamedTuple):
    passed: bool
    margin: float


def weak_noise_check(noise: NoiseModel, seq: PulseSequence, z: float = 3.291) -> WeakNoiseCheck:
    """Confidence bound on the accumulated gate-angle error.

    Tests ``max(|<eps> -+ z sigma_eps / sqrt(N)|) |theta_Q| < pi`` for the
    zero-mean amplitude noise; ``margin`` is the left side divided by pi.
    """
    if z <= 0:
        raise ValueError("z must be > 0")
    sigma = math.sqrt(noise.control_gammas(1)[0])
    mean = 0.0
    spread = z * sigma / math.sqrt(seq.n)
    lhs = max(abs(mean - spread), abs(mean + spread)) * abs(seq.target_angle)
    return WeakNoiseCheck(lhs < math.pi, lhs / math.pi)
