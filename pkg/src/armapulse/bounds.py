"""Higher-order error budgets for the first-order infidelity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import control
from .control import NoiseModel, PulseSequence
from .errors import InsufficientLags

__all__ = [
    "GammaSums",
    "gamma_sum",
    "gamma_sums",
    "second_order_bound",
    "quartic_moment",
    "validation_bound",
    "second_to_first_ratio_control",
    "WeakNoiseReport",
    "weak_noise_regime_report",
]


@dataclass(frozen=True)
class GammaSums:
    gamma_ee: float
    gamma_jj: float
    gamma_ej: float
    omega_max: float
    n: int


def gamma_sum(gammas, n: int) -> float:
    """``sum_{h=0}^{n-1} c(h) (n - h) gamma(h)`` with ``c(0) = 1`` and ``c(h) = 2``.

    This is the sum of every entry of the ``n x n`` Toeplitz covariance.
    """
    gammas = np.asarray(gammas, dtype=float)
    if len(gammas) < n:
        raise InsufficientLags(f"need lags 0..{n - 1}, have {len(gammas)} values")
    terms = [(n - h) * gammas[h] * (1.0 if h == 0 else 2.0) for h in range(n)]
    return math.fsum(terms)


def gamma_sums(noise: NoiseModel, seq: PulseSequence, gamma_ej: float = 0.0) -> GammaSums:
    """Gamma sums of a noise model over the length of ``seq``.

    The dephasing sum uses the second moment ``mu_J^2 + gamma_Jtilde(h)`` of
    the full ``J``; ``omega_max`` is the largest step magnitude.
    """
    n = seq.n
    g_ee = gamma_sum(noise.control_gammas(n), n)
    g_jj = n * n * noise.dephasing_mean**2 + gamma_sum(noise.dephasing_gammas(n), n)
    return GammaSums(g_ee, g_jj, float(gamma_ej), float(np.max(np.abs(seq.thetas))), n)


def second_order_bound(g: GammaSums) -> float:
    """``(7/16) G_JJ^2 + (7/8) W^2 G_ee G_JJ + (7/4) (W G_eJ)^2`` with ``W = omega_max``."""
    w2 = g.omega_max**2
    return (
        7.0 / 16.0 * g.gamma_jj**2
        + 7.0 / 8.0 * w2 * g.gamma_ee * g.gamma_jj
        + 7.0 / 4.0 * w2 * g.gamma_ej**2
    )


def quartic_moment(seq: PulseSequence, noise: NoiseModel) -> float:
    """Exact ``<|a_1|^4>`` for Gaussian noise.

    With ``a_1 = m + xi``, ``xi ~ N(0, S)``:
    ``(tr S + |m|^2)^2 + 2 tr(S^2) + 4 m^T S m``.
    """
    from .arma import covariance_matrix

    n = seq.n
    m_eps, m_j = control.linear_maps(seq)
    cov = np.zeros((3, 3))
    cov[0, 0] = m_eps @ covariance_matrix(noise.control_gammas(n), n) @ m_eps
    cov[1:, 1:] = m_j @ covariance_matrix(noise.dephasing_gammas(n), n) @ m_j.T
    mean = np.concatenate(([0.0], m_j @ np.full(n, noise.dephasing_mean)))
    trace = np.trace(cov) + mean @ mean
    return float(trace**2 + 2.0 * np.trace(cov @ cov) + 4.0 * mean @ cov @ mean)


def validation_bound(seq: PulseSequence, noise: NoiseModel, gamma_ej: float = 0.0) -> float:
    """Magnitude budget for ``|first order - exact|`` at second order.

    :func:`second_order_bound` covers the second- and third-order Magnus
    terms but leaves out ``-(1/3) <|a_1|^4>``, which is the entire
    correction when the noise commutes with the control. Both are added.
    """
    g = gamma_sums(noise, seq, gamma_ej)
    return second_order_bound(g) + quartic_moment(seq, noise) / 3.0


def second_to_first_ratio_control(a1_sq_mean: float) -> float:
    """Second over first term of the fidelity series, ``<|a_1|^2> / 3``."""
    if a1_sq_mean < 0:
        raise ValueError("a1_sq_mean must be >= 0")
    return a1_sq_mean / 3.0


@dataclass(frozen=True)
class WeakNoiseReport:
    first_order: float
    second_order_bound: float
    second_order_bound_loose: float
    ratio: float
    weak_noise_margin: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "first_order": self.first_order,
            "second_order_bound": self.second_order_bound,
            "second_order_bound_loose": self.second_order_bound_loose,
            "ratio": self.ratio,
            "weak_noise_margin": self.weak_noise_margin,
            "pass": self.passed,
        }


def weak_noise_regime_report(noise: NoiseModel, seq: PulseSequence, z: float = 3.291) -> WeakNoiseReport:
    """Bundle the regime-of-validity diagnostics for one sequence.

    Passes when the gate-angle check passes, the series ratio is below 0.1
    and the second-order bound does not exceed the first-order term. The
    loose bound replaces the largest step by pi.
    """
    check = control.weak_noise_check(noise, seq, z)
    first = control.infidelity_full(seq, noise).total
    g = gamma_sums(noise, seq)
    bound = second_order_bound(g)
    loose = second_order_bound(GammaSums(g.gamma_ee, g.gamma_jj, g.gamma_ej, math.pi, g.n))
    ratio = second_to_first_ratio_control(first)
    passed = check.passed and ratio < 0.1 and bound <= first
    return WeakNoiseReport(first, bound, loose, ratio, check.margin, passed)
