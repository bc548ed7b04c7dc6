"""Wide-sense-stationary ARMA noise processes.

An ARMA(p, q) process follows the recursion

    beta_t = a_1 beta_{t-1} + ... + a_p beta_{t-p}
             + w_t + b_1 w_{t-1} + ... + b_q w_{t-q}

with Gaussian white innovations ``w_t`` of variance ``sigma_w2``. One sample
corresponds to one unit-duration control step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg, signal

from .errors import InsufficientLags, NonStationary, ZeroPowerModel

__all__ = [
    "ArmaModel",
    "DcNoiseModel",
    "validate_model",
    "autocovariance",
    "power_spectrum",
    "sample_trajectory",
    "sample_trajectories",
    "default_burn_in",
    "covariance_matrix",
    "set_total_power",
    "model_distance_l2",
    "fir_lowpass_ma",
    "white_noise",
    "ar1",
    "model_from_dict",
]


def _ar_roots(ar_coeffs: Sequence[float]) -> np.ndarray:
    if len(ar_coeffs) == 0:
        return np.zeros(0, dtype=complex)
    return np.roots(np.concatenate(([1.0], -np.asarray(ar_coeffs, dtype=float))))


@dataclass(frozen=True)
class ArmaModel:
    """Stationary ARMA(p, q) model with Gaussian innovations.

    Parameters
    ----------
    ar_coeffs : sequence of float
        Autoregressive coefficients ``a_1..a_p``.
    ma_coeffs : sequence of float
        Moving-average coefficients ``b_1..b_q``; ``b_0 = 1`` is implicit.
    sigma_w2 : float
        Innovation variance.

    Construction raises :class:`NonStationary` when an AR root is on or
    outside the unit circle.
    """

    ar_coeffs: tuple = field(default=())
    ma_coeffs: tuple = field(default=())
    sigma_w2: float = 1.0

    def __post_init__(self):
        ar = tuple(float(a) for a in np.atleast_1d(np.asarray(self.ar_coeffs, dtype=float)))
        ma = tuple(float(b) for b in np.atleast_1d(np.asarray(self.ma_coeffs, dtype=float)))
        object.__setattr__(self, "ar_coeffs", ar)
        object.__setattr__(self, "ma_coeffs", ma)
        object.__setattr__(self, "sigma_w2", float(self.sigma_w2))
        if not math.isfinite(self.sigma_w2) or self.sigma_w2 < 0:
            raise ValueError(f"sigma_w2 must be finite and >= 0, got {self.sigma_w2}")
        if not all(math.isfinite(c) for c in ar + ma):
            raise ValueError("ARMA coefficients must be finite")
        validate_model(self)

    @property
    def p(self) -> int:
        return len(self.ar_coeffs)

    @property
    def q(self) -> int:
        return len(self.ma_coeffs)

    @property
    def ar_poly(self) -> np.ndarray:
        """Denominator ``[1, -a_1, ..., -a_p]`` in lfilter convention."""
        return np.concatenate(([1.0], -np.asarray(self.ar_coeffs)))

    @property
    def ma_poly(self) -> np.ndarray:
        """Numerator ``[1, b_1, ..., b_q]`` in lfilter convention."""
        return np.concatenate(([1.0], np.asarray(self.ma_coeffs)))

    def spectral_radius(self) -> float:
        roots = _ar_roots(self.ar_coeffs)
        return float(np.max(np.abs(roots))) if roots.size else 0.0

    def to_dict(self) -> dict:
        return {"ar": list(self.ar_coeffs), "ma": list(self.ma_coeffs), "sigma_w2": self.sigma_w2}


@dataclass(frozen=True)
class DcNoiseModel:
    """Perfectly correlated noise: one random offset held for all time.

    The autocovariance is ``variance`` at every lag.
    """

    variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variance", float(self.variance))
        if not math.isfinite(self.variance) or self.variance < 0:
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")

    def to_dict(self) -> dict:
        return {"dc_variance": self.variance}


NoiseProcess = Union[ArmaModel, DcNoiseModel]


def model_from_dict(data: dict) -> NoiseProcess:
    """Build a model from its JSON form.

    ``{"ar": [...], "ma": [...], "sigma_w2": x}`` gives an :class:`ArmaModel`
    and ``{"dc_variance": x}`` a :class:`DcNoiseModel`.
    """
    if "dc_variance" in data:
        extra = set(data) - {"dc_variance"}
        if extra:
            raise ValueError(f"unexpected keys for DC model: {sorted(extra)}")
        return DcNoiseModel(data["dc_variance"])
    extra = set(data) - {"ar", "ma", "sigma_w2"}
    if extra:
        raise ValueError(f"unexpected keys for ARMA model: {sorted(extra)}")
    return ArmaModel(tuple(data.get("ar", ())), tuple(data.get("ma", ())), data.get("sigma_w2", 1.0))


def white_noise(sigma_w2: float) -> ArmaModel:
    return ArmaModel((), (), sigma_w2)


def ar1(a1: float, sigma_w2: float) -> ArmaModel:
    return ArmaModel((a1,), (), sigma_w2)


def validate_model(model: ArmaModel) -> None:
    """Raise :class:`NonStationary` unless every AR root is inside the unit circle."""
    roots = _ar_roots(model.ar_coeffs)
    if roots.size and np.max(np.abs(roots)) >= 1.0:
        raise NonStationary(
            f"AR coefficients {list(model.ar_coeffs)} have a root of modulus "
            f"{np.max(np.abs(roots)):.6g} >= 1"
        )


def _impulse_response(model: ArmaModel, length: int) -> np.ndarray:
    """MA(infinity) weights psi_0..psi_{length-1}."""
    impulse = np.zeros(length)
    impulse[0] = 1.0
    return signal.lfilter(model.ma_poly, model.ar_poly, impulse)


def autocovariance(model: NoiseProcess, max_lag: int) -> np.ndarray:
    """Exact stationary autocovariance ``gamma(0..max_lag)``.

    Lags ``0..max(p, q)`` come from the extended Yule-Walker system; larger
    lags follow the AR recursion.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be >= 0")
    if isinstance(model, DcNoiseModel):
        return np.full(max_lag + 1, model.variance)

    p, q = model.p, model.q
    a = np.asarray(model.ar_coeffs)
    b = model.ma_poly
    m = max(p, q)
    psi = _impulse_response(model, q + 1)

    # gamma(k) - sum_i a_i gamma(|k-i|) = sigma^2 sum_{j=k}^{q} b_j psi_{j-k}
    lhs = np.zeros((m + 1, m + 1))
    rhs = np.zeros(m + 1)
    for k in range(m + 1):
        lhs[k, k] += 1.0
        for i in range(1, p + 1):
            lhs[k, abs(k - i)] -= a[i - 1]
        if k <= q:
            rhs[k] = model.sigma_w2 * np.dot(b[k:], psi[: q + 1 - k])
    head = np.linalg.solve(lhs, rhs)

    gammas = np.zeros(max(max_lag, m) + 1)
    gammas[: m + 1] = head
    for k in range(m + 1, len(gammas)):
        gammas[k] = np.dot(a, gammas[k - 1 : k - p - 1 : -1]) if p else 0.0
    return gammas[: max_lag + 1]


def power_spectrum(model: NoiseProcess, omega) -> np.ndarray:
    """Power spectral density ``S(omega)`` on ``[-pi, pi]``.

    ``S = sigma_w2 |1 + sum_j b_j e^{-ij omega}|^2 / |1 - sum_k a_k e^{-ik omega}|^2``,
    normalized so that ``(1/2pi) int S = gamma(0)``.
    """
    if isinstance(model, DcNoiseModel):
        raise ValueError("the DC model has a delta-function spectrum")
    omega = np.asarray(omega, dtype=float)
    z = np.exp(-1j * omega)
    num = np.polyval(model.ma_poly[::-1], z)
    den = np.polyval(model.ar_poly[::-1], z)
    return model.sigma_w2 * np.abs(num) ** 2 / np.abs(den) ** 2


def default_burn_in(model: NoiseProcess) -> int:
    """Samples discarded after the zero initial state.

    At least ``10 (p + q + 1)``, extended for slow AR roots until the
    transient variance error falls below 1e-8 of the stationary value.
    """
    if isinstance(model, DcNoiseModel):
        return 0
    base = 10 * (model.p + model.q + 1)
    rho = model.spectral_radius()
    if rho <= 0.0:
        return base
    decay = math.ceil(math.log(1e-8) / (2.0 * math.log(rho)))
    return max(base, decay + model.q)


def sample_trajectories(
    model: NoiseProcess,
    length: int,
    generators: Sequence[np.random.Generator],
    burn_in: Optional[int] = None,
) -> np.ndarray:
    """Draw one trajectory per generator, stacked into shape ``(len(generators), length)``."""
    if burn_in is None:
        burn_in = default_burn_in(model)
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    count = len(generators)
    if isinstance(model, DcNoiseModel):
        scale = math.sqrt(model.variance)
        offsets = np.array([scale * g.standard_normal() for g in generators])
        return np.repeat(offsets[:, None], length, axis=1)
    total = burn_in + length
    w = np.empty((count, total))
    for row, gen in zip(w, generators):
        row[:] = gen.standard_normal(total)
    w *= math.sqrt(model.sigma_w2)
    out = signal.lfilter(model.ma_poly, model.ar_poly, w, axis=1)
    return out[:, burn_in:]


def sample_trajectory(
    model: NoiseProcess, length: int, seed: int, burn_in: Optional[int] = None
) -> np.ndarray:
    """One Gaussian-driven trajectory, deterministic in ``(model, length, seed, burn_in)``."""
    return sample_trajectories(model, length, [np.random.default_rng(seed)], burn_in)[0]


def covariance_matrix(gammas, n: int) -> np.ndarray:
    """Toeplitz covariance ``A[i, j] = gamma(|i - j|)`` of size ``n``."""
    gammas = np.asarray(gammas, dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > len(gammas):
        raise InsufficientLags(f"need {n} lags for an {n}x{n} matrix, have {len(gammas)}")
    return linalg.toeplitz(gammas[:n])


def set_total_power(model: NoiseProcess, target_power: float) -> NoiseProcess:
    """Rescale the innovation variance so that ``gamma(0) == target_power``."""
    if target_power < 0:
        raise ValueError("target_power must be >= 0")
    if isinstance(model, DcNoiseModel):
        if model.variance == 0:
            raise ZeroPowerModel("cannot rescale a zero-variance DC model")
        return DcNoiseModel(target_power)
    gamma0 = autocovariance(model, 0)[0]
    if gamma0 <= 0:
        raise ZeroPowerModel("cannot rescale a model with zero variance")
    # gamma(0) is linear in sigma_w2; a unit-innovation model avoids drift on reapplication
    unit_power = autocovariance(ArmaModel(model.ar_coeffs, model.ma_coeffs, 1.0), 0)[0]
    return ArmaModel(model.ar_coeffs, model.ma_coeffs, target_power / unit_power)


def _gammas_of(source, n: int) -> np.ndarray:
    if isinstance(source, (ArmaModel, DcNoiseModel)):
        return autocovariance(source, n - 1)
    return np.asarray(source, dtype=float)


def model_distance_l2(m1, m2, n: int) -> float:
    """Frobenius norm of the difference of two ``n x n`` covariance matrices.

    Either argument may be a model or an autocovariance sequence.
    """
    diff = covariance_matrix(_gammas_of(m1, n), n) - covariance_matrix(_gammas_of(m2, n), n)
    return float(np.linalg.norm(diff, "fro"))


def fir_lowpass_ma(cutoff: float, order: int) -> ArmaModel:
    """MA model from a Hamming-windowed sinc low-pass kernel.

    Parameters
    ----------
    cutoff : float
        Cutoff frequency in ``(0, pi]`` (rad/sample).
    order : int
        Kernel order; the kernel has ``order + 1`` taps.

    Leading and trailing taps that vanish to rounding are dropped (a pure
    delay leaves the autocovariance unchanged). The remaining taps are
    divided by the first so that ``b_0 = 1``; ``sigma_w2`` absorbs the
    scale, making the process the filter output for unit-variance input.
    """
    if not 0.0 < cutoff <= math.pi:
        raise ValueError("cutoff must lie in (0, pi]")
    if order < 1:
        raise ValueError("order must be >= 1")
    n = np.arange(order + 1) - order / 2.0
    taps = (cutoff / math.pi) * np.sinc(cutoff * n / math.pi) * np.hamming(order + 1)
    keep = np.flatnonzero(np.abs(taps) > 1e-12 * np.max(np.abs(taps)))
    taps = taps[keep[0] : keep[-1] + 1]
    lead = taps[0]
    return ArmaModel((), tuple(taps[1:] / lead), lead * lead)
