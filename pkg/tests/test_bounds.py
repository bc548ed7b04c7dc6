import math

import numpy as np
import pytest

from armapulse import arma, bounds, montecarlo
from armapulse.arma import ArmaModel, DcNoiseModel
from armapulse.bounds import GammaSums
from armapulse.control import NoiseModel, PulseSequence, uniform_sequence
from armapulse.errors import InsufficientLags


def test_gamma_sum_white():
    assert bounds.gamma_sum([2.0, 0.0, 0.0, 0.0], 4) == 8.0


def test_gamma_sum_dc():
    assert bounds.gamma_sum(arma.autocovariance(DcNoiseModel(0.3), 2), 3) == pytest.approx(2.7, rel=1e-15)


@pytest.mark.parametrize("n", [1, 5, 17])
def test_gamma_sum_is_matrix_grand_sum(n):
    g = arma.autocovariance(ArmaModel((0.7, -0.2), (0.4,), 1.3), n - 1)
    assert bounds.gamma_sum(g, n) == pytest.approx(arma.covariance_matrix(g, n).sum(), rel=1e-12)


def test_gamma_sum_lags_checked():
    with pytest.raises(InsufficientLags):
        bounds.gamma_sum([1.0], 2)


def test_gamma_sums_fields():
    seq = PulseSequence([0.5, -1.5, 2.0])
    noise = NoiseModel(arma.white_noise(1e-3), 0.1, arma.white_noise(2e-3))
    g = bounds.gamma_sums(noise, seq)
    assert g.gamma_ee == pytest.approx(3e-3)
    assert g.gamma_jj == pytest.approx(9 * 0.01 + 6e-3)
    assert g.omega_max == 2.0 and g.gamma_ej == 0.0


def test_second_order_bound_examples():
    assert bounds.second_order_bound(GammaSums(0.4, 0.0, 0.0, math.pi, 5)) == 0.0
    assert bounds.second_order_bound(GammaSums(0.0, 1.0, 0.0, 1.0, 1)) == pytest.approx(7 / 16)
    full = bounds.second_order_bound(GammaSums(0.2, 0.3, 0.1, 2.0, 4))
    assert full == pytest.approx(7 / 16 * 0.09 + 7 / 8 * 4 * 0.06 + 7 / 4 * 0.04)


def test_second_order_bound_scaling():
    base = GammaSums(0.2, 0.3, 0.0, 1.5, 4)
    scaled = GammaSums(0.6, 0.9, 0.0, 1.5, 4)
    assert bounds.second_order_bound(scaled) == pytest.approx(9 * bounds.second_order_bound(base))


def test_quartic_moment_against_samples():
    rng = np.random.default_rng(0)
    seq = PulseSequence(rng.uniform(0, 1, 5))
    noise = NoiseModel(arma.ar1(0.6, 1e-2), 0.05, ArmaModel((), (0.5,), 5e-3))
    eps, jt = montecarlo.sample_noise(noise, 5, montecarlo.SimConfig(200_000, seed=1))
    from armapulse.control import error_vector_first_order

    a = error_vector_first_order(seq, eps, jt, noise.dephasing_mean)
    fourth = np.sum(a**2, axis=1) ** 2
    se = fourth.std(ddof=1) / math.sqrt(fourth.size)
    assert abs(fourth.mean() - bounds.quartic_moment(seq, noise)) < 4 * se


def test_validation_bound_covers_commuting_deviation():
    # pure control noise: exact infidelity is x - x^2/3 + ... ; the budget must reach x^2/3
    seq = uniform_sequence(math.pi, 1)
    noise = NoiseModel(arma.white_noise(0.05))
    x = math.pi**2 * 0.05 / 4
    exact = 0.5 * (1 - math.exp(-2 * x))  # Gaussian average of sin^2(a_x)
    assert bounds.validation_bound(seq, noise) >= abs(x - exact)


def test_ratio_control():
    assert bounds.second_to_first_ratio_control(0.0) == 0.0
    assert bounds.second_to_first_ratio_control(0.3) == pytest.approx(0.1)
    s2, n = 1e-3, 25
    x = s2 * math.pi**2 / (4 * n)
    assert bounds.second_to_first_ratio_control(x) == pytest.approx(s2 * math.pi**2 / (12 * n))
    with pytest.raises(ValueError):
        bounds.second_to_first_ratio_control(-1.0)


def test_report_zero_noise():
    rep = bounds.weak_noise_regime_report(NoiseModel(arma.white_noise(0.0)), uniform_sequence(math.pi, 4))
    d = rep.to_dict()
    assert d["pass"] is True
    assert d["first_order"] == d["second_order_bound"] == d["ratio"] == d["weak_noise_margin"] == 0.0


def test_report_white_noise_passes():
    rep = bounds.weak_noise_regime_report(NoiseModel(arma.white_noise(1e-3)), uniform_sequence(math.pi, 25))
    assert rep.passed
    assert rep.ratio == pytest.approx(1e-3 * math.pi**2 / 300, rel=1e-12)  # 3.29e-5
    assert set(rep.to_dict()) >= {"first_order", "second_order_bound", "ratio", "weak_noise_margin", "pass"}


def test_report_strong_noise_fails():
    rep = bounds.weak_noise_regime_report(NoiseModel(arma.white_noise(10.0)), uniform_sequence(math.pi, 1))
    assert not rep.passed and rep.ratio > 0.1


def test_loose_bound_not_smaller():
    seq = uniform_sequence(math.pi, 10)
    noise = NoiseModel(arma.ar1(0.3, 1e-3), 0.003)
    rep = bounds.weak_noise_regime_report(noise, seq)
    assert rep.second_order_bound_loose >= rep.second_order_bound >= 0
