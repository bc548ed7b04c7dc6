import math

import numpy as np
import pytest

from armapulse import arma, control
from armapulse.arma import ArmaModel, DcNoiseModel
from armapulse.control import NoiseModel, PulseSequence, uniform_sequence
from armapulse.errors import InsufficientLags, LengthMismatch


def random_instance(rng, n, with_dephasing=True):
    thetas = rng.normal(size=n)
    seq = PulseSequence(thetas, float(np.sum(thetas)))
    control_model = ArmaModel((rng.uniform(-0.9, 0.9),), (rng.uniform(-1, 1),), rng.uniform(1e-4, 1e-2))
    if not with_dephasing:
        return seq, NoiseModel(control_model)
    residual = ArmaModel((rng.uniform(-0.8, 0.8),), tuple(rng.uniform(-1, 1, 2)), rng.uniform(1e-4, 1e-2))
    return seq, NoiseModel(control_model, rng.uniform(-0.05, 0.05), residual)


# -- PulseSequence / NoiseModel -------------------------------------------------


def test_sequence_sum_checked():
    with pytest.raises(ValueError):
        PulseSequence([1.0, 2.0], 4.0)
    assert PulseSequence([1.0, 2.0]).target_angle == 3.0


def test_sequence_is_read_only():
    seq = uniform_sequence(math.pi, 4)
    with pytest.raises(ValueError):
        seq.thetas[0] = 1.0


def test_sequence_round_trip():
    seq = PulseSequence([0.5, 1.5, -0.25], 1.75)
    assert PulseSequence.from_dict(seq.to_dict()) == seq


def test_noise_model_round_trip():
    noise = NoiseModel(ArmaModel((0.25,), (), 1e-3), 0.003, ArmaModel((), (0.5,), 1e-4))
    assert NoiseModel.from_dict(noise.to_dict()) == noise
    dc = NoiseModel(DcNoiseModel(1e-3))
    assert NoiseModel.from_dict(dc.to_dict()) == dc


# -- error vector ---------------------------------------------------------------


def test_error_vector_zero_noise():
    seq = uniform_sequence(math.pi, 5)
    assert control.error_vector_first_order(seq, np.zeros(5), np.zeros(5)) == (0.0, 0.0, 0.0)


def test_error_vector_single_step():
    th, eps, mu, jt = 1.1, 0.03, 0.02, -0.005
    v = control.error_vector_first_order(PulseSequence([th]), [eps], [jt], mu)
    np.testing.assert_allclose(v, [eps * th / 2, (mu + jt) / 2 * math.sin(th), (mu + jt) / 2 * math.cos(th)])


def test_error_vector_hand_example():
    seq = PulseSequence([math.pi / 2, math.pi / 2])
    v = control.error_vector_first_order(seq, [0.1, -0.1], [0.0, 0.0])
    np.testing.assert_allclose(v, [0.0, 0.0, 0.0], atol=1e-16)


def test_error_vector_length_mismatch():
    with pytest.raises(LengthMismatch):
        control.error_vector_first_order(uniform_sequence(1.0, 3), np.zeros(2), np.zeros(3))


def test_error_vector_batch_matches_single():
    rng = np.random.default_rng(0)
    seq = PulseSequence(rng.normal(size=6))
    eps, jt = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
    batch = control.error_vector_first_order(seq, eps, jt, 0.3)
    for k in range(4):
        np.testing.assert_allclose(batch[k], control.error_vector_first_order(seq, eps[k], jt[k], 0.3), rtol=1e-14)


# -- infidelities ---------------------------------------------------------------


def test_control_only_zero_pulses():
    assert control.infidelity_control_only(PulseSequence(np.zeros(4)), [1.0, 0.5, 0.2, 0.1]) == 0.0


@pytest.mark.parametrize("n", [1, 4, 25])
def test_control_only_white_uniform(n):
    s2 = 1e-3
    gammas = arma.autocovariance(arma.white_noise(s2), n - 1)
    value = control.infidelity_control_only(uniform_sequence(math.pi, n), gammas)
    assert value == pytest.approx(s2 * math.pi**2 / (4 * n), rel=1e-13)


def test_control_only_ar1_optimum():
    gammas = arma.autocovariance(arma.ar1(0.5, 1e-3), 2)
    seq = PulseSequence(np.array([1.0, 0.5, 1.0]) * math.pi / 2.5, math.pi)
    expected = math.pi**2 * 1e-3 / 5
    assert control.infidelity_control_only(seq, gammas) == pytest.approx(expected, rel=1e-13)
    # independent oracle: theta^2 / (4 * 1^T A^{-1} 1)
    inv = np.linalg.inv(arma.covariance_matrix(gammas, 3))
    assert expected == pytest.approx(math.pi**2 / (4 * inv.sum()), rel=1e-12)


def test_control_only_insufficient_lags():
    with pytest.raises(InsufficientLags):
        control.infidelity_control_only(uniform_sequence(1.0, 4), [1.0, 0.0])


def test_full_reduces_to_control_only():
    rng = np.random.default_rng(1)
    seq, noise = random_instance(rng, 7, with_dephasing=False)
    bd = control.infidelity_full(seq, noise)
    assert bd.term_a == 0 and bd.term_b == 0
    assert bd.total == pytest.approx(control.infidelity_control_only(seq, noise.control_gammas(7)), rel=1e-14)


@pytest.mark.parametrize("theta", [0.3, math.pi, -2.0])
def test_single_step_coherent_dephasing(theta):
    mu = 0.01
    bd = control.infidelity_full(PulseSequence([theta]), NoiseModel(arma.white_noise(0.0), mu))
    assert bd.total == pytest.approx(mu**2 / 4, rel=1e-14)


def test_white_dephasing():
    rng = np.random.default_rng(2)
    thetas = rng.normal(size=8)
    seq = PulseSequence(thetas)
    ctrl = ArmaModel((0.6,), (), 1e-3)
    s2j = 4e-4
    bd = control.infidelity_full(seq, NoiseModel(ctrl, 0.0, arma.white_noise(s2j)))
    cov = arma.covariance_matrix(arma.autocovariance(ctrl, 7), 8)
    assert bd.total == pytest.approx((thetas @ cov @ thetas + 8 * s2j) / 4, rel=1e-12)


def test_coherent_term_equals_phasor_sum():
    # A = mu^2 |sum_j exp(i Theta_j)|^2
    rng = np.random.default_rng(3)
    seq = PulseSequence(rng.normal(size=10))
    mu = 0.02
    bd = control.infidelity_full(seq, NoiseModel(arma.white_noise(0.0), mu))
    phasor = np.sum(np.exp(1j * np.cumsum(seq.thetas)))
    assert bd.term_a == pytest.approx(mu**2 * abs(phasor) ** 2, rel=1e-12)


def test_full_matches_oracle_on_random_instances():
    rng = np.random.default_rng(4)
    for _ in range(50):
        seq, noise = random_instance(rng, int(rng.integers(1, 33)))
        assert control.infidelity_full(seq, noise).total == pytest.approx(
            control.infidelity_quadratic_oracle(seq, noise), rel=1e-10, abs=1e-15
        )


def test_oracle_zero_noise():
    seq = uniform_sequence(math.pi, 5)
    assert control.infidelity_quadratic_oracle(seq, NoiseModel(arma.white_noise(0.0))) == 0.0


def test_full_matches_sampled_error_vectors():
    rng = np.random.default_rng(5)
    seq = PulseSequence(rng.uniform(0, 1, 6))
    noise = NoiseModel(ArmaModel((0.7,), (), 1e-3), 0.01, ArmaModel((0.5,), (0.3,), 5e-4))
    k = 100_000
    eps = arma.sample_trajectories(noise.control, 6, [np.random.default_rng([5, i, 0]) for i in range(k)])
    jt = arma.sample_trajectories(noise.dephasing_residual, 6, [np.random.default_rng([5, i, 1]) for i in range(k)])
    sq = np.sum(control.error_vector_first_order(seq, eps, jt, noise.dephasing_mean) ** 2, axis=1)
    se = sq.std(ddof=1) / math.sqrt(k)
    assert abs(sq.mean() - control.infidelity_full(seq, noise).total) < 3 * se


def test_breakdown_shares():
    bd = control.InfidelityBreakdown(1.0, 2.0, 5.0)
    assert bd.total == 2.0
    assert sum(bd.shares()) == pytest.approx(1.0)
    assert control.InfidelityBreakdown(0.0, 0.0, 0.0).shares() == (0.0, 0.0, 0.0)


# -- fidelity series -------------------------------------------------------------


def test_fidelity_series_values():
    assert control.fidelity_series(0.0, 3) == 1.0
    assert control.fidelity_series(0.01, 6) == pytest.approx(math.cos(0.1) ** 2, abs=1e-15)
    assert control.fidelity_series(0.01, 4) == pytest.approx(0.990033, abs=1e-6)


def test_fidelity_series_alternates():
    x = 0.4
    limit = math.cos(2 * math.sqrt(x)) / 2 + 0.5
    partial = [control.fidelity_series(x, t) - limit for t in range(1, 8)]
    signs = np.sign(partial)
    assert np.all(signs[1:] == -signs[:-1])


def test_fidelity_series_ratio():
    x = 0.03
    first = 1 - control.fidelity_series(x, 1)
    second = control.fidelity_series(x, 2) - control.fidelity_series(x, 1)
    assert first == pytest.approx(x, rel=1e-14)
    assert second / first == pytest.approx(x / 3, rel=1e-12)


# -- filter functions -------------------------------------------------------------


def test_filter_zero_frequency_is_area():
    seq = PulseSequence([0.4, -0.1, 1.3])
    fxx, _ = control.filter_functions(seq, [0.0])
    assert math.sqrt(fxx[0]) == pytest.approx(1.6, rel=1e-14)


def test_filter_dirichlet_kernel():
    n = 7
    w = np.linspace(0.05, np.pi, 40)
    fxx, _ = control.filter_functions(uniform_sequence(math.pi, n), w)
    expected = (math.pi / n) ** 2 * np.sin(n * w / 2) ** 2 / np.sin(w / 2) ** 2
    np.testing.assert_allclose(fxx, expected, rtol=1e-12)


def test_filter_zero_pulses():
    _, fzy = control.filter_functions(PulseSequence(np.zeros(5)), np.linspace(0, np.pi, 9))
    np.testing.assert_array_equal(fzy, 0.0)


# -- weak-noise check ---------------------------------------------------------------


def test_weak_noise_examples():
    ok = control.weak_noise_check(NoiseModel(arma.white_noise(1e-3)), uniform_sequence(math.pi, 10))
    assert ok.passed
    assert ok.margin == pytest.approx(3.291 * math.sqrt(1e-3) / math.sqrt(10), rel=1e-12)
    # left side of the inequality, in radians
    assert ok.margin * math.pi == pytest.approx(0.1035, abs=5e-4)
    zero = control.weak_noise_check(NoiseModel(arma.white_noise(0.0)), uniform_sequence(math.pi, 3))
    assert zero.passed and zero.margin == 0.0
    assert not control.weak_noise_check(NoiseModel(arma.white_noise(10.0)), uniform_sequence(math.pi, 1)).passed
