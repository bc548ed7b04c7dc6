"""SK1 and BB1 composite pulses under correlated amplitude noise.

Each segment ``j`` rotates by ``theta_j`` about the axis at azimuth
``phi_j`` in the xy-plane and sees one amplitude-noise sample ``eps_j``.
Closed-form first-order error vectors are checked against the explicit
toggling-frame sum on construction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple

import numpy as np

from . import arma
from .arma import ArmaModel, DcNoiseModel
from .control import ErrorVector
from .errors import InsufficientLags, LengthMismatch, PhaseUndefined
from .optimizer import QpProblem, solve_qp
from .control import infidelity_control_only

__all__ = [
    "CompositePulse",
    "correction_phase",
    "make_sk1",
    "make_bb1",
    "make_naive",
    "frame_sum_matrix",
    "closed_form_matrix",
    "cp_error_vector",
    "cp_infidelity",
    "ComparisonRow",
    "comparison_map",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

SEGMENTS = {"SK1": 3, "BB1": 4, "naive": 1}


@dataclass(frozen=True)
class CompositePulse:
    thetas: tuple
    phis: tuple
    kind: str
    target_angle: float

    @property
    def n(self) -> int:
        return len(self.thetas)


def correction_phase(theta_q: float) -> float:
    """``phi_c = arccos(-theta_Q / (4 pi))``.

    This sign makes the first-segment and correction-segment x errors cancel
    for a constant amplitude offset.
    """
    ratio = theta_q / (4.0 * math.pi)
    if abs(ratio) > 1.0:
        raise PhaseUndefined(f"|theta_Q| = {abs(theta_q)!r} exceeds 4 pi")
    return math.acos(-ratio)


def make_sk1(theta_q: float) -> CompositePulse:
    phi = correction_phase(theta_q)
    return CompositePulse((theta_q, 2 * math.pi, 2 * math.pi), (0.0, -phi, phi), "SK1", theta_q)


def make_bb1(theta_q: float) -> CompositePulse:
    phi = correction_phase(theta_q)
    return CompositePulse(
        (theta_q, math.pi, 2 * math.pi, math.pi), (0.0, phi, 3 * phi, phi), "BB1", theta_q
    )


def make_naive(theta_q: float) -> CompositePulse:
    """The uncorrected single-segment pulse, for reference."""
    return CompositePulse((theta_q,), (0.0,), "naive", theta_q)


def _rotation(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return c * np.eye(2) - 1j * s * (math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y)


def frame_sum_matrix(cp: CompositePulse) -> np.ndarray:
    """Row ``j`` is the error vector produced by a unit noise sample in segment ``j``.

    Evaluates ``P_{j-1}^dag Phi_j P_{j-1}`` with
    ``Phi_j = theta_j / 2 (cos phi_j sigma_x + sin phi_j sigma_y)`` and reads
    off its Pauli components.
    """
    rows = np.zeros((cp.n, 3))
    frame = np.eye(2, dtype=complex)
    for j, (theta, phi) in enumerate(zip(cp.thetas, cp.phis)):
        epg = theta / 2 * (math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y)
        toggled = frame.conj().T @ epg @ frame
        rows[j] = [np.real(np.trace(p @ toggled)) / 2 for p in PAULIS]
        frame = _rotation(theta, phi) @ frame
    return rows


def closed_form_matrix(cp: CompositePulse) -> np.ndarray:
    """Closed-form SK1/BB1 error-vector coefficients, one row per segment."""
    tq = cp.target_angle
    root = math.sqrt(max(16 * math.pi**2 - tq**2, 0.0))
    transverse = np.array([0.0, math.cos(tq) * root, -math.sin(tq) * root])
    if cp.kind == "SK1":
        x_weights, t_weights, scale = (2, -1, -1), (0, -1, 1), 4.0
    elif cp.kind == "BB1":
        x_weights, t_weights, scale = (4, -1, -2, -1), (0, 1, -2, 1), 8.0
    else:
        raise ValueError(f"no closed form for kind {cp.kind!r}")
    rows = np.zeros((cp.n, 3))
    for j in range(cp.n):
        rows[j] = (x_weights[j] * np.array([tq, 0.0, 0.0]) + t_weights[j] * transverse) / scale
    return rows


def cp_error_vector(cp: CompositePulse, eps_traj):
    """First-order error vector(s) for amplitude noise samples ``eps_traj``.

    Accepts one trajectory of length ``cp.n`` or a ``(K, cp.n)`` batch.
    SK1/BB1 use the closed form after confirming it matches the frame sum
    to 1e-10.
    """
    eps = np.asarray(eps_traj, dtype=float)
    if eps.shape[-1] != cp.n:
        raise LengthMismatch(f"{eps.shape[-1]} noise samples for {cp.n} segments")
    numeric = frame_sum_matrix(cp)
    if cp.kind in ("SK1", "BB1"):
        coeffs = closed_form_matrix(cp)
        if not np.allclose(coeffs, numeric, rtol=0.0, atol=1e-10):
            raise RuntimeError("closed-form error vector disagrees with the frame sum")
    else:
        coeffs = numeric
    out = eps @ coeffs
    if eps.ndim == 1:
        return ErrorVector(*map(float, out))
    return out


def cp_infidelity(cp: CompositePulse, gammas) -> float:
    """First-order infidelity of SK1 or BB1 for autocovariance ``gammas``.

    Written in lag differences so a constant autocovariance gives exactly 0.
    """
    g = np.asarray(gammas, dtype=float)
    tq2 = cp.target_angle**2
    if cp.kind == "SK1":
        if len(g) < 3:
            raise InsufficientLags("SK1 needs lags 0..2")
        return float(2 * math.pi**2 * (g[0] - g[1]) + tq2 / 4 * (g[0] - g[2]))
    if cp.kind == "BB1":
        if len(g) < 4:
            raise InsufficientLags("BB1 needs lags 0..3")
        return float(
            math.pi**2 / 2 * (3 * (g[0] - g[1]) - (g[1] - g[2]))
            + tq2 / 8 * (2 * (g[0] - g[2]) + (g[1] - g[3]))
        )
    if cp.kind == "naive":
        return float(tq2 / 4 * g[0])
    raise ValueError(f"unknown composite kind {cp.kind!r}")


class ComparisonRow(NamedTuple):
    a1: float
    b1: float
    infid_opt: float
    infid_cp: float
    diff: float
    l2_to_dc: float


def comparison_map(
    a1_grid,
    b1_grid,
    theta_q: float,
    total_power: float,
    kind: str = "SK1",
    n_jobs: int = 1,
) -> List[ComparisonRow]:
    """Equal-length single-axis optimum versus SK1 (3 steps) or BB1 (4 steps).

    Every ARMA(1,1) model on the grid is rescaled to ``total_power``;
    ``diff = infid_opt - infid_cp`` is negative where the single-axis
    sequence wins. ``l2_to_dc`` is the Frobenius distance to DC noise of the
    same power.
    """
    cp = {"SK1": make_sk1, "BB1": make_bb1}[kind](theta_q)
    k = cp.n
    points = [(float(a), float(b)) for a in a1_grid for b in b1_grid]
    dc = DcNoiseModel(total_power)

    def evaluate(point):
        a1, b1 = point
        model = arma.set_total_power(ArmaModel((a1,), (b1,), 1.0), total_power)
        gammas = arma.autocovariance(model, k - 1)
        seq = solve_qp(QpProblem(arma.covariance_matrix(gammas, k), theta_q))
        opt = infidelity_control_only(seq, gammas)
        cpi = cp_infidelity(cp, gammas)
        return ComparisonRow(a1, b1, opt, cpi, opt - cpi, arma.model_distance_l2(model, dc, k))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(evaluate, points))
    return [evaluate(pt) for pt in points]
