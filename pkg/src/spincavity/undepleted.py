"""Closed-form squeezing in the undepleted-mode (large-N) limit.

When the m = 0 mode is treated as a classical reservoir, the pair modes obey
linear quantum Langevin equations and the squeezing parameter has the closed
form

    xi2(theta) = (cos(theta) + 2 Lambda t sin(theta))^2
                 + (1 + 2 Gamma t)^2 sin^2(theta),

which this module evaluates, minimises analytically over theta, and exposes as
(theta, t) grids for comparison against the finite-N engine.  The quadratic
form in (cos, sin) is

    M = [[1, a], [a, a^2 + b^2]],   a = 2 Lambda t,  b = 1 + 2 Gamma t,

with det M = b^2, so the minimum over angles is the smaller eigenvalue of M.

``pair_mode_moments`` exposes the second moments of the conserved and
anti-conserved pair combinations A = a_+1 + a_-1^dag and B = a_+1 - a_-1^dag
for vacuum inputs, from which the same xi2 is reconstructed; this pins the
derivation chain independently of the final formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: damping ratios Gamma/Lambda of the standard comparison panels
GAMMA_RATIO_PRESETS = (0.02, 0.05, 0.1)


def xi2(lam: float, gamma: float, t, theta_deg) -> np.ndarray | float:
    """Undepleted-mode squeezing parameter; broadcasts over t and theta."""
    theta = np.deg2rad(np.asarray(theta_deg, dtype=float))
    t = np.asarray(t, dtype=float)
    a = 2.0 * lam * t
    b = 1.0 + 2.0 * gamma * t
    c, s = np.cos(theta), np.sin(theta)
    value = (c + a * s) ** 2 + (b * s) ** 2
    return value if value.ndim else float(value)


def xi2_min(lam: float, gamma: float, t: float) -> tuple[float, float]:
    """Closed-form minimum over theta; returns (theta_deg in [0, 180), xi2_min).

    For Lambda > 0 the optimal angle lies in (90, 180) degrees and creeps
    toward 180 as t grows; strong damping pushes the minimum back to the
    flat xi2 = 1 quadrature at theta = 0 (mod 180).
    """
    a = 2.0 * lam * t
    b = 1.0 + 2.0 * gamma * t
    m11, m12, m22 = 1.0, a, a * a + b * b
    lam_min = 0.5 * (m11 + m22) - math.hypot(0.5 * (m11 - m22), m12)
    if m12 == 0.0:
        theta = 0.0 if m11 <= m22 else 0.5 * math.pi
    else:
        theta = math.atan2(lam_min - m11, m12)
    return math.degrees(theta) % 180.0, float(lam_min)


@dataclass(frozen=True)
class PairModeMoments:
    """Vacuum-input second moments of A = a_+1 + a_-1^dag, B = a_+1 - a_-1^dag."""

    aa_dag: float          # <A A^dag> (= <A^dag A>; [A, A^dag] = 0)
    bb_dag: float          # <B B^dag>
    b_dag_b: float         # <B^dag B>
    ab_dag: complex        # <A B^dag>
    a_dag_b: complex       # <A^dag B>
    var_sx_over_n: float
    var_qyz_over_n: float
    cov_sx_qyz_over_n: float


def pair_mode_moments(lam: float, gamma: float, t: float) -> PairModeMoments:
    """Second moments at time t: A is conserved, B drifts as
    B(t) = B(0) - 2 (Gamma + i Lambda) t A(0) plus accumulated vacuum noise."""
    c = 2.0 * (gamma + 1j * lam) * t
    noise = 8.0 * gamma * t
    bb_dag = 1.0 - 2.0 * c.real + abs(c) ** 2 + noise
    b_dag_b = 1.0 + 2.0 * c.real + abs(c) ** 2  # equal to bb_dag: [B, B^dag] = 0
    ab_dag = 1.0 - np.conj(c)
    a_dag_b = -1.0 - c
    var_qyz = 1.0 + 4.0 * gamma * t + 4.0 * (gamma**2 + lam**2) * t**2
    return PairModeMoments(
        aa_dag=1.0,
        bb_dag=float(bb_dag),
        b_dag_b=float(b_dag_b),
        ab_dag=complex(ab_dag),
        a_dag_b=complex(a_dag_b),
        var_sx_over_n=1.0,
        var_qyz_over_n=float(var_qyz),
        cov_sx_qyz_over_n=2.0 * lam * t,
    )


def xi2_from_pair_moments(m: PairModeMoments, theta_deg) -> np.ndarray | float:
    """Reconstruct xi2(theta) from the Langevin moments.

    With S_x = sqrt(N/2)(A + A^dag), Q_yz = i sqrt(N/2)(B - B^dag) and
    <Q_zz - Q_yy> = -2N, the quadrature variance divided by N is the
    quadratic form in (cos, sin) built from the normalised moments.
    """
    theta = np.deg2rad(np.asarray(theta_deg, dtype=float))
    c, s = np.cos(theta), np.sin(theta)
    value = (
        c * c * m.var_sx_over_n
        + s * s * m.var_qyz_over_n
        + 2.0 * s * c * m.cov_sx_qyz_over_n
    )
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class HeatmapGrid:
    """xi2(theta, t) samples on a rectangular (theta, Lambda t) grid."""

    lambda_t: np.ndarray    # (n_t,)
    theta_deg: np.ndarray   # (n_theta,)
    xi2: np.ndarray         # (n_theta, n_t)

    @property
    def xi2_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.xi2)


def heatmap(
    gamma_over_lambda: float,
    lambda_t_max: float = 5.0,
    n_t: int = 101,
    theta_deg: np.ndarray | None = None,
) -> HeatmapGrid:
    """Oracle xi2(theta, t) grid at a fixed damping ratio (Lambda = 1 units)."""
    lt = np.linspace(0.0, lambda_t_max, n_t)
    if theta_deg is None:
        theta_deg = np.linspace(0.0, 180.0, 181)
    theta_deg = np.asarray(theta_deg, dtype=float)
    values = xi2(1.0, gamma_over_lambda, lt[None, :], theta_deg[:, None])
    return HeatmapGrid(lambda_t=lt, theta_deg=theta_deg, xi2=np.asarray(values))
