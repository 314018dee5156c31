"""Populations, spin-nematic moments, and the squeezing parameter.

The squeezing parameter in the {S_x, Q_yz, Q_zz - Q_yy} subspace is

    xi2(theta) = 2 Var(S_x cos(theta) + Q_yz sin(theta)) / |<Q_zz - Q_yy>|,

minimised over the quadrature angle theta, which has period 180 degrees.
Minimisation runs a uniform grid followed by golden-section refinement; the
closed-form minimiser (eigenvector of the 2x2 covariance form) is exposed as a
cross-check and for fast vectorised use inside the jackknife.

Ensemble estimates are computed from trajectory-averaged moments (the master
equation estimate).  Standard errors of the nonlinear xi2 statistic use a
leave-one-out jackknife over trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import stats

from . import hilbert
from .hilbert import SymmetricBasis

#: xi2 is flagged undefined when |<Q_zz - Q_yy>| falls below this fraction of 2N
DENOMINATOR_GUARD = 1e-6

#: observable names produced by every evolution backend
STANDARD_MOMENT_KEYS = (
    "n_minus",
    "n_zero",
    "n_plus",
    "sx",
    "sy",
    "sz",
    "qyz",
    "qxz",
    "qzz_minus_qyy",
    "sx2",
    "qyz2",
    "sxqyz_sym",
)


class SqueezingUndefined(ValueError):
    """|<Q_zz - Q_yy>| is too small for xi2 to be meaningful."""


@dataclass(frozen=True)
class Moments:
    """First and second spin-nematic moments of a (possibly mixed) state."""

    n_minus: float
    n_zero: float
    n_plus: float
    sx: float
    sy: float
    sz: float
    qyz: float
    qxz: float
    qzz_minus_qyy: float
    sx2: float
    qyz2: float
    sxqyz_sym: float

    @property
    def total_atoms(self) -> float:
        return self.n_minus + self.n_zero + self.n_plus

    @property
    def var_sx(self) -> float:
        return self.sx2 - self.sx**2

    @property
    def var_qyz(self) -> float:
        return self.qyz2 - self.qyz**2

    @property
    def cov_sx_qyz(self) -> float:
        return self.sxqyz_sym - self.sx * self.qyz


class SpinNematicObservables:
    """Sparse operators for the standard moment set on a symmetric basis.

    ``lift`` maps atomic operators into a larger product space (used for the
    joint atom-photon models); by default operators act on the bare basis.
    """

    def __init__(self, basis: SymmetricBasis, lift=None):
        self.basis = basis
        spin = hilbert.spin_operators(basis)
        quad = hilbert.quadrupole_operators(basis)
        sx, qyz = spin["Sx"], quad["Qyz"]
        ops = {
            "n_minus": hilbert.number_operator(basis, -1),
            "n_zero": hilbert.number_operator(basis, 0),
            "n_plus": hilbert.number_operator(basis, +1),
            "sx": sx,
            "sy": spin["Sy"],
            "sz": spin["Sz"],
            "qyz": qyz,
            "qxz": quad["Qxz"],
            "qzz_minus_qyy": quad["Qzz_minus_Qyy"],
            "sx2": hilbert.prune(sx @ sx),
            "qyz2": hilbert.prune(qyz @ qyz),
            "sxqyz_sym": hilbert.prune(0.5 * (sx @ qyz + qyz @ sx)),
        }
        if lift is not None:
            ops = {name: lift(op) for name, op in ops.items()}
        self.operators: dict[str, sp.csr_matrix] = ops
        self._second = None
        self._basis_ops = (spin, quad, lift)

    def second_subspace(self) -> "SpinNematicObservables":
        """Operator-substituted twin for the {S_y, Q_xz, Q_zz - Q_xx} subspace.

        The (sx, qyz, qzz_minus_qyy) slots of the returned set hold
        (S_y, Q_xz, Q_zz - Q_xx), so the xi2 machinery applies unchanged.
        Not reported by default anywhere.
        """
        if self._second is None:
            spin, quad, lift = self._basis_ops
            sy, qxz = spin["Sy"], quad["Qxz"]
            sub = {
                "sx": sy,
                "qyz": qxz,
                "qzz_minus_qyy": quad["Qzz_minus_Qxx"],
                "sx2": hilbert.prune(sy @ sy),
                "qyz2": hilbert.prune(qxz @ qxz),
                "sxqyz_sym": hilbert.prune(0.5 * (sy @ qxz + qxz @ sy)),
            }
            if lift is not None:
                sub = {name: lift(op) for name, op in sub.items()}
            twin = object.__new__(SpinNematicObservables)
            twin.basis = self.basis
            twin.operators = {**self.operators, **sub}
            twin._basis_ops = self._basis_ops
            twin._second = twin
            self._second = twin
        return self._second

    def moments(self, state: np.ndarray) -> Moments:
        """Moments of a normalised state vector (1-D) or density matrix (2-D)."""
        state = np.asarray(state)
        if state.ndim == 1:
            values = {
                name: expectation_state(op, state)
                for name, op in self.operators.items()
            }
        elif state.ndim == 2:
            values = {
                name: expectation_density(op, state)
                for name, op in self.operators.items()
            }
        else:
            raise ValueError("state must be a vector or a density matrix")
        return Moments(**values)

    def moments_from_means(self, means: dict[str, float]) -> Moments:
        return Moments(**{key: float(means[key]) for key in STANDARD_MOMENT_KEYS})


def expectation_state(op: sp.spmatrix, psi: np.ndarray) -> float:
    """<psi|op|psi> for hermitian op, via one sparse mat-vec."""
    return float(np.real(np.vdot(psi, op @ psi)))


def expectation_density(op: sp.spmatrix, rho: np.ndarray) -> float:
    """Tr(op rho) for hermitian op; rho is renormalised by its trace."""
    tr = np.trace(rho)
    value = (op @ rho).diagonal().sum()
    return float(np.real(value / tr))


def to_db(xi2_value) -> np.ndarray | float:
    """10 log10(xi2); squeezing is negative dB."""
    return 10.0 * np.log10(xi2_value)


def _quadrature_variance(m: Moments, theta_rad):
    c, s = np.cos(theta_rad), np.sin(theta_rad)
    return c * c * m.var_sx + s * s * m.var_qyz + 2.0 * s * c * m.cov_sx_qyz


def _denominator(m: Moments) -> float:
    denom = abs(m.qzz_minus_qyy)
    guard = DENOMINATOR_GUARD * 2.0 * m.total_atoms
    if denom < guard:
        raise SqueezingUndefined(
            f"|<Qzz - Qyy>| = {denom:.3e} below guard {guard:.3e}"
        )
    return denom


def xi2(m: Moments, theta_deg: float) -> float:
    """Squeezing parameter at a fixed quadrature angle (degrees)."""
    return float(
        2.0 * _quadrature_variance(m, np.deg2rad(theta_deg)) / _denominator(m)
    )


def xi2_curve(m: Moments, theta_deg: np.ndarray) -> np.ndarray:
    denom = _denominator(m)
    return 2.0 * _quadrature_variance(m, np.deg2rad(np.asarray(theta_deg))) / denom


def optimize_theta(
    m: Moments, grid_size: int = 720, refine_tol_rad: float = 1e-8
) -> tuple[float, float]:
    """Global minimum of xi2 over theta in [0, 180) degrees.

    Uniform grid (ties broken to the smallest angle), then golden-section
    refinement of the bracketing interval.  Returns (theta_deg, xi2_min).
    """
    denom = _denominator(m)
    thetas = np.linspace(0.0, math.pi, grid_size, endpoint=False)
    values = 2.0 * _quadrature_variance(m, thetas) / denom
    # near-ties (float noise on flat curves) break to the smallest angle
    vmin = float(values.min())
    tie_tol = 1e-12 * max(1.0, abs(vmin))
    k = int(np.flatnonzero(values <= vmin + tie_tol)[0])
    step = math.pi / grid_size

    def f(theta):
        return 2.0 * _quadrature_variance(m, theta) / denom

    lo, hi = thetas[k] - step, thetas[k] + step
    theta_ref, xi2_ref = _golden_section(f, lo, hi, refine_tol_rad)
    if xi2_ref < values[k]:  # keep the grid angle unless refinement improves
        theta_opt, xi2_min = theta_ref, xi2_ref
    else:
        theta_opt, xi2_min = thetas[k], values[k]
    return math.degrees(theta_opt) % 180.0, float(xi2_min)


def _golden_section(f, lo, hi, tol):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def principal_theta(m: Moments) -> tuple[float, float]:
    """Closed-form minimiser: lowest eigenvector of the (S_x, Q_yz) covariance."""
    denom = _denominator(m)
    a, b, c = m.var_sx, m.var_qyz, m.cov_sx_qyz
    lam_min = 0.5 * (a + b) - math.hypot(0.5 * (a - b), c)
    if c == 0.0 and a <= b:
        theta = 0.0
    elif c == 0.0:
        theta = 0.5 * math.pi
    else:
        theta = math.atan2(lam_min - a, c)
    theta_deg = math.degrees(theta) % 180.0
    return theta_deg, float(2.0 * lam_min / denom)


def principal_axis_angle(m: Moments) -> float:
    """Angle (degrees, [0, 180)) of the maximal-variance direction in (S_x, Q_yz)."""
    theta_min_deg, _ = principal_theta(m)
    return (theta_min_deg + 90.0) % 180.0


@dataclass(frozen=True)
class SqueezingRecord:
    """Per-sample-time squeezing summary."""

    time: float
    lambda_t: float
    xi2_min: float
    xi2_min_db: float
    theta_opt_deg: float
    n_minus: float
    n_zero: float
    n_plus: float
    mean_qzz_minus_qyy: float
    var_sx: float
    var_qyz: float
    cov_sx_qyz: float
    defined: bool = True
    xi2_stderr: float | None = None
    mean_jumps: float | None = None


def squeezing_record(
    m: Moments,
    time: float,
    lambda_scale: float,
    grid_size: int = 720,
    refine_tol_rad: float = 1e-8,
    xi2_stderr: float | None = None,
    mean_jumps: float | None = None,
) -> SqueezingRecord:
    """Build a record from a moment set; flags it when xi2 is undefined."""
    try:
        theta_opt, xi2_min = optimize_theta(m, grid_size, refine_tol_rad)
        defined = True
        xi2_db = to_db(xi2_min)
    except SqueezingUndefined:
        theta_opt, xi2_min, xi2_db, defined = math.nan, math.nan, math.nan, False
    return SqueezingRecord(
        time=time,
        lambda_t=abs(lambda_scale) * time,
        xi2_min=xi2_min,
        xi2_min_db=xi2_db,
        theta_opt_deg=theta_opt,
        n_minus=m.n_minus,
        n_zero=m.n_zero,
        n_plus=m.n_plus,
        mean_qzz_minus_qyy=m.qzz_minus_qyy,
        var_sx=m.var_sx,
        var_qyz=m.var_qyz,
        cov_sx_qyz=m.cov_sx_qyz,
        defined=defined,
        xi2_stderr=xi2_stderr,
        mean_jumps=mean_jumps,
    )


def _xi2_vector(means: dict[str, np.ndarray], theta_deg: float) -> np.ndarray:
    """xi2 at fixed theta, vectorised over resamples of the mean moments."""
    var_sx = means["sx2"] - means["sx"] ** 2
    var_qyz = means["qyz2"] - means["qyz"] ** 2
    cov = means["sxqyz_sym"] - means["sx"] * means["qyz"]
    theta = math.radians(theta_deg)
    c, s = math.cos(theta), math.sin(theta)
    variance = c * c * var_sx + s * s * var_qyz + 2.0 * s * c * cov
    return 2.0 * variance / np.abs(means["qzz_minus_qyy"])


def ensemble_xi2_jackknife(
    per_traj_means: dict[str, np.ndarray],
    theta_deg: float | None = None,
    grid_size: int = 720,
    refine_tol_rad: float = 1e-8,
) -> tuple[float, float, float]:
    """Ensemble xi2 with jackknife standard error.

    ``per_traj_means`` holds one trajectory-mean per observable (1-D arrays of
    equal length).  The estimate uses ensemble-averaged moments; if
    ``theta_deg`` is None the angle is optimised on the full ensemble and held
    fixed for the leave-one-out resamples.  Returns (xi2, theta_deg, stderr).
    """
    n_traj = len(next(iter(per_traj_means.values())))
    full_means = {k: float(np.mean(v)) for k, v in per_traj_means.items()}
    m = Moments(**{k: full_means[k] for k in STANDARD_MOMENT_KEYS})
    if theta_deg is None:
        theta_deg, xi2_full = optimize_theta(m, grid_size, refine_tol_rad)
    else:
        xi2_full = xi2(m, theta_deg)
    if n_traj < 2:
        return xi2_full, theta_deg, math.nan
    loo = {
        k: (np.sum(v) - np.asarray(v)) / (n_traj - 1)
        for k, v in per_traj_means.items()
    }
    samples = _xi2_vector(loo, theta_deg)
    se = math.sqrt((n_traj - 1) / n_traj * np.sum((samples - samples.mean()) ** 2))
    return xi2_full, theta_deg, se


def per_trajectory_xi2(
    means_at_time: dict[str, np.ndarray], theta_deg: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """xi2 of each trajectory's own state at one sample time.

    Used for post-selection analysis (e.g. splitting trajectories by whether a
    jump has occurred); this is distinct from the ensemble xi2, which is built
    from trajectory-averaged moments.  With ``theta_deg`` None each trajectory
    is minimised with the closed-form 2x2 eigen-minimiser.  Returns
    (xi2 per trajectory, theta_deg per trajectory).
    """
    var_sx = means_at_time["sx2"] - means_at_time["sx"] ** 2
    var_qyz = means_at_time["qyz2"] - means_at_time["qyz"] ** 2
    cov = means_at_time["sxqyz_sym"] - means_at_time["sx"] * means_at_time["qyz"]
    denom = np.abs(means_at_time["qzz_minus_qyy"])
    if theta_deg is not None:
        theta = math.radians(theta_deg)
        c, s = math.cos(theta), math.sin(theta)
        variance = c * c * var_sx + s * s * var_qyz + 2.0 * s * c * cov
        thetas = np.full(var_sx.shape, float(theta_deg))
        return 2.0 * variance / denom, thetas
    lam_min = 0.5 * (var_sx + var_qyz) - np.hypot(0.5 * (var_sx - var_qyz), cov)
    thetas = np.degrees(
        np.where(
            cov == 0.0,
            np.where(var_sx <= var_qyz, 0.0, 0.5 * math.pi),
            np.arctan2(lam_min - var_sx, cov),
        )
    ) % 180.0
    return 2.0 * lam_min / denom, thetas


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    exponent_stderr: float
    ci95: tuple[float, float]
    log_prefactor: float
    r_squared: float


def scaling_fit(points) -> PowerLawFit:
    """Least-squares slope of log(xi2_peak) against log(N).

    ``points`` is a sequence of (N, xi2_peak) pairs with at least 4 distinct N.
    The 95% confidence interval uses the two-sided Student-t quantile.
    """
    points = list(points)
    ns = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if len(set(ns.tolist())) < 4:
        raise ValueError("power-law fit needs at least 4 distinct N values")
    if np.any(ns <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs positive N and xi2 values")
    x, y = np.log(ns), np.log(ys)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    dof = n - 2
    stderr = math.sqrt(ss_res / dof / sxx) if dof > 0 else math.nan
    tq = stats.t.ppf(0.975, dof) if dof > 0 else math.nan
    return PowerLawFit(
        exponent=float(slope),
        exponent_stderr=float(stderr),
        ci95=(float(slope - tq * stderr), float(slope + tq * stderr)),
        log_prefactor=float(intercept),
        r_squared=1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
    )
