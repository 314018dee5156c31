"""Laboratory-to-model parameter mapping and feasibility diagnostics.

All quantities are angular frequencies in rad/s unless stated otherwise; the
CLI layer converts from the "/2pi" frequency units used in configs.

Two tiers of derived parameters are produced:

* ``EffectiveDickeParams``: coefficients of the spin-1 Dicke model obtained by
  adiabatic elimination of the atomic excited states.  In the large-detuning
  mode the excited hyperfine splitting ``zeta`` is neglected and the residual
  coefficients vanish; otherwise the full finite-zeta expressions are used,
  keeping 1/Delta and 1/(Delta + zeta) distinct.
* ``DispersiveParams``: spin-mixing rate Lambda, collective damping Gamma and
  residual linear term omega_0' after adiabatic elimination of the cavity.

Sign conventions: lambda_(-,+) are stored signed, following the sign that the
elimination actually produces (the squeezing observables depend only on
lambda^2, so this choice is physically inert).  Lambda is stored signed with
sign -sign(omega); Gamma is stored non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class MicroscopicParams:
    """Laboratory parameters of the driven atom-cavity system (rad/s)."""

    g: float              # single-atom cavity coupling
    kappa: float          # cavity field decay rate
    gamma: float          # atomic spontaneous linewidth
    Delta: float          # common detuning from the excited manifold
    zeta: float           # excited hyperfine splitting omega_2 - omega_1
    Omega_plus: float     # Rabi frequency of the sigma+ laser
    Omega_minus: float    # Rabi frequency of the sigma- laser
    omega_c: float        # cavity frequency (only offsets matter)
    omega_plus: float     # sigma+ laser frequency
    omega_minus: float    # sigma- laser frequency
    omega_z: float        # ground-state Zeeman splitting
    n_atoms: int

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.n_atoms < 1:
            raise ValueError("atom number must be >= 1")
        if self.Delta == 0:
            raise ValueError("Delta must be nonzero (resonant divergence)")
        if self.Delta + self.zeta == 0:
            raise ValueError("Delta + zeta must be nonzero (resonant divergence)")


@dataclass(frozen=True)
class EffectiveDickeParams:
    """Coefficients of the effective spin-1 Dicke model (rad/s).

    ``n_atoms`` records the ensemble size the mapping was evaluated for; the
    model assemblers normalise couplings with the atom number of the basis
    they are given, so a mapping at large N may drive a smaller simulation.
    """

    omega: float          # dressed cavity detuning
    omega_0: float        # dressed spin splitting
    lambda_minus: float   # collective Raman coupling (co-rotating channel)
    lambda_plus: float    # collective Raman coupling (counter-rotating channel)
    n_atoms: int
    # residual finite-zeta coefficients; identically zero in large-detuning mode
    omega_q: float = 0.0
    delta_q: float = 0.0
    xi_1: float = 0.0
    xi_2: float = 0.0
    h: float = 0.0


@dataclass(frozen=True)
class DispersiveParams:
    """Spin-mixing model coefficients after cavity elimination (rad/s)."""

    omega_0_prime: float      # residual linear S_z term
    Lambda: float             # spin-mixing rate, signed (-sign(omega))
    Gamma: float              # collective damping rate, >= 0
    Gamma_over_Lambda: float  # kappa / |omega|

    def __post_init__(self):
        if self.Gamma < 0:
            raise ValueError("Gamma must be non-negative")


def dicke_params(p: MicroscopicParams, large_detuning: bool = True) -> EffectiveDickeParams:
    """Map laboratory parameters to the effective Dicke model.

    With ``large_detuning`` the hyperfine splitting is neglected entirely
    (residual coefficients are zero); otherwise the full finite-zeta
    coefficient set is evaluated.
    """
    sqrt_n = math.sqrt(p.n_atoms)
    laser_mean = (p.omega_plus + p.omega_minus) / 2.0
    laser_half_diff = (p.omega_minus - p.omega_plus) / 2.0
    if large_detuning:
        if p.Delta == 0:
            raise ValueError("Delta must be nonzero")
        omega = p.omega_c - laser_mean + p.n_atoms * p.g**2 / (3.0 * p.Delta)
        omega_0 = (
            p.omega_z
            + laser_half_diff
            + (p.Omega_minus**2 - p.Omega_plus**2) / (24.0 * p.Delta)
        )
        lam_minus = -sqrt_n * p.g * p.Omega_minus / (12.0 * p.Delta)
        lam_plus = -sqrt_n * p.g * p.Omega_plus / (12.0 * p.Delta)
        return EffectiveDickeParams(
            omega=omega,
            omega_0=omega_0,
            lambda_minus=lam_minus,
            lambda_plus=lam_plus,
            n_atoms=p.n_atoms,
        )

    inv_d = 1.0 / p.Delta
    inv_dz = 1.0 / (p.Delta + p.zeta)
    omega = p.omega_c - laser_mean + p.n_atoms * p.g**2 * inv_dz / 3.0
    omega_0 = (
        p.omega_z
        + laser_half_diff
        + (p.Omega_minus**2 - p.Omega_plus**2) / 96.0 * (5.0 * inv_dz - inv_d)
    )
    coupling_kernel = (inv_d - 5.0 * inv_dz) / 48.0
    lam_minus = sqrt_n * p.g * p.Omega_minus * coupling_kernel
    lam_plus = sqrt_n * p.g * p.Omega_plus * coupling_kernel
    omega_q = (p.Omega_plus**2 + p.Omega_minus**2) / 96.0 * (inv_dz - inv_d)
    delta_q = p.g**2 / 6.0 * (inv_d - inv_dz)
    xi_1 = p.g * (p.Omega_plus - p.Omega_minus) / 96.0 * (inv_d - inv_dz)
    xi_2 = p.g * (p.Omega_plus + p.Omega_minus) / 96.0 * (inv_dz - inv_d)
    h = p.Omega_plus * p.Omega_minus / 96.0 * (inv_d - inv_dz)
    return EffectiveDickeParams(
        omega=omega,
        omega_0=omega_0,
        lambda_minus=lam_minus,
        lambda_plus=lam_plus,
        n_atoms=p.n_atoms,
        omega_q=omega_q,
        delta_q=delta_q,
        xi_1=xi_1,
        xi_2=xi_2,
        h=h,
    )


def dispersive_params(d: EffectiveDickeParams, kappa: float) -> DispersiveParams:
    """Eliminate the cavity: omega_0' = omega_0 + Lambda/2N, Lambda = -omega lambda^2/(omega^2+kappa^2),
    Gamma = -(kappa/omega) Lambda.

    Evaluated in the spin-mixing configuration lambda_+ = 0, lambda = lambda_-.
    """
    if d.omega == 0:
        raise ValueError("omega must be nonzero in the dispersive limit")
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    lam_sq = d.lambda_minus**2
    denom = d.omega**2 + kappa**2
    lam_big = -d.omega * lam_sq / denom
    gamma_big = kappa * lam_sq / denom
    return DispersiveParams(
        omega_0_prime=d.omega_0 + lam_big / (2.0 * d.n_atoms),
        Lambda=lam_big,
        Gamma=gamma_big,
        Gamma_over_Lambda=kappa / abs(d.omega),
    )


def zeeman_for_null_omega_0_prime(
    p: MicroscopicParams, large_detuning: bool = True
) -> float:
    """Zeeman splitting omega_z that nulls omega_0' at the given laser settings.

    omega_0 is affine in omega_z with unit slope, and Lambda does not depend on
    omega_z, so the root is closed-form.
    """
    base = dicke_params(replace(p, omega_z=0.0), large_detuning=large_detuning)
    disp = dispersive_params(base, p.kappa)
    return -disp.omega_0_prime


@dataclass(frozen=True)
class FeasibilityReport:
    """Spontaneous-emission and regime diagnostics for a parameter set."""

    cooperativity: float            # C = 2 g^2 / (kappa gamma)
    gamma_sp_minus: float           # gamma Omega_-^2 / (12 Delta^2)
    gamma_sp_plus: float            # gamma Omega_+^2 / (12 Delta^2)
    gamma_sp_total: float           # sum of the two (convention choice: the
                                    # per-laser rates are also reported)
    gamma_sp_over_half_lambda: float
    gamma_over_lambda: float
    large_detuning_ok: bool         # |zeta / Delta| < 0.1
    dispersive_ok: bool             # |omega| > 10 max(|omega_0|, |lambda_+-|)


#: regime-flag thresholds used by ``feasibility``
ZETA_RATIO_LIMIT = 0.1
DISPERSIVE_MARGIN = 10.0


def feasibility(p: MicroscopicParams, d: DispersiveParams) -> FeasibilityReport:
    """Diagnostics: cooperativity, spontaneous-emission penalty, regime flags."""
    coop = 2.0 * p.g**2 / (p.kappa * p.gamma)
    gsp_minus = p.gamma * p.Omega_minus**2 / (12.0 * p.Delta**2)
    gsp_plus = p.gamma * p.Omega_plus**2 / (12.0 * p.Delta**2)
    gsp_total = gsp_minus + gsp_plus
    half_lambda = abs(d.Lambda) / 2.0
    ratio = gsp_total / half_lambda if half_lambda > 0 else math.inf
    dicke = dicke_params(p, large_detuning=True)
    scale = max(abs(dicke.omega_0), abs(dicke.lambda_minus), abs(dicke.lambda_plus))
    return FeasibilityReport(
        cooperativity=coop,
        gamma_sp_minus=gsp_minus,
        gamma_sp_plus=gsp_plus,
        gamma_sp_total=gsp_total,
        gamma_sp_over_half_lambda=ratio,
        gamma_over_lambda=d.Gamma_over_Lambda,
        large_detuning_ok=abs(p.zeta / p.Delta) < ZETA_RATIO_LIMIT,
        dispersive_ok=abs(dicke.omega) > DISPERSIVE_MARGIN * scale,
    )
