"""SU(2) coherent states and the atomic Q-function on the squeezing sphere.

The squeezing dynamics lives on the sphere spanned by
{S_x, Q_yz, Q_zz - Q_yy}.  The "z axis" of this SU(2) is Q_zz - Q_yy, whose
lowest eigenstate |M = 0> = |0, N, 0> is placed at the south pole
(theta_s = 0); the ladder |M> = (S_plus_ladder)^M |0> climbs its spectrum in
steps of 4.  Each |M> is normalised as it is generated, since the raw ladder
norms overflow well before N = 120.

Coherent states follow the binomial construction

    |eta> = (1 + |eta|^2)^(-N/2) sum_M binom(N, M)^(1/2) eta^M |M>,
    eta = exp(i phi) tan(theta_s / 2),

with coefficients evaluated in log space.  The Q-function is
Q(eta) = <eta| rho |eta>.  Dynamics can leave the (N+1)-dimensional ladder
subspace; the grid therefore reports the projected weight alongside the
values, and ((N+1)/4pi) integral(Q) equals that weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hilbert
from .hilbert import SymmetricBasis

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LadderBasis:
    """Orthonormal eigenstates |M> of Q_zz - Q_yy, M = 0..N, as row vectors."""

    basis: SymmetricBasis
    kets: np.ndarray  # shape (N+1, dim)

    @property
    def n_atoms(self) -> int:
        return self.basis.n_atoms

    def overlaps(self, state: np.ndarray) -> np.ndarray:
        """<M|psi> for all M."""
        return self.kets.conj() @ np.asarray(state, dtype=complex)

    def project_density(self, rho: np.ndarray) -> np.ndarray:
        """(N+1) x (N+1) block <M| rho |M'>."""
        return self.kets.conj() @ rho @ self.kets.T


def build_ladder(basis: SymmetricBasis) -> LadderBasis:
    """Generate the ladder by repeated application of the raising operator,
    normalising after each application."""
    ladder = hilbert.ladder_operators(basis)["plus"]
    n = basis.n_atoms
    kets = np.empty((n + 1, basis.dim), dtype=complex)
    vec = basis.polar_state()
    kets[0] = vec
    for m in range(1, n + 1):
        vec = ladder @ vec
        vec = vec / np.linalg.norm(vec)
        kets[m] = vec
    return LadderBasis(basis=basis, kets=kets)


def coherent_amplitudes(n_atoms: int, theta_s: float, phi: float) -> np.ndarray:
    """Ladder-basis coefficients of |eta>, stable in log space.

    c_M = binom(N, M)^(1/2) cos(theta/2)^(N-M) sin(theta/2)^M e^(i M phi),
    which is the normalised form of the binomial construction.
    """
    if not 0.0 <= theta_s <= math.pi:
        raise ValueError("polar angle must lie in [0, pi]")
    n = n_atoms
    m = np.arange(n + 1)
    half = 0.5 * theta_s
    cos_h, sin_h = math.cos(half), math.sin(half)
    if sin_h == 0.0:
        amps = np.zeros(n + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    if cos_h == 0.0:
        amps = np.zeros(n + 1, dtype=complex)
        amps[n] = np.exp(1j * n * phi)
        return amps
    ln_binom = (
        math.lgamma(n + 1)
        - np.array([math.lgamma(k + 1) + math.lgamma(n - k + 1) for k in m])
    )
    ln_mag = 0.5 * ln_binom + (n - m) * math.log(cos_h) + m * math.log(sin_h)
    mag = np.exp(ln_mag - ln_mag.max())
    mag /= np.linalg.norm(mag)
    return mag * np.exp(1j * m * phi)


def coherent_state(ladder: LadderBasis, theta_s: float, phi: float) -> np.ndarray:
    """Normalised coherent state as a full symmetric-basis vector."""
    amps = coherent_amplitudes(ladder.n_atoms, theta_s, phi)
    return amps @ ladder.kets


@dataclass(frozen=True)
class SphereGrid:
    """Q sampled on an equiangular (polar x azimuthal) grid."""

    theta_s: np.ndarray          # (n_polar,), in [0, pi]
    phi: np.ndarray              # (n_azimuthal,), in [0, 2 pi)
    values: np.ndarray           # (n_polar, n_azimuthal), in [0, 1]
    projected_weight: float      # weight of the state inside the ladder subspace

    def rows(self):
        """Iterate (theta_s, phi, Q) for tabular serialisation."""
        for i, th in enumerate(self.theta_s):
            for j, ph in enumerate(self.phi):
                yield th, ph, self.values[i, j]


def _amplitude_table(n_atoms: int, theta_s: np.ndarray) -> np.ndarray:
    """Real magnitude part of the coherent coefficients, shape (n_polar, N+1)."""
    table = np.empty((theta_s.size, n_atoms + 1))
    for i, th in enumerate(theta_s):
        table[i] = np.abs(coherent_amplitudes(n_atoms, float(th), 0.0))
    return table


def _q_values(
    state: np.ndarray, ladder: LadderBasis, theta_s: np.ndarray, phi: np.ndarray
) -> tuple[np.ndarray, float]:
    """Q on the outer product of the angle arrays, plus the projected weight."""
    n = ladder.n_atoms
    mag = _amplitude_table(n, theta_s)                      # (P, N+1)
    phase = np.exp(-1j * np.outer(phi, np.arange(n + 1)))   # (A, N+1): conj phases
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        overlaps = ladder.overlaps(state)                   # <M|psi>
        weight = float(np.sum(np.abs(overlaps) ** 2))
        weighted = mag * overlaps[None, :]                  # (P, N+1)
        values = np.abs(weighted @ phase.T) ** 2            # (P, A)
    elif state.ndim == 2:
        block = ladder.project_density(state)               # (N+1, N+1)
        weight = float(np.real(np.trace(block)))
        values = np.empty((theta_s.size, phi.size))
        for i in range(theta_s.size):
            bra = mag[i][None, :] * phase                   # conj(c) rows, (A, N+1)
            values[i] = np.real(np.einsum("am,am->a", bra @ block, bra.conj()))
    else:
        raise ValueError("state must be a vector or a density matrix")
    return np.clip(values.real, 0.0, None), weight


def qfunction(
    state: np.ndarray,
    ladder: LadderBasis,
    n_polar: int = 121,
    n_azimuthal: int = 240,
) -> SphereGrid:
    """Evaluate Q on an equiangular grid.

    ``state`` is a normalised vector or a density matrix on the full symmetric
    basis.  Values are overlaps with the ladder-subspace projection of the
    state, so they integrate (with the SU(2) measure) to the projected weight.
    """
    theta_s = np.linspace(0.0, math.pi, n_polar)
    phi = np.linspace(0.0, 2.0 * math.pi, n_azimuthal, endpoint=False)
    values, weight = _q_values(state, ladder, theta_s, phi)
    return SphereGrid(
        theta_s=theta_s, phi=phi, values=values, projected_weight=weight
    )


def identity_weight(
    state: np.ndarray, ladder: LadderBasis, n_polar: int | None = None
) -> float:
    """((N+1)/4pi) integral of Q over the sphere, by exact quadrature.

    Gauss-Legendre in cos(theta) with uniform azimuthal samples integrates the
    degree <= 2N spherical polynomial exactly, so the result equals the weight
    of the state inside the ladder subspace (1 for states supported on it).
    """
    n = ladder.n_atoms
    n_polar = n_polar or (n + 2)
    n_azim = 2 * n + 3
    nodes, weights = np.polynomial.legendre.leggauss(n_polar)
    theta_s = np.arccos(nodes)
    phi = np.linspace(0.0, 2.0 * math.pi, n_azim, endpoint=False)
    values, _ = _q_values(state, ladder, theta_s, phi)
    azim_integral = values.sum(axis=1) * (2.0 * math.pi / n_azim)
    integral = float(weights @ azim_integral)
    return (n + 1) / (4.0 * math.pi) * integral
