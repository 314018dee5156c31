"""Hamiltonians and Lindblad dissipators for the three model tiers.

Tiers, from most to least microscopic:

* ``full_dicke``   -- spin-1 Dicke model on the joint atom (x) photon space,
  with cavity decay.
* ``dispersive``   -- cavity adiabatically eliminated; collective spin-spin
  interactions plus a single collective jump operator.
* ``spin_mixing``  -- the dispersive model with the counter-rotating coupling
  switched off, assembled in the bosonic pair-exchange form.

Dissipator convention (single, central conversion): every model stores jump
pairs ``(C, rate)`` under the standard Lindblad form

    drho/dt = -i [H, rho] + sum_k rate_k (C rho C^dag - 1/2 {C^dag C, rho}).

The source derivations for these models quote the superoperator
``D[c] rho = 2 c rho c^dag - {c^dag c, rho}``, which carries a factor 2, so a
decay written there as ``kappa D[a]`` enters here as ``(a, 2 kappa)``, and
``(Gamma/2N) D[S_-]`` as ``(S_-, Gamma/N)``.  Jump operators with exactly zero
rate are dropped at construction.

Energy zero points: ``spin_mixing`` uses the bosonic normal-ordered form,
whose zero point differs from ``omega_0' S_z + (Lambda/2N)(S_x^2 + S_y^2)`` by
the constant -Lambda/2; ``dispersive`` keeps the operator form produced by the
cavity elimination.  Constants do not affect any dynamics or observable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .hilbert import SymmetricBasis, prune, hermiticity_defect
from .params import DispersiveParams, EffectiveDickeParams


class RegimeWarning(UserWarning):
    """A model was assembled outside the regime its derivation assumes."""


@dataclass(frozen=True, eq=False)
class JointBasis:
    """Atom (x) photon product space with a truncated Fock ladder."""

    atom_basis: SymmetricBasis
    photon_cutoff: int

    def __post_init__(self):
        if self.photon_cutoff < 1:
            raise ValueError("photon cutoff must be >= 1")

    @property
    def dim(self) -> int:
        return self.atom_basis.dim * (self.photon_cutoff + 1)

    def photon_destroy(self) -> sp.csr_matrix:
        n = self.photon_cutoff + 1
        return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=complex)

    def lift_atom(self, op: sp.spmatrix) -> sp.csr_matrix:
        return sp.kron(op, sp.identity(self.photon_cutoff + 1, format="csr"), format="csr")

    def lift_photon(self, op: sp.spmatrix) -> sp.csr_matrix:
        return sp.kron(sp.identity(self.atom_basis.dim, format="csr"), op, format="csr")

    def photon_number(self) -> sp.csr_matrix:
        a = self.photon_destroy()
        return self.lift_photon(prune(a.getH() @ a))

    def with_vacuum(self, atom_state: np.ndarray) -> np.ndarray:
        """Joint state |atom> (x) |n_ph = 0>."""
        photon = np.zeros(self.photon_cutoff + 1, dtype=complex)
        photon[0] = 1.0
        return np.kron(np.asarray(atom_state, dtype=complex), photon)


@dataclass(frozen=True, eq=False)
class SectorStructure:
    """Marks a model whose Hamiltonian conserves S_z and whose jump operators
    each shift the S_z eigenvalue by a fixed amount.  Enables the
    sector-restricted trajectory fast path."""

    basis: SymmetricBasis
    jump_shifts: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: sp.csr_matrix
    jump_operators: tuple[tuple[sp.csr_matrix, float], ...]
    sector: SectorStructure | None = None

    def __post_init__(self):
        h = self.hamiltonian
        scale = max(1.0, abs(h.data).max() if h.nnz else 0.0)
        defect = hermiticity_defect(h)
        if defect > hilbert.HERMITICITY_TOL * scale:
            raise ValueError(f"Hamiltonian not hermitian: defect {defect:.3e}")
        for _, rate in self.jump_operators:
            if rate < 0:
                raise ValueError("jump rates must be non-negative")

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def effective_hamiltonian(self) -> sp.csr_matrix:
        """Non-hermitian H_eff = H - (i/2) sum_k rate_k C_k^dag C_k."""
        h_eff = self.hamiltonian.astype(complex)
        for op, rate in self.jump_operators:
            h_eff = h_eff - 0.5j * rate * (op.getH() @ op)
        return prune(sp.csr_matrix(h_eff))


def _jump_list(pairs) -> tuple[tuple[sp.csr_matrix, float], ...]:
    return tuple((prune(op), float(rate)) for op, rate in pairs if rate > 0.0)


def full_dicke(
    d: EffectiveDickeParams,
    kappa: float,
    jb: JointBasis,
    include_residuals: bool = False,
) -> LindbladModel:
    """Spin-1 Dicke model on the joint space, cavity decay as jump (a, 2 kappa).

    H = omega a^dag a + omega_0 S_z
        + (lambda_-/sqrt(2N)) (a S_+ + a^dag S_-)
        + (lambda_+/sqrt(2N)) (a S_- + a^dag S_+),

    with N the atom number of ``jb``.  ``include_residuals`` adds the
    finite-zeta terms left over from the excited-state elimination: per-atom
    sums of S_z^2 (a population term), the quadrupole-photon couplings, and the
    double spin-flip term.  Their coefficients vanish linearly in zeta/Delta.
    """
    basis = jb.atom_basis
    n = basis.n_atoms
    spin = hilbert.spin_operators(basis)
    a = jb.photon_destroy()
    a_dag = a.getH()

    h = d.omega * jb.photon_number() + d.omega_0 * jb.lift_atom(spin["Sz"])
    norm = 1.0 / np.sqrt(2.0 * n)
    h = h + d.lambda_minus * norm * (
        sp.kron(spin["Sp"], a, format="csr") + sp.kron(spin["Sm"], a_dag, format="csr")
    )
    h = h + d.lambda_plus * norm * (
        sp.kron(spin["Sm"], a, format="csr") + sp.kron(spin["Sp"], a_dag, format="csr")
    )

    if include_residuals:
        h = h + _residual_terms(d, jb)

    jumps = _jump_list([(jb.lift_photon(a), 2.0 * kappa)])
    return LindbladModel(hamiltonian=prune(h), jump_operators=jumps)


def _residual_terms(d: EffectiveDickeParams, jb: JointBasis) -> sp.csr_matrix:
    """Finite-zeta residual Hamiltonian, summed over atoms.

    The single-atom pieces sum to bosonic operators: sum_i (S_z^(i))^2 is the
    m = +-1 population, sum_i (S_+-^(i))^2 is a +1 <-> -1 exchange, and the
    quadrupole couplings carry a factor 2 relative to the anticommutator
    convention of :mod:`spincavity.hilbert`.
    """
    basis = jb.atom_basis
    quad = hilbert.quadrupole_operators(basis)
    a = jb.photon_destroy()
    a_dag = a.getH()
    pop_pm = hilbert.number_operator(basis, +1) + hilbert.number_operator(basis, -1)
    flip = hilbert.transition(basis, +1, -1) + hilbert.transition(basis, -1, +1)

    h = d.omega_q * jb.lift_atom(pop_pm)
    h = h + (d.delta_q / 2.0) * sp.kron(pop_pm, a_dag @ a, format="csr")
    h = h + 2.0 * d.xi_1 * sp.kron(quad["Qxz"], a + a_dag, format="csr")
    h = h + 2.0 * d.xi_2 * sp.kron(quad["Qyz"], 1j * (a - a_dag), format="csr")
    h = h + 2.0 * d.h * jb.lift_atom(flip)
    return sp.csr_matrix(h)


#: regime-warning margin for the dispersive derivation
DISPERSIVE_WARN_MARGIN = 5.0


def dispersive(
    d: EffectiveDickeParams, kappa: float, basis: SymmetricBasis
) -> LindbladModel:
    """Dispersive model after cavity elimination.

    H carries (lambda_- + lambda_+)^2 S_x^2 and (lambda_- - lambda_+)^2 S_y^2
    terms plus a shifted linear S_z term; the single jump operator is
    C = lambda_- S_- + lambda_+ S_+ with rate 2 kappa / (2N (omega^2+kappa^2)).
    Warns (does not fail) when |omega| is not large against omega_0, lambda_+-.
    """
    n = basis.n_atoms
    scale = max(abs(d.omega_0), abs(d.lambda_minus), abs(d.lambda_plus))
    if abs(d.omega) < DISPERSIVE_WARN_MARGIN * scale:
        warnings.warn(
            f"dispersive model outside its regime: |omega| = {abs(d.omega):.3e} "
            f"is not large against max(|omega_0|, |lambda|) = {scale:.3e}",
            RegimeWarning,
            stacklevel=2,
        )
    spin = hilbert.spin_operators(basis)
    denom = 2.0 * n * (d.omega**2 + kappa**2)
    sx2 = spin["Sx"] @ spin["Sx"]
    sy2 = spin["Sy"] @ spin["Sy"]
    h = (
        (d.omega_0 - d.omega * (d.lambda_minus**2 - d.lambda_plus**2) / denom)
        * spin["Sz"]
        - (d.omega / denom)
        * (
            (d.lambda_minus + d.lambda_plus) ** 2 * sx2
            + (d.lambda_minus - d.lambda_plus) ** 2 * sy2
        )
    )
    jump = d.lambda_minus * spin["Sm"] + d.lambda_plus * spin["Sp"]
    jumps = _jump_list([(jump, 2.0 * kappa / denom)])

    sector = None
    if d.lambda_plus == 0.0 or d.lambda_minus == 0.0:
        shift = -1 if d.lambda_plus == 0.0 else +1
        sector = SectorStructure(basis=basis, jump_shifts=(shift,) * len(jumps))
    return LindbladModel(hamiltonian=prune(h), jump_operators=jumps, sector=sector)


def spin_mixing(p: DispersiveParams, basis: SymmetricBasis) -> LindbladModel:
    """Spin-mixing model, bosonic pair-exchange form.

    H = omega_0' S_z + (Lambda/2N) (2 a_+1^dag a_-1^dag a_0 a_0 + h.c.
        + a_0^dag a_0 (1 + 2 n_+1 + 2 n_-1)),
    jump operator S_- with rate Gamma/N.  The Hamiltonian conserves S_z and the
    jump lowers it by one, which the returned sector structure records.
    """
    if p.Gamma < 0:
        raise ValueError("Gamma must be non-negative")
    n = basis.n_atoms
    spin = hilbert.spin_operators(basis)
    pair_up = hilbert.pair_exchange_up(basis)
    occ = basis.occ
    diag = occ[:, 1] * (1.0 + 2.0 * occ[:, 2] + 2.0 * occ[:, 0])
    h = p.omega_0_prime * spin["Sz"] + (p.Lambda / (2.0 * n)) * (
        2.0 * pair_up + 2.0 * pair_up.getH() + sp.diags(diag.astype(complex), format="csr")
    )
    jumps = _jump_list([(spin["Sm"], p.Gamma / n)])
    sector = SectorStructure(basis=basis, jump_shifts=(-1,) * len(jumps))
    return LindbladModel(hamiltonian=prune(h), jump_operators=jumps, sector=sector)
