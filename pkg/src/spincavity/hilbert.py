"""Symmetric three-mode Fock space for N spin-1 atoms and its sparse operators.

The permutation-symmetric sector of N three-level atoms is isomorphic to three
bosonic modes labelled by the Zeeman sublevel m = -1, 0, +1, with the total
occupation fixed at N.  Every collective operator used by the simulation
engine (spin, quadrupole, ladder, pair exchange) is a number-conserving
bilinear or quartic in the mode operators and is built directly inside the
fixed-N sector as a sparse matrix.

Basis ordering is lexicographic descending in (n_zero, n_plus), so index 0 is
always the fully polarised state |0, N, 0>.  The ordering is deterministic and
stable across runs and platforms.  Atom numbers up to MAX_ATOMS = 400
(dimension 80601) are supported; construction stays cheap throughout that
range.

Quadrupole operators follow the single-atom anticommutator convention
Q_ij = S_i S_j + S_j S_i - (4/3) * delta_ij, summed over atoms.  With this
normalisation [S_x, Q_yz] = i (Q_zz - Q_yy) and the polar state |0, N, 0> has
<Q_zz - Q_yy> = -2N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

MAX_ATOMS = 400
PRUNE_TOL = 1e-15
HERMITICITY_TOL = 1e-12

SQRT2 = np.sqrt(2.0)


class FockState(NamedTuple):
    """Occupation numbers (n_minus, n_zero, n_plus) of the three modes."""

    n_minus: int
    n_zero: int
    n_plus: int


def _enumerate_states(n_atoms: int) -> list[FockState]:
    states = []
    for n_zero in range(n_atoms, -1, -1):
        for n_plus in range(n_atoms - n_zero, -1, -1):
            states.append(FockState(n_atoms - n_zero - n_plus, n_zero, n_plus))
    return states


@dataclass(frozen=True, eq=False)
class SymmetricBasis:
    """Indexed enumeration of three-mode Fock states with fixed atom number."""

    n_atoms: int
    states: tuple[FockState, ...]
    index_of: dict[FockState, int] = field(repr=False)
    # occupation arrays aligned with the state ordering, for vectorised builds
    occ: np.ndarray = field(repr=False)  # shape (dim, 3), columns m=-1,0,+1

    @property
    def dim(self) -> int:
        return len(self.states)

    def index(self, n_minus: int, n_zero: int, n_plus: int) -> int:
        """Dense index of a state, O(1) from the ordering formula."""
        r = self.n_atoms - n_zero
        return r * (r + 1) // 2 + (r - n_plus)

    def vector(self, state: FockState | tuple[int, int, int]) -> np.ndarray:
        """Unit vector for a single Fock state."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index_of[FockState(*state)]] = 1.0
        return psi

    def polar_state(self) -> np.ndarray:
        """|0, N, 0>: every atom in m = 0.  Always index 0."""
        return self.vector(FockState(0, self.n_atoms, 0))

    def sz_value(self) -> np.ndarray:
        """S_z eigenvalue n_plus - n_minus per basis state."""
        return self.occ[:, 2] - self.occ[:, 0]

    def sz_sectors(self) -> dict[int, np.ndarray]:
        """Basis indices grouped by S_z eigenvalue."""
        m = self.sz_value()
        return {
            int(val): np.flatnonzero(m == val)
            for val in range(-self.n_atoms, self.n_atoms + 1)
            if np.any(m == val)
        }


def build_basis(n_atoms: int) -> SymmetricBasis:
    """Construct the symmetric basis for ``n_atoms`` spin-1 atoms.

    Dimension is (N+1)(N+2)/2.  Raises ValueError outside 1 <= N <= MAX_ATOMS.
    """
    if not isinstance(n_atoms, (int, np.integer)) or isinstance(n_atoms, bool):
        raise ValueError(f"atom number must be an integer, got {n_atoms!r}")
    if n_atoms < 1 or n_atoms > MAX_ATOMS:
        raise ValueError(
            f"atom number must satisfy 1 <= N <= {MAX_ATOMS}, got {n_atoms}"
        )
    return _build_basis_unchecked(int(n_atoms))


def _build_basis_unchecked(n_atoms: int) -> SymmetricBasis:
    states = tuple(_enumerate_states(n_atoms))
    index_of = {state: k for k, state in enumerate(states)}
    occ = np.array(states, dtype=np.int64)
    return SymmetricBasis(n_atoms, states, index_of, occ)


def prune(mat: sp.spmatrix, tol: float = PRUNE_TOL) -> sp.csr_matrix:
    """Drop stored entries with magnitude below ``tol`` and return CSR."""
    mat = sp.csr_matrix(mat)
    mat.data[np.abs(mat.data) < tol] = 0.0
    mat.eliminate_zeros()
    return mat


def hermiticity_defect(mat: sp.spmatrix) -> float:
    """max |A - A^dagger| over stored entries."""
    diff = (mat - mat.getH()).tocoo()
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def is_hermitian(mat: sp.spmatrix, tol: float = HERMITICITY_TOL) -> bool:
    return hermiticity_defect(mat) <= tol


_MODE_COLUMN = {-1: 0, 0: 1, +1: 2}


def number_operator(basis: SymmetricBasis, mode: int) -> sp.csr_matrix:
    """Diagonal occupation operator for one mode."""
    occ = basis.occ[:, _MODE_COLUMN[mode]].astype(float)
    return sp.diags(occ, format="csr", dtype=complex)


def transition(basis: SymmetricBasis, create: int, destroy: int) -> sp.csr_matrix:
    """Number-conserving bilinear a_create^dagger a_destroy on the fixed-N sector."""
    if create == destroy:
        return number_operator(basis, create)
    ci, di = _MODE_COLUMN[create], _MODE_COLUMN[destroy]
    occ = basis.occ
    src = np.flatnonzero(occ[:, di] > 0)
    amp = np.sqrt(occ[src, di] * (occ[src, ci] + 1.0))
    new_occ = occ[src].copy()
    new_occ[:, di] -= 1
    new_occ[:, ci] += 1
    r = basis.n_atoms - new_occ[:, 1]
    dst = r * (r + 1) // 2 + (r - new_occ[:, 2])
    mat = sp.csr_matrix(
        (amp.astype(complex), (dst, src)), shape=(basis.dim, basis.dim)
    )
    return prune(mat)


def annihilator(basis: SymmetricBasis, mode: int) -> sp.csr_matrix:
    """Rectangular map a_mode from the N-atom sector to the (N-1)-atom sector.

    Rows are indexed by the (N-1)-atom enumeration in the same canonical
    ordering (see ``build_basis``); columns by ``basis``.  Used only for
    construction-time checks: the dynamics never leaves fixed N.
    """
    if mode not in _MODE_COLUMN:
        raise ValueError(f"mode must be one of -1, 0, +1, got {mode}")
    target = _enumerate_states(basis.n_atoms - 1)
    target_index = {state: k for k, state in enumerate(target)}
    col_mode = _MODE_COLUMN[mode]
    rows, cols, vals = [], [], []
    for j, state in enumerate(basis.states):
        n = state[col_mode]
        if n == 0:
            continue
        lowered = list(state)
        lowered[col_mode] -= 1
        rows.append(target_index[FockState(*lowered)])
        cols.append(j)
        vals.append(np.sqrt(n))
    mat = sp.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)),
        shape=(len(target), basis.dim),
    )
    return prune(mat)


def pair_exchange_up(basis: SymmetricBasis) -> sp.csr_matrix:
    """Quartic a_{+1}^dag a_{-1}^dag a_0 a_0: converts two m=0 atoms to a +1/-1 pair."""
    occ = basis.occ
    src = np.flatnonzero(occ[:, 1] >= 2)
    n0 = occ[src, 1].astype(float)
    amp = np.sqrt(n0 * (n0 - 1.0) * (occ[src, 2] + 1.0) * (occ[src, 0] + 1.0))
    new_occ = occ[src].copy()
    new_occ[:, 1] -= 2
    new_occ[:, 0] += 1
    new_occ[:, 2] += 1
    r = basis.n_atoms - new_occ[:, 1]
    dst = r * (r + 1) // 2 + (r - new_occ[:, 2])
    mat = sp.csr_matrix(
        (amp.astype(complex), (dst, src)), shape=(basis.dim, basis.dim)
    )
    return prune(mat)


def spin_operators(basis: SymmetricBasis) -> dict[str, sp.csr_matrix]:
    """Collective spin-1 operators S_x, S_y, S_z, S_+, S_-.

    S_- = sqrt(2) (a_{-1}^dag a_0 + a_0^dag a_{+1}); S_+ is its adjoint;
    S_z = n_{+1} - n_{-1}.
    """
    s_minus = prune(SQRT2 * (transition(basis, -1, 0) + transition(basis, 0, +1)))
    s_plus = prune(s_minus.getH())
    s_x = prune((s_plus + s_minus) / 2.0)
    s_y = prune((s_plus - s_minus) / 2.0j)
    s_z = prune(number_operator(basis, +1) - number_operator(basis, -1))
    return {"Sx": s_x, "Sy": s_y, "Sz": s_z, "Sp": s_plus, "Sm": s_minus}


def quadrupole_operators(basis: SymmetricBasis) -> dict[str, sp.csr_matrix]:
    """Collective quadrupole (nematic) operators in the anticommutator convention.

    Q_zz - Q_yy = -2 n_0 + n_{+1} + n_{-1} + a_{+1}^dag a_{-1} + a_{-1}^dag a_{+1},
    whose polar-state expectation is -2N.  Q_yz and Q_xz are the collective sums
    of the single-atom products S_i S_j + S_j S_i.
    """
    t_p0 = transition(basis, +1, 0)
    t_0p = transition(basis, 0, +1)
    t_m0 = transition(basis, -1, 0)
    t_0m = transition(basis, 0, -1)
    q_yz = prune((1j / SQRT2) * (-t_m0 + t_0m + t_0p - t_p0))
    q_xz = prune((1.0 / SQRT2) * (-t_m0 - t_0m + t_0p + t_p0))
    diag = (
        -2.0 * number_operator(basis, 0)
        + number_operator(basis, +1)
        + number_operator(basis, -1)
    )
    exchange = transition(basis, +1, -1) + transition(basis, -1, +1)
    q_zz_yy = prune(diag + exchange)
    q_zz_xx = prune(diag - exchange)
    return {
        "Qyz": q_yz,
        "Qxz": q_xz,
        "Qzz_minus_Qyy": q_zz_yy,
        "Qzz_minus_Qxx": q_zz_xx,
    }


def ladder_operators(basis: SymmetricBasis) -> dict[str, sp.csr_matrix]:
    """Raising/lowering operators of the {S_x, Q_yz, Q_zz - Q_yy} SU(2) subspace.

    Built in the bosonic form 2*sqrt(2) a_0 (a_{+1}^dag + a_{-1}^dag), which
    raises the Q_zz - Q_yy eigenvalue by 4.  With the anticommutator quadrupole
    convention used here this equals 2 (S_x + i Q_yz); the overall scale is
    irrelevant downstream because ladder eigenstates are normalised after each
    application.
    """
    plus = prune(
        2.0 * SQRT2 * (transition(basis, +1, 0) + transition(basis, -1, 0))
    )
    return {"plus": plus, "minus": prune(plus.getH())}
