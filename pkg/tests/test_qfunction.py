import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincavity import hilbert
from spincavity.hilbert import build_basis
from spincavity.qfunction import (
    build_ladder,
    coherent_amplitudes,
    coherent_state,
    identity_weight,
    qfunction as q_on_grid,
)

from conftest import spin_mixing_model
from spincavity.evolution import evolve_no_jump


@pytest.fixture(scope="module")
def ladder8():
    return build_ladder(build_basis(8))


def test_ladder_starts_at_polar_state(ladder8):
    assert np.allclose(ladder8.kets[0], ladder8.basis.polar_state())


def test_ladder_states_are_spaced_eigenstates(ladder8):
    """Each |M> is an eigenstate of Q_zz - Q_yy with eigenvalue -2N + 4M."""
    basis = ladder8.basis
    n = basis.n_atoms
    op = hilbert.quadrupole_operators(basis)["Qzz_minus_Qyy"]
    for m in range(n + 1):
        ket = ladder8.kets[m]
        out = op @ ket
        eig = -2.0 * n + 4.0 * m
        assert np.linalg.norm(out - eig * ket) < 1e-10, m


def test_ladder_orthonormality(ladder8):
    gram = ladder8.kets.conj() @ ladder8.kets.T
    n = ladder8.n_atoms
    assert np.abs(gram - np.eye(n + 1)).max() < 1e-10


def test_coherent_state_at_origin_is_ground(ladder8):
    state = coherent_state(ladder8, 0.0, 0.0)
    assert np.allclose(state, ladder8.kets[0])


@given(
    st.floats(min_value=0.0, max_value=math.pi),
    st.floats(min_value=0.0, max_value=2.0 * math.pi),
)
@settings(max_examples=30, deadline=None)
def test_coherent_state_normalised(theta_s, phi):
    amps = coherent_amplitudes(24, theta_s, phi)
    assert abs(np.linalg.norm(amps) - 1.0) < 1e-10


def test_coherent_overlap_with_ground(ladder8):
    """|<eta|0>|^2 = cos^(2N)(theta/2), the binomial-sum identity."""
    n = ladder8.n_atoms
    for theta_s in (0.3, 1.0, 2.2):
        state = coherent_state(ladder8, theta_s, 0.9)
        overlap = abs(np.vdot(state, ladder8.kets[0])) ** 2
        assert overlap == pytest.approx(math.cos(theta_s / 2.0) ** (2 * n), abs=1e-10)


def test_pole_state_handling(ladder8):
    state = coherent_state(ladder8, math.pi, 0.0)
    assert abs(abs(np.vdot(state, ladder8.kets[-1])) - 1.0) < 1e-12


def test_qfunction_of_ground_state(ladder8):
    grid = q_on_grid(ladder8.kets[0], ladder8, n_polar=41, n_azimuthal=32)
    assert grid.values.shape == (41, 32)
    assert grid.values[0] == pytest.approx(1.0, abs=1e-12)  # south pole
    assert grid.values.min() >= 0.0
    assert grid.values.max() <= 1.0 + 1e-12
    assert grid.projected_weight == pytest.approx(1.0, abs=1e-12)


def test_qfunction_of_top_ladder_state_vanishes_at_pole(ladder8):
    top = ladder8.kets[-1]
    grid = q_on_grid(top, ladder8, n_polar=21, n_azimuthal=16)
    assert grid.values[0] == pytest.approx(0.0, abs=1e-20)


def test_density_matrix_path_matches_pure_path(ladder8):
    state = coherent_state(ladder8, 1.2, 0.4)
    rho = np.outer(state, state.conj())
    grid_psi = q_on_grid(state, ladder8, n_polar=15, n_azimuthal=12)
    grid_rho = q_on_grid(rho, ladder8, n_polar=15, n_azimuthal=12)
    assert np.allclose(grid_psi.values, grid_rho.values, atol=1e-12)
    assert grid_rho.projected_weight == pytest.approx(1.0, abs=1e-10)


def test_identity_resolution_on_ladder_subspace(ladder8):
    rng = np.random.default_rng(4)
    amps = rng.normal(size=9) + 1j * rng.normal(size=9)
    amps /= np.linalg.norm(amps)
    state = amps @ ladder8.kets
    assert identity_weight(state, ladder8) == pytest.approx(1.0, abs=1e-6)


def test_identity_weight_counts_projection_only(ladder8):
    basis = ladder8.basis
    rng = np.random.default_rng(11)
    raw = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    raw /= np.linalg.norm(raw)
    weight_in = np.sum(np.abs(ladder8.overlaps(raw)) ** 2)
    estimate = identity_weight(raw, ladder8)
    assert estimate == pytest.approx(weight_in, abs=1e-6)
    assert estimate < 1.0


def test_azimuthal_covariance(ladder8):
    """exp(-i chi (Qzz - Qyy)/4) rotates the Q pattern azimuthally by chi."""
    basis = ladder8.basis
    n_azim = 36
    chi = 2.0 * math.pi / n_azim * 5  # five grid columns
    state = coherent_state(ladder8, 1.0, 0.0)
    op = hilbert.quadrupole_operators(basis)["Qzz_minus_Qyy"]
    eigvals = -2.0 * basis.n_atoms + 4.0 * np.arange(basis.n_atoms + 1)
    overlaps = ladder8.overlaps(state)
    rotated = (np.exp(-1j * chi * eigvals / 4.0) * overlaps) @ ladder8.kets
    base = q_on_grid(state, ladder8, n_polar=21, n_azimuthal=n_azim)
    turned = q_on_grid(rotated, ladder8, n_polar=21, n_azimuthal=n_azim)
    for shift in (+5, -5):
        if np.allclose(turned.values, np.roll(base.values, shift, axis=1), atol=1e-9):
            break
    else:
        raise AssertionError("rotated Q-function is not an azimuthal shift")


def test_evolved_state_stays_mostly_on_ladder():
    n = 20
    basis = build_basis(n)
    ladder = build_ladder(basis)
    model = spin_mixing_model(n, 0.0)
    state = evolve_no_jump(model, basis.polar_state(), np.array([0.0, 1.5])).states[1]
    grid = q_on_grid(state, ladder, n_polar=31, n_azimuthal=24)
    assert 0.0 < grid.projected_weight <= 1.0 + 1e-12
    assert identity_weight(state, ladder) == pytest.approx(
        grid.projected_weight, abs=1e-6
    )


def test_grid_row_iteration_count(ladder8):
    grid = q_on_grid(ladder8.kets[0], ladder8, n_polar=7, n_azimuthal=5)
    rows = list(grid.rows())
    assert len(rows) == 7 * 5
