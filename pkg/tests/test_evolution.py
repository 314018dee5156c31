import math

import numpy as np
import pytest
import scipy.sparse as sp

from spincavity import hilbert, models, observables
from spincavity.errors import CapacityError
from spincavity.evolution import (
    TrajectoryConfig,
    evolve_master,
    evolve_no_jump,
    evolve_trajectories,
    photon_cutoff_converged,
)
from spincavity.hilbert import build_basis
from spincavity.models import LindbladModel
from spincavity.params import EffectiveDickeParams

from conftest import maxabs, spin_mixing_model


def test_master_identity_dynamics():
    dim = 5
    model = LindbladModel(
        hamiltonian=sp.csr_matrix((dim, dim), dtype=complex), jump_operators=()
    )
    rho0 = np.diag(np.linspace(0.1, 0.3, dim)).astype(complex)
    rho0 /= np.trace(rho0)
    rhos = evolve_master(model, rho0, np.linspace(0.0, 5.0, 6))
    for rho in rhos:
        assert np.allclose(rho, rho0, atol=1e-10)


def test_master_single_atom_decay_matches_analytic():
    """N = 1 cascade: H is diagonal, so <n_+1>(t) = exp(-2 Gamma t) exactly."""
    gamma = 0.8
    model = spin_mixing_model(1, gamma_ratio=gamma, lam=1.0)
    basis = build_basis(1)
    rho0 = np.outer(basis.vector((0, 0, 1)), basis.vector((0, 0, 1)).conj())
    times = np.linspace(0.0, 3.0, 13)
    rhos = evolve_master(model, rho0, times)
    n_plus = hilbert.number_operator(basis, +1)
    series = [observables.expectation_density(n_plus, r) for r in rhos]
    expected = np.exp(-2.0 * gamma * times)
    assert np.allclose(series, expected, atol=1e-7)
    assert np.all(np.diff(series) < 0)


def test_master_preserves_trace_hermiticity_positivity():
    model = spin_mixing_model(6, 0.3)
    basis = build_basis(6)
    rhos = evolve_master(model, basis.polar_state(), np.linspace(0.0, 3.0, 7))
    for rho in rhos:
        assert abs(np.trace(rho).real - 1.0) < 1e-8
        assert np.abs(rho - rho.conj().T).max() < 1e-9
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() > -1e-8


def test_master_capacity_guard():
    model = spin_mixing_model(120, 0.05)
    basis = build_basis(120)
    with pytest.raises(CapacityError, match="trajectories"):
        evolve_master(model, basis.polar_state(), np.linspace(0.0, 1.0, 3))


def test_trajectories_closed_system_equals_schroedinger():
    model = spin_mixing_model(8, 0.0)
    basis = build_basis(8)
    times = np.linspace(0.0, 2.0, 9)
    cfg = TrajectoryConfig(sample_times=times, n_traj=1, seed=3)
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    assert all(jumps.size == 0 for jumps in ens.jump_times)

    nj = evolve_no_jump(model, basis.polar_state(), times)
    obs = observables.SpinNematicObservables(basis)
    for k in range(times.size):
        m = obs.moments(nj.states[k])
        assert ens.mean("n_plus")[k] == pytest.approx(m.n_plus, abs=1e-7)
        assert ens.mean("sx2")[k] == pytest.approx(m.sx2, abs=1e-6)
    assert np.allclose(nj.no_jump_prob, 1.0, atol=1e-9)


def test_no_jump_norm_decay_is_monotone_probability():
    model = spin_mixing_model(12, 0.2)
    basis = build_basis(12)
    times = np.linspace(0.0, 3.0, 16)
    result = evolve_no_jump(model, basis.polar_state(), times)
    assert result.no_jump_prob[0] == pytest.approx(1.0)
    assert np.all(np.diff(result.no_jump_prob) <= 1e-12)
    assert result.no_jump_prob[-1] < 1.0
    norms = np.linalg.norm(result.states, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-10


def test_energy_and_sz_conservation_closed_system():
    n = 10
    model = spin_mixing_model(n, 0.0)
    basis = build_basis(n)
    times = np.linspace(0.0, 5.0, 11)
    result = evolve_no_jump(model, basis.polar_state(), times)
    h = model.hamiltonian
    h_norm = maxabs(h)
    e0 = np.vdot(result.states[0], h @ result.states[0]).real
    sz = hilbert.spin_operators(basis)["Sz"]
    for state in result.states:
        energy = np.vdot(state, h @ state).real
        assert abs(energy - e0) < 1e-8 * h_norm * n
        assert abs(np.vdot(state, sz @ state).real) < 1e-8 * n


def test_mean_jump_count_matches_master_equation_rate():
    """Expected jump count is the time integral of <L^dag L> from the exact
    solution, with L = sqrt(Gamma/N) S_-."""
    n = 6
    model = spin_mixing_model(n, 0.5)
    basis = build_basis(n)
    times = np.linspace(0.0, 2.0, 41)
    rhos = evolve_master(model, basis.polar_state(), times)
    (op, rate), = model.jump_operators
    ldl = (op.getH() @ op).tocsr()
    flux = [rate * observables.expectation_density(ldl, r) for r in rhos]
    expected = float(np.trapezoid(flux, times))

    cfg = TrajectoryConfig(sample_times=times, n_traj=800, seed=99)
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    counts = np.array([j.size for j in ens.jump_times], dtype=float)
    observed = counts.mean()
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(observed - expected) < 3.0 * se


def test_me_mcwf_quick_consistency():
    n = 4
    model = spin_mixing_model(n, 0.4)
    basis = build_basis(n)
    times = np.linspace(0.0, 2.0, 5)
    rhos = evolve_master(model, basis.polar_state(), times)
    obs = observables.SpinNematicObservables(basis)
    cfg = TrajectoryConfig(sample_times=times, n_traj=400, seed=12)
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    for key in ("n_plus", "n_zero", "sz"):
        target = np.array(
            [observables.expectation_density(obs.operators[key], r) for r in rhos]
        )
        mean = ens.mean(key)
        se = ens.stderr(key)
        for k in range(1, times.size):
            assert abs(mean[k] - target[k]) <= 3.0 * max(se[k], 1e-12)


def test_trajectory_determinism_and_worker_independence():
    model = spin_mixing_model(6, 0.4)
    basis = build_basis(6)
    times = np.linspace(0.0, 1.5, 7)

    def run(workers):
        cfg = TrajectoryConfig(sample_times=times, n_traj=16, seed=42, workers=workers)
        return evolve_trajectories(model, basis.polar_state(), cfg)

    first = run(1)
    second = run(1)
    parallel = run(2)
    for key in first.per_traj_means:
        assert first.per_traj_means[key].tobytes() == second.per_traj_means[key].tobytes()
        assert first.per_traj_means[key].tobytes() == parallel.per_traj_means[key].tobytes()
    for a, b in zip(first.jump_times, parallel.jump_times):
        assert a.tobytes() == b.tobytes()


def test_sector_and_generic_engines_agree():
    model = spin_mixing_model(6, 0.5)
    basis = build_basis(6)
    obs = observables.SpinNematicObservables(basis)
    times = np.linspace(0.0, 2.5, 11)
    cfg = TrajectoryConfig(sample_times=times, n_traj=60, seed=5)
    fast = evolve_trajectories(model, basis.polar_state(), cfg)
    generic = evolve_trajectories(
        model, basis.polar_state(), cfg, observable_ops=obs.operators
    )
    for key in observables.STANDARD_MOMENT_KEYS:
        assert np.allclose(
            fast.per_traj_means[key], generic.per_traj_means[key], atol=5e-6
        ), key
    assert all(
        a.size == b.size for a, b in zip(fast.jump_times, generic.jump_times)
    )


def test_trajectories_require_observables_without_sector():
    basis = build_basis(2)
    jb = models.JointBasis(basis, 2)
    d = EffectiveDickeParams(omega=10.0, omega_0=0.0, lambda_minus=0.5,
                             lambda_plus=0.0, n_atoms=2)
    model = models.full_dicke(d, 0.2, jb)
    cfg = TrajectoryConfig(sample_times=np.array([0.0, 0.5]), n_traj=2, seed=1)
    with pytest.raises(ValueError, match="observable"):
        evolve_trajectories(model, jb.with_vacuum(basis.polar_state()), cfg)


def test_trajectory_config_validation():
    good = np.array([0.0, 1.0])
    with pytest.raises(ValueError):
        TrajectoryConfig(sample_times=np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        TrajectoryConfig(sample_times=good, n_traj=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(sample_times=good, seed=-1)
    with pytest.raises(ValueError):
        TrajectoryConfig(sample_times=good, workers=0)
    with pytest.raises(ValueError):
        TrajectoryConfig(sample_times=np.array([0.0, 1.0, 1.0]))


def test_unnormalised_initial_state_rejected():
    model = spin_mixing_model(4, 0.1)
    basis = build_basis(4)
    cfg = TrajectoryConfig(sample_times=np.array([0.0, 1.0]), n_traj=1, seed=0)
    with pytest.raises(ValueError, match="normalised"):
        evolve_trajectories(model, 2.0 * basis.polar_state(), cfg)
    with pytest.raises(ValueError, match="normalised"):
        evolve_no_jump(model, 2.0 * basis.polar_state(), np.array([0.0, 1.0]))


def test_photon_cutoff_convergence_check():
    basis = build_basis(3)
    d = EffectiveDickeParams(omega=10.0, omega_0=0.0, lambda_minus=1.0,
                             lambda_plus=0.0, n_atoms=3)
    ok, shift = photon_cutoff_converged(
        d, 0.5, basis, 5, np.linspace(0.0, 4.0, 9)
    )
    assert ok
    assert shift < 1e-6
