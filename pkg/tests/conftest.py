import numpy as np
import pytest
import scipy.sparse as sp

from spincavity import hilbert, models, observables
from spincavity.evolution import TrajectoryConfig, evolve_no_jump, evolve_trajectories
from spincavity.params import DispersiveParams

ACCEPTANCE_SEED = 20240501


def maxabs(mat) -> float:
    mat = sp.csr_matrix(mat)
    return float(np.abs(mat.data).max()) if mat.nnz else 0.0


def spin_mixing_model(n_atoms, gamma_ratio, lam=1.0, omega0_prime=0.0):
    params = DispersiveParams(
        omega_0_prime=omega0_prime,
        Lambda=lam,
        Gamma=gamma_ratio * abs(lam),
        Gamma_over_Lambda=gamma_ratio,
    )
    return models.spin_mixing(params, hilbert.build_basis(n_atoms))


@pytest.fixture(scope="session")
def basis6():
    return hilbert.build_basis(6)


@pytest.fixture(scope="session")
def basis120():
    return hilbert.build_basis(120)


@pytest.fixture(scope="session")
def obs120(basis120):
    return observables.SpinNematicObservables(basis120)


@pytest.fixture(scope="session")
def acceptance_times():
    """Lambda t in [0, 3] at spacing 0.05 (Lambda = 1 units)."""
    return np.linspace(0.0, 3.0, 61)


@pytest.fixture(scope="session")
def gamma0_curve_n120(basis120, obs120, acceptance_times):
    """Closed-system N = 120 squeezing curve: (times, xi2_min(t), theta_opt(t), moments)."""
    model = spin_mixing_model(120, 0.0)
    result = evolve_no_jump(model, basis120.polar_state(), acceptance_times)
    moments = [obs120.moments(state) for state in result.states]
    theta = np.empty(acceptance_times.size)
    xi2 = np.empty(acceptance_times.size)
    for k, m in enumerate(moments):
        theta[k], xi2[k] = observables.optimize_theta(m)
    return acceptance_times, xi2, theta, moments


@pytest.fixture(scope="session")
def damped_ensemble_n120(basis120, acceptance_times):
    """1000-trajectory MCWF ensemble at N = 120, Gamma = 0.05 Lambda, fixed seed."""
    model = spin_mixing_model(120, 0.05)
    cfg = TrajectoryConfig(
        sample_times=acceptance_times, n_traj=1000, seed=ACCEPTANCE_SEED, workers=1
    )
    return evolve_trajectories(model, basis120.polar_state(), cfg)


@pytest.fixture(scope="session")
def nojump_curve_n120(basis120, obs120, acceptance_times):
    """Null-measurement conditioned N = 120 curve at Gamma = 0.05 Lambda."""
    model = spin_mixing_model(120, 0.05)
    result = evolve_no_jump(model, basis120.polar_state(), acceptance_times)
    xi2 = np.empty(acceptance_times.size)
    for k, state in enumerate(result.states):
        _, xi2[k] = observables.optimize_theta(obs120.moments(state))
    return acceptance_times, xi2, result
