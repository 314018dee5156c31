import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincavity import undepleted


def test_unity_at_time_zero_and_theta_zero():
    assert undepleted.xi2(1.0, 0.05, 0.0, 123.0) == pytest.approx(1.0, abs=1e-15)
    for t in (0.3, 1.7, 4.0):
        assert undepleted.xi2(1.0, 0.2, t, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_direct_substitution_value():
    # theta = 90 deg, Lambda t = 1, Gamma = 0: (2)^2 + 1 = 5
    assert undepleted.xi2(1.0, 0.0, 1.0, 90.0) == pytest.approx(5.0, abs=1e-12)


def test_closed_form_minimum_values():
    theta, best = undepleted.xi2_min(1.0, 0.0, 1.0)
    assert best == pytest.approx(3.0 - 2.0 * math.sqrt(2.0), abs=1e-14)
    assert 90.0 < theta < 180.0
    # heavy damping pushes the optimum back to the flat quadrature
    theta_damped, best_damped = undepleted.xi2_min(1.0, 500.0, 1.0)
    assert best_damped == pytest.approx(1.0, abs=1e-3)
    assert min(theta_damped, 180.0 - theta_damped) < 1.0


def test_minimum_matches_dense_grid():
    theta_grid = np.linspace(0.0, 180.0, 2_000_001, endpoint=False)
    for lam_t, ratio in ((2.0, 0.05), (0.7, 0.0), (3.5, 0.1)):
        _, best = undepleted.xi2_min(1.0, ratio, lam_t)
        grid_best = float(np.min(undepleted.xi2(1.0, ratio, lam_t, theta_grid)))
        assert abs(best - grid_best) < 1e-10


def test_optimal_angle_creeps_toward_180():
    angles = [undepleted.xi2_min(1.0, 0.0, t)[0] for t in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert all(a < b for a, b in zip(angles, angles[1:]))
    assert angles[-1] < 180.0


@given(
    st.floats(min_value=1.0, max_value=179.0),
    st.floats(min_value=0.05, max_value=5.0),
    st.floats(min_value=0.0, max_value=2.0),
    st.floats(min_value=0.01, max_value=1.0),
)
@settings(max_examples=60, deadline=None)
def test_damping_only_hurts(theta, lam_t, gamma_ratio, extra):
    base = undepleted.xi2(1.0, gamma_ratio, lam_t, theta)
    worse = undepleted.xi2(1.0, gamma_ratio + extra, lam_t, theta)
    assert worse >= base - 1e-12


def test_pair_mode_moments_at_time_zero():
    m = undepleted.pair_mode_moments(1.0, 0.3, 0.0)
    assert m.aa_dag == pytest.approx(1.0)
    assert m.bb_dag == pytest.approx(1.0)
    assert m.b_dag_b == pytest.approx(1.0)
    assert m.ab_dag == pytest.approx(1.0 + 0.0j)
    assert m.a_dag_b == pytest.approx(-1.0 + 0.0j)
    assert m.var_sx_over_n == pytest.approx(1.0)
    assert m.var_qyz_over_n == pytest.approx(1.0)


def test_conserved_quadrature_for_all_times():
    for t in (0.0, 0.5, 2.0, 7.0):
        m = undepleted.pair_mode_moments(1.0, 0.25, t)
        assert m.var_sx_over_n == pytest.approx(1.0, abs=1e-14)


@given(
    st.floats(min_value=0.0, max_value=5.0),
    st.floats(min_value=0.0, max_value=1.0),
)
@settings(max_examples=40, deadline=None)
def test_langevin_reconstruction_identity(t, gamma_ratio):
    theta = np.linspace(0.0, 180.0, 181)
    m = undepleted.pair_mode_moments(1.0, gamma_ratio, t)
    rebuilt = undepleted.xi2_from_pair_moments(m, theta)
    direct = undepleted.xi2(1.0, gamma_ratio, t, theta)
    assert np.max(np.abs(rebuilt - direct)) < 1e-12


def test_heatmap_grid_and_presets():
    assert undepleted.GAMMA_RATIO_PRESETS == (0.02, 0.05, 0.1)
    grid = undepleted.heatmap(0.05, lambda_t_max=4.0, n_t=41)
    assert grid.xi2.shape == (181, 41)
    assert np.allclose(grid.xi2[:, 0], 1.0, atol=1e-14)
    assert grid.xi2_db.shape == grid.xi2.shape
    theta_zero_row = grid.xi2[0]
    assert np.allclose(theta_zero_row, 1.0, atol=1e-12)
