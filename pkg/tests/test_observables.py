import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincavity import observables, undepleted
from spincavity.hilbert import build_basis
from spincavity.observables import (
    Moments,
    SpinNematicObservables,
    SqueezingUndefined,
    ensemble_xi2_jackknife,
    optimize_theta,
    principal_axis_angle,
    principal_theta,
    scaling_fit,
    squeezing_record,
    to_db,
    xi2,
    xi2_curve,
)

from conftest import spin_mixing_model
from spincavity.evolution import TrajectoryConfig, evolve_no_jump, evolve_trajectories


def test_polar_state_moments():
    n = 9
    basis = build_basis(n)
    obs = SpinNematicObservables(basis)
    m = obs.moments(basis.polar_state())
    assert m.qzz_minus_qyy == pytest.approx(-2.0 * n, abs=1e-12)
    assert (m.n_minus, m.n_zero, m.n_plus) == pytest.approx((0.0, n, 0.0), abs=1e-12)
    assert m.var_sx == pytest.approx(n, abs=1e-10)
    assert m.var_qyz == pytest.approx(n, abs=1e-10)
    assert m.cov_sx_qyz == pytest.approx(0.0, abs=1e-10)


def test_stretched_state_moments():
    n = 7
    basis = build_basis(n)
    obs = SpinNematicObservables(basis)
    m = obs.moments(basis.vector((n, 0, 0)))
    assert m.sz == pytest.approx(-n, abs=1e-12)


def test_xi2_unity_at_polar_state_any_angle():
    basis = build_basis(8)
    m = SpinNematicObservables(basis).moments(basis.polar_state())
    for theta in (0.0, 17.5, 90.0, 169.0):
        assert xi2(m, theta) == pytest.approx(1.0, abs=1e-12)
    theta_opt, best = optimize_theta(m)
    assert best == pytest.approx(1.0, abs=1e-9)
    assert theta_opt == pytest.approx(0.0, abs=1e-9)  # flat curve, smallest angle


def test_xi2_theta_zero_reduction():
    basis = build_basis(6)
    obs = SpinNematicObservables(basis)
    model = spin_mixing_model(6, 0.0)
    state = evolve_no_jump(model, basis.polar_state(), np.array([0.0, 0.8])).states[1]
    m = obs.moments(state)
    assert xi2(m, 0.0) == pytest.approx(
        2.0 * m.var_sx / abs(m.qzz_minus_qyy), rel=1e-12
    )


def _random_moments(rng) -> Moments:
    """Random positive-definite covariance data shaped like a real moment set."""
    a = rng.uniform(0.5, 4.0)
    b = rng.uniform(0.5, 4.0)
    c = rng.uniform(-1.0, 1.0) * math.sqrt(a * b) * 0.9
    mean_sx = rng.uniform(-0.5, 0.5)
    mean_qyz = rng.uniform(-0.5, 0.5)
    return Moments(
        n_minus=1.0,
        n_zero=8.0,
        n_plus=1.0,
        sx=mean_sx,
        sy=0.0,
        sz=0.0,
        qyz=mean_qyz,
        qxz=0.0,
        qzz_minus_qyy=-16.0,
        sx2=a + mean_sx**2,
        qyz2=b + mean_qyz**2,
        sxqyz_sym=c + mean_sx * mean_qyz,
    )


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=40, deadline=None)
def test_xi2_period_and_grid_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    m = _random_moments(rng)
    thetas = rng.uniform(0.0, 180.0, size=8)
    assert np.allclose(xi2_curve(m, thetas), xi2_curve(m, thetas + 180.0), atol=1e-12)
    theta_g, val_g = optimize_theta(m)
    theta_c, val_c = principal_theta(m)
    assert val_g == pytest.approx(val_c, rel=1e-9, abs=1e-12)
    delta = abs(theta_g - theta_c) % 180.0
    assert min(delta, 180.0 - delta) < math.degrees(1e-6)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_minimum_dominates_cardinal_samples_and_antisqueezing(seed):
    rng = np.random.default_rng(seed)
    m = _random_moments(rng)
    _, best = optimize_theta(m)
    assert best <= xi2(m, 0.0) + 1e-12
    assert best <= xi2(m, 90.0) + 1e-12
    theta_min, _ = principal_theta(m)
    curve = xi2_curve(m, np.linspace(0.0, 180.0, 3600, endpoint=False))
    theta_max = np.linspace(0.0, 180.0, 3600, endpoint=False)[int(curve.argmax())]
    delta = abs((theta_max - theta_min) % 180.0 - 90.0)
    assert min(delta, abs(delta - 180.0)) < 0.2  # grid resolution


def test_undepleted_surrogate_minimum():
    """Moments shaped like the large-N limit reproduce the closed-form
    minimum 3 - 2 sqrt(2) at Lambda t = 1."""
    n = 1000.0
    lt = 1.0
    m = Moments(
        n_minus=0.0, n_zero=n, n_plus=0.0,
        sx=0.0, sy=0.0, sz=0.0, qyz=0.0, qxz=0.0,
        qzz_minus_qyy=-2.0 * n,
        sx2=n,
        qyz2=n * (1.0 + 4.0 * lt * lt),
        sxqyz_sym=2.0 * lt * n,
    )
    theta, best = optimize_theta(m)
    assert best == pytest.approx(3.0 - 2.0 * math.sqrt(2.0), abs=1e-9)
    assert to_db(best) == pytest.approx(-7.66, abs=0.01)
    ref_theta, ref_val = undepleted.xi2_min(1.0, 0.0, lt)
    assert best == pytest.approx(ref_val, abs=1e-12)
    assert theta == pytest.approx(ref_theta, abs=1e-5)


def test_denominator_guard_flags_record():
    m = Moments(
        n_minus=4.0, n_zero=2.0, n_plus=4.0,
        sx=0.0, sy=0.0, sz=0.0, qyz=0.0, qxz=0.0,
        qzz_minus_qyy=1e-9,
        sx2=1.0, qyz2=1.0, sxqyz_sym=0.0,
    )
    with pytest.raises(SqueezingUndefined):
        xi2(m, 10.0)
    record = squeezing_record(m, time=1.0, lambda_scale=1.0)
    assert not record.defined
    assert math.isnan(record.xi2_min)


def test_population_sum_is_conserved_in_ensembles():
    model = spin_mixing_model(6, 0.4)
    basis = build_basis(6)
    cfg = TrajectoryConfig(sample_times=np.linspace(0.0, 2.0, 5), n_traj=50, seed=8)
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    total = ens.mean("n_minus") + ens.mean("n_zero") + ens.mean("n_plus")
    assert np.allclose(total, 6.0, atol=1e-8)


def test_pair_populations_equal_without_damping():
    """Pairs are created symmetrically: n_+1 = n_-1 exactly when Gamma = 0."""
    basis = build_basis(10)
    obs = SpinNematicObservables(basis)
    model = spin_mixing_model(10, 0.0)
    nj = evolve_no_jump(model, basis.polar_state(), np.linspace(0.0, 3.0, 7))
    for state in nj.states:
        m = obs.moments(state)
        assert m.n_plus == pytest.approx(m.n_minus, abs=1e-8)


def test_first_moments_vanish_by_symmetry_without_damping():
    """From the polar state the closed dynamics keeps <S_x> = <Q_yz> = 0, so
    xi2 reduces to the pure variance form."""
    n = 12
    basis = build_basis(n)
    obs = SpinNematicObservables(basis)
    nj = evolve_no_jump(
        spin_mixing_model(n, 0.0), basis.polar_state(), np.linspace(0.0, 4.0, 9)
    )
    for state in nj.states:
        m = obs.moments(state)
        assert abs(m.sx) < 1e-8 * n
        assert abs(m.qyz) < 1e-8 * n
        assert xi2(m, 40.0) == pytest.approx(
            2.0
            * (
                math.cos(math.radians(40.0)) ** 2 * m.sx2
                + math.sin(math.radians(40.0)) ** 2 * m.qyz2
                + 2.0
                * math.sin(math.radians(40.0))
                * math.cos(math.radians(40.0))
                * m.sxqyz_sym
            )
            / abs(m.qzz_minus_qyy),
            rel=1e-9,
        )


def test_per_trajectory_xi2_for_post_selection():
    model = spin_mixing_model(8, 0.4)
    basis = build_basis(8)
    times = np.linspace(0.0, 2.0, 5)
    cfg = TrajectoryConfig(sample_times=times, n_traj=120, seed=21)
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    k = times.size - 1
    values, thetas = observables.per_trajectory_xi2(ens.means_at(k))
    assert values.shape == (cfg.n_traj,)
    assert np.all(values > 0.0)
    assert np.all((0.0 <= thetas) & (thetas < 180.0))
    # fixed-angle variant upper-bounds the per-trajectory optimum
    fixed, _ = observables.per_trajectory_xi2(ens.means_at(k), theta_deg=170.0)
    assert np.all(values <= fixed + 1e-12)
    # post-selection: trajectories with no jumps by t are squeezed at least as
    # deeply on average as the jump-affected ones
    jumped = np.array([j.size > 0 for j in ens.jump_times])
    if jumped.any() and (~jumped).any():
        assert values[~jumped].mean() < values[jumped].mean()


def test_jackknife_matches_naive_error_for_linear_statistic():
    rng = np.random.default_rng(0)
    n = 400
    fake = {key: rng.normal(size=n) for key in observables.STANDARD_MOMENT_KEYS}
    fake["qzz_minus_qyy"] = np.full(n, -12.0) + rng.normal(scale=0.01, size=n)
    fake["sx"] = np.zeros(n)
    fake["qyz"] = np.zeros(n)
    fake["sxqyz_sym"] = np.zeros(n)
    fake["sx2"] = 6.0 + rng.normal(scale=0.3, size=n)
    fake["qyz2"] = 6.0 + rng.normal(scale=0.3, size=n)
    value, theta, se = ensemble_xi2_jackknife(fake, theta_deg=0.0)
    # xi2(0) = 2 <sx2> / |<qzz>|: nearly linear, jackknife ~ naive propagation
    naive = 2.0 * fake["sx2"].std(ddof=1) / math.sqrt(n) / 12.0
    assert se == pytest.approx(naive, rel=0.15)
    assert theta == 0.0
    assert value == pytest.approx(2.0 * fake["sx2"].mean() / np.abs(np.mean(fake["qzz_minus_qyy"])), rel=1e-6)


def test_second_subspace_is_symmetric_twin():
    """From the polar state both SU(2) subspaces carry identical fluctuations."""
    basis = build_basis(10)
    obs = SpinNematicObservables(basis)
    twin = obs.second_subspace()
    model = spin_mixing_model(10, 0.0)
    state = evolve_no_jump(model, basis.polar_state(), np.array([0.0, 1.2])).states[1]
    first = obs.moments(state)
    second = twin.moments(state)
    _, val1 = optimize_theta(first)
    _, val2 = optimize_theta(second)
    assert val1 == pytest.approx(val2, rel=1e-9)


def test_scaling_fit_exact_power_law():
    ns = [30, 60, 120, 240, 480]
    points = [(n, 3.2 * n ** (-2.0 / 3.0)) for n in ns]
    fit = scaling_fit(points)
    assert fit.exponent == pytest.approx(-2.0 / 3.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_scaling_fit_constant_data():
    fit = scaling_fit([(10, 2.0), (20, 2.0), (40, 2.0), (80, 2.0)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)


def test_scaling_fit_needs_four_points():
    with pytest.raises(ValueError):
        scaling_fit([(10, 1.0), (20, 0.8), (40, 0.6)])


def test_principal_axis_angle_perpendicular_to_minimum():
    rng = np.random.default_rng(7)
    m = _random_moments(rng)
    theta_min, _ = principal_theta(m)
    axis = principal_axis_angle(m)
    assert axis == pytest.approx((theta_min + 90.0) % 180.0, abs=1e-9)
