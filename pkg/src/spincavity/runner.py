"""Orchestration: build models from configs and execute runs.

This module is the CLI's engine room, kept separate so tests can drive runs
without a subprocess.  Mode selection for ``simulate``:

* trajectories enabled        -> MCWF ensemble (jackknifed xi2 errors),
* no jump operators (Gamma=0) -> deterministic pure-state evolution,
* otherwise                   -> exact master equation (the dense-dimension
                                 guard advises trajectories when too large).

Sweep points run in parallel only for deterministic (jump-free) points;
stochastic points run serially and parallelise over their trajectories
instead.  Aggregation is index-ordered either way, so results do not depend on
scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import observables as obs_mod
from . import qfunction as qfn_mod
from . import undepleted
from .config import QFunctionConfig, RunConfig
from .errors import ConfigError
from .evolution import (
    EnsembleResult,
    TrajectoryConfig,
    evolve_master,
    evolve_no_jump,
    evolve_trajectories,
)
from .hilbert import build_basis
from .models import JointBasis, LindbladModel, dispersive, full_dicke, spin_mixing
from .observables import (
    Moments,
    SpinNematicObservables,
    SqueezingRecord,
    ensemble_xi2_jackknife,
    squeezing_record,
)
from .params import (
    DispersiveParams,
    EffectiveDickeParams,
    dicke_params,
    dispersive_params,
    feasibility,
)


@dataclass(frozen=True)
class ResolvedTier:
    """Model-tier parameters after resolving the config's entry path."""

    kappa: float | None
    dicke: EffectiveDickeParams | None
    dispersive: DispersiveParams | None

    @property
    def lambda_scale(self) -> float:
        """|Lambda| used to convert between t and the dimensionless Lambda t."""
        if self.dispersive is None or self.dispersive.Lambda == 0.0:
            raise ConfigError("Lambda is zero; provide max_time instead of max_lambda_t")
        return abs(self.dispersive.Lambda)


def resolve_tier(cfg: RunConfig) -> ResolvedTier:
    if cfg.microscopic is not None:
        dicke = dicke_params(cfg.microscopic, large_detuning=cfg.large_detuning)
        disp = dispersive_params(dicke, cfg.microscopic.kappa)
        return ResolvedTier(kappa=cfg.microscopic.kappa, dicke=dicke, dispersive=disp)
    eff = cfg.effective
    if cfg.model == "spin_mixing":
        lam = eff["Lambda"]
        gamma = eff["Gamma"]
        ratio = gamma / abs(lam) if lam != 0.0 else math.inf
        disp = DispersiveParams(
            omega_0_prime=eff["omega0_prime"],
            Lambda=lam,
            Gamma=gamma,
            Gamma_over_Lambda=ratio,
        )
        return ResolvedTier(kappa=None, dicke=None, dispersive=disp)
    dicke = EffectiveDickeParams(
        omega=eff["omega"],
        omega_0=eff["omega0"],
        lambda_minus=eff["lambda_minus"],
        lambda_plus=eff["lambda_plus"],
        n_atoms=cfg.atoms,
    )
    disp = dispersive_params(dicke, eff["kappa"])
    return ResolvedTier(kappa=eff["kappa"], dicke=dicke, dispersive=disp)


@dataclass(frozen=True)
class BuiltModel:
    model: LindbladModel
    atom_basis: object
    joint: JointBasis | None
    observables: SpinNematicObservables
    psi0: np.ndarray
    tier: ResolvedTier


def build_model(cfg: RunConfig, n_atoms: int | None = None) -> BuiltModel:
    """Assemble the configured model tier at the given simulation atom number."""
    n = n_atoms if n_atoms is not None else cfg.atoms
    basis = build_basis(n)
    tier = resolve_tier(cfg)
    if cfg.model == "spin_mixing":
        model = spin_mixing(tier.dispersive, basis)
        return BuiltModel(
            model=model,
            atom_basis=basis,
            joint=None,
            observables=SpinNematicObservables(basis),
            psi0=basis.polar_state(),
            tier=tier,
        )
    if cfg.model == "dispersive":
        model = dispersive(tier.dicke, tier.kappa, basis)
        return BuiltModel(
            model=model,
            atom_basis=basis,
            joint=None,
            observables=SpinNematicObservables(basis),
            psi0=basis.polar_state(),
            tier=tier,
        )
    jb = JointBasis(basis, cfg.photon_cutoff)
    model = full_dicke(tier.dicke, tier.kappa, jb, cfg.include_residuals)
    return BuiltModel(
        model=model,
        atom_basis=basis,
        joint=jb,
        observables=SpinNematicObservables(basis, lift=jb.lift_atom),
        psi0=jb.with_vacuum(basis.polar_state()),
        tier=tier,
    )


def sample_times_for(cfg: RunConfig, tier: ResolvedTier) -> tuple[np.ndarray, float]:
    """(sample times in seconds, |Lambda| scale for the Lambda*t axis)."""
    if cfg.max_time is not None:
        lam = abs(tier.dispersive.Lambda) if tier.dispersive is not None else 0.0
        return np.linspace(0.0, cfg.max_time, cfg.samples), lam
    lam = tier.lambda_scale
    return np.linspace(0.0, cfg.max_lambda_t / lam, cfg.samples), lam


def model_summary(built: BuiltModel) -> dict:
    tier = built.tier
    out = {"tier": "resolved"}
    if tier.dicke is not None:
        out["omega"] = tier.dicke.omega
        out["omega_0"] = tier.dicke.omega_0
        out["lambda_minus"] = tier.dicke.lambda_minus
        out["lambda_plus"] = tier.dicke.lambda_plus
    if tier.dispersive is not None:
        out["Lambda"] = tier.dispersive.Lambda
        out["Gamma"] = tier.dispersive.Gamma
        out["Gamma_over_Lambda"] = tier.dispersive.Gamma_over_Lambda
        out["omega_0_prime"] = tier.dispersive.omega_0_prime
    if tier.kappa is not None:
        out["kappa"] = tier.kappa
    return out


@dataclass
class SimulateResult:
    mode: str
    sample_times: np.ndarray
    lambda_scale: float
    records: list[SqueezingRecord]
    moments: list[Moments]
    summary: dict
    ensemble: EnsembleResult | None = None
    states: np.ndarray | None = None


def run_simulate(cfg: RunConfig, built: BuiltModel | None = None) -> SimulateResult:
    built = built or build_model(cfg)
    times, lam = sample_times_for(cfg, built.tier)
    has_jumps = bool(built.model.jump_operators)

    if cfg.trajectories_enabled and has_jumps:
        return _simulate_trajectories(cfg, built, times, lam)
    if not has_jumps:
        return _simulate_pure(cfg, built, times, lam)
    return _simulate_master(cfg, built, times, lam)


def _records_from_moments(cfg, moments_list, times, lam, stderrs=None, jumps=None):
    records = []
    for k, m in enumerate(moments_list):
        records.append(
            squeezing_record(
                m,
                time=float(times[k]),
                lambda_scale=lam,
                grid_size=cfg.theta_grid,
                refine_tol_rad=cfg.theta_refine_tol_rad,
                xi2_stderr=None if stderrs is None else float(stderrs[k]),
                mean_jumps=None if jumps is None else float(jumps[k]),
            )
        )
    return records


def _simulate_pure(cfg, built, times, lam) -> SimulateResult:
    result = evolve_no_jump(
        built.model, built.psi0, times, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
    )
    moments = [built.observables.moments(state) for state in result.states]
    records = _records_from_moments(cfg, moments, times, lam)
    return SimulateResult(
        mode="pure",
        sample_times=times,
        lambda_scale=lam,
        records=records,
        moments=moments,
        summary=model_summary(built),
        states=result.states,
    )


def _simulate_master(cfg, built, times, lam) -> SimulateResult:
    rhos = evolve_master(
        built.model, built.psi0, times, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
    )
    moments = [built.observables.moments(rho) for rho in rhos]
    records = _records_from_moments(cfg, moments, times, lam)
    return SimulateResult(
        mode="master",
        sample_times=times,
        lambda_scale=lam,
        records=records,
        moments=moments,
        summary=model_summary(built),
    )


def _simulate_trajectories(cfg, built, times, lam) -> SimulateResult:
    tcfg = TrajectoryConfig(
        sample_times=times,
        n_traj=cfg.n_traj,
        seed=cfg.seed,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        jump_tol=cfg.jump_tol,
        workers=cfg.workers,
    )
    ops = None if built.model.sector is not None else built.observables.operators
    ensemble = evolve_trajectories(built.model, built.psi0, tcfg, observable_ops=ops)
    moments = []
    stderrs = []
    for k in range(times.size):
        moments.append(ensemble.moments_at(k))
        try:
            _, _, se = ensemble_xi2_jackknife(
                ensemble.means_at(k),
                grid_size=cfg.theta_grid,
                refine_tol_rad=cfg.theta_refine_tol_rad,
            )
        except obs_mod.SqueezingUndefined:
            se = math.nan
        stderrs.append(se)
    jumps = ensemble.mean_cumulative_jumps()
    records = _records_from_moments(cfg, moments, times, lam, stderrs, jumps)
    return SimulateResult(
        mode="trajectories",
        sample_times=times,
        lambda_scale=lam,
        records=records,
        moments=moments,
        summary=model_summary(built),
        ensemble=ensemble,
    )


# ---------------------------------------------------------------------------
# params command


def run_params(cfg: RunConfig) -> dict:
    """Parameter mapping report; requires the microscopic entry path."""
    if cfg.microscopic is None:
        raise ConfigError(
            "params needs parameters.microscopic (nothing to map from an "
            "effective-parameters-only config)"
        )
    dicke = dicke_params(cfg.microscopic, large_detuning=cfg.large_detuning)
    disp = dispersive_params(dicke, cfg.microscopic.kappa)
    feas = feasibility(cfg.microscopic, disp)
    return {
        "effective_dicke": {
            "omega": dicke.omega,
            "omega_0": dicke.omega_0,
            "lambda_minus": dicke.lambda_minus,
            "lambda_plus": dicke.lambda_plus,
            "omega_q": dicke.omega_q,
            "delta_q": dicke.delta_q,
            "xi_1": dicke.xi_1,
            "xi_2": dicke.xi_2,
            "h": dicke.h,
            "n_atoms": dicke.n_atoms,
        },
        "dispersive": {
            "omega_0_prime": disp.omega_0_prime,
            "Lambda": disp.Lambda,
            "Gamma": disp.Gamma,
            "Gamma_over_Lambda": disp.Gamma_over_Lambda,
        },
        "feasibility": {
            "cooperativity": feas.cooperativity,
            "gamma_sp_minus": feas.gamma_sp_minus,
            "gamma_sp_plus": feas.gamma_sp_plus,
            "gamma_sp_total": feas.gamma_sp_total,
            "gamma_sp_over_half_lambda": feas.gamma_sp_over_half_lambda,
            "gamma_over_lambda": feas.gamma_over_lambda,
            "large_detuning_ok": feas.large_detuning_ok,
            "dispersive_ok": feas.dispersive_ok,
        },
    }


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class AtomsSweepResult:
    atoms: list[int]
    peak_xi2: list[float]
    peak_lambda_t: list[float]
    peak_theta_deg: list[float]
    fit: obs_mod.PowerLawFit


def _atoms_sweep_point(args):
    cfg, n = args
    built = build_model(cfg, n_atoms=n)
    sim = run_simulate(cfg, built)
    defined = [r for r in sim.records if r.defined]
    best = min(defined, key=lambda r: r.xi2_min)
    return n, best.xi2_min, best.lambda_t, best.theta_opt_deg


def run_atoms_sweep(cfg: RunConfig) -> AtomsSweepResult:
    ns = [int(v) for v in cfg.sweep.values]
    points = [(replace(cfg, workers=1), n) for n in ns]
    deterministic = not cfg.trajectories_enabled
    if deterministic and cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_atoms_sweep_point, points))
    else:
        results = [_atoms_sweep_point((cfg, n)) for n in ns]
    atoms, peaks, peak_lt, peak_theta = map(list, zip(*results))
    fit = obs_mod.scaling_fit(list(zip(atoms, peaks)))
    return AtomsSweepResult(
        atoms=atoms,
        peak_xi2=peaks,
        peak_lambda_t=peak_lt,
        peak_theta_deg=peak_theta,
        fit=fit,
    )


@dataclass
class HeatmapResult:
    lambda_t: np.ndarray
    theta_deg: np.ndarray
    engine_xi2: np.ndarray | None   # (n_theta, n_t)
    oracle_xi2: np.ndarray          # (n_theta, n_t)
    gamma_over_lambda: float


def engine_xi2_grid(
    cfg: RunConfig, built: BuiltModel, theta_deg: np.ndarray
) -> tuple[np.ndarray, np.ndarray, SimulateResult]:
    """xi2(theta, t) from the engine's moments (ensemble or deterministic)."""
    sim = run_simulate(cfg, built)
    grid = np.empty((theta_deg.size, sim.sample_times.size))
    for k, m in enumerate(sim.moments):
        try:
            grid[:, k] = obs_mod.xi2_curve(m, theta_deg)
        except obs_mod.SqueezingUndefined:
            grid[:, k] = np.nan
    lambda_t = sim.lambda_scale * sim.sample_times
    return lambda_t, grid, sim


def run_theta_time_sweep(cfg: RunConfig) -> HeatmapResult:
    sweep = cfg.sweep
    theta = np.linspace(
        sweep.theta_min_deg, sweep.theta_max_deg, sweep.theta_points, endpoint=False
    )
    built = build_model(cfg)
    ratio = built.tier.dispersive.Gamma_over_Lambda
    engine_grid = None
    if sweep.engine:
        lambda_t, engine_grid, _ = engine_xi2_grid(cfg, built, theta)
    else:
        times, lam = sample_times_for(cfg, built.tier)
        lambda_t = lam * times
    sign = 1.0 if built.tier.dispersive.Lambda >= 0 else -1.0
    oracle = undepleted.xi2(
        sign, ratio, lambda_t[None, :], theta[:, None]
    )
    return HeatmapResult(
        lambda_t=lambda_t,
        theta_deg=theta,
        engine_xi2=engine_grid,
        oracle_xi2=np.asarray(oracle),
        gamma_over_lambda=ratio,
    )


def run_gamma_sweep(cfg: RunConfig) -> list[HeatmapResult]:
    """Oracle xi2(theta, t) panels at each damping ratio (dimensionless units)."""
    sweep = cfg.sweep
    theta = np.linspace(
        sweep.theta_min_deg, sweep.theta_max_deg, sweep.theta_points, endpoint=False
    )
    lambda_t = np.linspace(0.0, cfg.max_lambda_t or 5.0, cfg.samples)
    panels = []
    for ratio in sweep.values:
        oracle = undepleted.xi2(1.0, ratio, lambda_t[None, :], theta[:, None])
        panels.append(
            HeatmapResult(
                lambda_t=lambda_t,
                theta_deg=theta,
                engine_xi2=None,
                oracle_xi2=np.asarray(oracle),
                gamma_over_lambda=float(ratio),
            )
        )
    return panels


# ---------------------------------------------------------------------------
# Q-function snapshots


@dataclass
class QFunctionSnapshot:
    lambda_t: float
    grid: qfn_mod.SphereGrid
    principal_axis_deg: float
    moments: Moments


def run_qfunction(cfg: RunConfig) -> list[QFunctionSnapshot]:
    """Evolve and export Q-function grids at the configured snapshot times.

    Uses the null-measurement conditioned (no-jump) state, which coincides
    with Hamiltonian evolution when Gamma = 0.
    """
    if cfg.model == "full_dicke":
        raise ConfigError("qfunction snapshots need an atomic model tier")
    qcfg = cfg.qfunction if cfg.qfunction is not None else QFunctionConfig()
    built = build_model(cfg)
    lam = built.tier.lambda_scale
    snaps = sorted(qcfg.snapshot_lambda_t)
    times = np.asarray([lt / lam for lt in snaps])
    result = evolve_no_jump(
        built.model, built.psi0, times, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol
    )
    ladder = qfn_mod.build_ladder(built.atom_basis)
    out = []
    for k, lt in enumerate(snaps):
        state = result.states[k]
        grid = qfn_mod.qfunction(
            state, ladder, n_polar=qcfg.polar_points, n_azimuthal=qcfg.azimuthal_points
        )
        m = built.observables.moments(state)
        out.append(
            QFunctionSnapshot(
                lambda_t=float(lt),
                grid=grid,
                principal_axis_deg=obs_mod.principal_axis_angle(m),
                moments=m,
            )
        )
    return out
