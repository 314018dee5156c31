"""Built-in desk-scale validation suite (the ``validate`` CLI subcommand).

Each check is a scaled-down version of one acceptance criterion, sized to run
in seconds.  All randomness is seeded, so outcomes are deterministic.  The
``dissipator_scale`` hook multiplies the trajectory engine's jump rates and
exists for fault injection: a perturbed factor must make the ME-vs-MCWF
consistency check fail, which guards the dissipator convention against silent
factor-of-2 drift.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import hilbert, observables, qfunction, undepleted
from .evolution import TrajectoryConfig, evolve_master, evolve_no_jump, evolve_trajectories
from .models import LindbladModel, spin_mixing
from .params import (
    DispersiveParams,
    MicroscopicParams,
    dicke_params,
    dispersive_params,
    feasibility,
)

VALIDATE_SEED = 20200513


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _fail(cond: bool, message: str, failures: list):
    if not cond:
        failures.append(message)


def check_operator_algebra() -> tuple[bool, str]:
    failures: list[str] = []
    basis = hilbert.build_basis(6)
    spin = hilbert.spin_operators(basis)
    quad = hilbert.quadrupole_operators(basis)
    ladder = hilbert.ladder_operators(basis)

    def comm(a, b):
        return a @ b - b @ a

    def maxabs(mat):
        mat = sp.csr_matrix(mat)
        return float(np.abs(mat.data).max()) if mat.nnz else 0.0

    _fail(maxabs(comm(spin["Sx"], spin["Sy"]) - 1j * spin["Sz"]) < 1e-12,
          "[Sx, Sy] != i Sz", failures)
    _fail(maxabs(comm(spin["Sz"], spin["Sp"]) - spin["Sp"]) < 1e-12,
          "[Sz, S+] != S+", failures)
    s_sq = spin["Sx"] @ spin["Sx"] + spin["Sy"] @ spin["Sy"] + spin["Sz"] @ spin["Sz"]
    _fail(maxabs(comm(s_sq, spin["Sz"])) < 1e-12, "S^2 does not commute with Sz", failures)
    for name in ("Sx", "Sy", "Sz"):
        _fail(hilbert.hermiticity_defect(spin[name]) < 1e-12, f"{name} not hermitian", failures)
    for name, op in quad.items():
        _fail(hilbert.hermiticity_defect(op) < 1e-12, f"{name} not hermitian", failures)
    _fail(
        maxabs(comm(spin["Sx"], quad["Qyz"]) - 1j * quad["Qzz_minus_Qyy"]) < 1e-12,
        "[Sx, Qyz] != i (Qzz - Qyy)", failures,
    )
    _fail(
        maxabs(ladder["plus"] - 2.0 * (spin["Sx"] + 1j * quad["Qyz"])) < 1e-12,
        "ladder operator does not match 2 (Sx + i Qyz)", failures,
    )
    polar = basis.polar_state()
    val = np.vdot(polar, quad["Qzz_minus_Qyy"] @ polar).real
    _fail(abs(val + 2 * basis.n_atoms) < 1e-12, "<Qzz - Qyy> at polar state != -2N", failures)
    return not failures, "; ".join(failures) or "su(2) algebra, hermiticity, ladder identity"


def lab_point_microscopic() -> MicroscopicParams:
    """Feasible laboratory set: {g, kappa, gamma}/2pi = {10, 0.2, 6} MHz,
    N = 1e4, with Delta and the drive chosen so lambda/2pi = 200 kHz and
    omega/2pi = 4 MHz."""
    two_pi = 2 * math.pi
    nu_g, nu_delta, n_atoms = 10.0e6, 2.0e9, 10_000
    nu_rabi = 12.0 * nu_delta * 0.2e6 / (math.sqrt(n_atoms) * nu_g)
    nu_cavity = 4.0e6 - n_atoms * nu_g**2 / (3.0 * nu_delta)
    return MicroscopicParams(
        g=two_pi * nu_g, kappa=two_pi * 0.2e6, gamma=two_pi * 6.0e6,
        Delta=two_pi * nu_delta, zeta=0.0,
        Omega_plus=0.0, Omega_minus=two_pi * nu_rabi,
        omega_c=two_pi * nu_cavity, omega_plus=0.0, omega_minus=0.0,
        omega_z=0.0, n_atoms=n_atoms,
    )


def check_parameter_mapping() -> tuple[bool, str]:
    failures: list[str] = []
    two_pi = 2 * math.pi
    micro = lab_point_microscopic()
    dicke = dicke_params(micro)
    disp = dispersive_params(dicke, micro.kappa)
    feas = feasibility(micro, disp)
    _fail(abs(abs(dicke.lambda_minus) / two_pi - 0.2e6) < 2e3, "lambda mapping off", failures)
    _fail(abs(dicke.omega / two_pi - 4.0e6) < 4.0e4, "omega mapping off", failures)
    _fail(abs(abs(disp.Lambda) / two_pi - 1.0e4) < 1.0e2, "Lambda mapping off", failures)
    _fail(abs(disp.Gamma_over_Lambda - 0.05) < 1e-6, "Gamma/Lambda off", failures)
    _fail(abs(feas.cooperativity - 2.0 * 10.0**2 / (0.2 * 6.0)) < 0.1, "cooperativity off", failures)
    _fail(abs(feas.gamma_sp_over_half_lambda - 6e-4) < 1e-4, "spontaneous-emission ratio off", failures)
    return not failures, "; ".join(failures) or "feasible lab-point mapping reproduced"


def check_oracle_consistency() -> tuple[bool, str]:
    failures: list[str] = []
    theta = np.linspace(0.0, 180.0, 100_000, endpoint=False)
    for lt, ratio in ((0.5, 0.0), (1.0, 0.0), (2.0, 0.05), (3.0, 0.1)):
        th_opt, val = undepleted.xi2_min(1.0, ratio, lt)
        grid_val = float(np.min(undepleted.xi2(1.0, ratio, lt, theta)))
        _fail(abs(val - grid_val) < 1e-8, f"closed-form min != grid min at {lt}", failures)
    _fail(abs(undepleted.xi2(1.0, 0.05, 0.0, 37.0) - 1.0) < 1e-12, "xi2(t=0) != 1", failures)
    _fail(abs(undepleted.xi2(1.0, 0.05, 2.7, 0.0) - 1.0) < 1e-12, "xi2(theta=0) != 1", failures)
    _, val = undepleted.xi2_min(1.0, 0.0, 1.0)
    _fail(abs(val - (3.0 - 2.0 * math.sqrt(2.0))) < 1e-12, "xi2 at Lambda t = 1 wrong", failures)
    m = undepleted.pair_mode_moments(1.0, 0.07, 1.3)
    rebuilt = undepleted.xi2_from_pair_moments(m, theta)
    direct = undepleted.xi2(1.0, 0.07, 1.3, theta)
    _fail(float(np.max(np.abs(rebuilt - direct))) < 1e-12, "Langevin reconstruction off", failures)
    return not failures, "; ".join(failures) or "closed form, grid, and Langevin chain agree"


def _spin_mixing_model(n_atoms: int, gamma_ratio: float) -> LindbladModel:
    params = DispersiveParams(
        omega_0_prime=0.0, Lambda=1.0, Gamma=gamma_ratio, Gamma_over_Lambda=gamma_ratio
    )
    return spin_mixing(params, hilbert.build_basis(n_atoms))


def check_squeezing_dynamics() -> tuple[bool, str]:
    failures: list[str] = []
    n = 40
    model = _spin_mixing_model(n, 0.0)
    basis = model.sector.basis
    times = np.linspace(0.0, 4.0, 41)
    result = evolve_no_jump(model, basis.polar_state(), times)
    obs = observables.SpinNematicObservables(basis)
    curves = [observables.squeezing_record(obs.moments(s), t, 1.0)
              for s, t in zip(result.states, times)]
    _fail(abs(curves[0].xi2_min - 1.0) < 1e-9, "xi2(0) != 1", failures)
    best = min(curves, key=lambda r: r.xi2_min)
    _fail(1.0 <= best.lambda_t <= 3.0, f"squeezing minimum at {best.lambda_t}", failures)
    _fail(90.0 < best.theta_opt_deg < 180.0, f"optimal angle {best.theta_opt_deg}", failures)
    later = [r for r in curves if r.lambda_t > best.lambda_t + 0.5]
    _fail(all(r.xi2_min > best.xi2_min for r in later), "no turnaround after minimum", failures)
    _fail(later[-1].n_plus > best.n_plus, "pair population does not keep growing", failures)
    return not failures, "; ".join(failures) or f"min xi2 = {best.xi2_min:.3f} at Lambda t = {best.lambda_t:.2f}"


def check_me_vs_trajectories(dissipator_scale: float = 1.0, workers: int = 1) -> tuple[bool, str]:
    failures: list[str] = []
    n = 6
    model = _spin_mixing_model(n, 0.5)
    basis = model.sector.basis
    times = np.linspace(0.0, 3.0, 16)
    obs = observables.SpinNematicObservables(basis)

    rhos = evolve_master(model, basis.polar_state(), times)
    me_moments = [obs.moments(r) for r in rhos]

    traj_model = model
    if dissipator_scale != 1.0:
        traj_model = LindbladModel(
            hamiltonian=model.hamiltonian,
            jump_operators=tuple(
                (op, rate * dissipator_scale) for op, rate in model.jump_operators
            ),
            sector=model.sector,
        )
    cfg = TrajectoryConfig(
        sample_times=times, n_traj=600, seed=VALIDATE_SEED, workers=workers
    )
    ens = evolve_trajectories(traj_model, basis.polar_state(), cfg)

    for k in (5, 10, 15):
        for key, target in (
            ("n_plus", me_moments[k].n_plus),
            ("sz", me_moments[k].sz),
        ):
            mean = float(ens.mean(key)[k])
            se = float(ens.stderr(key)[k])
            _fail(
                abs(mean - target) <= 3.0 * se,
                f"{key} at index {k}: {mean:.4f} vs ME {target:.4f} (3 SE = {3 * se:.4f})",
                failures,
            )
    # jump-rate bookkeeping: mean jump count vs integral of <L^dag L> from the ME
    expected = _expected_jumps(model, rhos, times)
    observed = float(ens.mean_cumulative_jumps()[-1])
    se_jumps = float(np.std([len(j) for j in ens.jump_times], ddof=1) / math.sqrt(cfg.n_traj))
    _fail(
        abs(observed - expected) <= 3.0 * se_jumps,
        f"jump count {observed:.3f} vs ME integral {expected:.3f} (3 SE = {3 * se_jumps:.3f})",
        failures,
    )
    return not failures, "; ".join(failures) or (
        f"populations, Sz and jump counts match ME within 3 SE ({cfg.n_traj} trajectories)"
    )


def _expected_jumps(model: LindbladModel, rhos, times) -> float:
    total = 0.0
    for op, rate in model.jump_operators:
        ldl = (op.getH() @ op).tocsr()
        series = [rate * observables.expectation_density(ldl, r) for r in rhos]
        total += float(np.trapezoid(series, times))
    return total


def check_no_jump_ordering() -> tuple[bool, str]:
    n = 40
    times = np.linspace(0.0, 3.0, 31)
    obs = observables.SpinNematicObservables(hilbert.build_basis(n))

    def peak(gamma_ratio):
        model = _spin_mixing_model(n, gamma_ratio)
        res = evolve_no_jump(model, model.sector.basis.polar_state(), times)
        values = []
        for state in res.states:
            _, val = observables.optimize_theta(obs.moments(state))
            values.append(val)
        return min(values)

    closed = peak(0.0)
    conditioned = peak(0.05)
    ok = conditioned <= closed + 1e-12
    return ok, (
        f"no-jump peak {conditioned:.4f} vs closed-system peak {closed:.4f}"
        + ("" if ok else " (conditioning should not hurt)")
    )


def check_master_equation_integrity() -> tuple[bool, str]:
    failures: list[str] = []
    model = _spin_mixing_model(6, 0.3)
    basis = model.sector.basis
    times = np.linspace(0.0, 3.0, 7)
    rhos = evolve_master(model, basis.polar_state(), times)
    for k, rho in enumerate(rhos):
        _fail(abs(np.trace(rho).real - 1.0) < 1e-8, f"trace drift at sample {k}", failures)
        _fail(float(np.abs(rho - rho.conj().T).max()) < 1e-9, f"hermiticity at {k}", failures)
        _fail(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()) > -1e-8,
              f"negative eigenvalue at {k}", failures)
    return not failures, "; ".join(failures) or "trace, hermiticity, positivity preserved"


def check_qfunction_identity() -> tuple[bool, str]:
    failures: list[str] = []
    basis = hilbert.build_basis(6)
    ladder = qfunction.build_ladder(basis)
    gram = ladder.kets.conj() @ ladder.kets.T
    _fail(float(np.abs(gram - np.eye(basis.n_atoms + 1)).max()) < 1e-10,
          "ladder states not orthonormal", failures)
    state = qfunction.coherent_state(ladder, 1.1, 0.7)
    _fail(abs(np.linalg.norm(state) - 1.0) < 1e-10, "coherent state not normalised", failures)
    weight = qfunction.identity_weight(state, ladder)
    _fail(abs(weight - 1.0) < 1e-6, f"identity weight {weight}", failures)
    return not failures, "; ".join(failures) or "ladder orthonormal, SU(2) identity resolved"


CHECKS = (
    ("operator-algebra", check_operator_algebra),
    ("parameter-mapping", check_parameter_mapping),
    ("oracle-consistency", check_oracle_consistency),
    ("squeezing-dynamics", check_squeezing_dynamics),
    ("me-vs-trajectories", check_me_vs_trajectories),
    ("no-jump-ordering", check_no_jump_ordering),
    ("master-equation-integrity", check_master_equation_integrity),
    ("qfunction-identity", check_qfunction_identity),
)


def run_checks(dissipator_scale: float = 1.0, workers: int = 1) -> list[CheckResult]:
    results = []
    for name, func in CHECKS:
        start = time.perf_counter()
        if name == "me-vs-trajectories":
            passed, detail = func(dissipator_scale=dissipator_scale, workers=workers)
        else:
            passed, detail = func()
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
    return results
