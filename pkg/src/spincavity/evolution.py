"""Time evolution: exact master-equation integration and MCWF trajectories.

Integration uses adaptive embedded Runge-Kutta 5(4) (scipy's RK45) with
``rtol = 1e-8`` and ``atol = 1e-10`` defaults throughout.

Monte-Carlo wavefunction trajectories follow the standard unravelling: the
state evolves under the non-hermitian H_eff = H - (i/2) sum rate C^dag C, a
uniform threshold r is drawn per no-jump segment, and when the squared norm of
the unnormalised state crosses r the jump time is located by bisection on the
integrator's dense output.  A jump channel k is then chosen with probability
proportional to rate_k ||C_k psi||^2, the state is projected and renormalised,
and a fresh threshold is drawn.

Randomness is counter-based: trajectory i of a run with master seed s draws
from an independent Philox stream keyed by (s, i), so results do not depend on
scheduling order and ensembles are bitwise reproducible for a fixed
(seed, n_traj, worker count).  The ensemble reduction is an ordered fold by
trajectory index.

Models that conserve S_z between jumps (``LindbladModel.sector``) are evolved
on one S_z sector at a time, which shrinks the working dimension from
(N+1)(N+2)/2 to about N/2 and is what makes thousand-trajectory ensembles at
N = 120 cheap.  The sector path computes the same standard moment set as the
generic path and is cross-checked against it in the test suite.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import RK45, solve_ivp

from . import hilbert, observables
from .errors import CapacityError, IntegrationError
from .models import JointBasis, LindbladModel, full_dicke
from .observables import STANDARD_MOMENT_KEYS, Moments, SpinNematicObservables

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
DEFAULT_JUMP_TOL = 1e-10
MAX_DENSE_DIM = 4000


@dataclass(frozen=True)
class TrajectoryConfig:
    """Ensemble settings for MCWF runs."""

    sample_times: np.ndarray
    n_traj: int = 1000
    seed: int = 0
    rel_tol: float = DEFAULT_RTOL
    abs_tol: float = DEFAULT_ATOL
    jump_tol: float = DEFAULT_JUMP_TOL
    workers: int = 1

    def __post_init__(self):
        times = np.asarray(self.sample_times, dtype=float)
        object.__setattr__(self, "sample_times", times)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("sample_times must be a non-empty 1-D array")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample_times must be strictly ascending")
        if times[0] < 0:
            raise ValueError("sample_times must be non-negative")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class EnsembleResult:
    """Per-trajectory observable means plus jump records."""

    sample_times: np.ndarray
    per_traj_means: dict[str, np.ndarray]  # each (n_traj, n_times)
    jump_times: tuple[np.ndarray, ...]
    seed: int
    n_traj: int
    workers: int

    def mean(self, key: str) -> np.ndarray:
        return self.per_traj_means[key].mean(axis=0)

    def variance(self, key: str) -> np.ndarray:
        if self.n_traj < 2:
            return np.full(self.sample_times.shape, np.nan)
        return self.per_traj_means[key].var(axis=0, ddof=1)

    def stderr(self, key: str) -> np.ndarray:
        return np.sqrt(self.variance(key) / self.n_traj)

    def means_at(self, k: int) -> dict[str, np.ndarray]:
        """Per-trajectory means of every observable at sample index k."""
        return {name: vals[:, k] for name, vals in self.per_traj_means.items()}

    def moments_at(self, k: int) -> Moments:
        """Ensemble-averaged moments (master-equation estimate) at index k."""
        means = {name: float(vals[:, k].mean()) for name, vals in self.per_traj_means.items()}
        return Moments(**{key: means[key] for key in STANDARD_MOMENT_KEYS})

    def mean_cumulative_jumps(self) -> np.ndarray:
        counts = np.zeros((self.n_traj, self.sample_times.size))
        for i, jumps in enumerate(self.jump_times):
            counts[i] = np.searchsorted(jumps, self.sample_times, side="right")
        return counts.mean(axis=0)


@dataclass(frozen=True)
class NoJumpResult:
    """Null-measurement conditioned evolution under H_eff."""

    sample_times: np.ndarray
    states: np.ndarray          # (n_times, dim), renormalised
    no_jump_prob: np.ndarray    # ||psi~(t)||^2, monotone non-increasing


def _norm2(y: np.ndarray) -> float:
    return float(np.real(np.vdot(y, y)))


# ---------------------------------------------------------------------------
# master equation


def evolve_master(
    model: LindbladModel,
    rho0: np.ndarray,
    sample_times,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
    max_dense_dim: int = MAX_DENSE_DIM,
) -> list[np.ndarray]:
    """Integrate the Lindblad equation exactly; returns rho at each sample time.

    The density matrix is stored dense (operators stay sparse), so the
    dimension is guarded: beyond ``max_dense_dim`` a CapacityError advises
    switching to trajectories.  The trace is never renormalised during
    integration; reporting-level normalisation happens in the observable layer.
    """
    dim = model.dim
    if dim > max_dense_dim:
        raise CapacityError(
            f"density-matrix dimension {dim} exceeds the dense guard "
            f"{max_dense_dim}; use trajectories for systems this large"
        )
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 shape {rho0.shape} does not match dimension {dim}")
    times = np.asarray(sample_times, dtype=float)

    h = model.hamiltonian.tocsr()
    h_t = h.T.tocsr()
    ls = [(np.sqrt(rate) * op).tocsr() for op, rate in model.jump_operators]
    l_dag_t = [l.conj().tocsr() for l in ls]          # (L^dag)^T = conj(L)
    ldl = [(l.getH() @ l).tocsr() for l in ls]
    ldl_t = [m.T.tocsr() for m in ldl]

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        out = -1j * (h @ rho - (h_t @ rho.T).T)
        for l, ldt, m, mt in zip(ls, l_dag_t, ldl, ldl_t):
            l_rho = l @ rho
            out += (ldt @ l_rho.T).T
            out -= 0.5 * (m @ rho + (mt @ rho.T).T)
        return out.ravel()

    t0, t1 = 0.0, float(times[-1])
    if t1 == t0:
        return [rho0.copy() for _ in times]
    sol = solve_ivp(
        rhs,
        (t0, t1),
        rho0.ravel(),
        t_eval=times,
        method="RK45",
        rtol=rel_tol,
        atol=abs_tol,
    )
    if not sol.success:
        last = float(sol.t[-1]) if sol.t.size else t0
        raise IntegrationError(
            f"master-equation integration failed: {sol.message}", last_time=last
        )
    return [sol.y[:, k].reshape(dim, dim) for k in range(sol.t.size)]


# ---------------------------------------------------------------------------
# no-jump (null-measurement conditioned) evolution


def evolve_no_jump(
    model: LindbladModel,
    psi0: np.ndarray,
    sample_times,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
) -> NoJumpResult:
    """Deterministic evolution under H_eff with renormalisation at samples.

    ``no_jump_prob`` records the squared norm decay, i.e. the probability that
    no photon has been emitted up to each sample time.  With no jump operators
    this reduces to closed-system Schroedinger evolution.
    """
    times = np.asarray(sample_times, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)
    h_eff = model.effective_hamiltonian()

    indices = None
    if model.sector is not None:
        indices = _single_sector_indices(model.sector.basis, psi0)
    if indices is not None:
        work = psi0[indices].copy()
        k_mat = (-1j) * h_eff[indices][:, indices].tocsr()
    else:
        work = psi0.copy()
        k_mat = (-1j) * h_eff.tocsr()

    nrm = math.sqrt(_norm2(work))
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalised")
    work = work / nrm

    states = np.empty((times.size, psi0.size), dtype=complex)
    probs = np.empty(times.size)
    log_prob = 0.0

    def emit(k, vec):
        if indices is None:
            states[k] = vec
        else:
            states[k] = 0.0
            states[k, indices] = vec
        probs[k] = math.exp(log_prob)

    start = 0
    t_prev = 0.0
    if times[0] == 0.0:
        emit(0, work)
        start = 1
    for k in range(start, times.size):
        sol = solve_ivp(
            lambda _t, y: k_mat @ y,
            (t_prev, times[k]),
            work,
            t_eval=[times[k]],
            method="RK45",
            rtol=rel_tol,
            atol=abs_tol,
        )
        if not sol.success:
            raise IntegrationError(
                f"no-jump integration failed: {sol.message}", last_time=t_prev
            )
        y = sol.y[:, -1]
        n2 = _norm2(y)
        log_prob += math.log(n2)
        work = y / math.sqrt(n2)
        emit(k, work)
        t_prev = times[k]
    return NoJumpResult(sample_times=times, states=states, no_jump_prob=probs)


def _single_sector_indices(basis, psi: np.ndarray):
    """Indices of the S_z sector containing psi, or None if support crosses sectors."""
    support = np.flatnonzero(np.abs(psi) > 1e-14)
    if support.size == 0:
        return None
    m_vals = basis.sz_value()[support]
    if np.all(m_vals == m_vals[0]):
        return np.flatnonzero(basis.sz_value() == m_vals[0])
    return None


# ---------------------------------------------------------------------------
# MCWF trajectories


class _GenericWorkspace:
    """Full-space trajectory state: one H_eff, arbitrary jump channels."""

    def __init__(self, model: LindbladModel, op_items):
        self.k_mat = (-1j) * model.effective_hamiltonian().tocsr()
        self.jumps = [(op.tocsr(), rate) for op, rate in model.jump_operators]
        self.op_items = op_items  # list of (name, csr)
        self.has_jumps = bool(self.jumps)
        self.y = None

    @property
    def n_keys(self):
        return len(self.op_items)

    def reset(self, psi0: np.ndarray):
        self.y = np.asarray(psi0, dtype=complex).copy()

    def deriv(self, _t, y):
        return self.k_mat @ y

    def moments_of(self, y):
        nrm2 = _norm2(y)
        return [float(np.real(np.vdot(y, op @ y))) / nrm2 for _, op in self.op_items]

    def apply_jump(self, y, rng):
        weights = np.empty(len(self.jumps))
        candidates = []
        for k, (op, rate) in enumerate(self.jumps):
            vec = op @ y
            candidates.append(vec)
            weights[k] = rate * _norm2(vec)
        total = weights.sum()
        u = rng.random()
        choice = int(np.searchsorted(np.cumsum(weights) / total, u))
        choice = min(choice, len(self.jumps) - 1)
        new = candidates[choice]
        self.y = new / math.sqrt(_norm2(new))
        return choice


class _SectorWorkspace:
    """Trajectory state restricted to one S_z sector at a time.

    Valid for models whose Hamiltonian (and every C^dag C) conserves S_z while
    each jump shifts it by a fixed amount.  Produces the standard moment set;
    first moments of the sector-changing operators (S_x, S_y, Q_yz, Q_xz)
    vanish identically for sector-pure states, and their second moments reduce
    to norms of rectangular sector-block applications.
    """

    def __init__(self, model: LindbladModel):
        basis = model.sector.basis
        self.basis = basis
        self.shifts = model.sector.jump_shifts
        self.rates = [rate for _, rate in model.jump_operators]
        self.has_jumps = bool(self.rates)
        self._jump_full = [op.tocsr() for op, _ in model.jump_operators]
        self._h_eff = model.effective_hamiltonian().tocsr()
        self._sectors = basis.sz_sectors()
        spin = hilbert.spin_operators(basis)
        self._sp_full = spin["Sp"]
        self._sm_full = spin["Sm"]
        # Q_yz raising part R: Q_yz = R + R^dag with R shifting S_z by +1
        self._r_full = hilbert.prune(
            (1j / hilbert.SQRT2)
            * (hilbert.transition(basis, 0, -1) - hilbert.transition(basis, +1, 0))
        )
        self._rdag_full = self._r_full.getH().tocsr()
        self._block_cache: dict[int, dict] = {}
        self.sector = None
        self.y = None

    n_keys = len(STANDARD_MOMENT_KEYS)

    def reset(self, psi0: np.ndarray):
        m_vals = self.basis.sz_value()
        support = np.flatnonzero(np.abs(psi0) > 1e-14)
        if support.size == 0 or not np.all(m_vals[support] == m_vals[support[0]]):
            raise ValueError("initial state must live in a single S_z sector")
        self.sector = int(m_vals[support[0]])
        self.y = np.asarray(psi0, dtype=complex)[self._sectors[self.sector]].copy()
        self._load(self.sector)

    def _blocks(self, m: int) -> dict:
        blk = self._block_cache.get(m)
        if blk is None:
            ix = self._sectors[m]
            up = self._sectors.get(m + 1)
            down = self._sectors.get(m - 1)
            occ = self.basis.occ[ix]
            blk = {
                "k": (-1j) * self._h_eff[ix][:, ix].tocsr(),
                "sp": None if up is None else self._sp_full[up][:, ix].tocsr(),
                "sm": None if down is None else self._sm_full[down][:, ix].tocsr(),
                "r": None if up is None else self._r_full[up][:, ix].tocsr(),
                "l": None if down is None else self._rdag_full[down][:, ix].tocsr(),
                "jump": [
                    None
                    if self._sectors.get(m + shift) is None
                    else op[self._sectors[m + shift]][:, ix].tocsr()
                    for op, shift in zip(self._jump_full, self.shifts)
                ],
                "n_minus": occ[:, 0].astype(float),
                "n_zero": occ[:, 1].astype(float),
                "n_plus": occ[:, 2].astype(float),
            }
            self._block_cache[m] = blk
        return blk

    def _load(self, m: int):
        self._cur = self._blocks(m)

    def deriv(self, _t, y):
        return self._cur["k"] @ y

    def moments_of(self, y):
        cur = self._cur
        nrm2 = _norm2(y)
        w = np.abs(y) ** 2 / nrm2
        n_minus = float(w @ cur["n_minus"])
        n_zero = float(w @ cur["n_zero"])
        n_plus = float(w @ cur["n_plus"])
        sp_y = cur["sp"] @ y if cur["sp"] is not None else None
        sm_y = cur["sm"] @ y if cur["sm"] is not None else None
        r_y = cur["r"] @ y if cur["r"] is not None else None
        l_y = cur["l"] @ y if cur["l"] is not None else None
        n_sp = _norm2(sp_y) if sp_y is not None else 0.0
        n_sm = _norm2(sm_y) if sm_y is not None else 0.0
        n_r = _norm2(r_y) if r_y is not None else 0.0
        n_l = _norm2(l_y) if l_y is not None else 0.0
        sx2 = 0.25 * (n_sp + n_sm) / nrm2
        qyz2 = (n_r + n_l) / nrm2
        cross = 0.0
        if sp_y is not None and r_y is not None:
            cross += 0.5 * float(np.real(np.vdot(sp_y, r_y)))
        if sm_y is not None and l_y is not None:
            cross += 0.5 * float(np.real(np.vdot(sm_y, l_y)))
        sxqyz = cross / nrm2
        return [
            n_minus,
            n_zero,
            n_plus,
            0.0,                       # <S_x>
            0.0,                       # <S_y>
            n_plus - n_minus,          # <S_z>
            0.0,                       # <Q_yz>
            0.0,                       # <Q_xz>
            -2.0 * n_zero + n_plus + n_minus,
            sx2,
            qyz2,
            sxqyz,
        ]

    def apply_jump(self, y, rng):
        cur = self._cur
        weights = np.empty(len(self.rates))
        candidates = []
        for k, (block, rate) in enumerate(zip(cur["jump"], self.rates)):
            if block is None:
                candidates.append(None)
                weights[k] = 0.0
                continue
            vec = block @ y
            candidates.append(vec)
            weights[k] = rate * _norm2(vec)
        total = weights.sum()
        u = rng.random()
        choice = int(np.searchsorted(np.cumsum(weights) / total, u))
        choice = min(choice, len(self.rates) - 1)
        new = candidates[choice]
        self.sector += self.shifts[choice]
        self._load(self.sector)
        self.y = new / math.sqrt(_norm2(new))
        return choice


def _bisect_jump_time(dense, threshold, t_lo, t_hi, rel_tol):
    """Bisection for ||psi(t)||^2 = threshold on the dense output of one step."""
    tol = rel_tol * (t_hi - t_lo)
    lo, hi = t_lo, t_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _norm2(dense(mid)) >= threshold:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _run_single_trajectory(ws, rng, sample_times, rel_tol, abs_tol, jump_tol):
    times = sample_times
    n_times = times.size
    out = np.empty((ws.n_keys, n_times))
    jumps: list[float] = []
    has_jumps = ws.has_jumps

    idx = 0
    while idx < n_times and times[idx] <= 0.0:
        out[:, idx] = ws.moments_of(ws.y)
        idx += 1
    threshold = rng.random() if has_jumps else 0.0
    t_end = float(times[-1])
    t_cur = 0.0

    while t_cur < t_end:
        stepper = RK45(
            ws.deriv, t_cur, ws.y, t_bound=t_end, rtol=rel_tol, atol=abs_tol
        )
        jumped = False
        while stepper.status == "running":
            t_prev = stepper.t
            stepper.step()
            if stepper.status == "failed":
                raise IntegrationError(
                    "trajectory integration step failed", last_time=t_prev
                )
            t_new = stepper.t
            if has_jumps and _norm2(stepper.y) < threshold:
                dense = stepper.dense_output()
                t_jump = _bisect_jump_time(dense, threshold, t_prev, t_new, jump_tol)
                while idx < n_times and times[idx] <= t_jump:
                    out[:, idx] = ws.moments_of(dense(times[idx]))
                    idx += 1
                ws.apply_jump(dense(t_jump), rng)
                jumps.append(t_jump)
                threshold = rng.random()
                t_cur = t_jump
                jumped = True
                break
            if idx < n_times and times[idx] <= t_new:
                dense = stepper.dense_output()
                while idx < n_times and times[idx] <= t_new:
                    out[:, idx] = ws.moments_of(dense(times[idx]))
                    idx += 1
        if not jumped:
            ws.y = stepper.y
            t_cur = t_end
            while idx < n_times:
                out[:, idx] = ws.moments_of(ws.y)
                idx += 1
    return out, np.asarray(jumps)


def _make_workspace(model, op_items):
    if op_items is None:
        return _SectorWorkspace(model)
    return _GenericWorkspace(model, op_items)


def _run_trajectory_batch(payload, indices):
    (model, psi0, op_items, times, rel_tol, abs_tol, jump_tol, seed) = payload
    ws = _make_workspace(model, op_items)
    means = np.empty((len(indices), ws.n_keys, times.size))
    jump_lists = []
    for row, traj_index in enumerate(indices):
        ws.reset(psi0)
        rng = np.random.Generator(np.random.Philox(key=[seed, traj_index]))
        out, jumps = _run_single_trajectory(ws, rng, times, rel_tol, abs_tol, jump_tol)
        means[row] = out
        jump_lists.append(jumps)
    return means, jump_lists


_WORKER_PAYLOAD = None


def _init_worker(payload):
    global _WORKER_PAYLOAD
    _WORKER_PAYLOAD = payload


def _worker_run(indices):
    return _run_trajectory_batch(_WORKER_PAYLOAD, indices)


def evolve_trajectories(
    model: LindbladModel,
    psi0: np.ndarray,
    cfg: TrajectoryConfig,
    observable_ops: dict[str, sp.spmatrix] | None = None,
) -> EnsembleResult:
    """Run an MCWF ensemble and collect per-trajectory observable means.

    With ``observable_ops`` omitted the standard spin-nematic moment set is
    recorded; this requires the model to carry sector structure (the basis is
    taken from it), and enables the sector-restricted fast path.  Passing an
    explicit operator dictionary forces the generic full-space engine.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(_norm2(psi0) - 1.0) > 1e-10:
        raise ValueError("psi0 must be normalised")

    if observable_ops is None:
        if model.sector is None:
            raise ValueError(
                "models without sector structure need an explicit observable set"
            )
        keys = STANDARD_MOMENT_KEYS
        op_items = None
    else:
        keys = tuple(observable_ops.keys())
        op_items = [(name, op.tocsr()) for name, op in observable_ops.items()]

    times = cfg.sample_times
    payload = (
        model,
        psi0,
        op_items,
        times,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.jump_tol,
        cfg.seed,
    )

    all_means = np.empty((cfg.n_traj, len(keys), times.size))
    all_jumps: list[np.ndarray] = [None] * cfg.n_traj  # type: ignore[list-item]

    if cfg.workers == 1 or cfg.n_traj == 1:
        means, jump_lists = _run_trajectory_batch(payload, list(range(cfg.n_traj)))
        all_means[:] = means
        all_jumps = jump_lists
    else:
        chunks = np.array_split(np.arange(cfg.n_traj), min(cfg.workers * 4, cfg.n_traj))
        chunks = [c.tolist() for c in chunks if c.size]
        with ProcessPoolExecutor(
            max_workers=cfg.workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            for chunk, (means, jump_lists) in zip(chunks, pool.map(_worker_run, chunks)):
                for row, traj_index in enumerate(chunk):
                    all_means[traj_index] = means[row]
                    all_jumps[traj_index] = jump_lists[row]

    per_traj = {name: all_means[:, k, :] for k, name in enumerate(keys)}
    return EnsembleResult(
        sample_times=times,
        per_traj_means=per_traj,
        jump_times=tuple(all_jumps),
        seed=cfg.seed,
        n_traj=cfg.n_traj,
        workers=cfg.workers,
    )


# ---------------------------------------------------------------------------
# photon-cutoff convergence check


def photon_cutoff_converged(
    dicke_params_obj,
    kappa: float,
    atom_basis,
    cutoff: int,
    sample_times,
    observable_key: str = "n_plus",
    tol: float = 1e-6,
    include_residuals: bool = False,
    rel_tol: float = DEFAULT_RTOL,
    abs_tol: float = DEFAULT_ATOL,
) -> tuple[bool, float]:
    """Re-run the full Dicke model at cutoff + 4 and compare one observable.

    Returns (converged, max_shift).  Exact master-equation evolution from the
    polar state with an empty cavity, so this is only for desk-scale systems.
    """
    shifts = []
    reference = None
    for n_ph in (cutoff, cutoff + 4):
        jb = JointBasis(atom_basis, n_ph)
        model = full_dicke(dicke_params_obj, kappa, jb, include_residuals)
        obs = SpinNematicObservables(atom_basis, lift=jb.lift_atom)
        rho0 = jb.with_vacuum(atom_basis.polar_state())
        rhos = evolve_master(model, rho0, sample_times, rel_tol, abs_tol)
        series = np.array(
            [observables.expectation_density(obs.operators[observable_key], r) for r in rhos]
        )
        if reference is None:
            reference = series
        else:
            shifts.append(float(np.max(np.abs(series - reference))))
    return shifts[0] <= tol, shifts[0]
