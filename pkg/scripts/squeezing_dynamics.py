#!/usr/bin/env python3
"""Squeezing dynamics at N = 120: closed system, damped ensemble, no-jump.

Produces the time evolution of the optimised spin-nematic squeezing parameter
for Gamma = 0, for a 1000-trajectory ensemble at Gamma = 0.05 Lambda, and for
the null-measurement conditioned (no-jump) trajectory, together with the
m = +-1 populations.  Writes a TSV table and an SVG figure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import spincavity  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from spincavity import hilbert, models, observables, output
from spincavity.evolution import TrajectoryConfig, evolve_no_jump, evolve_trajectories
from spincavity.observables import ensemble_xi2_jackknife, optimize_theta
from spincavity.params import DispersiveParams


def spin_mixing(n, ratio):
    params = DispersiveParams(0.0, 1.0, ratio, ratio)
    return models.spin_mixing(params, hilbert.build_basis(n))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--atoms", type=int, default=120)
    ap.add_argument("--gamma-ratio", type=float, default=0.05)
    ap.add_argument("--trajectories", type=int, default=1000)
    ap.add_argument("--max-lambda-t", type=float, default=3.0)
    ap.add_argument("--samples", type=int, default=61)
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/squeezing_dynamics")
    args = ap.parse_args()

    n = args.atoms
    basis = hilbert.build_basis(n)
    obs = observables.SpinNematicObservables(basis)
    times = np.linspace(0.0, args.max_lambda_t, args.samples)
    psi0 = basis.polar_state()

    closed = evolve_no_jump(spin_mixing(n, 0.0), psi0, times)
    xi2_closed = np.empty(times.size)
    pops_closed = np.empty(times.size)
    for k, state in enumerate(closed.states):
        m = obs.moments(state)
        _, xi2_closed[k] = optimize_theta(m)
        pops_closed[k] = m.n_plus

    conditioned = evolve_no_jump(spin_mixing(n, args.gamma_ratio), psi0, times)
    xi2_nojump = np.array(
        [optimize_theta(obs.moments(s))[1] for s in conditioned.states]
    )

    cfg = TrajectoryConfig(
        sample_times=times,
        n_traj=args.trajectories,
        seed=args.seed,
        workers=args.workers,
    )
    ens = evolve_trajectories(spin_mixing(n, args.gamma_ratio), psi0, cfg)
    xi2_ens = np.empty(times.size)
    se_ens = np.empty(times.size)
    for k in range(times.size):
        xi2_ens[k], _, se_ens[k] = ensemble_xi2_jackknife(ens.means_at(k))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "atoms": n,
        "gamma_ratio": args.gamma_ratio,
        "trajectories": args.trajectories,
        "seed": args.seed,
    }
    output.write_table(
        str(out / "curves.tsv"),
        {
            "lambda_t": times,
            "xi2_closed": xi2_closed,
            "xi2_ensemble": xi2_ens,
            "xi2_ensemble_stderr": se_ens,
            "xi2_nojump": xi2_nojump,
            "n_plus_closed": pops_closed,
            "n_plus_ensemble": ens.mean("n_plus"),
            "n_minus_ensemble": ens.mean("n_minus"),
            "mean_jumps": ens.mean_cumulative_jumps(),
        },
        meta,
    )

    plt = output.matplotlib_backend()
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6, 6.5), sharex=True)
    db = lambda x: 10.0 * np.log10(x)
    top.plot(times, db(xi2_closed), "r-", label="closed system")
    top.plot(times, db(xi2_ens), "b-", label=f"ensemble ({args.trajectories} traj.)")
    top.plot(times, db(xi2_nojump), "b--", label="no-jump conditioned")
    top.axhline(0.0, color="k", lw=0.5)
    top.set_ylabel(r"$\xi^2_{\min}$ (dB)")
    top.legend(frameon=False)
    bottom.plot(times, pops_closed, "r-", label=r"$\langle n_{+1}\rangle$, closed")
    bottom.plot(times, ens.mean("n_plus"), "b--", label=r"$\langle n_{+1}\rangle$, damped")
    bottom.set_xlabel(r"$\Lambda t$")
    bottom.set_ylabel("population")
    bottom.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out / "curves.svg", format="svg", metadata={"Date": None})
    print(f"wrote {out}/curves.tsv and {out}/curves.svg")
    k = int(np.argmin(xi2_closed))
    print(f"closed-system peak: {xi2_closed[k]:.4f} ({db(xi2_closed[k]):.2f} dB) at Lambda t = {times[k]:.2f}")


if __name__ == "__main__":
    main()
