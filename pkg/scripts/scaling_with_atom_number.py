#!/usr/bin/env python3
"""Peak squeezing versus atom number and the power-law fit.

Closed-system (Gamma = 0) peak xi2 optimised over time and quadrature angle
for a range of atom numbers, with a log-log least-squares exponent.  Optionally
adds a damped ensemble estimate per N.
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
from spincavity.observables import ensemble_xi2_jackknife, optimize_theta, scaling_fit
from spincavity.params import DispersiveParams


def spin_mixing(n, ratio):
    return models.spin_mixing(
        DispersiveParams(0.0, 1.0, ratio, ratio), hilbert.build_basis(n)
    )


def closed_peak(n, times):
    basis = hilbert.build_basis(n)
    obs = observables.SpinNematicObservables(basis)
    nj = evolve_no_jump(spin_mixing(n, 0.0), basis.polar_state(), times)
    values = [optimize_theta(obs.moments(s))[1] for s in nj.states]
    return float(min(values))


def damped_peak(n, ratio, times, n_traj, seed):
    basis = hilbert.build_basis(n)
    cfg = TrajectoryConfig(sample_times=times, n_traj=n_traj, seed=seed)
    ens = evolve_trajectories(spin_mixing(n, ratio), basis.polar_state(), cfg)
    values = [ensemble_xi2_jackknife(ens.means_at(k))[0] for k in range(times.size)]
    return float(min(values))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--atoms", type=int, nargs="+", default=[30, 60, 120, 240])
    ap.add_argument("--max-lambda-t", type=float, default=4.5)
    ap.add_argument("--samples", type=int, default=91)
    ap.add_argument("--gamma-ratio", type=float, default=0.05)
    ap.add_argument("--trajectories", type=int, default=0,
                    help="per-N ensemble size for the damped curve (0 = skip)")
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--out", default="results/scaling")
    args = ap.parse_args()

    times = np.linspace(0.0, args.max_lambda_t, args.samples)
    rows = {"atoms": [], "peak_xi2_closed": []}
    if args.trajectories:
        rows["peak_xi2_damped"] = []
    for n in args.atoms:
        rows["atoms"].append(n)
        rows["peak_xi2_closed"].append(closed_peak(n, times))
        if args.trajectories:
            rows["peak_xi2_damped"].append(
                damped_peak(n, args.gamma_ratio, times, args.trajectories, args.seed)
            )
        print(f"N={n}: closed peak {rows['peak_xi2_closed'][-1]:.5f}")

    fit = scaling_fit(list(zip(rows["atoms"], rows["peak_xi2_closed"])))
    print(
        f"closed-system exponent {fit.exponent:.4f} "
        f"(95% CI [{fit.ci95[0]:.4f}, {fit.ci95[1]:.4f}], R^2 {fit.r_squared:.5f})"
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    output.write_table(
        str(out / "scaling.tsv"), rows, {"exponent": fit.exponent, "seed": args.seed}
    )

    plt = output.matplotlib_backend()
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ns = np.asarray(rows["atoms"], dtype=float)
    ax.loglog(ns, rows["peak_xi2_closed"], "ro", label="closed system")
    grid = np.geomspace(ns.min(), ns.max(), 50)
    ax.loglog(
        grid,
        np.exp(fit.log_prefactor) * grid**fit.exponent,
        "r--",
        label=f"$N^{{{fit.exponent:.3f}}}$",
    )
    if args.trajectories:
        ax.loglog(ns, rows["peak_xi2_damped"], "bs", label="damped ensemble")
    ax.set_xlabel("N")
    ax.set_ylabel(r"peak $\xi^2$")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out / "scaling.svg", format="svg", metadata={"Date": None})
    print(f"wrote {out}/scaling.tsv and {out}/scaling.svg")


if __name__ == "__main__":
    main()
