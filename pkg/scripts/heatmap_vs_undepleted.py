#!/usr/bin/env python3
"""xi2(theta, t) landscapes: finite-N engine versus the undepleted-mode form.

Left panel: ensemble estimate at finite N and Gamma/Lambda.  Right panel: the
closed-form large-N limit on the same axes.  Also emits the three-panel
damping comparison (Gamma/Lambda in {0.02, 0.05, 0.1}) from the closed form
alone.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

try:
    import spincavity  # noqa: F401
except ImportError:
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from spincavity import hilbert, models, output, undepleted
from spincavity.evolution import TrajectoryConfig, evolve_trajectories
from spincavity.observables import xi2_curve
from spincavity.params import DispersiveParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--atoms", type=int, default=120)
    ap.add_argument("--gamma-ratio", type=float, default=0.05)
    ap.add_argument("--trajectories", type=int, default=1000)
    ap.add_argument("--max-lambda-t", type=float, default=3.0)
    ap.add_argument("--samples", type=int, default=61)
    ap.add_argument("--theta-points", type=int, default=91)
    ap.add_argument("--seed", type=int, default=20240501)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/heatmaps")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    theta = np.linspace(0.0, 180.0, args.theta_points, endpoint=False)
    times = np.linspace(0.0, args.max_lambda_t, args.samples)

    basis = hilbert.build_basis(args.atoms)
    model = models.spin_mixing(
        DispersiveParams(0.0, 1.0, args.gamma_ratio, args.gamma_ratio), basis
    )
    cfg = TrajectoryConfig(
        sample_times=times, n_traj=args.trajectories, seed=args.seed,
        workers=args.workers,
    )
    ens = evolve_trajectories(model, basis.polar_state(), cfg)
    engine = np.empty((theta.size, times.size))
    for k in range(times.size):
        engine[:, k] = xi2_curve(ens.moments_at(k), theta)
    oracle = np.asarray(
        undepleted.xi2(1.0, args.gamma_ratio, times[None, :], theta[:, None])
    )

    meta = {
        "atoms": args.atoms,
        "gamma_ratio": args.gamma_ratio,
        "trajectories": args.trajectories,
        "seed": args.seed,
    }
    output.write_table(
        str(out / "heatmap.tsv"),
        output.heatmap_columns(times, theta, {"engine_xi2": engine, "oracle_xi2": oracle}),
        meta,
    )
    output.save_heatmap_image(
        str(out / "engine.svg"), times, theta, 10.0 * np.log10(engine),
        title=f"N = {args.atoms}",
    )
    output.save_heatmap_image(
        str(out / "undepleted.svg"), times, theta, 10.0 * np.log10(oracle),
        title="undepleted mode",
    )
    for ratio in undepleted.GAMMA_RATIO_PRESETS:
        grid = undepleted.heatmap(ratio, lambda_t_max=5.0, n_t=101, theta_deg=theta)
        output.save_heatmap_image(
            str(out / f"undepleted_ratio_{ratio:g}.svg"),
            grid.lambda_t,
            grid.theta_deg,
            grid.xi2_db,
            title=f"Gamma/Lambda = {ratio:g}",
        )
    print(f"wrote heatmap table and panels under {out}/")


if __name__ == "__main__":
    main()
