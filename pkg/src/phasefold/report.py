"""Figure rendering for the metric series.

Produces a two-panel comparison (mean errors on the left, log-likelihood
difference on the right) written as both PNG and SVG next to the delimited
output.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricSeries


def render_metrics(series: MetricSeries, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    fig, (ax_err, ax_nll) = plt.subplots(1, 2, figsize=(9.0, 3.4))

    t = series.times
    ax_err.plot(t, series.err_rot_ekf, color="tab:red", ls="--", label="rotation, EKF")
    ax_err.plot(t, series.err_rot_eom, color="tab:red", ls="-", label="rotation, EOM")
    ax_err.plot(t, series.err_mom_ekf, color="tab:blue", ls="--", label="momentum, EKF")
    ax_err.plot(t, series.err_mom_eom, color="tab:blue", ls="-", label="momentum, EOM")
    ax_err.set_xlabel("time")
    ax_err.set_ylabel("mean error (Frobenius)")
    ax_err.legend(fontsize=8)
    ax_err.grid(alpha=0.3)

    ax_nll.plot(t, series.nll_diff, color="tab:green")
    ax_nll.axhline(0.0, color="black", lw=0.8)
    ax_nll.set_xlabel("time")
    ax_nll.set_ylabel("NLL difference (EOM - EKF)")
    ax_nll.grid(alpha=0.3)

    fig.tight_layout()
    paths = [out_dir / "metrics.png", out_dir / "metrics.svg"]
    for path in paths:
        fig.savefig(path, dpi=150)
    plt.close(fig)
    return paths
