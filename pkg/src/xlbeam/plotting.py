"""Figure rendering for simulation reports and beam-pattern grids.

Figures are written straight to files (Agg backend); the CSV stays the
primary output and every plot is derived from the same rows.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SCHEME_STYLE = {
    "perfect-csi": dict(color="black", marker="*", linestyle="--"),
    "proposed": dict(color="tab:red", marker="o"),
    "exhaustive": dict(color="tab:blue", marker="s"),
    "two-phase": dict(color="tab:green", marker="^"),
    "subarray": dict(color="tab:purple", marker="v"),
    "dft": dict(color="tab:orange", marker="d"),
    "ls": dict(color="tab:brown", marker="x"),
}

_SWEEP_LABEL = {
    "snr_db": "reference SNR (dB)",
    "user_range_m": "user range (m)",
    "rician_db": "Rician factor (dB)",
    "m": "activation interval",
    "k_users": "number of users",
    "none": "",
}


def save_rate_figure(rows: Sequence[dict], path: str) -> str:
    """Render mean rate and effective rate vs. the sweep variable.

    One line per scheme on each panel; returns the written path.
    """
    if not rows:
        raise ValueError("no rows to plot")
    sweep_var = rows[0]["sweep_var"]
    scenario = rows[0]["scenario"]
    schemes = list(dict.fromkeys(r["scheme"] for r in rows))

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharex=True)
    for scheme in schemes:
        pts = [r for r in rows if r["scheme"] == scheme]
        x = [r["sweep_value"] if r["sweep_value"] != "" else 0 for r in pts]
        style = _SCHEME_STYLE.get(scheme, {})
        axes[0].plot(x, [r["mean_rate_bps_hz"] for r in pts], label=scheme, **style)
        axes[1].plot(x, [r["mean_eff_rate_bps_hz"] for r in pts], label=scheme, **style)
    axes[0].set_ylabel("rate (bps/Hz)")
    axes[1].set_ylabel("effective rate (bps/Hz)")
    for ax in axes:
        ax.set_xlabel(_SWEEP_LABEL.get(sweep_var, sweep_var))
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.suptitle(scenario)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_pattern_heatmap(
    thetas: np.ndarray,
    ranges: np.ndarray,
    values: np.ndarray,
    path: str,
    steer: tuple[float, float] | None = None,
) -> str:
    """Render a (range x angle) pattern grid; optionally mark the steer point.

    ``steer`` is ``(range_m, angle)``; returns the written path.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    mesh = ax.pcolormesh(thetas, ranges, values, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="normalized pattern")
    if steer is not None:
        ax.plot(steer[1], steer[0], "wo", markersize=8, markerfacecolor="none",
                markeredgewidth=1.6)
    ax.set_xlabel("spatial angle")
    ax.set_ylabel("range (m)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
