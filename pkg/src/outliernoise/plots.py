"""Static SVG renderings of sweep results and traces (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("plotting needs matplotlib (pip install 'artifact[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "outliernoise"
    return plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_result(result, out_dir: Path) -> None:
    plt = _pyplot()
    rows = result.rows()
    axes = list(result.points[0].params) if result.points else []
    gain_cols = [c for c in rows[0] if c.endswith("gain_db")] if rows else []
    numeric = [a for a in axes if not isinstance(rows[0][a], bool)]
    if gain_cols and numeric:
        x_axis = numeric[-1]
        others = [a for a in axes if a != x_axis]
        fig, ax = plt.subplots(figsize=(6, 4))
        groups: dict[tuple, list[dict]] = {}
        for r in rows:
            groups.setdefault(tuple(r[a] for a in others), []).append(r)
        for key, rs in groups.items():
            rs = sorted(rs, key=lambda r: r[x_axis])
            label = ", ".join(f"{a}={v:g}" if isinstance(v, float) else f"{a}={v}" for a, v in zip(others, key))
            for col in gain_cols:
                ax.plot([r[x_axis] for r in rs], [r[col] for r in rs], marker="o",
                        label=(label + " " + col).strip())
        ax.set_xlabel(x_axis)
        ax.set_ylabel("SNR gain over linear chain, dB")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=6)
        fig.tight_layout()
        _save(fig, out_dir / "gain.svg")
        plt.close(fig)
    for p in result.points:
        if p.traces is None:
            continue
        names = list(p.traces)
        fig, axs = plt.subplots(len(names), 1, figsize=(7, 1.4 * len(names)), sharex=True)
        t = np.arange(len(p.traces[names[0]])) / p.trace_rate
        for ax, name in zip(np.atleast_1d(axs), names):
            ax.plot(t, p.traces[name], lw=0.8)
            ax.set_ylabel(name, fontsize=7)
        np.atleast_1d(axs)[-1].set_xlabel("t, s (from start of measurement window)")
        fig.tight_layout()
        _save(fig, out_dir / f"traces-{p.index:03d}.svg")
        plt.close(fig)
