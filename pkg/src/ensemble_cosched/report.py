"""PNG figures written next to the delimited results."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import matplotlib.ticker

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiment import CalibrationRow, SummaryRow  # noqa: E402


def _stem(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}.png")


def plot_sweep(summary: list[SummaryRow], out: str | Path) -> list[Path]:
    """One figure per policy: mean simulated makespan per scenario, min/max as error bars."""
    out = Path(out)
    written = []
    for policy in dict.fromkeys(s.policy for s in summary):
        rows = [s for s in summary if s.policy == policy]
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        axis = rows[0].axis or "point"
        for scenario in dict.fromkeys(s.scenario for s in rows):
            pts = [s for s in rows if s.scenario == scenario]
            xs = [s.value if s.value is not None else i for i, s in enumerate(pts)]
            if axis == "data_volume":
                xs = [x / 1e9 for x in xs]
            ys = [s.mean for s in pts]
            err = [[s.mean - s.min for s in pts], [s.max - s.mean for s in pts]]
            ax.errorbar(xs, ys, yerr=err, marker="o", capsize=3, label=scenario)
        if axis == "data_volume":
            ax.set_xscale("log", base=2)
            ax.xaxis.set_major_formatter(matplotlib.ticker.ScalarFormatter())
            ax.set_xlabel("data volume per iteration (GB)")
        else:
            ax.set_xlabel(axis)
        ax.set_ylabel("makespan (s)")
        ax.set_title(f"policy {policy}")
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = _stem(out, policy.replace(":", "-"))
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def plot_calibration(rows: list[CalibrationRow], out: str | Path) -> Path:
    """Simulated makespan against the model at each bandwidth variant, averaged over seeds."""
    out = Path(out)
    labels = list(dict.fromkeys((r.scenario, r.value) for r in rows))
    series = ("simulated", "baseline", "b1", "b2", "b3")
    fig, ax = plt.subplots(figsize=(max(6.4, 1.2 * len(labels)), 4.0))
    width = 0.8 / len(series)
    for k, name in enumerate(series):
        means = []
        for lab in labels:
            vals = [getattr(r, name) for r in rows if (r.scenario, r.value) == lab]
            means.append(sum(vals) / len(vals))
        ax.bar([i + k * width for i in range(len(labels))], means, width, label=name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
    ax.set_xticklabels([s if v is None else f"{s}\n{v:g}" for s, v in labels], fontsize="small")
    ax.set_yscale("log")
    ax.set_ylabel("makespan (s)")
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = _stem(out, "calibration")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
