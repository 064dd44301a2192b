"""Plot-ready aggregate tables and rendered figures.

For every sweep axis that actually varies, emits a delimited table of
mean ESE/ASE versus that axis (one series per protocol/algorithm pair)
and renders the matching line chart to a PNG next to it.
"""

import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)

AXES = ["p_max_b_dbm", "p_max_r_dbm", "m", "isd_km", "s_r", "s_u"]


def _series(aggregates: list, axis: str) -> dict:
    """(protocol, algorithm) -> sorted list of (axis value, mean ese,
    se ese, mean ase)."""
    series = {}
    for row in aggregates:
        key = (row["protocol"], row["algorithm"])
        series.setdefault(key, []).append((
            float(row[axis]),
            float(row["mean_ese"]),
            float(row["se_ese"]),
            float(row["mean_ase"]),
        ))
    for pts in series.values():
        pts.sort()
    return series


def emit_plot_data(aggregates: list, out_dir) -> list:
    """Write per-axis tables and figures; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for axis in AXES:
        values = sorted({row[axis] for row in aggregates})
        if len(values) < 2:
            continue
        series = _series(aggregates, axis)
        table_path = out / f"ese_vs_{axis}.csv"
        with open(table_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                [axis, "protocol", "algorithm", "mean_ese", "se_ese", "mean_ase"]
            )
            for (protocol, algorithm), pts in sorted(series.items()):
                for x, ese, se, ase in pts:
                    writer.writerow([x, protocol, algorithm,
                                     f"{ese:.12g}", f"{se:.12g}", f"{ase:.12g}"])
        written.append(table_path)
        written.append(_render_figure(series, axis, out))
    if not written:
        log.info("no sweep axis has more than one value; nothing to plot")
    return written


def _render_figure(series: dict, axis: str, out: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for (protocol, algorithm), pts in sorted(series.items()):
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        err = [p[2] for p in pts]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=3,
                    label=f"{protocol}/{algorithm}")
    ax.set_xlabel(axis)
    ax.set_ylabel("mean ESE (bits/s/Hz/J)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = out / f"ese_vs_{axis}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
