"""Counter report on star instances: a TSV table and a log-log figure."""

from __future__ import annotations

import csv
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .generate import star  # noqa: E402
from .junction import prepare  # noqa: E402
from .propagation import propagate  # noqa: E402

COLUMNS = ("engine", "degree", "center_multiplications", "center_additions",
           "center_divisions", "center_peak_aux_entries", "total_multiplications",
           "resident_entries")

STYLE = {"ss": ("o", "-"), "hugin": ("s", "--"), "arch1": ("^", "-."),
         "arch1-fast": ("v", ":"), "arch2": ("D", "-")}


def star_rows(center: int, sep: int, degrees: Sequence[int], engines: Sequence[str],
              seed: int = 0) -> list[dict]:
    rows = []
    for d in degrees:
        f, jt = star(center, sep, d, seed)
        jt = prepare(f, jt, 0)
        for eng in engines:
            inst = propagate(jt, f, eng).instrument
            c = inst.at(0)
            rows.append({"engine": eng, "degree": d,
                         "center_multiplications": c.multiplications,
                         "center_additions": c.additions,
                         "center_divisions": c.divisions,
                         "center_peak_aux_entries": c.peak_aux_entries,
                         "total_multiplications": inst.total().multiplications,
                         "resident_entries": inst.resident_entries})
    return rows


def write_tsv(path: str, rows: list[dict]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, delimiter="\t", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def plot_rows(path: str, rows: list[dict], title: str):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    engines = list(dict.fromkeys(r["engine"] for r in rows))
    for key, ax, label in ((
            "center_multiplications", axes[0], "center multiplications"),
            ("center_peak_aux_entries", axes[1], "center peak auxiliary entries")):
        for eng in engines:
            pts = [(r["degree"], max(r[key], 1)) for r in rows if r["engine"] == eng]
            marker, ls = STYLE.get(eng, ("o", "-"))
            ax.plot(*zip(*pts), marker=marker, linestyle=ls, label=eng)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("degree of the centre vertex")
        ax.set_ylabel(label)
        ax.grid(True, which="major", alpha=0.3)
    axes[0].legend(frameon=False)
    fig.suptitle(title)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def star_report(prefix: str, center: int, sep: int, degrees: Sequence[int],
                engines: Sequence[str], seed: int = 0) -> tuple[str, str]:
    """Write ``prefix.tsv`` and ``prefix.png``; returns both paths."""
    rows = star_rows(center, sep, degrees, engines, seed)
    tsv, png = f"{prefix}.tsv", f"{prefix}.png"
    write_tsv(tsv, rows)
    plot_rows(png, rows, f"star instances, centre size {center}, separator size {sep}")
    return tsv, png
