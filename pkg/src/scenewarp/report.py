"""Render a verification report to disk: JSON, delimited table, figures.

The machine-readable report from pipeline.verify lands as report.json,
a per-cell CSV for spreadsheet digestion, and a small set of matplotlib
figures (PSNR heatmap over the view-time grid, provenance composition,
per-view painted-pixel trend) under figures/.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .frame import PROVENANCE_NAMES

_CSV_FIELDS = [
    "view",
    "t",
    "psnr_db",
    "exact",
    "trusted_pixels",
    "trusted_fraction",
    "hole_iou",
    "original",
    "warped",
    "telea",
    "external",
    "copied_prev_t",
    "alignment_gamma",
    "alignment_beta",
]


def write_report(report: dict, out_dir) -> dict:
    """Write report.json, cells.csv, and figures; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig_dir = out / "figures"
    fig_dir.mkdir(exist_ok=True)

    json_path = out / "report.json"
    json_path.write_text(json.dumps(report, indent=1))

    csv_path = out / "cells.csv"
    with csv_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for c in report["cells"]:
            row = {
                "view": c["view"],
                "t": c["t"],
                "psnr_db": "" if c["psnr_db"] is None else f"{c['psnr_db']:.4f}",
                "exact": int(c["exact"]),
                "trusted_pixels": c["trusted_pixels"],
                "trusted_fraction": f"{c['trusted_fraction']:.6f}",
                "hole_iou": "" if c["hole_iou"] is None else f"{c['hole_iou']:.4f}",
                "alignment_gamma": "" if not c["alignment"] else f"{c['alignment']['gamma']:.9f}",
                "alignment_beta": "" if not c["alignment"] else f"{c['alignment']['beta']:.9f}",
            }
            row.update({name: c["provenance"][name] for name in PROVENANCE_NAMES.values()})
            writer.writerow(row)

    figures = [
        _psnr_heatmap(report, fig_dir / "psnr_heatmap.png"),
        _provenance_mix(report, fig_dir / "provenance_mix.png"),
        _painted_trend(report, fig_dir / "painted_by_timestamp.png"),
    ]
    return {"report": json_path, "csv": csv_path, "figures": figures}


def _grid(report: dict, key):
    v_count, t_count = report["views"], report["timestamps"]
    grid = np.full((v_count, t_count), np.nan)
    for c in report["cells"]:
        grid[c["view"], c["t"]] = key(c)
    return grid


def _psnr_heatmap(report: dict, path: Path) -> Path:
    grid = _grid(report, lambda c: np.nan if c["psnr_db"] is None else c["psnr_db"])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    im = ax.imshow(grid, aspect="auto", cmap="viridis", origin="lower")
    ax.set_xlabel("timestamp")
    ax.set_ylabel("view")
    ax.set_title("trusted-pixel PSNR vs oracle (dB); blank = bit-exact cell")
    fig.colorbar(im, ax=ax, shrink=0.9)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _provenance_mix(report: dict, path: Path) -> Path:
    names = list(PROVENANCE_NAMES.values())
    totals = {n: 0 for n in names}
    for c in report["cells"]:
        for n in names:
            totals[n] += c["provenance"][n]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, [totals[n] for n in names], color="#4878a8")
    ax.set_ylabel("pixels")
    ax.set_title("pixel provenance across the whole matrix")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _painted_trend(report: dict, path: Path) -> Path:
    t_count = report["timestamps"]
    ext = np.zeros(t_count)
    tel = np.zeros(t_count)
    cop = np.zeros(t_count)
    for c in report["cells"]:
        ext[c["t"]] += c["provenance"]["external"]
        tel[c["t"]] += c["provenance"]["telea"]
        cop[c["t"]] += c["provenance"]["copied_prev_t"]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ts = np.arange(t_count)
    ax.plot(ts, ext, marker="o", label="external")
    ax.plot(ts, tel, marker="s", label="fast-marching")
    ax.plot(ts, cop, marker="^", label="copied from t-1")
    ax.set_xlabel("timestamp")
    ax.set_ylabel("pixels")
    ax.set_title("synthesized pixels per timestamp")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
