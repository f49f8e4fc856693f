"""Tiny self-contained SVG line charts for run directories."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import read_csv_columns, read_predictions

WIDTH, HEIGHT = 720, 400
MARGIN = dict(left=70, right=20, top=36, bottom=48)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


def _extent(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_chart(
    series: list[Series],
    title: str,
    x_label: str,
    y_label: str,
    y_range: tuple[float, float] | None = None,
    shade: tuple[float, float] | None = None,
) -> str:
    """Render one polyline per series on shared axes.

    The plotted y-range is exactly ``y_range`` (default: data min..max) and is
    recorded on the root element as ``data-y-min``/``data-y-max``.
    """
    xs = np.concatenate([s.x for s in series])
    x0, x1 = _extent(xs)
    y0, y1 = y_range if y_range is not None else _extent(np.concatenate([s.y for s in series]))
    if y0 == y1:
        y1 = y0 + 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - left - MARGIN["right"]
    ph = HEIGHT - top - MARGIN["bottom"]

    def sx(v):
        return left + (np.asarray(v) - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1.0 - (np.asarray(v) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-x-min="{x0!r}" data-x-max="{x1!r}" '
        f'data-y-min="{float(y0)!r}" data-y-max="{float(y1)!r}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    if shade is not None:
        a, b = (float(np.clip(v, x0, x1)) for v in shade)
        out.append(
            f'<rect class="train-range" x="{sx(a):.2f}" y="{top}" width="{sx(b) - sx(a):.2f}" '
            f'height="{ph}" fill="#eeeeee"/>'
        )
    # axes
    out.append(f'<line class="axis" x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for v in np.linspace(x0, x1, 5):
        out.append(
            f'<text x="{sx(v):.2f}" y="{top + ph + 16}" text-anchor="middle" font-size="11">{v:.3g}</text>'
        )
    for v in np.linspace(y0, y1, 5):
        out.append(
            f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end" font-size="11">{v:.4g}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(y_label)}</text>'
    )
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(s.x), sy(s.y)))
        out.append(
            f'<polyline data-label="{escape(s.label)}" fill="none" stroke="{color}" '
            f'stroke-width="1.5" points="{pts}"/>'
        )
        out.append(
            f'<text x="{left + pw - 8}" y="{top + 14 + 14 * i}" text-anchor="end" font-size="11" '
            f'fill="{color}">{escape(s.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_run(run_dir: str | Path, train_range: tuple[float, float] | None = None) -> list[Path]:
    """Write prediction.svg, error.svg and losses.svg into ``run_dir``."""
    run = Path(run_dir)
    table = read_predictions(run / "predictions.csv")
    metrics = read_csv_columns(run / "metrics.csv")

    pred = line_chart(
        [Series("sin(x)", table.x, table.y_true), Series("prediction", table.x, table.y_pred)],
        "Prediction vs target", "x", "y", shade=train_range,
    )
    err_max = float(table.abs_err.max())
    err = line_chart(
        [Series("|error|", table.x, table.abs_err)],
        "Absolute error vs state", "x", "|y_pred - sin(x)|",
        y_range=(0.0, err_max if err_max > 0 else 1.0),
    )
    if len(metrics["epoch"]):
        loss_series = [
            Series("critic loss", metrics["epoch"], metrics["critic_loss"]),
            Series("actor loss", metrics["epoch"], metrics["actor_loss"]),
        ]
    else:
        loss_series = [Series("critic loss", np.zeros(1), np.zeros(1)), Series("actor loss", np.zeros(1), np.zeros(1))]
    losses = line_chart(loss_series, "Training losses", "epoch", "loss")

    paths = []
    for name, body in (("prediction.svg", pred), ("error.svg", err), ("losses.svg", losses)):
        p = run / name
        p.write_text(body, encoding="utf-8")
        paths.append(p)
    return paths
