"""Aggregate per-block records into tables, tail statistics and SVG charts."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientDataError, UnknownMetricError
from .rwsets import Cause
from .store import BlockMetricsRecord

log = logging.getLogger(__name__)

DEFAULT_BUCKET_WIDTH = 8
DEFAULT_DENSITY_BINS = 40
DEFAULT_BAND = 5

GRAPH_METRICS = (
    "density",
    "num_edges",
    "diameter",
    "mean_degree",
    "max_degree",
    "assortativity",
    "largest_cc",
    "component_count",
    "greedy_colors",
    "clique_number",
    "longest_path_edges",
    "ratio_lower",
    "ratio_upper",
)
RECORD_METRICS = {
    "tx_count": lambda r: r.tx_count,
    "value_transfer_ratio": lambda r: r.value_transfer_ratio,
    "tree_node_count": lambda r: (r.tree_means or {}).get("node_count"),
    "tree_height": lambda r: (r.tree_means or {}).get("height"),
    "tree_mean_degree": lambda r: (r.tree_means or {}).get("mean_degree"),
    "tree_leaf_count": lambda r: (r.tree_means or {}).get("leaf_count"),
}
FIGURE_METRICS = (
    "mean_degree",
    "max_degree",
    "assortativity",
    "diameter",
    "greedy_colors",
    "clique_number",
    "longest_path_edges",
    "largest_cc",
    "ratio_lower",
    "ratio_upper",
)


def _tx_count(item) -> int:
    return item if isinstance(item, int) else item.tx_count


def block_size_histogram(records: Iterable, bucket_width: int = DEFAULT_BUCKET_WIDTH) -> list[tuple[int, int]]:
    """Buckets ``[k*w, (k+1)*w)`` from the lowest to the highest occupied one."""
    if bucket_width < 1:
        raise ValueError("bucket_width must be >= 1")
    counts = Counter(_tx_count(r) // bucket_width for r in records)
    if not counts:
        return []
    lo, hi = min(counts), max(counts)
    return [(k * bucket_width, counts.get(k, 0)) for k in range(lo, hi + 1)]


def nearest_rank(sorted_values: Sequence[float], percent) -> float:
    """Nearest-rank percentile of an ascending sequence."""
    n = len(sorted_values)
    if n == 0:
        raise InsufficientDataError("percentile of an empty sequence")
    p = Fraction(str(percent))
    rank = math.ceil(p * n / 100)
    return sorted_values[min(max(rank, 1), n) - 1]


def metric_getter(metric_name: str, graph: str = "prestate_rw"):
    if metric_name in RECORD_METRICS:
        return RECORD_METRICS[metric_name]
    if metric_name in GRAPH_METRICS:
        return lambda r: r.metric(graph, metric_name)
    raise UnknownMetricError(metric_name, list(GRAPH_METRICS) + list(RECORD_METRICS))


def split_groups(records: Sequence, group_count: int) -> list[list]:
    """Tx-count quantile groups: sort by tx count, cut into near-equal runs."""
    if group_count < 1:
        raise ValueError("group_count must be >= 1")
    ordered = sorted(records, key=lambda r: (r.tx_count, getattr(r, "block_number", 0)))
    n = len(ordered)
    base, extra = divmod(n, group_count)
    groups, at = [], 0
    for g in range(group_count):
        size = base + (1 if g < extra else 0)
        if size:
            groups.append(ordered[at : at + size])
        at += size
    return groups


@dataclass
class SeriesRow:
    x: float
    median: float
    low: float
    high: float
    count: int


@dataclass
class QuantileGroup:
    label: int
    size: int
    rows: list[SeriesRow] = field(default_factory=list)


def quantile_series(
    records: Sequence[BlockMetricsRecord],
    metric_name: str,
    group_count: int,
    graph: str = "prestate_rw",
    bins: int = DEFAULT_DENSITY_BINS,
    band: float = DEFAULT_BAND,
) -> list[QuantileGroup]:
    """Median and ``band``/``100-band`` percentiles of a metric against density.

    Groups are tx-count quantiles labeled by their smallest tx count; inside a
    group the records are binned into ``bins`` equal-width density bins.
    """
    get = metric_getter(metric_name, graph)
    if not records:
        raise InsufficientDataError("quantile_series needs at least one record")
    out = []
    for members in split_groups(records, group_count):
        group = QuantileGroup(label=members[0].tx_count, size=len(members))
        pts = []
        for r in members:
            x, y = r.metric(graph, "density"), get(r)
            if x is not None and y is not None:
                pts.append((float(x), float(y)))
        if pts:
            xs = [p[0] for p in pts]
            lo, hi = min(xs), max(xs)
            width = (hi - lo) / bins if hi > lo else 0.0
            binned: dict[int, list[float]] = {}
            for x, y in pts:
                b = 0 if width == 0 else min(int((x - lo) / width), bins - 1)
                binned.setdefault(b, []).append(y)
            for b in sorted(binned):
                ys = sorted(binned[b])
                center = lo if width == 0 else lo + (b + 0.5) * width
                group.rows.append(
                    SeriesRow(center, nearest_rank(ys, 50), nearest_rank(ys, band), nearest_rank(ys, 100 - band), len(ys))
                )
        out.append(group)
    return out


@dataclass
class CauseBreakdown:
    counts: dict[str, int]
    percentages: dict[str, float]
    total: int

    @property
    def empty(self) -> bool:
        return self.total == 0


def ww_cause_breakdown(records_or_counts) -> CauseBreakdown:
    if isinstance(records_or_counts, Mapping):
        sources = [records_or_counts]
    else:
        sources = [r.ww_cause_counts or {} for r in records_or_counts]
    counts = {c.value: 0 for c in Cause}
    for src in sources:
        for cause, n in src.items():
            key = cause.value if isinstance(cause, Cause) else str(cause).lower()
            counts[key] = counts.get(key, 0) + int(n)
    total = sum(counts.values())
    pct = {c: (100.0 * n / total if total else 0.0) for c, n in counts.items()}
    return CauseBreakdown(counts, pct, total)


def aggregate_sources(records: Iterable[BlockMetricsRecord]) -> dict[str, dict[str, int]]:
    """Per-address write-write conflict counts by cause, summed over records."""
    out: dict[str, dict[str, int]] = {}
    for r in records:
        for addr, per in (r.ww_sources or {}).items():
            slot = out.setdefault(addr, {})
            for cause, n in per.items():
                slot[cause] = slot.get(cause, 0) + int(n)
    return out


def _normalize_attributions(attributions) -> dict[str, dict[str, int]]:
    if isinstance(attributions, Counter) or (
        attributions and isinstance(next(iter(attributions)), tuple)
    ):
        out: dict[str, dict[str, int]] = {}
        for (addr, cause), n in attributions.items():
            key = cause.value if isinstance(cause, Cause) else str(cause)
            per = out.setdefault(addr, {})
            per[key] = per.get(key, 0) + n
        return out
    out = {}
    for addr, v in attributions.items():
        out[addr] = dict(v) if isinstance(v, Mapping) else {"total": int(v)}
    return out


@dataclass
class SourceRow:
    address: str
    total: int
    per_cause: dict[str, int]


def top_conflict_sources(attributions, k: int) -> tuple[list[SourceRow], float]:
    """Top ``k`` addresses by conflict count, and their share of the grand total.

    ``attributions`` is either ``{address: {cause: count}}``,
    ``{address: count}`` or a Counter keyed by ``(address, cause)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    per = _normalize_attributions(attributions)
    rows = [SourceRow(a, sum(c.values()), c) for a, c in per.items()]
    rows.sort(key=lambda r: (-r.total, r.address))
    grand = sum(r.total for r in rows)
    top = rows[:k]
    share = sum(r.total for r in top) / grand if grand else 0.0
    return top, share


def hill_estimator(values, k: int) -> float:
    """Hill estimate over the top ``k`` order statistics (reciprocal tail index)."""
    if k < 1:
        raise InsufficientDataError("k must be >= 1")
    x = np.sort(np.asarray(values, dtype=float))[::-1]
    if len(x) < k + 1 or not np.all(np.isfinite(x[: k + 1])) or x[k] <= 0:
        positives = int(np.sum(x > 0))
        raise InsufficientDataError(f"hill estimator with k={k} needs more than {k} positive values, got {positives}")
    return float(np.mean(np.log(x[:k] / x[k])))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    try:
        path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def render_band_svg(groups: Sequence[QuantileGroup], title: str, x_label: str, y_label: str) -> str:
    """Median lines with shaded low/high bands, one colour per group."""
    w, h, ml, mr, mt, mb = 640, 420, 70, 150, 40, 50
    xs = [r.x for g in groups for r in g.rows]
    ys = [v for g in groups for r in g.rows for v in (r.low, r.high, r.median)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(x):
        return ml + (x - x0) / (x1 - x0) * (w - ml - mr)

    def py(y):
        return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb)

    def pt(x, y):
        return f"{px(x):.2f},{py(y):.2f}"

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{h - mb}" x2="{w - mr}" y2="{h - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{h - mb}" stroke="black"/>',
        f'<text x="{(ml + w - mr) / 2:.1f}" y="{h - 12}" text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="16" y="{(mt + h - mb) / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(mt + h - mb) / 2:.1f})">{y_label}</text>',
    ]
    for v, anchor, x, y in (
        (x0, "start", ml, h - mb + 16),
        (x1, "end", w - mr, h - mb + 16),
    ):
        parts.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" font-size="10">{v:.4g}</text>')
    for v, y in ((y0, h - mb), (y1, mt + 4)):
        parts.append(f'<text x="{ml - 4}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.4g}</text>')
    for i, g in enumerate(groups):
        color = _PALETTE[i % len(_PALETTE)]
        if g.rows:
            upper = [pt(r.x, r.high) for r in g.rows]
            lower = [pt(r.x, r.low) for r in reversed(g.rows)]
            parts.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
            parts.append(
                f'<polyline points="{" ".join(pt(r.x, r.median) for r in g.rows)}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = mt + 16 * i + 8
        parts.append(f'<rect x="{w - mr + 12}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{w - mr + 26}" y="{ly + 1}" font-family="sans-serif" font-size="11">tx &#8805; {g.label} (n={g.size})</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(
    records: Sequence[BlockMetricsRecord],
    out_dir,
    bucket_width: int = DEFAULT_BUCKET_WIDTH,
    groups: int = 4,
    band: float = DEFAULT_BAND,
    graph: str = "prestate_rw",
    metrics: Sequence[str] = FIGURE_METRICS,
    hill_k: int = 100,
    top_k: int = 10,
) -> list[Path]:
    """Write every table and chart for ``records`` into ``out_dir``.

    Output depends only on the inputs, so reruns are byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=lambda r: r.block_number)
    written: list[Path] = []
    if not records:
        log.warning("no records; writing empty tables")

    written.append(
        _write_csv(out / "block_size_histogram.csv", ["bucket_start", "count"], block_size_histogram(records, bucket_width))
    )

    bd = ww_cause_breakdown(records)
    written.append(
        _write_csv(
            out / "ww_causes.csv",
            ["cause", "count", "percent"],
            [(c.value, bd.counts[c.value], bd.percentages[c.value]) for c in Cause] if records else [],
        )
    )

    sources = aggregate_sources(records)
    top, share = top_conflict_sources(sources, top_k) if sources else ([], 0.0)
    grand = sum(sum(v.values()) for v in sources.values())
    rows, running = [], 0
    for rank, row in enumerate(top, 1):
        running += row.total
        rows.append(
            [rank, row.address, row.total] + [row.per_cause.get(c.value, 0) for c in Cause] + [running / grand]
        )
    written.append(
        _write_csv(out / "top_sources.csv", ["rank", "address", "total"] + [c.value for c in Cause] + ["cumulative_share"], rows)
    )

    totals = sorted(sum(v.values()) for v in sources.values())
    tail_rows = []
    if totals:
        try:
            hill = hill_estimator(totals, hill_k)
        except InsufficientDataError:
            hill = None
        tail_rows.append(
            [len(totals), sum(totals), nearest_rank(totals, 50), nearest_rank(totals, 95), sum(totals) / len(totals), hill_k, hill, share]
        )
    written.append(
        _write_csv(
            out / "tail_stats.csv",
            ["addresses", "conflicts", "median", "p95", "mean", "hill_k", "hill", f"top{top_k}_share"],
            tail_rows,
        )
    )

    written.append(
        _write_csv(
            out / "call_metrics.csv",
            ["block_number", "tx_count", "value_transfer_ratio", "node_count", "height", "mean_degree", "leaf_count"],
            [
                [r.block_number, r.tx_count, r.value_transfer_ratio]
                + [(r.tree_means or {}).get(k) for k in ("node_count", "height", "mean_degree", "leaf_count")]
                for r in records
            ],
        )
    )

    if not records:
        return written
    for metric in metrics:
        series = quantile_series(records, metric, groups, graph=graph, band=band)
        for i, g in enumerate(series):
            written.append(
                _write_csv(
                    out / f"quantile_{graph}_{metric}_g{i}_tx{g.label}.csv",
                    ["density", "median", f"p{band:g}", f"p{100 - band:g}", "count"],
                    [(r.x, r.median, r.low, r.high, r.count) for r in g.rows],
                )
            )
        svg = out / f"quantile_{graph}_{metric}.svg"
        svg.write_text(render_band_svg(series, f"{graph} {metric}", "density", metric), encoding="utf-8")
        written.append(svg)
    return written
