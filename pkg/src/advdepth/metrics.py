"""Depth evaluation metrics with masking and semantic-area breakdown.

Six numbers per report: absolute relative difference, RMSE (meters),
RMSE of natural-log depths, mean absolute base-10 log difference, and the
three threshold accuracies delta_k = fraction of pixels whose worse-side
ratio max(y/y*, y*/y) is strictly below 1.25^k.

Aggregation is pixel-level across the whole evaluation set (every valid
pixel counts once, images are not averaged separately); a per-image-mean
mode exists behind a flag. Partial sums use compensated (Kahan) summation
so the reduction order cannot shift results beyond ~1e-15.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import CLASS_NAMES, DepthMap, LabeledSample, ValidityMask, mask_for_profile

__all__ = [
    "MetricReport",
    "MetricAccumulator",
    "compute_metrics",
    "evaluate_model",
    "semantic_breakdown",
    "report_to_json",
    "report_from_json",
    "CSV_HEADER",
    "report_to_csv_row",
]

METRIC_KEYS = ("rel", "rmse", "rmse_log", "log10", "delta1", "delta2", "delta3")
CSV_HEADER = METRIC_KEYS + ("n_pixels",)


@dataclass
class MetricReport:
    rel: float
    rmse: float
    rmse_log: float
    log10: float
    delta1: float
    delta2: float
    delta3: float
    n_pixels: int
    areas: dict[str, "MetricReport"] = field(default_factory=dict)

    def __post_init__(self):
        for k in METRIC_KEYS[:4]:
            if getattr(self, k) < 0:
                raise ValueError(f"{k} must be nonnegative, got {getattr(self, k)}")
        d = (self.delta1, self.delta2, self.delta3)
        if not (0.0 <= d[0] <= d[1] <= d[2] <= 1.0):
            raise ValueError(f"threshold accuracies must be monotone in [0,1], got {d}")
        if self.n_pixels < 1:
            raise ValueError("a report needs at least one valid pixel")


class _Kahan:
    """Compensated scalar accumulator."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t


def _flat_valid(pred, gt, mask):
    p = pred.depth if isinstance(pred, DepthMap) else np.asarray(pred, dtype=np.float64)
    g = gt.depth if isinstance(gt, DepthMap) else np.asarray(gt, dtype=np.float64)
    m = mask.mask if isinstance(mask, ValidityMask) else np.asarray(mask, dtype=bool)
    if p.shape != g.shape or p.shape != m.shape:
        raise ValueError(f"shape mismatch: pred {p.shape}, gt {g.shape}, mask {m.shape}")
    pv, gv = p[m], g[m]
    if pv.size == 0:
        raise ValueError("no valid pixels under the mask")
    if np.any(gv <= 0) or np.any(pv <= 0):
        raise ValueError("valid pixels must have strictly positive depths")
    return pv, gv


class MetricAccumulator:
    """Streaming pixel-level aggregation over many (pred, gt, mask) chunks."""

    def __init__(self):
        self._sums = {k: _Kahan() for k in ("rel", "sq", "logsq", "l10")}
        self._counts = [0, 0, 0]  # below 1.25, 1.25^2, 1.25^3
        self.n = 0

    def add(self, pred, gt, mask):
        pv, gv = _flat_valid(pred, gt, mask)
        self._sums["rel"].add(float(np.sum(np.abs(pv - gv) / gv)))
        self._sums["sq"].add(float(np.sum((pv - gv) ** 2)))
        dlog = np.log(pv) - np.log(gv)
        self._sums["logsq"].add(float(np.sum(dlog * dlog)))
        self._sums["l10"].add(float(np.sum(np.abs(np.log10(pv) - np.log10(gv)))))
        ratio = np.maximum(pv / gv, gv / pv)
        for k in range(3):
            self._counts[k] += int(np.sum(ratio < 1.25 ** (k + 1)))
        self.n += pv.size
        return self

    def report(self) -> MetricReport:
        if self.n == 0:
            raise ValueError("no valid pixels accumulated")
        n = float(self.n)
        return MetricReport(
            rel=self._sums["rel"].s / n,
            rmse=math.sqrt(self._sums["sq"].s / n),
            rmse_log=math.sqrt(self._sums["logsq"].s / n),
            log10=self._sums["l10"].s / n,
            delta1=self._counts[0] / n,
            delta2=self._counts[1] / n,
            delta3=self._counts[2] / n,
            n_pixels=self.n,
        )


def compute_metrics(pred, gt, mask, per_image: bool = False) -> MetricReport:
    """All six metrics over the valid pixels of one or more depth maps.

    per_image=True averages each metric over per-image reports instead of
    pooling pixels (some published protocols do this); the batch dimension
    must then be explicit (pred.ndim >= 3).
    """
    if per_image:
        p = np.asarray(pred, dtype=np.float64)
        if p.ndim < 3:
            raise ValueError("per-image averaging needs a batch dimension")
        g = np.asarray(gt, dtype=np.float64)
        m = np.asarray(mask, dtype=bool)
        reports = [compute_metrics(p[i], g[i], m[i]) for i in range(p.shape[0])]
        k = len(reports)
        return MetricReport(
            rel=sum(r.rel for r in reports) / k,
            rmse=sum(r.rmse for r in reports) / k,
            rmse_log=sum(r.rmse_log for r in reports) / k,
            log10=sum(r.log10 for r in reports) / k,
            delta1=sum(r.delta1 for r in reports) / k,
            delta2=sum(r.delta2 for r in reports) / k,
            delta3=sum(r.delta3 for r in reports) / k,
            n_pixels=sum(r.n_pixels for r in reports),
        )
    return MetricAccumulator().add(pred, gt, mask).report()


def evaluate_model(g, dataset: list[LabeledSample], profile: str = "positive",
                   batch_size: int = 8) -> MetricReport:
    """Generator (eval mode) over a labeled set, profile-masked, one report."""
    from .models import generator_forward

    if len(dataset) == 0:
        raise ValueError("empty evaluation set")
    acc = MetricAccumulator()
    for start in range(0, len(dataset), batch_size):
        chunk = dataset[start : start + batch_size]
        x = np.stack([s.image.pixels.transpose(2, 0, 1) for s in chunk])
        pred = generator_forward(g, x, mode="eval")[:, 0]
        for i, s in enumerate(chunk):
            m = s.mask.mask & mask_for_profile(s.depth, profile).mask
            acc.add(pred[i], s.depth.depth, m)
    return acc.report()


def semantic_breakdown(pred, gt, mask, semantic) -> dict[str, MetricReport]:
    """Per-area reports over {floor, structure, props, furniture, missing}.

    Areas with zero valid pixels are simply absent. The 'overall' entry is
    the report over the union of all areas (= the plain masked report).
    """
    sem = np.asarray(semantic)
    m = mask.mask if isinstance(mask, ValidityMask) else np.asarray(mask, dtype=bool)
    out: dict[str, MetricReport] = {}
    for cid, name in enumerate(CLASS_NAMES):
        area_mask = m & (sem == cid)
        if not area_mask.any():
            continue
        out[name] = compute_metrics(pred, gt, area_mask)
    out["overall"] = compute_metrics(pred, gt, m)
    return out


# -- serialization -----------------------------------------------------------------


def report_to_json(report: MetricReport, path: str | None = None) -> str:
    doc = {k: getattr(report, k) for k in CSV_HEADER}
    if report.areas:
        doc["areas"] = {
            name: {k: getattr(r, k) for k in CSV_HEADER}
            for name, r in report.areas.items()
        }
    text = json.dumps(doc, indent=2)
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text


def report_from_json(text: str) -> MetricReport:
    doc = json.loads(text)
    areas = {
        name: MetricReport(**vals) for name, vals in doc.pop("areas", {}).items()
    }
    return MetricReport(**doc, areas=areas)


def report_to_csv_row(report: MetricReport, label: str = "") -> str:
    cells = [f"{getattr(report, k):.6f}" for k in METRIC_KEYS]
    cells.append(str(report.n_pixels))
    return ",".join(([label] if label else []) + cells)
