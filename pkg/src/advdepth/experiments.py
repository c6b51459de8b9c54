"""Experiment orchestration: parameter sweeps and cross-dataset adaptation.

A sweep retrains the model once per grid point and evaluates each run on a
fixed held-out set. Every point gets its own seed derived by hashing the grid
value, so reordering or re-running a partially finished sweep cannot change
any individual result; finished points are read back from results.csv and
skipped.
"""

from __future__ import annotations

import hashlib
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .data import (
    DatasetSplit,
    DepthMap,
    Image,
    LabeledSample,
    UnlabeledSample,
    ValidityMask,
)
from .losses import BASELINE_KINDS
from .metrics import CSV_HEADER, MetricReport, evaluate_model
from .trainer import TrainConfig, config_from_dict, config_to_dict, train

__all__ = [
    "SWEEP_KINDS",
    "SweepPoint",
    "point_seed",
    "subset_split",
    "sweep_point_config",
    "run_sweep",
    "random_crop_labeled",
    "run_adapt",
]

SWEEP_KINDS = ("label_count", "unlabeled_count", "loss_kind", "lambda")

RESULTS_HEADER = ("kind", "value", "seed") + CSV_HEADER


@dataclass
class SweepPoint:
    kind: str
    value: object
    seed: int
    report: MetricReport


def point_seed(base_seed: int, kind: str, value) -> int:
    """Per-point seed: stable hash of the grid value mixed with the base seed."""
    digest = hashlib.sha256(f"{kind}:{value!r}".encode("utf-8")).digest()
    salt = int.from_bytes(digest[:4], "little")
    return int(np.random.SeedSequence([base_seed, salt]).generate_state(1)[0])


def subset_split(split: DatasetSplit, n_labeled: int | None = None,
                 n_unlabeled: int | None = None, seed: int = 0) -> DatasetSplit:
    """Seeded without-replacement subset of a dataset split (order preserved)."""
    labeled, unlabeled = split.labeled, split.unlabeled
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B5]))
    if n_labeled is not None:
        if not 1 <= n_labeled <= len(labeled):
            raise ValueError(f"label_count {n_labeled} outside 1..{len(labeled)}")
        idx = np.sort(rng.choice(len(labeled), size=n_labeled, replace=False))
        labeled = [labeled[int(i)] for i in idx]
    if n_unlabeled is not None:
        if not 0 <= n_unlabeled <= len(unlabeled):
            raise ValueError(
                f"unlabeled_count {n_unlabeled} outside 0..{len(unlabeled)}")
        idx = np.sort(rng.choice(len(unlabeled), size=n_unlabeled, replace=False))
        unlabeled = [unlabeled[int(i)] for i in idx]
    return DatasetSplit(labeled, unlabeled, seed=split.seed)


def sweep_point_config(base_train: dict, kind: str, value,
                       seed: int) -> tuple[TrainConfig, dict]:
    """TrainConfig for one grid point plus the split restrictions it implies."""
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}; choose from {SWEEP_KINDS}")
    d = config_to_dict(config_from_dict(base_train))
    d["seed"] = seed
    restrict = {}
    if kind == "lambda":
        if not 0.0 <= float(value) <= 1.0:
            raise ValueError(f"lambda grid value {value} outside [0, 1]")
        d["weights"]["lam"] = float(value)
    elif kind == "loss_kind":
        if value not in BASELINE_KINDS:
            raise ValueError(f"loss_kind {value!r} not in {BASELINE_KINDS}")
        d["mode"] = "supervised"
        d["supervised_loss"] = value
    elif kind == "label_count":
        restrict["n_labeled"] = int(value)
    else:  # unlabeled_count
        restrict["n_unlabeled"] = int(value)
    return config_from_dict(d), restrict


def _read_done(path: str) -> set[str]:
    if not os.path.exists(path):
        return set()
    rows = open(path).read().strip().split("\n")[1:]
    return {r.split(",")[1] for r in rows if r}


def run_sweep(kind: str, values, base_train: dict, split: DatasetSplit,
              eval_samples: list[LabeledSample], out_dir: str,
              eval_profile: str = "positive") -> list[SweepPoint]:
    """Train/evaluate one run per grid value, appending rows to results.csv.

    Rows are flushed as soon as each point finishes, and values that already
    have a row are skipped, so an interrupted sweep keeps its partial results
    and can simply be rerun.
    """
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    done = _read_done(results_path)
    fresh = not os.path.exists(results_path)
    points: list[SweepPoint] = []
    with open(results_path, "a") as results:
        if fresh:
            results.write(",".join(RESULTS_HEADER) + "\n")
            results.flush()
        for value in values:
            if str(value) in done:
                continue
            seed = point_seed(int(base_train.get("seed", 0)), kind, value)
            cfg, restrict = sweep_point_config(base_train, kind, value, seed)
            point_split = subset_split(split, seed=seed, **restrict) if restrict \
                else split
            point_dir = os.path.join(out_dir, f"point_{value}")
            state = train(cfg, point_split, out_dir=point_dir)
            report = evaluate_model(state.g, eval_samples, profile=eval_profile)
            row = [kind, str(value), str(seed)]
            row += [repr(float(getattr(report, k))) for k in CSV_HEADER[:-1]]
            row.append(str(report.n_pixels))
            results.write(",".join(row) + "\n")
            results.flush()
            points.append(SweepPoint(kind, value, seed, report))
    return points


# -- adaptation ---------------------------------------------------------------------


def random_crop_labeled(s: LabeledSample, size: tuple[int, int],
                        rng: np.random.Generator) -> LabeledSample:
    """Random spatial crop of every aligned plane of a labeled sample."""
    h, w = s.depth.depth.shape
    th, tw = size
    if th > h or tw > w:
        raise ValueError(f"crop {size} larger than sample ({h}, {w})")
    top = int(rng.integers(0, h - th + 1))
    left = int(rng.integers(0, w - tw + 1))
    sl = (slice(top, top + th), slice(left, left + tw))
    return LabeledSample(
        image=Image(s.image.pixels[sl].copy(), normalized=s.image.normalized,
                    source_bit_depth=s.image.source_bit_depth),
        depth=DepthMap(s.depth.depth[sl].copy(), range_hint=s.depth.range_hint),
        mask=ValidityMask(s.mask.mask[sl].copy()),
        semantic=None if s.semantic is None else s.semantic[sl].copy(),
    )


def run_adapt(source: DatasetSplit, target: DatasetSplit, base_train: dict,
              out_dir: str, eval_profile: str = "positive"):
    """Adapt to a new scene domain: source labels + target images, no target labels.

    Source labeled samples are randomly cropped to the target image size, the
    semi-supervised loop trains against the target's unlabeled pool, and the
    target's labeled samples serve purely as the held-out evaluation set. An
    empty target pool degenerates to supervised source-only training (warned).
    """
    if len(target.labeled) == 0:
        raise ValueError("adaptation needs held-out labeled target samples to score")
    if len(target.unlabeled) == 0:
        warnings.warn("target pool is empty; degenerating to supervised "
                      "source-only training")
        cfg = config_from_dict(dict(base_train, mode="supervised"))
        t_img = target.labeled[0].image.pixels
    else:
        cfg = config_from_dict(dict(base_train, mode="semi"))
        t_img = target.unlabeled[0].image.pixels
    size = (t_img.shape[0], t_img.shape[1])
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xADA]))
    src_hw = source.labeled[0].depth.depth.shape
    if src_hw == size:
        cropped = source.labeled
    else:
        cropped = [random_crop_labeled(s, size, rng) for s in source.labeled]
    combined = DatasetSplit(cropped, target.unlabeled)
    state = train(cfg, combined, out_dir=out_dir)
    report = evaluate_model(state.g, target.labeled, profile=eval_profile)
    return state, report
