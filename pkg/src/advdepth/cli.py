"""Command-line entry point.

    advdepth <synth|train|eval|sweep|adapt> --config FILE [--key value ...]

Every command reads one JSON config file, applies any --key value overrides
(dotted keys reach nested fields, values are parsed as JSON when possible),
and writes the fully resolved configuration next to its outputs as
resolved_config.json — rerunning a command with that file reproduces the run.
Relative out_dir paths resolve under $ADVDEPTH_OUT_ROOT when it is set.
Input directories are never modified.

Exit codes: 0 success, 2 configuration error, 3 data error (missing or
damaged inputs), 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

from .checkpoint import CheckpointError
from .data import UnlabeledSample, load_dataset, save_dataset, synth_scene
from .experiments import run_adapt, run_sweep
from .metrics import report_to_csv_row, report_to_json, evaluate_model, CSV_HEADER
from .models import generator_forward
from .trainer import config_from_dict, config_to_dict, TrainConfig, train, \
    load_train_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

OUT_ROOT_ENV = "ADVDEPTH_OUT_ROOT"


class ConfigError(Exception):
    """Bad configuration: unknown keys, invalid values, unreadable config file."""


class DataError(Exception):
    """Missing or damaged inputs: datasets, checkpoints, result files."""


@dataclass
class ExperimentConfig:
    """A fully resolved run: the command plus every parameter it used.

    Written next to each command's outputs as resolved_config.json; feeding
    that file back through --config replays the run.
    """

    command: str
    params: dict = field(default_factory=dict)

    def save(self, path: str):
        with open(path, "w") as f:
            json.dump({"command": self.command, **self.params}, f,
                      indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as f:
            doc = json.load(f)
        return cls(command=doc.pop("command", ""), params=doc)


# -- config plumbing ----------------------------------------------------------------


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_overrides(tokens: list[str]) -> dict:
    """--a.b.c value pairs into a nested dict; values parsed as JSON if possible."""
    if len(tokens) % 2 != 0:
        raise ConfigError(f"overrides must come in --key value pairs, got {tokens}")
    out: dict = {}
    for flag, raw in zip(tokens[::2], tokens[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"expected an option starting with --, got {flag!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        *parents, leaf = flag[2:].split(".")
        for p in parents:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {flag} descends through a scalar")
        node[leaf] = value
    return out


def load_config(path: str, overrides: dict) -> dict:
    try:
        with open(path) as f:
            cfg = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    cfg.pop("command", None)  # resolved configs carry their command name
    return deep_merge(cfg, overrides)


def resolve_out(path: str) -> str:
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def write_resolved(command: str, cfg: dict, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    ExperimentConfig(command, cfg).save(os.path.join(out_dir,
                                                     "resolved_config.json"))


def _require(cfg: dict, key: str, command: str):
    if key not in cfg or cfg[key] in (None, ""):
        raise ConfigError(f"{command} requires config key {key!r}")
    return cfg[key]


def _train_config(cfg: dict) -> TrainConfig:
    merged = deep_merge(config_to_dict(TrainConfig()), cfg.get("train", {}))
    try:
        return config_from_dict(merged)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid train config: {e}")


def _load_split(path: str, what: str = "dataset"):
    try:
        return load_dataset(path)
    except (FileNotFoundError, ValueError, KeyError, OSError) as e:
        raise DataError(f"cannot load {what} from {path}: {e}")


def _load_state(path: str):
    try:
        return load_train_state(path)
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}")
    except CheckpointError as e:
        raise DataError(str(e))


# -- commands -----------------------------------------------------------------------

SYNTH_DEFAULTS = {
    "out_dir": None,
    "n_labeled": 8,
    "n_unlabeled": 0,
    "size": [64, 64],
    "seed": 0,
    "n_boxes": None,
    "depth_scale": 0.001,
    "profile": "identity",
    "force": False,
}


def cmd_synth(cfg: dict) -> int:
    cfg = deep_merge(SYNTH_DEFAULTS, cfg)
    out_dir = resolve_out(_require(cfg, "out_dir", "synth"))
    if cfg["n_labeled"] < 0 or cfg["n_unlabeled"] < 0:
        raise ConfigError("sample counts must be >= 0")
    if os.path.isdir(out_dir) and os.listdir(out_dir) and not cfg["force"]:
        raise DataError(f"output directory {out_dir} is not empty; "
                        "pass --force true to overwrite")
    size = tuple(cfg["size"])
    seed, n_boxes = int(cfg["seed"]), cfg["n_boxes"]
    labeled = [synth_scene(seed + i, size=size, n_boxes=n_boxes)
               for i in range(int(cfg["n_labeled"]))]
    unlabeled = [UnlabeledSample(synth_scene(seed + 10_000 + j, size=size,
                                             n_boxes=n_boxes).image)
                 for j in range(int(cfg["n_unlabeled"]))]
    save_dataset(out_dir, labeled, unlabeled, depth_scale=float(cfg["depth_scale"]),
                 profile=cfg["profile"])
    write_resolved("synth", cfg, out_dir)
    print(f"synth: wrote {len(labeled)} labeled + {len(unlabeled)} unlabeled "
          f"samples to {out_dir}")
    return EXIT_OK


def cmd_train(cfg: dict) -> int:
    data_dir = _require(cfg, "data_dir", "train")
    out_dir = resolve_out(_require(cfg, "out_dir", "train"))
    train_cfg = _train_config(cfg)
    split = _load_split(data_dir)
    resume = cfg.get("resume")
    if resume is not None:
        _load_state(resume)  # surface data errors before any output is written
    cfg_full = dict(cfg)
    cfg_full["train"] = config_to_dict(train_cfg)
    write_resolved("train", cfg_full, out_dir)
    state = train(train_cfg, split, out_dir=out_dir, resume=resume)
    from .plots import plot_convergence, plot_val_curve

    plot_convergence(os.path.join(out_dir, "log.csv"),
                     os.path.join(out_dir, "convergence.png"))
    if state.val_history:
        plot_val_curve(os.path.join(out_dir, "val.csv"),
                       os.path.join(out_dir, "val_curve.png"))
    print(f"train: {state.step} steps over {state.epochs_done} epochs -> {out_dir}")
    return EXIT_OK


EVAL_DEFAULTS = {
    "data_dir": None,
    "checkpoint": None,
    "out_dir": None,
    "profile": "positive",
    "batch_size": 8,
    "visualize": 0,
}


def cmd_eval(cfg: dict) -> int:
    cfg = deep_merge(EVAL_DEFAULTS, cfg)
    data_dir = _require(cfg, "data_dir", "eval")
    out_dir = resolve_out(_require(cfg, "out_dir", "eval"))
    state = _load_state(_require(cfg, "checkpoint", "eval"))
    split = _load_split(data_dir)
    if len(split.labeled) == 0:
        raise DataError(f"{data_dir} has no labeled samples to evaluate")
    report = evaluate_model(state.g, split.labeled, profile=cfg["profile"],
                            batch_size=int(cfg["batch_size"]))
    os.makedirs(out_dir, exist_ok=True)
    report_to_json(report, os.path.join(out_dir, "report.json"))
    with open(os.path.join(out_dir, "report.csv"), "w") as f:
        f.write("label," + ",".join(CSV_HEADER) + "\n")
        f.write(report_to_csv_row(report, label="overall") + "\n")
    n_vis = min(int(cfg["visualize"]), len(split.labeled))
    if n_vis > 0:
        from .plots import depth_to_png

        vis_dir = os.path.join(out_dir, "vis")
        os.makedirs(vis_dir, exist_ok=True)
        for i in range(n_vis):
            s = split.labeled[i]
            x = s.image.pixels.transpose(2, 0, 1)[None]
            pred = generator_forward(state.g, x, mode="eval")[0, 0]
            depth_to_png(pred, os.path.join(vis_dir, f"pred_{i:03d}.png"))
            depth_to_png(s.depth.depth, os.path.join(vis_dir, f"gt_{i:03d}.png"))
    write_resolved("eval", cfg, out_dir)
    print(f"eval: rmse={report.rmse:.4f} rel={report.rel:.4f} "
          f"delta1={report.delta1:.4f} over {report.n_pixels} pixels -> {out_dir}")
    return EXIT_OK


SWEEP_DEFAULTS = {
    "kind": None,
    "values": None,
    "data_dir": None,
    "eval_dir": None,
    "out_dir": None,
    "eval_profile": "positive",
    "train": {},
}


def cmd_sweep(cfg: dict) -> int:
    cfg = deep_merge(SWEEP_DEFAULTS, cfg)
    kind = _require(cfg, "kind", "sweep")
    values = _require(cfg, "values", "sweep")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep values must be a non-empty list")
    out_dir = resolve_out(_require(cfg, "out_dir", "sweep"))
    train_cfg = _train_config(cfg)  # validates the base train settings
    split = _load_split(_require(cfg, "data_dir", "sweep"))
    eval_split = _load_split(_require(cfg, "eval_dir", "sweep"), "eval dataset")
    if len(eval_split.labeled) == 0:
        raise DataError("sweep eval_dir has no labeled samples")
    base_train = config_to_dict(train_cfg)
    cfg_full = dict(cfg)
    cfg_full["train"] = base_train
    write_resolved("sweep", cfg_full, out_dir)
    try:
        points = run_sweep(kind, values, base_train, split, eval_split.labeled,
                           out_dir, eval_profile=cfg["eval_profile"])
    except ValueError as e:
        raise ConfigError(str(e))
    for p in points:
        print(f"sweep[{kind}={p.value}]: rmse={p.report.rmse:.4f} "
              f"rel={p.report.rel:.4f}")
    from .plots import plot_sweep

    for metric in ("rmse", "rel", "delta1"):
        plot_sweep(os.path.join(out_dir, "results.csv"),
                   os.path.join(out_dir, f"sweep_{metric}.png"), metric=metric)
    print(f"sweep: results in {os.path.join(out_dir, 'results.csv')}")
    return EXIT_OK


ADAPT_DEFAULTS = {
    "source_dir": None,
    "target_dir": None,
    "out_dir": None,
    "eval_profile": "positive",
    "train": {},
}


def cmd_adapt(cfg: dict) -> int:
    cfg = deep_merge(ADAPT_DEFAULTS, cfg)
    out_dir = resolve_out(_require(cfg, "out_dir", "adapt"))
    train_cfg = _train_config(cfg)
    source = _load_split(_require(cfg, "source_dir", "adapt"), "source dataset")
    target = _load_split(_require(cfg, "target_dir", "adapt"), "target dataset")
    base_train = config_to_dict(train_cfg)
    cfg_full = dict(cfg)
    cfg_full["train"] = base_train
    write_resolved("adapt", cfg_full, out_dir)
    try:
        state, report = run_adapt(source, target, base_train, out_dir,
                                  eval_profile=cfg["eval_profile"])
    except ValueError as e:
        raise DataError(str(e))
    report_to_json(report, os.path.join(out_dir, "report.json"))
    print(f"adapt: target rmse={report.rmse:.4f} rel={report.rel:.4f} "
          f"delta1={report.delta1:.4f} -> {out_dir}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "adapt": cmd_adapt,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="advdepth",
        description="Semi-supervised adversarial monocular depth estimation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config, parse_overrides(extra))
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        raise
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
