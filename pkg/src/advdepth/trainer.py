"""Alternating adversarial training loop for the depth generator.

Two phases alternate within every epoch of the semi-supervised mode: a
supervised step on a labeled batch (beta-weighted masked L1 plus the
adversarial blend) and a semi-supervised step on an unlabeled batch
(adversarial feedback only, no regression term). Each step updates the
generator first, then the pair discriminator, then the depth discriminator,
one Adam step apiece. The plain "supervised" mode is the regression-only
baseline: no discriminators, one configurable regression loss.

Determinism contract: all shuffling, real-pool draws and the validation
holdout derive from SeedSequence([seed, epoch, stream]) with a dedicated
stream per consumer (0 labeled order, 1 unlabeled order, 2 pair-disc pool,
3 depth-disc pool, 4 holdout). No generator outlives its epoch, so a run
resumed from an epoch-boundary checkpoint replays the remaining epochs
bit-for-bit.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor, concat
from .checkpoint import CheckpointCorruptionError, load_checkpoint, save_checkpoint
from .data import DatasetSplit, _epoch_rng, collate_labeled, collate_unlabeled, epoch_plan
from .losses import (
    BASELINE_KINDS,
    LossValue,
    LossWeights,
    baseline_loss,
    beta_at,
    loss_dd,
    loss_g_dd,
    loss_g_pd,
    loss_g_semi,
    loss_g_sup,
    loss_pd,
    masked_l1,
)
from .models import (
    DiscriminatorSpec,
    GeneratorSpec,
    Network,
    build_depth_discriminator,
    build_generator,
    build_pair_discriminator,
    forward_padded_t,
    generator_forward,
    init_params,
)

__all__ = [
    "TrainConfig",
    "TrainState",
    "AdamState",
    "PlateauDetector",
    "adam_step",
    "config_to_dict",
    "config_from_dict",
    "init_state",
    "warmup_generator",
    "train_step_supervised",
    "train_step_semi",
    "train_step_regression",
    "train",
    "save_train_state",
    "load_train_state",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("step", "epoch", "phase", "loss_g", "loss_g_pd", "loss_g_dd",
               "loss_l1", "loss_pd", "loss_dd", "lr")

_POOL_PD_STREAM = 2
_POOL_DD_STREAM = 3
_HOLDOUT_STREAM = 4


# -- configuration ------------------------------------------------------------------


@dataclass
class TrainConfig:
    mode: str = "semi"  # "semi" (adversarial) | "supervised" (regression baseline)
    discriminators: str = "both"  # "both" | "pair_only" | "depth_only"
    epochs: int = 20
    warmup_epochs: int = 1  # L1-only generator epochs before the adversarial phases
    batch_size: int = 8
    lr: float = 2e-4
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    lr_decay_factor: float | None = None  # None disables the step-decay schedule
    lr_decay_every: int = 100
    weights: LossWeights = field(default_factory=LossWeights)
    supervised_loss: str = "l1"  # regression loss used by the baseline mode
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    pair_disc: DiscriminatorSpec = field(default_factory=lambda: DiscriminatorSpec(4))
    depth_disc: DiscriminatorSpec = field(default_factory=lambda: DiscriminatorSpec(1))
    init_scheme: str = "normal_002"
    convergence: str = "fixed_epochs"  # "fixed_epochs" | "plateau"
    plateau_window: int = 5
    plateau_tol: float = 1e-4
    val_fraction: float = 0.1  # labeled holdout used for the validation curve
    checkpoint_every: int = 0  # epochs between snapshots; 0 keeps only the final one
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("semi", "supervised"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.discriminators not in ("both", "pair_only", "depth_only"):
            raise ValueError(f"unknown discriminator setting {self.discriminators!r}")
        if self.convergence not in ("fixed_epochs", "plateau"):
            raise ValueError(f"unknown convergence rule {self.convergence!r}")
        if self.supervised_loss not in BASELINE_KINDS:
            raise ValueError(f"unknown supervised loss {self.supervised_loss!r}")
        if self.epochs < 1 or self.batch_size < 1 or self.warmup_epochs < 0:
            raise ValueError("epochs/batch_size must be >= 1, warmup_epochs >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        if self.pair_disc.in_channels != 4 or self.depth_disc.in_channels != 1:
            raise ValueError("pair_disc takes 4 input channels, depth_disc takes 1")


def config_to_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


def config_from_dict(d: dict) -> TrainConfig:
    d = dict(d)
    d["betas"] = tuple(d["betas"])
    d["weights"] = LossWeights(**d["weights"])
    g = dict(d["generator"])
    g["depth_range"] = tuple(g["depth_range"])
    d["generator"] = GeneratorSpec(**g)
    for key in ("pair_disc", "depth_disc"):
        s = dict(d[key])
        for f in ("channels", "kernels", "strides"):
            s[f] = tuple(s[f])
        d[key] = DiscriminatorSpec(**s)
    return TrainConfig(**d)


# -- optimizer ----------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "AdamState":
        return cls(m={k: np.zeros_like(v) for k, v in params.items()},
                   v={k: np.zeros_like(v) for k, v in params.items()})


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, betas=(0.9, 0.999), eps=1e-8):
    """One in-place Adam update with bias correction."""
    state.t += 1
    b1, b2 = betas
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for k, grad in grads.items():
        state.m[k] = b1 * state.m[k] + (1 - b1) * grad
        state.v[k] = b2 * state.v[k] + (1 - b2) * grad * grad
        params[k] -= lr * (state.m[k] / c1) / (np.sqrt(state.v[k] / c2) + eps)


def _grads(tensor_params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: (t.grad if t.grad is not None else np.zeros_like(t.data))
            for k, t in tensor_params.items()}


# -- convergence --------------------------------------------------------------------


class PlateauDetector:
    """Stop when the best validation loss has not improved by tol for window epochs."""

    def __init__(self, window: int, tol: float):
        if window < 1 or tol < 0:
            raise ValueError("window must be >= 1 and tol >= 0")
        self.window = window
        self.tol = tol
        self.best = math.inf
        self.stale = 0

    def update(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; True means training should stop."""
        if val_loss < self.best - self.tol:
            self.best = val_loss
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.window

    def replay(self, history) -> bool:
        stop = False
        for v in history:
            stop = self.update(v)
        return stop


# -- state --------------------------------------------------------------------------


@dataclass
class TrainState:
    config: TrainConfig
    g: Network
    pd: Network | None
    dd: Network | None
    opt_g: AdamState
    opt_pd: AdamState | None
    opt_dd: AdamState | None
    step: int = 0
    epochs_done: int = 0  # completed global epochs, warmup included
    phase: str = "warmup"
    recent_losses: deque = field(default_factory=lambda: deque(maxlen=100))
    val_history: list[float] = field(default_factory=list)


def _wants_pd(cfg: TrainConfig) -> bool:
    return cfg.mode == "semi" and cfg.discriminators in ("both", "pair_only")


def _wants_dd(cfg: TrainConfig) -> bool:
    return cfg.mode == "semi" and cfg.discriminators in ("both", "depth_only")


def _init_seed(seed: int, salt: int) -> int:
    return int(np.random.SeedSequence([seed, salt]).generate_state(1)[0])


def init_state(cfg: TrainConfig) -> TrainState:
    """Build and initialize the networks and optimizers for a fresh run."""
    g = build_generator(cfg.generator)
    init_params(g, cfg.init_scheme, seed=_init_seed(cfg.seed, 101))
    pd = dd = opt_pd = opt_dd = None
    if _wants_pd(cfg):
        pd = build_pair_discriminator(cfg.pair_disc)
        init_params(pd, cfg.init_scheme, seed=_init_seed(cfg.seed, 102))
        opt_pd = AdamState.for_params(pd.params)
    if _wants_dd(cfg):
        dd = build_depth_discriminator(cfg.depth_disc)
        init_params(dd, cfg.init_scheme, seed=_init_seed(cfg.seed, 103))
        opt_dd = AdamState.for_params(dd.params)
    return TrainState(config=cfg, g=g, pd=pd, dd=dd,
                      opt_g=AdamState.for_params(g.params),
                      opt_pd=opt_pd, opt_dd=opt_dd)


def lr_at(cfg: TrainConfig, step: int) -> float:
    if cfg.lr_decay_factor is None:
        return cfg.lr
    return cfg.lr * cfg.lr_decay_factor ** (step // cfg.lr_decay_every)


# -- step functions -----------------------------------------------------------------


def _gen_adv_grids(state: TrainState, images: np.ndarray, pred: Tensor):
    """Discriminator probability grids on the generator's current fake batch.

    Discriminator parameters enter as constants so gradients reach only the
    generator. The depth grid is skipped when the blend cannot use it
    (lam == 1 or pair-only), which keeps those runs identical to pair-only
    training bit for bit.
    """
    cfg = state.config
    pd_fake = dd_fake = None
    if state.pd is not None:
        pair = concat([Tensor(images), pred], axis=1)
        pd_fake = state.pd.forward_t(
            state.pd.tensor_params(requires_grad=False), pair, "train")
    if state.dd is not None and (state.pd is None or cfg.weights.lam < 1.0):
        dd_fake = state.dd.forward_t(
            state.dd.tensor_params(requires_grad=False), pred, "train")
    return pd_fake, dd_fake


def _adv_loss(cfg: TrainConfig, pd_fake, dd_fake) -> LossValue:
    if pd_fake is None:
        return loss_g_dd(dd_fake, cfg.weights)
    if dd_fake is None:
        return loss_g_pd(pd_fake, cfg.weights)
    return loss_g_semi(cfg.weights, pd_fake, dd_fake)


def _sup_loss(cfg: TrainConfig, pd_fake, dd_fake, pred, gt, mask,
              beta: float) -> LossValue:
    w = cfg.weights
    if pd_fake is not None and (dd_fake is not None or w.lam == 1.0):
        return loss_g_sup(w, pd_fake, dd_fake, pred, gt, mask, beta=beta)
    adv = _adv_loss(cfg, pd_fake, dd_fake)
    l1 = masked_l1(pred, gt, mask)
    node = adv.node + beta * l1.node
    components = dict(adv.components, l1=l1.scalar)
    weights = dict(adv.weights, l1=beta)
    return LossValue(scalar=float(node.data), components=components,
                     weights=weights, node=node)


def _update_disc(net: Network, opt: AdamState, loss_fn, real: np.ndarray,
                 fake: np.ndarray, cfg: TrainConfig, lr: float) -> float:
    tp = net.tensor_params()
    out_real = net.forward_t(tp, Tensor(real), "train")
    out_fake = net.forward_t(tp, Tensor(fake), "train")
    lv = loss_fn(out_real, out_fake, cfg.weights)
    lv.node.backward()
    adam_step(net.params, _grads(tp), opt, lr, cfg.betas, cfg.adam_eps)
    return lv.scalar


def train_step_regression(state: TrainState, batch: dict, lr: float,
                          kind: str | None = None) -> dict:
    """Generator-only regression update (baseline mode and warmup)."""
    cfg = state.config
    kind = kind or cfg.supervised_loss
    tp = state.g.tensor_params()
    pred = forward_padded_t(state.g, tp, batch["images"], "train")
    lv = baseline_loss(kind, pred, batch["depths"], batch["masks"])
    lv.node.backward()
    adam_step(state.g.params, _grads(tp), state.opt_g, lr, cfg.betas, cfg.adam_eps)
    return {"loss_g": lv.scalar,
            "loss_l1": lv.scalar if kind == "l1" else math.nan}


def train_step_supervised(state: TrainState, batch: dict, lr: float,
                          beta: float) -> dict:
    """Labeled-batch step: generator (beta*L1 + adversarial), then PD, then DD."""
    cfg = state.config
    images, gt, mask = batch["images"], batch["depths"], batch["masks"]

    tp = state.g.tensor_params()
    pred = forward_padded_t(state.g, tp, images, "train")
    pd_fake, dd_fake = _gen_adv_grids(state, images, pred)
    lv = _sup_loss(cfg, pd_fake, dd_fake, pred, gt, mask, beta)
    lv.node.backward()
    adam_step(state.g.params, _grads(tp), state.opt_g, lr, cfg.betas, cfg.adam_eps)

    fake_depth = pred.data
    out = {"loss_g": lv.scalar,
           "loss_g_pd": lv.components.get("g_pd", math.nan),
           "loss_g_dd": lv.components.get("g_dd", math.nan),
           "loss_l1": lv.components["l1"],
           "loss_pd": math.nan, "loss_dd": math.nan}
    if state.pd is not None:
        out["loss_pd"] = _update_disc(
            state.pd, state.opt_pd, loss_pd,
            np.concatenate([images, gt], axis=1),
            np.concatenate([images, fake_depth], axis=1), cfg, lr)
    if state.dd is not None:
        out["loss_dd"] = _update_disc(state.dd, state.opt_dd, loss_dd,
                                      gt, fake_depth, cfg, lr)
    return out


def train_step_semi(state: TrainState, batch: dict, pool: dict, lr: float) -> dict:
    """Unlabeled-batch step: adversarial-only generator update, then PD/DD.

    The discriminators' real side comes from `pool`, a uniform resample of
    labeled training pairs drawn by the caller.
    """
    cfg = state.config
    images = batch["images"]

    tp = state.g.tensor_params()
    pred = forward_padded_t(state.g, tp, images, "train")
    pd_fake, dd_fake = _gen_adv_grids(state, images, pred)
    lv = _adv_loss(cfg, pd_fake, dd_fake)
    lv.node.backward()
    adam_step(state.g.params, _grads(tp), state.opt_g, lr, cfg.betas, cfg.adam_eps)

    fake_depth = pred.data
    out = {"loss_g": lv.scalar,
           "loss_g_pd": lv.components.get("g_pd", math.nan),
           "loss_g_dd": lv.components.get("g_dd", math.nan),
           "loss_l1": math.nan, "loss_pd": math.nan, "loss_dd": math.nan}
    if state.pd is not None:
        out["loss_pd"] = _update_disc(
            state.pd, state.opt_pd, loss_pd,
            np.concatenate([pool["pd_images"], pool["pd_depths"]], axis=1),
            np.concatenate([images, fake_depth], axis=1), cfg, lr)
    if state.dd is not None:
        out["loss_dd"] = _update_disc(state.dd, state.opt_dd, loss_dd,
                                      pool["dd_depths"], fake_depth, cfg, lr)
    return out


# -- epoch orchestration ------------------------------------------------------------


def _holdout(n: int, fraction: float, seed: int):
    """Deterministic labeled train/val index split (val may be empty)."""
    if fraction <= 0.0 or n < 2:
        return np.arange(n), np.arange(0)
    n_val = min(n - 1, max(1, int(round(fraction * n))))
    perm = _epoch_rng(seed, 0, _HOLDOUT_STREAM).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _val_l1(state: TrainState, split: DatasetSplit, val_idx) -> float:
    total, count = 0.0, 0
    for i in val_idx:
        s = split.labeled[int(i)]
        x = s.image.pixels.transpose(2, 0, 1)[None]
        pred = generator_forward(state.g, x, mode="eval")[0, 0]
        m = s.mask.mask
        total += float(np.abs(pred[m] - s.depth.depth[m]).sum())
        count += int(m.sum())
    if count == 0:
        raise ValueError("validation set has no valid pixels")
    return total / count


def warmup_generator(state: TrainState, split: DatasetSplit, train_idx,
                     log=None) -> TrainState:
    """L1-only generator epochs over the labeled set; discriminators untouched."""
    cfg = state.config
    while state.epochs_done < cfg.warmup_epochs:
        epoch = state.epochs_done
        state.phase = "warmup"
        for batch in epoch_plan(len(train_idx), 0, cfg.batch_size, "supervised",
                                cfg.seed, epoch):
            arrays = collate_labeled(split, train_idx[batch.indices])
            lr = lr_at(cfg, state.step)
            row = train_step_regression(state, arrays, lr, kind="l1")
            state.step += 1
            state.recent_losses.append(row["loss_g"])
            _log_row(log, state, epoch, "warmup", row, lr)
        state.epochs_done += 1
    return state


def _log_row(log, state, epoch, phase, row, lr):
    if log is None:
        return
    values = {"step": state.step, "epoch": epoch, "phase": phase, "lr": repr(lr)}
    for key in ("loss_g", "loss_g_pd", "loss_g_dd", "loss_l1", "loss_pd", "loss_dd"):
        values[key] = repr(float(row.get(key, math.nan)))
    log.write(",".join(str(values[c]) for c in CSV_COLUMNS) + "\n")


def _planned_steps(cfg: TrainConfig, n_train: int, m: int) -> int:
    per_labeled = -(-n_train // cfg.batch_size)
    if cfg.mode == "supervised":
        return cfg.epochs * per_labeled
    # alternating epochs pair every labeled batch with one unlabeled batch
    return cfg.warmup_epochs * per_labeled + cfg.epochs * 2 * per_labeled


def train(cfg: TrainConfig, split: DatasetSplit, out_dir: str | None = None,
          resume: str | None = None) -> TrainState:
    """Run (or continue) a full training job.

    Writes log.csv (one row per step), val.csv (one row per epoch) and
    checkpoints under out_dir when given. `resume` restores an epoch-boundary
    checkpoint and replays the remaining epochs exactly as the uninterrupted
    run would have.
    """
    if resume is not None:
        state = load_train_state(resume)
        _check_resume_config(state.config, cfg)
        state.config = cfg
    else:
        state = init_state(cfg)

    n = len(split.labeled)
    if cfg.mode == "semi" and len(split.unlabeled) == 0:
        raise ValueError("semi mode needs unlabeled samples")
    train_idx, val_idx = _holdout(n, cfg.val_fraction, cfg.seed)
    if cfg.convergence == "plateau" and len(val_idx) == 0:
        raise ValueError("plateau convergence needs a validation holdout")
    n_train, m = len(train_idx), len(split.unlabeled)
    total_steps = _planned_steps(cfg, n_train, m)

    log = val_log = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        # Resuming appends so an interrupted run keeps its rows, but a resume
        # into a fresh directory must still start the files with headers.
        fresh = resume is None
        log = open(os.path.join(out_dir, "log.csv"), "w" if fresh else "a")
        val_log = open(os.path.join(out_dir, "val.csv"), "w" if fresh else "a")
        if log.tell() == 0:
            log.write(",".join(CSV_COLUMNS) + "\n")
        if val_log.tell() == 0:
            val_log.write("epoch,val_l1\n")

    detector = PlateauDetector(cfg.plateau_window, cfg.plateau_tol)
    stop = detector.replay(state.val_history)

    try:
        warmup_epochs = cfg.warmup_epochs if cfg.mode == "semi" else 0
        if warmup_epochs:
            warmup_generator(state, split, train_idx, log)
        total_epochs = warmup_epochs + cfg.epochs
        while state.epochs_done < total_epochs and not stop:
            epoch = state.epochs_done
            plan_mode = "alternating" if cfg.mode == "semi" else "supervised"
            rng_pd = _epoch_rng(cfg.seed, epoch, _POOL_PD_STREAM)
            rng_dd = _epoch_rng(cfg.seed, epoch, _POOL_DD_STREAM)
            for batch in epoch_plan(n_train, m, cfg.batch_size, plan_mode,
                                    cfg.seed, epoch):
                lr = lr_at(cfg, state.step)
                if batch.kind == "labeled":
                    arrays = collate_labeled(split, train_idx[batch.indices])
                    if cfg.mode == "supervised":
                        state.phase = "sup"
                        row = train_step_regression(state, arrays, lr)
                    else:
                        state.phase = "sup"
                        beta = beta_at(cfg.weights, state.step, total_steps)
                        row = train_step_supervised(state, arrays, lr, beta)
                else:
                    state.phase = "semi"
                    arrays = collate_unlabeled(split, batch.indices)
                    pool = _draw_pool(state, split, train_idx,
                                      len(batch.indices), rng_pd, rng_dd)
                    row = train_step_semi(state, arrays, pool, lr)
                state.step += 1
                state.recent_losses.append(row["loss_g"])
                _log_row(log, state, epoch, state.phase, row, lr)
            state.epochs_done += 1
            if len(val_idx) > 0:
                v = _val_l1(state, split, val_idx)
                state.val_history.append(v)
                if val_log is not None:
                    val_log.write(f"{epoch},{v!r}\n")
                if cfg.convergence == "plateau":
                    stop = detector.update(v)
            if (out_dir is not None and cfg.checkpoint_every > 0
                    and state.epochs_done % cfg.checkpoint_every == 0):
                save_train_state(state, os.path.join(
                    out_dir, f"epoch_{state.epochs_done:03d}.ckpt"))
        state.phase = "done"
        if out_dir is not None:
            save_train_state(state, os.path.join(out_dir, "final.ckpt"))
    finally:
        for f in (log, val_log):
            if f is not None:
                f.close()
    return state


def _draw_pool(state: TrainState, split: DatasetSplit, train_idx, size: int,
               rng_pd, rng_dd) -> dict:
    """Uniform-with-replacement labeled draws for the discriminators' real side."""
    pool = {}
    if state.pd is not None:
        ids = train_idx[rng_pd.integers(0, len(train_idx), size=size)]
        arrays = collate_labeled(split, ids)
        pool["pd_images"] = arrays["images"]
        pool["pd_depths"] = arrays["depths"]
    if state.dd is not None:
        ids = train_idx[rng_dd.integers(0, len(train_idx), size=size)]
        pool["dd_depths"] = collate_labeled(split, ids)["depths"]
    return pool


def _check_resume_config(saved: TrainConfig, requested: TrainConfig):
    a, b = config_to_dict(saved), config_to_dict(requested)
    skip = {"epochs", "checkpoint_every"}
    bad = [k for k in a if k not in skip and a[k] != b[k]]
    if bad:
        raise ValueError(f"resume config differs from checkpoint in {bad}; only "
                         "epochs and checkpoint_every may change")


# -- persistence --------------------------------------------------------------------


def _pack_net(arrays: dict, prefix: str, net: Network, opt: AdamState):
    for k, v in net.params.items():
        arrays[f"{prefix}.param.{k}"] = v
        arrays[f"opt.{prefix}.m.{k}"] = opt.m[k]
        arrays[f"opt.{prefix}.v.{k}"] = opt.v[k]
    for k, v in net.buffers.items():
        arrays[f"{prefix}.buffer.{k}"] = v


def _unpack_net(arrays: dict, prefix: str, net: Network, opt: AdamState):
    want_params = {f"{prefix}.param.{k}" for k in net.params}
    have = {k for k in arrays if k.startswith(f"{prefix}.param.")}
    if want_params != have:
        raise CheckpointCorruptionError(
            f"checkpoint parameter names for {prefix!r} do not match the spec")
    for k in net.params:
        net.params[k] = arrays[f"{prefix}.param.{k}"].copy()
        opt.m[k] = arrays[f"opt.{prefix}.m.{k}"].copy()
        opt.v[k] = arrays[f"opt.{prefix}.v.{k}"].copy()
    for k in net.buffers:
        net.buffers[k] = arrays[f"{prefix}.buffer.{k}"].copy()


def save_train_state(state: TrainState, path: str):
    arrays: dict[str, np.ndarray] = {}
    _pack_net(arrays, "g", state.g, state.opt_g)
    if state.pd is not None:
        _pack_net(arrays, "pd", state.pd, state.opt_pd)
    if state.dd is not None:
        _pack_net(arrays, "dd", state.dd, state.opt_dd)
    meta = {
        "config": config_to_dict(state.config),
        "step": state.step,
        "epochs_done": state.epochs_done,
        "phase": state.phase,
        "recent_losses": list(state.recent_losses),
        "val_history": list(state.val_history),
        "opt_t": {"g": state.opt_g.t,
                  "pd": state.opt_pd.t if state.opt_pd else 0,
                  "dd": state.opt_dd.t if state.opt_dd else 0},
    }
    save_checkpoint(path, arrays, meta)


def load_train_state(path: str) -> TrainState:
    arrays, meta = load_checkpoint(path)
    cfg = config_from_dict(meta["config"])
    state = init_state(cfg)
    _unpack_net(arrays, "g", state.g, state.opt_g)
    if state.pd is not None:
        _unpack_net(arrays, "pd", state.pd, state.opt_pd)
    if state.dd is not None:
        _unpack_net(arrays, "dd", state.dd, state.opt_dd)
    state.step = int(meta["step"])
    state.epochs_done = int(meta["epochs_done"])
    state.phase = meta["phase"]
    state.recent_losses = deque(meta["recent_losses"], maxlen=100)
    state.val_history = list(meta["val_history"])
    state.opt_g.t = int(meta["opt_t"]["g"])
    if state.opt_pd is not None:
        state.opt_pd.t = int(meta["opt_t"]["pd"])
    if state.opt_dd is not None:
        state.opt_dd.t = int(meta["opt_t"]["dd"])
    return state
