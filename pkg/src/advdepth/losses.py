"""Training objectives.

Adversarial terms follow the standard cross-entropy GAN form. The pair
discriminator judges stacked (image, depth) 4-channel inputs and the depth
discriminator judges depth maps alone; the generator blends their feedback
with a weight lam on the pair term and (1 - lam) on the depth term. The
supervised phase adds a beta-weighted masked L1 regression term.

The generator loss uses the saturating log(1 - D(fake)) form by default,
exactly as the minimax game is usually written; a non-saturating -log D(fake)
switch exists because saturating gradients vanish early in training.

Every op returns a LossValue carrying the float scalar, named components for
logging, and the live autodiff node so the caller can backpropagate.

All probabilities are clamped to [eps, 1-eps] before any log, so no op here
returns a non-finite value on finite inputs. A mean over a probability grid
is taken over all patches and batch entries at once (grids in a batch share
a shape, so this equals per-patch-then-per-batch averaging).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, as_tensor, clip

__all__ = [
    "LossWeights",
    "LossValue",
    "loss_pd",
    "loss_g_pd",
    "loss_dd",
    "loss_g_dd",
    "loss_g_semi",
    "loss_g_sup",
    "minimax_value",
    "minimax_value_from_grids",
    "baseline_loss",
    "masked_l1",
    "beta_at",
    "BASELINE_KINDS",
]

BASELINE_KINDS = ("l1", "l2", "huber", "scale_invariant", "berhu", "edge_aware")


@dataclass(frozen=True)
class LossWeights:
    lam: float = 0.7  # pair-discriminator share of the generator's GAN loss
    beta: float = 10.0  # weight of the supervised L1 term
    epsilon: float = 1e-7  # log clamp
    saturating: bool = True  # log(1-D) generator form; False gives -log D
    beta_decay: bool = False  # linear beta -> 1 over the first third of training

    def __post_init__(self):
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"lam must be in (0, 1], got {self.lam}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


def beta_at(w: LossWeights, step: int, total_steps: int) -> float:
    """Effective L1 weight at a step: constant, or decaying to 1 early on."""
    if not w.beta_decay or w.beta <= 1.0:
        return w.beta
    ramp = max(total_steps // 3, 1)
    if step >= ramp:
        return 1.0
    frac = step / ramp
    return w.beta + (1.0 - w.beta) * frac


@dataclass
class LossValue:
    scalar: float
    components: dict[str, float] = field(default_factory=dict)
    weights: dict[str, float] = field(default_factory=dict)
    node: Tensor | None = None

    def __post_init__(self):
        recon = sum(self.weights.get(k, 1.0) * v for k, v in self.components.items())
        if abs(self.scalar - recon) > 1e-9 * max(1.0, abs(self.scalar)):
            raise ValueError(
                f"loss components {recon} do not reconstruct the scalar {self.scalar}"
            )


def _simple(node: Tensor, name: str) -> LossValue:
    s = float(node.data)
    return LossValue(scalar=s, components={name: s}, weights={name: 1.0}, node=node)


def _log_clamped(p: Tensor, eps: float) -> Tensor:
    return clip(p, eps, 1.0 - eps).log()


def _check_grid(p) -> Tensor:
    t = as_tensor(p)
    if t.data.size == 0:
        raise ValueError("empty probability grid")
    return t


# -- adversarial losses -------------------------------------------------------------


def loss_pd(pd_real, pd_fake, w: LossWeights | None = None) -> LossValue:
    """Pair-discriminator objective: -E log D(real) - E log(1 - D(fake))."""
    w = w or LossWeights()
    real, fake = _check_grid(pd_real), _check_grid(pd_fake)
    node = -(_log_clamped(real, w.epsilon).mean()) - _log_clamped(
        1.0 - fake, w.epsilon
    ).mean()
    return _simple(node, "pd")


def loss_dd(dd_real, dd_fake, w: LossWeights | None = None) -> LossValue:
    """Depth-discriminator objective; same form on depth-only grids."""
    w = w or LossWeights()
    real, fake = _check_grid(dd_real), _check_grid(dd_fake)
    node = -(_log_clamped(real, w.epsilon).mean()) - _log_clamped(
        1.0 - fake, w.epsilon
    ).mean()
    return _simple(node, "dd")


def _gen_adv(fake: Tensor, w: LossWeights) -> Tensor:
    if w.saturating:
        return _log_clamped(1.0 - fake, w.epsilon).mean()
    return -(_log_clamped(fake, w.epsilon).mean())


def loss_g_pd(pd_fake, w: LossWeights | None = None) -> LossValue:
    """Generator loss against the pair discriminator."""
    w = w or LossWeights()
    return _simple(_gen_adv(_check_grid(pd_fake), w), "g_pd")


def loss_g_dd(dd_fake, w: LossWeights | None = None) -> LossValue:
    """Generator loss against the depth discriminator."""
    w = w or LossWeights()
    return _simple(_gen_adv(_check_grid(dd_fake), w), "g_dd")


def loss_g_semi(w: LossWeights, pd_fake, dd_fake=None) -> LossValue:
    """Semi-supervised generator loss: lam*g_pd + (1-lam)*g_dd.

    At lam == 1 the depth-discriminator grid is not touched at all, so the
    result (value and gradient graph) is identical to loss_g_pd alone.
    """
    a = loss_g_pd(pd_fake, w)
    if w.lam == 1.0:
        return LossValue(scalar=a.scalar, components={"g_pd": a.scalar},
                         weights={"g_pd": 1.0}, node=a.node)
    if dd_fake is None:
        raise ValueError("lam < 1 requires a depth-discriminator grid")
    b = loss_g_dd(dd_fake, w)
    node = w.lam * a.node + (1.0 - w.lam) * b.node
    return LossValue(
        scalar=float(node.data),
        components={"g_pd": a.scalar, "g_dd": b.scalar},
        weights={"g_pd": w.lam, "g_dd": 1.0 - w.lam},
        node=node,
    )


def loss_g_sup(w: LossWeights, pd_fake, dd_fake, pred, gt, mask,
               beta: float | None = None) -> LossValue:
    """Supervised generator loss: the semi GAN blend plus beta * masked L1."""
    adv = loss_g_semi(w, pd_fake, dd_fake)
    l1 = masked_l1(pred, gt, mask)
    b = w.beta if beta is None else beta
    node = adv.node + b * l1.node
    components = dict(adv.components)
    weights = dict(adv.weights)
    components["l1"] = l1.scalar
    weights["l1"] = b
    return LossValue(scalar=float(node.data), components=components,
                     weights=weights, node=node)


def minimax_value_from_grids(pd_real, pd_fake, dd_real, dd_fake,
                             w: LossWeights | None = None) -> LossValue:
    """V(G, PD, DD) from already-computed probability grids.

    V = E log PD(i,y) + E log(1-PD(i',G(i'))) + E log DD(y) + E log(1-DD(G(i'))).
    Equal to -(loss_pd + loss_dd) on the same grids.
    """
    w = w or LossWeights()
    eps = w.epsilon
    terms = {
        "pd_real": float(np.log(np.clip(pd_real, eps, 1 - eps)).mean()),
        "pd_fake": float(np.log(np.clip(1 - np.asarray(pd_fake), eps, 1 - eps)).mean()),
        "dd_real": float(np.log(np.clip(dd_real, eps, 1 - eps)).mean()),
        "dd_fake": float(np.log(np.clip(1 - np.asarray(dd_fake), eps, 1 - eps)).mean()),
    }
    total = sum(terms.values())
    return LossValue(scalar=total, components=terms,
                     weights={k: 1.0 for k in terms}, node=None)


def minimax_value(pd, dd, real_images, real_depths, fake_images, fake_depths,
                  w: LossWeights | None = None) -> LossValue:
    """The four-term game value V(G, PD, DD), for diagnostics only."""
    real_pair = np.concatenate([real_images, real_depths], axis=1)
    fake_pair = np.concatenate([fake_images, fake_depths], axis=1)
    return minimax_value_from_grids(
        pd.forward(real_pair, mode="eval"),
        pd.forward(fake_pair, mode="eval"),
        dd.forward(real_depths, mode="eval"),
        dd.forward(fake_depths, mode="eval"),
        w,
    )


# -- regression losses --------------------------------------------------------------


def _as_nchw(x) -> Tensor:
    t = as_tensor(x)
    if t.data.ndim == 2:
        return t.reshape(1, 1, *t.data.shape)
    if t.data.ndim == 3:
        return t.reshape(t.data.shape[0], 1, *t.data.shape[1:])
    if t.data.ndim == 4:
        return t
    raise ValueError(f"expected 2- to 4-D depth array, got {t.data.ndim}-D")


def _mask_nchw(mask, shape) -> np.ndarray:
    m = np.asarray(mask, dtype=bool).reshape(shape)
    if not m.any():
        raise ValueError("mask has zero valid pixels")
    return m


def masked_l1(pred, gt, mask) -> LossValue:
    """Mean absolute depth error over valid pixels."""
    p, g = _as_nchw(pred), _as_nchw(gt)
    m = _mask_nchw(mask, p.data.shape)
    node = (p[m] - g[m]).abs().mean()
    return _simple(node, "l1")


def _masked_mean(t: Tensor) -> Tensor:
    return t.mean()


def baseline_loss(kind: str, pred, gt, mask, si_coef: float = 0.5,
                  huber_delta: float = 1.0) -> LossValue:
    """The regression losses compared in the loss-ablation experiment."""
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline loss {kind!r}")
    p, g = _as_nchw(pred), _as_nchw(gt)
    m = _mask_nchw(mask, p.data.shape)

    if kind == "l1":
        return _simple((p[m] - g[m]).abs().mean(), "l1")

    if kind == "l2":
        r = p[m] - g[m]
        return _simple((r * r).mean(), "l2")

    if kind == "huber":
        r = (p[m] - g[m]).abs()
        quad = 0.5 * r * r
        lin = huber_delta * (r - 0.5 * huber_delta)
        inside = r.data <= huber_delta  # constants wrt the graph: branch mask
        node = (quad * inside + lin * (~inside)).mean()
        return _simple(node, "huber")

    if kind == "scale_invariant":
        if np.any(p.data[m] <= 0) or np.any(g.data[m] <= 0):
            raise ValueError("scale-invariant loss needs strictly positive depths")
        d = p[m].log() - g[m].log()
        node = (d * d).mean() - si_coef * (d.mean() * d.mean())
        return _simple(node, "scale_invariant")

    if kind == "berhu":
        r = (p[m] - g[m]).abs()
        c = 0.2 * r.max()
        c_val = float(c.data)
        if c_val == 0.0:
            return _simple(Tensor(0.0) * r.mean(), "berhu")
        small = r.data <= c_val  # branch selection is data-dependent, not traced
        node = (r * small + ((r * r + c * c) / (2.0 * c)) * (~small)).mean()
        return _simple(node, "berhu")

    # edge_aware: depth L1 + gradient-difference L1 + surface-normal cosine
    t_depth = (p[m] - g[m]).abs().mean()

    dxp, dxg = p[:, :, :, 1:] - p[:, :, :, :-1], g[:, :, :, 1:] - g[:, :, :, :-1]
    dyp, dyg = p[:, :, 1:, :] - p[:, :, :-1, :], g[:, :, 1:, :] - g[:, :, :-1, :]
    mx = m[:, :, :, 1:] & m[:, :, :, :-1]
    my = m[:, :, 1:, :] & m[:, :, :-1, :]
    if not (mx.any() or my.any()):
        raise ValueError("edge-aware loss needs at least one valid pixel pair")
    gx = (dxp[mx] - dxg[mx]).abs().sum() if mx.any() else Tensor(0.0)
    gy = (dyp[my] - dyg[my]).abs().sum() if my.any() else Tensor(0.0)
    t_grad = (gx + gy) / float(mx.sum() + my.sum())

    mn = m[:, :, :-1, :-1] & m[:, :, :-1, 1:] & m[:, :, 1:, :-1]
    if mn.any():
        ax, ag = dxp[:, :, :-1, :][mn], dxg[:, :, :-1, :][mn]
        ay, bg = dyp[:, :, :, :-1][mn], dyg[:, :, :, :-1][mn]
        dot = ax * ag + ay * bg + 1.0
        np_ = (ax * ax + ay * ay + 1.0).sqrt()
        ng = (ag * ag + bg * bg + 1.0).sqrt()
        t_norm = (1.0 - dot / (np_ * ng)).mean()
    else:
        t_norm = Tensor(0.0)

    node = t_depth + t_grad + t_norm
    return LossValue(
        scalar=float(node.data),
        components={"depth": float(t_depth.data), "grad": float(t_grad.data),
                    "normal": float(t_norm.data)},
        weights={"depth": 1.0, "grad": 1.0, "normal": 1.0},
        node=node,
    )
