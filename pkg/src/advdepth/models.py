"""Network construction: depth generators, the two patch discriminators, and
analytic receptive-field computation.

Generators are encoder-decoders that keep output spatial size equal to the
input (inputs are padded up to the backbone's divisibility requirement and
cropped back afterwards). The final activation squashes logits into the
configured depth range through a scaled logistic, so the range invariant
holds for any parameters; a linear head exists behind a flag.

Discriminators follow the 5-layer patch design: kernel 4 everywhere, strides
(2,2,2,1,1), batch norm + leaky rectifier after layers 1-4, logistic output.
That stride pattern gives per-layer receptive fields (4, 10, 22, 46, 70).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import (
    Tensor,
    clip,
    concat,
    conv2d,
    conv_transpose2d,
    leaky_relu,
    relu,
    sigmoid,
    upsample2x_bilinear,
)

__all__ = [
    "GeneratorSpec",
    "DiscriminatorSpec",
    "Network",
    "ReceptiveFieldTable",
    "build_generator",
    "build_pair_discriminator",
    "build_depth_discriminator",
    "receptive_fields",
    "generator_forward",
    "init_params",
    "batch_norm",
]

BACKBONES = ("tiny_unet", "fcrn_like", "hu_like")


@dataclass(frozen=True)
class GeneratorSpec:
    backbone: str = "tiny_unet"
    base_channels: int = 8
    depth_range: tuple[float, float] = (0.3, 10.0)
    final_upsample: bool = True  # learned deconvolution for the last 2x stage
    output: str = "sigmoid"  # "sigmoid" maps into depth_range; "linear" is raw

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}")
        if self.depth_range[0] >= self.depth_range[1]:
            raise ValueError("depth_range must be (min, max) with min < max")
        if self.output not in ("sigmoid", "linear"):
            raise ValueError(f"unknown output head {self.output!r}")


@dataclass(frozen=True)
class DiscriminatorSpec:
    in_channels: int  # 4 for the pair discriminator, 1 for depth-only
    channels: tuple[int, ...] = (64, 128, 256, 512, 1)
    kernels: tuple[int, ...] = (4, 4, 4, 4, 4)
    strides: tuple[int, ...] = (2, 2, 2, 1, 1)
    leaky_slope: float = 0.2
    use_bn: bool = True
    prob_eps: float = 1e-12  # clamp that keeps probabilities inside (0, 1)

    def __post_init__(self):
        if not (len(self.channels) == len(self.kernels) == len(self.strides) == 5):
            raise ValueError("discriminator must have exactly 5 convolution layers")
        if self.channels[-1] != 1:
            raise ValueError("final discriminator layer must emit 1 channel")


@dataclass
class Network:
    spec: object
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    _fn: object = None  # (params: dict[str, Tensor], x: Tensor, mode) -> Tensor
    divisor: int = 1  # input spatial sizes are padded to a multiple of this

    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def tensor_params(self, requires_grad: bool = True) -> dict[str, Tensor]:
        return {k: Tensor(v, requires_grad=requires_grad)
                for k, v in self.params.items()}

    def forward_t(self, params: dict[str, Tensor], x: Tensor, mode: str = "train") -> Tensor:
        if mode not in ("train", "eval"):
            raise ValueError(f"unknown mode {mode!r}")
        return self._fn(params, x, mode)

    def forward(self, x: np.ndarray, mode: str = "eval") -> np.ndarray:
        out = self._fn({k: Tensor(v) for k, v in self.params.items()},
                       Tensor(np.asarray(x, dtype=np.float64)), mode)
        return out.data


# -- shared layers -----------------------------------------------------------------


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, buffers: dict, key: str,
               mode: str, momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """Channelwise batch normalization over an NCHW tensor.

    Train mode normalizes by batch statistics (differentiably) and updates the
    running buffers; eval mode uses the stored running statistics.
    """
    c = x.shape[1]
    if mode == "train":
        mu = x.mean(axis=(0, 2, 3), keepdims=True)
        var = ((x - mu) * (x - mu)).mean(axis=(0, 2, 3), keepdims=True)
        buffers[key + ".running_mean"] = (
            (1 - momentum) * buffers[key + ".running_mean"]
            + momentum * mu.data.reshape(-1)
        )
        buffers[key + ".running_var"] = (
            (1 - momentum) * buffers[key + ".running_var"]
            + momentum * var.data.reshape(-1)
        )
    else:
        mu = Tensor(buffers[key + ".running_mean"].reshape(1, c, 1, 1))
        var = Tensor(buffers[key + ".running_var"].reshape(1, c, 1, 1))
    xhat = (x - mu) * ((var + eps) ** -0.5)
    return gamma.reshape(1, c, 1, 1) * xhat + beta.reshape(1, c, 1, 1)


def _conv_params(params, name, c_in, c_out, k):
    params[name + ".w"] = np.zeros((c_out, c_in, k, k))
    params[name + ".b"] = np.zeros(c_out)


def _deconv_params(params, name, c_in, c_out, k=4):
    params[name + ".w"] = np.zeros((c_in, c_out, k, k))
    params[name + ".b"] = np.zeros(c_out)


def _c(p, name, x, stride=1, pad=1):
    return conv2d(x, p[name + ".w"], p[name + ".b"], stride=stride, pad=pad)


def _dc(p, name, x):
    return conv_transpose2d(x, p[name + ".w"], p[name + ".b"], stride=2, pad=1)


def _depth_head(spec: GeneratorSpec, logits: Tensor) -> Tensor:
    if spec.output == "linear":
        return logits
    lo, hi = spec.depth_range
    return lo + (hi - lo) * sigmoid(logits)


# -- generator backbones -----------------------------------------------------------


def _build_tiny_unet(spec: GeneratorSpec) -> Network:
    b = spec.base_channels
    params: dict[str, np.ndarray] = {}
    _conv_params(params, "enc1", 3, b, 3)
    _conv_params(params, "enc2", b, 2 * b, 3)
    _conv_params(params, "enc3", 2 * b, 4 * b, 3)
    _conv_params(params, "mid", 4 * b, 4 * b, 3)
    _deconv_params(params, "dec2", 4 * b, 2 * b)
    _conv_params(params, "fuse2", 4 * b, 2 * b, 3)
    if spec.final_upsample:
        _deconv_params(params, "dec1", 2 * b, b)
    else:
        _conv_params(params, "dec1", 2 * b, b, 3)
    _conv_params(params, "fuse1", 2 * b, b, 3)
    _conv_params(params, "head", b, 1, 3)

    def fn(p, x, mode):
        e1 = relu(_c(p, "enc1", x))
        e2 = relu(_c(p, "enc2", e1, stride=2))
        e3 = relu(_c(p, "enc3", e2, stride=2))
        m = relu(_c(p, "mid", e3))
        d2 = relu(_dc(p, "dec2", m))
        d2 = relu(_c(p, "fuse2", concat([d2, e2], axis=1)))
        if spec.final_upsample:
            d1 = relu(_dc(p, "dec1", d2))
        else:
            d1 = relu(_c(p, "dec1", upsample2x_bilinear(d2)))
        d1 = relu(_c(p, "fuse1", concat([d1, e1], axis=1)))
        return _depth_head(spec, _c(p, "head", d1))

    return Network(spec=spec, params=params, _fn=fn, divisor=4)


def _residual(p, name, x):
    y = relu(_c(p, name + "a", x))
    y = _c(p, name + "b", y)
    return relu(x + y)


def _channel_attention(p, name, x):
    pooled = x.mean(axis=(2, 3), keepdims=True)
    a = relu(conv2d(pooled, p[name + ".fc1.w"], p[name + ".fc1.b"], stride=1, pad=0))
    a = sigmoid(conv2d(a, p[name + ".fc2.w"], p[name + ".fc2.b"], stride=1, pad=0))
    return x * a


def _build_fcrn_like(spec: GeneratorSpec, attention: bool) -> Network:
    b = spec.base_channels
    params: dict[str, np.ndarray] = {}
    _conv_params(params, "stem", 3, b, 3)
    widths = (2 * b, 4 * b, 8 * b)
    prev = b
    for i, w in enumerate(widths, start=1):
        _conv_params(params, f"down{i}", prev, w, 3)
        _conv_params(params, f"res{i}a", w, w, 3)
        _conv_params(params, f"res{i}b", w, w, 3)
        if attention:
            r = max(w // 4, 1)
            _conv_params(params, f"att{i}.fc1", w, r, 1)
            _conv_params(params, f"att{i}.fc2", r, w, 1)
        prev = w
    _conv_params(params, "up1", 8 * b, 4 * b, 3)
    _conv_params(params, "up2", 4 * b, 2 * b, 3)
    if spec.final_upsample:
        _deconv_params(params, "final", 2 * b, b)
    else:
        _conv_params(params, "final", 2 * b, b, 3)
    _conv_params(params, "head", b, 1, 3)

    def fn(p, x, mode):
        y = relu(_c(p, "stem", x))
        for i in range(1, 4):
            y = relu(_c(p, f"down{i}", y, stride=2))
            y = _residual(p, f"res{i}", y)
            if attention:
                y = _channel_attention(p, f"att{i}", y)
        y = relu(_c(p, "up1", upsample2x_bilinear(y)))
        y = relu(_c(p, "up2", upsample2x_bilinear(y)))
        if spec.final_upsample:
            y = relu(_dc(p, "final", y))
        else:
            y = relu(_c(p, "final", upsample2x_bilinear(y)))
        return _depth_head(spec, _c(p, "head", y))

    return Network(spec=spec, params=params, _fn=fn, divisor=8)


def build_generator(spec: GeneratorSpec) -> Network:
    if spec.backbone == "tiny_unet":
        return _build_tiny_unet(spec)
    if spec.backbone == "fcrn_like":
        return _build_fcrn_like(spec, attention=False)
    if spec.backbone == "hu_like":
        return _build_fcrn_like(spec, attention=True)
    raise ValueError(f"unknown backbone {spec.backbone!r}")


# -- discriminators ----------------------------------------------------------------


def _build_discriminator(spec: DiscriminatorSpec) -> Network:
    params: dict[str, np.ndarray] = {}
    buffers: dict[str, np.ndarray] = {}
    prev = spec.in_channels
    for i, (c, k) in enumerate(zip(spec.channels, spec.kernels), start=1):
        _conv_params(params, f"l{i}", prev, c, k)
        if spec.use_bn and i < 5:
            params[f"l{i}.bn.gamma"] = np.zeros(c)
            params[f"l{i}.bn.beta"] = np.zeros(c)
            buffers[f"l{i}.bn.running_mean"] = np.zeros(c)
            buffers[f"l{i}.bn.running_var"] = np.ones(c)
        prev = c

    def fn(p, x, mode):
        if x.shape[1] != spec.in_channels:
            raise ValueError(
                f"discriminator expects {spec.in_channels} channels, got {x.shape[1]}"
            )
        y = x
        for i, s in enumerate(spec.strides, start=1):
            y = conv2d(y, p[f"l{i}.w"], p[f"l{i}.b"], stride=s, pad=1)
            if i < 5:
                if spec.use_bn:
                    y = batch_norm(y, p[f"l{i}.bn.gamma"], p[f"l{i}.bn.beta"],
                                   buffers, f"l{i}.bn", mode)
                y = leaky_relu(y, spec.leaky_slope)
        probs = sigmoid(y)
        return clip(probs, spec.prob_eps, 1.0 - spec.prob_eps)

    return Network(spec=spec, params=params, buffers=buffers, _fn=fn)


def build_pair_discriminator(spec: DiscriminatorSpec | None = None) -> Network:
    spec = spec or DiscriminatorSpec(in_channels=4)
    if spec.in_channels != 4:
        raise ValueError(f"pair discriminator needs 4 input channels, got {spec.in_channels}")
    return _build_discriminator(spec)


def build_depth_discriminator(spec: DiscriminatorSpec | None = None) -> Network:
    spec = spec or DiscriminatorSpec(in_channels=1)
    if spec.in_channels != 1:
        raise ValueError(f"depth discriminator needs 1 input channel, got {spec.in_channels}")
    return _build_discriminator(spec)


# -- receptive fields --------------------------------------------------------------


@dataclass
class ReceptiveFieldTable:
    rows: list[tuple[int, int]]  # (receptive_field, jump) per layer

    @property
    def fields(self) -> tuple[int, ...]:
        return tuple(rf for rf, _ in self.rows)


def receptive_fields(spec: DiscriminatorSpec | None = None, *,
                     kernels=None, strides=None) -> ReceptiveFieldTable:
    """Per-layer receptive field and jump: rf += (k-1)*jump; jump *= stride.

    Pass a DiscriminatorSpec, or raw kernel/stride sequences for ad-hoc stacks.
    """
    if spec is not None:
        kernels, strides = spec.kernels, spec.strides
    if kernels is None or strides is None or len(kernels) != len(strides):
        raise ValueError("need matching kernel and stride sequences")
    rows = []
    rf, jump = 1, 1
    for k, s in zip(kernels, strides):
        rf = rf + (k - 1) * jump
        jump = jump * s
        rows.append((rf, jump))
    table = ReceptiveFieldTable(rows)
    fields = table.fields
    if any(b <= a for a, b in zip(fields, fields[1:])):
        raise ValueError(f"receptive fields must be strictly increasing, got {fields}")
    return table


# -- forward + init ----------------------------------------------------------------


def _pad_to_divisor(x: np.ndarray, d: int):
    h, w = x.shape[2], x.shape[3]
    ph = (-h) % d
    pw = (-w) % d
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)))
    return x, h, w


def generator_forward(g: Network, images, mode: str = "eval"):
    """Run the generator over a batch.

    Accepts an (N,3,H,W) array or a list of preprocessed Images; returns an
    (N,1,H,W) depth array (or a list of DepthMaps for a list input). Inputs
    whose sizes don't divide the backbone's stride product are zero-padded on
    the bottom/right and the output is cropped back.
    """
    from .data import DepthMap, Image

    as_list = isinstance(images, (list, tuple))
    if as_list:
        for im in images:
            if isinstance(im, Image) and not im.normalized:
                raise ValueError("generator inputs must be preprocessed (normalized)")
        x = np.stack([im.pixels.transpose(2, 0, 1) if isinstance(im, Image) else im
                      for im in images])
    else:
        x = np.asarray(images, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != 3:
        raise ValueError(f"expected (N,3,H,W) images, got {x.shape}")
    xp, h, w = _pad_to_divisor(x, g.divisor)
    out = g.forward(xp, mode=mode)[:, :, :h, :w]
    if as_list:
        lo, hi = g.spec.depth_range
        return [DepthMap(out[i, 0], range_hint=(lo, hi)) for i in range(out.shape[0])]
    return out


def forward_padded_t(g: Network, params: dict[str, Tensor], x: np.ndarray,
                     mode: str = "train") -> Tensor:
    """Differentiable padded forward used by the trainer (NCHW array input)."""
    from .autodiff import pad2d

    h, w = x.shape[2], x.shape[3]
    ph = (-h) % g.divisor
    pw = (-w) % g.divisor
    t = Tensor(x)
    if ph or pw:
        t = pad2d(t, (0, ph, 0, pw))
    out = g.forward_t(params, t, mode)
    if ph or pw:
        out = out[:, :, :h, :w]
    return out


def init_params(net: Network, scheme: str = "normal_002", seed: int = 0,
                checkpoint: dict[str, np.ndarray] | None = None):
    """Initialize a network in place.

    normal_002: convolution weights from N(0, 0.02^2), biases zero, batch-norm
    scale from N(1, 0.02^2) and shift zero. he: fan-in-scaled normal weights
    (healthy activation magnitudes in deep stacks; useful for gradient
    calibration and regression baselines). warm_start: copy a previously
    saved parameter dict (names and shapes must match exactly).
    """
    if scheme in ("normal_002", "he"):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1417]))
        for name, p in net.params.items():
            if name.endswith(".bn.gamma"):
                net.params[name] = 1.0 + rng.normal(0.0, 0.02, size=p.shape)
            elif name.endswith(".b") or name.endswith(".bn.beta"):
                net.params[name] = np.zeros_like(p)
            elif scheme == "he":
                fan_in = int(np.prod(p.shape[1:])) if p.ndim > 1 else p.size
                net.params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=p.shape)
            else:
                net.params[name] = rng.normal(0.0, 0.02, size=p.shape)
    elif scheme == "warm_start":
        if checkpoint is None:
            raise ValueError("warm_start needs a checkpoint parameter dict")
        if set(checkpoint.keys()) != set(net.params.keys()):
            raise ValueError("checkpoint parameter names do not match the network spec")
        for name, p in net.params.items():
            src = np.asarray(checkpoint[name], dtype=np.float64)
            if src.shape != p.shape:
                raise ValueError(
                    f"checkpoint shape mismatch for {name}: {src.shape} vs {p.shape}"
                )
            net.params[name] = src.copy()
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    return net
