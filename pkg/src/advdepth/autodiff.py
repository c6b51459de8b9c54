"""Minimal reverse-mode automatic differentiation on NumPy arrays.

Everything runs in float64. A :class:`Tensor` wraps an ndarray and records
the operations applied to it; calling :meth:`Tensor.backward` on a scalar
result accumulates gradients into every reachable leaf that was created
with ``requires_grad=True``.

The op set is exactly what the depth networks and losses need: elementwise
arithmetic, reductions, slicing/concat/pad, matmul, (transposed)
convolution and a fixed bilinear 2x upsampling.  All forward computations
are deterministic, so repeated evaluation with identical inputs is
bit-identical.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "as_tensor",
    "concat",
    "clip",
    "relu",
    "leaky_relu",
    "sigmoid",
    "pad2d",
    "conv2d",
    "conv_transpose2d",
    "upsample2x_bilinear",
]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing NumPy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjp = None  # callable(out_grad) -> tuple of parent grads (or None)

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _make(data, parents, vjp):
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._vjp = vjp
        return out

    # -- introspection --------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- autodiff -------------------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        # iterative topological order over the subgraph that requires grad
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._vjp is None or node.grad is None:
                continue
            pgrads = node._vjp(node.grad)
            for parent, g in zip(node._parents, pgrads):
                if g is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad += g

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor._make(
            a.data + b.data,
            (a, b),
            lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
        )

    __radd__ = __add__

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor._make(
            a.data * b.data,
            (a, b),
            lambda g: (
                _unbroadcast(g * b.data, a.data.shape),
                _unbroadcast(g * a.data, b.data.shape),
            ),
        )

    __rmul__ = __mul__

    def __neg__(self):
        a = self
        return Tensor._make(-a.data, (a,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor._make(
            a.data / b.data,
            (a, b),
            lambda g: (
                _unbroadcast(g / b.data, a.data.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
            ),
        )

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, expo):
        if not isinstance(expo, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a = self
        return Tensor._make(
            a.data**expo,
            (a,),
            lambda g: (g * expo * a.data ** (expo - 1),),
        )

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        if a.data.ndim != 2 or b.data.ndim != 2:
            raise ValueError("matmul is implemented for 2-D operands")
        return Tensor._make(
            a.data @ b.data,
            (a, b),
            lambda g: (g @ b.data.T, a.data.T @ g),
        )

    # -- shape ops ------------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.data.shape
        return Tensor._make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))

    def __getitem__(self, idx):
        a = self
        out = a.data[idx]

        def vjp(g):
            full = np.zeros_like(a.data)
            full[idx] = g
            return (full,)

        return Tensor._make(out.copy(), (a,), vjp)

    # -- reductions -----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self
        out = a.data.sum(axis=axis, keepdims=keepdims)

        def vjp(g):
            if axis is None:
                return (np.broadcast_to(g, a.data.shape).copy(),)
            gg = g
            if not keepdims:
                gg = np.expand_dims(gg, axis)
            return (np.broadcast_to(gg, a.data.shape).copy(),)

        return Tensor._make(out, (a,), vjp)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            n = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            n = 1
            for ax in axes:
                n *= self.data.shape[ax]
        return self.sum(axis=axis, keepdims=keepdims) / float(n)

    def max(self):
        """Global max; gradient is routed to the (first) argmax element."""
        a = self
        flat_idx = int(np.argmax(a.data))
        out = a.data.reshape(-1)[flat_idx]

        def vjp(g):
            full = np.zeros_like(a.data)
            full.reshape(-1)[flat_idx] = g
            return (full,)

        return Tensor._make(np.asarray(out), (a,), vjp)

    # -- elementwise nonlinearities --------------------------------------------

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor._make(out, (a,), lambda g: (g * out,))

    def log(self):
        a = self
        return Tensor._make(np.log(a.data), (a,), lambda g: (g / a.data,))

    def sqrt(self):
        a = self
        out = np.sqrt(a.data)
        return Tensor._make(out, (a,), lambda g: (g * 0.5 / out,))

    def abs(self):
        a = self
        return Tensor._make(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        grads = []
        for i in range(len(tensors)):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(g[tuple(sl)])
        return tuple(grads)

    return Tensor._make(out, tensors, vjp)


def clip(t: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient is zero outside the interval."""
    t = as_tensor(t)
    mask = (t.data >= lo) & (t.data <= hi)
    out = np.clip(t.data, lo, hi)
    return Tensor._make(out, (t,), lambda g: (g * mask,))


def relu(t: Tensor) -> Tensor:
    t = as_tensor(t)
    mask = t.data > 0
    return Tensor._make(t.data * mask, (t,), lambda g: (g * mask,))


def leaky_relu(t: Tensor, slope: float = 0.2) -> Tensor:
    t = as_tensor(t)
    factor = np.where(t.data > 0, 1.0, slope)
    return Tensor._make(t.data * factor, (t,), lambda g: (g * factor,))


def sigmoid(t: Tensor) -> Tensor:
    t = as_tensor(t)
    # numerically stable both tails
    x = t.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor._make(out, (t,), lambda g: (g * out * (1.0 - out),))


def pad2d(t: Tensor, pad: tuple[int, int, int, int]) -> Tensor:
    """Zero-pad the last two axes. ``pad = (top, bottom, left, right)``."""
    t = as_tensor(t)
    pt, pb, pl, pr = pad
    widths = [(0, 0)] * (t.data.ndim - 2) + [(pt, pb), (pl, pr)]
    out = np.pad(t.data, widths)
    h, w = t.data.shape[-2:]

    def vjp(g):
        sl = (Ellipsis, slice(pt, pt + h), slice(pl, pl + w))
        return (g[sl],)

    return Tensor._make(out, (t,), vjp)


# -- convolution machinery ------------------------------------------------------


def _conv_out_size(n: int, k: int, s: int, p: int) -> int:
    return (n + 2 * p - k) // s + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, sh: int, sw: int, oh: int, ow: int):
    """(N, C, Hp, Wp) -> (C*kh*kw, N*oh*ow) patch matrix."""
    n, c = xp.shape[:2]
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    win = win[:, :, ::sh, ::sw]  # (N, C, oh, ow, kh, kw)
    cols = win.transpose(1, 4, 5, 0, 2, 3).reshape(c * kh * kw, n * oh * ow)
    return np.ascontiguousarray(cols)


def _col2im_add(dcols: np.ndarray, xp_shape, kh, kw, sh, sw, oh, ow) -> np.ndarray:
    """Scatter-add (C*kh*kw, N*oh*ow) back into a padded input of xp_shape."""
    n, c = xp_shape[:2]
    dxp = np.zeros(xp_shape, dtype=np.float64)
    d = dcols.reshape(c, kh, kw, n, oh, ow)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, :, ki : ki + sh * oh : sh, kj : kj + sw * ow : sw] += d[
                :, ki, kj
            ].transpose(1, 0, 2, 3)
    return dxp


def _pad_nchw(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def _crop_nchw(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return x[:, :, p:-p, p:-p]


def _conv2d_fwd(x, w, stride: int, pad: int):
    n, c, h, wd = x.shape
    f, c2, kh, kw = w.shape
    if c != c2:
        raise ValueError(f"conv2d channel mismatch: input {c}, weight {c2}")
    oh = _conv_out_size(h, kh, stride, pad)
    ow = _conv_out_size(wd, kw, stride, pad)
    xp = _pad_nchw(x, pad)
    cols = _im2col(xp, kh, kw, stride, stride, oh, ow)
    y = (w.reshape(f, -1) @ cols).reshape(f, n, oh, ow).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(y), cols


def _conv2d_bwd_x(dy, w, x_shape, stride: int, pad: int):
    n, c, h, wd = x_shape
    f, _, kh, kw = w.shape
    oh, ow = dy.shape[2], dy.shape[3]
    dy_r = dy.transpose(1, 0, 2, 3).reshape(f, n * oh * ow)
    dcols = w.reshape(f, -1).T @ dy_r
    dxp = _col2im_add(dcols, (n, c, h + 2 * pad, wd + 2 * pad), kh, kw, stride, stride, oh, ow)
    return _crop_nchw(dxp, pad)


def _conv2d_bwd_w(dy, cols, w_shape):
    f = w_shape[0]
    dy_r = dy.transpose(1, 0, 2, 3).reshape(f, -1)
    return (dy_r @ cols.T).reshape(w_shape)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation: x (N,C,H,W), w (F,C,kh,kw), b (F,)."""
    x, w = as_tensor(x), as_tensor(w)
    y, cols = _conv2d_fwd(x.data, w.data, stride, pad)
    if b is not None:
        b = as_tensor(b)
        y = y + b.data[None, :, None, None]
        parents = (x, w, b)
    else:
        parents = (x, w)

    x_shape, w_shape = x.data.shape, w.data.shape
    wdata = w.data

    def vjp(g):
        dx = _conv2d_bwd_x(g, wdata, x_shape, stride, pad)
        dw = _conv2d_bwd_w(g, cols, w_shape)
        if b is not None:
            return (dx, dw, g.sum(axis=(0, 2, 3)))
        return (dx, dw)

    return Tensor._make(y, parents, vjp)


def conv_transpose2d(
    x: Tensor, w: Tensor, b: Tensor | None, stride: int = 2, pad: int = 1
) -> Tensor:
    """Transposed convolution: x (N,C,H,W), w (C,F,kh,kw) -> (N,F,OH,OW).

    OH = (H-1)*stride - 2*pad + kh.  With kh=4, stride=2, pad=1 this is an
    exact 2x spatial upsampling.
    """
    x, w = as_tensor(x), as_tensor(w)
    n, c, h, wd = x.data.shape
    c2, f, kh, kw = w.data.shape
    if c != c2:
        raise ValueError(f"conv_transpose2d channel mismatch: input {c}, weight {c2}")
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    # forward is the backward-data pass of a conv whose input would be the output
    x_r = x.data.transpose(1, 0, 2, 3).reshape(c, n * h * wd)
    cols = w.data.reshape(c, -1).T @ x_r  # (F*kh*kw, N*h*wd)
    yp = _col2im_add(
        cols.reshape(f * kh * kw, n * h * wd),
        (n, f, oh + 2 * pad, ow + 2 * pad),
        kh,
        kw,
        stride,
        stride,
        h,
        wd,
    )
    y = _crop_nchw(yp, pad)
    if b is not None:
        b = as_tensor(b)
        y = y + b.data[None, :, None, None]
        parents = (x, w, b)
    else:
        parents = (x, w)

    wdata, xdata = w.data, x.data

    def vjp(g):
        dx = _conv2d_like_gather(g, wdata, (n, c, h, wd), stride, pad)
        dw = _conv_transpose_bwd_w(g, xdata, wdata.shape, stride, pad)
        if b is not None:
            return (dx, dw, g.sum(axis=(0, 2, 3)))
        return (dx, dw)

    return Tensor._make(np.ascontiguousarray(y), parents, vjp)


def _conv2d_like_gather(g, w, x_shape, stride, pad):
    """Gradient of conv_transpose2d wrt its input: correlate g with w."""
    n, c, h, wd = x_shape
    c2, f, kh, kw = w.shape
    gp = _pad_nchw(g, pad)
    cols = _im2col(gp, kh, kw, stride, stride, h, wd)  # (F*kh*kw, N*h*wd)
    dx = (w.reshape(c, -1) @ cols).reshape(c, n, h, wd).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(dx)


def _conv_transpose_bwd_w(g, x, w_shape, stride, pad):
    """Gradient of conv_transpose2d wrt its kernel."""
    c, f, kh, kw = w_shape
    n, _, h, wd = x.shape
    gp = _pad_nchw(g, pad)
    cols = _im2col(gp, kh, kw, stride, stride, h, wd)  # (F*kh*kw, N*h*wd)
    x_r = x.transpose(1, 0, 2, 3).reshape(c, n * h * wd)
    return (x_r @ cols.T).reshape(c, f, kh, kw)


# -- fixed bilinear upsampling ---------------------------------------------------


def _upsample2x_weights(n_in: int):
    """Half-pixel bilinear gather for a 2x upsample along one axis."""
    dst = np.arange(2 * n_in, dtype=np.float64)
    src = (dst + 0.5) / 2.0 - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = src - i0
    w0 = 1.0 - w1
    return i0, i1, w0, w1


def upsample2x_bilinear(t: Tensor) -> Tensor:
    """Deterministic 2x bilinear upsampling of an (N,C,H,W) tensor."""
    t = as_tensor(t)
    n, c, h, w = t.data.shape
    ri0, ri1, rw0, rw1 = _upsample2x_weights(h)
    ci0, ci1, cw0, cw1 = _upsample2x_weights(w)
    rows = t.data[:, :, ri0, :] * rw0[None, None, :, None] + t.data[:, :, ri1, :] * rw1[
        None, None, :, None
    ]
    out = rows[:, :, :, ci0] * cw0[None, None, None, :] + rows[:, :, :, ci1] * cw1[
        None, None, None, :
    ]

    def vjp(g):
        # transpose of the gather: scatter along columns, then rows
        drows = np.zeros((n, c, 2 * h, w), dtype=np.float64)
        np.add.at(drows, (slice(None), slice(None), slice(None), ci0), g * cw0[None, None, None, :])
        np.add.at(drows, (slice(None), slice(None), slice(None), ci1), g * cw1[None, None, None, :])
        dx = np.zeros((n, c, h, w), dtype=np.float64)
        np.add.at(dx, (slice(None), slice(None), ri0, slice(None)), drows * rw0[None, None, :, None])
        np.add.at(dx, (slice(None), slice(None), ri1, slice(None)), drows * rw1[None, None, :, None])
        return (dx,)

    return Tensor._make(np.ascontiguousarray(out), (t,), vjp)
