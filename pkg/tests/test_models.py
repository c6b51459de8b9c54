"""Model tests: receptive fields vs independent tracing, parameter tallies,
conv output arithmetic, fixed points, init statistics, shape invariance."""

import numpy as np
import pytest

from advdepth.autodiff import Tensor
from advdepth.models import (
    DiscriminatorSpec,
    GeneratorSpec,
    batch_norm,
    build_depth_discriminator,
    build_generator,
    build_pair_discriminator,
    generator_forward,
    init_params,
    receptive_fields,
)

RNG = np.random.default_rng(23)


# -- receptive fields ---------------------------------------------------------------


def test_default_discriminator_receptive_fields():
    table = receptive_fields(DiscriminatorSpec(in_channels=4))
    assert table.fields == (4, 10, 22, 46, 70)


def test_single_identity_layer_rf():
    table = receptive_fields(kernels=[1], strides=[1])
    assert table.fields == (1,)


def trace_rf_1d(kernels, strides, upto):
    """Independent oracle: propagate the index set influencing output neuron 0
    backwards through the first `upto` layers and measure its span."""
    idx = {0}
    for k, s in reversed(list(zip(kernels[:upto], strides[:upto]))):
        idx = {j * s + o for j in idx for o in range(k)}
    return max(idx) - min(idx) + 1


@pytest.mark.parametrize("strides", [(2, 2, 2, 1, 1), (2, 2, 2, 2, 1)])
def test_rf_matches_impulse_tracing(strides):
    kernels = (4, 4, 4, 4, 4)
    table = receptive_fields(kernels=kernels, strides=strides)
    for layer in range(1, 6):
        assert table.fields[layer - 1] == trace_rf_1d(kernels, strides, layer)


def test_rf_jump_column():
    table = receptive_fields(DiscriminatorSpec(in_channels=1))
    assert [j for _, j in table.rows] == [2, 4, 8, 8, 8]


# -- parameter counts ---------------------------------------------------------------


def tiny_unet_tally(b):
    """Independent per-layer arithmetic for the tiny_unet parameter count."""
    conv = lambda ci, co, k: ci * co * k * k + co
    return (
        conv(3, b, 3)            # enc1
        + conv(b, 2 * b, 3)      # enc2
        + conv(2 * b, 4 * b, 3)  # enc3
        + conv(4 * b, 4 * b, 3)  # mid
        + conv(4 * b, 2 * b, 4)  # dec2 (deconv, same count arithmetic)
        + conv(4 * b, 2 * b, 3)  # fuse2 after skip concat
        + conv(2 * b, b, 4)      # dec1 (deconv)
        + conv(2 * b, b, 3)      # fuse1 after skip concat
        + conv(b, 1, 3)          # head
    )


@pytest.mark.parametrize("b", [2, 8])
def test_tiny_unet_param_count_matches_tally(b):
    g = build_generator(GeneratorSpec(backbone="tiny_unet", base_channels=b))
    assert g.param_count() == tiny_unet_tally(b)


def test_tiny_unet_b2_fits_gradient_check_budget():
    g = build_generator(GeneratorSpec(backbone="tiny_unet", base_channels=2))
    assert g.param_count() <= 5000


def test_same_spec_same_shapes():
    for backbone in ("tiny_unet", "fcrn_like", "hu_like"):
        spec = GeneratorSpec(backbone=backbone, base_channels=4)
        a = build_generator(spec)
        b = build_generator(spec)
        assert list(a.params) == list(b.params)
        for k in a.params:
            assert a.params[k].shape == b.params[k].shape


# -- discriminator output geometry ----------------------------------------------------


def conv_out(n, k, s, p=1):
    return (n + 2 * p - k) // s + 1


def test_pair_discriminator_on_full_nyu_size():
    d = build_pair_discriminator()
    init_params(d, "normal_002", seed=0)
    x = RNG.normal(size=(1, 4, 228, 304))
    out = d.forward(x, mode="eval")
    h, w = 228, 304
    for k, s in zip(d.spec.kernels, d.spec.strides):
        h, w = conv_out(h, k, s), conv_out(w, k, s)
    assert out.shape == (1, 1, h, w)
    assert np.all(out > 0) and np.all(out < 1)


def test_small_discriminator_spatial_arithmetic():
    spec = DiscriminatorSpec(in_channels=1, channels=(4, 8, 8, 8, 1))
    d = build_depth_discriminator(spec)
    init_params(d, "normal_002", seed=1)
    for h, w in [(64, 64), (68, 92), (70, 70)]:
        out = d.forward(RNG.normal(size=(2, 1, h, w)), mode="train")
        eh, ew = h, w
        for k, s in zip(spec.kernels, spec.strides):
            eh, ew = conv_out(eh, k, s), conv_out(ew, k, s)
        assert out.shape == (2, 1, eh, ew)


def test_zero_weight_discriminator_outputs_exactly_half():
    for net in (build_pair_discriminator(
            DiscriminatorSpec(in_channels=4, channels=(4, 4, 4, 4, 1))),
            build_depth_discriminator(
            DiscriminatorSpec(in_channels=1, channels=(4, 4, 4, 4, 1)))):
        x = RNG.normal(size=(1, net.spec.in_channels, 70, 70))
        out = net.forward(x, mode="train")
        np.testing.assert_array_equal(out, 0.5)


def test_probabilities_stay_inside_open_interval():
    spec = DiscriminatorSpec(in_channels=1, channels=(4, 4, 4, 4, 1), use_bn=False)
    d = build_depth_discriminator(spec)
    init_params(d, "normal_002", seed=2)
    # enormous inputs would saturate a bare logistic to exactly 0/1 in float64
    out = d.forward(RNG.normal(size=(1, 1, 64, 64)) * 1e8, mode="eval")
    assert np.all(out > 0.0) and np.all(out < 1.0)


def test_wrong_channel_count_rejected():
    with pytest.raises(ValueError, match="4 input channels"):
        build_pair_discriminator(DiscriminatorSpec(in_channels=1))
    with pytest.raises(ValueError, match="1 input channel"):
        build_depth_discriminator(DiscriminatorSpec(in_channels=4))
    d = build_depth_discriminator()
    with pytest.raises(ValueError, match="expects 1 channels"):
        d.forward(RNG.normal(size=(1, 3, 64, 64)))


def test_discriminator_needs_exactly_five_layers():
    with pytest.raises(ValueError, match="5 convolution layers"):
        DiscriminatorSpec(in_channels=4, channels=(8, 8, 1),
                          kernels=(4, 4, 4), strides=(2, 2, 1))


# -- generator behavior ---------------------------------------------------------------


@pytest.mark.parametrize("backbone", ["tiny_unet", "fcrn_like", "hu_like"])
@pytest.mark.parametrize("size", [(64, 64), (52, 60)])
def test_generator_output_matches_input_size(backbone, size):
    g = build_generator(GeneratorSpec(backbone=backbone, base_channels=2))
    init_params(g, "normal_002", seed=3)
    h, w = size
    out = generator_forward(g, RNG.normal(size=(2, 3, h, w)))
    assert out.shape == (2, 1, h, w)


def test_zero_params_give_midpoint_depth():
    for backbone in ("tiny_unet", "fcrn_like", "hu_like"):
        spec = GeneratorSpec(backbone=backbone, base_channels=2,
                             depth_range=(0.3, 10.0))
        g = build_generator(spec)  # all parameters zero until initialized
        out = generator_forward(g, RNG.normal(size=(1, 3, 64, 64)))
        np.testing.assert_allclose(out, (0.3 + 10.0) / 2, atol=1e-12)


def test_output_within_depth_range_over_random_inputs():
    g = build_generator(GeneratorSpec(backbone="tiny_unet", base_channels=4,
                                      depth_range=(0.3, 10.0)))
    init_params(g, "normal_002", seed=4)
    lo, hi = 0.3, 10.0
    for trial in range(100):
        x = np.random.default_rng(trial).normal(size=(1, 3, 32, 32)) * 3
        out = generator_forward(g, x)
        assert out.min() >= lo and out.max() <= hi


def test_duplicated_inputs_give_identical_outputs():
    g = build_generator(GeneratorSpec(base_channels=4))
    init_params(g, "normal_002", seed=5)
    x = RNG.normal(size=(1, 3, 64, 64))
    out = generator_forward(g, np.concatenate([x, x], axis=0))
    np.testing.assert_array_equal(out[0], out[1])


def test_generator_accepts_image_list():
    from advdepth.data import synth_scene

    g = build_generator(GeneratorSpec(base_channels=2))
    init_params(g, "normal_002", seed=6)
    samples = [synth_scene(i, (64, 64)) for i in range(2)]
    maps = generator_forward(g, [s.image for s in samples])
    assert len(maps) == 2 and maps[0].depth.shape == (64, 64)


def test_linear_head_flag():
    spec = GeneratorSpec(base_channels=2, output="linear")
    g = build_generator(spec)
    out = generator_forward(g, RNG.normal(size=(1, 3, 64, 64)))
    np.testing.assert_allclose(out, 0.0, atol=1e-12)  # zero params, raw logits


# -- initialization -------------------------------------------------------------------


def test_normal_002_statistics():
    d = build_pair_discriminator()  # default widths: plenty of weights
    init_params(d, "normal_002", seed=7)
    weights = np.concatenate([
        p.reshape(-1) for n, p in d.params.items()
        if n.endswith(".w")
    ])
    assert weights.size >= 100_000
    assert abs(weights.mean()) < 3 * 0.02 / np.sqrt(weights.size)
    assert abs(weights.std() - 0.02) < 0.02 * 0.02
    gammas = np.concatenate([
        p.reshape(-1) for n, p in d.params.items() if n.endswith(".bn.gamma")
    ])
    assert abs(gammas.mean() - 1.0) < 0.01
    biases = np.concatenate([
        p.reshape(-1) for n, p in d.params.items() if n.endswith(".b")
    ])
    np.testing.assert_array_equal(biases, 0.0)


def test_warm_start_reproduces_forward_bitwise():
    spec = GeneratorSpec(base_channels=2)
    g1 = build_generator(spec)
    init_params(g1, "normal_002", seed=8)
    g2 = build_generator(spec)
    init_params(g2, "warm_start", checkpoint={k: v for k, v in g1.params.items()})
    x = RNG.normal(size=(1, 3, 64, 64))
    np.testing.assert_array_equal(g1.forward(x), g2.forward(x))


def test_warm_start_rejects_mismatched_spec():
    g1 = build_generator(GeneratorSpec(base_channels=2))
    init_params(g1, "normal_002", seed=9)
    g2 = build_generator(GeneratorSpec(base_channels=4))
    with pytest.raises(ValueError, match="mismatch|names"):
        init_params(g2, "warm_start", checkpoint=g1.params)


# -- batch norm op ---------------------------------------------------------------------


def test_batch_norm_normalizes_and_backprops():
    x = RNG.normal(size=(4, 3, 5, 5)) * 2 + 1
    buffers = {"bn.running_mean": np.zeros(3), "bn.running_var": np.ones(3)}
    tx = Tensor(x.copy(), requires_grad=True)
    gamma = Tensor(np.ones(3), requires_grad=True)
    beta = Tensor(np.zeros(3), requires_grad=True)
    y = batch_norm(tx, gamma, beta, buffers, "bn", mode="train")
    m = y.data.mean(axis=(0, 2, 3))
    v = y.data.var(axis=(0, 2, 3))
    np.testing.assert_allclose(m, 0.0, atol=1e-10)
    np.testing.assert_allclose(v, 1.0, atol=1e-3)  # eps shifts variance slightly
    # running buffers moved toward batch stats
    assert not np.allclose(buffers["bn.running_mean"], 0.0)

    w = RNG.normal(size=y.shape)
    (y * Tensor(w)).sum().backward()

    def f(v):
        bufs = {"bn.running_mean": np.zeros(3), "bn.running_var": np.ones(3)}
        out = batch_norm(Tensor(v), Tensor(np.ones(3)), Tensor(np.zeros(3)),
                         bufs, "bn", mode="train")
        return float((out.data * w).sum())

    from test_autodiff import fd_grad

    np.testing.assert_allclose(tx.grad, fd_grad(f, x.copy()), rtol=1e-4, atol=1e-7)


def test_batch_norm_eval_uses_running_stats():
    x = RNG.normal(size=(2, 2, 3, 3))
    buffers = {"bn.running_mean": np.array([1.0, -1.0]),
               "bn.running_var": np.array([4.0, 0.25])}
    y = batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                   buffers, "bn", mode="eval", eps=0.0)
    expect = np.empty_like(x)
    expect[:, 0] = (x[:, 0] - 1.0) / 2.0
    expect[:, 1] = (x[:, 1] + 1.0) / 0.5
    np.testing.assert_allclose(y.data, expect, rtol=1e-12)
