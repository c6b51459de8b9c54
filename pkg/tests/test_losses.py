"""Loss tests: analytic fixed points, scalar-loop oracle agreement, the
lam-boundary bitwise identity, frozen-discriminator zero gradients, and
finite-difference verification of every objective through the generator."""

import math

import numpy as np
import pytest

from advdepth.autodiff import Tensor
from advdepth.losses import (
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
    minimax_value,
    minimax_value_from_grids,
)
from oracles import (
    FDRig,
    fd_check,
    grad_vector,
    oracle_baseline,
    oracle_disc_loss,
    oracle_edge_aware,
    oracle_gen_adv,
    oracle_masked_l1,
)

RNG = np.random.default_rng(31)


def rand_grid(shape=(2, 1, 5, 7)):
    return RNG.uniform(0.02, 0.98, size=shape)


# -- fixed points -------------------------------------------------------------------


def test_uninformative_discriminator_fixed_points():
    half = np.full((2, 1, 4, 4), 0.5)
    assert abs(loss_pd(half, half).scalar - 2 * math.log(2)) < 1e-12
    assert abs(loss_dd(half, half).scalar - 2 * math.log(2)) < 1e-12
    assert abs(loss_g_pd(half).scalar - math.log(0.5)) < 1e-12
    assert abs(loss_g_dd(half).scalar - math.log(0.5)) < 1e-12
    for lam in (0.3, 0.7, 1.0):
        w = LossWeights(lam=lam)
        assert abs(loss_g_semi(w, half, half).scalar - math.log(0.5)) < 1e-12
    v = minimax_value_from_grids(half, half, half, half)
    assert abs(v.scalar - 4 * math.log(0.5)) < 1e-12


def test_perfect_discriminator_limits():
    e = 1e-7
    real = np.full((1, 1, 3, 3), 1.0 - e)
    fake = np.full((1, 1, 3, 3), e)
    assert 0 <= loss_pd(real, fake).scalar <= 2 * e * (1 + 1e-3) + 1e-12
    assert 0 <= loss_dd(real, fake).scalar <= 2 * e * (1 + 1e-3) + 1e-12
    # supremum limit: game value approaches 0 from below
    v = minimax_value_from_grids(real, fake, real, fake).scalar
    assert -5 * e < v < 0


def test_generator_loss_bounded_by_log_clamp():
    w = LossWeights()
    fake = np.full((1, 1, 2, 2), 1.0 - 1e-12)  # would be log(0) unclamped
    lv = loss_g_pd(fake, w)
    assert np.isfinite(lv.scalar)
    assert lv.scalar >= math.log(w.epsilon) - 1e-12


def test_zero_residual_supervised_loss_is_pure_gan():
    half = np.full((1, 1, 3, 3), 0.5)
    gt = RNG.uniform(1, 9, size=(1, 1, 8, 8))
    w = LossWeights(lam=0.7, beta=10.0)
    lv = loss_g_sup(w, half, half, gt.copy(), gt, np.ones_like(gt, dtype=bool))
    assert abs(lv.scalar - math.log(0.5)) < 1e-12
    assert lv.components["l1"] == 0.0


def test_beta_zero_degenerates_to_semi():
    pd_f, dd_f = rand_grid(), rand_grid()
    pred = RNG.uniform(1, 9, size=(1, 1, 6, 6))
    gt = RNG.uniform(1, 9, size=(1, 1, 6, 6))
    w = LossWeights(lam=0.7, beta=0.0)
    a = loss_g_sup(w, pd_f, dd_f, pred, gt, np.ones_like(gt, dtype=bool))
    b = loss_g_semi(w, pd_f, dd_f)
    assert abs(a.scalar - b.scalar) < 1e-15


# -- scalar-loop oracle agreement ------------------------------------------------------


def test_disc_losses_match_scalar_oracle():
    real, fake = rand_grid(), rand_grid((3, 1, 4, 6))
    assert abs(loss_pd(real, fake).scalar - oracle_disc_loss(real, fake)) < 1e-9
    assert abs(loss_dd(real, fake).scalar - oracle_disc_loss(real, fake)) < 1e-9


@pytest.mark.parametrize("saturating", [True, False])
def test_gen_adv_matches_scalar_oracle(saturating):
    fake = rand_grid()
    w = LossWeights(saturating=saturating)
    assert abs(loss_g_pd(fake, w).scalar
               - oracle_gen_adv(fake, saturating=saturating)) < 1e-9
    assert abs(loss_g_dd(fake, w).scalar
               - oracle_gen_adv(fake, saturating=saturating)) < 1e-9


def test_semi_composition_oracle():
    pd_f, dd_f = rand_grid(), rand_grid()
    w = LossWeights(lam=0.7)
    expect = 0.7 * oracle_gen_adv(pd_f) + 0.3 * oracle_gen_adv(dd_f)
    lv = loss_g_semi(w, pd_f, dd_f)
    assert abs(lv.scalar - expect) < 1e-9
    assert set(lv.components) == {"g_pd", "g_dd"}


def test_sup_composition_oracle():
    pd_f, dd_f = rand_grid(), rand_grid()
    pred = RNG.uniform(1, 9, size=(2, 1, 6, 6))
    gt = RNG.uniform(1, 9, size=(2, 1, 6, 6))
    mask = RNG.uniform(size=(2, 1, 6, 6)) > 0.3
    w = LossWeights(lam=0.7, beta=10.0)
    expect = (0.7 * oracle_gen_adv(pd_f) + 0.3 * oracle_gen_adv(dd_f)
              + 10.0 * oracle_masked_l1(pred, gt, mask))
    assert abs(loss_g_sup(w, pd_f, dd_f, pred, gt, mask).scalar - expect) < 1e-9


def test_minimax_is_negated_discriminator_losses():
    pr, pf, dr, df = rand_grid(), rand_grid(), rand_grid(), rand_grid()
    v = minimax_value_from_grids(pr, pf, dr, df).scalar
    assert abs(v + oracle_disc_loss(pr, pf) + oracle_disc_loss(dr, df)) < 1e-9


def test_minimax_network_wrapper_consistent():
    rig = FDRig(seed=3)
    pred = rig.g.forward(rig.images, mode="eval")[:, :, :24, :24]
    v = minimax_value(rig.pd, rig.dd, rig.real_images, rig.gt, rig.images, pred)
    pd_real = rig.pd.forward(np.concatenate([rig.real_images, rig.gt], axis=1))
    pd_fake = rig.pd.forward(np.concatenate([rig.images, pred], axis=1))
    dd_real = rig.dd.forward(rig.gt)
    dd_fake = rig.dd.forward(pred)
    expect = -(oracle_disc_loss(pd_real, pd_fake) + oracle_disc_loss(dd_real, dd_fake))
    assert abs(v.scalar - expect) < 1e-9


# -- baseline losses -------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["l1", "l2", "huber", "scale_invariant",
                                  "berhu", "edge_aware"])
def test_zero_residual_gives_zero(kind):
    gt = RNG.uniform(1, 9, size=(1, 1, 6, 6))
    lv = baseline_loss(kind, gt.copy(), gt, np.ones_like(gt, dtype=bool))
    assert abs(lv.scalar) < 1e-12


@pytest.mark.parametrize("kind", ["l1", "l2", "huber", "scale_invariant", "berhu"])
def test_baselines_match_scalar_oracle(kind):
    pred = RNG.uniform(1, 9, size=(2, 1, 7, 5))
    gt = RNG.uniform(1, 9, size=(2, 1, 7, 5))
    mask = RNG.uniform(size=(2, 1, 7, 5)) > 0.25
    lv = baseline_loss(kind, pred, gt, mask)
    assert abs(lv.scalar - oracle_baseline(kind, pred, gt, mask)) < 1e-9


def test_edge_aware_matches_scalar_oracle():
    pred = RNG.uniform(1, 9, size=(1, 1, 6, 7))
    gt = RNG.uniform(1, 9, size=(1, 1, 6, 7))
    mask = RNG.uniform(size=(1, 1, 6, 7)) > 0.2
    lv = baseline_loss("edge_aware", pred, gt, mask)
    assert abs(lv.scalar - oracle_edge_aware(pred, gt, mask)) < 1e-9


def test_huber_hand_value():
    gt = np.full((1, 1, 1, 2), 1.0)
    pred = gt + np.array([0.5, 2.0]).reshape(1, 1, 1, 2)
    lv = baseline_loss("huber", pred, gt, np.ones_like(gt, dtype=bool))
    assert abs(lv.scalar - (0.125 + 1.5) / 2) < 1e-12


def test_scale_invariant_constant_ratio_closed_form():
    gt = RNG.uniform(1, 5, size=(1, 1, 5, 5))
    lv = baseline_loss("scale_invariant", 2.0 * gt, gt,
                       np.ones_like(gt, dtype=bool))
    assert abs(lv.scalar - 0.5 * math.log(2) ** 2) < 1e-12


def test_scale_invariance_holds_with_unit_coefficient():
    pred = RNG.uniform(1, 9, size=(1, 1, 6, 6))
    gt = RNG.uniform(1, 9, size=(1, 1, 6, 6))
    mask = np.ones_like(gt, dtype=bool)
    base = baseline_loss("scale_invariant", pred, gt, mask, si_coef=1.0).scalar
    for c in (0.1, 3.7, 42.0):
        scaled = baseline_loss("scale_invariant", c * pred, gt, mask,
                               si_coef=1.0).scalar
        assert abs(scaled - base) < 1e-9


def test_berhu_hand_value():
    gt = np.full((1, 1, 1, 2), 1.0)
    pred = gt + np.array([0.1, 3.0]).reshape(1, 1, 1, 2)
    lv = baseline_loss("berhu", pred, gt, np.ones_like(gt, dtype=bool))
    assert abs(lv.scalar - 3.95) < 1e-12


def test_nonpositive_depth_rejected_for_log_loss():
    gt = RNG.uniform(1, 9, size=(1, 1, 4, 4))
    pred = gt.copy()
    pred[0, 0, 0, 0] = -0.5
    with pytest.raises(ValueError, match="positive"):
        baseline_loss("scale_invariant", pred, gt, np.ones_like(gt, dtype=bool))


def test_empty_mask_rejected():
    gt = RNG.uniform(1, 9, size=(1, 1, 4, 4))
    with pytest.raises(ValueError, match="zero valid"):
        masked_l1(gt, gt, np.zeros_like(gt, dtype=bool))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown baseline"):
        baseline_loss("l3", np.ones((2, 2)), np.ones((2, 2)),
                      np.ones((2, 2), dtype=bool))


def test_empty_grid_rejected():
    with pytest.raises(ValueError, match="empty"):
        loss_g_pd(np.zeros((0, 1, 2, 2)))


# -- LossWeights / LossValue contracts ---------------------------------------------------


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(lam=0.0)
    with pytest.raises(ValueError):
        LossWeights(lam=1.2)
    with pytest.raises(ValueError):
        LossWeights(beta=-1.0)
    with pytest.raises(ValueError):
        LossWeights(epsilon=0.0)


def test_loss_value_component_reconstruction_enforced():
    with pytest.raises(ValueError, match="reconstruct"):
        LossValue(scalar=5.0, components={"a": 1.0}, weights={"a": 1.0})


def test_beta_schedule():
    w = LossWeights(beta=10.0, beta_decay=True)
    assert beta_at(w, 0, 300) == 10.0
    assert beta_at(w, 100, 300) == 1.0
    assert beta_at(w, 299, 300) == 1.0
    mid = beta_at(w, 50, 300)
    assert 1.0 < mid < 10.0
    const = LossWeights(beta=10.0, beta_decay=False)
    assert beta_at(const, 50, 300) == 10.0


# -- structural gradient properties -------------------------------------------------------


def test_lam_one_is_bitwise_pd_only():
    rig = FDRig(seed=5)
    w1 = LossWeights(lam=1.0)

    pred_a, params_a = rig.predict(rig.theta0)
    pd_a, dd_a = rig.disc_grids(pred_a)
    semi = loss_g_semi(w1, pd_a, dd_a)
    semi.node.backward()
    grads_semi = grad_vector(params_a)

    pred_b, params_b = rig.predict(rig.theta0)
    pd_b, _ = rig.disc_grids(pred_b)
    only = loss_g_pd(pd_b, w1)
    only.node.backward()
    grads_only = grad_vector(params_b)

    assert semi.scalar == only.scalar  # bitwise
    np.testing.assert_array_equal(grads_semi, grads_only)


def test_frozen_constant_discriminators_give_exactly_zero_gradient():
    rig = FDRig(seed=6)
    pred, params = rig.predict(rig.theta0)
    const_pd = Tensor(np.full((2, 1, 3, 3), 0.7))
    const_dd = Tensor(np.full((2, 1, 3, 3), 0.4))
    lv = loss_g_semi(LossWeights(lam=0.7), const_pd, const_dd)
    lv.node.backward()
    g = grad_vector(params)
    np.testing.assert_array_equal(g, 0.0)
    # the prediction itself received no gradient at all
    assert pred.grad is None


# -- finite-difference verification through the generator ----------------------------------


def _loss_builders():
    w = LossWeights(lam=0.7, beta=10.0)

    def disc_pd(pred, rig):
        pd_fake, _ = rig.disc_grids(pred)
        pd_real, _ = rig.real_grids()
        return loss_pd(pd_real, pd_fake, w)

    def gen_pd(pred, rig):
        pd_fake, _ = rig.disc_grids(pred)
        return loss_g_pd(pd_fake, w)

    def disc_dd(pred, rig):
        _, dd_fake = rig.disc_grids(pred)
        _, dd_real = rig.real_grids()
        return loss_dd(dd_real, dd_fake, w)

    def gen_dd(pred, rig):
        _, dd_fake = rig.disc_grids(pred)
        return loss_g_dd(dd_fake, w)

    def semi(pred, rig):
        pd_fake, dd_fake = rig.disc_grids(pred)
        return loss_g_semi(w, pd_fake, dd_fake)

    def sup(pred, rig):
        pd_fake, dd_fake = rig.disc_grids(pred)
        return loss_g_sup(w, pd_fake, dd_fake, pred, Tensor(rig.gt), rig.mask)

    out = {"pd": disc_pd, "g_pd": gen_pd, "dd": disc_dd, "g_dd": gen_dd,
           "semi": semi, "sup": sup}
    for kind in ("l1", "l2", "huber", "scale_invariant", "berhu", "edge_aware"):
        def regress(pred, rig, kind=kind):
            return baseline_loss(kind, pred, Tensor(rig.gt), rig.mask)

        out[kind] = regress
    return out


LOSS_BUILDERS = _loss_builders()


@pytest.mark.parametrize("name", sorted(LOSS_BUILDERS))
def test_gradients_match_finite_differences(name):
    rig = FDRig(seed=17)
    fd_check(rig, LOSS_BUILDERS[name], n_probes=10, step=1e-5, tol=1e-4)
