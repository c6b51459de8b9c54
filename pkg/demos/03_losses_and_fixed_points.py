"""
The loss menagerie and its adversarial fixed points
===================================================

Training blends three ingredients: binary cross-entropy for the two
discriminators, a blended adversarial term for the generator, and a
beta-weighted masked regression term. A useful sanity anchor: when a
discriminator is uninformative (outputs 0.5 everywhere) its loss must sit
at 2 ln 2 and the generator's adversarial loss at ln(1/2), independent of
the blend weight lambda.
"""

import math

import numpy as np

from advdepth.losses import (
    BASELINE_KINDS,
    LossWeights,
    baseline_loss,
    loss_dd,
    loss_g_pd,
    loss_g_semi,
    loss_pd,
)

# -- fixed points -------------------------------------------------------------
half = np.full((1, 1, 6, 6), 0.5)
print(f"2 ln 2           = {2 * math.log(2):.6f}")
print(f"pair-disc loss   = {loss_pd(half, half).scalar:.6f}")
print(f"depth-disc loss  = {loss_dd(half, half).scalar:.6f}")
print(f"ln(1/2)          = {math.log(0.5):.6f}")
for lam in (0.25, 0.7, 1.0):
    v = loss_g_semi(LossWeights(lam=lam), half, half).scalar
    print(f"generator loss   = {v:.6f}  (lambda={lam})")

# The saturating generator form log(1 - D) and the -log D alternative agree
# at D = 0.5 but differ away from it; both are available.
strong = np.full((1, 1, 6, 6), 0.9)  # discriminator fooled
for saturating in (True, False):
    w = LossWeights(saturating=saturating)
    form = "log(1-D)" if saturating else "-log D"
    print(f"fooled disc, {form:8s}: {loss_g_pd(strong, w).scalar:+.4f}")

# -- regression baselines -----------------------------------------------------
# The supervised step defaults to masked L1, but six regression losses share
# the same interface for the loss-ablation sweep.
rng = np.random.default_rng(3)
gt = rng.uniform(0.5, 9.5, size=(2, 1, 16, 16))
pred = gt * rng.uniform(0.8, 1.25, size=gt.shape)
mask = rng.random(gt.shape) > 0.1

print("\nloss on a noisy 25% perturbation of the ground truth:")
for kind in BASELINE_KINDS:
    print(f"  {kind:15s} {baseline_loss(kind, pred, gt, mask).scalar:.4f}")
