"""advdepth: semi-supervised adversarial monocular depth estimation, pure NumPy.

A generator regresses depth from a single RGB image; two small patch
discriminators (one judging RGB+depth pairs, one judging depth maps alone)
supply adversarial feedback so that unlabeled images can contribute to
training. Everything — autodiff, networks, optimizer — is implemented on
NumPy in float64 for deterministic, replayable runs.
"""

__version__ = "0.1.0"
