"""
How far does each discriminator layer see?
==========================================

The discriminators are patch classifiers: a stack of stride-2 then stride-1
4x4 convolutions whose final neurons each judge one overlapping input patch.
The receptive-field recurrence (rf += (k - 1) * jump, jump *= stride) says
exactly how large that patch is, layer by layer.
"""

from advdepth.models import DiscriminatorSpec, receptive_fields

# The default five-layer discriminator: strides 2,2,2,1,1.
spec = DiscriminatorSpec(in_channels=4)
table = receptive_fields(spec)

print("layer  kernel  stride  receptive field  jump")
for i, (rf, jump) in enumerate(table.rows):
    print(f"{i + 1:5d}  {spec.kernels[i]:6d}  {spec.strides[i]:6d}"
          f"  {rf:15d}  {jump:4d}")
print(f"\nfinal patch size: {table.fields[-1]}x{table.fields[-1]} pixels")

# Shrinking the stride plan shrinks the judged patch: an all-stride-1 stack
# grows the field only linearly.
narrow = DiscriminatorSpec(in_channels=4, strides=(1, 1, 1, 1, 1))
print(f"all-stride-1 fields: {receptive_fields(narrow).fields}")

# One more stride-2 stage instead widens it well past the 70-pixel default.
wide = DiscriminatorSpec(in_channels=4, strides=(2, 2, 2, 2, 1))
print(f"extra-stride-2 fields: {receptive_fields(wide).fields}")
