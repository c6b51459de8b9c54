"""Dataset ingestion, preprocessing, masking, synthetic scenes and batching.

Images live as float64 H×W×3 arrays wrapped in :class:`Image`, which tracks
whether channel normalization has already been applied (normalizing twice is
an error, not a silent corruption). Depth maps are metric, in meters, and
invalid pixels are expressed only through a companion :class:`ValidityMask`,
never as in-band magic values.

The synthetic renderer produces pinhole views of a floor + back wall + a few
boxes with analytic ground-truth depth, which is what the test suite and the
acceptance experiments train on.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

__all__ = [
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "CLASS_NAMES",
    "Image",
    "DepthMap",
    "ValidityMask",
    "LabeledSample",
    "UnlabeledSample",
    "DatasetSplit",
    "Batch",
    "PreprocessProfile",
    "PROFILES",
    "resize_bilinear",
    "resize_nearest",
    "center_crop",
    "normalize_image",
    "denormalize_image",
    "preprocess",
    "make_mask",
    "MASK_PROFILES",
    "mask_for_profile",
    "Scene",
    "Box",
    "build_scene",
    "render_scene",
    "synth_scene",
    "save_dataset",
    "load_dataset",
    "epoch_plan",
    "batch_iterator",
    "collate_labeled",
    "collate_unlabeled",
]

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])

# semantic ids: index into this tuple
CLASS_NAMES = ("floor", "structure", "props", "furniture", "missing")


# -- domain types ----------------------------------------------------------------


@dataclass
class Image:
    """H×W×3 float64 pixels; `normalized` means ImageNet stats were applied."""

    pixels: np.ndarray
    normalized: bool = False
    source_bit_depth: int = 8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"Image pixels must be H×W×3, got {self.pixels.shape}")

    @property
    def shape(self):
        return self.pixels.shape


@dataclass
class DepthMap:
    """H×W metric depth in meters plus a plausible (min, max) range hint."""

    depth: np.ndarray
    range_hint: tuple[float, float] = (0.0, 10.0)

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.ndim != 2:
            raise ValueError(f"DepthMap must be H×W, got {self.depth.shape}")

    @property
    def shape(self):
        return self.depth.shape


@dataclass
class ValidityMask:
    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError(f"ValidityMask must be H×W, got {self.mask.shape}")

    @property
    def shape(self):
        return self.mask.shape

    def count(self) -> int:
        return int(self.mask.sum())


@dataclass
class LabeledSample:
    image: Image
    depth: DepthMap
    mask: ValidityMask
    semantic: np.ndarray | None = None  # H×W uint8 labels, ids 0..4

    def __post_init__(self):
        h, w = self.depth.shape
        if self.image.pixels.shape[:2] != (h, w):
            raise ValueError("image and depth are not spatially aligned")
        if self.mask.shape != (h, w):
            raise ValueError("mask and depth are not spatially aligned")
        if self.semantic is not None:
            self.semantic = np.asarray(self.semantic)
            if self.semantic.shape != (h, w):
                raise ValueError("semantic labels are not spatially aligned")


@dataclass
class UnlabeledSample:
    image: Image


@dataclass
class DatasetSplit:
    labeled: list[LabeledSample]
    unlabeled: list[UnlabeledSample]
    seed: int = 0

    def __post_init__(self):
        if len(self.labeled) < 1:
            raise ValueError("a dataset split needs at least one labeled sample")


@dataclass
class Batch:
    kind: str  # "labeled" | "unlabeled"
    indices: list[int]
    epoch: int


# -- resizing / cropping / normalization -------------------------------------------


def _axis_weights(n_in: int, n_out: int):
    """Half-pixel bilinear sample positions for a 1-D resize."""
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    w1 = src - i0
    return i0, i1, 1.0 - w1, w1


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an H×W or H×W×C array (half-pixel convention)."""
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape[:2]
    if (h, w) == (out_h, out_w):
        return arr.copy()
    ri0, ri1, rw0, rw1 = _axis_weights(h, out_h)
    ci0, ci1, cw0, cw1 = _axis_weights(w, out_w)
    if arr.ndim == 2:
        rows = arr[ri0, :] * rw0[:, None] + arr[ri1, :] * rw1[:, None]
        return rows[:, ci0] * cw0[None, :] + rows[:, ci1] * cw1[None, :]
    rows = arr[ri0, :, :] * rw0[:, None, None] + arr[ri1, :, :] * rw1[:, None, None]
    return rows[:, ci0, :] * cw0[None, :, None] + rows[:, ci1, :] * cw1[None, :, None]


def resize_nearest(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize; the right choice for label maps."""
    arr = np.asarray(arr)
    h, w = arr.shape[:2]
    if (h, w) == (out_h, out_w):
        return arr.copy()
    ri = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    ci = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    return arr[np.ix_(ri, ci)]


def center_crop(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = arr.shape[:2]
    if out_h > h or out_w > w:
        raise ValueError(f"crop {out_h}×{out_w} larger than input {h}×{w}")
    top = (h - out_h) // 2
    left = (w - out_w) // 2
    return arr[top : top + out_h, left : left + out_w].copy()


def normalize_image(raw) -> Image:
    """8-bit RGB -> normalized Image via (x/255 - mean_c) / std_c."""
    if isinstance(raw, Image):
        if raw.normalized:
            raise ValueError("image is already normalized; refusing to normalize twice")
        raw = raw.pixels
    x = np.asarray(raw, dtype=np.float64)
    pixels = (x / 255.0 - IMAGENET_MEAN) / IMAGENET_STD
    return Image(pixels, normalized=True)


def denormalize_image(img: Image) -> np.ndarray:
    """Inverse of normalize_image, back to uint8 for visualization/storage."""
    if not img.normalized:
        raise ValueError("image is not normalized")
    x = (img.pixels * IMAGENET_STD + IMAGENET_MEAN) * 255.0
    return np.clip(np.round(x), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class PreprocessProfile:
    """Geometry recipe applied before normalization.

    resize/crop are (height, width) or None to skip the stage.
    """

    name: str
    resize: tuple[int, int] | None = None
    crop: tuple[int, int] | None = None


PROFILES = {
    # resize to 320×240 (w×h), then center-crop to 304×228 (w×h)
    "nyu": PreprocessProfile("nyu", resize=(240, 320), crop=(228, 304)),
    # both image and depth to a uniform 320×240 regardless of raw size
    "make3d": PreprocessProfile("make3d", resize=(240, 320)),
    # no geometry change, normalization only
    "identity": PreprocessProfile("identity"),
}


def preprocess(raw_image, raw_depth=None, profile="identity"):
    """8-bit RGB (+ optional metric depth) -> (Image, DepthMap | None).

    Geometry per profile, then ImageNet normalization. Depth goes through
    the same resize/crop with values kept in meters. Profiles with no
    resize stage require the depth to already match the image shape.
    """
    if isinstance(profile, str):
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise ValueError(f"unknown preprocessing profile {profile!r}") from None
    img = np.asarray(raw_image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"raw image must be H×W×3, got {img.shape}")
    dep = None if raw_depth is None else np.asarray(raw_depth, dtype=np.float64)
    if dep is not None and profile.resize is None and dep.shape != img.shape[:2]:
        raise ValueError(
            f"image {img.shape[:2]} and depth {dep.shape} dimensions differ"
        )
    if profile.resize is not None:
        th, tw = profile.resize
        img = resize_bilinear(img, th, tw)
        if dep is not None:
            dep = resize_bilinear(dep, th, tw)
    if profile.crop is not None:
        th, tw = profile.crop
        img = center_crop(img, th, tw)
        if dep is not None:
            dep = center_crop(dep, th, tw)
    out_img = normalize_image(img)
    out_dep = None if dep is None else DepthMap(dep)
    return out_img, out_dep


# -- validity masks ---------------------------------------------------------------

# name -> (min_m, max_m, include_max)
MASK_PROFILES = {
    "kitti": (0.0, 80.0, False),  # strict both ends: 0 < d < 80
    "make3d": (0.0, 70.0, True),  # d > 70 excluded, 70 itself kept
    "positive": (0.0, float("inf"), False),
}


def make_mask(depth: DepthMap | np.ndarray, min_m: float, max_m: float,
              include_max: bool = False) -> ValidityMask:
    """Range mask: min_m < d < max_m (or ≤ max_m when include_max)."""
    if min_m >= max_m:
        raise ValueError(f"min_m {min_m} must be < max_m {max_m}")
    d = depth.depth if isinstance(depth, DepthMap) else np.asarray(depth, dtype=np.float64)
    if include_max:
        m = (d > min_m) & (d <= max_m)
    else:
        m = (d > min_m) & (d < max_m)
    if not m.any():
        warnings.warn("validity mask has zero true pixels", stacklevel=2)
    return ValidityMask(m)


def mask_for_profile(depth, profile: str) -> ValidityMask:
    try:
        lo, hi, inc = MASK_PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown mask profile {profile!r}") from None
    return make_mask(depth, lo, hi, include_max=inc)


# -- synthetic scenes --------------------------------------------------------------


@dataclass
class Box:
    center: np.ndarray  # (3,) box center in camera space (x right, y down, z fwd)
    half: np.ndarray  # (3,) half extents
    albedo: np.ndarray  # (3,) RGB in [0,1]
    semantic_id: int


@dataclass
class Scene:
    floor_y: float  # floor plane y = floor_y (y points down, camera at origin)
    wall_z: float  # back wall plane z = wall_z
    boxes: list[Box] = field(default_factory=list)
    floor_albedo: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 0.5]))
    wall_albedo: np.ndarray = field(default_factory=lambda: np.array([0.6, 0.6, 0.65]))
    light_dir: np.ndarray = field(default_factory=lambda: np.array([0.3, -0.8, 0.5]))
    ambient: float = 0.25
    near: float = 0.3
    far: float = 10.0
    fov_deg: float = 60.0


def build_scene(seed: int, n_boxes: int | None = None) -> Scene:
    """Random desk-scale room: floor, back wall, 1–6 boxes. Deterministic."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD5]))
    if n_boxes is None:
        n_boxes = int(rng.integers(1, 7))
    floor_y = float(rng.uniform(1.2, 1.8))
    wall_z = float(rng.uniform(6.0, 9.0))
    scene = Scene(
        floor_y=floor_y,
        wall_z=wall_z,
        floor_albedo=rng.uniform(0.25, 0.8, size=3),
        wall_albedo=rng.uniform(0.25, 0.8, size=3),
        light_dir=np.array([rng.uniform(-0.5, 0.5), rng.uniform(-1.0, -0.4),
                            rng.uniform(0.2, 0.8)]),
        ambient=float(rng.uniform(0.18, 0.32)),
    )
    for b in range(n_boxes):
        half = rng.uniform(0.15, 0.6, size=3)
        cx = float(rng.uniform(-2.0, 2.0))
        cz = float(rng.uniform(1.8, wall_z - 0.8))
        center = np.array([cx, floor_y - half[1], cz])  # resting on the floor
        scene.boxes.append(
            Box(center=center, half=half, albedo=rng.uniform(0.2, 0.9, size=3),
                semantic_id=2 + (b % 2))  # props / furniture alternating
        )
    return scene


def _ray_grid(h: int, w: int, fov_deg: float) -> np.ndarray:
    """Unit ray directions (H, W, 3) through each pixel center."""
    f = 0.5 * w / np.tan(np.deg2rad(fov_deg) / 2.0)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    u, v = np.meshgrid(np.arange(w, dtype=np.float64),
                       np.arange(h, dtype=np.float64))
    d = np.stack([(u - cx) / f, (v - cy) / f, np.ones_like(u)], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _box_intersect(origin, dirs, box: Box):
    """Slab-method ray/AABB intersection. Returns (t, normal) with t=inf on miss."""
    lo = box.center - box.half
    hi = box.center + box.half
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t0 = (lo - origin) * inv
        t1 = (hi - origin) * inv
    tmin = np.minimum(t0, t1)
    tmax = np.maximum(t0, t1)
    t_enter = tmin.max(axis=-1)
    t_exit = tmax.min(axis=-1)
    hit = (t_enter <= t_exit) & (t_exit > 0) & (t_enter > 1e-9)
    t = np.where(hit, t_enter, np.inf)
    # normal: the axis whose slab was entered last, signed against the ray
    axis = tmin.argmax(axis=-1)
    normal = np.zeros(dirs.shape)
    rows = np.arange(dirs.shape[0])[:, None]
    cols = np.arange(dirs.shape[1])[None, :]
    normal[rows, cols, axis] = -np.sign(dirs[rows, cols, axis])
    return t, normal


def render_scene(scene: Scene, size: tuple[int, int]):
    """Raycast a scene; returns (rgb_uint8 H×W×3, depth H×W, semantic H×W).

    Depth is the Euclidean ray-surface distance clipped to [near, far].
    """
    h, w = size
    dirs = _ray_grid(h, w, scene.fov_deg)
    origin = np.zeros(3)

    t_best = np.full((h, w), np.inf)
    normal = np.zeros((h, w, 3))
    albedo = np.zeros((h, w, 3))
    semantic = np.full((h, w), 1, dtype=np.uint8)  # default: wall/structure

    # back wall z = wall_z (dz > 0 for every ray by construction)
    t_wall = scene.wall_z / dirs[..., 2]
    t_best[:] = t_wall
    normal[..., 2] = -1.0
    albedo[:] = scene.wall_albedo

    # floor plane y = floor_y, only rays pointing down can hit it
    dy = dirs[..., 1]
    with np.errstate(divide="ignore"):
        t_floor = np.where(dy > 1e-12, scene.floor_y / dy, np.inf)
    closer = t_floor < t_best
    t_best = np.where(closer, t_floor, t_best)
    normal[closer] = [0.0, -1.0, 0.0]
    albedo[closer] = scene.floor_albedo
    semantic[closer] = 0  # floor

    for box in scene.boxes:
        t_box, n_box = _box_intersect(origin, dirs, box)
        closer = t_box < t_best
        t_best = np.where(closer, t_box, t_best)
        normal[closer] = n_box[closer]
        albedo[closer] = box.albedo
        semantic[closer] = box.semantic_id

    depth = np.clip(t_best, scene.near, scene.far)

    light = -scene.light_dir / np.linalg.norm(scene.light_dir)
    lambert = np.maximum((normal * light).sum(axis=-1), 0.0)
    shade = scene.ambient + (1.0 - scene.ambient) * lambert
    rgb = np.clip(albedo * shade[..., None], 0.0, 1.0)
    rgb_u8 = np.round(rgb * 255.0).astype(np.uint8)
    return rgb_u8, depth, semantic


def synth_scene(seed: int, size: tuple[int, int] = (64, 64),
                n_boxes: int | None = None) -> LabeledSample:
    """Deterministic synthetic LabeledSample at the given (H, W)."""
    h, w = size
    if h < 64 or w < 64:
        raise ValueError(f"scene size must be at least 64×64, got {h}×{w}")
    scene = build_scene(seed, n_boxes=n_boxes)
    rgb_u8, depth, semantic = render_scene(scene, size)
    image = normalize_image(rgb_u8)
    dm = DepthMap(depth, range_hint=(scene.near, scene.far))
    mask = make_mask(dm, 0.0, float("inf"))
    return LabeledSample(image=image, depth=dm, mask=mask, semantic=semantic)


# -- on-disk dataset ---------------------------------------------------------------


def _save_depth_png(path: str, depth: np.ndarray, scale: float):
    stored = np.round(depth / scale)
    if stored.max() > 65535:
        raise ValueError(f"depth {depth.max():.3f} m overflows 16-bit at scale {scale}")
    PILImage.fromarray(stored.astype(np.uint16)).save(path)


def _load_depth_png(path: str, scale: float) -> np.ndarray:
    arr = np.asarray(PILImage.open(path), dtype=np.float64)
    return arr * scale


def save_dataset(root: str, labeled: list[LabeledSample],
                 unlabeled: list[UnlabeledSample], depth_scale: float = 1e-3,
                 profile: str = "identity"):
    """Write the directory layout: images/, depths/, semantic/, manifest.json."""
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    os.makedirs(os.path.join(root, "depths"), exist_ok=True)
    man = {"labeled": [], "unlabeled": [], "depth_scale": depth_scale,
           "profile": profile}
    for i, s in enumerate(labeled):
        img_rel = f"images/labeled_{i:05d}.png"
        dep_rel = f"depths/labeled_{i:05d}.png"
        PILImage.fromarray(denormalize_image(s.image)).save(os.path.join(root, img_rel))
        _save_depth_png(os.path.join(root, dep_rel), s.depth.depth, depth_scale)
        entry = {"image": img_rel, "depth": dep_rel}
        if s.semantic is not None:
            os.makedirs(os.path.join(root, "semantic"), exist_ok=True)
            sem_rel = f"semantic/labeled_{i:05d}.png"
            PILImage.fromarray(s.semantic.astype(np.uint8)).save(
                os.path.join(root, sem_rel))
            entry["semantic"] = sem_rel
        man["labeled"].append(entry)
    for i, s in enumerate(unlabeled):
        img_rel = f"images/unlabeled_{i:05d}.png"
        PILImage.fromarray(denormalize_image(s.image)).save(os.path.join(root, img_rel))
        man["unlabeled"].append({"image": img_rel})
    with open(os.path.join(root, "manifest.json"), "w") as f:
        json.dump(man, f, indent=2)


def load_dataset(root: str, manifest: str = "manifest.json", seed: int = 0) -> DatasetSplit:
    """Read a dataset directory back into a DatasetSplit, in manifest order."""
    man_path = os.path.join(root, manifest)
    if not os.path.exists(man_path):
        raise FileNotFoundError(f"manifest not found: {man_path}")
    with open(man_path) as f:
        man = json.load(f)
    scale = float(man.get("depth_scale", 1e-3))
    if len(man.get("labeled", [])) == 0:
        raise ValueError("manifest lists zero labeled samples")

    labeled = []
    shape = None
    for entry in man["labeled"]:
        img_path = os.path.join(root, entry["image"])
        dep_path = os.path.join(root, entry["depth"])
        for p in (img_path, dep_path):
            if not os.path.exists(p):
                raise FileNotFoundError(f"dataset file missing: {p}")
        raw = np.asarray(PILImage.open(img_path).convert("RGB"))
        depth = _load_depth_png(dep_path, scale)
        if depth.shape != raw.shape[:2]:
            raise ValueError(
                f"shape mismatch: image {raw.shape[:2]} vs depth {depth.shape}"
            )
        if shape is None:
            shape = raw.shape[:2]
        elif raw.shape[:2] != shape:
            raise ValueError(f"inconsistent sample shapes: {raw.shape[:2]} vs {shape}")
        image = normalize_image(raw)
        dm = DepthMap(depth)
        mask = make_mask(dm, 0.0, float("inf"))
        semantic = None
        if "semantic" in entry:
            sem_path = os.path.join(root, entry["semantic"])
            if not os.path.exists(sem_path):
                raise FileNotFoundError(f"dataset file missing: {sem_path}")
            semantic = np.asarray(PILImage.open(sem_path), dtype=np.uint8)
        labeled.append(LabeledSample(image=image, depth=dm, mask=mask, semantic=semantic))

    unlabeled = []
    for entry in man.get("unlabeled", []):
        img_path = os.path.join(root, entry["image"])
        if not os.path.exists(img_path):
            raise FileNotFoundError(f"dataset file missing: {img_path}")
        raw = np.asarray(PILImage.open(img_path).convert("RGB"))
        if shape is not None and raw.shape[:2] != shape:
            raise ValueError(f"inconsistent sample shapes: {raw.shape[:2]} vs {shape}")
        unlabeled.append(UnlabeledSample(image=normalize_image(raw)))

    return DatasetSplit(labeled=labeled, unlabeled=unlabeled, seed=seed)


# -- batching ----------------------------------------------------------------------


def _epoch_rng(seed: int, epoch: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(epoch), stream]))


def _chunk(ids: np.ndarray, batch_size: int) -> list[list[int]]:
    return [ids[i : i + batch_size].tolist() for i in range(0, len(ids), batch_size)]


def epoch_plan(n: int, m: int, batch_size: int, mode: str, seed: int,
               epoch: int) -> list[Batch]:
    """Batch schedule for one epoch.

    supervised: one shuffled pass over the n labeled samples.
    semi: one shuffled pass over the m unlabeled samples.
    alternating: L,U,L,U,... — the labeled pass sets the epoch length and each
    labeled batch is followed by one unlabeled batch drawn from a reshuffled
    unlabeled cycle (repeating the pool if it is smaller than needed).
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if mode in ("semi", "alternating") and m == 0:
        raise ValueError(f"mode {mode!r} requires unlabeled samples")
    lab_ids = _epoch_rng(seed, epoch, 0).permutation(n)
    if mode == "supervised":
        return [Batch("labeled", b, epoch) for b in _chunk(lab_ids, batch_size)]
    rng_u = _epoch_rng(seed, epoch, 1)
    if mode == "semi":
        return [Batch("unlabeled", b, epoch)
                for b in _chunk(rng_u.permutation(m), batch_size)]
    if mode != "alternating":
        raise ValueError(f"unknown batching mode {mode!r}")
    lab_batches = _chunk(lab_ids, batch_size)
    needed = len(lab_batches) * batch_size
    pool = np.concatenate([rng_u.permutation(m)
                           for _ in range(-(-needed // m))])[:needed]
    unl_batches = _chunk(pool, batch_size)
    out = []
    for lb, ub in zip(lab_batches, unl_batches):
        out.append(Batch("labeled", lb, epoch))
        out.append(Batch("unlabeled", ub, epoch))
    return out


def batch_iterator(split: DatasetSplit, batch_size: int, mode: str, seed: int,
                   epochs: int = 1, start_epoch: int = 0):
    """Yield Batch objects for `epochs` epochs starting at `start_epoch`."""
    n, m = len(split.labeled), len(split.unlabeled)
    for epoch in range(start_epoch, start_epoch + epochs):
        yield from epoch_plan(n, m, batch_size, mode, seed, epoch)


def collate_labeled(split: DatasetSplit, indices) -> dict:
    """Stack labeled samples into NCHW arrays for the networks."""
    samples = [split.labeled[i] for i in indices]
    return {
        "images": np.stack([s.image.pixels.transpose(2, 0, 1) for s in samples]),
        "depths": np.stack([s.depth.depth[None] for s in samples]),
        "masks": np.stack([s.mask.mask[None] for s in samples]),
    }


def collate_unlabeled(split: DatasetSplit, indices) -> dict:
    samples = [split.unlabeled[i] for i in indices]
    return {
        "images": np.stack([s.image.pixels.transpose(2, 0, 1) for s in samples]),
    }
