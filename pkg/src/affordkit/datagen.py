"""Deterministic synthetic data: part-labeled parametric shapes, partial-view
crops, resampling, and the on-disk dataset / text-bank formats.

Every generator is a pure function of its inputs and a seed.  Seeds for
sub-streams are mixed through ``numpy.random.SeedSequence`` (never Python's
``hash``), so files written on any platform are byte-identical.

Four shape families cover six affordance labels:

    mug     = cylinder body (contain) + torus-arc handle (grasp)
    table   = box top (support) + four cylinder legs (wrap-grasp)
    bottle  = cylinder body (contain) + cone neck (pour)
    knife   = flat blade (cut) + cylinder handle (grasp)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataGenError, DatasetFormatError, LabelError
from .pointcloud import PointCloud

DEFAULT_LABELS = ("grasp", "support", "pour", "contain", "cut", "wrap-grasp")
FAMILIES = ("mug", "table", "bottle", "knife")
PROTOCOLS = ("full-shape", "partial-view")

DATASET_FORMAT = "affordkit-dataset"
DATASET_VERSION = 1


@dataclass(frozen=True)
class ShapeSpec:
    family: str
    n_points: int = 256
    scale_range: tuple[float, float] = (0.8, 1.25)
    # rotation magnitude bounds in radians around a seeded random axis
    pose_range: tuple[float, float] = (0.0, np.pi)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown shape family {self.family!r}, choose from {FAMILIES}")
        if self.n_points < 8:
            raise ConfigError(f"n_points must be ≥ 8, got {self.n_points}")
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise ConfigError(f"bad scale range {self.scale_range}")
        lo, hi = self.pose_range
        if not (0 <= lo <= hi):
            raise ConfigError(f"bad pose range {self.pose_range}")


def _seed_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


# ---------------------------------------------------------------------------
# part samplers (canonical pose, roughly unit scale)


def _cylinder_side(rng, count, radius, z0, z1, center=(0.0, 0.0)):
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    z = rng.uniform(z0, z1, count)
    return np.column_stack(
        [center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta), z]
    )


def _disk(rng, count, radius, z):
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), np.full(count, z)])


def _panel(rng, count, x_range, y_range, z):
    return np.column_stack(
        [
            rng.uniform(x_range[0], x_range[1], count),
            rng.uniform(y_range[0], y_range[1], count),
            np.full(count, z),
        ]
    )


def _torus_arc(rng, count, attach_x, z_mid, major, minor):
    """Half-torus handle in the x–z plane, attached at (attach_x, 0, z_mid)."""
    phi = rng.uniform(0.0, np.pi, count)  # along the arc
    psi = rng.uniform(0.0, 2.0 * np.pi, count)  # around the tube
    ring = major + minor * np.cos(psi)
    return np.column_stack(
        [
            attach_x + ring * np.sin(phi),
            minor * np.sin(psi),
            z_mid + ring * np.cos(phi),
        ]
    )


def _cone_side(rng, count, r0, r1, z0, z1):
    z = rng.uniform(z0, z1, count)
    t = (z - z0) / (z1 - z0)
    radius = r0 + (r1 - r0) * t
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])


def _x_cylinder(rng, count, radius, x0, x1):
    """Cylinder whose axis runs along x (knife handle)."""
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    x = rng.uniform(x0, x1, count)
    return np.column_stack([x, radius * np.cos(theta), radius * np.sin(theta)])


def _family_parts(family: str):
    """(affordance, fraction, sampler) triples; fractions sum to 1."""
    if family == "mug":
        return [
            ("contain", 0.60, lambda rng, c: _cylinder_side(rng, c, 0.4, 0.0, 0.8)),
            ("contain", 0.15, lambda rng, c: _disk(rng, c, 0.4, 0.0)),
            ("grasp", 0.25, lambda rng, c: _torus_arc(rng, c, 0.4, 0.4, 0.25, 0.05)),
        ]
    if family == "table":
        legs = [
            (sx, sy)
            for sx in (-0.4, 0.4)
            for sy in (-0.4, 0.4)
        ]
        parts = [
            ("support", 0.6, lambda rng, c: _panel(rng, c, (-0.5, 0.5), (-0.5, 0.5), 0.5)),
        ]
        for sx, sy in legs:
            parts.append(
                (
                    "wrap-grasp",
                    0.1,
                    lambda rng, c, sx=sx, sy=sy: _cylinder_side(
                        rng, c, 0.05, 0.0, 0.5, center=(sx, sy)
                    ),
                )
            )
        return parts
    if family == "bottle":
        return [
            ("contain", 0.60, lambda rng, c: _cylinder_side(rng, c, 0.3, 0.0, 0.6)),
            ("contain", 0.10, lambda rng, c: _disk(rng, c, 0.3, 0.0)),
            ("pour", 0.30, lambda rng, c: _cone_side(rng, c, 0.3, 0.08, 0.6, 0.9)),
        ]
    if family == "knife":
        return [
            ("cut", 0.55, lambda rng, c: _panel(rng, c, (0.0, 0.6), (-0.002, 0.002), 0.0)),
            ("grasp", 0.45, lambda rng, c: _x_cylinder(rng, c, 0.045, -0.35, 0.0)),
        ]
    raise ConfigError(f"unknown shape family {family!r}")


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def gen_shape(spec: ShapeSpec, seed, label_set=DEFAULT_LABELS) -> PointCloud:
    """Sample one labeled cloud: parts → labels, then a rigid pose and scale."""
    rng = _seed_rng(seed)
    label_index = {name: i for i, name in enumerate(label_set)}
    parts = _family_parts(spec.family)
    for name, _, _ in parts:
        if name not in label_index:
            raise DataGenError(
                f"part affordance {name!r} is not in the dataset label set {list(label_set)}"
            )
    counts = [int(np.floor(frac * spec.n_points)) for _, frac, _ in parts]
    counts[0] += spec.n_points - sum(counts)
    if min(counts) < 1:
        raise DataGenError(f"n_points={spec.n_points} too small for {len(parts)} parts")

    coords_parts, labels_parts = [], []
    for (name, _, sampler), count in zip(parts, counts):
        pts = sampler(rng, count)
        coords_parts.append(pts)
        labels_parts.append(np.full(count, label_index[name], dtype=np.int64))
    coords = np.vstack(coords_parts)
    labels = np.concatenate(labels_parts)

    coords -= coords.mean(axis=0)
    lo, hi = spec.pose_range
    if hi > 0.0:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(lo, hi)
        coords = coords @ _rotation_matrix(axis, angle).T
    scale = rng.uniform(*spec.scale_range)
    coords *= scale
    return PointCloud(coords, labels)


def partial_view_crop(cloud: PointCloud, seed) -> PointCloud:
    """Keep the half-space (p − centroid)·v ≥ 0 for a seeded random direction."""
    if cloud.n < 2:
        raise DataGenError("partial view needs at least 2 points")
    rng = _seed_rng(seed)
    centered = cloud.coords - cloud.coords.mean(axis=0)
    for _ in range(16):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        keep = centered @ v >= 0.0
        if keep.sum() >= 8:
            labels = cloud.labels[keep] if cloud.labels is not None else None
            return PointCloud(cloud.coords[keep], labels)
    raise DataGenError("no crop direction left at least 8 points after 16 attempts")


def resample_to_n(cloud: PointCloud, n: int, seed) -> PointCloud:
    """Fix the point count: subsample without replacement or pad with replacement."""
    if n < 1:
        raise ConfigError(f"target size must be ≥ 1, got {n}")
    if cloud.n == n:
        return cloud
    rng = _seed_rng(seed)
    if cloud.n > n:
        idx = np.sort(rng.choice(cloud.n, size=n, replace=False))
    else:
        extra = rng.choice(cloud.n, size=n - cloud.n, replace=True)
        idx = np.concatenate([np.arange(cloud.n), extra])
    labels = cloud.labels[idx] if cloud.labels is not None else None
    return PointCloud(cloud.coords[idx], labels)


def gen_dataset(
    num_clouds: int,
    n_points: int,
    seed: int,
    partial_view: bool = False,
    label_set=DEFAULT_LABELS,
    families=FAMILIES,
    scale_range=(0.8, 1.25),
    pose_range=(0.0, np.pi),
) -> list[PointCloud]:
    """Cycle through the shape families; cloud i's randomness derives from (seed, i)."""
    if num_clouds < 1:
        raise ConfigError(f"num_clouds must be ≥ 1, got {num_clouds}")
    clouds = []
    for i in range(num_clouds):
        spec = ShapeSpec(
            family=families[i % len(families)],
            n_points=n_points,
            scale_range=scale_range,
            pose_range=pose_range,
        )
        cloud = gen_shape(spec, np.random.SeedSequence((seed, i, 0)), label_set)
        if partial_view:
            cloud = partial_view_crop(cloud, np.random.SeedSequence((seed, i, 1)))
            cloud = resample_to_n(cloud, n_points, np.random.SeedSequence((seed, i, 2)))
        clouds.append(cloud)
    return clouds


# ---------------------------------------------------------------------------
# dataset files


def write_dataset(
    clouds: list[PointCloud],
    directory: str,
    label_set=DEFAULT_LABELS,
    protocol: str = "full-shape",
    seed: int | None = None,
) -> None:
    if not clouds:
        raise DatasetFormatError("refusing to write an empty dataset")
    if protocol not in PROTOCOLS:
        raise DatasetFormatError(f"protocol must be one of {PROTOCOLS}, got {protocol!r}")
    n = clouds[0].n
    for i, c in enumerate(clouds):
        if c.n != n:
            raise DatasetFormatError(f"cloud {i} has {c.n} points, expected {n}")
        if c.labels is None:
            raise LabelError(f"cloud {i} has no labels")
        if int(c.labels.max()) >= len(label_set):
            raise LabelError(
                f"cloud {i} has label {int(c.labels.max())}, "
                f"label set lists {len(label_set)}"
            )
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, c in enumerate(clouds):
        points_name, labels_name = f"points_{i}.bin", f"labels_{i}.bin"
        c.coords.astype("<f4").tofile(os.path.join(directory, points_name))
        c.labels.astype("<u2").tofile(os.path.join(directory, labels_name))
        entries.append({"points": points_name, "labels": labels_name})
    manifest = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "n_points": n,
        "labels": list(label_set),
        "protocol": protocol,
        "seed": seed,
        "clouds": entries,
    }
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, separators=(",", ":"))


def read_dataset(directory: str) -> tuple[list[PointCloud], dict]:
    """Load a dataset directory; returns (clouds, manifest)."""
    manifest_path = os.path.join(directory, "manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no dataset manifest at {manifest_path}")
    with open(manifest_path, encoding="utf-8") as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise DatasetFormatError(f"{manifest_path}: unreadable ({e})") from e
    if manifest.get("format") != DATASET_FORMAT:
        raise DatasetFormatError(f"{manifest_path}: not a dataset manifest")
    if manifest.get("version") != DATASET_VERSION:
        raise DatasetFormatError(
            f"{manifest_path}: version {manifest.get('version')!r}, "
            f"expected {DATASET_VERSION}"
        )
    n = int(manifest["n_points"])
    m = len(manifest["labels"])
    if not manifest["clouds"]:
        raise DatasetFormatError(f"{manifest_path}: empty cloud list")
    clouds = []
    for entry in manifest["clouds"]:
        points_path = os.path.join(directory, entry["points"])
        labels_path = os.path.join(directory, entry["labels"])
        for p in (points_path, labels_path):
            if not os.path.exists(p):
                raise FileNotFoundError(f"dataset file missing: {p}")
        coords = np.fromfile(points_path, dtype="<f4")
        if coords.size != n * 3:
            raise DatasetFormatError(
                f"{points_path}: {coords.size} floats, expected {n * 3}"
            )
        labels = np.fromfile(labels_path, dtype="<u2")
        if labels.size != n:
            raise DatasetFormatError(f"{labels_path}: {labels.size} labels, expected {n}")
        if labels.size and int(labels.max()) >= m:
            raise LabelError(
                f"{labels_path}: label {int(labels.max())} out of range for {m} labels"
            )
        clouds.append(PointCloud(coords.astype(np.float64).reshape(n, 3), labels.astype(np.int64)))
    return clouds, manifest


# ---------------------------------------------------------------------------
# text bank generation


def _name_entropy(name: str) -> int:
    return int.from_bytes(name.encode("utf-8"), "big")


def _unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def gen_textbank(labels, embed_dim: int, seed: int, synonym_groups=None):
    """Deterministic pseudo-embeddings standing in for a text encoder.

    Labels in one synonym group share a base unit vector keyed by the group's
    first entry; each member is the base nudged by ε=0.1 along its own unit
    noise direction, then renormalized — so within-group cosines stay ≈ 0.99
    at any dimension.  Ungrouped labels get independent unit vectors equal to
    their own base, which means a group keyed by another bank's plain label
    generates near-synonyms of it.  Group entries that are not labels of this
    bank act only as the key.
    """
    from .textcorr import TextBank

    labels = tuple(str(s) for s in labels)
    if len(set(labels)) != len(labels):
        raise ConfigError("text bank labels must be unique")
    if embed_dim < 2:
        raise ConfigError(f"embed_dim must be ≥ 2, got {embed_dim}")
    group_of: dict[str, str] = {}
    for group in synonym_groups or []:
        group = [str(g) for g in group]
        if not group:
            continue
        members = [name for name in group if name in labels]
        if not members:
            raise ConfigError(f"synonym group {group} has no member in the bank labels")
        for name in members:
            if name in group_of:
                raise ConfigError(f"label {name!r} appears in two synonym groups")
            group_of[name] = group[0]

    eps = 0.1
    rows = np.empty((len(labels), embed_dim))
    for i, name in enumerate(labels):
        key = group_of.get(name)
        if key is None:
            rows[i] = _unit(
                np.random.default_rng(np.random.SeedSequence((seed, 0, _name_entropy(name)))),
                embed_dim,
            )
        else:
            base = _unit(
                np.random.default_rng(np.random.SeedSequence((seed, 0, _name_entropy(key)))),
                embed_dim,
            )
            noise = _unit(
                np.random.default_rng(np.random.SeedSequence((seed, 1, _name_entropy(name)))),
                embed_dim,
            )
            v = base + eps * noise
            rows[i] = v / np.linalg.norm(v)
    return TextBank(labels=labels, embeddings=rows, normalized=True)
