"""Procedural cross-modality person fixture.

Each identity gets a fixed body layout (head, torso, legs). The clothed
body is cut into horizontal bands, and each band half (left/right) wears
its own identity-keyed striped texture: two colours, an orientation, a
frequency and a phase. RGB views render those colours under a
per-camera colour gain. Infrared views render a gamma-warped channel mix
of the same scene plus Gaussian noise. Every view gets its own small
translation/scale jitter and background.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import IR_CAMERAS, ManifestEntry, save_image, write_manifest
from .errors import InvalidArgumentError

IR_MIX = np.array([0.5, 0.35, 0.15])
IR_GAMMA = 0.8
BACKGROUND_RANGE = (0.3, 0.7)
BACKGROUND_TILT = 0.2
COLOR_SATURATION = 0.25
STRIPE_FREQUENCY = (12.0, 60.0)  # cycles per image height
BODY_BOTTOM = 0.97


@dataclass(frozen=True)
class SyntheticSpec:
    n_ids: int = 50
    rgb_per_camera: int = 1
    ir_per_camera: int = 1
    height: int = 492
    width: int = 164
    seed: int = 42
    noise: float = 0.05
    jitter: float = 0.03
    bands: int = 6

    def validate(self) -> "SyntheticSpec":
        for name in ("n_ids", "rgb_per_camera", "ir_per_camera", "height", "width", "bands"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.noise < 0 or self.jitter < 0:
            raise InvalidArgumentError("noise and jitter must be non-negative")
        return self


@dataclass(frozen=True)
class Garment:
    colors: np.ndarray  # (2, 3)
    angle: float
    freq: float
    phase: float

    def texture(self, u, v, aspect):
        # u, v in image-height units so the frequency is per body height
        proj = u * np.cos(self.angle) + v * aspect * np.sin(self.angle)
        a = 0.5 + 0.5 * np.sin(2 * np.pi * self.freq * proj + self.phase)
        return self.colors[0] * (1 - a[..., None]) + self.colors[1] * a[..., None]


@dataclass(frozen=True)
class Appearance:
    torso_top: float
    waist: float
    torso_half_width: float
    leg_half_width: float
    leg_gap: float
    head_radius: float
    skin: np.ndarray
    garments: tuple  # bands x (left, right)


def _color(rng) -> np.ndarray:
    level = rng.uniform(0.05, 0.95)
    return np.clip(level + COLOR_SATURATION * rng.uniform(-1, 1, 3), 0.0, 1.0)


def _garment(rng) -> Garment:
    return Garment(np.stack([_color(rng), _color(rng)]), rng.uniform(0, np.pi),
                   rng.uniform(*STRIPE_FREQUENCY), rng.uniform(0, 2 * np.pi))


def identity_appearance(seed: int, person_id: int, bands: int = 6) -> Appearance:
    rng = np.random.default_rng([seed, person_id, 0])
    return Appearance(
        torso_top=rng.uniform(0.17, 0.23),
        waist=rng.uniform(0.48, 0.6),
        torso_half_width=rng.uniform(0.25, 0.4),
        leg_half_width=rng.uniform(0.1, 0.18),
        leg_gap=rng.uniform(0.02, 0.08),
        head_radius=rng.uniform(0.06, 0.085),
        skin=rng.uniform(0.35, 0.85) * np.array([1.0, 0.8, 0.65]),
        garments=tuple((_garment(rng), _garment(rng)) for _ in range(bands)),
    )


def render(app: Appearance, height: int, width: int, rng, jitter: float) -> np.ndarray:
    """Colour rendering of one view in [0, 1], shape (H, W, 3)."""
    du, dv = rng.uniform(-jitter, jitter, 2)
    scale = 1.0 + rng.uniform(-jitter, jitter)
    u = (np.arange(height) + 0.5) / height
    v = (np.arange(width) + 0.5) / width
    u, v = np.meshgrid((u - 0.5 - du) / scale + 0.5, (v - 0.5 - dv) / scale + 0.5, indexing="ij")
    aspect = width / height

    bg_level = rng.uniform(*BACKGROUND_RANGE)
    bg_tilt = rng.uniform(-BACKGROUND_TILT, BACKGROUND_TILT, 2)
    img = np.empty((height, width, 3))
    img[:] = (bg_level + bg_tilt[0] * (u - 0.5) + bg_tilt[1] * (v - 0.5))[..., None]

    x = v - 0.5  # horizontal offset from the body axis, width units
    head_c = app.torso_top - app.head_radius
    head = ((u - head_c) ** 2 + (x * aspect) ** 2) <= app.head_radius ** 2
    torso = (u >= app.torso_top) & (u < app.waist) & (np.abs(x) <= app.torso_half_width)
    legs = ((u >= app.waist) & (u < BODY_BOTTOM)
            & (np.abs(x) >= app.leg_gap) & (np.abs(x) <= app.leg_gap + 2 * app.leg_half_width))
    body = torso | legs

    img[head] = app.skin
    edges = np.linspace(app.torso_top, BODY_BOTTOM, len(app.garments) + 1)
    for b, pair in enumerate(app.garments):
        band = body & (u >= edges[b]) & (u < edges[b + 1])
        for side, garment in zip((x < 0, x >= 0), pair):
            mask = band & side
            if mask.any():
                img[mask] = garment.texture(u[mask], v[mask], aspect)
    return np.clip(img, 0.0, 1.0)


def to_infrared(rgb: np.ndarray, rng, noise: float) -> np.ndarray:
    lum = np.clip(rgb @ IR_MIX, 0.0, 1.0) ** IR_GAMMA
    return np.clip(lum + rng.normal(0.0, noise, lum.shape), 0.0, 1.0)


def camera_gain(seed: int, camera: int) -> np.ndarray:
    return np.random.default_rng([seed, 10_000 + camera]).uniform(0.85, 1.15, 3)


def iter_views(spec: SyntheticSpec):
    """Yield (entry, image) for every view; images are float arrays in [0, 1]."""
    spec.validate()
    for pid in range(spec.n_ids):
        app = identity_appearance(spec.seed, pid, spec.bands)
        for cam in range(1, 7):
            ir = cam in IR_CAMERAS
            count = spec.ir_per_camera if ir else spec.rgb_per_camera
            for k in range(count):
                rng = np.random.default_rng([spec.seed, pid, cam, k + 1])
                img = render(app, spec.height, spec.width, rng, spec.jitter)
                if ir:
                    img = to_infrared(img, rng, spec.noise)
                else:
                    img = np.clip(img * camera_gain(spec.seed, cam), 0.0, 1.0)
                image_id = f"p{pid:04d}_c{cam}_{k:02d}"
                entry = ManifestEntry(image_id, f"images/{image_id}.png", pid, cam,
                                      "ir" if ir else "rgb")
                yield entry, img


def generate_synthetic(spec: SyntheticSpec, out_dir) -> tuple[list[ManifestEntry], Path]:
    """Write PNG views and ``manifest.csv`` under ``out_dir``; returns (entries, manifest path)."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    entries = []
    for entry, img in iter_views(spec):
        save_image(img, out / entry.path)
        entries.append(entry)
    manifest_path = out / "manifest.csv"
    write_manifest(entries, manifest_path)
    return entries, manifest_path
