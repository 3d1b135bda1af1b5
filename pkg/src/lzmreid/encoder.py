"""Local Zernike moment (LZM) encoding of image planes.

The transform convolves a plane with every kernel of a filter bank
(zero padding, same-size output) and stacks the real and imaginary
responses as separate channels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import InvalidArgumentError
from .zernike import FilterBank, _as_index, sample_zernike

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class PatternMapStack:
    """H x W x C pattern maps plus the bank that produced them."""

    values: np.ndarray = field(repr=False)
    n_max: int
    k: int
    layout: str  # "gray_ir" (2K channels) or "rgb_ir" (6K channels)

    @property
    def shape(self):
        return self.values.shape

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def _plane(plane) -> np.ndarray:
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError(f"expected a non-empty 2-D plane, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("plane contains non-finite values")
    return arr


def standardize(plane) -> np.ndarray:
    """Zero mean, unit population variance. A constant plane maps to zeros."""
    arr = _plane(plane)
    if arr.size < 2:
        raise InvalidArgumentError("standardize needs at least two pixels")
    if arr.max() == arr.min():
        return np.zeros_like(arr)
    centered = arr - arr.mean()
    return centered / np.sqrt(np.mean(centered * centered))


def lzm_transform(plane, bank: FilterBank, dtype=np.float64) -> np.ndarray:
    """Apply every bank kernel to ``plane``; returns an H x W x 2K array.

    Each output pixel is sum_{p,q} w(p, q) f(i - p, j - q) with the kernel
    normalisation folded into ``w``; pixels outside the image read as 0.
    Taps whose weight is exactly zero are skipped, which leaves the result
    unchanged for finite input.
    """
    f = _plane(plane)
    k = bank.k
    H, W = f.shape
    if H < k or W < k:
        raise InvalidArgumentError(f"image {H}x{W} is smaller than the {k}x{k} kernel")
    h = (k - 1) // 2
    padded = np.zeros((H + 2 * h, W + 2 * h), dtype=np.float64)
    padded[h:h + H, h:h + W] = f

    weights = bank.weights
    out = np.zeros((weights.shape[0], H, W), dtype=np.float64)
    tmp = np.empty((H, W), dtype=np.float64)
    # fixed tap order (p, q ascending) keeps the per-pixel summation order stable
    for a in range(k):
        p = a - h
        for b in range(k):
            q = b - h
            taps = weights[:, a, b]
            nz = np.flatnonzero(taps)
            if nz.size == 0:
                continue
            window = padded[h - p:h - p + H, h - q:h - q + W]
            for c in nz:
                np.multiply(window, taps[c], out=tmp)
                out[c] += tmp
    return np.ascontiguousarray(np.moveaxis(out, 0, -1), dtype=dtype)


def global_zernike_moment(plane, idx) -> complex:
    """Zernike moment of a square N x N plane sampled over [-1, 1]^2."""
    f = _plane(plane)
    N = f.shape[0]
    if f.shape[0] != f.shape[1]:
        raise InvalidArgumentError(f"global moments need a square plane, got {f.shape}")
    if N < 2:
        raise InvalidArgumentError("global moments need N >= 2")
    idx = _as_index(idx)
    V = sample_zernike(idx, N)
    scale = 2.0 * (idx.n + 1) / (pi * (N - 1) ** 2)
    return complex(scale * np.sum(V * f))


def to_gray(image) -> np.ndarray:
    """Single plane from an H x W or H x W x {1, 3} raster (luma for colour)."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] == 3:
        r, g, b = LUMA_WEIGHTS
        return r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]
    raise InvalidArgumentError(f"unsupported raster shape {arr.shape}")


def _channels(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise InvalidArgumentError(f"unsupported raster shape {arr.shape}")
    return arr


def encode_gray_ir(image, bank: FilterBank, dtype=np.float64) -> PatternMapStack:
    maps = lzm_transform(standardize(to_gray(image)), bank, dtype=dtype)
    return PatternMapStack(maps, bank.n_max, bank.k, "gray_ir")


def rgb_ir_planes(image, modality: str) -> list[np.ndarray]:
    """The three standardized planes fed to the colour stream.

    For infrared the single plane is repeated three times.
    """
    arr = _channels(image)
    if modality == "rgb":
        if arr.shape[2] != 3:
            raise InvalidArgumentError(
                f"rgb modality needs a 3-channel image, got {arr.shape[2]} channel(s)"
            )
        return [standardize(arr[:, :, c]) for c in range(3)]
    if modality == "ir":
        if arr.shape[2] != 1:
            raise InvalidArgumentError(
                f"ir modality needs a 1-channel image, got {arr.shape[2]} channels"
            )
        plane = standardize(arr[:, :, 0])
        return [plane, plane, plane]
    raise InvalidArgumentError(f"unknown modality {modality!r}")


def encode_rgb_ir(image, modality: str, bank: FilterBank, dtype=np.float64) -> PatternMapStack:
    planes = rgb_ir_planes(image, modality)
    if modality == "ir":
        block = lzm_transform(planes[0], bank, dtype=dtype)
        maps = np.concatenate([block, block, block], axis=2)
    else:
        maps = np.concatenate([lzm_transform(p, bank, dtype=dtype) for p in planes], axis=2)
    return PatternMapStack(maps, bank.n_max, bank.k, "rgb_ir")
