"""Per-image feature vectors from pattern maps, and multi-stream fusion."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import read_features
from .encoder import encode_gray_ir, encode_rgb_ir, rgb_ir_planes, standardize, to_gray
from .errors import DegenerateInputError, FormatError, InvalidArgumentError, JoinError
from .zernike import FilterBank

STREAMS = ("gray_ir", "rgb_ir", "lzm_gray_ir", "lzm_rgb_ir")
DEFAULT_GRID = (6, 2)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """N x D feature matrix with one id and (person, camera, modality) per row."""

    ids: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)
    person_ids: np.ndarray = field(repr=False)
    camera_ids: np.ndarray = field(repr=False)
    modalities: tuple[str, ...] = field(repr=False)
    metadata: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.ids) != self.matrix.shape[0]:
            raise InvalidArgumentError(
                f"{len(self.ids)} ids for a matrix with {self.matrix.shape[0]} rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise InvalidArgumentError("feature ids must be unique")
        for arr in (self.person_ids, self.camera_ids):
            if len(arr) != len(self.ids):
                raise InvalidArgumentError("metadata length does not match row count")

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def subset(self, rows) -> "FeatureSet":
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureSet(
            tuple(self.ids[r] for r in rows),
            self.matrix[rows],
            self.person_ids[rows],
            self.camera_ids[rows],
            tuple(self.modalities[r] for r in rows),
            self.metadata,
        )

    def select(self, ids: Sequence[str]) -> "FeatureSet":
        lookup = {i: r for r, i in enumerate(self.ids)}
        missing = [i for i in ids if i not in lookup]
        if missing:
            raise JoinError(f"no features for image id {missing[0]!r}")
        return self.subset([lookup[i] for i in ids])


def _grid(grid) -> tuple[int, int]:
    if isinstance(grid, (int, np.integer)):
        return int(grid), int(grid)
    gy, gx = grid
    return int(gy), int(gx)


def cell_bounds(length: int, cells: int) -> list[tuple[int, int]]:
    edges = [(c * length) // cells for c in range(cells + 1)]
    return list(zip(edges[:-1], edges[1:]))


def pool_embed(stack, grid=DEFAULT_GRID) -> np.ndarray:
    """Per-cell, per-channel mean and population std over a spatial grid.

    ``grid`` is an int g (g x g cells) or (rows, cols). Cells are visited in
    row-major order; each contributes C means followed by C stds, so the
    output has C * rows * cols * 2 entries. The result is not normalised.
    """
    values = getattr(stack, "values", stack)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    H, W, C = values.shape
    gy, gx = _grid(grid)
    if gy < 1 or gx < 1 or gy > H or gx > W:
        raise InvalidArgumentError(f"grid {gy}x{gx} does not fit a {H}x{W} stack")
    parts = []
    for y0, y1 in cell_bounds(H, gy):
        for x0, x1 in cell_bounds(W, gx):
            cell = values[y0:y1, x0:x1].reshape(-1, C)
            mean = cell.mean(axis=0)
            centered = cell - mean
            std = np.sqrt(np.mean(centered * centered, axis=0))
            parts += [mean, std]
    return np.concatenate(parts)


def l2_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("feature vector contains non-finite values")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise DegenerateInputError("cannot l2-normalize a zero vector")
    return v / norm


def concat_streams(parts, normalize_parts: bool = False) -> np.ndarray:
    """Concatenate stream vectors in order, then l2-normalize the result.

    With ``normalize_parts`` each part is normalised before concatenation too.
    """
    parts = [np.asarray(p, dtype=np.float64).ravel() for p in parts]
    if not parts:
        raise InvalidArgumentError("concat_streams needs at least one part")
    if normalize_parts:
        parts = [l2_normalize(p) for p in parts]
    return l2_normalize(np.concatenate(parts))


def stream_vectors(image, modality: str, bank: FilterBank, grid=DEFAULT_GRID,
                   streams: Sequence[str] = STREAMS) -> list[np.ndarray]:
    """Pooled vectors for the requested streams of one image.

    The two raw streams pool the standardized input planes themselves; the
    two LZM streams pool the pattern-map stacks.
    """
    out = []
    for s in streams:
        if s == "gray_ir":
            out.append(pool_embed(standardize(to_gray(image)), grid))
        elif s == "rgb_ir":
            out.append(pool_embed(np.stack(rgb_ir_planes(image, modality), axis=2), grid))
        elif s == "lzm_gray_ir":
            out.append(pool_embed(encode_gray_ir(image, bank), grid))
        elif s == "lzm_rgb_ir":
            out.append(pool_embed(encode_rgb_ir(image, modality, bank), grid))
        else:
            raise InvalidArgumentError(f"unknown stream {s!r}; choose from {STREAMS}")
    return out


def embed_image(image, modality: str, bank: FilterBank, grid=DEFAULT_GRID,
                streams: Sequence[str] = STREAMS, normalize_parts: bool = False) -> np.ndarray:
    return concat_streams(stream_vectors(image, modality, bank, grid, streams), normalize_parts)


def import_features(path, manifest) -> FeatureSet:
    """Load a feature file and attach person/camera/modality from ``manifest``.

    Every row id must exist in the manifest; manifest entries without a row
    are allowed.
    """
    ids, matrix, meta = read_features(path)
    return join_manifest(ids, matrix, manifest, meta)


def join_manifest(ids, matrix, manifest, metadata=None) -> FeatureSet:
    by_id = {e.image_id: e for e in manifest}
    rows = []
    for i in ids:
        entry = by_id.get(i)
        if entry is None:
            raise JoinError(f"feature row id {i!r} is not in the manifest")
        rows.append(entry)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise FormatError("feature matrix must be 2-D")
    return FeatureSet(
        tuple(ids),
        matrix,
        np.array([e.person_id for e in rows], dtype=np.int64),
        np.array([e.camera_id for e in rows], dtype=np.int64),
        tuple(e.modality for e in rows),
        dict(metadata or {}),
    )
