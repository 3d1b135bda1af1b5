"""Visible-infrared retrieval protocol: splits, CMC, mAP, repeated trials.

Infrared images from cameras 3 and 6 are the probes. For every identity
and every gallery camera of the search mode, one RGB image is drawn at
random (single-shot). Probe and gallery cameras never overlap, so no
same-camera filtering is applied.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dataset import IR_CAMERAS
from .ecn import EcnParams, pairwise_euclidean, rerank
from .errors import InvalidArgumentError, JoinError, ProtocolError

GALLERY_CAMERAS = {
    "all-search": (1, 2, 4, 5),
    "indoor-search": (1, 2),
}
MODE_ALIASES = {"all": "all-search", "indoor": "indoor-search"}
REPORT_RANKS = (1, 5, 10, 20)


def _mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in GALLERY_CAMERAS:
        raise InvalidArgumentError(f"unknown search mode {mode!r}")
    return mode


@dataclass(frozen=True)
class EvalConfig:
    mode: str = "all-search"
    trials: int = 10
    seed: int = 0
    shot: str = "single-shot"

    def __post_init__(self):
        object.__setattr__(self, "mode", _mode(self.mode))
        if self.trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {self.trials}")
        if self.shot != "single-shot":
            raise InvalidArgumentError("only the single-shot setting is supported")


@dataclass(frozen=True)
class SplitResult:
    probe_ids: tuple[str, ...]
    probe_persons: tuple[int, ...]
    probe_cameras: tuple[int, ...]
    gallery_ids: tuple[str, ...]
    gallery_persons: tuple[int, ...]
    gallery_cameras: tuple[int, ...]


def build_split(manifest, mode: str = "all-search", seed: int = 0) -> SplitResult:
    """Probe/gallery split for one trial.

    Identities with infrared images but no RGB image at all violate the
    protocol and raise. Identities whose RGB images all lie outside the
    mode's gallery cameras are dropped from the probe set with a warning.
    """
    mode = _mode(mode)
    cams = GALLERY_CAMERAS[mode]
    rng = np.random.default_rng(seed)

    probes = [e for e in manifest if e.camera_id in IR_CAMERAS]
    rgb_persons = {e.person_id for e in manifest if e.modality == "rgb"}
    by_pair: dict[tuple[int, int], list] = {}
    for e in manifest:
        if e.camera_id in cams:
            by_pair.setdefault((e.person_id, e.camera_id), []).append(e)

    for pid in sorted({e.person_id for e in probes}):
        if pid not in rgb_persons:
            raise ProtocolError(f"identity {pid} has infrared probes but no RGB image")

    gallery = []
    for key in sorted(by_pair):
        group = by_pair[key]
        gallery.append(group[int(rng.integers(len(group)))])

    in_gallery = {e.person_id for e in gallery}
    dropped = sorted({e.person_id for e in probes} - in_gallery)
    if dropped:
        warnings.warn(
            f"excluding identities without {mode} gallery images: {dropped}", RuntimeWarning
        )
        probes = [e for e in probes if e.person_id in in_gallery]
    if not probes or not gallery:
        raise ProtocolError(f"empty {'probe' if not probes else 'gallery'} set for {mode}")
    return SplitResult(
        tuple(e.image_id for e in probes),
        tuple(e.person_id for e in probes),
        tuple(e.camera_id for e in probes),
        tuple(e.image_id for e in gallery),
        tuple(e.person_id for e in gallery),
        tuple(e.camera_id for e in gallery),
    )


def _relevance(dist, probe_labels, gallery_labels) -> np.ndarray:
    dist = np.asarray(dist, dtype=np.float64)
    pl = np.asarray(probe_labels)
    gl = np.asarray(gallery_labels)
    if dist.shape != (len(pl), len(gl)):
        raise InvalidArgumentError(
            f"distance matrix {dist.shape} does not match {len(pl)} probes x {len(gl)} gallery"
        )
    present = set(gl.tolist())
    for p in pl.tolist():
        if p not in present:
            raise ProtocolError(f"probe identity {p} does not appear in the gallery")
    order = np.argsort(dist, axis=1, kind="stable")
    return gl[order] == pl[:, None]


def cmc(dist, probe_labels, gallery_labels) -> np.ndarray:
    """cmc[r-1] is the fraction of probes with a correct match in their top r."""
    rel = _relevance(dist, probe_labels, gallery_labels)
    first = np.argmax(rel, axis=1)
    hits = np.zeros(rel.shape[1], dtype=np.int64)
    np.add.at(hits, first, 1)
    return np.cumsum(hits) / rel.shape[0]


def _exact_ap(rel_row) -> Fraction:
    ranks = np.flatnonzero(np.asarray(rel_row, dtype=bool)) + 1
    if ranks.size == 0:
        return Fraction(0)
    return sum((Fraction(k, int(r)) for k, r in enumerate(ranks, start=1)), Fraction(0)) / ranks.size


def average_precision(rel_row) -> float:
    """Interpolation-free AP of one ranked relevance row.

    Precision values are summed as exact rationals and rounded once, so hand
    values such as 5/6 come out as the nearest double.
    """
    return float(_exact_ap(rel_row))


def mean_average_precision(dist, probe_labels, gallery_labels) -> float:
    rel = _relevance(dist, probe_labels, gallery_labels)
    return float(sum((_exact_ap(r) for r in rel), Fraction(0)) / len(rel))


@dataclass
class TrialResult:
    trial: int
    seed: int
    cmc: np.ndarray = field(repr=False)
    map: float

    def rank(self, r: int) -> float:
        return float(self.cmc[min(r, len(self.cmc)) - 1])


@dataclass
class EvalReport:
    config: EvalConfig
    reranked: bool
    trials: list[TrialResult]

    @property
    def map(self) -> float:
        return float(np.mean([t.map for t in self.trials]))

    @property
    def map_std(self) -> float:
        return float(np.std([t.map for t in self.trials]))

    def rank(self, r: int) -> float:
        return float(np.mean([t.rank(r) for t in self.trials]))

    def rank_std(self, r: int) -> float:
        return float(np.std([t.rank(r) for t in self.trials]))

    @property
    def cmc(self) -> np.ndarray:
        """Mean CMC truncated to the shortest gallery over trials."""
        n = min(len(t.cmc) for t in self.trials)
        return np.mean([t.cmc[:n] for t in self.trials], axis=0)

    def result_lines(self) -> list[str]:
        lines = ["trial,rank1,rank5,rank10,rank20,map"]
        for t in self.trials:
            vals = [t.rank(r) for r in REPORT_RANKS] + [t.map]
            lines.append(f"{t.trial}," + ",".join(f"{v:.6f}" for v in vals))
        means = [self.rank(r) for r in REPORT_RANKS] + [self.map]
        lines.append("mean," + ",".join(f"{v:.6f}" for v in means))
        return lines

    def summary(self) -> str:
        head = (f"{self.config.mode}, {len(self.trials)} trial(s), "
                f"{'ECN re-ranking' if self.reranked else 'euclidean'}")
        rows = [f"  Rank-{r:<3d} {100 * self.rank(r):6.2f} +/- {100 * self.rank_std(r):5.2f}"
                for r in REPORT_RANKS]
        rows.append(f"  mAP     {100 * self.map:6.2f} +/- {100 * self.map_std:5.2f}")
        return "\n".join([head] + rows)


def run_trial(manifest, features, mode: str, seed: int, use_rerank: bool = False,
              params: EcnParams = EcnParams()):
    split = build_split(manifest, mode, seed)
    probe = features.select(split.probe_ids)
    gallery = features.select(split.gallery_ids)
    if use_rerank:
        dist = rerank(probe, gallery, params)
    else:
        dist = pairwise_euclidean(probe, gallery)
    curve = cmc(dist, split.probe_persons, split.gallery_persons)
    ap = mean_average_precision(dist, split.probe_persons, split.gallery_persons)
    return curve, ap


def evaluate(manifest, features, config: EvalConfig = EvalConfig(), use_rerank: bool = False,
             params: EcnParams = EcnParams(), threads: int = 1) -> EvalReport:
    """Run ``config.trials`` independent splits; trial i uses seed ``config.seed + i``."""
    manifest = list(manifest)
    have = set(features.ids)
    for e in manifest:
        if e.image_id not in have:
            raise JoinError(f"no features for manifest image {e.image_id!r}")

    def one(i):
        curve, ap = run_trial(manifest, features, config.mode, config.seed + i, use_rerank, params)
        return TrialResult(i, config.seed + i, curve, ap)

    if threads > 1 and config.trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(config.trials)))
    else:
        results = [one(i) for i in range(config.trials)]
    return EvalReport(config, use_rerank, results)
