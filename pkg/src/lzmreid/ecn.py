"""Expanded Cross Neighborhood (ECN) re-ranking.

Probe and gallery features are pooled into one population. Every image
gets a rank list over the population (itself excluded, ties broken by
ascending index), an expanded neighbour set of its t nearest neighbours
followed by the q nearest neighbours of each of those, and the distance
between two images is derived from the overlap of the top-K windows of
their rank lists. The final probe x gallery distance averages that list
distance over both expanded sets.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class EcnParams:
    t: int = 3
    q: int = 8
    K: int = 25

    @property
    def M(self) -> int:
        return self.t + self.t * self.q

    def validate(self, population: int) -> "EcnParams":
        for name in ("t", "q", "K"):
            v = getattr(self, name)
            if v < 1:
                raise InvalidArgumentError(f"ECN parameter {name} must be >= 1, got {v}")
            if v > population - 1:
                raise InvalidArgumentError(
                    f"ECN parameter {name}={v} exceeds population size - 1 ({population - 1})"
                )
        return self


def _matrix(x) -> np.ndarray:
    arr = np.asarray(getattr(x, "matrix", x), dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"expected an N x D feature matrix, got shape {arr.shape}")
    return arr


def pairwise_euclidean(a, b, chunk: int = 64) -> np.ndarray:
    """Exact ||a_i - b_j|| by explicit differences (symmetric bit-for-bit when a is b)."""
    A, B = _matrix(a), _matrix(b)
    if A.shape[1] != B.shape[1]:
        raise InvalidArgumentError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    for start in range(0, A.shape[0], chunk):
        diff = A[start:start + chunk, None, :] - B[None, :, :]
        out[start:start + chunk] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def rank_lists_from_distances(dist) -> np.ndarray:
    """N x (N-1) array; row i lists all other indices by ascending distance."""
    dist = np.asarray(dist, dtype=np.float64)
    N = dist.shape[0]
    if dist.shape != (N, N):
        raise InvalidArgumentError(f"expected a square distance matrix, got {dist.shape}")
    if N < 2:
        raise InvalidArgumentError("rank lists need a population of at least 2")
    order = np.argsort(dist, axis=1, kind="stable")
    keep = order != np.arange(N)[:, None]
    return order[keep].reshape(N, N - 1)


def initial_rank_lists(features) -> np.ndarray:
    X = _matrix(features)
    if X.shape[0] < 2:
        raise InvalidArgumentError("rank lists need a population of at least 2")
    return rank_lists_from_distances(pairwise_euclidean(X, X))


def _check_tq(lists: np.ndarray, t: int, q: int) -> None:
    width = lists.shape[1]
    if t < 1 or q < 1:
        raise InvalidArgumentError(f"t and q must be >= 1, got t={t}, q={q}")
    if t > width or q > width:
        raise InvalidArgumentError(f"t={t}, q={q} exceed population size - 1 ({width})")


def expanded_neighbors(p: int, lists, t: int, q: int) -> np.ndarray:
    """t nearest neighbours of p, then the q nearest of each; length t + t*q."""
    lists = np.asarray(lists)
    if not 0 <= p < lists.shape[0]:
        raise InvalidArgumentError(f"image index {p} out of range")
    _check_tq(lists, t, q)
    first = lists[p, :t]
    return np.concatenate([first, lists[first, :q].ravel()])


def expanded_neighbor_sets(lists, t: int, q: int) -> np.ndarray:
    lists = np.asarray(lists)
    _check_tq(lists, t, q)
    first = lists[:, :t]
    second = lists[first, :q].reshape(lists.shape[0], t * q)
    return np.concatenate([first, second], axis=1)


def rank_list_similarity(Li: Sequence, Lj: Sequence, K: int) -> int:
    """sum over members b of [K+1-pos_i(b)]_+ * [K+1-pos_j(b)]_+, 1-based positions."""
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")
    Li, Lj = list(Li), list(Lj)
    si, sj = set(Li), set(Lj)
    if len(Li) != len(Lj) or len(si ^ sj) > 2:
        raise InvalidArgumentError("rank lists are not over the same population")
    wi = {b: K - r for r, b in enumerate(Li[:K])}
    return int(sum(w * (K - r) for r, b in enumerate(Lj[:K]) if (w := wi.get(b))))


def _window_weights(lists: np.ndarray, K: int) -> np.ndarray:
    N = lists.shape[0]
    W = np.zeros((N, N), dtype=np.int64)
    top = min(K, lists.shape[1])
    W[np.arange(N)[:, None], lists[:, :top]] = K - np.arange(top)
    return W


def list_similarity_matrix(lists, K: int) -> np.ndarray:
    """All pairwise rank-list similarities as an exact integer matrix."""
    lists = np.asarray(lists)
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")
    W = _window_weights(lists, K)
    return W @ W.T


def list_distance_matrix(lists, K: int) -> np.ndarray:
    """d = 1 - R_scaled, with R min-max scaled to [0, 1] over the whole matrix.

    The diagonal takes part in the scaling. If every entry of R is equal the
    distance is defined as 0 everywhere and a warning is issued.
    """
    lists = np.asarray(lists)
    if lists.shape[0] < 2:
        raise InvalidArgumentError("list distances need at least 2 rank lists")
    R = list_similarity_matrix(lists, K)
    lo, hi = R.min(), R.max()
    if lo == hi:
        warnings.warn("all rank-list similarities are equal; list distance set to 0", RuntimeWarning)
        return np.zeros(R.shape, dtype=np.float64)
    return 1.0 - (R - lo).astype(np.float64) / float(hi - lo)


def ecn_distance(p: int, g: int, neighbor_sets, list_dist, M: int | None = None) -> float:
    nsets = np.asarray(neighbor_sets)
    if M is None:
        M = nsets.shape[1]
    for x in (p, g):
        if not 0 <= x < nsets.shape[0]:
            raise InvalidArgumentError(f"no expanded neighbour set for image {x}")
    if nsets.shape[1] != M:
        raise InvalidArgumentError(f"neighbour sets have {nsets.shape[1]} members, expected M={M}")
    total = list_dist[nsets[p], g].sum() + list_dist[nsets[g], p].sum()
    return float(total / (2 * M))


def rerank(probe, gallery, params: EcnParams = EcnParams()) -> np.ndarray:
    """ECN distance for every probe x gallery pair."""
    P, G = _matrix(probe), _matrix(gallery)
    if P.shape[0] == 0 or G.shape[0] == 0:
        raise InvalidArgumentError("probe and gallery must be non-empty")
    if P.shape[1] != G.shape[1]:
        raise InvalidArgumentError(f"dimension mismatch: {P.shape[1]} vs {G.shape[1]}")
    X = np.concatenate([P, G])
    N, nP = X.shape[0], P.shape[0]
    params.validate(N)
    lists = rank_lists_from_distances(pairwise_euclidean(X, X))
    nsets = expanded_neighbor_sets(lists, params.t, params.q)
    d = list_distance_matrix(lists, params.K)
    # S[i, x] = sum_j d(N_j(i), x), gathered per row in a fixed order
    S = np.empty((N, N), dtype=np.float64)
    for i in range(N):
        S[i] = d[nsets[i]].sum(axis=0)
    gal = np.arange(nP, N)
    return (S[:nP][:, gal] + S[gal][:, :nP].T) / (2 * params.M)
