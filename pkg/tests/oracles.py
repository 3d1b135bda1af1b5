"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package's numerical code. Where the library has
a closed form, the oracle uses a different one (binomial form of the
radial polynomial, scalar loops instead of array slicing, pure-Python
sorting and set logic for ECN).
"""
from __future__ import annotations

import cmath
import math


def radial(n, m, rho):
    # binomial form: sum_s (-1)^s C(n-s, s) C(n-2s, (n-m)/2 - s) rho^(n-2s)
    total = 0.0
    for s in range((n - m) // 2 + 1):
        total += (-1) ** s * math.comb(n - s, s) * math.comb(n - 2 * s, (n - m) // 2 - s) * rho ** (n - 2 * s)
    return total


def zernike(n, m, x, y):
    rho = math.hypot(x, y)
    if rho > 1.0:
        return 0j
    return radial(n, m, rho) * cmath.exp(-1j * m * math.atan2(y, x))


def indices(n_max):
    out = []
    for n in range(1, n_max + 1):
        for m in range(1, n + 1):
            if (n - m) % 2 == 0:
                out.append((n, m))
    return out


def lzm(plane, n_max, k):
    """Per-pixel local moments by direct summation; returns [H][W][2K] nested lists."""
    H, W = len(plane), len(plane[0])
    h = (k - 1) // 2
    idx = indices(n_max)
    out = [[[0.0] * (2 * len(idx)) for _ in range(W)] for _ in range(H)]
    for c, (n, m) in enumerate(idx):
        norm = 2 * (n + 1) / (math.pi * (k - 1) ** 2)
        taps = [(p, q, zernike(n, m, p / h, q / h)) for p in range(-h, h + 1) for q in range(-h, h + 1)]
        for i in range(H):
            for j in range(W):
                acc = 0j
                for p, q, v in taps:
                    a, b = i - p, j - q
                    if 0 <= a < H and 0 <= b < W:
                        acc += v * plane[a][b]
                out[i][j][2 * c] = norm * acc.real
                out[i][j][2 * c + 1] = norm * acc.imag
    return out


def global_moment(plane, n, m):
    N = len(plane)
    acc = 0j
    for i in range(N):
        for j in range(N):
            x = (2 * i - (N - 1)) / (N - 1)
            y = (2 * j - (N - 1)) / (N - 1)
            acc += zernike(n, m, x, y) * plane[i][j]
    return 2 * (n + 1) / (math.pi * (N - 1) ** 2) * acc


def pool(stack, gy, gx):
    """stack as [H][W][C] lists; cells split at floor(c * L / g)."""
    H, W, C = len(stack), len(stack[0]), len(stack[0][0])
    out = []
    for cy in range(gy):
        for cx in range(gx):
            rows = range(cy * H // gy, (cy + 1) * H // gy)
            cols = range(cx * W // gx, (cx + 1) * W // gx)
            vals = [[stack[i][j][c] for i in rows for j in cols] for c in range(C)]
            means = [math.fsum(v) / len(v) for v in vals]
            stds = [math.sqrt(math.fsum((x - mu) ** 2 for x in v) / len(v)) for v, mu in zip(vals, means)]
            out += means + stds
    return out


def euclid(a, b):
    return [[math.sqrt(sum((x - y) ** 2 for x, y in zip(u, v))) for v in b] for u in a]


def rank_list(dist_row, owner):
    return sorted((j for j in range(len(dist_row)) if j != owner), key=lambda j: (dist_row[j], j))


def list_similarity(Li, Lj, K):
    pos_i = {b: r + 1 for r, b in enumerate(Li)}
    pos_j = {b: r + 1 for r, b in enumerate(Lj)}
    total = 0
    for b in set(Li) | set(Lj):
        wi = max(0, K + 1 - pos_i.get(b, K + 1))
        wj = max(0, K + 1 - pos_j.get(b, K + 1))
        total += wi * wj
    return total


def ecn(probe, gallery, t=3, q=8, K=25):
    X = [list(r) for r in probe] + [list(r) for r in gallery]
    N = len(X)
    D = euclid(X, X)
    lists = [rank_list(D[i], i) for i in range(N)]
    expanded = []
    for i in range(N):
        first = lists[i][:t]
        members = list(first)
        for f in first:
            members += lists[f][:q]
        expanded.append(members)
    R = [[list_similarity(lists[i], lists[j], K) for j in range(N)] for i in range(N)]
    lo = min(min(r) for r in R)
    hi = max(max(r) for r in R)
    d = [[1 - (R[i][j] - lo) / (hi - lo) for j in range(N)] for i in range(N)]
    M = t + t * q
    nP = len(probe)
    out = []
    for p in range(nP):
        row = []
        for g in range(nP, N):
            s = sum(d[x][g] for x in expanded[p]) + sum(d[x][p] for x in expanded[g])
            row.append(s / (2 * M))
        out.append(row)
    return out


def ranked_relevance(dist_row, probe_label, gallery_labels):
    order = sorted(range(len(dist_row)), key=lambda j: (dist_row[j], j))
    return [gallery_labels[j] == probe_label for j in order]


def cmc(dist, probe_labels, gallery_labels):
    G = len(gallery_labels)
    hits = [0] * G
    for row, pl in zip(dist, probe_labels):
        rel = ranked_relevance(row, pl, gallery_labels)
        first = rel.index(True)
        for r in range(first, G):
            hits[r] += 1
    return [h / len(probe_labels) for h in hits]


def average_precision(rel):
    found, total = 0, 0.0
    for r, is_rel in enumerate(rel, start=1):
        if is_rel:
            found += 1
            total += found / r
    return total / found if found else 0.0


def mean_ap(dist, probe_labels, gallery_labels):
    aps = [average_precision(ranked_relevance(row, pl, gallery_labels))
           for row, pl in zip(dist, probe_labels)]
    return sum(aps) / len(aps)
