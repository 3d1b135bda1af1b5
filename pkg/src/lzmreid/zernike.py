"""Zernike radial polynomials, sampled complex kernels and LZM filter banks.

Kernels are sampled on a k x k grid whose coordinates are scaled to
[-1, 1]. The first array axis carries x, the second carries y, so
``kernel.values[i, j]`` is V_nm evaluated at (x_i, y_j). Grid points
outside the unit disc are zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, pi
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError


class MomentIndex(NamedTuple):
    n: int
    m: int

    def validate(self) -> "MomentIndex":
        n, m = self
        if not (isinstance(n, (int, np.integer)) and isinstance(m, (int, np.integer))):
            raise InvalidArgumentError(f"moment index must be integers, got {self!r}")
        if m < 1 or m > n or (n - m) % 2:
            raise InvalidArgumentError(
                f"invalid moment index (n={n}, m={m}): need 1 <= m <= n and n - m even"
            )
        return self


def _as_index(idx) -> MomentIndex:
    return MomentIndex(*idx).validate()


def filter_count(n_max: int) -> int:
    """Number of complex LZM filters for moment orders up to ``n_max`` (m = 0 excluded)."""
    if n_max < 1:
        raise InvalidArgumentError(f"n_max must be >= 1, got {n_max}")
    if n_max % 2 == 0:
        return n_max * (n_max + 2) // 4
    return (n_max + 1) ** 2 // 4


def valid_indices(n_max: int) -> list[MomentIndex]:
    """All (n, m) with 1 <= m <= n <= n_max and n - m even, in lexicographic order."""
    if n_max < 1:
        raise InvalidArgumentError(f"n_max must be >= 1, got {n_max}")
    return [
        MomentIndex(n, m)
        for n in range(1, n_max + 1)
        for m in range(1, n + 1)
        if (n - m) % 2 == 0
    ]


def radial_coefficients(idx) -> dict[int, float]:
    """Map of power of rho -> coefficient of R_nm."""
    n, m = _as_index(idx)
    coeffs = {}
    for s in range((n - m) // 2 + 1):
        c = (-1) ** s * factorial(n - s) / (
            factorial(s) * factorial((n + m) // 2 - s) * factorial((n - m) // 2 - s)
        )
        coeffs[n - 2 * s] = float(c)
    return coeffs


def radial_polynomial(idx, rho):
    """Evaluate R_nm at ``rho`` (scalar or array, values in [0, 1])."""
    rho_arr = np.asarray(rho, dtype=np.float64)
    if np.any(rho_arr < 0) or np.any(rho_arr > 1):
        raise InvalidArgumentError("rho must lie in [0, 1]")
    out = np.zeros_like(rho_arr)
    for power, c in radial_coefficients(idx).items():
        out = out + c * rho_arr**power
    if out.ndim == 0:
        return float(out)
    return out


def grid_coordinates(size: int) -> tuple[np.ndarray, np.ndarray]:
    """(x, y) coordinate arrays of shape (size, size), scaled to [-1, 1]."""
    t = (2.0 * np.arange(size) - (size - 1)) / (size - 1)
    return np.meshgrid(t, t, indexing="ij")


def sample_zernike(idx, size: int) -> np.ndarray:
    """V_nm sampled on a size x size grid over [-1, 1]^2, zero outside the unit disc."""
    idx = _as_index(idx)
    x, y = grid_coordinates(size)
    rho = np.hypot(x, y)
    inside = rho <= 1.0
    values = np.zeros((size, size), dtype=np.complex128)
    r = radial_polynomial(idx, np.where(inside, rho, 0.0))
    # e^{-i m theta} with theta = atan2(y, x), built as the m-th power of the
    # unit phasor (x - iy) / rho. Repeated products of conjugates are exact
    # conjugates, so value(x, -y) == conj(value(x, y)) holds bit for bit and
    # the y = 0 row stays real. The centre (rho = 0) has r = 0 for m >= 1.
    safe = np.where(rho > 0, rho, 1.0)
    unit = (x - 1j * y) / safe
    phase = unit
    for _ in range(idx.m - 1):
        phase = phase * unit
    values[inside] = r[inside] * phase[inside]
    return values


@dataclass(frozen=True, eq=False)
class ZernikeKernel:
    index: MomentIndex
    size: int
    values: np.ndarray = field(repr=False)

    @property
    def scale(self) -> float:
        """Normalisation 2(n+1) / (pi (k-1)^2) applied by the local transform."""
        return 2.0 * (self.index.n + 1) / (pi * (self.size - 1) ** 2)


def _check_size(k) -> int:
    if not isinstance(k, (int, np.integer)) or k < 3 or k % 2 == 0:
        raise InvalidArgumentError(f"kernel size must be an odd integer >= 3, got {k!r}")
    return int(k)


def build_kernel(idx, k: int) -> ZernikeKernel:
    k = _check_size(k)
    idx = _as_index(idx)
    values = sample_zernike(idx, k)
    values.setflags(write=False)
    return ZernikeKernel(idx, k, values)


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Ordered complex kernels plus the scaled real weights used for encoding.

    ``weights`` has shape (2K, k, k): re and im of each kernel, already
    multiplied by the kernel's normalisation, in the order
    re11, im11, re22, im22, ...
    """

    n_max: int
    k: int
    kernels: tuple[ZernikeKernel, ...]
    weights: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.kernels)

    @property
    def channels(self) -> int:
        return 2 * len(self.kernels)

    @property
    def channel_names(self) -> list[str]:
        names = []
        for kern in self.kernels:
            names += [f"re{kern.index.n}{kern.index.m}", f"im{kern.index.n}{kern.index.m}"]
        return names

    def descriptor(self) -> dict:
        return {"n_max": self.n_max, "k": self.k}


def build_filter_bank(n_max: int, k: int) -> FilterBank:
    k = _check_size(k)
    kernels = tuple(build_kernel(idx, k) for idx in valid_indices(n_max))
    weights = np.empty((2 * len(kernels), k, k), dtype=np.float64)
    for c, kern in enumerate(kernels):
        weights[2 * c] = kern.scale * kern.values.real
        weights[2 * c + 1] = kern.scale * kern.values.imag
    weights.setflags(write=False)
    return FilterBank(n_max, k, kernels, weights)


def format_bank(bank: FilterBank) -> str:
    """Text dump, one line ``n m i j re im`` per kernel entry, 17 significant digits."""
    lines = []
    for kern in bank.kernels:
        n, m = kern.index
        for i in range(kern.size):
            for j in range(kern.size):
                v = kern.values[i, j]
                lines.append(f"{n} {m} {i} {j} {v.real:.17g} {v.imag:.17g}")
    return "\n".join(lines) + "\n"
