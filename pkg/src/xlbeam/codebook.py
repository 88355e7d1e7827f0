"""Polar-domain, DFT and array-division codebooks.

Index convention: angles are indexed ``s = 1..QM`` over the full grid and
ranges ``v = 1..V``; the multi-beam book reuses the same global ``s`` values
restricted to the central sector, so the replica index arithmetic
``s + m*Q`` never needs translation between books.

Codewords are materialized lazily from their (kind, steer, activation)
descriptors; accessing ``weights`` forces the build and caches it.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Iterator, Sequence

import numpy as np

from .geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    storage_index,
)
from .channel import sla_steering, ula_steering


class CodewordKind(enum.Enum):
    DENSE_POLAR = "dense-polar"
    SPARSE_MULTI = "sparse-multi"
    DFT = "dft"
    ARRAY_DIVISION = "array-division"


class Codeword:
    """A length-N analog weight vector plus its steering metadata.

    ``support`` holds the storage indices of the active elements; entries off
    the support are exactly zero and entries on it share one modulus, so the
    vector always has unit norm.
    """

    def __init__(
        self,
        kind: CodewordKind,
        support: np.ndarray,
        n_antennas: int,
        build: Callable[[], np.ndarray],
        steer: PolarPoint | None = None,
        angles: tuple[float, ...] | None = None,
    ) -> None:
        self.kind = kind
        self.steer = steer
        self.angles = angles
        self.n_antennas = n_antennas
        self.support = np.asarray(support, dtype=int)
        self.support.setflags(write=False)
        self._build = build
        self._weights: np.ndarray | None = None

    @property
    def materialized(self) -> bool:
        return self._weights is not None

    @property
    def weights(self) -> np.ndarray:
        if self._weights is None:
            w = np.zeros(self.n_antennas, dtype=complex)
            w[self.support] = self._build()
            w.setflags(write=False)
            self._weights = w
        return self._weights

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return (
            f"Codeword({self.kind.value}, steer={self.steer}, angles={self.angles}, "
            f"active={len(self.support)}/{self.n_antennas})"
        )


def polar_codeword(steer: PolarPoint, cfg: ArrayConfig) -> Codeword:
    """Dense near-field codeword focused at ``steer``."""
    return Codeword(
        kind=CodewordKind.DENSE_POLAR,
        support=np.arange(cfg.n_antennas),
        n_antennas=cfg.n_antennas,
        build=lambda: ula_steering(steer, cfg),
        steer=steer,
    )


def sparse_codeword(steer: PolarPoint, act: SparseActivation, cfg: ArrayConfig) -> Codeword:
    """Sparse-activation codeword: the stride-M steering vector, zero padded."""
    support = storage_index(act.active_antenna_indices(), cfg.n_antennas)
    return Codeword(
        kind=CodewordKind.SPARSE_MULTI,
        support=support,
        n_antennas=cfg.n_antennas,
        build=lambda: sla_steering(steer, act, cfg),
        steer=steer,
    )


def dft_codeword(theta: float, cfg: ArrayConfig) -> Codeword:
    """Far-field codeword: entry ``n`` is ``exp(j*pi*n*theta)/sqrt(N)``."""

    def build() -> np.ndarray:
        n = cfg.signed_indices()
        return np.exp(1j * np.pi * n * theta) / math.sqrt(cfg.n_antennas)

    return Codeword(
        kind=CodewordKind.DFT,
        support=np.arange(cfg.n_antennas),
        n_antennas=cfg.n_antennas,
        build=build,
        angles=(theta,),
    )


def angle_grid(act: SparseActivation) -> np.ndarray:
    """Sampled spatial angles ``theta_s = (2s - QM - 1) / QM`` for s = 1..QM."""
    qm = act.active_count * act.interval
    s = np.arange(1, qm + 1)
    return (2.0 * s - qm - 1.0) / qm


def range_grid_scale(
    act: SparseActivation, cfg: ArrayConfig, depth_constant: float = 1.6
) -> float:
    """Range-sampling scale ``Z = M^2 Q^2 d0^2 / (2 * lambda * c^2)`` in meters.

    Range samples at angle ``theta_s`` are ``Z * (1 - theta_s^2) / v``; the
    constant ``c`` bounds the inter-sample phase spread at the 3-dB level.
    """
    m, q = act.interval, act.active_count
    d0 = cfg.spacing
    return (m * m * q * q * d0 * d0) / (2.0 * cfg.wavelength * depth_constant**2)


def sector_indices(act: SparseActivation) -> range:
    """Angle indices ``s`` of the central sector covered by main lobes.

    The sector spans ``theta in [-1/M, 1/M)`` and contains exactly ``Q``
    grid angles; it only exists for even intervals with odd ``Q``.
    """
    q, m = act.active_count, act.interval
    lo2 = q * (m - 1) + 1
    hi2 = q * (m + 1) - 1
    if lo2 % 2 != 0 or hi2 % 2 != 0:
        raise ValueError(
            f"no integer central sector for interval {m} with {q} active elements; "
            "the multi-beam book needs an even interval and odd active count"
        )
    lo, hi = lo2 // 2, hi2 // 2
    sector = range(lo, hi + 1)
    if len(sector) != q:
        raise ValueError(
            f"central sector has {len(sector)} indices, expected {q}"
        )
    return sector


class PolarCodebook:
    """Polar-domain codebook over the joint angle / range grid.

    One codeword per ``(s, v)`` with ``s`` in ``s_indices`` and
    ``v = 1..n_ranges``; flat ordering is ``s``-major.  The single-beam book
    spans all ``QM`` angles with dense codewords, the multi-beam book spans
    the central sector with sparse ones.
    """

    def __init__(
        self,
        act: SparseActivation,
        cfg: ArrayConfig,
        n_ranges: int,
        s_indices: Sequence[int],
        sparse: bool,
        depth_constant: float = 1.6,
    ) -> None:
        if n_ranges < 1:
            raise ValueError(f"n_ranges must be >= 1, got {n_ranges}")
        self.act = act
        self.cfg = cfg
        self.n_ranges = n_ranges
        self.s_indices = tuple(int(s) for s in s_indices)
        self.sparse = sparse
        self.angle_grid = angle_grid(act)
        self.z_scale = range_grid_scale(act, cfg, depth_constant)
        qm = act.active_count * act.interval
        for s in self.s_indices:
            if not 1 <= s <= qm:
                raise ValueError(f"angle index {s} outside 1..{qm}")
        self._codewords: dict[tuple[int, int], Codeword] = {}
        self._matrix: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.s_indices) * self.n_ranges

    def theta(self, s: int) -> float:
        return float(self.angle_grid[s - 1])

    def range_m(self, s: int, v: int) -> float:
        if not 1 <= v <= self.n_ranges:
            raise ValueError(f"range index {v} outside 1..{self.n_ranges}")
        th = self.theta(s)
        return self.z_scale * (1.0 - th * th) / v

    def steer(self, s: int, v: int) -> PolarPoint:
        return PolarPoint(self.range_m(s, v), self.theta(s))

    def codeword(self, s: int, v: int) -> Codeword:
        key = (s, v)
        if key not in self._codewords:
            if s not in self.s_indices:
                raise KeyError(f"angle index {s} not in this book")
            steer = self.steer(s, v)
            if self.sparse:
                cw = sparse_codeword(steer, self.act, self.cfg)
            else:
                cw = polar_codeword(steer, self.cfg)
            self._codewords[key] = cw
        return self._codewords[key]

    def indices(self) -> Iterator[tuple[int, int]]:
        """All ``(s, v)`` pairs in flat order."""
        for s in self.s_indices:
            for v in range(1, self.n_ranges + 1):
                yield s, v

    def flat_index(self, s: int, v: int) -> int:
        return self.s_indices.index(s) * self.n_ranges + (v - 1)

    def pair_at(self, flat: int) -> tuple[int, int]:
        s_pos, v_pos = divmod(flat, self.n_ranges)
        return self.s_indices[s_pos], v_pos + 1

    def weights_matrix(self) -> np.ndarray:
        """All codewords stacked as columns, shape ``(N, size)``."""
        if self._matrix is None:
            mat = np.empty((self.cfg.n_antennas, self.size), dtype=complex)
            for i, (s, v) in enumerate(self.indices()):
                mat[:, i] = self.codeword(s, v).weights
            mat.setflags(write=False)
            self._matrix = mat
        return self._matrix


def build_single_beam_codebook(
    act: SparseActivation, n_ranges: int, cfg: ArrayConfig
) -> PolarCodebook:
    """Dense single-beam book: ``QM * V`` codewords over every grid angle."""
    qm = act.active_count * act.interval
    return PolarCodebook(
        act=act, cfg=cfg, n_ranges=n_ranges, s_indices=range(1, qm + 1), sparse=False
    )


def build_multi_beam_codebook(
    act: SparseActivation, n_ranges: int, cfg: ArrayConfig
) -> PolarCodebook:
    """Sparse multi-beam book: ``Q * V`` codewords over the central sector.

    Each codeword keeps exactly ``Q`` elements active at stride ``M`` and
    steers its main lobe inside ``[-1/M, 1/M)``; its grating lobes land on the
    single-beam grid points ``(s + m*Q, v)``.
    """
    return PolarCodebook(
        act=act,
        cfg=cfg,
        n_ranges=n_ranges,
        s_indices=sector_indices(act),
        sparse=True,
    )


class DftCodebook(Sequence[Codeword]):
    """Far-field codebook over a uniform spatial-angle grid."""

    def __init__(self, cfg: ArrayConfig, grid_size: int) -> None:
        if grid_size < 1:
            raise ValueError(f"grid_size must be >= 1, got {grid_size}")
        self.cfg = cfg
        s = np.arange(1, grid_size + 1)
        self.thetas = (2.0 * s - grid_size - 1.0) / grid_size
        self._codewords: list[Codeword | None] = [None] * grid_size
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.thetas)

    def __getitem__(self, i: int) -> Codeword:
        if self._codewords[i] is None:
            self._codewords[i] = dft_codeword(float(self.thetas[i]), self.cfg)
        return self._codewords[i]

    def __iter__(self) -> Iterator[Codeword]:
        for i in range(len(self)):
            yield self[i]

    def weights_matrix(self) -> np.ndarray:
        if self._matrix is None:
            n = self.cfg.signed_indices()
            mat = np.exp(1j * np.pi * np.outer(n, self.thetas)) / math.sqrt(
                self.cfg.n_antennas
            )
            mat.setflags(write=False)
            self._matrix = mat
        return self._matrix


def build_dft_codebook(cfg: ArrayConfig, grid_size: int) -> DftCodebook:
    """Far-field codebook with ``grid_size`` uniformly-spaced angles."""
    return DftCodebook(cfg, grid_size)


def build_array_division_codeword(
    angles: Sequence[float], n_subarrays: int, cfg: ArrayConfig
) -> Codeword:
    """Far-field multi-beam codeword from contiguous sub-arrays.

    Sub-array ``i`` (of ``n_subarrays``, each ``rho`` elements) steers angle
    ``angles[i]`` with an inter-sub-array phase that keeps the arms aligned.
    The array length must split evenly; with an odd element count the last
    element is dropped (left at zero).
    """
    if len(angles) != n_subarrays:
        raise ValueError(
            f"need exactly {n_subarrays} angles, got {len(angles)}"
        )
    n = cfg.n_antennas
    n_used = n - (n % n_subarrays)
    if n_used == 0:
        raise ValueError("more sub-arrays than antennas")
    rho = n_used // n_subarrays
    angles = tuple(float(a) for a in angles)

    def build() -> np.ndarray:
        w = np.empty(n_used, dtype=complex)
        p = np.arange(rho)
        for i, theta in enumerate(angles):
            block = np.exp(-1j * np.pi * i * rho * theta) * np.exp(1j * np.pi * p * theta)
            w[i * rho : (i + 1) * rho] = block
        return w / math.sqrt(n_used)

    return Codeword(
        kind=CodewordKind.ARRAY_DIVISION,
        support=np.arange(n_used),
        n_antennas=n,
        build=build,
        angles=angles,
    )
