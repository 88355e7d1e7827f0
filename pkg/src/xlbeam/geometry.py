"""Array geometry, field-region boundaries and per-antenna range models.

Antenna indices are signed and centered: element ``n`` sits at ``(0, n*d0)``
for ``n in {0, +-1, ..., +-(N-1)/2}``, with ``N`` odd.  Storage order is
ascending ``n``; :func:`storage_index` / :func:`signed_index` are the single
translation between the two and every weight-vector index goes through them.

All angles are spatial angles (direction cosines) in ``[-1, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3.0e8
"""Propagation speed used throughout, m/s."""


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array with half-wavelength element spacing.

    Parameters
    ----------
    n_antennas:
        Number of elements ``N``; must be odd so the index set is symmetric
        around the array center.
    carrier_freq:
        Carrier frequency in Hz.
    """

    n_antennas: int
    carrier_freq: float

    def __post_init__(self) -> None:
        if self.n_antennas < 3 or self.n_antennas % 2 == 0:
            raise ValueError(
                f"n_antennas must be an odd integer >= 3, got {self.n_antennas}"
            )
        if self.carrier_freq <= 0:
            raise ValueError(f"carrier_freq must be positive, got {self.carrier_freq}")

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters."""
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def spacing(self) -> float:
        """Inter-element spacing ``d0 = wavelength / 2`` in meters."""
        return self.wavelength / 2.0

    @property
    def aperture(self) -> float:
        """Physical aperture ``D = (N - 1) * d0`` in meters."""
        return (self.n_antennas - 1) * self.spacing

    @property
    def half_span(self) -> int:
        """Largest signed element index, ``(N - 1) / 2``."""
        return (self.n_antennas - 1) // 2

    def signed_indices(self) -> np.ndarray:
        """All signed element indices in storage (ascending) order."""
        h = self.half_span
        return np.arange(-h, h + 1)


@dataclass(frozen=True)
class PolarPoint:
    """A point in the polar domain: (range in meters, spatial angle)."""

    range_m: float
    angle: float

    def __post_init__(self) -> None:
        if not self.range_m > 0:
            raise ValueError(f"range must be positive, got {self.range_m}")
        if not -1.0 <= self.angle <= 1.0:
            raise ValueError(f"spatial angle must lie in [-1, 1], got {self.angle}")


@dataclass(frozen=True)
class SparseActivation:
    """Uniform sparse activation pattern: every ``interval``-th element active.

    ``active_count`` is ``(N - 1) / interval + 1``; construction through
    :meth:`for_array` enforces the divisibility, which is a hard requirement
    (non-divisible pairs are rejected, never rounded).
    """

    interval: int
    active_count: int

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ValueError(f"interval must be >= 1, got {self.interval}")
        if self.active_count < 1:
            raise ValueError(f"active_count must be >= 1, got {self.active_count}")

    @classmethod
    def for_array(cls, cfg: ArrayConfig, interval: int) -> "SparseActivation":
        """Build the activation for ``cfg`` with the given sampling interval."""
        if interval < 1:
            raise ValueError(f"interval must be >= 1, got {interval}")
        span = cfg.n_antennas - 1
        if span % interval != 0:
            raise ValueError(
                f"interval {interval} does not divide N-1 = {span}; "
                "pick an interval that divides the array span exactly"
            )
        return cls(interval=interval, active_count=span // interval + 1)

    @property
    def half_span(self) -> int:
        """Largest signed active-element index ``(Q - 1) / 2``."""
        return (self.active_count - 1) // 2

    def signed_indices(self) -> np.ndarray:
        """Signed indices ``q`` of the active elements, ascending."""
        if self.active_count % 2 == 0:
            # Symmetric indexing needs an odd count; even counts only arise
            # from direct construction, never from for_array with odd N.
            raise ValueError("active_count must be odd for symmetric indexing")
        h = self.half_span
        return np.arange(-h, h + 1)

    def active_antenna_indices(self) -> np.ndarray:
        """Signed indices of the active elements on the full array (``q * M``)."""
        return self.signed_indices() * self.interval


def storage_index(n: int | np.ndarray, n_antennas: int) -> int | np.ndarray:
    """Map a signed element index to its position in storage order."""
    return n + (n_antennas - 1) // 2


def signed_index(i: int | np.ndarray, n_antennas: int) -> int | np.ndarray:
    """Map a storage position to the signed element index."""
    return i - (n_antennas - 1) // 2


def fresnel_distance(cfg: ArrayConfig) -> float:
    """Inner boundary of the radiative near-field region, ``1.2 * D`` meters."""
    return 1.2 * cfg.aperture


def rayleigh_distance(cfg: ArrayConfig) -> float:
    """Near/far-field boundary ``2 * D**2 / wavelength`` in meters."""
    d = cfg.aperture
    return 2.0 * d * d / cfg.wavelength


def exact_range(p: PolarPoint, antenna_index: int, cfg: ArrayConfig) -> float:
    """Exact range from element ``antenna_index`` to the point ``p``.

    ``sqrt(r**2 + (n*d0)**2 - 2*r*theta*n*d0)`` with the signed index ``n``.
    """
    n = antenna_index
    if abs(n) > cfg.half_span:
        raise ValueError(f"antenna index {n} outside +-{cfg.half_span}")
    nd = n * cfg.spacing
    return math.sqrt(p.range_m**2 + nd * nd - 2.0 * p.range_m * p.angle * nd)


def fresnel_range(
    p: PolarPoint, antenna_index: int, cfg: ArrayConfig, stride: int = 1
) -> float:
    """Quadratic (Fresnel) approximation of the element-to-point range.

    ``r - n*s*d0*theta + (n*s*d0)**2 * (1 - theta**2) / (2r)`` where ``s`` is
    the activation stride (1 for the dense array, the sampling interval for a
    sparse one, in which case ``antenna_index`` is the sparse index).
    """
    n = antenna_index
    if abs(n * stride) > cfg.half_span:
        raise ValueError(
            f"effective index {n * stride} outside +-{cfg.half_span}"
        )
    nd = n * stride * cfg.spacing
    r, theta = p.range_m, p.angle
    return r - nd * theta + nd * nd * (1.0 - theta * theta) / (2.0 * r)


def fresnel_range_array(
    p: PolarPoint, indices: np.ndarray, cfg: ArrayConfig, stride: int = 1
) -> np.ndarray:
    """Vectorized :func:`fresnel_range` over an array of signed indices."""
    nd = np.asarray(indices) * (stride * cfg.spacing)
    r, theta = p.range_m, p.angle
    return r - nd * theta + nd * nd * ((1.0 - theta * theta) / (2.0 * r))


def max_fresnel_phase_error(p: PolarPoint, cfg: ArrayConfig) -> float:
    """Largest phase error (radians) of the Fresnel range over all elements.

    ``(2*pi/lambda) * max_n |exact - approx|``; the quadratic model is
    trusted where this stays below ``pi / 8``.
    """
    ns = cfg.signed_indices()
    nd = ns * cfg.spacing
    r, theta = p.range_m, p.angle
    exact = np.sqrt(r * r + nd * nd - 2.0 * r * theta * nd)
    approx = fresnel_range_array(p, ns, cfg)
    return float(2.0 * np.pi / cfg.wavelength * np.max(np.abs(exact - approx)))
