"""Near-field beam patterns of dense and sparsely-activated codewords.

A codeword steered at ``(r0, theta0)`` concentrates power on the *user ring*
``(1 - theta**2) / r = (1 - theta0**2) / r0``.  Sparse activation with
interval ``M`` replicates the main lobe at angle offsets ``2m/M`` along that
ring (grating lobes) and, once ``M`` exceeds :func:`m_threshold`, also
produces *abnormal rings*: displaced rings where the pattern degenerates and
creates range ambiguity.  This module evaluates patterns by brute force and
through the quadratic-phase closed forms, locates lobes, classifies abnormal
rings, and measures beam width / depth numerically.

Pattern values are normalized correlations: the value is scaled so that a
codeword observed at its own steer point reads 1 regardless of how many
elements are active.  This matches the sparse-array pattern defined on the
active elements alone; the physical (unnormalized) received amplitude of a
sparse codeword is lower by ``sqrt(Q/N)``, which the measurement model in
:mod:`xlbeam.training` keeps.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    fresnel_distance,
    rayleigh_distance,
)
from .channel import ula_steering

DEPTH_CONSTANT_3DB = 1.6
"""Phase-spread constant used in the analytic 3-dB beam-depth radius."""

# An alternative 1.25 constant circulates for the same bound; it is recorded
# here but unused: the depth radius below takes DEPTH_CONSTANT_3DB, which is
# exposed as a parameter everywhere it enters.
DEPTH_CONSTANT_ALT = 1.25


def _support_of(weights: np.ndarray) -> np.ndarray:
    return np.flatnonzero(weights)


def pattern(observe: PolarPoint, codeword, cfg: ArrayConfig) -> float:
    """Normalized beam pattern of ``codeword`` observed at ``observe``.

    ``codeword`` may be a :class:`~xlbeam.codebook.Codeword` or a raw length-N
    weight vector.  Deactivated (zero) entries contribute nothing; the result
    is scaled by ``sqrt(N / |support|)`` so a matched codeword reads 1.
    """
    weights = getattr(codeword, "weights", codeword)
    weights = np.asarray(weights)
    if weights.shape[0] != cfg.n_antennas:
        raise ValueError(
            f"codeword length {weights.shape[0]} != n_antennas {cfg.n_antennas}"
        )
    support = getattr(codeword, "support", None)
    if support is None:
        support = _support_of(weights)
    b = ula_steering(observe, cfg)
    scale = math.sqrt(cfg.n_antennas / len(support))
    return float(np.abs(np.vdot(b, weights)) * scale)


def pattern_grid(
    thetas: np.ndarray,
    ranges: np.ndarray,
    codeword,
    cfg: ArrayConfig,
) -> np.ndarray:
    """Evaluate :func:`pattern` on a (range x angle) grid.

    Returns an array of shape ``(len(ranges), len(thetas))``.
    """
    weights = np.asarray(getattr(codeword, "weights", codeword))
    support = getattr(codeword, "support", None)
    if support is None:
        support = _support_of(weights)
    scale = math.sqrt(cfg.n_antennas / len(support)) / math.sqrt(cfg.n_antennas)
    nd = cfg.signed_indices()[support] * cfg.spacing
    w = weights[support]
    thetas = np.asarray(thetas, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    out = np.empty((ranges.size, thetas.size))
    k = 2.0 * np.pi / cfg.wavelength
    for i, r in enumerate(ranges):
        # r_n - r for all (element, angle) pairs at this range
        delta = -np.outer(nd, thetas) + np.outer(nd * nd, (1.0 - thetas * thetas) / (2.0 * r))
        out[i] = np.abs(np.exp(1j * k * delta).T @ w) * scale
    return out


def sla_pattern_closed_form(
    observe: PolarPoint,
    steer: PolarPoint,
    act: SparseActivation,
    cfg: ArrayConfig,
) -> float:
    """Sparse-array pattern via the quadratic phase decomposition.

    ``(1/Q) * |sum_q exp(j*(pi*q*M*d_nf + (pi/lambda)*q^2*(M*d0)^2*phi))|``
    where ``d_nf = theta - theta0`` is the angle difference and
    ``phi = (1-theta0^2)/r0 - (1-theta^2)/r`` the ring difference.  Equals the
    inner product of the two sparse steering vectors exactly (the constant
    phase drops in the magnitude).
    """
    q = act.signed_indices().astype(float)
    md0 = act.interval * cfg.spacing
    d_nf = observe.angle - steer.angle
    phi = (1.0 - steer.angle**2) / steer.range_m - (1.0 - observe.angle**2) / observe.range_m
    b1 = np.pi * q * act.interval * d_nf
    b2 = np.pi / cfg.wavelength * q * q * md0 * md0 * phi
    return float(np.abs(np.sum(np.exp(1j * (b1 + b2)))) / act.active_count)


def dirichlet_sinc(order: int, x) -> float | np.ndarray:
    """Dirichlet sinc ``sin(order*pi*x/2) / sin(pi*x/2)``, finite everywhere.

    At zeros of the denominator the continuous extension ``+-order`` is
    returned.  Periodic in ``x`` with period 4 for integer ``order``.
    """
    x = np.asarray(x, dtype=float)
    num = np.sin(order * np.pi * x / 2.0)
    den = np.sin(np.pi * x / 2.0)
    singular = np.abs(den) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(singular, 0.0, num) / np.where(singular, 1.0, den)
    # l'Hopital limit at den == 0: order * cos(order*pi*x/2) / cos(pi*x/2)
    limit = order * np.cos(order * np.pi * x / 2.0) / np.cos(np.pi * x / 2.0)
    out = np.where(singular, limit, ratio)
    return float(out) if out.ndim == 0 else out


def m_threshold(cfg: ArrayConfig) -> float:
    """Largest activation interval free of abnormal rings, ``sqrt(1.2*(N-1))``."""
    return math.sqrt(1.2 * (cfg.n_antennas - 1))


def ring_matched_range(steer: PolarPoint, theta: float) -> float:
    """Range on the steer point's user ring at the given angle."""
    return steer.range_m * (1.0 - theta * theta) / (1.0 - steer.angle**2)


@dataclass(frozen=True)
class RingSpec:
    """A constant-``(1-theta^2)/r`` ring; ``alpha == 0`` is the user ring."""

    ring_value: float
    alpha: int

    @property
    def is_user_ring(self) -> bool:
        return self.alpha == 0

    def range_at(self, theta: float) -> float:
        """Ring range at a given angle (requires a positive ring value)."""
        if self.ring_value <= 0:
            raise ValueError("ring has no positive-range points")
        return (1.0 - theta * theta) / self.ring_value


class RingType(enum.Enum):
    """Degeneracy class of an abnormal ring, by residue of alpha mod 4."""

    TYPE_I = "I"
    TYPE_II = "II"
    TYPE_III = "III"


def ring_type(alpha: int) -> RingType:
    if alpha % 2 != 0:
        return RingType.TYPE_III
    if alpha % 4 == 0:
        return RingType.TYPE_I
    return RingType.TYPE_II


@dataclass(frozen=True)
class LobeSet:
    """Lobes of one sparse codeword: locations on the user ring plus widths."""

    lobes: tuple[PolarPoint, ...]
    beam_width: float
    beam_depths: tuple[float, ...]


def lobe_offsets(steer_angle: float, interval: int) -> list[int]:
    """Offsets ``m`` whose replica angle ``theta0 + 2m/M`` stays in [-1, 1]."""
    out = []
    for m in range(-(interval - 1), interval):
        theta = steer_angle + 2.0 * m / interval
        if -1.0 <= theta <= 1.0:
            out.append(m)
    return out


def depth_radius(
    theta: float,
    act: SparseActivation,
    cfg: ArrayConfig,
    depth_constant: float = DEPTH_CONSTANT_3DB,
) -> float:
    """Range beyond which a lobe's 3-dB depth becomes unbounded."""
    q, m = act.active_count, act.interval
    return q * q * m * m * cfg.spacing * (1.0 - theta * theta) / (4.0 * depth_constant**2)


def grating_lobes(
    steer: PolarPoint,
    act: SparseActivation,
    cfg: ArrayConfig,
    depth_constant: float = DEPTH_CONSTANT_3DB,
) -> LobeSet:
    """Predicted lobes of the sparse codeword steered at ``steer``.

    Replicas appear at ``theta_m = theta0 + 2m/M`` on the user ring with the
    common null-to-null width ``4/(QM)``.  The 3-dB depth of each lobe is
    ``2*r_m^2*r_bd / (r_bd^2 - r_m^2)`` while ``r_m < r_bd`` and infinite
    beyond.  A replica angle of exactly +-1 ring-matches onto the array
    center (zero range) and is dropped.  Emits a warning above the
    abnormal-ring threshold, where the multi-lobe picture stops being the
    whole story.
    """
    if act.interval > m_threshold(cfg):
        warnings.warn(
            f"activation interval {act.interval} exceeds the abnormal-ring "
            f"threshold {m_threshold(cfg):.2f}; lobe predictions remain on the "
            "user ring but abnormal rings will also carry power",
            stacklevel=2,
        )
    lobes = []
    depths = []
    for m in lobe_offsets(steer.angle, act.interval):
        theta = steer.angle + 2.0 * m / act.interval
        r = ring_matched_range(steer, theta)
        if r <= 0:
            continue
        lobes.append(PolarPoint(r, theta))
        r_bd = depth_radius(theta, act, cfg, depth_constant)
        if r < r_bd:
            depths.append(2.0 * r * r * r_bd / (r_bd * r_bd - r * r))
        else:
            depths.append(math.inf)
    width = 4.0 / (act.active_count * act.interval)
    return LobeSet(lobes=tuple(lobes), beam_width=width, beam_depths=tuple(depths))


def abnormal_rings(
    steer: PolarPoint,
    act: SparseActivation,
    cfg: ArrayConfig,
    fresnel_bounds: tuple[float, float] | None = None,
) -> list[tuple[RingSpec, RingType]]:
    """Abnormal rings of the codeword that intersect the near-field region.

    Ring ``alpha`` (a nonzero integer) has
    ``(1-theta^2)/r = (1-theta0^2)/r0 - alpha/(M^2*d0)``; it intersects the
    region ``r in [z_lo, z_hi]`` iff its ring value ``c`` satisfies
    ``0 < c <= 1/z_lo``.  ``alpha > 0`` rings sit outside the user ring
    (larger range at the steer angle), ``alpha < 0`` inside.
    """
    if fresnel_bounds is None:
        fresnel_bounds = (fresnel_distance(cfg), rayleigh_distance(cfg))
    z_lo, _ = fresnel_bounds
    c0 = (1.0 - steer.angle**2) / steer.range_m
    m2d0 = act.interval**2 * cfg.spacing
    # 0 < c0 - alpha/m2d0 <= 1/z_lo
    alpha_min = math.ceil((c0 - 1.0 / z_lo) * m2d0 - 1e-12)
    alpha_max = math.floor(c0 * m2d0 - 1e-12)
    out = []
    for alpha in range(alpha_min, alpha_max + 1):
        if alpha == 0:
            continue
        c = c0 - alpha / m2d0
        out.append((RingSpec(ring_value=c, alpha=alpha), ring_type(alpha)))
    return out


def abnormal_ring_pattern(alpha: int, x, active_count: int):
    """Closed-form pattern on abnormal ring ``alpha`` at ``x = M * delta_nf``.

    ``delta_nf`` is the angle difference ``theta - theta0``.  The three cases
    with ``alpha`` not a multiple of 4 split the sum over even and odd active
    elements and require ``(Q-1)/2`` even; the multiple-of-4 case holds for
    any odd ``Q``.  Returns the normalized pattern value in [0, 1].
    """
    q = active_count
    x = np.asarray(x, dtype=float)
    if alpha % 4 == 0:
        val = np.abs(dirichlet_sinc(q, x)) / q
    else:
        even = dirichlet_sinc((q + 1) // 2, 2.0 * x)
        odd = dirichlet_sinc((q - 1) // 2, 2.0 * x)
        if alpha % 4 == 2:
            val = np.abs(even - odd) / q
        elif alpha % 4 == 1:
            val = np.abs(even + 1j * odd) / q
        else:  # alpha % 4 == 3
            val = np.abs(even - 1j * odd) / q
    return float(val) if np.ndim(val) == 0 else val


def range_falloff(gamma) -> float | np.ndarray:
    """Radial pattern falloff ``|(C(x) + j*S(x)) / x|`` via Fresnel integrals.

    ``x = (QM/2) * sqrt(d0 * |ring difference|)``; used to place range
    samples so adjacent codewords at one angle stay within the 3-dB bound.
    """
    x = np.asarray(gamma, dtype=float)
    s, c = special.fresnel(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(x == 0, 1.0, np.abs(c + 1j * s) / np.where(x == 0, 1.0, np.abs(x)))
    return float(val) if val.ndim == 0 else val


def _ring_scan(
    codeword, steer: PolarPoint, cfg: ArrayConfig, step: float, halfspan: float
):
    thetas = np.arange(steer.angle - halfspan, steer.angle + halfspan + step / 2, step)
    keep = (np.abs(thetas) < 1.0)
    thetas = thetas[keep]
    ranges = np.array([ring_matched_range(steer, t) for t in thetas])
    b_vals = np.array(
        [pattern(PolarPoint(r, t), codeword, cfg) for r, t in zip(ranges, thetas)]
    )
    return thetas, b_vals


def _effective_aperture_count(codeword, cfg: ArrayConfig) -> int:
    # Null spacing is set by the activated aperture: QM for a sparse codeword
    # (= N - 1 + M), N for a dense one.
    support = getattr(codeword, "support", None)
    weights = np.asarray(getattr(codeword, "weights", codeword))
    if support is None:
        support = _support_of(weights)
    n_active = len(support)
    if n_active <= 1 or n_active == cfg.n_antennas:
        return cfg.n_antennas
    stride = (cfg.n_antennas - 1) // (n_active - 1)
    return n_active * stride


def measure_beam_width(codeword, steer: PolarPoint, cfg: ArrayConfig, step: float | None = None) -> float:
    """Null-to-null beam width measured on the user ring.

    Scans the ring at ``step`` (default: a tenth of the expected null
    spacing), walks outward from the peak to the first local minima and
    returns their angular separation.
    """
    if abs(steer.angle) >= 1.0:
        raise ValueError("beam width is undefined at endfire steer angles")
    qm = _effective_aperture_count(codeword, cfg)
    if step is None:
        step = 1.0 / (10.0 * qm)
    halfspan = 8.0 / qm
    thetas, vals = _ring_scan(codeword, steer, cfg, step, halfspan)
    if vals.max() - vals.min() < 1e-9:
        raise ValueError("flat pattern: beam width undefined")
    peak = int(np.argmax(vals))

    def first_null(direction: int) -> int:
        i = peak
        while 0 < i + direction < len(vals) - 1:
            i += direction
            if vals[i] <= vals[i - direction] and vals[i] <= vals[i + direction]:
                return i
        return i

    left = first_null(-1)
    right = first_null(+1)
    return float(thetas[right] - thetas[left])


def measure_beam_depth(
    codeword, steer: PolarPoint, cfg: ArrayConfig, n_points: int = 2000
) -> float:
    """3-dB beam depth measured along the steer angle.

    Scans log-spaced ranges across the radiative near field and returns the
    extent of the contiguous interval around the radial peak where the
    squared pattern stays above half its maximum; infinite when that interval
    is still open at the far boundary.
    """
    z_lo, z_hi = fresnel_distance(cfg), rayleigh_distance(cfg)
    ranges = np.geomspace(z_lo, z_hi, n_points)
    vals = np.array(
        [pattern(PolarPoint(r, steer.angle), codeword, cfg) for r in ranges]
    )
    power = vals * vals
    if power.max() - power.min() < 1e-12:
        raise ValueError("flat radial pattern: beam depth undefined")
    half = 0.5 * power.max()
    peak = int(np.argmax(power))
    lo = peak
    while lo > 0 and power[lo - 1] >= half:
        lo -= 1
    hi = peak
    while hi < len(ranges) - 1 and power[hi + 1] >= half:
        hi += 1
    if hi == len(ranges) - 1:
        return math.inf
    return float(ranges[hi] - ranges[lo])
