"""Steering vectors, multi-user channel realizations and SNR accounting.

The channel is LoS-dominant Rician: one line-of-sight path plus ``L``
non-line-of-sight paths with circularly-symmetric Gaussian gains.  Steering
vectors use the quadratic (Fresnel) range model throughout; powers are watts
internally and dBm only at the boundary.

Phase convention: the dense steering vector is referenced to the array
center (the center element has zero phase) while the sparse one keeps the
absolute per-element phase.  The two differ by a global phase only, which no
training or beamforming decision can observe since they all act on
magnitudes of inner products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    fresnel_distance,
    fresnel_range_array,
)


def db_to_linear(db: float) -> float:
    """Convert a dB power ratio to linear scale."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear power ratio to dB."""
    if x <= 0:
        raise ValueError(f"cannot convert non-positive ratio {x} to dB")
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert a power in watts to dBm."""
    if watts <= 0:
        raise ValueError(f"cannot convert non-positive power {watts} to dBm")
    return 10.0 * math.log10(watts) + 30.0


def substream(seed: int, *path: int) -> np.random.Generator:
    """Derive an independent, reproducible random stream from a base seed.

    Streams are keyed by ``(seed, path)`` through ``SeedSequence`` spawn
    keys, so per-trial / per-user streams do not depend on execution order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ChannelParams:
    """Large-scale channel and power parameters.

    ``ref_gain_db`` is the channel power gain at 1 m.  ``absorption_db_per_m``
    models molecular absorption (0 below THz bands).
    """

    rician_factor_db: float
    n_nlos: int
    ref_gain_db: float
    noise_power_dbm: float
    tx_power_dbm: float
    absorption_db_per_m: float = 0.0

    def __post_init__(self) -> None:
        if self.n_nlos < 0:
            raise ValueError(f"n_nlos must be >= 0, got {self.n_nlos}")
        if self.absorption_db_per_m < 0:
            raise ValueError("absorption must be >= 0 dB/m")

    @property
    def rician_factor(self) -> float:
        """Rician factor in linear scale."""
        return db_to_linear(self.rician_factor_db)

    @property
    def ref_gain(self) -> float:
        """Reference power gain at 1 m, linear scale."""
        return db_to_linear(self.ref_gain_db)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watts(self.tx_power_dbm)


def free_space_ref_gain_db(cfg: ArrayConfig) -> float:
    """Free-space power gain at 1 m, ``(wavelength / 4 pi)**2`` in dB."""
    return 20.0 * math.log10(cfg.wavelength / (4.0 * math.pi))


def ula_steering(p: PolarPoint, cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm near-field steering vector of the dense array at ``p``.

    Entry ``n`` is ``exp(-j*2*pi*(r_n - r)/lambda) / sqrt(N)`` with ``r_n``
    the Fresnel range; the center element always has zero phase.
    """
    ns = cfg.signed_indices()
    delta = fresnel_range_array(p, ns, cfg) - p.range_m
    return np.exp(-2j * np.pi / cfg.wavelength * delta) / math.sqrt(cfg.n_antennas)


def sla_steering(p: PolarPoint, act: SparseActivation, cfg: ArrayConfig) -> np.ndarray:
    """Unit-norm steering vector of the sparse (every ``M``-th element) array.

    Entry ``q`` is ``exp(-j*2*pi*r_q/lambda) / sqrt(Q)`` with ``r_q`` the
    Fresnel range at stride ``M``.  Length ``Q``; reduces to
    :func:`ula_steering` for ``M = 1`` up to a global phase.
    """
    qs = act.signed_indices()
    r_q = fresnel_range_array(p, qs, cfg, stride=act.interval)
    return np.exp(-2j * np.pi / cfg.wavelength * r_q) / math.sqrt(act.active_count)


def _absorption_amplitude(params: ChannelParams, path_range: float) -> float:
    # Half the accumulated dB loss applied on the amplitude (20*log10) scale.
    if params.absorption_db_per_m == 0.0:
        return 1.0
    return 10.0 ** (-(params.absorption_db_per_m * path_range / 2.0) / 20.0)


def los_gain(p: PolarPoint, params: ChannelParams, cfg: ArrayConfig) -> complex:
    """Complex line-of-sight path gain for a user at ``p``.

    ``sqrt(kappa/(kappa+1)) * sqrt(ref_gain)/r * exp(-j*2*pi*r/lambda)``,
    scaled by the molecular-absorption amplitude factor when enabled.
    """
    kappa = params.rician_factor
    amp = math.sqrt(kappa / (kappa + 1.0)) * math.sqrt(params.ref_gain) / p.range_m
    amp *= _absorption_amplitude(params, p.range_m)
    phase = -2.0 * math.pi * p.range_m / cfg.wavelength
    return amp * complex(math.cos(phase), math.sin(phase))


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn channel: user location, path gains, and the length-N vector."""

    user: PolarPoint
    los_gain: complex
    nlos: tuple[tuple[complex, PolarPoint], ...]
    h: np.ndarray

    @property
    def n_antennas(self) -> int:
        return self.h.shape[0]


def sample_channel(
    user: PolarPoint,
    params: ChannelParams,
    cfg: ArrayConfig,
    rng: np.random.Generator | int,
) -> ChannelRealization:
    """Draw one multi-path channel realization for ``user``.

    NLoS gains are i.i.d. circularly-symmetric complex Gaussian with standard
    deviation ``sqrt(1/(kappa+1)) * sqrt(ref_gain) / r``; scatterer angles are
    uniform on [-1, 1] and ranges uniform between the Fresnel distance and the
    user range (scatterers sit between the array and the user).  Deterministic
    for a given seed.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))

    n = cfg.n_antennas
    beta = los_gain(user, params, cfg)
    h = math.sqrt(n) * beta * ula_steering(user, cfg)

    nlos: list[tuple[complex, PolarPoint]] = []
    n_paths = params.n_nlos
    if n_paths > 0:
        kappa = params.rician_factor
        sigma = math.sqrt(1.0 / (kappa + 1.0)) * math.sqrt(params.ref_gain) / user.range_m
        lo = min(fresnel_distance(cfg), user.range_m)
        for _ in range(n_paths):
            theta = rng.uniform(-1.0, 1.0)
            r = rng.uniform(lo, user.range_m)
            scatterer = PolarPoint(r, theta)
            g = sigma / math.sqrt(2.0) * complex(rng.standard_normal(), rng.standard_normal())
            g *= _absorption_amplitude(params, r)
            nlos.append((g, scatterer))
            h = h + math.sqrt(n / n_paths) * g * ula_steering(scatterer, cfg)

    h.setflags(write=False)
    return ChannelRealization(user=user, los_gain=beta, nlos=tuple(nlos), h=h)


def reference_snr(user_range: float, params: ChannelParams, cfg: ArrayConfig) -> float:
    """Reference SNR in dB: ``N * P * ref_gain / (r**2 * noise)``."""
    if user_range <= 0:
        raise ValueError(f"user range must be positive, got {user_range}")
    snr = (
        cfg.n_antennas
        * params.tx_power_w
        * params.ref_gain
        / (user_range**2 * params.noise_power_w)
    )
    return linear_to_db(snr)


def tx_power_for_snr(
    snr_db: float, user_range: float, params: ChannelParams, cfg: ArrayConfig
) -> float:
    """Transmit power in watts that yields the target reference SNR."""
    if user_range <= 0:
        raise ValueError(f"user range must be positive, got {user_range}")
    return (
        db_to_linear(snr_db)
        * user_range**2
        * params.noise_power_w
        / (cfg.n_antennas * params.ref_gain)
    )
