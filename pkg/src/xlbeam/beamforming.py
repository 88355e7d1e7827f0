"""Hybrid beamforming: effective channels, ZF/MMSE digital stage, rates.

The analog stage is one codeword column per user (equal-modulus entries on
its support); the digital stage is a small K x K precoder on the effective
channels.  Per-user transmit normalization ``||F_rf @ f_k|| = 1`` is applied
by :class:`HybridBeamformer` before any rate is evaluated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CONDITION_LIMIT = 1e12
"""Condition number above which a digital solve is treated as rank deficient."""


class RankDeficientError(ValueError):
    """Effective channels too aligned for zero forcing.

    ``users`` holds the indices involved: the user whose beam could not be
    separated first, then the users its effective channel collides with.
    """

    def __init__(self, users: Sequence[int], message: str | None = None) -> None:
        self.users = tuple(users)
        super().__init__(
            message
            or f"effective channels of users {self.users} are (numerically) "
            "linearly dependent; zero-forcing separation impossible"
        )


def phase_beamformer(h: np.ndarray) -> np.ndarray:
    """Unit-modulus phase-matched analog vector ``exp(j*angle(h)) / sqrt(N)``.

    Maximizes ``|h^H f|`` over per-element constant-modulus vectors; zero
    entries get zero phase.
    """
    h = np.asarray(h)
    out = np.where(np.abs(h) > 0, np.exp(1j * np.angle(h)), 1.0 + 0j)
    return out / math.sqrt(h.shape[0])


def effective_channels(channels: Sequence[np.ndarray], analog: np.ndarray) -> np.ndarray:
    """Effective channel matrix: row ``k`` is ``h_k^H @ F_rf``."""
    analog = np.asarray(analog)
    rows = [np.asarray(h).conj() @ analog for h in channels]
    return np.asarray(rows)


def _colliding_users(g: np.ndarray, k: int) -> list[int]:
    # Pairs of users with near-parallel effective channels (diagnostic for
    # the rank-deficiency error path); falls back to k alone when the
    # dependency is not a simple pairwise collision.
    n = g.shape[0]
    unit = []
    for i in range(n):
        norm = np.linalg.norm(g[i])
        unit.append(g[i] / norm if norm > 0 else g[i])
    involved: set[int] = set()
    for i in range(n):
        for j in range(i + 1, n):
            if abs(np.vdot(unit[i], unit[j])) > 0.999:
                involved.update((i, j))
    if not involved:
        involved = {k}
    return sorted(involved)


def zf_digital(effective: np.ndarray) -> np.ndarray:
    """Zero-forcing digital precoder; column ``k`` is orthogonal to every
    other user's effective channel.

    Each column is the unit-norm projection of ``g_k`` onto the complement of
    the other users' effective channels.  Raises :class:`RankDeficientError`
    when the interferers are dependent or ``g_k`` lies in their span.
    """
    g = np.asarray(effective)
    k_users = g.shape[0]
    if g.shape != (k_users, k_users):
        raise ValueError(f"effective matrix must be square, got {g.shape}")
    cols = np.empty((k_users, k_users), dtype=complex)
    for k in range(k_users):
        gk = g[k].conj()
        others = [i for i in range(k_users) if i != k]
        if not others:
            norm = np.linalg.norm(gk)
            if norm == 0:
                raise RankDeficientError((k,), f"user {k} has a zero effective channel")
            cols[:, 0] = gk / norm
            continue
        a = g[others].conj().T  # columns are the interferers' g_i
        gram = a.conj().T @ a
        if np.linalg.cond(gram) > CONDITION_LIMIT:
            raise RankDeficientError(_colliding_users(g, k))
        f = gk - a @ np.linalg.solve(gram, a.conj().T @ gk)
        norm = np.linalg.norm(f)
        if norm < 1e-12 * np.linalg.norm(gk):
            raise RankDeficientError(_colliding_users(g, k))
        cols[:, k] = f / norm
    return cols


def mmse_digital(
    effective: np.ndarray, tx_power_w: float, noise_power_w: float
) -> np.ndarray:
    """MMSE digital precoder: ``B_k^-1 g_k`` normalized, with
    ``B_k = I + P/(K*noise) * sum_{i != k} g_i g_i^H``."""
    g = np.asarray(effective)
    k_users = g.shape[0]
    scale = tx_power_w / (k_users * noise_power_w)
    cols = np.empty((k_users, k_users), dtype=complex)
    for k in range(k_users):
        b = np.eye(k_users, dtype=complex)
        for i in range(k_users):
            if i != k:
                gi = g[i].conj()[:, None]
                b += scale * (gi @ gi.conj().T)
        f = np.linalg.solve(b, g[k].conj())
        cols[:, k] = f / np.linalg.norm(f)
    return cols


@dataclass
class HybridBeamformer:
    """Analog + digital cascade with per-user transmit normalization."""

    analog: np.ndarray
    digital: np.ndarray

    def __post_init__(self) -> None:
        self.analog = np.asarray(self.analog)
        tx = self.analog @ np.asarray(self.digital)
        norms = np.linalg.norm(tx, axis=0)
        if np.any(norms == 0):
            raise ValueError("a hybrid column has zero norm")
        self.digital = np.asarray(self.digital) / norms

    @property
    def n_users(self) -> int:
        return self.digital.shape[1]

    def tx_matrix(self) -> np.ndarray:
        """Per-user transmit vectors ``F_rf @ F_bb`` (columns, unit norm)."""
        return self.analog @ self.digital


def user_rate(
    k: int,
    channels: Sequence[np.ndarray],
    beamformer: HybridBeamformer,
    tx_power_w: float,
    noise_power_w: float,
) -> float:
    """Achievable rate of user ``k`` in bps/Hz under equal power split."""
    tx = beamformer.tx_matrix()
    k_users = beamformer.n_users
    per_user = tx_power_w / k_users
    proj = np.abs(np.asarray(channels[k]).conj() @ tx) ** 2
    signal = per_user * proj[k]
    interference = per_user * (proj.sum() - proj[k])
    return float(np.log2(1.0 + signal / (interference + noise_power_w)))


def sum_rate(
    channels: Sequence[np.ndarray],
    beamformer: HybridBeamformer,
    tx_power_w: float,
    noise_power_w: float,
) -> float:
    """Sum of per-user rates in bps/Hz."""
    return sum(
        user_rate(k, channels, beamformer, tx_power_w, noise_power_w)
        for k in range(beamformer.n_users)
    )


def effective_rate(
    rate: float, pilots_used: int, symbol_time_s: float, frame_time_s: float
) -> float:
    """Rate discounted by the pilot share of the frame, clamped at zero."""
    if frame_time_s <= 0:
        raise ValueError("frame time must be positive")
    factor = 1.0 - pilots_used * symbol_time_s / frame_time_s
    if factor < 0:
        warnings.warn(
            f"training ({pilots_used} pilots) exceeds the frame; "
            "effective rate clamped to zero",
            stacklevel=2,
        )
        return 0.0
    return factor * rate
