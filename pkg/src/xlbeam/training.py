"""Beam-training schemes over noisy pilot measurements.

Every scheme sweeps codewords, measures received pilot power at the user and
returns a :class:`TrainingOutcome` holding the selected grid point (when the
scheme estimates one), the pilot count charged by its overhead formula, and
the unit-norm analog beamformer to use for data transmission afterwards.

Schemes never mix sparse and dense measurements in one comparison: sparse
codewords radiate from fewer elements and carry correspondingly less power,
so phase-1 decisions compare sparse codewords among themselves and phase-2
decisions dense ones.  Argmax ties always break toward the earliest codeword
in sweep order, which makes every scheme deterministic given its RNG stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import dft as _dft_matrix

from .geometry import ArrayConfig, PolarPoint, rayleigh_distance
from .channel import ChannelParams, ChannelRealization
from .codebook import (
    Codeword,
    DftCodebook,
    PolarCodebook,
    build_array_division_codeword,
    dft_codeword,
)
from .beamforming import phase_beamformer


@dataclass(frozen=True)
class MeasurementModel:
    """Pilot measurement parameters: powers in watts plus a noiseless switch."""

    tx_power_w: float
    noise_power_w: float
    noiseless: bool = False

    def __post_init__(self) -> None:
        if self.tx_power_w < 0 or self.noise_power_w < 0:
            raise ValueError("powers must be non-negative")

    @classmethod
    def from_params(cls, params: ChannelParams, noiseless: bool = False) -> "MeasurementModel":
        return cls(params.tx_power_w, params.noise_power_w, noiseless)


@dataclass
class TrainingOutcome:
    """Result of one training run for one user."""

    scheme: str
    selected: tuple[int, int] | None
    estimate: PolarPoint | None
    pilots_used: int
    beamformer: np.ndarray
    phase_trace: list[tuple[str, float]] = field(default_factory=list)


def aperture_scale(n_antennas: int, support_size: int) -> float:
    """Pilot amplitude factor ``sqrt(N / |support|)`` for partial activation.

    Training pilots are normalized to the full-aperture response: a codeword
    radiating from ``|support|`` elements is driven with per-element pilot
    power raised by ``N/|support|`` over its data-transmission normalization,
    so a matched sparse codeword is received at the same amplitude as a
    matched dense one.  Dense codewords are unaffected.
    """
    return math.sqrt(n_antennas / support_size)


def measure(
    channel: ChannelRealization,
    codeword: Codeword | np.ndarray,
    model: MeasurementModel,
    rng: np.random.Generator,
) -> complex:
    """One received pilot sample ``h^H w x + z`` with ``x = sqrt(tx_power)``.

    ``x`` carries the :func:`aperture_scale` pilot normalization when the
    codeword has deactivated elements.
    """
    w = np.asarray(getattr(codeword, "weights", codeword))
    if w.shape[0] != channel.h.shape[0]:
        raise ValueError("codeword length does not match channel length")
    support = getattr(codeword, "support", None)
    n_active = len(support) if support is not None else int(np.count_nonzero(w))
    x = math.sqrt(model.tx_power_w) * aperture_scale(w.shape[0], n_active)
    y = np.vdot(channel.h, w) * x
    if not model.noiseless and model.noise_power_w > 0:
        g = rng.standard_normal(2)
        y = y + math.sqrt(model.noise_power_w / 2.0) * complex(g[0], g[1])
    return complex(y)


def _sweep_powers(
    h: np.ndarray,
    weights: np.ndarray,
    model: MeasurementModel,
    rng: np.random.Generator,
    scale: float = 1.0,
) -> np.ndarray:
    """Received powers of a whole codeword sweep (one noise draw per pilot)."""
    y = (h.conj() @ weights) * (math.sqrt(model.tx_power_w) * scale)
    if not model.noiseless and model.noise_power_w > 0:
        g = rng.standard_normal((2, y.shape[0]))
        y = y + math.sqrt(model.noise_power_w / 2.0) * (g[0] + 1j * g[1])
    return np.abs(y) ** 2


def replica_offsets(book: PolarCodebook, s: int) -> list[int]:
    """Replica offsets ``m`` keeping ``s + m*Q`` on the angle grid."""
    q, m_int = book.act.active_count, book.act.interval
    qm = q * m_int
    return [m for m in range(-(m_int - 1), m_int) if 1 <= s + m * q <= qm]


def run_proposed_multibeam(
    channel: ChannelRealization,
    multi_book: PolarCodebook,
    single_book: PolarCodebook,
    model: MeasurementModel,
    rng: np.random.Generator,
    multipath_threshold: float | None = None,
    keep_trace: bool = True,
) -> TrainingOutcome:
    """Two-stage training: sparse multi-beam sector sweep, then replica sweep.

    Stage 1 sweeps the ``Q*V`` sparse codewords and picks the strongest
    ``(g, v)``; its grating lobes mark the candidate locations.  Stage 2
    sweeps the dense single-beam codewords at the candidate grid points
    ``(g + m*Q, v)`` and picks the strongest.  With ``multipath_threshold``
    set, every stage-1 codeword within that fraction of the stage-1 maximum
    spawns its own stage-2 sweep (for channels with comparable multi-path
    components) and the final choice is the strongest stage-2 measurement
    overall.
    """
    if multi_book.act != single_book.act:
        raise ValueError("multi- and single-beam books must share one activation")
    trace: list[tuple[str, float]] = []

    scale1 = aperture_scale(channel.h.shape[0], multi_book.act.active_count)
    p1 = _sweep_powers(channel.h, multi_book.weights_matrix(), model, rng, scale1)
    if keep_trace:
        trace.extend(
            (f"multi:s={s},v={v}", float(p))
            for (s, v), p in zip(multi_book.indices(), p1)
        )
    if multipath_threshold is None:
        stage1_hits = [int(np.argmax(p1))]
    else:
        if not 0 < multipath_threshold <= 1:
            raise ValueError("multipath_threshold must be in (0, 1]")
        cut = multipath_threshold * float(np.max(p1))
        stage1_hits = [int(i) for i in np.flatnonzero(p1 >= cut)]

    single_w = single_book.weights_matrix()
    best: tuple[float, int, int] | None = None
    n_stage2 = 0
    for flat in stage1_hits:
        g, v = multi_book.pair_at(flat)
        cand_s = [g + m * multi_book.act.active_count for m in replica_offsets(single_book, g)]
        cols = [single_book.flat_index(s, v) for s in cand_s]
        p2 = _sweep_powers(channel.h, single_w[:, cols], model, rng)
        n_stage2 += len(cols)
        for s, p in zip(cand_s, p2):
            if keep_trace:
                trace.append((f"single:s={s},v={v}", float(p)))
            if best is None or p > best[0]:
                best = (float(p), s, v)

    assert best is not None
    _, s_star, v_star = best
    cw = single_book.codeword(s_star, v_star)
    return TrainingOutcome(
        scheme="proposed",
        selected=(s_star, v_star),
        estimate=cw.steer,
        pilots_used=multi_book.size + n_stage2,
        beamformer=cw.weights,
        phase_trace=trace,
    )


def run_exhaustive(
    channel: ChannelRealization,
    single_book: PolarCodebook,
    model: MeasurementModel,
    rng: np.random.Generator,
    keep_trace: bool = True,
) -> TrainingOutcome:
    """Exhaustive sweep of the full single-beam book (``QMV`` pilots)."""
    p = _sweep_powers(channel.h, single_book.weights_matrix(), model, rng)
    flat = int(np.argmax(p))
    s, v = single_book.pair_at(flat)
    cw = single_book.codeword(s, v)
    trace = (
        [(f"single:s={si},v={vi}", float(pi)) for (si, vi), pi in zip(single_book.indices(), p)]
        if keep_trace
        else []
    )
    return TrainingOutcome(
        scheme="exhaustive",
        selected=(s, v),
        estimate=cw.steer,
        pilots_used=single_book.size,
        beamformer=cw.weights,
        phase_trace=trace,
    )


def run_two_phase(
    channel: ChannelRealization,
    dft_book: DftCodebook,
    single_book: PolarCodebook,
    n_candidates: int,
    model: MeasurementModel,
    rng: np.random.Generator,
    keep_trace: bool = True,
) -> TrainingOutcome:
    """Angle-then-range training: DFT sweep, then ranges at the top angles.

    Keeps the ``n_candidates`` strongest DFT angles, then sweeps the ``V``
    range samples of each candidate angle with dense codewords; the overall
    stage-2 argmax wins.  The DFT grid must coincide with the polar book's
    angle grid so candidate indices carry over directly.
    """
    qm = single_book.act.active_count * single_book.act.interval
    if len(dft_book) != qm:
        raise ValueError(
            f"DFT grid size {len(dft_book)} must match the polar angle grid {qm}"
        )
    trace: list[tuple[str, float]] = []
    p1 = _sweep_powers(channel.h, dft_book.weights_matrix(), model, rng)
    if keep_trace:
        trace.extend((f"dft:s={i + 1}", float(p)) for i, p in enumerate(p1))
    top = np.argsort(-p1, kind="stable")[:n_candidates]

    single_w = single_book.weights_matrix()
    best: tuple[float, int, int] | None = None
    for idx in top:
        s = int(idx) + 1
        cols = [single_book.flat_index(s, v) for v in range(1, single_book.n_ranges + 1)]
        p2 = _sweep_powers(channel.h, single_w[:, cols], model, rng)
        for v, p in zip(range(1, single_book.n_ranges + 1), p2):
            if keep_trace:
                trace.append((f"single:s={s},v={v}", float(p)))
            if best is None or p > best[0]:
                best = (float(p), s, v)

    assert best is not None
    _, s_star, v_star = best
    cw = single_book.codeword(s_star, v_star)
    return TrainingOutcome(
        scheme="two-phase",
        selected=(s_star, v_star),
        estimate=cw.steer,
        pilots_used=len(dft_book) + n_candidates * single_book.n_ranges,
        beamformer=cw.weights,
        phase_trace=trace,
    )


def run_farfield_dft(
    channel: ChannelRealization,
    dft_book: DftCodebook,
    model: MeasurementModel,
    rng: np.random.Generator,
    keep_trace: bool = True,
) -> TrainingOutcome:
    """Single far-field DFT sweep; angle-only estimate."""
    p = _sweep_powers(channel.h, dft_book.weights_matrix(), model, rng)
    i = int(np.argmax(p))
    theta = float(dft_book.thetas[i])
    trace = [(f"dft:s={j + 1}", float(pj)) for j, pj in enumerate(p)] if keep_trace else []
    return TrainingOutcome(
        scheme="dft",
        selected=(i + 1, 0),
        estimate=PolarPoint(rayleigh_distance(dft_book.cfg), theta),
        pilots_used=len(dft_book),
        beamformer=dft_book[i].weights,
        phase_trace=trace,
    )


def subarray_pilot_count(n_antennas: int, n_subarrays: int) -> int:
    """Pilot budget of the array-division scheme, ``(N'/m)*(1 + log2(m)/2)``."""
    n_used = n_antennas - (n_antennas % n_subarrays)
    rounds2 = math.log2(n_subarrays)
    if rounds2 % 2 != 0:
        raise ValueError(
            f"n_subarrays must be a power of 4 (or 1), got {n_subarrays}"
        )
    return int(round(n_used / n_subarrays * (1 + rounds2 / 2)))


def run_subarray_multibeam(
    channel: ChannelRealization,
    n_subarrays: int,
    cfg: ArrayConfig,
    model: MeasurementModel,
    rng: np.random.Generator,
    keep_trace: bool = True,
) -> TrainingOutcome:
    """Far-field array-division training with cross-validation rounds.

    The angle grid has one bin per used element.  The main sweep sends
    equal-interval multi-arm codewords (arm set ``{t + i*R}``, arms spaced
    ``2/m`` apart); the winner leaves ``m`` candidate angles, one per arm.
    Each extra round re-groups the grid into blocks of ``m`` adjacent angles,
    which places the candidates into distinct codewords, and candidates are
    scored by their block codeword's received power.  Angle-only: the range
    is reported at the far-field boundary and the returned beamformer is the
    plain far-field steering vector at the winning angle.
    """
    if n_subarrays < 1:
        raise ValueError("n_subarrays must be >= 1")
    pilots = subarray_pilot_count(cfg.n_antennas, n_subarrays)  # validates count
    n_used = cfg.n_antennas - (cfg.n_antennas % n_subarrays)
    n_arm_sets = n_used // n_subarrays
    s_grid = np.arange(1, n_used + 1)
    thetas = (2.0 * s_grid - n_used - 1.0) / n_used
    trace: list[tuple[str, float]] = []

    def arm_codeword(angle_idx: list[int]) -> np.ndarray:
        return build_array_division_codeword(
            [float(thetas[j]) for j in angle_idx], n_subarrays, cfg
        ).weights

    scale = aperture_scale(cfg.n_antennas, n_used)
    sweep1 = np.empty((cfg.n_antennas, n_arm_sets), dtype=complex)
    for t in range(n_arm_sets):
        sweep1[:, t] = arm_codeword([t + i * n_arm_sets for i in range(n_subarrays)])
    p1 = _sweep_powers(channel.h, sweep1, model, rng, scale)
    if keep_trace:
        trace.extend((f"arms:t={t}", float(p)) for t, p in enumerate(p1))
    t_hat = int(np.argmax(p1))
    candidates = [t_hat + i * n_arm_sets for i in range(n_subarrays)]

    n_rounds = int(math.log2(n_subarrays) / 2) if n_subarrays > 1 else 0
    scores = np.zeros(len(candidates))
    for rnd in range(n_rounds):
        blocks = np.empty((cfg.n_antennas, n_arm_sets), dtype=complex)
        for u in range(n_arm_sets):
            base = ((u + rnd) % n_arm_sets) * n_subarrays
            blocks[:, u] = arm_codeword(list(range(base, base + n_subarrays)))
        p_rnd = _sweep_powers(channel.h, blocks, model, rng, scale)
        if keep_trace:
            trace.extend((f"round{rnd}:u={u}", float(p)) for u, p in enumerate(p_rnd))
        for ci, j in enumerate(candidates):
            u = (j // n_subarrays - rnd) % n_arm_sets
            scores[ci] += p_rnd[u]

    best_ci = int(np.argmax(scores)) if n_rounds > 0 else 0
    j_star = candidates[best_ci]
    theta_star = float(thetas[j_star])
    return TrainingOutcome(
        scheme="subarray",
        selected=(j_star + 1, 0),
        estimate=PolarPoint(rayleigh_distance(cfg), theta_star),
        pilots_used=pilots,
        beamformer=dft_codeword(theta_star, cfg).weights,
        phase_trace=trace,
    )


def run_ls_estimation(
    channel: ChannelRealization,
    model: MeasurementModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Least-squares channel estimate from ``N`` orthogonal downlink pilots.

    The pilot beams form a unitary (normalized DFT) matrix, each sent at the
    full transmit power; the estimate inverts it exactly, so the noiseless
    estimate equals the channel and the estimation MSE is ``N * noise / tx``.
    """
    n = channel.h.shape[0]
    u = _dft_matrix(n) / math.sqrt(n)
    x = math.sqrt(model.tx_power_w)
    y = (channel.h.conj() @ u) * x
    if not model.noiseless and model.noise_power_w > 0:
        g = rng.standard_normal((2, n))
        y = y + math.sqrt(model.noise_power_w / 2.0) * (g[0] + 1j * g[1])
    return u @ y.conj() / x


def run_ls_training(
    channel: ChannelRealization,
    model: MeasurementModel,
    rng: np.random.Generator,
) -> TrainingOutcome:
    """LS estimation wrapped as a training outcome.

    The analog beamformer is the element-wise phase conjugate of the channel
    estimate (the power-maximizing unit-modulus vector for that estimate).
    """
    h_hat = run_ls_estimation(channel, model, rng)
    return TrainingOutcome(
        scheme="ls",
        selected=None,
        estimate=None,
        pilots_used=channel.h.shape[0],
        beamformer=phase_beamformer(h_hat),
        phase_trace=[],
    )


@dataclass(frozen=True)
class ActivationPlan:
    """Outcome of the activation-interval overhead optimization."""

    m_continuous: float
    m_threshold: float
    m_selected: int | None
    objective: float | None
    pilots: int | None
    feasible: tuple[tuple[int, int], ...]
    minimizers: tuple[int, ...]

    @property
    def tied(self) -> bool:
        return len(self.minimizers) > 1


def _objective(n_antennas: int, n_ranges: int, n_users: int, m: float) -> float:
    return (n_antennas - 1) * n_ranges / m + n_users * m


def optimize_activation(
    n_antennas: int,
    n_ranges: int,
    n_users: int,
    enforce_threshold: bool = True,
    integer_feasible: bool = True,
) -> ActivationPlan:
    """Minimize training overhead ``(N-1)V/M + KM`` over the interval ``M``.

    The continuous optimum is ``min(sqrt(1.2(N-1)), sqrt((N-1)V/K))``; the
    feasible set holds the divisors of ``N-1`` (so the active count is an
    integer) at or below the abnormal-ring threshold.  With
    ``integer_feasible`` the feasible interval nearest the continuous optimum
    is selected, ties breaking toward the smaller interval; ``minimizers``
    lists every feasible interval attaining the minimum objective, making
    objective ties visible to the caller.
    """
    if n_antennas < 3 or n_antennas % 2 == 0:
        raise ValueError(f"n_antennas must be an odd integer >= 3, got {n_antennas}")
    if n_ranges < 1 or n_users < 1:
        raise ValueError("n_ranges and n_users must be >= 1")
    span = n_antennas - 1
    m_th = math.sqrt(1.2 * span)
    m_star = math.sqrt(span * n_ranges / n_users)
    m_cont = min(m_th, m_star) if enforce_threshold else m_star

    feasible = [m for m in range(1, span + 1) if span % m == 0]
    if enforce_threshold:
        feasible = [m for m in feasible if m <= m_th]
    if not feasible:
        raise ValueError(
            f"no feasible activation interval divides N-1={span} below the "
            f"threshold {m_th:.2f}"
        )
    table = tuple(
        (m, int(round(_objective(n_antennas, n_ranges, n_users, m)))) for m in feasible
    )
    best_obj = min(f for _, f in table)
    minimizers = tuple(m for m, f in table if f == best_obj)

    if not integer_feasible:
        return ActivationPlan(
            m_continuous=m_cont,
            m_threshold=m_th,
            m_selected=None,
            objective=None,
            pilots=None,
            feasible=table,
            minimizers=minimizers,
        )

    m_sel = min(feasible, key=lambda m: (abs(m_cont - m), m))
    q = span // m_sel + 1
    return ActivationPlan(
        m_continuous=m_cont,
        m_threshold=m_th,
        m_selected=m_sel,
        objective=float(_objective(n_antennas, n_ranges, n_users, m_sel)),
        pilots=q * n_ranges + n_users * m_sel,
        feasible=table,
        minimizers=minimizers,
    )
