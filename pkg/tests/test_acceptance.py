"""Acceptance suite: one test per ship criterion, each printing a verdict.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines; the whole suite is sized to finish well inside ten minutes.
"""

import math
import time

import numpy as np
import pytest

from xlbeam.geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    fresnel_distance,
    rayleigh_distance,
)
from xlbeam.channel import ChannelParams, sample_channel, sla_steering, substream
from xlbeam.beampattern import (
    RingType,
    abnormal_ring_pattern,
    abnormal_rings,
    m_threshold,
    pattern,
    ring_matched_range,
    sla_pattern_closed_form,
)
from xlbeam.codebook import (
    build_multi_beam_codebook,
    build_single_beam_codebook,
    sparse_codeword,
)
from xlbeam.training import (
    MeasurementModel,
    optimize_activation,
    run_exhaustive,
    run_proposed_multibeam,
)
from xlbeam.beamforming import HybridBeamformer, effective_rate, zf_digital
from xlbeam.simulate import SimulationConfig, run_scenario


def report(number: int, name: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    print(f"[acceptance] criterion {number:02d} {verdict}: {name}"
          + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {number}: {name} {detail}"


def test_criterion_01_field_boundaries():
    cfg = ArrayConfig(257, 30e9)
    zr = rayleigh_distance(cfg)
    zf = fresnel_distance(cfg)
    ok = zr == pytest.approx(327.68, rel=1e-12) and zf == pytest.approx(1.536, rel=1e-12)
    report(1, "field boundaries", ok, f"Z_R={zr}, Z_F={zf}")


def test_criterion_02_closed_form_vs_direct_sum():
    t0 = time.time()
    rng = np.random.default_rng(2024)
    configs = []
    for n in (65, 129, 257, 321, 513):
        cfg = ArrayConfig(n, 30e9)
        cap = m_threshold(cfg)
        ms = [m for m in range(1, n) if (n - 1) % m == 0 and m <= cap]
        configs.append((cfg, [SparseActivation.for_array(cfg, m) for m in ms]))
    worst = 0.0
    n_tuples = 10000
    for _ in range(n_tuples):
        cfg, acts = configs[rng.integers(len(configs))]
        act = acts[rng.integers(len(acts))]
        steer = PolarPoint(rng.uniform(2.0, 200.0), rng.uniform(-0.99, 0.99))
        obs = PolarPoint(rng.uniform(2.0, 200.0), rng.uniform(-0.99, 0.99))
        direct = abs(np.vdot(sla_steering(obs, act, cfg), sla_steering(steer, act, cfg)))
        closed = sla_pattern_closed_form(obs, steer, act, cfg)
        worst = max(worst, abs(direct - closed))

    # Dirichlet-sinc reductions on abnormal rings, all four residue classes
    worst_ring = 0.0
    cases = [
        (ArrayConfig(321, 30e9), 40, PolarPoint(10.0, 0.0)),   # Q = 9
        (ArrayConfig(257, 30e9), 64, PolarPoint(10.0, 0.0)),   # Q = 5
    ]
    classes_seen = set()
    for cfg, m, steer in cases:
        act = SparseActivation.for_array(cfg, m)
        for ring, _ in abnormal_rings(steer, act, cfg):
            classes_seen.add(ring.alpha % 4)
            for d_nf in np.linspace(-0.03, 0.03, 41):
                theta = steer.angle + d_nf
                obs = PolarPoint(ring.range_at(theta), theta)
                direct = sla_pattern_closed_form(obs, steer, act, cfg)
                closed = abnormal_ring_pattern(ring.alpha, m * d_nf, act.active_count)
                worst_ring = max(worst_ring, abs(direct - closed))
    elapsed = time.time() - t0
    ok = (
        worst <= 1e-9
        and worst_ring <= 1e-9
        and classes_seen == {0, 1, 2, 3}
        and elapsed < 60
    )
    report(2, "closed form vs direct summation", ok,
           f"{n_tuples} tuples, worst {worst:.2e}, rings worst {worst_ring:.2e}, "
           f"classes {sorted(classes_seen)}, {elapsed:.1f}s")


def test_criterion_03_grating_lobe_geometry():
    cfg = ArrayConfig(257, 30e9)
    act = SparseActivation.for_array(cfg, 16)
    steer = PolarPoint(10.0, 0.2)
    cw = sparse_codeword(steer, act, cfg)
    qm = 272
    step = 1.0 / (10 * qm)
    thetas = np.arange(-1.0 + step, 1.0, step)
    vals = np.array([
        pattern(PolarPoint(ring_matched_range(steer, t), t), cw, cfg) for t in thetas
    ])
    peaks = [
        thetas[i]
        for i in range(1, len(thetas) - 1)
        if vals[i] > 0.9 and vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]
    ]
    predicted = [
        (steer.angle + 2 * m / 16, ring_matched_range(steer, steer.angle + 2 * m / 16))
        for m in range(-15, 16)
        if -1 <= steer.angle + 2 * m / 16 <= 1
    ]
    ok = len(peaks) == 16 and len(predicted) == 16
    worst_theta = 0.0
    worst_r = 0.0
    for (theta_m, r_m), theta_hat in zip(predicted, peaks):
        worst_theta = max(worst_theta, abs(theta_hat - theta_m))
        rr = np.linspace(0.9 * r_m, 1.1 * r_m, 401)
        rv = [pattern(PolarPoint(r, theta_m), cw, cfg) for r in rr]
        r_hat = rr[int(np.argmax(rv))]
        worst_r = max(worst_r, abs(r_hat - r_m) / r_m)
    ok = ok and worst_theta <= step / 2 + 1e-12 and worst_r <= 0.01
    report(3, "grating-lobe geometry", ok,
           f"{len(peaks)} lobes, max angle err {worst_theta:.2e} "
           f"(half step {step/2:.2e}), max range err {worst_r*100:.3f}%")


def test_criterion_04_abnormal_ring_onset():
    cfg_bad = ArrayConfig(321, 30e9)
    act_bad = SparseActivation.for_array(cfg_bad, 40)
    steer = PolarPoint(10.0, 0.0)
    rings = abnormal_rings(steer, act_bad, cfg_bad)
    type3 = [r for r, t in rings if t is RingType.TYPE_III]
    ok = len(type3) > 0
    worst = 0.0
    for ring in type3:
        for gamma in (1, -1, 3):
            theta = steer.angle + gamma / 40
            obs = PolarPoint(ring.range_at(theta), theta)
            val = sla_pattern_closed_form(obs, steer, act_bad, cfg_bad)
            worst = max(worst, abs(val - math.sqrt(2) / 2))
    ok = ok and worst <= 0.02

    cfg_ok = ArrayConfig(257, 30e9)
    act_ok = SparseActivation.for_array(cfg_ok, 16)
    clean = abnormal_rings(PolarPoint(10.0, 0.2), act_ok, cfg_ok) == []
    ok = ok and clean
    report(4, "abnormal-ring onset", ok,
           f"{len(type3)} type-III rings at (321, 40), |value - 0.7071| <= {worst:.4f}, "
           f"clean at (257, 16): {clean}")


def test_criterion_05_noiseless_oracle_equivalence():
    cfg = ArrayConfig(257, 30e9)
    act = SparseActivation.for_array(cfg, 16)
    params = ChannelParams(
        rician_factor_db=30.0, n_nlos=0, ref_gain_db=-62.0,
        noise_power_dbm=-70.0, tx_power_dbm=30.0,
    )
    model = MeasurementModel.from_params(params, noiseless=True)
    single = build_single_beam_codebook(act, 4, cfg)
    multi = build_multi_beam_codebook(act, 4, cfg)
    rng = np.random.default_rng(500)
    matches = 0
    pilots = set()
    for t in range(500):
        s = int(rng.integers(1, 273))
        v = int(rng.integers(1, 5))
        ch = sample_channel(single.steer(s, v), params, cfg, substream(1, t))
        o1 = run_proposed_multibeam(ch, multi, single, model, substream(2, t), keep_trace=False)
        o2 = run_exhaustive(ch, single, model, substream(3, t), keep_trace=False)
        matches += o1.selected == o2.selected == (s, v)
        pilots.add((o1.pilots_used, o2.pilots_used))
    ok = matches == 500 and pilots == {(84, 1088)}
    report(5, "noiseless oracle equivalence", ok,
           f"{matches}/500 identical selections, pilots {sorted(pilots)}")


def test_criterion_06_overhead_optimizer():
    plan = optimize_activation(257, 4, 8)
    feas = [m for m in range(1, 257) if 256 % m == 0 and m <= plan.m_threshold]
    objective = {m: 256 * 4 / m + 8 * m for m in feas}
    brute_best = min(objective.values())
    brute_set = {m for m, f in objective.items() if f == brute_best}
    ok = (
        plan.m_continuous == pytest.approx(math.sqrt(128), rel=1e-12)
        and set(plan.minimizers) == {8, 16} == brute_set
        and plan.objective == 192 == brute_best
    )
    report(6, "overhead optimizer", ok,
           f"M*={plan.m_continuous:.4f}, tie F(8)=F(16)={plan.objective}, "
           f"brute-force minimum {brute_best} at {sorted(brute_set)}")


def test_criterion_07_zf_property_suite():
    rng = np.random.default_rng(7)
    worst_leak = 0.0
    worst_norm = 0.0
    analog = np.eye(4, dtype=complex)
    for _ in range(1000):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        f = zf_digital(g)
        bf = HybridBeamformer(analog, f)
        tx = bf.tx_matrix()
        for k in range(4):
            worst_norm = max(worst_norm, abs(np.linalg.norm(tx[:, k]) - 1.0))
            for i in range(4):
                if i != k:
                    worst_leak = max(worst_leak, abs(g[i] @ f[:, k]))
    ok = worst_leak <= 1e-9 and worst_norm <= 1e-12
    report(7, "zero-forcing property suite", ok,
           f"1000 instances, worst leakage {worst_leak:.2e}, worst norm error {worst_norm:.2e}")


def test_criterion_08_rate_comparison_high_snr():
    t0 = time.time()
    cfg = SimulationConfig(
        scenario="acceptance-8",
        trials=200,
        seed=11,
        schemes=("proposed", "exhaustive", "dft", "subarray"),
        sweep_var="snr_db",
        sweep_values=(30.0, 35.0, 40.0),
    )
    rows = {(r["sweep_value"], r["scheme"]): r["mean_rate_bps_hz"] for r in run_scenario(cfg)}
    ok = True
    details = []
    for snr in (30.0, 35.0, 40.0):
        prop = rows[(snr, "proposed")]
        exh = rows[(snr, "exhaustive")]
        gap = abs(exh - prop) / exh
        ok = ok and gap <= 0.03
        ok = ok and prop > rows[(snr, "dft")] and prop > rows[(snr, "subarray")]
        details.append(f"snr {snr:g}: gap {gap*100:.2f}%")
    elapsed = time.time() - t0
    ok = ok and elapsed < 600
    report(8, "high-SNR rate comparison", ok, ", ".join(details) + f", {elapsed:.0f}s")


def test_criterion_09_activation_interval_degradation():
    cfg = SimulationConfig(
        scenario="acceptance-9",
        trials=200,
        seed=5,
        schemes=("proposed",),
        sweep_var="m",
        sweep_values=(8, 16, 32, 64, 128),
        range_range=(10.0, 10.0),
        snr_db=15.0,
    )
    rows = {r["m"]: r["mean_rate_bps_hz"] for r in run_scenario(cfg)}
    base = rows[16]
    drop64 = (base - rows[64]) / base
    drop128 = (base - rows[128]) / base
    ok = drop64 >= 0.20 and drop128 >= 0.20
    report(9, "activation-interval degradation", ok,
           f"drop at M=64: {drop64*100:.1f}%, at M=128: {drop128*100:.1f}%")


def test_criterion_10_effective_rate_accounting():
    symbol, frame = 0.1e-6, 0.2e-3
    ok = True
    for k in range(1, 9):
        pilots_prop = 17 * 4 + k * 16
        factor_prop = effective_rate(1.0, pilots_prop, symbol, frame)
        factor_exh = effective_rate(1.0, 1088, symbol, frame)
        ok = ok and factor_prop > factor_exh
    exact_ok = (
        effective_rate(1.0, 196, symbol, frame) == pytest.approx(0.902, abs=1e-12)
        and effective_rate(1.0, 1088, symbol, frame) == pytest.approx(0.456, abs=1e-12)
    )
    ok = ok and exact_ok
    report(10, "effective-rate accounting", ok,
           "factors 0.902 (proposed, K=8) vs 0.456 (exhaustive); "
           "proposed above exhaustive for K=1..8")
