import dataclasses
import math

import numpy as np
import pytest

from xlbeam.geometry import ArrayConfig, PolarPoint, SparseActivation, storage_index
from xlbeam.channel import (
    ChannelParams,
    db_to_linear,
    dbm_to_watts,
    free_space_ref_gain_db,
    linear_to_db,
    los_gain,
    reference_snr,
    sample_channel,
    sla_steering,
    substream,
    tx_power_for_snr,
    ula_steering,
    watts_to_dbm,
)


class TestDbHelpers:
    def test_roundtrips(self):
        assert db_to_linear(linear_to_db(3.7)) == pytest.approx(3.7, rel=1e-12)
        assert watts_to_dbm(dbm_to_watts(17.0)) == pytest.approx(17.0, rel=1e-12)

    def test_reference_points(self):
        assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)
        assert dbm_to_watts(-70.0) == pytest.approx(1e-10, rel=1e-12)
        assert db_to_linear(-62.0) == pytest.approx(6.30957344e-7, rel=1e-8)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            linear_to_db(0.0)
        with pytest.raises(ValueError):
            watts_to_dbm(-1.0)


class TestUlaSteering:
    def test_center_entry_and_norm(self, cfg257):
        for p in (PolarPoint(10, 0.2), PolarPoint(3.3, -0.9), PolarPoint(250, 0.0)):
            b = ula_steering(p, cfg257)
            assert b[storage_index(0, 257)] == pytest.approx(1 / math.sqrt(257), rel=1e-12)
            assert np.linalg.norm(b) == pytest.approx(1.0, abs=1e-12)

    def test_self_coherence(self, cfg257):
        b = ula_steering(PolarPoint(10, 0.2), cfg257)
        assert abs(np.vdot(b, b)) == pytest.approx(1.0, abs=1e-12)

    def test_ring_null_at_first_dirichlet_zero(self, cfg257):
        # Points on one user ring separated by 2/N in angle are orthogonal.
        p = PolarPoint(10.0, 0.2)
        theta2 = 0.2 + 2.0 / 257
        r2 = 10.0 * (1 - theta2**2) / (1 - 0.04)
        b1 = ula_steering(p, cfg257)
        b2 = ula_steering(PolarPoint(r2, theta2), cfg257)
        # independent direct summation
        direct = sum(b1[i].conjugate() * b2[i] for i in range(257))
        assert abs(np.vdot(b1, b2)) < 1e-9
        assert abs(direct) == pytest.approx(abs(np.vdot(b1, b2)), abs=1e-12)


class TestSlaSteering:
    def test_degenerate_stride_matches_dense(self, cfg257):
        act1 = SparseActivation.for_array(cfg257, 1)
        p = PolarPoint(10.0, 0.2)
        dense = ula_steering(p, cfg257)
        sparse = sla_steering(p, act1, cfg257)
        ratio = sparse / dense
        assert np.allclose(ratio, ratio[0], atol=1e-12)
        assert abs(abs(ratio[0]) - 1.0) < 1e-12

    def test_norm_and_self_coherence(self, cfg257, act16):
        p = PolarPoint(10.0, 0.2)
        b = sla_steering(p, act16, cfg257)
        assert b.shape == (17,)
        assert np.linalg.norm(b) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(b, b)) == pytest.approx(1.0, abs=1e-12)


class TestLosGain:
    def test_high_rician_unit_reference(self, cfg257):
        params = ChannelParams(
            rician_factor_db=120.0, n_nlos=0, ref_gain_db=0.0,
            noise_power_dbm=-70.0, tx_power_dbm=30.0,
        )
        assert abs(los_gain(PolarPoint(1.0, 0.0), params, cfg257)) == pytest.approx(
            1.0, abs=1e-6
        )

    def test_default_magnitude(self, cfg257, params_default):
        beta = los_gain(PolarPoint(10.0, 0.2), params_default, cfg257)
        expect = math.sqrt(1000 / 1001) * 10 ** (-62 / 20) / 10.0
        assert abs(beta) == pytest.approx(expect, rel=1e-12)
        assert abs(beta) == pytest.approx(7.9393e-5, rel=1e-4)

    def test_phase_tracks_range(self, cfg257, params_default):
        beta = los_gain(PolarPoint(10.0, 0.2), params_default, cfg257)
        assert np.angle(beta) == pytest.approx(
            math.remainder(-2 * math.pi * 10.0 / 0.01, 2 * math.pi), abs=1e-9
        )

    def test_absorption_factor(self, cfg257, params_default):
        wet = dataclasses.replace(params_default, absorption_db_per_m=5.157e-4)
        p = PolarPoint(100.0, 0.0)
        ratio = abs(los_gain(p, wet, cfg257)) / abs(los_gain(p, params_default, cfg257))
        assert ratio == pytest.approx(10 ** (-0.5 * 5.157e-4 * 100 / 20), rel=1e-12)
        assert ratio == pytest.approx(0.99704, abs=1e-5)


class TestSampleChannel:
    def test_los_only(self, cfg257, params_los):
        user = PolarPoint(10.0, 0.2)
        ch = sample_channel(user, params_los, cfg257, 0)
        beta = los_gain(user, params_los, cfg257)
        expect = math.sqrt(257) * beta * ula_steering(user, cfg257)
        assert np.allclose(ch.h, expect, rtol=0, atol=1e-15)
        assert ch.nlos == ()

    def test_seed_determinism(self, cfg257, params_default):
        user = PolarPoint(10.0, 0.2)
        a = sample_channel(user, params_default, cfg257, 42)
        b = sample_channel(user, params_default, cfg257, 42)
        c = sample_channel(user, params_default, cfg257, 43)
        assert np.array_equal(a.h, b.h)
        assert not np.array_equal(a.h, c.h)

    def test_high_rician_matches_los(self, cfg257, params_default):
        params = dataclasses.replace(params_default, rician_factor_db=120.0)
        user = PolarPoint(10.0, 0.2)
        ch = sample_channel(user, params, cfg257, 1)
        beta = los_gain(user, params, cfg257)
        los = math.sqrt(257) * beta * ula_steering(user, cfg257)
        assert np.max(np.abs(ch.h - los) / np.abs(los)) < 1e-5

    def test_nlos_power_fraction(self, cfg257, params_default):
        # kappa = 30 dB puts 1e-3 of the LoS power into the scattered part.
        user = PolarPoint(10.0, 0.2)
        los = math.sqrt(257) * los_gain(user, params_default, cfg257) * ula_steering(
            user, cfg257
        )
        los_pow = np.sum(np.abs(los) ** 2)
        acc = 0.0
        n_draws = 10000
        for i in range(n_draws):
            ch = sample_channel(user, params_default, cfg257, substream(99, i))
            acc += np.sum(np.abs(ch.h - los) ** 2)
        ratio = acc / n_draws / los_pow
        assert ratio == pytest.approx(1e-3, rel=0.1)

    def test_scatterers_between_array_and_user(self, cfg257, params_default):
        user = PolarPoint(10.0, 0.2)
        for i in range(50):
            ch = sample_channel(user, params_default, cfg257, substream(7, i))
            for _, s in ch.nlos:
                assert 1.536 <= s.range_m <= 10.0
                assert -1.0 <= s.angle <= 1.0


class TestReferenceSnr:
    def test_default_value(self, cfg257, params_default):
        assert reference_snr(10.0, params_default, cfg257) == pytest.approx(42.0993, abs=1e-3)

    def test_range_square_law(self, cfg257, params_default):
        a = reference_snr(10.0, params_default, cfg257)
        b = reference_snr(20.0, params_default, cfg257)
        assert a - b == pytest.approx(20 * math.log10(2), abs=1e-9)

    def test_antenna_scaling(self, params_default):
        a = reference_snr(10.0, params_default, ArrayConfig(257, 30e9))
        b = reference_snr(10.0, params_default, ArrayConfig(1025, 30e9))
        # N -> ~4N is +6.02 dB apart from the 1025/1028 rounding
        assert b - a == pytest.approx(10 * math.log10(1025 / 257), abs=1e-9)

    def test_tx_power_inverse(self, cfg257, params_default):
        w = tx_power_for_snr(30.0, 10.0, params_default, cfg257)
        params = dataclasses.replace(params_default, tx_power_dbm=watts_to_dbm(w))
        assert reference_snr(10.0, params, cfg257) == pytest.approx(30.0, abs=1e-9)

    def test_rejects_bad_range(self, cfg257, params_default):
        with pytest.raises(ValueError):
            reference_snr(0.0, params_default, cfg257)


class TestFreeSpaceGain:
    def test_matches_default_at_mmwave(self, cfg257):
        assert free_space_ref_gain_db(cfg257) == pytest.approx(-62.0, abs=0.05)

    def test_thz_value(self):
        cfg = ArrayConfig(1025, 300e9)
        assert free_space_ref_gain_db(cfg) == pytest.approx(-81.98, abs=0.05)


class TestSubstream:
    def test_deterministic_and_order_free(self):
        a = substream(1, 2, 3).standard_normal(4)
        b = substream(1, 2, 3).standard_normal(4)
        c = substream(1, 3, 2).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestChannelParams:
    def test_rejects_negative_paths(self):
        with pytest.raises(ValueError):
            ChannelParams(
                rician_factor_db=30.0, n_nlos=-1, ref_gain_db=-62.0,
                noise_power_dbm=-70.0, tx_power_dbm=30.0,
            )
