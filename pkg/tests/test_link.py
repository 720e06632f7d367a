import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rislink.link import (QPSK_POINTS, Frame, UnequalizableFrame, demodulate_qpsk, equalize,
                          evm_report, mean_evm, modulate_qpsk, per_symbol_evm, pilot_sequence,
                          receive_frame, sinr_db)

R2 = np.sqrt(2.0)


class TestModem:
    @pytest.mark.parametrize("bits,point", [
        ((0, 0), (1 + 1j) / R2), ((0, 1), (-1 + 1j) / R2),
        ((1, 1), (-1 - 1j) / R2), ((1, 0), (1 - 1j) / R2)])
    def test_gray_map(self, bits, point):
        assert modulate_qpsk(bits)[0] == pytest.approx(point, abs=1e-15)

    def test_unit_energy(self):
        assert np.allclose(np.abs(QPSK_POINTS), 1.0, atol=1e-15)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            modulate_qpsk([1, 0, 1])

    @settings(max_examples=100)
    @given(st.lists(st.integers(0, 1), min_size=0, max_size=64).filter(lambda b: len(b) % 2 == 0))
    def test_round_trip(self, bits):
        out = demodulate_qpsk(modulate_qpsk(bits))
        assert list(np.asarray(out).ravel()) == bits

    def test_nearest_neighbour_oracle(self, rng):
        pts = rng.normal(size=1000) + 1j * rng.normal(size=1000)
        pts = pts[(pts.real != 0) & (pts.imag != 0)]
        nearest = np.argmin(np.abs(pts[:, None] - QPSK_POINTS[None, :]), axis=1)
        assert np.array_equal(modulate_qpsk(demodulate_qpsk(pts)), QPSK_POINTS[nearest])

    def test_pilots_cycle_all_points(self):
        p = pilot_sequence(16)
        assert p.size == 16
        assert np.array_equal(p[:4], QPSK_POINTS)
        assert np.array_equal(p[4:8], QPSK_POINTS)


class TestReceive:
    def test_noiseless_is_scaled_symbols(self, rng):
        frame = Frame.random(rng)
        y = receive_frame(frame, 0.3 - 0.7j, 0.5, 0.0, 0.0, seed=1)
        assert np.array_equal(y, (0.3 - 0.7j) * frame.symbols)

    def test_noise_variance(self, rng):
        bits = rng.integers(0, 2, size=2 * 100_000)
        frame = Frame.from_bits(bits)
        n0 = 0.3
        y = receive_frame(frame, 1.0, 0.0, 0.0, n0, seed=4)
        assert np.var(y - frame.symbols) == pytest.approx(n0, rel=0.02)

    def test_deterministic(self, rng):
        frame = Frame.random(rng)
        a = receive_frame(frame, 1 + 1j, 0.2j, 0.5, 0.1, seed=9)
        b = receive_frame(frame, 1 + 1j, 0.2j, 0.5, 0.1, seed=9)
        assert a.tobytes() == b.tobytes()

    def test_negative_power_rejected(self, rng):
        frame = Frame.random(rng)
        with pytest.raises(ValueError):
            receive_frame(frame, 1.0, 0.0, -1.0, 0.0, seed=0)
        with pytest.raises(ValueError):
            receive_frame(frame, 1.0, 0.0, 0.0, -1e-3, seed=0)


class TestEqualize:
    def test_noiseless_exact(self):
        pilots = pilot_sequence(16)
        h = 0.4 + 1.1j
        h_hat, eq = equalize(h * pilots, pilots, h * pilots[:3])
        assert abs(h_hat - h) < 1e-15
        assert np.allclose(eq, pilots[:3], atol=1e-15)

    def test_doubled_pilots_estimate_two(self):
        pilots = pilot_sequence(16)
        h_hat, eq = equalize(2 * pilots, pilots)
        assert h_hat == pytest.approx(2.0, abs=1e-15)
        assert eq is None

    def test_estimator_variance(self, rng):
        # LS variance of a scalar estimate is N0 / P for unit-energy pilots
        pilots = pilot_sequence(16)
        n0 = 0.1
        noise = np.sqrt(n0 / 2) * (rng.normal(size=(10_000, 16)) + 1j * rng.normal(size=(10_000, 16)))
        est = np.array([equalize(pilots + n, pilots)[0] for n in noise])
        assert np.var(est) == pytest.approx(n0 / 16, rel=0.10)

    def test_zero_estimate_raises(self):
        pilots = pilot_sequence(4)
        with pytest.raises(UnequalizableFrame):
            equalize(np.zeros(4), pilots)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            equalize(np.ones(3), pilot_sequence(4))


class TestEvm:
    def test_examples(self):
        ideal = (1 + 1j) / R2
        assert per_symbol_evm(ideal * 1.1, ideal) == pytest.approx(0.1, abs=1e-12)
        assert mean_evm([0.1, 0.1, 0.1]) == pytest.approx(0.1, abs=1e-15)
        assert mean_evm([0.0, 0.2]) == pytest.approx(0.14142136, abs=1e-8)

    def test_zero_ideal_rejected(self):
        with pytest.raises(ValueError):
            per_symbol_evm(1.0, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_evm([])

    @settings(max_examples=100)
    @given(st.lists(st.floats(0, 10), min_size=1, max_size=50))
    def test_rms_between_mean_and_max(self, sig):
        m = mean_evm(sig)
        assert np.mean(sig) - 1e-9 <= m <= max(sig) + 1e-9

    @settings(max_examples=50)
    @given(st.floats(0.01, 100), st.floats(-3, 3), st.floats(-3, 3))
    def test_scale_invariant(self, scale, re, im):
        ideal = QPSK_POINTS[1]
        rx = complex(re, im)
        assert per_symbol_evm(scale * rx, scale * ideal) == pytest.approx(per_symbol_evm(rx, ideal), rel=1e-12)

    def test_evm_tracks_sinr(self, rng):
        # known channel, no estimation error: mean EVM^2 = 1 / SINR
        bits = rng.integers(0, 2, size=2 * 200_000)
        frame = Frame.from_bits(bits)
        h, h_e, jam, n0 = 0.8 - 0.3j, 0.5j, 0.04, 0.01
        y = receive_frame(frame, h, h_e, jam, n0, seed=2)
        sig = per_symbol_evm(y[frame.n_pilots:] / h, frame.data_symbols)
        sinr = 10 ** (sinr_db(h, h_e, 1.0, jam, n0) / 10)
        assert mean_evm(sig) == pytest.approx(1 / np.sqrt(sinr), rel=0.03)

    def test_noiseless_barycenters(self, rng):
        frame = Frame.random(rng, n_data=400)
        rep = evm_report(frame.data_symbols, frame.data_bits)
        assert rep.mean_evm < 1e-12
        assert np.allclose(rep.quadrant_barycenters, QPSK_POINTS, atol=1e-12)
        assert rep.percent == 100 * rep.mean_evm


class TestSinr:
    def test_examples(self):
        assert sinr_db(1.0, 0.0, 1.0, 0.0, 0.1) == pytest.approx(10.0, abs=1e-12)
        assert sinr_db(1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            sinr_db(1.0, 0.0, 1.0, 1.0, 0.0)

    @settings(max_examples=50)
    @given(st.complex_numbers(max_magnitude=5, min_magnitude=0.01),
           st.complex_numbers(max_magnitude=5), st.floats(0.1, 10), st.floats(0, 10), st.floats(0.01, 1))
    def test_formula(self, h, h_e, s, j, n0):
        expected = 10 * np.log10(abs(h) ** 2 * s / (abs(h_e) ** 2 * j + n0))
        assert sinr_db(h, h_e, s, j, n0) == pytest.approx(expected, abs=1e-9)
