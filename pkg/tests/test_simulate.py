import math
from dataclasses import replace

import numpy as np
import pytest

from diffpulse.channel import ChannelParams, TimeGrid, binned_response, capture_cdf, impulse_response, peak_time
from diffpulse.errors import CoarseStepWarning, DomainError
from diffpulse.simulate import (
    LinkConfig,
    Pulse,
    WalkConfig,
    calibrate_noise,
    empirical_cdf,
    first_passage_sample,
    isi_tail_ratio,
    ks_critical_value,
    paired_error_test,
    simulate_link,
    single_pulse_response,
)

unit = ChannelParams(1.0, 1.0)
TM = peak_time(unit)
small = WalkConfig(n_walkers=3000, dt_walk=1e-3, t_end=20 * TM, seed=7)


class TestWalk:
    def test_deterministic(self):
        a = first_passage_sample(unit, small)
        b = first_passage_sample(unit, small)
        np.testing.assert_array_equal(a.hits, b.hits)
        c = first_passage_sample(unit, replace(small, seed=8))
        assert not np.array_equal(a.hits, c.hits)

    def test_worker_count_irrelevant(self):
        cfg = replace(small, n_walkers=9000, t_end=2 * TM)
        a = first_passage_sample(unit, cfg, workers=1)
        b = first_passage_sample(unit, cfg, workers=2)
        np.testing.assert_array_equal(a.hits, b.hits)

    def test_prefix_stable(self):
        # walkers live in fixed blocks, so growing n keeps earlier walkers
        cfg = replace(small, n_walkers=4096, t_end=2 * TM)
        a = first_passage_sample(unit, cfg)
        b = first_passage_sample(unit, replace(cfg, n_walkers=5000))
        np.testing.assert_array_equal(a.hits, b.hits[: a.n_hits])

    def test_far_receiver_never_hit(self):
        s = first_passage_sample(ChannelParams(1e6, 1.0), WalkConfig(n_walkers=500, dt_walk=1.0, t_end=100.0))
        assert s.n_hits == 0 and s.n_censored == 500
        cdf = empirical_cdf(s.hits, s.t_end, ChannelParams(1e6, 1.0))
        assert cdf.empty and cdf.ks is None
        assert cdf(50.0) == 0.0

    def test_hits_on_step_lattice(self):
        s = first_passage_sample(unit, small)
        k = s.hits / small.dt_walk
        np.testing.assert_allclose(k, np.round(k), atol=1e-6)
        assert np.all((s.hits > 0) & (s.hits <= s.t_end + 1e-12))

    def test_coarse_step_warns(self):
        with pytest.warns(CoarseStepWarning):
            first_passage_sample(unit, WalkConfig(n_walkers=10, dt_walk=0.01, t_end=0.1))

    def test_validation(self):
        for kw in [dict(n_walkers=0), dict(dt_walk=0), dict(t_end=-1), dict(seed=-1), dict(seed=2**64)]:
            with pytest.raises(DomainError):
                WalkConfig(**kw)

    def test_absorbed_fraction(self):
        s = first_passage_sample(unit, small)
        pc = capture_cdf(unit, s.t_end)
        sd = math.sqrt(pc * (1 - pc) / small.n_walkers)
        assert abs(s.absorbed_fraction - pc) <= 3 * sd

    def test_histogram_matches_impulse_response(self):
        cfg = WalkConfig(n_walkers=20000, dt_walk=1e-3, t_end=5 * TM, seed=3)
        s = first_passage_sample(unit, cfg)
        edges = np.linspace(0.2 * TM, 5 * TM, 13)
        counts, _ = np.histogram(s.hits, edges)
        expect = cfg.n_walkers * np.diff(capture_cdf(unit, edges))
        z = (counts - expect) / np.sqrt(expect)
        assert np.all(np.abs(z) <= 3.5)
        # binned shape follows h at bin centres to within the bin curvature
        mid = 0.5 * (edges[1:] + edges[:-1])
        dens = counts / (cfg.n_walkers * np.diff(edges))
        np.testing.assert_allclose(dens, impulse_response(unit, mid), rtol=0.2)

    @pytest.mark.filterwarnings("ignore::diffpulse.errors.CoarseStepWarning")
    def test_discrete_barrier_bias_shrinks_with_step(self):
        # the plain end-of-step rule misses excursions; the bias is
        # O(sqrt(dt)) and must shrink as dt does
        t_end = 3 * TM
        pc = capture_cdf(unit, t_end)
        bias = []
        for dt in (TM / 5, TM / 20, TM / 80):
            fr = [
                first_passage_sample(
                    unit, WalkConfig(n_walkers=4000, dt_walk=dt, t_end=t_end, seed=s, bridge=False)
                ).absorbed_fraction
                for s in range(5)
            ]
            bias.append(pc - np.mean(fr))
        assert bias[0] > bias[1] > bias[2] > 0
        # the bridge test removes it at the coarsest step
        fr = [
            first_passage_sample(unit, WalkConfig(n_walkers=4000, dt_walk=TM / 5, t_end=t_end, seed=s)).absorbed_fraction
            for s in range(5)
        ]
        assert abs(pc - np.mean(fr)) < 3 * math.sqrt(pc * (1 - pc) / 20000)


class TestEmpiricalCDF:
    def test_single_hit(self):
        cdf = empirical_cdf([0.5], 1.0)
        assert cdf.n == 1
        assert cdf(0.49) == 0.0 and cdf(0.5) == 1.0 and cdf(2.0) == 1.0

    def test_drops_late_hits_and_sorts(self):
        cdf = empirical_cdf([0.3, 2.0, 0.1], 1.0)
        np.testing.assert_array_equal(cdf.times, [0.1, 0.3])
        np.testing.assert_array_equal(cdf.probs, [0.5, 1.0])

    def test_ks_against_exact_quantiles(self):
        # hits at the (i - 1/2)/n quantiles give the minimal KS distance 1/(2n)
        n = 200
        t_end = 10 * TM
        u = (np.arange(n) + 0.5) / n
        from scipy.optimize import brentq

        pe = capture_cdf(unit, t_end)
        hits = [brentq(lambda t: capture_cdf(unit, t) / pe - q, 1e-3, t_end) for q in u]
        cdf = empirical_cdf(hits, t_end, unit)
        assert cdf.ks == pytest.approx(0.5 / n, rel=1e-6)

    def test_critical_value(self):
        assert ks_critical_value(10**4) == pytest.approx(0.0163)
        assert ks_critical_value(100, alpha=0.05) == pytest.approx(0.136)


class TestLink:
    p = ChannelParams(0.1, 1.0)
    tm = peak_time(p)

    def cfg(self, **kw):
        base = dict(symbol_period=2 * self.tm, n_symbols=2000, seed=1, threshold="midpoint")
        base.update(kw)
        return LinkConfig(**base)

    def test_all_zero_bits(self):
        rep = simulate_link(self.p, self.cfg(bits=[0] * 50, threshold="auto"))
        assert rep.n_errors == 0
        assert not rep.window_mass.any()

    def test_single_one_long_period(self):
        bits = [1] + [0] * 49
        rep = simulate_link(self.p, self.cfg(bits=bits, symbol_period=20 * self.tm, threshold="auto"))
        assert rep.n_errors == 0
        assert rep.decisions[0] == 1

    def test_noiseless_linearity(self):
        cfg = self.cfg(n_symbols=300)
        rep = simulate_link(self.p, cfg, Pulse.METHOD_A)
        g = cfg.grid
        y1 = single_pulse_response(self.p, Pulse.METHOD_A, g)
        rx = np.zeros(g.n_bins)
        for k in np.flatnonzero(rep.bits):
            s = k * cfg.samples_per_symbol
            rx[s:] += y1[: g.n_bins - s]
        np.testing.assert_allclose(rep.window_mass, rx.reshape(-1, cfg.samples_per_symbol).sum(1), atol=1e-12)

    def test_same_bits_across_pulses(self):
        cfg = self.cfg(noise_sigma=1e-3)
        a = simulate_link(self.p, cfg, "raw")
        b = simulate_link(self.p, cfg, "A")
        np.testing.assert_array_equal(a.bits, b.bits)
        assert a.pulse is Pulse.RAW and b.pulse is Pulse.METHOD_A

    def test_ber_monotone_in_noise(self):
        sig = 0.01
        bers = [simulate_link(self.p, self.cfg(noise_sigma=s), "raw").ber for s in (sig, 2 * sig, 4 * sig)]
        assert bers[0] <= bers[1] <= bers[2]

    def test_deterministic(self):
        cfg = self.cfg(noise_sigma=0.02)
        a, b = simulate_link(self.p, cfg), simulate_link(self.p, cfg)
        np.testing.assert_array_equal(a.window_mass, b.window_mass)

    def test_fixed_threshold(self):
        rep = simulate_link(self.p, self.cfg(threshold=0.123))
        assert rep.threshold == 0.123

    def test_shaping_cuts_isi(self):
        g = self.cfg().grid
        raw = single_pulse_response(self.p, "raw", g)
        a = single_pulse_response(self.p, "A", g)
        assert isi_tail_ratio(a, 2 * self.tm, g) < isi_tail_ratio(raw, 2 * self.tm, g)

    def test_config_validation(self):
        for kw in [dict(symbol_period=0), dict(noise_sigma=-1), dict(bits=[0, 2]), dict(threshold="median"), dict(samples_per_symbol=0)]:
            with pytest.raises(DomainError):
                self.cfg(**kw)

    def test_calibration_lands_in_band(self):
        cfg = self.cfg(n_symbols=1000)
        sig, rep = calibrate_noise(self.p, cfg)
        assert sig > 0
        assert 0.05 <= rep.ber <= 0.2
        assert rep.noise_sigma == sig


class TestIsiTailRatio:
    def test_zero_response(self):
        assert isi_tail_ratio(np.zeros(10), 1.0, TimeGrid(0.1, 10)) == 0.0

    def test_raw_pulse_value(self):
        g = TimeGrid(TM / 50, 5000)
        y = binned_response(unit, g)
        expect = 1 - capture_cdf(unit, TM) / capture_cdf(unit, g.duration)
        assert isi_tail_ratio(y, TM, g) == pytest.approx(expect, rel=1e-12)

    def test_delta_response(self):
        g = TimeGrid(0.1, 10)
        y = np.zeros(10)
        y[0] = 1.0
        assert isi_tail_ratio(y, 0.5, g) == 0.0


class TestPairedTest:
    def _rep(self, bits, decisions):
        from diffpulse.simulate import BERReport

        bits, decisions = np.asarray(bits), np.asarray(decisions)
        n = int(np.count_nonzero(bits != decisions))
        return BERReport(Pulse.RAW, bits.size, n, n / bits.size, 0.0, 0.5, 0.0, bits, np.zeros(bits.size), decisions)

    def test_identical(self):
        r = self._rep([0, 1, 1], [0, 1, 1])
        assert paired_error_test(r, r) == 1.0

    def test_exact_value(self):
        bits = np.zeros(10, dtype=int)
        shaped = self._rep(bits, np.zeros(10, dtype=int))
        raw = self._rep(bits, np.r_[np.ones(5, dtype=int), np.zeros(5, dtype=int)])
        assert paired_error_test(shaped, raw) == pytest.approx(0.5**5)

    def test_needs_same_bits(self):
        with pytest.raises(DomainError):
            paired_error_test(self._rep([0, 1], [0, 1]), self._rep([1, 1], [0, 1]))
