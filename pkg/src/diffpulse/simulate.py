"""
Stochastic engines: Brownian first-passage Monte Carlo and an on-off-keyed
link simulator with ISI and additive Gaussian noise.

Randomness is always derived from ``numpy.random.SeedSequence(seed,
spawn_key=(stream, block))`` feeding a Philox generator.  Walkers and
symbols are grouped into fixed-size logical blocks, so results depend on
``(inputs, seed)`` only and never on how blocks are spread over workers.
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal, stats

from .channel import ChannelParams, TimeGrid, binned_response, capture_cdf, peak_time
from .errors import CoarseStepWarning, DomainError
from .shaping import ShapedEmission, invert_channel_pulse, raw_emission, realize_emission, windowed_composite

__all__ = [
    "WalkConfig",
    "FirstPassageSample",
    "first_passage_sample",
    "EmpiricalCDF",
    "empirical_cdf",
    "ks_critical_value",
    "Pulse",
    "LinkConfig",
    "BERReport",
    "simulate_link",
    "single_pulse_response",
    "isi_tail_ratio",
    "calibrate_noise",
    "paired_error_test",
]

WALK_BLOCK = 4096
SYMBOL_BLOCK = 1024

_STREAM_WALK, _STREAM_BITS, _STREAM_NOISE = 0, 1, 2


def _rng(seed, stream, block=0):
    ss = np.random.SeedSequence(int(seed), spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# first passage


@dataclass(frozen=True)
class WalkConfig:
    n_walkers: int = 100_000
    dt_walk: float = 1e-4
    t_end: float = 20.0 / 6.0
    seed: int = 0
    # exact continuous-path crossing test between steps
    bridge: bool = True

    def __post_init__(self):
        if int(self.n_walkers) != self.n_walkers or self.n_walkers < 1:
            raise DomainError("n_walkers must be an integer >= 1")
        if not (self.dt_walk > 0 and math.isfinite(self.dt_walk)):
            raise DomainError("dt_walk must be positive")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError("t_end must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "n_walkers", int(self.n_walkers))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt_walk))


@dataclass(frozen=True)
class FirstPassageSample:
    """Hit times of absorbed walkers (walker order) and the censored count."""

    hits: np.ndarray
    n_walkers: int
    t_end: float

    @property
    def n_hits(self) -> int:
        return int(self.hits.size)

    @property
    def n_censored(self) -> int:
        return self.n_walkers - self.n_hits

    @property
    def absorbed_fraction(self) -> float:
        return self.n_hits / self.n_walkers


def _walk_block(args):
    """Simulate one logical block of walkers; returns hit times (NaN = censored).

    Walkers further than 8 standard deviations of an L-step increment from
    the receiver advance with a single Gaussian draw for the whole stretch;
    the chance that the path reaches the receiver during such a jump is
    below 2e-15, far under Monte Carlo resolution.
    """
    seed, block, n, x, D, dt, n_steps, bridge = args
    rng = _rng(seed, _STREAM_WALK, block)
    L = 128
    z = 8.0
    var = 2.0 * D * dt
    sd = math.sqrt(var)

    hits = np.full(n, np.nan)
    idx = np.arange(n)
    pos = np.zeros(n)
    k = np.zeros(n, dtype=np.int64)
    cols = np.arange(L)

    while idx.size:
        rem = n_steps - k
        gap = x - pos
        jump = np.minimum(np.floor((gap / (z * sd)) ** 2).astype(np.int64), rem)
        far = jump >= L
        if far.any():
            j = jump[far]
            pos[far] += sd * np.sqrt(j) * rng.standard_normal(j.size)
            k[far] += j

        done = np.zeros(idx.size, dtype=bool)
        near = np.flatnonzero(~far)
        if near.size:
            m = near.size
            path = pos[near, None] + np.cumsum(sd * rng.standard_normal((m, L)), axis=1)
            valid = cols[None, :] < rem[near, None]
            crossed = path >= x
            if bridge:
                prev = np.empty_like(path)
                prev[:, 0] = pos[near]
                prev[:, 1:] = path[:, :-1]
                g0g1 = (x - prev) * (x - path)
                # P(continuous path touched x between two samples below it)
                cand = valid & ~crossed & (g0g1 < 18.5 * var)
                if cand.any():
                    prob = np.exp(-2.0 * g0g1[cand] / var)
                    crossed[cand] = rng.random(prob.size) < prob
            crossed &= valid
            hit_any = crossed.any(axis=1)
            first = np.argmax(crossed, axis=1)
            hn = near[hit_any]
            hits[idx[hn]] = (k[hn] + first[hit_any] + 1) * dt
            done[hn] = True
            step = np.minimum(L, rem[near])
            pos[near] = path[np.arange(m), step - 1]
            k[near] += step

        done |= k >= n_steps
        keep = ~done
        idx, pos, k = idx[keep], pos[keep], k[keep]
    return hits


def first_passage_sample(p: ChannelParams, cfg: WalkConfig, workers: int = 1) -> FirstPassageSample:
    """Absorption times of 1-D Brownian walkers started at 0 with the receiver at x.

    Increments are N(0, 2 D dt_walk).  A walker is absorbed in a step if it
    ends at or beyond ``x``, or (with ``cfg.bridge``) if the Brownian bridge
    between the two samples touches ``x``.  Hit times are reported at the
    end of the absorbing step; walkers alive at ``t_end`` are censored.
    """
    if cfg.dt_walk > peak_time(p) / 100:
        warnings.warn(
            f"dt_walk={cfg.dt_walk:g} exceeds t_max/100={peak_time(p) / 100:g}",
            CoarseStepWarning,
            stacklevel=2,
        )
    n_blocks = -(-cfg.n_walkers // WALK_BLOCK)
    jobs = [
        (cfg.seed, b, min(WALK_BLOCK, cfg.n_walkers - b * WALK_BLOCK), p.x, p.D, cfg.dt_walk, cfg.n_steps, cfg.bridge)
        for b in range(n_blocks)
    ]
    if workers > 1 and n_blocks > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_walk_block, jobs))
    else:
        parts = [_walk_block(j) for j in jobs]
    all_hits = np.concatenate(parts)
    return FirstPassageSample(hits=all_hits[~np.isnan(all_hits)], n_walkers=cfg.n_walkers, t_end=cfg.n_steps * cfg.dt_walk)


@dataclass(frozen=True)
class EmpiricalCDF:
    """Empirical CDF of uncensored hit times, optionally with the analytic reference.

    ``times`` are the sorted hits, ``probs[i] = (i+1)/n``.  ``reference`` is
    phi_c(t)/phi_c(t_end) at ``times`` when channel parameters were given.
    """

    times: np.ndarray
    probs: np.ndarray
    t_end: float
    reference: np.ndarray | None = None
    ks: float | None = None

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def empty(self) -> bool:
        return self.n == 0

    def __call__(self, t):
        """Right-continuous step function evaluated at ``t``."""
        if self.empty:
            return np.zeros_like(np.asarray(t, dtype=float))
        return np.searchsorted(self.times, t, side="right") / self.n


def empirical_cdf(hits, t_end: float, p: ChannelParams | None = None) -> EmpiricalCDF:
    hits = np.sort(np.asarray(hits, dtype=float))
    hits = hits[hits <= t_end]
    n = hits.size
    probs = np.arange(1, n + 1) / n if n else np.empty(0)
    if p is None or n == 0:
        return EmpiricalCDF(hits, probs, t_end)
    ref = capture_cdf(p, hits) / capture_cdf(p, t_end)
    ks = float(max(np.max(probs - ref), np.max(ref - np.arange(n) / n)))
    return EmpiricalCDF(hits, probs, t_end, reference=ref, ks=ks)


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value; 1.63/sqrt(n) at alpha = 0.01."""
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}.get(alpha)
    if c is None:
        c = math.sqrt(-0.5 * math.log(alpha / 2))
    return c / math.sqrt(n)


# ---------------------------------------------------------------------------
# link level


class Pulse(str, enum.Enum):
    RAW = "raw"
    METHOD_A = "A"
    METHOD_B = "B"


@dataclass(frozen=True)
class LinkConfig:
    """On-off keyed link settings.

    ``bits`` fixes the transmitted sequence; otherwise ``n_symbols``
    equiprobable bits are drawn from ``seed``.  The same ``seed`` also
    drives the noise, so two pulses simulated with one config see
    identical bits and noise.  ``threshold`` is a number, ``"auto"`` (half
    the noiseless in-window mass of one pulse) or ``"midpoint"`` (that plus
    the mean ISI expected from earlier symbols).
    """

    symbol_period: float
    n_symbols: int = 10_000
    bits: tuple | None = None
    seed: int = 0
    noise_sigma: float = 0.0
    threshold: float | str = "auto"
    samples_per_symbol: int = 20

    def __post_init__(self):
        if not (self.symbol_period > 0 and math.isfinite(self.symbol_period)):
            raise DomainError("symbol_period must be positive")
        if not self.noise_sigma >= 0:
            raise DomainError("noise_sigma must be >= 0")
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 1:
            raise DomainError("samples_per_symbol must be an integer >= 1")
        if self.bits is not None:
            bits = tuple(int(b) for b in self.bits)
            if any(b not in (0, 1) for b in bits) or not bits:
                raise DomainError("bits must be a non-empty sequence of 0/1")
            object.__setattr__(self, "bits", bits)
            object.__setattr__(self, "n_symbols", len(bits))
        if int(self.n_symbols) != self.n_symbols or self.n_symbols < 1:
            raise DomainError("n_symbols must be an integer >= 1")
        if isinstance(self.threshold, str):
            if self.threshold not in ("auto", "midpoint"):
                raise DomainError("threshold must be a number, 'auto' or 'midpoint'")
        elif not math.isfinite(self.threshold):
            raise DomainError("threshold must be finite")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.symbol_period / self.samples_per_symbol, self.n_symbols * self.samples_per_symbol)

    def draw_bits(self) -> np.ndarray:
        if self.bits is not None:
            return np.array(self.bits, dtype=np.int8)
        return _rng(self.seed, _STREAM_BITS).integers(0, 2, self.n_symbols, dtype=np.int8)


@dataclass(frozen=True)
class BERReport:
    pulse: Pulse
    n_symbols: int
    n_errors: int
    ber: float
    noise_sigma: float
    threshold: float
    tail_energy_ratio: float
    bits: np.ndarray = field(repr=False)
    window_mass: np.ndarray = field(repr=False)
    decisions: np.ndarray = field(repr=False)

    @property
    def errors(self) -> np.ndarray:
        return self.decisions != self.bits


def pulse_emission(p: ChannelParams, pulse: Pulse | str, grid: TimeGrid) -> ShapedEmission:
    pulse = Pulse(pulse)
    if pulse is Pulse.RAW:
        return raw_emission(grid)
    with warnings.catch_warnings():
        # the link deliberately runs at the edge of the small-x regime
        warnings.simplefilter("ignore")
        cp = invert_channel_pulse(p) if pulse is Pulse.METHOD_A else windowed_composite(p)
    return realize_emission(cp, grid)


def single_pulse_response(p: ChannelParams, pulse: Pulse | str, grid: TimeGrid) -> np.ndarray:
    """Noiseless per-bin received mass for one pulse sent at t = 0."""
    em = pulse_emission(p, pulse, grid)
    net = _trim(em.net)
    return np.convolve(net, binned_response(p, grid))[: grid.n_bins]


def _trim(v):
    nz = np.flatnonzero(v)
    return v[: nz[-1] + 1] if nz.size else v[:1]


def isi_tail_ratio(response, symbol_period: float, grid: TimeGrid) -> float:
    """Share of sum|response| falling later than one symbol period."""
    r = np.abs(np.asarray(response, dtype=float))
    total = r.sum()
    if total == 0:
        return 0.0
    k0 = int(round(symbol_period / grid.dt))
    return float(r[k0:].sum() / total)


def _window_sums(v, sps):
    return v.reshape(-1, sps).sum(axis=1)


def simulate_link(p: ChannelParams, cfg: LinkConfig, pulse: Pulse | str = Pulse.RAW) -> BERReport:
    """Bit-error simulation of an OOK link through the diffusion channel."""
    pulse = Pulse(pulse)
    grid = cfg.grid
    sps = cfg.samples_per_symbol
    n = cfg.n_symbols
    bits = cfg.draw_bits()

    em = pulse_emission(p, pulse, grid)
    hb = binned_response(p, grid)
    net = _trim(em.net)

    train = np.zeros(grid.n_bins)
    train[::sps] = bits
    tx = signal.fftconvolve(train, net)[: grid.n_bins] if net.size > 1 else train * net[0]
    rx = signal.fftconvolve(tx, hb)[: grid.n_bins]

    if cfg.noise_sigma > 0:
        noise = np.concatenate(
            [
                _rng(cfg.seed, _STREAM_NOISE, b).standard_normal(min(SYMBOL_BLOCK, n - b * SYMBOL_BLOCK) * sps)
                for b in range(-(-n // SYMBOL_BLOCK))
            ]
        )
        rx = rx + cfg.noise_sigma * noise
    window = _window_sums(rx, sps)

    y1 = np.convolve(net, hb)[: grid.n_bins]
    g = _window_sums(y1, sps)
    if cfg.threshold == "auto":
        thr = 0.5 * g[0]
    elif cfg.threshold == "midpoint":
        p1 = bits.mean()
        isi = np.concatenate([[0.0], np.cumsum(g[1:])[:-1]])
        thr = 0.5 * g[0] + p1 * isi.mean()
    else:
        thr = float(cfg.threshold)

    decisions = (window > thr).astype(np.int8)
    n_err = int(np.count_nonzero(decisions != bits))
    return BERReport(
        pulse=pulse,
        n_symbols=n,
        n_errors=n_err,
        ber=n_err / n,
        noise_sigma=cfg.noise_sigma,
        threshold=float(thr),
        tail_energy_ratio=isi_tail_ratio(y1, cfg.symbol_period, grid),
        bits=bits,
        window_mass=window,
        decisions=decisions,
    )


def paired_error_test(shaped: BERReport, raw: BERReport) -> float:
    """One-sided exact McNemar p-value for 'shaped makes fewer errors than raw'.

    Both reports must come from the same bits and noise.
    """
    if not np.array_equal(shaped.bits, raw.bits):
        raise DomainError("paired test needs reports simulated on identical bits")
    es, er = shaped.errors, raw.errors
    only_shaped = int(np.count_nonzero(es & ~er))
    only_raw = int(np.count_nonzero(er & ~es))
    if only_shaped + only_raw == 0:
        return 1.0
    return float(stats.binomtest(only_shaped, only_shaped + only_raw, 0.5, alternative="less").pvalue)


def calibrate_noise(p: ChannelParams, cfg: LinkConfig, pulse: Pulse | str = Pulse.RAW, band=(0.05, 0.2), max_steps=80):
    """Largest noise sigma on a sqrt(2) ladder keeping ``pulse``'s BER inside ``band``.

    The ladder starts at 1e-3 of the detection threshold per sqrt(bin);
    every rung uses the config's own seed, so the answer is deterministic.
    Returns ``(sigma, report)``.
    """
    lo_b, hi_b = band
    rep = simulate_link(p, replace(cfg, noise_sigma=0.0), pulse)
    if rep.ber > hi_b:
        raise DomainError(f"noiseless BER {rep.ber:.3g} already exceeds the band {band}")
    sigma0 = 1e-3 * (abs(rep.threshold) or 1.0) / math.sqrt(cfg.samples_per_symbol)
    best = (0.0, rep) if rep.ber >= lo_b else None
    for k in range(max_steps):
        sig = sigma0 * 2.0 ** (k / 2)
        rep = simulate_link(p, replace(cfg, noise_sigma=sig), pulse)
        if rep.ber > hi_b:
            break
        if rep.ber >= lo_b:
            best = (sig, rep)
    if best is None:
        raise DomainError("noise calibration did not reach the BER band")
    return best
