"""
Transmit pulse shaping for the diffusion channel.

Two routes lead to the same composite pulse

    x_d(t) = scale * [delta(t) - c * t^(-3/2)],    c = x / (2 sqrt(pi D))

* channel inversion: X_d(s) = 1/H(s) = exp(x sqrt(s)/sqrt(D)) ~ 1 + (x/sqrt(D)) sqrt(s),
  inverted term by term with the distributional pair sqrt(s) <-> -t^(-3/2)/(2 sqrt(pi));
* window design: the poison's *received* response is h(t) cut off before
  T = 3/2 t_max; deconvolving gives P_d(s) ~ erf(1) - (x sqrt(s)/sqrt(D)) erfc(1),
  so delta(t) - L^-1[P_d] is the inversion pulse scaled by erfc(1).

The impulsive part is emitted as compound A and the (negative) power-law
part as compound B, which is assumed to cancel A linearly at the receiver.
The sqrt(s) term is only ever inverted symbolically here; its original is
not a function and must never be handed to :func:`diffpulse.laplace.invert`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .channel import (
    ChannelParams,
    TimeGrid,
    binned_response,
    impulse_response,
    peak_time,
    transfer_function,
)
from .errors import DomainError, PreconditionError, ValidityWarning
from .laplace import QuadratureConfig, forward_numeric

__all__ = [
    "ERFC1",
    "ERF1",
    "CompositePulse",
    "ShapedEmission",
    "poison_coefficient",
    "invert_channel_pulse",
    "window_poison_response",
    "poison_transmit_laplace",
    "poison_transmit_laplace_numeric",
    "poison_transmit_laplace_approx",
    "default_window",
    "emission_response",
    "windowed_composite",
    "realize_emission",
    "shaped_response",
    "raw_emission",
]

ERFC1 = float(special.erfc(1.0))
ERF1 = float(special.erf(1.0))

# first-order expansion of exp(x sqrt(s)/sqrt(D)) is trusted below this x/sqrt(D)
VALIDITY_RATIO = 0.1


@dataclass(frozen=True)
class CompositePulse:
    """scale * [info_amplitude * delta(t) - poison_coefficient * t^(-3/2) on [start, horizon]].

    ``poison_start=None`` defers the choice of the truncation point to the
    grid the pulse is realized on (one bin width); without a grid
    ``grid_free_start`` is used.
    """

    info_amplitude: float
    poison_coefficient: float
    poison_start: float | None
    poison_horizon: float
    scale: float = 1.0
    grid_free_start: float | None = None

    def __post_init__(self):
        if not self.info_amplitude > 0:
            raise DomainError("info_amplitude must be > 0")
        if not self.poison_coefficient >= 0:
            raise DomainError("poison_coefficient must be >= 0")
        if not self.scale > 0:
            raise DomainError("scale must be > 0")
        if self.poison_start is not None and not 0 < self.poison_start < self.poison_horizon:
            raise DomainError("need 0 < poison_start < poison_horizon")
        if not self.poison_horizon > 0:
            raise DomainError("poison_horizon must be > 0")

    def resolved_start(self, grid: TimeGrid | None = None) -> float:
        if self.poison_start is not None:
            return self.poison_start
        if grid is not None:
            return grid.dt
        if self.grid_free_start is None:
            raise PreconditionError("pulse has no poison start; realize it on a grid")
        return self.grid_free_start

    def poison_mass(self, grid: TimeGrid | None = None) -> float:
        """Total (scaled) compound-B mass emitted on [start, horizon]."""
        eps = self.resolved_start(grid)
        return self.scale * self.poison_coefficient * 2.0 * (eps**-0.5 - self.poison_horizon**-0.5)


@dataclass(frozen=True)
class ShapedEmission:
    """Per-bin emitted masses of the information (A) and poison (B) compounds."""

    grid: TimeGrid
    compound_a: np.ndarray
    compound_b: np.ndarray

    @property
    def net(self) -> np.ndarray:
        return self.compound_a - self.compound_b


def poison_coefficient(p: ChannelParams) -> float:
    """c = x / (2 sqrt(pi D)), the weight of the t^(-3/2) poison term."""
    return p.x / (2.0 * math.sqrt(math.pi * p.D))


def _warn_regime(p):
    if p.ratio >= VALIDITY_RATIO:
        warnings.warn(
            f"x/sqrt(D) = {p.ratio:.3g} is not << 1; the first-order pulse is only approximate",
            ValidityWarning,
            stacklevel=3,
        )


def invert_channel_pulse(p: ChannelParams, poison_start=None, poison_horizon=None) -> CompositePulse:
    """Composite pulse from inverting the channel to first order in x sqrt(s/D)."""
    _warn_regime(p)
    tm = peak_time(p)
    horizon = 100.0 * tm if poison_horizon is None else poison_horizon
    return CompositePulse(
        info_amplitude=1.0,
        poison_coefficient=poison_coefficient(p),
        poison_start=poison_start,
        poison_horizon=horizon,
        scale=1.0,
        grid_free_start=tm / 100.0,
    )


def window_poison_response(p: ChannelParams, T: float):
    """Return p_r(t) = h(t) for t >= T and 0 before; needs T > t_max."""
    if not T > peak_time(p):
        raise PreconditionError(f"window start T={T!r} must exceed t_max={peak_time(p)!r}")

    def p_r(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        on = t >= T
        if np.any(on):
            out[on] = impulse_response(p, t[on])
        return float(out) if out.ndim == 0 else out

    p_r.T = T
    return p_r


def default_window(p: ChannelParams) -> float:
    """T = 3/2 t_max = x^2/(4D)."""
    return 1.5 * peak_time(p)


def poison_transmit_laplace(p: ChannelParams, s, T: float | None = None):
    """P_d(s) = L[p_r](s) / H(s).

    At the default window ``T = 3/2 t_max`` the closed form

        1/2 [1 + erf(1 - u) - exp(4u) erfc(1 + u)],   u = x sqrt(s) / (2 sqrt(D))

    is used, with exp(4u) erfc(1+u) rewritten as erfcx(1+u) exp(-(1-u)^2)
    so that large s does not overflow.  Any other ``T`` is evaluated by
    quadrature of p_r divided by H.
    """
    ss = np.asarray(s, dtype=float)
    if np.any(ss < 0) or np.any(np.isnan(ss)):
        raise DomainError("P_d is only evaluated for real s >= 0")
    T0 = default_window(p)
    if T is None or T == T0:
        u = p.ratio * np.sqrt(ss) / 2.0
        val = 0.5 * (1.0 + special.erf(1.0 - u) - special.erfcx(1.0 + u) * np.exp(-((1.0 - u) ** 2)))
        return float(val) if val.ndim == 0 else val
    return poison_transmit_laplace_numeric(p, ss, T)


def poison_transmit_laplace_numeric(p: ChannelParams, s, T: float | None = None):
    """P_d(s) by quadrature of the windowed response, divided by H(s)."""
    T = default_window(p) if T is None else T
    ss = np.asarray(s, dtype=float)
    p_r = window_poison_response(p, T)
    out = []
    for si in np.atleast_1d(ss):
        q = QuadratureConfig.for_channel(p, float(si))
        out.append(forward_numeric(p_r, float(si), q, points=(T,)) / transfer_function(p, float(si)))
    out = np.array(out)
    return float(out[0]) if ss.ndim == 0 else out


def poison_transmit_laplace_approx(p: ChannelParams, s):
    """Small-argument form erf(1) - (x sqrt(s)/sqrt(D)) erfc(1)."""
    return ERF1 - p.ratio * np.sqrt(s) * ERFC1


def windowed_composite(p: ChannelParams, poison_start=None, poison_horizon=None) -> CompositePulse:
    """Composite pulse from the window design.

    delta(t) - L^-1[erf(1) - (x/sqrt(D)) erfc(1) sqrt(s)]
        = erfc(1) delta(t) - erfc(1) (x/sqrt(D)) * t^(-3/2)/(2 sqrt(pi)),
    i.e. the inversion pulse with overall scale erfc(1).
    """
    base = invert_channel_pulse(p, poison_start, poison_horizon)
    return replace(base, scale=base.scale * ERFC1)


def _poison_bin_masses(cp: CompositePulse, grid: TimeGrid, eps: float) -> np.ndarray:
    edges = grid.edges
    lo = np.clip(edges[:-1], eps, cp.poison_horizon)
    hi = np.clip(edges[1:], eps, cp.poison_horizon)
    out = np.zeros(grid.n_bins)
    on = hi > lo
    # exact antiderivative of t^(-3/2) over the clipped bin
    out[on] = cp.poison_coefficient * 2.0 * (lo[on] ** -0.5 - hi[on] ** -0.5)
    return out


def realize_emission(cp: CompositePulse, grid: TimeGrid, regularize: bool = True) -> ShapedEmission:
    """Split the composite pulse into nonnegative per-bin masses of A and B.

    Truncating the poison at ``start`` leaves its integral 2c/sqrt(start)
    behind as a net negative mass that the receiver would see as a scaled
    copy of h(t) with the full t^(-3/2) tail.  The distributional sqrt(s)
    original has zero total mass, so with ``regularize=True`` compound A
    carries that extra 2c/sqrt(start) on top of the information mass.
    ``regularize=False`` gives the bare truncation.
    """
    eps = cp.resolved_start(grid)
    b = _poison_bin_masses(cp, grid, eps)
    a = np.zeros(grid.n_bins)
    a[0] = cp.info_amplitude
    if regularize and cp.poison_coefficient > 0:
        a[0] += cp.poison_coefficient * 2.0 * eps**-0.5
    return ShapedEmission(grid=grid, compound_a=cp.scale * a, compound_b=cp.scale * b)


def raw_emission(grid: TimeGrid, mass: float = 1.0) -> ShapedEmission:
    """Unshaped pulse: all information mass in bin 0, no poison."""
    a = np.zeros(grid.n_bins)
    a[0] = mass
    return ShapedEmission(grid=grid, compound_a=a, compound_b=np.zeros(grid.n_bins))


def shaped_response(cp: CompositePulse, p: ChannelParams, grid: TimeGrid, regularize: bool = True) -> np.ndarray:
    """Per-bin net received mass for the realized composite pulse.

    Each bin's emitted mass is treated as released at the bin start and
    convolved with the binned channel response.
    """
    em = realize_emission(cp, grid, regularize=regularize)
    return emission_response(em, p)


def emission_response(em: ShapedEmission, p: ChannelParams) -> np.ndarray:
    hb = binned_response(p, em.grid)
    return np.convolve(em.net, hb)[: em.grid.n_bins]
