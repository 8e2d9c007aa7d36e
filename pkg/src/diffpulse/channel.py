"""
Closed-form model of the 1-D semi-infinite absorbing diffusion channel.

A unit impulse of molecules is released at distance ``x`` from a perfectly
absorbing receiver in a medium of diffusivity ``D``.  Everything here is a
pure function of ``(x, D)`` and time (or the Laplace variable):

* ``hitting_concentration``  phi_h(t) = exp(-x^2/(4Dt)) / sqrt(pi D t)
* ``capture_cdf``            phi_c(t) = erfc(x / (2 sqrt(D t)))
* ``impulse_response``       h(t) = d phi_c / dt
                                  = x / (2 sqrt(pi D)) t^(-3/2) exp(-x^2/(4Dt))
* ``transfer_function``      H(s) = exp(-x sqrt(s) / sqrt(D))
* ``peak_time``              t_max = x^2 / (6D)

Units are arbitrary but must be consistent; only the ratios x^2/(Dt) and
x sqrt(s/D) enter the results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "ChannelParams",
    "TimeGrid",
    "hitting_concentration",
    "capture_cdf",
    "impulse_response",
    "transfer_function",
    "transfer_function_complex",
    "peak_time",
    "binned_response",
]

# exp(-700) is ~1e-304; past this the densities are reported as exactly zero
UNDERFLOW_EXPONENT = 700.0


@dataclass(frozen=True)
class ChannelParams:
    """Transmitter-receiver distance ``x`` and diffusivity ``D``."""

    x: float
    D: float

    def __post_init__(self):
        for name in ("x", "D"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a finite positive number, got {v!r}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "D", float(self.D))

    @property
    def ratio(self) -> float:
        """x / sqrt(D), the small parameter of the series expansions."""
        return self.x / math.sqrt(self.D)

    @property
    def t_max(self) -> float:
        return peak_time(self)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform binning of time; bin ``k`` covers ``[k*dt, (k+1)*dt)``."""

    dt: float
    n_bins: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be finite and positive, got {self.dt!r}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise DomainError(f"n_bins must be an integer >= 1, got {self.n_bins!r}")
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_bins + 1) * self.dt

    @property
    def starts(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.dt

    @property
    def duration(self) -> float:
        return self.n_bins * self.dt

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.dt / factor, self.n_bins * factor)


def _as_time(t, strict: bool):
    t = np.asarray(t, dtype=float)
    bad = (t <= 0) if strict else (t < 0)
    if np.any(bad) or np.any(np.isnan(t)):
        rel = "<= 0" if strict else "< 0"
        raise DomainError(f"time must not be {rel} (or NaN)")
    return t


def _scalar_or_array(v, like):
    return float(v) if np.ndim(like) == 0 else v


def hitting_concentration(p: ChannelParams, t):
    """Hitting concentration at the receiver distance for a unit impulse.

    Returns exactly 0 where ``x^2/(4Dt) > 700`` instead of underflowing
    through subnormals.
    """
    tt = _as_time(t, strict=True)
    expo = p.x**2 / (4.0 * p.D * tt)
    with np.errstate(over="ignore", under="ignore"):
        val = np.exp(-expo) / np.sqrt(np.pi * p.D * tt)
    val = np.where(expo > UNDERFLOW_EXPONENT, 0.0, val)
    return _scalar_or_array(val, t)


def capture_cdf(p: ChannelParams, t):
    """Fraction of released molecules absorbed by time ``t`` (``t >= 0``)."""
    tt = _as_time(t, strict=False)
    with np.errstate(divide="ignore"):
        arg = p.x / (2.0 * np.sqrt(p.D * tt))
    val = special.erfc(arg)  # erfc(inf) == 0 covers t == 0
    return _scalar_or_array(val, t)


def impulse_response(p: ChannelParams, t):
    """Capture rate h(t); the first-passage time density of the walk."""
    tt = _as_time(t, strict=True)
    expo = p.x**2 / (4.0 * p.D * tt)
    coef = p.x / (2.0 * math.sqrt(math.pi * p.D))
    with np.errstate(over="ignore", under="ignore"):
        val = coef * tt**-1.5 * np.exp(-expo)
    val = np.where(expo > UNDERFLOW_EXPONENT, 0.0, val)
    return _scalar_or_array(val, t)


def transfer_function(p: ChannelParams, s):
    """Laplace transform of h on the nonnegative real axis."""
    ss = np.asarray(s, dtype=float)
    if np.any(ss < 0) or np.any(np.isnan(ss)):
        raise DomainError("Laplace variable s must be >= 0 on the real axis")
    val = np.exp(-p.ratio * np.sqrt(ss))
    return _scalar_or_array(val, s)


def transfer_function_complex(p: ChannelParams, s):
    """H(s) on the principal branch of sqrt, for contour-based inversion."""
    return np.exp(-p.ratio * np.sqrt(np.asarray(s, dtype=complex)))


def peak_time(p: ChannelParams) -> float:
    """Location of the maximum of h(t): x^2 / (6D)."""
    return p.x**2 / (6.0 * p.D)


def binned_response(p: ChannelParams, grid: TimeGrid) -> np.ndarray:
    """Mass captured in each bin of ``grid`` after a unit impulse at t=0."""
    cdf = capture_cdf(p, grid.edges)
    return np.diff(cdf)
