"""
Numerical Laplace transforms.

``forward_numeric`` evaluates the defining integral by adaptive quadrature;
``invert`` recovers a time-domain original either on Talbot's contour
(fixed-Talbot variant of Abate & Valko) or from real-axis samples with the
Gaver-Stehfest formula.  Both are used as independent checks on the
closed forms in :mod:`diffpulse.channel` and :mod:`diffpulse.shaping`.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .channel import ChannelParams, TimeGrid, peak_time
from .errors import DomainError, NumericalFailure

__all__ = [
    "InversionMethod",
    "InversionConfig",
    "QuadratureConfig",
    "forward_numeric",
    "invert",
    "invert_grid",
    "stehfest_weights",
]


class InversionMethod(str, enum.Enum):
    FIXED_TALBOT = "FixedTalbot"
    GAVER_STEHFEST = "GaverStehfest"


@dataclass(frozen=True)
class InversionConfig:
    method: InversionMethod = InversionMethod.FIXED_TALBOT
    talbot_m: int = 32
    stehfest_n: int = 14

    def __post_init__(self):
        object.__setattr__(self, "method", InversionMethod(self.method))
        if int(self.talbot_m) != self.talbot_m or self.talbot_m < 8:
            raise DomainError(f"talbot_m must be an integer >= 8, got {self.talbot_m!r}")
        n = self.stehfest_n
        if int(n) != n or n % 2 or not 4 <= n <= 20:
            raise DomainError(f"stehfest_n must be even and in [4, 20], got {n!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for :func:`forward_numeric`.

    ``t_trunc`` may be ``inf``; the tail is then mapped onto a finite
    interval with ``t = 1/v^2``, which turns a ``t^(-3/2)`` tail into a
    constant.  ``t_split`` marks where the ``t = u^2`` head substitution
    hands over to plain quadrature.
    """

    epsabs: float = 1e-14
    epsrel: float = 1e-11
    limit: int = 200
    t_trunc: float = math.inf
    t_split: float = 1.0

    def __post_init__(self):
        if not (self.epsabs > 0 and self.epsrel > 0):
            raise DomainError("quadrature tolerances must be positive")
        if not self.t_trunc > 0:
            raise DomainError("truncation time must be positive")
        if not self.t_split > 0:
            raise DomainError("split time must be positive")
        if int(self.limit) != self.limit or self.limit < 1:
            raise DomainError("limit must be a positive integer")

    @classmethod
    def for_channel(cls, p: ChannelParams, s: float = 0.0, **kw) -> "QuadratureConfig":
        """Defaults scaled to the channel: truncate at max(100 t_max, 50/s)."""
        tm = peak_time(p)
        t_trunc = max(100.0 * tm, 50.0 / s) if s > 0 else math.inf
        kw.setdefault("t_trunc", t_trunc)
        kw.setdefault("t_split", min(10.0 * tm, kw["t_trunc"]))
        return cls(**kw)


def _quad(g, a, b, q, where):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(g, a, b, epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit, full_output=1)
    val, err = res[0], res[1]
    if len(res) == 4:
        raise NumericalFailure(
            f"quadrature on {where} did not converge: {res[3].splitlines()[0]}",
            estimate=val,
            error=err,
        )
    return val, err


def forward_numeric(f, s: float, q: QuadratureConfig | None = None, points=()) -> float:
    """Laplace transform of ``f`` at real ``s >= 0`` by adaptive quadrature.

    ``points`` lists interior discontinuities of ``f`` (e.g. a window edge)
    so that no panel straddles them.
    """
    if s < 0 or math.isnan(s):
        raise DomainError("forward transform is only evaluated for real s >= 0")
    q = q or QuadratureConfig()
    cuts = sorted({float(c) for c in (*points, q.t_split) if 0 < c < q.t_trunc})
    edges = [0.0, *cuts, q.t_trunc]

    total = 0.0
    errsum = 0.0
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        if i == 0:
            # t = u^2 removes t^(-1/2)-type endpoint behaviour at 0
            if not math.isfinite(b):
                raise DomainError("t_split must be finite when t_trunc is infinite")
            g = lambda u: 2.0 * u * f(u * u) * math.exp(-s * u * u)
            val, err = _quad(g, 0.0, math.sqrt(b), q, "head")
        elif math.isfinite(b):
            g = lambda t: f(t) * math.exp(-s * t)
            val, err = _quad(g, a, b, q, f"[{a:g}, {b:g}]")
        else:
            # t = 1/v^2 maps [a, inf) onto (0, 1/sqrt(a)]
            def g(v):
                if v == 0.0:
                    return 0.0
                t = 1.0 / (v * v)
                return f(t) * math.exp(-s * t) * 2.0 / v**3

            val, err = _quad(g, 0.0, 1.0 / math.sqrt(a), q, "tail")
        total += val
        errsum += err

    if errsum > max(q.epsabs, q.epsrel * abs(total)) * len(edges):
        raise NumericalFailure(
            "forward transform error estimate exceeds tolerance", estimate=total, error=errsum
        )
    return total


@lru_cache(maxsize=None)
def stehfest_weights(n: int) -> tuple:
    """Gaver-Stehfest coefficients V_1..V_n (alternating binomial sum)."""
    if n % 2 or n < 2:
        raise DomainError("Stehfest term count must be even and >= 2")
    half = n // 2
    out = []
    for k in range(1, n + 1):
        acc = 0.0
        for j in range((k + 1) // 2, min(k, half) + 1):
            acc += (
                j**half
                * math.factorial(2 * j)
                / (
                    math.factorial(half - j)
                    * math.factorial(j)
                    * math.factorial(j - 1)
                    * math.factorial(k - j)
                    * math.factorial(2 * j - k)
                )
            )
        out.append((-1) ** (k + half) * acc)
    return tuple(out)


# relative roundoff (eps * sum|terms| / |result|) above which Stehfest gives up
_STEHFEST_CANCELLATION_LIMIT = 1e-5


def _stehfest(F, t, n):
    V = np.array(stehfest_weights(n))
    ln2t = math.log(2.0) / t
    s = ln2t * np.arange(1, n + 1)
    terms = V * np.real(np.asarray(F(s), dtype=complex))
    result = ln2t * terms.sum()
    roundoff = np.finfo(float).eps * ln2t * np.abs(terms).sum()
    if not np.isfinite(result) or roundoff > _STEHFEST_CANCELLATION_LIMIT * abs(result):
        raise NumericalFailure(
            f"Gaver-Stehfest cancellation at t={t:g}: roundoff {roundoff:.2e} vs result {result:.2e}",
            estimate=result,
            error=roundoff,
        )
    return result


def _fixed_talbot(F, t, m):
    r = 2.0 * m / (5.0 * t)
    theta = np.arange(1, m) * (math.pi / m)
    cot = 1.0 / np.tan(theta)
    s = r * theta * (cot + 1j)
    sigma = theta + (theta * cot - 1.0) * cot
    body = np.exp(t * s) * np.asarray(F(s), dtype=complex) * (1.0 + 1j * sigma)
    head = 0.5 * math.exp(r * t) * complex(np.asarray(F(np.array([r + 0j])))[0])
    return r / m * (head.real + body.real.sum())


def invert(F, t: float, cfg: InversionConfig | None = None) -> float:
    """Numerical inverse Laplace transform of ``F`` at time ``t > 0``.

    ``F`` must accept a numpy array of (complex, for Talbot) arguments.
    """
    if not t > 0:
        raise DomainError(f"inversion time must be > 0, got {t!r}")
    cfg = cfg or InversionConfig()
    if cfg.method is InversionMethod.FIXED_TALBOT:
        return float(_fixed_talbot(F, float(t), cfg.talbot_m))
    return float(_stehfest(F, float(t), cfg.stehfest_n))


def invert_grid(F, grid: TimeGrid, cfg: InversionConfig | None = None) -> np.ndarray:
    """Invert at every bin midpoint of ``grid``."""
    t = grid.midpoints
    out = np.empty(t.size)
    failed = []
    for i, ti in enumerate(t):
        try:
            out[i] = invert(F, ti, cfg)
        except NumericalFailure as exc:
            out[i] = np.nan if exc.estimate is None else exc.estimate
            failed.append(i)
    if failed:
        raise NumericalFailure(
            f"inversion failed at {len(failed)} of {t.size} points", estimate=out, indices=failed
        )
    return out
