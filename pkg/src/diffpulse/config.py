"""
Run configuration: a strict YAML (or JSON) document.

Every section and key is optional; unknown keys are errors.  Defaults that
depend on the channel (grid step, symbol period, walk horizon) are resolved
to numbers at load time, so ``RunConfig.to_dict()`` is a complete,
re-loadable description of the run.  Units are arbitrary but must be
consistent between ``x``, ``D`` and all times.

    channel:   {x: 1.0, D: 1.0}
    grid:      {dt: <t_max/50>, n_bins: 6000}
    shaping:   {method: A, poison_start: null, poison_horizon: null}
    link:      {symbol_period: <2 t_max>, n_symbols: 10000, bits: null,
                noise_sigma: calibrate, threshold: midpoint, samples_per_symbol: 20}
    walk:      {n_walkers: 100000, dt_walk: 1.0e-4, t_end: <20 t_max>, bridge: true}
    inversion: {method: FixedTalbot, talbot_m: 32, stehfest_n: 14}
    seed: 0
    output: out
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .channel import ChannelParams, TimeGrid, peak_time
from .errors import DomainError
from .laplace import InversionConfig, InversionMethod
from .simulate import LinkConfig, WalkConfig

__all__ = ["ConfigError", "ShapingConfig", "RunConfig", "load_config", "parse_config"]

SECTIONS = {
    "channel": {"x", "D"},
    "grid": {"dt", "n_bins"},
    "shaping": {"method", "poison_start", "poison_horizon"},
    "link": {"symbol_period", "n_symbols", "bits", "noise_sigma", "threshold", "samples_per_symbol"},
    "walk": {"n_walkers", "dt_walk", "t_end", "bridge"},
    "inversion": {"method", "talbot_m", "stehfest_n"},
}
TOP_LEVEL = set(SECTIONS) | {"seed", "output"}


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration entry."""


@dataclass(frozen=True)
class ShapingConfig:
    method: str = "A"
    poison_start: float | None = None
    poison_horizon: float | None = None

    def __post_init__(self):
        if self.method not in ("raw", "A", "B"):
            raise DomainError(f"shaping.method must be raw, A or B, got {self.method!r}")
        for name in ("poison_start", "poison_horizon"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise DomainError(f"shaping.{name} must be a positive number or null")


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams
    grid: TimeGrid
    shaping: ShapingConfig
    link: LinkConfig
    noise_sigmas: tuple | str
    walk: WalkConfig
    inversion: InversionConfig
    seed: int = 0
    output: str = "out"

    def to_dict(self) -> dict:
        link = self.link
        return {
            "channel": {"x": self.channel.x, "D": self.channel.D},
            "grid": {"dt": self.grid.dt, "n_bins": self.grid.n_bins},
            "shaping": {
                "method": self.shaping.method,
                "poison_start": self.shaping.poison_start,
                "poison_horizon": self.shaping.poison_horizon,
            },
            "link": {
                "symbol_period": link.symbol_period,
                "n_symbols": link.n_symbols,
                "bits": None if link.bits is None else list(link.bits),
                "noise_sigma": self.noise_sigmas if isinstance(self.noise_sigmas, str) else list(self.noise_sigmas),
                "threshold": link.threshold,
                "samples_per_symbol": link.samples_per_symbol,
            },
            "walk": {
                "n_walkers": self.walk.n_walkers,
                "dt_walk": self.walk.dt_walk,
                "t_end": self.walk.t_end,
                "bridge": self.walk.bridge,
            },
            "inversion": {
                "method": self.inversion.method.value,
                "talbot_m": self.inversion.talbot_m,
                "stehfest_n": self.inversion.stehfest_n,
            },
            "seed": self.seed,
            "output": self.output,
        }


def _section(raw, name):
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(sec) - SECTIONS[name]
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(sorted(unknown))}")
    return sec


def _number(sec, key, default, name, kind=float):
    v = sec.get(key)
    if v is None:
        return default
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}.{key} must be a number, got {v!r}")
    if kind is int and int(v) != v:
        raise ConfigError(f"{name}.{key} must be an integer, got {v!r}")
    return kind(v)


def parse_config(raw: dict | None, seed: int | None = None, output: str | None = None) -> RunConfig:
    """Validate a mapping into a :class:`RunConfig`; ``seed``/``output`` override."""
    raw = dict(raw or {})
    if "manifest_version" in raw:
        raw = dict(raw.get("config") or {})
    unknown = set(raw) - TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    try:
        ch = _section(raw, "channel")
        channel = ChannelParams(_number(ch, "x", 1.0, "channel"), _number(ch, "D", 1.0, "channel"))
        tm = peak_time(channel)

        g = _section(raw, "grid")
        grid = TimeGrid(_number(g, "dt", tm / 50.0, "grid"), _number(g, "n_bins", 6000, "grid", int))

        sh = _section(raw, "shaping")
        shaping = ShapingConfig(
            method=str(sh.get("method", "A")),
            poison_start=_number(sh, "poison_start", None, "shaping"),
            poison_horizon=_number(sh, "poison_horizon", None, "shaping"),
        )

        if seed is None:
            seed = _number(raw, "seed", 0, "config", int)
        seed = int(seed)

        ln = _section(raw, "link")
        sig = ln.get("noise_sigma", "calibrate")
        if sig == "calibrate":
            sigmas = "calibrate"
        else:
            seq = sig if isinstance(sig, list) else [sig]
            if not seq or any(isinstance(s, bool) or not isinstance(s, (int, float)) or s < 0 for s in seq):
                raise ConfigError("link.noise_sigma must be 'calibrate', a number >= 0 or a list of them")
            sigmas = tuple(float(s) for s in seq)
        thr = ln.get("threshold", "midpoint")
        if isinstance(thr, bool) or not isinstance(thr, (int, float, str)):
            raise ConfigError("link.threshold must be a number, 'auto' or 'midpoint'")
        link = LinkConfig(
            symbol_period=_number(ln, "symbol_period", 2.0 * tm, "link"),
            n_symbols=_number(ln, "n_symbols", 10_000, "link", int),
            bits=ln.get("bits"),
            seed=seed,
            noise_sigma=0.0 if isinstance(sigmas, str) else sigmas[0],
            threshold=thr,
            samples_per_symbol=_number(ln, "samples_per_symbol", 20, "link", int),
        )

        wk = _section(raw, "walk")
        bridge = wk.get("bridge", True)
        if not isinstance(bridge, bool):
            raise ConfigError("walk.bridge must be true or false")
        walk = WalkConfig(
            n_walkers=_number(wk, "n_walkers", 100_000, "walk", int),
            dt_walk=_number(wk, "dt_walk", 1e-4, "walk"),
            t_end=_number(wk, "t_end", 20.0 * tm, "walk"),
            seed=seed,
            bridge=bridge,
        )

        inv = _section(raw, "inversion")
        try:
            method = InversionMethod(inv.get("method", "FixedTalbot"))
        except ValueError:
            raise ConfigError(
                f"inversion.method must be one of {[m.value for m in InversionMethod]}"
            ) from None
        inversion = InversionConfig(
            method=method,
            talbot_m=_number(inv, "talbot_m", 32, "inversion", int),
            stehfest_n=_number(inv, "stehfest_n", 14, "inversion", int),
        )
    except ConfigError:
        raise
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    out = output if output is not None else raw.get("output", "out")
    if not isinstance(out, str) or not out:
        raise ConfigError("output must be a non-empty path string")
    return RunConfig(
        channel=channel,
        grid=grid,
        shaping=shaping,
        link=link,
        noise_sigmas=sigmas,
        walk=walk,
        inversion=inversion,
        seed=seed,
        output=out,
    )


def load_config(path, seed=None, output=None) -> RunConfig:
    """Read a YAML/JSON config (or a run manifest) and validate it."""
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot parse: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(raw, seed=seed, output=output)
