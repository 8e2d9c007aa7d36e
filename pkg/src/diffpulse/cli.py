"""
Command-line front end.

    diffpulse response      --config run.yaml --out DIR
    diffpulse shape         ...
    diffpulse simulate      ...
    diffpulse mc-validate   ...
    diffpulse invert-laplace --transform {channel_H,poison_Pd} ...

Every command writes '#'-commented CSV files plus ``manifest.json`` into
the output directory.  Exit codes: 0 ok, 2 config error, 3 numerical
failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import binned_response, capture_cdf, hitting_concentration, impulse_response, peak_time
from .channel import transfer_function, transfer_function_complex
from .config import ConfigError, RunConfig, load_config, parse_config
from .errors import NumericalFailure
from .laplace import invert
from .shaping import (
    emission_response,
    invert_channel_pulse,
    poison_transmit_laplace,
    poison_transmit_laplace_numeric,
    raw_emission,
    realize_emission,
    windowed_composite,
)
from .simulate import (
    Pulse,
    calibrate_noise,
    empirical_cdf,
    first_passage_sample,
    ks_critical_value,
    paired_error_test,
    simulate_link,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SCHEMA_VERSION = 1
MIN_KS_HITS = 100

CSV_SCHEMAS = {
    "channel.csv": ["t", "phi_h", "phi_c", "h"],
    "transfer.csv": ["s", "H"],
    "pulse.csv": ["bin_start", "compound_a", "compound_b"],
    "shaped_response.csv": ["t", "y_raw", "y_shaped"],
    "ber.csv": ["pulse", "noise_sigma", "n_symbols", "n_errors", "ber", "threshold", "tail_energy_ratio", "p_value_vs_raw"],
    "ks.csv": [
        "n_walkers", "n_hits", "ks_distance", "critical_value", "status",
        "absorbed_fraction", "phi_c_t_end", "binomial_sigma", "fraction_within_3sigma",
    ],
    "invert_channel_H.csv": ["t", "numeric", "analytic", "rel_error"],
    "invert_poison_Pd.csv": ["s", "closed_form", "quadrature", "rel_error"],
}

TRANSFORMS = ("channel_H", "poison_Pd")
# names that have no classical time-domain original
DIVERGENT_TRANSFORMS = {"sqrt_s", "sqrt(s)"}


class Run:
    """Per-invocation bookkeeping: output directory, CSV writing, manifest."""

    def __init__(self, cfg: RunConfig, command: str, deterministic: bool):
        self.cfg = cfg
        self.command = command
        self.deterministic = deterministic
        self.out = Path(cfg.output)
        self.files = {}
        self.checks = {}
        self.resolved = {}
        self.t0 = time.perf_counter()
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {self.out}: {exc.strerror}") from exc

    def write_csv(self, name, rows, comments=()):
        cols = CSV_SCHEMAS[name]
        buf = io.StringIO()
        buf.write(f"# diffpulse {self.command} schema_version={SCHEMA_VERSION}\n")
        for c in comments:
            buf.write(f"# {c}\n")
        if not self.deterministic:
            buf.write(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        path = self.out / name
        try:
            path.write_text(buf.getvalue())
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        self.files[name] = cols

    def check(self, name, ok):
        self.checks[name] = "pass" if ok else "fail"

    def write_manifest(self):
        manifest = {
            "manifest_version": 1,
            "artifact_version": __version__,
            "command": self.command,
            "config": self.cfg.to_dict(),
            "resolved": self.resolved,
            "seeds": {"link": self.cfg.link.seed, "walk": self.cfg.walk.seed},
            "wall_clock_s": None if self.deterministic else round(time.perf_counter() - self.t0, 3),
            "csv_schema": {"version": SCHEMA_VERSION, "files": self.files},
            "checks": self.checks,
        }
        _atomic_write(self.out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _atomic_write(path: Path, text: str):
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest-")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_response(cfg: RunConfig, run: Run):
    p, grid = cfg.channel, cfg.grid
    t = grid.edges[1:]
    phi_c = capture_cdf(p, t)
    h = impulse_response(p, t)
    run.write_csv(
        "channel.csv",
        zip(t, hitting_concentration(p, t), phi_c, h),
        comments=[f"x={p.x!r} D={p.D!r} t_max={peak_time(p)!r}"],
    )
    tm = peak_time(p)
    s = np.logspace(-3, 3, 61) / tm
    run.write_csv("transfer.csv", zip(s, transfer_function(p, s)))
    run.check("phi_c_nondecreasing", bool(np.all(np.diff(phi_c) >= 0)))
    run.check("h_peak_within_one_step", abs(t[np.argmax(h)] - tm) <= grid.dt)


def _emission_for(cfg: RunConfig, method: str):
    p, sh = cfg.channel, cfg.shaping
    if method == "raw":
        return raw_emission(cfg.grid), 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        build = invert_channel_pulse if method == "A" else windowed_composite
        cp = build(p, sh.poison_start, sh.poison_horizon)
    return realize_emission(cp, cfg.grid), cp.scale


def cmd_shape(cfg: RunConfig, run: Run):
    p, grid = cfg.channel, cfg.grid
    em, scale = _emission_for(cfg, cfg.shaping.method)
    run.write_csv(
        "pulse.csv",
        zip(grid.starts, em.compound_a, em.compound_b),
        comments=[f"method={cfg.shaping.method} scale={scale!r}"],
    )
    y_raw = binned_response(p, grid)
    y_shaped = emission_response(em, p)
    run.write_csv(
        "shaped_response.csv",
        zip(grid.midpoints, y_raw, y_shaped),
        comments=[f"method={cfg.shaping.method} scale={scale!r}", "values are per-bin received masses"],
    )
    run.check("emission_nonnegative", bool(np.all(em.compound_a >= 0) and np.all(em.compound_b >= 0)))
    run.resolved["scale"] = scale


def cmd_simulate(cfg: RunConfig, run: Run):
    p = cfg.channel
    shaped = {"raw": Pulse.RAW, "A": Pulse.METHOD_A, "B": Pulse.METHOD_B}[cfg.shaping.method]
    if cfg.noise_sigmas == "calibrate":
        sigma, _ = calibrate_noise(p, cfg.link, Pulse.RAW)
        sigmas = (sigma,)
    else:
        sigmas = cfg.noise_sigmas
    run.resolved["noise_sigma"] = list(sigmas)

    rows = []
    ok = True
    for sig in sigmas:
        lc = replace(cfg.link, noise_sigma=sig)
        raw = simulate_link(p, lc, Pulse.RAW)
        rows.append([raw.pulse.value, sig, raw.n_symbols, raw.n_errors, raw.ber, raw.threshold, raw.tail_energy_ratio, None])
        if shaped is not Pulse.RAW:
            rep = simulate_link(p, lc, shaped)
            pval = paired_error_test(rep, raw)
            rows.append([rep.pulse.value, sig, rep.n_symbols, rep.n_errors, rep.ber, rep.threshold, rep.tail_energy_ratio, pval])
            ok &= rep.ber <= raw.ber
    run.write_csv("ber.csv", rows, comments=[f"x={p.x!r} D={p.D!r} symbol_period={cfg.link.symbol_period!r}"])
    run.check("shaped_ber_le_raw", ok)


def cmd_mc_validate(cfg: RunConfig, run: Run):
    p, wc = cfg.channel, cfg.walk
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fp = first_passage_sample(p, wc)
    ref = capture_cdf(p, fp.t_end)
    sigma = math.sqrt(ref * (1 - ref) / fp.n_walkers)
    within = abs(fp.absorbed_fraction - ref) <= 3 * sigma
    if fp.n_hits < MIN_KS_HITS:
        ks, crit, status = None, None, "insufficient_sample"
    else:
        ks = empirical_cdf(fp.hits, fp.t_end, p).ks
        crit = ks_critical_value(fp.n_hits)
        status = "pass" if ks < crit else "fail"
    run.write_csv(
        "ks.csv",
        [[fp.n_walkers, fp.n_hits, ks, crit, status, fp.absorbed_fraction, ref, sigma, within]],
        comments=[f"x={p.x!r} D={p.D!r} dt_walk={wc.dt_walk!r} t_end={fp.t_end!r} bridge={wc.bridge}"],
    )
    if status != "insufficient_sample":
        run.check("ks", status == "pass")
        run.check("absorbed_fraction", within)


def cmd_invert_laplace(cfg: RunConfig, run: Run, transform: str):
    p = cfg.channel
    tm = peak_time(p)
    if transform == "channel_H":
        t = np.logspace(math.log10(0.1 * tm), math.log10(20 * tm), 64)
        num = np.array([invert(lambda s: transfer_function_complex(p, s), ti, cfg.inversion) for ti in t])
        ana = impulse_response(p, t)
        err = np.abs(num / ana - 1)
        run.write_csv("invert_channel_H.csv", zip(t, num, ana, err), comments=[f"method={cfg.inversion.method.value}"])
        run.check("max_rel_error_le_1e-6", float(err.max()) <= 1e-6)
    else:
        u = np.linspace(0.0, 0.5, 26)
        s = (2.0 * u / p.ratio) ** 2
        closed = poison_transmit_laplace(p, s)
        quad = poison_transmit_laplace_numeric(p, s)
        err = np.abs(closed / quad - 1)
        run.write_csv(
            "invert_poison_Pd.csv",
            zip(s, closed, quad, err),
            comments=["P_d has only a distributional original; checked in the s-domain against quadrature"],
        )
        run.check("max_rel_error_le_1e-6", float(err.max()) <= 1e-6)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON config or a previous manifest.json")
    common.add_argument("--out", help="output directory (overrides config 'output')")
    common.add_argument("--seed", type=_u64, help="unsigned 64-bit seed (overrides config)")
    common.add_argument("--deterministic", action="store_true", help="omit timestamps from outputs")

    ap = argparse.ArgumentParser(prog="diffpulse", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("response", parents=[common], help="dump phi_h, phi_c, h and H")
    sub.add_parser("shape", parents=[common], help="write the shaped emission and its response")
    sub.add_parser("simulate", parents=[common], help="BER of raw vs shaped pulses")
    sub.add_parser("mc-validate", parents=[common], help="random-walk check of the capture law")
    inv = sub.add_parser("invert-laplace", parents=[common], help="numerical Laplace inversion report")
    inv.add_argument("--transform", default="channel_H", help=f"one of: {', '.join(TRANSFORMS)}")
    return ap


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


COMMANDS = {
    "response": cmd_response,
    "shape": cmd_shape,
    "simulate": cmd_simulate,
    "mc-validate": cmd_mc_validate,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)

    if args.command == "invert-laplace":
        if args.transform in DIVERGENT_TRANSFORMS:
            print(
                f"diffpulse: error: refusing to invert {args.transform!r}: sqrt(s) has no classical "
                "original (its pseudo-inverse diverges at t = 0); it is only inverted symbolically",
                file=sys.stderr,
            )
            return EXIT_CONFIG
        if args.transform not in TRANSFORMS:
            ap.error(f"unknown transform {args.transform!r}; valid names: {', '.join(TRANSFORMS)}")

    try:
        if args.config:
            cfg = load_config(args.config, seed=args.seed, output=args.out)
        else:
            cfg = parse_config({}, seed=args.seed, output=args.out)
    except ConfigError as exc:
        print(f"diffpulse: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"diffpulse: cannot read config {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO

    try:
        run = Run(cfg, args.command, args.deterministic)
        if args.command == "invert-laplace":
            cmd_invert_laplace(cfg, run, args.transform)
        else:
            COMMANDS[args.command](cfg, run)
        run.write_manifest()
    except NumericalFailure as exc:
        print(f"diffpulse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"diffpulse: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
