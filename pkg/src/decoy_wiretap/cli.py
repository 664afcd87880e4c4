"""Command-line front end: ``decoy-wiretap {capacity,sweep,link,squeezed,simulate}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every file written is accompanied by ``<file>.manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .channels import DecoyPolicy, DetectorNoise, PhotonBudget
from .linkbudget import (
    CSV_COLUMNS, ConfigError, LinkParams, design_link, load_link_config, required_transmit,
)
from .montecarlo import SimConfig, UnsupportedScenario, simulate
from .secrecy import (
    BPSK_DECOY_EVE_EXPONENT, HOLEVO_MODES, RateResult, ScenarioSpec, optimal_photon_number,
    optimize_decoy, sweep,
)
from .squeezed import TruncationError, squeezing_gain

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
SWEEP_COLUMNS = ("gamma", "n_bob", "rate", "a", "b", "q_v0", "i_bob", "i_eve")
SQUEEZED_COLUMNS = ("gamma", "n_bob", "rate_coherent", "rate_squeezed", "relative_gain")


class UsageError(Exception):
    pass


# argparse value types; their messages are prefixed with the flag name
def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text!r}")
    return v


def nonneg(text: str) -> float:
    v = _float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text!r}")
    return v


def positive(text: str) -> float:
    v = _float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text!r}")
    return v


def probability(text: str) -> float:
    v = _float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text!r}")
    return v


def squeeze_fraction(text: str) -> float:
    v = _float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text!r}")
    return v


def count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text!r}")
    return v


def seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return v


def grid_spec(text: str) -> tuple[float, float, int]:
    """``lo:hi:n`` with lo <= hi and n >= 1."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi or n < 1:
        raise argparse.ArgumentTypeError(f"need finite lo <= hi and n >= 1, got {text!r}")
    if lo < 0:
        raise argparse.ArgumentTypeError(f"grid values must be >= 0, got {text!r}")
    return lo, hi, n


def expand_grid(spec: tuple[float, float, int], log: bool, flag: str) -> np.ndarray:
    lo, hi, n = spec
    if log:
        if lo <= 0:
            raise UsageError(f"{flag}: a logarithmic grid needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def fmt(x: float) -> str:
    return f"{x:.9g}"


def write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(output: Path, args: argparse.Namespace, started: float, outputs: list[Path]) -> Path:
    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "subcommand": args.command,
        "parameters": json.loads(json.dumps(params, default=str)),
        "version": __version__,
        "outputs": [str(p) for p in outputs],
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_clock_s": time.time() - started,
    }
    path = output.with_name(output.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _scenario_args(p: argparse.ArgumentParser, scenarios=("qq", "cq", "dw")) -> None:
    p.add_argument("--modulation", choices=("ook", "bpsk"), required=True)
    p.add_argument("--scenario", choices=scenarios, required=True)
    p.add_argument("--delta", type=nonneg, default=DetectorNoise().delta,
                   help="mean stray-light photons per pulse at the photon counter")
    p.add_argument("--p-dark", type=probability, default=DetectorNoise().p_dark)
    p.add_argument("--bpsk-eve-exponent", type=positive, default=BPSK_DECOY_EVE_EXPONENT,
                   help="Eve's BPSK squared overlap is exp(-k * gamma * n_bob) in CQ/DW")


def _spec(args: argparse.Namespace, n_bob: float = 1.0, gamma: float = 0.0) -> ScenarioSpec:
    return ScenarioSpec(args.modulation, args.scenario, PhotonBudget(n_bob, gamma),
                        DetectorNoise(args.p_dark, args.delta),
                        use_decoys=not getattr(args, "no_decoys", False),
                        bpsk_eve_exponent=args.bpsk_eve_exponent,
                        holevo=getattr(args, "holevo", "prior_free"))


def result_dict(res: RateResult) -> dict:
    # a non-positive rate means the protocol must abort; the signed value is kept
    secure = res.rate > 0.0
    return {
        "rate": res.rate,
        "rate_display": res.rate if secure else 0.0,
        "secure": secure,
        "note": "" if secure else "not secure",
        "policy": asdict(res.policy_star),
        "i_bob": res.i_bob,
        "i_eve": res.i_eve_or_holevo,
        "degraded": res.degraded,
        "converged": res.converged,
        "n_bob": res.n_bob,
        "gamma": res.gamma,
    }


def _emit_json(args: argparse.Namespace, payload: dict, started: float) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        write_manifest(out, args, started, [out])


def cmd_capacity(args: argparse.Namespace) -> int:
    started = time.time()
    spec = _spec(args, args.n_bob, args.gamma)
    if args.optimize_n:
        n_grid = expand_grid(args.n_grid, True, "--n-grid") if args.n_grid else None
        opt = optimal_photon_number(spec, n_grid=n_grid)
        payload = result_dict(opt.result) | {"n_star": opt.n_star}
    else:
        payload = result_dict(optimize_decoy(spec))
    _emit_json(args, payload, started)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    started = time.time()
    gammas = expand_grid(args.gamma_grid, False, "--gamma-grid")
    ns = expand_grid(args.n_grid, args.log_n, "--n-grid")
    rows = sweep(_spec(args), gammas, ns, workers=args.workers)
    out = Path(args.out)
    write_csv(out, SWEEP_COLUMNS, ([getattr(r, c) for c in SWEEP_COLUMNS] for r in rows))
    write_manifest(out, args, started, [out])
    return EXIT_OK


def _link_params(args: argparse.Namespace) -> LinkParams:
    p = load_link_config(args.config) if args.config else LinkParams()
    if args.gamma is not None:
        p = replace(p, gamma=args.gamma)
    return p


def cmd_link(args: argparse.Namespace) -> int:
    started = time.time()
    p = _link_params(args)
    ranges = expand_grid(args.range_grid, args.log_range, "--range-grid")
    if ranges[0] <= 0:
        raise UsageError("--range-grid: ranges must be > 0")
    rows = required_transmit(p, args.n_b_star, ranges)
    design = design_link(p, args.n_b_star)
    out = Path(args.out)
    write_csv(out, CSV_COLUMNS, ((r.range_m, r.n_t, r.power_w, r.eta, r.slm) for r in rows))
    summary = out.with_suffix(".design.json")
    payload = {"params": asdict(p), "n_b_star": args.n_b_star, "design": asdict(design)}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    summary.write_text(text)
    sys.stdout.write(text)
    write_manifest(out, args, started, [out, summary])
    return EXIT_OK


def cmd_squeezed(args: argparse.Namespace) -> int:
    started = time.time()
    gammas = expand_grid(args.gamma_grid, False, "--gamma-grid")
    ns = expand_grid(args.n_grid, args.log_n, "--n-grid")
    rows = []
    for g in gammas:
        for n in ns:
            coh, sq, rel = squeezing_gain(args.modulation, float(n), float(g), args.xi)
            rows.append((g, n, coh, sq, rel))
    out = Path(args.out)
    write_csv(out, SQUEEZED_COLUMNS, rows)
    write_manifest(out, args, started, [out])
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    spec = _spec(args, args.n_bob, args.gamma)
    try:
        policy = DecoyPolicy(args.a, args.b, args.q_v0)
        cfg = SimConfig(spec, policy, args.samples, args.seed, args.shards)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = simulate(cfg)
    _emit_json(args, report.to_dict(), started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decoy-wiretap",
                                     description="Secrecy rates of binary optical wiretap channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="optimised secrecy rate at one operating point")
    _scenario_args(p)
    p.add_argument("--gamma", type=nonneg, required=True)
    p.add_argument("--n-bob", type=nonneg, default=1.0)
    p.add_argument("--no-decoys", action="store_true")
    p.add_argument("--holevo", choices=HOLEVO_MODES, default="prior_free")
    p.add_argument("--optimize-n", action="store_true", help="also maximise over n_bob")
    p.add_argument("--n-grid", type=grid_spec, help="log grid for --optimize-n (default 0.01:10:60)")
    p.add_argument("--out", help="also write the JSON here")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("sweep", help="rate surface over gamma x n_bob, as CSV")
    _scenario_args(p)
    p.add_argument("--gamma-grid", type=grid_spec, required=True)
    p.add_argument("--n-grid", type=grid_spec, required=True)
    p.add_argument("--log-n", action="store_true")
    p.add_argument("--no-decoys", action="store_true")
    p.add_argument("--holevo", choices=HOLEVO_MODES, default="prior_free")
    p.add_argument("--workers", type=count, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("link", help="link budget and required transmit power versus range")
    p.add_argument("--config", help="key = value file; defaults to the built-in study case")
    p.add_argument("--range-grid", type=grid_spec, default=(1e5, 5e6, 50), help="metres, lo:hi:n")
    p.add_argument("--log-range", action="store_true")
    p.add_argument("--n-b-star", type=positive, default=1.0)
    p.add_argument("--gamma", type=nonneg)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("squeezed", help="coherent versus squeezed QQ rates, as CSV")
    p.add_argument("--modulation", choices=("ook", "bpsk"), default="bpsk")
    p.add_argument("--xi", type=squeeze_fraction, default=0.5)
    p.add_argument("--gamma-grid", type=grid_spec, required=True)
    p.add_argument("--n-grid", type=grid_spec, required=True)
    p.add_argument("--log-n", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_squeezed)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of Bob's and Eve's channels")
    _scenario_args(p, ("qq", "cq"))
    p.add_argument("--gamma", type=nonneg, required=True)
    p.add_argument("--n-bob", type=nonneg, default=1.0)
    p.add_argument("--a", type=probability, default=0.0)
    p.add_argument("--b", type=probability, default=1.0)
    p.add_argument("--q-v0", type=probability, default=0.5)
    p.add_argument("--samples", type=count, default=10 ** 6)
    p.add_argument("--seed", type=seed, default=0)
    p.add_argument("--shards", type=count, default=1)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, UnsupportedScenario) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TruncationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"{parser.prog} {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
