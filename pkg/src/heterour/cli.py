"""Command-line interface.

Exit codes: 0 success, 2 unreadable input or invalid flags, 3 a statistical
precondition failed. Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
from pathlib import Path
import sys
from typing import Any, Optional, Sequence

from heterour.bootstrap import abb_test
from heterour.config import StatKind, TestConfig
from heterour.core import DetKind, DeterministicSpec, lad_fit, gls_adjust
from heterour.dgp import PRESETS, DgpSpec, Innovation, VolCase, mc_size_power, simulate_series
from heterour.exceptions import HeterourError
from heterour.io import CsvFormatError, read_series, volatility_svg, write_series, write_volatility
from heterour.volatility import KernelSpec, cv_bandwidth, estimate_volatility

logger = logging.getLogger("heterour")

EXIT_USAGE = 2
EXIT_STATISTICAL = 3
MC_COLUMNS = ("vol_case", "sigma1", "innovation", "T", "c", "stat", "rate")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise CliError(EXIT_USAGE, "usage", message)


def _bandwidth(text: str):
    return "auto" if text == "auto" else float(text)


def _block(text: str):
    return "auto" if text == "auto" else int(text)


def _add_tuning(p: argparse.ArgumentParser) -> None:
    p.add_argument("--deterministic", choices=[k.value for k in DetKind], default="none")
    p.add_argument("--c-bar", type=float, default=None, help="quasi-differencing constant")
    p.add_argument("--bandwidth", type=_bandwidth, default="auto")
    p.add_argument("--kernel", choices=[k.value for k in KernelSpec], default="gaussian")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = _Parser(prog="heterour", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", parents=[common], help="run the bootstrap unit root test on a CSV series")
    t.add_argument("--input", required=True)
    _add_tuning(t)
    t.add_argument("--stat", choices=[k.value for k in StatKind], default="all")
    t.add_argument("--B", type=int, default=499)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--block", type=_block, default="auto")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--lag-p", type=int, default=0)
    t.add_argument("--threads", type=int, default=None)
    t.add_argument("--output", default=None, help="write JSON here instead of stdout")
    t.add_argument("--emit-volatility", default=None)
    t.add_argument("--emit-svg", default=None)

    v = sub.add_parser("volatility", parents=[common], help="export the estimated volatility path")
    v.add_argument("--input", required=True)
    _add_tuning(v)
    v.add_argument("--out", required=True)
    v.add_argument("--svg", default=None)

    s = sub.add_parser("simulate", parents=[common], help="simulate a series from the Monte Carlo design")
    s.add_argument("--c", type=float, default=0.0)
    s.add_argument("--preset", choices=sorted(PRESETS), default=None)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--phi", type=float, default=None)
    s.add_argument("--vol", choices=[k.value for k in VolCase], default="constant")
    s.add_argument("--sigma0", type=float, default=1.0)
    s.add_argument("--sigma1", type=float, default=1.0)
    s.add_argument("--innov", choices=[k.value for k in Innovation], default="normal")
    s.add_argument("--T", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    m = sub.add_parser("mc", parents=[common], help="run a Monte Carlo size/power experiment")
    m.add_argument("--spec", required=True, help="experiment file (.toml or .json)")
    m.add_argument("--out", required=True)
    m.add_argument("--cache-dir", default=None, help="per-cell result cache (default: next to the experiment file)")
    m.add_argument("--threads", type=int, default=None)
    return parser


def _det_spec(args) -> DeterministicSpec:
    return DeterministicSpec(DetKind(args.deterministic), args.c_bar)


def _load_series(path: str):
    try:
        return read_series(path)
    except CsvFormatError as exc:
        raise CliError(EXIT_USAGE, "parse", str(exc)) from None


def cmd_test(args) -> int:
    series = _load_series(args.input)
    try:
        cfg = TestConfig(
            deterministic=_det_spec(args),
            stat=args.stat,
            B=args.B,
            alpha=args.alpha,
            bandwidth=args.bandwidth,
            block=args.block,
            kernel=args.kernel,
            seed=args.seed,
            lag_p=args.lag_p,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "config", str(exc)) from None
    result = abb_test(series, cfg, threads=args.threads)
    text = result.to_json()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.emit_volatility:
        write_volatility(args.emit_volatility, result.sigma_path, result.first_index)
    if args.emit_svg:
        Path(args.emit_svg).write_text(volatility_svg(result.sigma_path, result.first_index))
    return 0


def cmd_volatility(args) -> int:
    series = _load_series(args.input)
    spec = _det_spec(args)
    adjusted = gls_adjust(series, spec).adjusted
    fit = lad_fit(adjusted, spec.lag_start)
    abs_resid = abs(fit.residuals)
    h = cv_bandwidth(abs_resid, args.kernel) if args.bandwidth == "auto" else args.bandwidth
    est = estimate_volatility(abs_resid, h, args.kernel)
    write_volatility(args.out, est.sigma_hat, spec.lag_start)
    if args.svg:
        Path(args.svg).write_text(volatility_svg(est.sigma_hat, spec.lag_start))
    logger.info("bandwidth %s", h)
    return 0


def cmd_simulate(args) -> int:
    theta, phi = PRESETS[args.preset] if args.preset else (0.0, 0.0)
    theta = theta if args.theta is None else args.theta
    phi = phi if args.phi is None else args.phi
    try:
        spec = DgpSpec(
            c=args.c,
            theta=theta,
            phi=phi,
            innovation=args.innov,
            vol_case=args.vol,
            sigma0=args.sigma0,
            sigma1=args.sigma1,
            T=args.T,
        )
        if args.seed < 0:
            raise ValueError("seed must be nonnegative")
    except ValueError as exc:
        raise CliError(EXIT_USAGE, "config", str(exc)) from None
    write_series(args.out, simulate_series(spec, args.seed).values)
    return 0


def _load_experiment(path: str) -> dict[str, Any]:
    p = Path(path)
    try:
        raw = p.read_bytes()
        if p.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_USAGE, "parse", f"cannot read experiment spec: {exc}") from None


def experiment_cells(exp: dict[str, Any]) -> tuple[list[DgpSpec], TestConfig]:
    """Expand an experiment description into DGP cells and one test config."""
    grid = exp.get("grid", {})
    axes = {
        "vol_case": grid.get("vol_case", ["one-shift"]),
        "sigma1": grid.get("sigma1", [5.0]),
        "innovation": grid.get("innovation", ["normal"]),
        "T": grid.get("T", [100]),
        "c": grid.get("c", [0.0]),
    }
    theta, phi = PRESETS[exp["preset"]] if "preset" in exp else (0.0, 0.0)
    theta = exp.get("theta", theta)
    phi = exp.get("phi", phi)
    cells = [
        DgpSpec(
            c=c,
            theta=theta,
            phi=phi,
            innovation=innov,
            vol_case=vol,
            sigma0=exp.get("sigma0", 1.0),
            sigma1=s1,
            T=T,
        )
        for vol, s1, innov, T, c in itertools.product(*axes.values())
    ]
    test = dict(exp.get("test", {}))
    det = DeterministicSpec(DetKind(test.pop("deterministic", "none")), test.pop("c_bar", None))
    test.setdefault("stat", "lad")
    cfg = TestConfig(deterministic=det, **test)
    return cells, cfg


def _cell_key(spec: DgpSpec, cfg: TestConfig, n_reps: int, alpha: float, seed: int) -> str:
    payload = json.dumps(
        {"spec": spec.to_dict(), "test": cfg.to_dict(), "n_reps": n_reps, "alpha": alpha},
        sort_keys=True,
    )
    return f"{hashlib.sha256(payload.encode()).hexdigest()[:32]}-{seed}"


def run_experiment(
    exp: dict[str, Any], cache_dir: Optional[Path] = None, threads: Optional[int] = None
) -> str:
    """Run every grid cell (reusing cached cells) and return the CSV text."""
    try:
        cells, cfg = experiment_cells(exp)
        n_reps = int(exp.get("n_reps", 100))
        alpha = float(exp.get("alpha", 0.05))
        seed = int(exp.get("seed", 0))
    except (ValueError, TypeError, KeyError) as exc:
        raise CliError(EXIT_USAGE, "config", f"invalid experiment spec: {exc}") from None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MC_COLUMNS)
    for spec in cells:
        key = _cell_key(spec, cfg, n_reps, alpha, seed)
        cached = cache_dir / f"{key}.json" if cache_dir is not None else None
        if cached is not None and cached.exists():
            logger.info("cache hit %s", key)
            rates = json.loads(cached.read_text())["rates"]
        else:
            logger.info("simulating cell %s", key)
            rates = mc_size_power(spec, cfg, n_reps, alpha, seed, threads=threads).rejection_rate
            if cached is not None:
                cache_dir.mkdir(parents=True, exist_ok=True)
                cached.write_text(json.dumps({"spec": spec.to_dict(), "rates": rates}))
        for stat in cfg.stat.names:
            writer.writerow(
                (spec.vol_case.value, repr(spec.sigma1), spec.innovation.value, spec.T,
                 repr(float(spec.c)), stat, repr(rates[stat]))
            )
    return buf.getvalue()


def cmd_mc(args) -> int:
    exp = _load_experiment(args.spec)
    cache = Path(args.cache_dir) if args.cache_dir else Path(args.spec).parent / ".heterour-cache"
    Path(args.out).write_text(run_experiment(exp, cache, args.threads))
    return 0


COMMANDS = {"test": cmd_test, "volatility": cmd_volatility, "simulate": cmd_simulate, "mc": cmd_mc}


def _report(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(message)s",
        )
        return COMMANDS[args.command](args)
    except CliError as exc:
        _report(exc.kind, str(exc))
        return exc.code
    except HeterourError as exc:
        _report(type(exc).__name__, str(exc))
        return EXIT_STATISTICAL


if __name__ == "__main__":
    sys.exit(main())
