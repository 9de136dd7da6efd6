"""Command-line front end: ``hbfault {tables,attack,surface,auth-sim,leakage}``.

Flags override values from ``--config FILE`` (``key = value`` lines), which
override built-in defaults. Environment variables are never read. Data goes
to stdout or ``--out``; diagnostics go to stderr.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import MODES, ExperimentSpec, run_experiment
from .hbcore import ProtocolParams

log = logging.getLogger("hbfault")

DEFAULTS = {
    "k": 32,
    "r": 40,
    "eta": 0.125,
    "q": 19,
    "trials": 100,
    "seed": 0,
    "format": "csv",
    "out": None,
    "paper_match": False,
    "jobs": 1,
    "eta_axis": "0.05,0.1,0.125,0.15,0.2,0.25,0.3,0.35,0.4,0.45",
    "r_axis": "10,20,40,60,80,100,150,200",
}

_CONVERTERS = {
    "k": int, "r": int, "eta": float, "q": int, "trials": int, "seed": int, "jobs": int,
    "format": str, "out": str, "eta_axis": str, "r_axis": str,
    "paper_match": lambda v: str(v).strip().lower() in ("1", "true", "yes", "on"),
}


class UsageError(Exception):
    pass


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys are allowed."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    # defaults are None so that config-file values can fill the gaps afterwards
    shared.add_argument("--k", type=int, help="key length per key half (default 32)")
    shared.add_argument("--r", type=int, help="rounds per session (default 40)")
    shared.add_argument("--eta", type=float, help="tag noise level (default 0.125)")
    shared.add_argument("--q", type=int, help="sessions per key bit (default 19)")
    shared.add_argument("--trials", type=int, help="Monte Carlo repetitions (default 100)")
    shared.add_argument("--seed", type=int, help="64-bit master seed (default 0)")
    shared.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    shared.add_argument("--out", metavar="PATH", help="write data here instead of stdout")
    shared.add_argument("--paper-match", action="store_true", default=None,
                        help="4-decimal rendering; tables use the published parameter sets")
    shared.add_argument("--jobs", type=int, help="worker processes for Monte Carlo modes")
    shared.add_argument("--config", metavar="FILE", help="key = value defaults file")
    shared.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    parser = argparse.ArgumentParser(prog="hbfault", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser("tables", parents=[shared],
                   help="error/leakage tables; passing --eta, --r or --q gives a single custom row")
    sub.add_parser("attack", parents=[shared], help="Monte Carlo key-extraction campaign")
    surf = sub.add_parser("surface", parents=[shared], help="grid of single-query error p(eta, r)")
    surf.add_argument("--eta-axis", help="comma-separated noise levels")
    surf.add_argument("--r-axis", help="comma-separated round counts")
    sub.add_parser("auth-sim", parents=[shared], help="honest / corrupted session calibration")
    sub.add_parser("leakage", parents=[shared], help="one leakage row for (eta, r, q)")
    assert set(sub.choices) == set(MODES)
    return parser


def _axis(text: str, conv) -> tuple:
    try:
        return tuple(conv(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise UsageError(f"bad axis {text!r}: {exc}") from None


def resolve(args: argparse.Namespace) -> ExperimentSpec:
    explicit = {key for key in ("eta", "r", "q") if getattr(args, key) is not None}
    merged = dict(DEFAULTS)
    if args.config:
        try:
            merged.update(read_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    try:
        params = ProtocolParams(k=merged["k"], r=merged["r"], eta=merged["eta"])
        spec = ExperimentSpec(
            mode=args.mode,
            params=params,
            q=merged["q"],
            trials=merged["trials"],
            seed=merged["seed"],
            output_format=merged["format"],
            output_path=merged["out"],
            paper_match=bool(merged["paper_match"]),
            jobs=max(1, merged["jobs"]),
            eta_axis=_axis(merged["eta_axis"], float),
            r_axis=_axis(merged["r_axis"], int),
            custom_cell=bool(explicit) and not merged["paper_match"],
        )
        if spec.mode == "surface":
            for eta in spec.eta_axis:
                if not 0 < eta < 0.5:
                    raise ValueError(f"eta axis value {eta} outside (0, 1/2)")
            for r in spec.r_axis:
                if r < 1:
                    raise ValueError(f"r axis value {r} must be positive")
        if spec.mode in ("tables", "leakage", "surface") and not 0 < params.eta:
            raise ValueError("analytic modes need 0 < eta < 1/2")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        spec = resolve(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hbfault: error: {exc}", file=sys.stderr)
        return 2
    if spec.mode in ("attack", "leakage") and spec.q % 2 == 0:
        print(f"hbfault: warning: even q={spec.q}: ties are decided as 0; an odd q is recommended",
              file=sys.stderr)
    try:
        text = run_experiment(spec)
        if spec.output_path:
            Path(spec.output_path).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(text)
    except (OSError, ValueError) as exc:
        print(f"hbfault: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
