"""Command-line front end.

Exit codes: 0 success, 1 internal or numerical failure, 2 usage or
precondition violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import (
    DegenerateOffsetError,
    InvalidIndexError,
    InvalidInputError,
    ParseError,
    ResolutionError,
    SchattenLabError,
    SeparationError,
    ShapeMismatchError,
)

log = logging.getLogger("schattenlab")

USAGE_ERRORS = (
    InvalidInputError,
    InvalidIndexError,
    DegenerateOffsetError,
    ParseError,
    SeparationError,
    ShapeMismatchError,
    ResolutionError,
    FileNotFoundError,
    IsADirectoryError,
)


class UsageError(Exception):
    pass


# -- RunConfig ---------------------------------------------------------------------


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class RunConfig:
    """Resolved command invocation; text form is 'key = <json value>' lines with '#' comments."""

    command: str
    params: dict = field(default_factory=dict)
    input: str | None = None
    output: str | None = None
    format: str = "table"

    def to_text(self) -> str:
        lines = [f"command = {json.dumps(self.command)}"]
        if self.input is not None:
            lines.append(f"input = {json.dumps(self.input)}")
        if self.output is not None:
            lines.append(f"output = {json.dumps(self.output)}")
        lines.append(f"format = {json.dumps(self.format)}")
        for k in sorted(self.params):
            lines.append(f"{k} = {json.dumps(self.params[k])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, command: str | None = None) -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", lineno)
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ParseError("empty key", lineno)
            values[key] = _parse_value(value)
        cmd = values.pop("command", command)
        if cmd is None:
            raise ParseError("config names no command")
        return cls(
            command=cmd,
            input=values.pop("input", None),
            output=values.pop("output", None),
            format=values.pop("format", "table"),
            params=values,
        )


# -- argument parsing ----------------------------------------------------------------


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(sub):
    sub.add_argument("--config", help="key = value config file")
    sub.add_argument("--out", help="output directory or file")
    sub.add_argument("--format", choices=("table", "record"), default=None)
    sub.add_argument("--threads", type=int, default=None, help="parallelism cap")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--dry-run", action="store_true", help="print the resolved config and stop")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schattenlab", description="Schatten-class Schur multiplier and Besov laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("norms", help="Schatten and weak norms of a matrix file")
    s.add_argument("matrix", nargs="?")
    s.add_argument("--p", type=_float_list, default=None, help="comma-separated exponents")
    _common(s)

    s = subs.add_parser("mp", help="certified lower bound on the m_p Schur multiplier norm")
    s.add_argument("matrix", nargs="?")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--restarts", type=int, default=None)
    _common(s)

    s = subs.add_parser("cut", help="cut projection certificate")
    s.add_argument("matrix", nargs="?")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--n", type=int, default=None)
    _common(s)

    s = subs.add_parser("besov", help="wavelet Besov seminorm of a registered function")
    s.add_argument("--function", default=None)
    s.add_argument("--s", type=float, default=None)
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--q", type=float, default=None)
    s.add_argument("--wavelet-N", dest="wavelet_N", type=int, default=None)
    s.add_argument("--j-min", dest="j_min", type=int, default=None)
    s.add_argument("--j-max", dest="j_max", type=int, default=None)
    s.add_argument("--box", type=_float_list, default=None, help="a,b (write --box=-4,4 when a is negative)")
    _common(s)

    s = subs.add_parser("experiment", help="run a named experiment")
    s.add_argument("name", nargs="?")
    s.add_argument("--function", default=None)
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--dims", type=_int_list, default=None)
    s.add_argument("--n-list", dest="n_list", type=_int_list, default=None)
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--spectrum-law", dest="spectrum_law", default=None)
    s.add_argument("--perturbation-law", dest="perturbation_law", default=None)
    s.add_argument("--scale", type=float, default=None)
    s.add_argument("--rank", type=int, default=None)
    _common(s)

    s = subs.add_parser("replay", help="re-run a report bundle and compare per-trial records")
    s.add_argument("bundle", nargs="?")
    _common(s)
    return parser


_NON_PARAMS = {"command", "config", "out", "format", "dry_run", "verbose", "matrix", "bundle", "name"}


def resolve(args) -> RunConfig:
    """Config file values overridden by explicit flags."""
    if args.config:
        cfg = RunConfig.from_text(Path(args.config).read_text(encoding="utf-8"), args.command)
        if cfg.command != args.command:
            raise UsageError(f"config is for command {cfg.command!r}, not {args.command!r}")
    else:
        cfg = RunConfig(args.command)
    for key, value in vars(args).items():
        if key in _NON_PARAMS or value is None:
            continue
        cfg.params[key] = value
    for attr in ("matrix", "bundle"):
        if getattr(args, attr, None):
            cfg.input = getattr(args, attr)
    if getattr(args, "name", None):
        cfg.params["name"] = args.name
    if args.out:
        cfg.output = args.out
    if args.format:
        cfg.format = args.format
    return cfg


# -- commands -------------------------------------------------------------------------


def _need(cfg: RunConfig, key: str):
    if key not in cfg.params or cfg.params[key] is None:
        raise UsageError(f"{cfg.command}: missing parameter {key!r}")
    return cfg.params[key]


def _need_input(cfg):
    if not cfg.input:
        raise UsageError(f"{cfg.command}: no input file given")
    return cfg.input


def _emit(cfg: RunConfig, table: str, record: dict, out):
    text = table if cfg.format == "table" else json.dumps(record, sort_keys=True, indent=2) + "\n"
    if cfg.output and cfg.command not in ("experiment",):
        Path(cfg.output).write_text(text, encoding="utf-8")
    out.write(text)


def cmd_norms(cfg: RunConfig, out):
    from .matio import load_matrix
    from .spectral import schatten_norm, weak_norm

    M = load_matrix(_need_input(cfg))
    ps = cfg.params.get("p") or [1.0]
    if not isinstance(ps, list):
        ps = [ps]
    rows = []
    for p in ps:
        p = float(p)
        if not p > 0:
            raise UsageError(f"exponent must be positive, got {p}")
        weak = weak_norm(M, p) if math.isfinite(p) else None
        rows.append({"p": p, "schatten": schatten_norm(M, p), "weak": weak})
    lines = [f"{'p':>10} {'schatten':>24} {'weak':>24}"]
    for r in rows:
        weak = "-" if r["weak"] is None else repr(r["weak"])
        lines.append(f"{r['p']!r:>10} {r['schatten']!r:>24} {weak:>24}")
    _emit(cfg, "\n".join(lines) + "\n", {"matrix": cfg.input, "rows": rows}, out)


def cmd_mp(cfg: RunConfig, out):
    from .matio import load_matrix
    from .schur import OptimizerConfig, mp_lower_bound

    A = load_matrix(_need_input(cfg))
    p = float(_need(cfg, "p"))
    oc = OptimizerConfig(restarts=int(cfg.params.get("restarts", 32)), seed=int(cfg.params.get("seed", 0)))
    est = mp_lower_bound(A, p, oc)
    table = f"m_p lower bound (p = {p!r}, restarts = {oc.restarts}, seed = {oc.seed}): {est.value!r}\n"
    if cfg.format == "record":
        text = est.to_text()
        if cfg.output:
            Path(cfg.output).write_text(text, encoding="utf-8")
        out.write(text)
    else:
        _emit(cfg, table, {}, out)


def cmd_cut(cfg: RunConfig, out):
    from .matio import load_matrix
    from .spectral import cut_projection

    X = load_matrix(_need_input(cfg))
    cert = cut_projection(X, int(_need(cfg, "n")), float(_need(cfg, "p")))
    rec = {"n": cert.n, "p": cert.p, "lhs": cert.lhs, "rhs": cert.rhs, "holds": cert.holds, "complement_rank": cert.complement_rank}
    table = f"cut n = {cert.n}, p = {cert.p!r}: lhs = {cert.lhs!r} <= rhs = {cert.rhs!r}: {cert.holds}\n"
    _emit(cfg, table, rec, out)


def cmd_besov(cfg: RunConfig, out):
    from .besov import besov_seminorm_wavelet
    from .experiments import get_function
    from .wavelets import daubechies_system, wavelet_coefficients

    spec = get_function(cfg.params.get("function", "bump"))
    s, p, q = float(_need(cfg, "s")), float(_need(cfg, "p")), float(_need(cfg, "q"))
    N = int(cfg.params.get("wavelet_N", 10))
    j_range = (int(cfg.params.get("j_min", -6)), int(cfg.params.get("j_max", 8)))
    box = cfg.params.get("box") or [-1.0, 1.0]
    coeffs = wavelet_coefficients(spec.f, daubechies_system(N), j_range, tuple(box))
    rep = besov_seminorm_wavelet(coeffs, s, p, q)
    rec = {"function": spec.name, "s": s, "p": p, "q": q, "N": N, **rep.to_record()}
    table = f"B^{s!r}_{{{p!r},{q!r}}} seminorm of {spec.name}: {rep.value!r} (levels {j_range}, tail share {rep.tail_share:.3g})\n"
    _emit(cfg, table, rec, out)


_ENSEMBLE_EXPERIMENTS = ("lipschitz-ratio", "holder-weak", "submajorization")
_EXPERIMENT_DEFAULTS = {
    "toeplitz-growth": {"p": 0.5, "epsilon": 0.5, "n_list": [4, 8, 16, 32, 64], "m": 1024},
    "periodic": {"function": "exp2pi", "p": 0.75, "epsilon": 0.25, "n_list": [8, 16, 32, 64], "restarts": 8, "seed": 0},
    "periodic-commutator": {"function": "exp2pi", "p": 0.5, "epsilon": 0.25, "n_list": [8, 16, 32], "restarts": 8, "seed": 0},
    "lipschitz-ratio": {"function": "square", "p": 1.0, "dims": [16, 32, 64], "trials": 200, "seed": 0},
    "holder-weak": {
        "function": "sqrtabs",
        "alpha": 0.5,
        "p": 0.5,
        "dims": [16, 32, 64],
        "trials": 200,
        "seed": 0,
        "spectrum_law": "dyadic",
        "scale": 1.0,
    },
    "submajorization": {"function": "square", "p": 0.75, "dims": [32, 64, 128], "trials": 50, "seed": 0},
}


def _write_report(report, out_dir: Path, stem: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out_dir / f"{stem}.csv").write_text(report.to_csv(), encoding="utf-8")
    (out_dir / f"{stem}.records.jsonl").write_bytes(report.records_bytes())


def cmd_experiment(cfg: RunConfig, out):
    from .experiments import EXPERIMENTS, run_experiment

    name = cfg.params.get("name")
    if not name:
        raise UsageError(f"experiment name required; available: {', '.join(EXPERIMENTS)}")
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; available: {', '.join(EXPERIMENTS)}")
    params = dict(_EXPERIMENT_DEFAULTS.get(name, {}))
    params.update({k: v for k, v in cfg.params.items() if k not in ("name", "threads")})
    threads = int(cfg.params.get("threads", 1))
    reports = []
    if name in _ENSEMBLE_EXPERIMENTS:
        dims = params.pop("dims")
        dims = dims if isinstance(dims, list) else [dims]
        for d in dims:
            reports.append((f"{name}-d{d}", run_experiment(name, {**params, "dim": d}, threads=threads)))
    else:
        reports.append((name, run_experiment(name, params, threads=threads)))
    if cfg.output:
        for stem, rep in reports:
            _write_report(rep, Path(cfg.output), stem)
    if cfg.format == "record":
        out.write(json.dumps([json.loads(rep.to_json()) for _, rep in reports], sort_keys=True, indent=2) + "\n")
    else:
        for _, rep in reports:
            out.write(rep.to_table())
        if name in _ENSEMBLE_EXPERIMENTS and len(reports) > 1:
            key = {"lipschitz-ratio": "max_rho", "holder-weak": "max_w", "submajorization": "empirical_constant"}[name]
            vals = [rep.summary[key] for _, rep in reports]
            out.write(f"drift of {key} across dims: {max(vals) / min(vals) - 1:.4f}\n")


def cmd_replay(cfg: RunConfig, out):
    from .experiments import replay

    bundle = Path(_need_input(cfg)).read_text(encoding="utf-8")
    try:
        data = json.loads(bundle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bundle is not JSON: {exc.msg}", exc.lineno) from None
    report, same = replay(data, threads=int(cfg.params.get("threads", 1)))
    out.write(f"replay of {data['experiment']}: {'identical' if same else 'DIFFERENT'} per-trial records\n")
    return 0 if same else 1


COMMANDS = {
    "norms": cmd_norms,
    "mp": cmd_mp,
    "cut": cmd_cut,
    "besov": cmd_besov,
    "experiment": cmd_experiment,
    "replay": cmd_replay,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if cfg.command == "experiment" and cfg.params.get("name") in _EXPERIMENT_DEFAULTS:
            cfg.params = {**_EXPERIMENT_DEFAULTS[cfg.params["name"]], **cfg.params}
        if args.dry_run:
            out.write(cfg.to_text())
            return 0
        code = COMMANDS[cfg.command](cfg, out)
        return int(code or 0)
    except UsageError as exc:
        print(f"schattenlab: error: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"schattenlab: error: {exc}", file=sys.stderr)
        return 2
    except (SchattenLabError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"schattenlab: failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
