"""Command-line interface: ``berkson-kde <subcommand> [options]``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 when
a numerical procedure fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from .bandwidth import (
    asymptotic_bandwidth,
    optimal_scalar_bandwidth,
    rule_of_thumb_hy_gaussian,
    silverman_hx,
)
from .errors import (
    BerksonError,
    ConfigError,
    CsvParseError,
    EmptySampleError,
    NumericalError,
    RecordRejectedError,
)
from .estimator import default_grid, evaluate_estimator
from .experiments import (
    ERROR_VARIANCES,
    REFERENCE_TABLES,
    DensityCatalogEntry,
    get_density,
    no2_pipeline,
    ratio_curve,
    ratio_table,
    synthetic_no2_records,
)
from .gaussmix import GaussianMixture
from .mise_exact import exact_mise, mise_for_fx
from .model import BerksonModel
from .montecarlo import RULES, quantile_bands
from ._parallel import ENV_THREADS, resolve_threads

TABLE_COLUMNS = ("density", "sigma_eps2", "n", "h_y", "h_x", "mise_hy", "mise_hx",
                 "mise_zero", "ratio_zero", "ratio_hx", "display")


def fmt(x) -> str:
    """17 significant digits: enough to round-trip a double."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


# -- configuration ------------------------------------------------------------

@dataclass
class RunConfig:
    """JSON run configuration; command-line flags override individual fields.

    ``densities`` entries are catalog names or inline mixtures
    ``{"name": ..., "weights": [...], "means": [[...]], "covariances": [[[...]]]}``.
    """

    densities: list = field(default_factory=list)
    error_variances: list = field(default_factory=lambda: list(ERROR_VARIANCES))
    sample_sizes: Optional[list] = None
    seed: int = 0
    quantiles: list = field(default_factory=lambda: [0.1, 0.9])
    replicates: int = 100
    threads: Optional[int] = None
    table: Optional[str] = None

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**raw)
        try:
            cfg.validate()
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"{path}: malformed field ({exc})") from None
        return cfg

    def validate(self) -> None:
        if self.table is not None and self.table not in REFERENCE_TABLES:
            raise ConfigError(f"unknown table {self.table!r}; expected one of {sorted(REFERENCE_TABLES)}")
        if not all(isinstance(v, (int, float)) and v > 0 for v in self.error_variances):
            raise ConfigError("error_variances must be positive numbers")
        if self.sample_sizes is not None and not all(isinstance(v, int) and v >= 1 for v in self.sample_sizes):
            raise ConfigError("sample_sizes must be positive integers")
        if not (isinstance(self.replicates, int) and self.replicates >= 1):
            raise ConfigError("replicates must be a positive integer")
        if len(self.quantiles) != 2 or not 0 <= self.quantiles[0] <= self.quantiles[1] <= 1:
            raise ConfigError("quantiles must be [lo, hi] with 0 <= lo <= hi <= 1")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ConfigError("seed must be a nonnegative integer")
        if self.threads is not None and not (isinstance(self.threads, int) and self.threads >= 1):
            raise ConfigError("threads must be a positive integer")
        self.entries()

    def entries(self) -> list[DensityCatalogEntry]:
        out = []
        for d in self.densities:
            if isinstance(d, str):
                out.append(get_density(d))
            elif isinstance(d, dict):
                out.append(inline_density(d))
            else:
                raise ConfigError(f"density entries must be names or objects, got {d!r}")
        return out


def inline_density(spec: dict) -> DensityCatalogEntry:
    try:
        name = str(spec["name"])
        mix = GaussianMixture.from_arrays(spec["weights"], spec["means"], spec["covariances"])
    except KeyError as exc:
        raise ConfigError(f"inline density is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"inline density {spec.get('name')!r}: {exc}") from None
    return DensityCatalogEntry(name, name, mix)


def effective_threads(flag: Optional[int], cfg: Optional[RunConfig] = None) -> int:
    """``--threads`` beats ``$BERKSON_THREADS``, which beats the config file."""
    if flag is not None:
        return resolve_threads(flag)
    if os.environ.get(ENV_THREADS):
        return resolve_threads(None)
    if cfg is not None and cfg.threads is not None:
        return resolve_threads(cfg.threads)
    return resolve_threads(None)


# -- CSV input -----------------------------------------------------------------

def read_sample_csv(path: str, expect: Optional[str] = None) -> np.ndarray:
    """Read a header-plus-floats CSV into an ``(n, p)`` array.

    The header names the columns ``x1..xp`` (``expect="x"``) or ``wk,wb``
    (``expect="no2"``); with ``expect=None`` either is accepted. Blank lines
    are skipped. Line numbers in errors count the header as line 1.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    rows = [(i, r) for i, r in enumerate(csv.reader(io.StringIO(text)), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError("missing header row", line=1)
    line, header = rows[0]
    names = tuple(c.strip().lower() for c in header)
    xs = tuple(f"x{k}" for k in range(1, len(names) + 1))
    allowed = {"x": [xs], "no2": [("wk", "wb")], None: [xs, ("wk", "wb")]}
    if expect not in allowed:
        raise ConfigError(f"unknown column convention {expect!r}")
    if names not in allowed[expect]:
        raise CsvParseError(f"unexpected header {','.join(names)!r}", line=line)
    data = []
    for row_no, (line, row) in enumerate(rows[1:], start=1):
        if len(row) != len(names):
            raise CsvParseError(f"expected {len(names)} fields, found {len(row)}", line=line)
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise CsvParseError(f"non-numeric field in {','.join(row)!r}", line=line) from None
        if not all(math.isfinite(v) for v in vals):
            raise RecordRejectedError("NaN or infinite value", row=row_no)
        data.append(vals)
    if not data:
        raise EmptySampleError(f"{path} has no data rows")
    return np.array(data, dtype=float)


# -- output --------------------------------------------------------------------

def write_csv(path: Optional[str], header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_tables(args) -> int:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    if args.table:
        cfg.table = args.table
    if args.density:
        cfg.densities = list(args.density)
    if args.sigma_eps2:
        cfg.error_variances = list(args.sigma_eps2)
    if args.n:
        cfg.sample_sizes = list(args.n)
    cfg.validate()
    if cfg.table is not None:
        spec = REFERENCE_TABLES[cfg.table]
        cfg.densities = cfg.densities or list(spec["cells"])
        cfg.sample_sizes = cfg.sample_sizes or [spec["n"]]
    if not cfg.densities:
        raise ConfigError("no densities given; use --table, --density or a config file")
    threads = effective_threads(args.threads, cfg)
    rows = []
    for n in cfg.sample_sizes or [50]:
        for c in ratio_table(cfg.entries(), cfg.error_variances, n, threads=threads):
            a, b = c.display()
            rows.append([c.density, c.sigma_eps2, c.n, c.h_y, c.h_x, c.mise_hy, c.mise_hx, c.mise_zero,
                         c.ratio_zero, c.ratio_hx, f"({a:.2f}, {b:.2f})"])
    write_csv(args.out, TABLE_COLUMNS, rows)
    return 0


def _model_from_args(args, dim1: bool = False) -> tuple[str, BerksonModel]:
    entry = get_density(args.density) if not args.mixture else inline_density(json.loads(args.mixture))
    if dim1 and entry.mixture.dim != 1:
        raise ConfigError(f"{entry.name} is not one-dimensional")
    return entry.slug, BerksonModel.isotropic(entry.mixture, args.sigma_eps2)


def cmd_bandwidth(args) -> int:
    name, model = _model_from_args(args)
    target = args.target
    if target == "y":
        res = optimal_scalar_bandwidth(model, args.n, "Y")
        row = [name, args.sigma_eps2, args.n, res.value, res.objective, int(res.at_boundary)]
        header = ["density", "sigma_eps2", "n", "h_y", "mise", "at_boundary"]
    elif target == "x":
        res = optimal_scalar_bandwidth(model, args.n, "X")
        row = [name, args.sigma_eps2, args.n, res.value, mise_for_fx(model, res.value, args.n),
               exact_mise(model, res.value, args.n)]
        header = ["density", "sigma_eps2", "n", "h_x", "mise_fx", "mise_fy"]
    else:
        h = asymptotic_bandwidth(model, args.n)
        row = [name, args.sigma_eps2, args.n, h, exact_mise(model, h, args.n)]
        header = ["density", "sigma_eps2", "n", "h_star", "mise"]
    write_csv(args.out, header, [row])
    return 0


def cmd_ratio_curve(args) -> int:
    entry = get_density(args.density)
    variances = args.sigma_eps2 or list(ERROR_VARIANCES)
    pts = ratio_curve(entry, variances, args.n or None, threads=effective_threads(args.threads))
    write_csv(args.out, ["sigma_eps2", "n", "h_y", "h_star", "ratio"],
              ([p.sigma_eps2, p.n, p.h_y, p.h_star, p.ratio] for p in pts))
    return 0


def cmd_bands(args) -> int:
    cfg = RunConfig.from_json(args.config) if args.config else None
    name, model = _model_from_args(args, dim1=True)
    q = args.quantiles or (cfg.quantiles if cfg else [0.1, 0.9])
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    reps = args.replicates or (cfg.replicates if cfg else 100)
    res = quantile_bands(model, args.n, reps, args.rule, q[0], q[1], seed, value=args.h,
                         threads=effective_threads(args.threads, cfg))
    mid = 0.5 * (res.lower + res.upper)
    write_csv(args.out, ["y", "value", "lower", "upper", "truth"],
              zip(res.grid, mid, res.lower, res.upper, res.truth))
    return 0


def cmd_estimate(args) -> int:
    x = read_sample_csv(args.sample, "x")
    if x.shape[1] != 1:
        raise ConfigError("estimate writes one-dimensional curves; pass a single x1 column")
    v = x[:, 0]
    n = v.size
    if args.rule == "zero":
        h = 0.0
    elif args.rule == "value":
        if args.h is None:
            raise ConfigError("--rule value needs --h")
        h = args.h
    else:
        if n < 2:
            raise ConfigError("data-driven rules need at least two observations")
        sd = float(np.std(v, ddof=1))
        if args.rule == "hy-rot":
            h = rule_of_thumb_hy_gaussian(sd * sd, args.sigma_eps2, n)
        else:
            q75, q25 = np.percentile(v, [75.0, 25.0])
            h = silverman_hx(sd, float(q75 - q25), n)
    grid = default_grid(v, args.sigma_eps2, h, args.points)
    curve = evaluate_estimator(v, args.sigma_eps2, h, grid, threads=effective_threads(args.threads))
    write_csv(args.out, ["y", "value"], zip(curve.grid, curve.values))
    if args.verbose:
        print(f"h = {h:.6g}, integral = {curve.integral():.8f}", file=sys.stderr)
    return 0


def cmd_no2(args) -> int:
    if args.data:
        records = read_sample_csv(args.data, "no2")
    else:
        records = synthetic_no2_records(seed=args.seed if args.seed is not None else 20240611)
    res = no2_pipeline(records, args.sigma_eps2, points=args.points)
    c = res.curves
    write_csv(args.out, ["y", "zero", "hx", "hy"],
              zip(c["zero"].grid, c["zero"].values, c["hx"].values, c["hy"].values))
    print("bandwidths: " + ", ".join(f"{k}={v:.6g}" for k, v in res.bandwidths.items()), file=sys.stderr)
    return 0


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(args.only or None, threads=args.threads)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 2 if failed else 0


# -- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _density_opts(p, required_var: bool = True):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--density", help="catalog name, e.g. normal, bimodal-1, multi-normal")
    g.add_argument("--mixture", help='inline JSON mixture {"name","weights","means","covariances"}')
    p.add_argument("--sigma-eps2", type=float, required=required_var, help="error variance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="berkson-kde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("tables", help="MISE ratio tables")
    p.add_argument("--config")
    p.add_argument("--table", choices=sorted(REFERENCE_TABLES))
    p.add_argument("--density", action="append")
    p.add_argument("--sigma-eps2", type=float, action="append")
    p.add_argument("--n", type=_positive_int, action="append")
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("bandwidth", help="optimal or asymptotic bandwidth for one model")
    _density_opts(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--target", choices=("y", "x", "asymptotic"), default="y")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bandwidth)

    p = sub.add_parser("ratio-curve", help="exact over asymptotic bandwidth across n")
    p.add_argument("--density", required=True)
    p.add_argument("--sigma-eps2", type=float, action="append")
    p.add_argument("--n", type=_positive_int, action="append")
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ratio_curve)

    p = sub.add_parser("bands", help="pointwise quantile bands of replicate estimates")
    _density_opts(p)
    p.add_argument("--config")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--replicates", type=_positive_int)
    p.add_argument("--rule", choices=RULES, default="hY")
    p.add_argument("--h", type=float, help="bandwidth for --rule value")
    p.add_argument("--quantiles", type=float, nargs=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("estimate", help="density estimate from a sample CSV")
    p.add_argument("--sample", required=True)
    p.add_argument("--sigma-eps2", type=float, required=True)
    p.add_argument("--rule", choices=("hy-rot", "hx-silverman", "zero", "value"), default="hy-rot")
    p.add_argument("--h", type=float)
    p.add_argument("--points", type=_positive_int, default=512)
    p.add_argument("--threads", type=_positive_int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("no2", help="exposure pipeline on (wk, wb) concentrations")
    p.add_argument("--data", help="CSV with header wk,wb; omit for the synthetic stand-in")
    p.add_argument("--sigma-eps2", type=float, default=0.006)
    p.add_argument("--seed", type=int)
    p.add_argument("--points", type=_positive_int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=cmd_no2)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--only", type=int, action="append", choices=range(1, 11))
    p.add_argument("--threads", type=_positive_int)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"berkson-kde: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"berkson-kde: numerical failure: {exc}", file=sys.stderr)
        return 2
    except BerksonError as exc:
        print(f"berkson-kde: {exc}", file=sys.stderr)
        return 2


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Like :func:`main` but returns 1 for usage errors instead of raising ``SystemExit``."""
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if not isinstance(exc.code, str) else 1


if __name__ == "__main__":
    sys.exit(main())
