"""Command-line front end: data ingestion, configuration, dispatch, results.

Subcommands map one-to-one onto harness entry points.  Every run writes a
manifest.json holding the fully resolved configuration, the seed, the tool
version, and a digest of any input file; `bayesgof replay manifest.json`
re-executes the run and reproduces the output files byte for byte.

Exit codes: 0 success, 2 calibration assertion failed, 3 monitor alert,
64 usage error, 65 data error, 70 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__, harness, probkit
from .binning import default_bin_count, equiprobable
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    EvaluationError,
    OptimizationError,
)
from .harness import ExperimentConfig
from .models import (
    ChainSettings,
    ExchangeableDraw,
    NormalModel,
    PoissonCommonRate,
    PoissonExchangeable,
    PoissonSaturated,
)
from .probkit import RngStream, split

EXIT_OK = 0
EXIT_CALIBRATION = 2
EXIT_ALERT = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NUMERIC = 70

MALFORMED_CAP = 0.10

DATASET_SCHEMA = """\
Dataset files are headered CSV with column y (observations) and, for count
models with known exposures, column E (positive offsets).  No other columns
are allowed.  Poisson models require non-negative integer y and the E column.
"""

CONFIG_HELP = """\
--config FILE reads flat key=value lines mirroring long flag names
(hyphen or underscore, '#' comments allowed).  Precedence: command-line
flags > config file > built-in defaults.  Boolean flags take true/false.
"""

EXIT_HELP = """\
Exit codes: 0 ok; 2 calibration assertion failed (--assert-calibrated);
3 monitor alert; 64 usage error; 65 data error; 70 numerical failure.
Environment: BAYESGOF_OUTDIR sets the default output directory.
"""


class _UsageError(Exception):
    def __init__(self, message: str, usage: str) -> None:
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    """argparse with the BSD-style usage exit code instead of 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message, self.format_usage())


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    # 17 significant digits: lossless round trip for 64-bit floats
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(
    outdir: str,
    command: str,
    ns: argparse.Namespace,
    outputs: list[str],
    *,
    input_path: str | None = None,
    started: float = 0.0,
    derived: dict | None = None,
) -> str:
    config = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in vars(ns).items()
        if k not in ("command", "func", "config")
    }
    entry = None
    if input_path is not None:
        entry = {"path": input_path}
        entry["sha256"] = None if input_path == "-" else _digest(input_path)
    manifest = {
        "tool": "bayesgof",
        "version": __version__,
        "command": command,
        "config": config,
        "input": entry,
        "outputs": outputs,
        "timings": {"total_s": time.perf_counter() - started},
        "created_utc": datetime.now(timezone.utc).isoformat(),
    }
    if derived:
        manifest["derived"] = derived
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _ensure_outdir(outdir: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    return outdir


# ---------------------------------------------------------------------------
# dataset ingestion
# ---------------------------------------------------------------------------

def read_dataset(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Parse a headered CSV with column y and optional positive-offset column E."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            cols = [c.strip().lower() for c in header]
            if cols not in (["y"], ["y", "e"]):
                raise DataError(
                    f"{path}: header must be 'y' or 'y,E', got {','.join(header)}"
                )
            rows = [r for r in reader if any(cell.strip() for cell in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    y = np.empty(len(rows))
    e = np.empty(len(rows)) if len(cols) == 2 else None
    for i, row in enumerate(rows):
        if len(row) != len(cols):
            raise DataError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(cols)}")
        try:
            y[i] = float(row[0])
            if e is not None:
                e[i] = float(row[1])
        except ValueError:
            raise DataError(f"{path}: row {i + 2} is not numeric") from None
    if not np.all(np.isfinite(y)):
        raise DataError(f"{path}: column y contains non-finite values")
    if e is not None and (not np.all(np.isfinite(e)) or np.any(e <= 0.0)):
        raise DataError(f"{path}: column E must be finite and positive")
    return y, e


def _build_model(ns: argparse.Namespace, y: np.ndarray, offsets: np.ndarray | None):
    name = ns.model
    if name == "normal":
        return NormalModel()
    if offsets is None:
        raise DataError(
            f"dataset is missing the offset column 'E' required by model {name}"
        )
    if name == "poisson-common":
        return PoissonCommonRate(offsets)
    if name == "poisson-saturated":
        return PoissonSaturated(offsets, prior_exponent=ns.prior_exponent)
    if name == "poisson-exchangeable":
        settings = ChainSettings(
            burn_in=ns.chain_burn_in,
            thin=ns.chain_thin,
            target_accept=ns.chain_target_accept,
            initial_step=ns.chain_step,
        )
        return PoissonExchangeable(
            offsets, sigma2_fixed=ns.sigma2_fixed, settings=settings
        )
    raise ConfigError(f"unknown model {name}")


# ---------------------------------------------------------------------------
# flag value parsers
# ---------------------------------------------------------------------------

def _parse_df_list(text: str) -> tuple[float, ...]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo_s, hi_s = part.split("..", 1)
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad df range {part!r}") from None
            if lo > hi:
                raise argparse.ArgumentTypeError(f"empty df range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad df value {part!r}") from None
    if any(d < 1 or d > 10 for d in out):
        raise argparse.ArgumentTypeError("df values must lie in 1..10")
    return tuple(float(d) for d in out)


def _parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in harness.POWER_METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(
            f"methods must be among {','.join(harness.POWER_METHODS)}"
        )
    return methods


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate_null(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    reps = 10000 if ns.full_scale else ns.reps
    cfg = ExperimentConfig(
        model=ns.model,
        n=ns.n,
        bins=ns.k,
        replicates=reps,
        seed=ns.seed,
        ks_alpha=ns.ks_alpha,
        include_classical=ns.classical,
        workers=ns.workers,
        true_mean=ns.mean,
        prior_exponent=ns.prior_exponent,
    )
    result = harness.null_calibration(cfg)

    names = [n for n in ("posterior", "plugin", "grouped") if n in result.series]
    # a series gets a reference column iff it has a chi-square reference law
    # (the plugin statistic has none); the KS entry may still be skipped for
    # runs too small for the asymptotic test
    has_ref = {n: bool(np.any(np.isfinite(result.series[n].ref_quantiles))) for n in names}
    header = ["rank"]
    for name in names:
        header.append(name)
        if has_ref[name]:
            header.append(f"{name}_ref")
    rows = []
    for i in range(result.replicates):
        row: list = [i + 1]
        for name in names:
            series = result.series[name]
            row.append(series.values[i])
            if has_ref[name]:
                row.append(series.ref_quantiles[i])
        rows.append(row)
    _write_csv(os.path.join(outdir, "qq.csv"), header, rows)

    summary_header = [
        "series", "replicates", "n", "k", "mean", "variance",
        "ks_statistic", "ks_critical", "ks_alpha", "ks_passed",
    ]
    summary_rows = []
    for name in names:
        s = result.series[name]
        ks = s.ks
        summary_rows.append([
            name, result.replicates, result.n, result.k, s.mean, s.variance,
            ks.statistic if ks else None, ks.critical if ks else None,
            ks.alpha if ks else None, ks.passed if ks else None,
        ])
    _write_csv(os.path.join(outdir, "summary.csv"), summary_header, summary_rows)
    _write_manifest(
        outdir, "simulate-null", ns, ["qq.csv", "summary.csv"],
        started=started, derived={"runtime_s": result.runtime_s},
    )

    if ns.assert_calibrated:
        failed = [n for n in names if result.series[n].ks and not result.series[n].ks.passed]
        if failed:
            print(f"calibration failed: {', '.join(failed)}", file=sys.stderr)
            return EXIT_CALIBRATION
    return EXIT_OK


def cmd_power(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    reps = 10000 if ns.full_scale else ns.reps
    cfg = ExperimentConfig(
        n=ns.n,
        bins=ns.k,
        replicates=reps,
        seed=ns.seed,
        draws_per_dataset=ns.draws,
        alpha=ns.alpha,
        workers=ns.workers,
        df_grid=tuple(ns.df),
        methods=tuple(ns.methods),
    )
    if ns.auc_critical is not None:
        critical = ns.auc_critical
    else:
        # fresh null run one seed over, so power replicates stay independent
        from dataclasses import replace

        critical = harness.null_auc_distribution(replace(cfg, seed=cfg.seed + 1)).critical
    result = harness.power_study(cfg, critical)
    rows = [
        [row.df, row.method, row.rejections, row.replicates, row.rate]
        for row in result.rows
    ]
    _write_csv(
        os.path.join(outdir, "power.csv"),
        ["df", "method", "rejections", "replicates", "rate"],
        rows,
    )
    _write_manifest(
        outdir, "power", ns, ["power.csv"],
        started=started, derived={"auc_critical": critical},
    )
    return EXIT_OK


def cmd_analyze(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    y, offsets = read_dataset(ns.data)
    model = _build_model(ns, y, offsets)
    k = ns.k if ns.k is not None else default_bin_count(y.size)
    scheme = equiprobable(k)
    result = harness.analyze(
        y, model, RngStream(ns.seed),
        n_draws=ns.draws, scheme=scheme, threshold=ns.threshold,
    )
    s = result.summary
    header = ["model", "auc", "exceedance", "threshold", "n_draws", "k", "small_cells"]
    header += [f"mean_count_bin{i + 1}" for i in range(s.k)]
    row: list = [
        ns.model, s.auc, s.exceedance_rate, s.threshold, s.n_draws, s.k,
        ";".join(str(i + 1) for i in s.small_cells),
    ]
    row += list(s.mean_bin_counts)
    _write_csv(os.path.join(outdir, "summary.csv"), header, [row])
    _write_csv(
        os.path.join(outdir, "trace.csv"),
        ["draw", "value", "dof"],
        ([i, v, s.k - 1] for i, v in enumerate(result.values)),
    )
    _write_manifest(
        outdir, "analyze", ns, ["summary.csv", "trace.csv"],
        input_path=ns.data, started=started,
    )
    return EXIT_OK


def cmd_pp_test(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    y, offsets = read_dataset(ns.data)
    model = _build_model(ns, y, offsets)
    k = ns.k if ns.k is not None else default_bin_count(y.size)
    result = harness.predictive_auc_test(
        y, model, RngStream(ns.seed),
        pp_reps=ns.pp_reps, n_draws=ns.draws, scheme=equiprobable(k),
    )
    _write_csv(
        os.path.join(outdir, "summary.csv"),
        ["auc_observed", "pp_reps", "p_value"],
        [[result.auc_observed, ns.pp_reps, result.p_value]],
    )
    _write_csv(
        os.path.join(outdir, "predictive.csv"),
        ["replicate", "auc"],
        ([i, a] for i, a in enumerate(result.predictive_aucs)),
    )
    _write_manifest(
        outdir, "pp-test", ns, ["summary.csv", "predictive.csv"],
        input_path=ns.data, started=started,
    )
    return EXIT_OK


def _theta_arity(model) -> int:
    if isinstance(model, NormalModel):
        return 2
    if isinstance(model, PoissonCommonRate):
        return 1
    if isinstance(model, PoissonExchangeable):
        return model.n_obs + 2
    return model.n_obs


def _theta_from_tokens(model, values: np.ndarray):
    if isinstance(model, NormalModel):
        if values[1] <= 0.0:
            raise ValueError("scale must be positive")
        return (float(values[0]), float(values[1]))
    if isinstance(model, PoissonCommonRate):
        if values[0] <= 0.0:
            raise ValueError("rate must be positive")
        return float(values[0])
    if isinstance(model, PoissonExchangeable):
        if values[-1] <= 0.0:
            raise ValueError("sigma2 must be positive")
        return ExchangeableDraw(float(values[0]), values[1:-1].copy(), float(values[-1]))
    if np.any(values <= 0.0):
        raise ValueError("means must be positive")
    return values


def cmd_monitor(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    y, offsets = read_dataset(ns.data)
    model = _build_model(ns, y, offsets)
    k = ns.k if ns.k is not None else default_bin_count(y.size)
    scheme = equiprobable(k)
    arity = _theta_arity(model)

    counters = {"total": 0, "malformed": 0}

    def parse_stream(lines):
        for line in lines:
            text = line.strip()
            if not text:
                continue
            counters["total"] += 1
            tokens = text.split()
            if len(tokens) != arity:
                counters["malformed"] += 1
                continue
            try:
                values = np.array([float(t) for t in tokens])
                if not np.all(np.isfinite(values)):
                    raise ValueError("non-finite parameter")
                theta = _theta_from_tokens(model, values)
            except ValueError:
                counters["malformed"] += 1
                continue
            yield theta

    def run(lines) -> bool:
        rng = split(RngStream(ns.seed), 0) if model.is_discrete else None
        records = harness.stream_monitor(
            parse_stream(lines), y, model, scheme, rng,
            threshold=ns.threshold, alert_factor=ns.alert_factor,
            min_draws=ns.min_draws,
        )
        alerted = False
        with open(os.path.join(outdir, "trace.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "value", "valid", "exceeds", "cumulative_rate", "alert"])
            for rec in records:
                writer.writerow([
                    _fmt(rec.index), _fmt(rec.value), _fmt(rec.valid),
                    _fmt(rec.exceeds), _fmt(rec.cumulative_rate), _fmt(rec.alert),
                ])
                alerted = alerted or rec.alert
        return alerted

    if ns.draws_file == "-":
        alerted = run(sys.stdin)
    else:
        try:
            with open(ns.draws_file) as fh:
                alerted = run(fh)
        except OSError as exc:
            raise DataError(f"cannot read {ns.draws_file}: {exc.strerror or exc}") from exc

    if counters["malformed"]:
        print(
            f"monitor: skipped {counters['malformed']} malformed draw line(s) "
            f"of {counters['total']}",
            file=sys.stderr,
        )
    if counters["total"] and counters["malformed"] > MALFORMED_CAP * counters["total"]:
        raise DataError(
            f"malformed draw lines exceed the {MALFORMED_CAP:.0%} cap: "
            f"{counters['malformed']} of {counters['total']}"
        )
    _write_manifest(
        outdir, "monitor", ns, ["trace.csv"],
        input_path=ns.draws_file, started=started,
        derived={"draw_lines": counters["total"], "malformed_lines": counters["malformed"]},
    )
    return EXIT_ALERT if alerted else EXIT_OK


def cmd_validate(ns: argparse.Namespace) -> int:
    started = time.perf_counter()
    outdir = _ensure_outdir(ns.outdir)
    y, offsets = read_dataset(ns.data)
    print(f"{ns.data}: {y.size} rows, columns y{',E' if offsets is not None else ''}")
    if ns.model is not None:
        model = _build_model(ns, y, offsets)
        model.validate_data(y)
        print(f"model {ns.model}: data accepted")
    _write_manifest(outdir, "validate", ns, [], input_path=ns.data, started=started)
    return EXIT_OK


def cmd_replay(ns: argparse.Namespace) -> int:
    try:
        with open(ns.manifest) as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {ns.manifest}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{ns.manifest}: not valid JSON ({exc})") from exc
    command = manifest.get("command")
    if command not in _COMMANDS or command == "replay":
        raise DataError(f"{ns.manifest}: unknown or missing command {command!r}")
    if manifest.get("version") != __version__:
        print(
            f"warning: manifest written by version {manifest.get('version')}, "
            f"running {__version__}",
            file=sys.stderr,
        )
    config = manifest.get("config")
    if not isinstance(config, dict):
        raise DataError(f"{ns.manifest}: missing config block")
    replay_ns = argparse.Namespace(**config)
    if ns.outdir is not None:
        replay_ns.outdir = ns.outdir
    return _COMMANDS[command](replay_ns)


_COMMANDS = {
    "simulate-null": cmd_simulate_null,
    "power": cmd_power,
    "analyze": cmd_analyze,
    "pp-test": cmd_pp_test,
    "monitor": cmd_monitor,
    "validate": cmd_validate,
    "replay": cmd_replay,
}


# ---------------------------------------------------------------------------
# parser construction
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser, *, seed_default: int = 0) -> None:
    sub.add_argument("--seed", type=int, default=seed_default, help="root random seed")
    sub.add_argument(
        "--outdir",
        default=os.environ.get("BAYESGOF_OUTDIR", "."),
        help="output directory (default: $BAYESGOF_OUTDIR or '.')",
    )
    sub.add_argument("--config", default=None, help="key=value config file")


def _add_dataset_flags(sub: argparse.ArgumentParser, models: list[str]) -> None:
    sub.add_argument("--data", required=True, help="headered CSV with columns y[,E]")
    sub.add_argument("--model", required=True, choices=models)
    sub.add_argument(
        "--prior-exponent", type=float, default=0.5, choices=[0.5, 1.0],
        help="saturated-model prior is mean**(-exponent)",
    )
    sub.add_argument("--sigma2-fixed", type=float, default=None,
                     help="freeze the exchangeable random-effect variance")
    sub.add_argument("--chain-burn-in", type=int, default=2000)
    sub.add_argument("--chain-thin", type=int, default=4)
    sub.add_argument("--chain-step", type=float, default=0.2)
    sub.add_argument("--chain-target-accept", type=float, default=0.44)
    sub.add_argument("--k", type=int, default=None,
                     help="bin count (default: rule-of-thumb from n)")


_DATA_MODELS = ["normal", "poisson-common", "poisson-saturated", "poisson-exchangeable"]


def build_parser() -> _Parser:
    parser = _Parser(
        prog="bayesgof",
        description="Posterior-draw chi-square goodness-of-fit toolkit.",
        epilog=DATASET_SCHEMA + CONFIG_HELP + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"bayesgof {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, metavar="command")

    sim = subs.add_parser(
        "simulate-null",
        help="null-calibration study; writes qq.csv and summary.csv",
        description="Simulate replicate datasets under the null and record the "
        "statistic's distribution against its reference law.",
        epilog="qq.csv: rank, <series>, <series>_ref per included series.\n"
        "summary.csv: series, replicates, n, k, mean, variance, ks_statistic, "
        "ks_critical, ks_alpha, ks_passed.\n" + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sim.add_argument("--model", choices=["normal", "poisson-synthetic"], default="normal")
    sim.add_argument("--n", type=int, default=50, help="observations per dataset")
    sim.add_argument("--k", type=int, default=None, help="bin count (default: rule from n)")
    scale = sim.add_mutually_exclusive_group()
    scale.add_argument("--reps", type=int, default=2000, help="replicate datasets")
    scale.add_argument("--full-scale", action="store_true",
                       help="10000 replicates instead of the desk-scale default")
    sim.add_argument("--classical", action="store_true",
                     help="also tabulate the plugin and grouped-MLE statistics")
    sim.add_argument("--assert-calibrated", action="store_true",
                     help="exit 2 if any tracked series fails its KS check")
    sim.add_argument("--ks-alpha", type=float, default=0.01)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--mean", type=float, default=4.2,
                     help="true mean for poisson-synthetic data")
    sim.add_argument("--prior-exponent", type=float, default=0.5, choices=[0.5, 1.0])
    _add_common(sim)

    pw = subs.add_parser(
        "power",
        help="size/power study over t alternatives; writes power.csv",
        description="Reject-rate study against heavy-tailed alternatives indexed "
        "by degrees of freedom (df=1 far, df=10 near the null).",
        epilog="power.csv: df, method, rejections, replicates, rate.\n" + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    pw.add_argument("--df", type=_parse_df_list, default=(1.0, 2.0, 3.0, 5.0, 10.0),
                    help="comma list, ranges allowed: 1,2,3 or 1..10")
    pw.add_argument("--methods", type=_parse_methods, default=harness.POWER_METHODS,
                    help=f"comma list among {','.join(harness.POWER_METHODS)}")
    scale = pw.add_mutually_exclusive_group()
    scale.add_argument("--reps", type=int, default=1000, help="replicates per df")
    scale.add_argument("--full-scale", action="store_true",
                       help="10000 replicates per df")
    pw.add_argument("--n", type=int, default=50)
    pw.add_argument("--k", type=int, default=None)
    pw.add_argument("--draws", type=int, default=500,
                    help="posterior draws per dataset for the averaged test")
    pw.add_argument("--alpha", type=float, default=0.05, help="test size")
    pw.add_argument("--auc-critical", type=float, default=None,
                    help="stored null critical value; computed fresh at seed+1 if omitted")
    pw.add_argument("--workers", type=int, default=1)
    _add_common(pw)

    an = subs.add_parser(
        "analyze",
        help="fit diagnostics for one dataset; writes summary.csv and trace.csv",
        description="Per-draw goodness-of-fit trace for a dataset under a chosen "
        "model, with the tail-area AUC summary and threshold exceedance rate.",
        epilog="summary.csv: model, auc, exceedance, threshold, n_draws, k, "
        "small_cells, mean_count_bin1..K. small_cells holds 1-based bin "
        "indexes whose mean expected count fell below 1, ';'-joined.\n"
        "trace.csv: draw, value, dof.\n"
        + DATASET_SCHEMA + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_dataset_flags(an, _DATA_MODELS)
    an.add_argument("--draws", type=int, default=5000, help="posterior draws")
    an.add_argument("--threshold", type=float, default=None,
                    help="exceedance threshold (default: 0.95 reference quantile)")
    _add_common(an)

    pp = subs.add_parser(
        "pp-test",
        help="significance for an observed AUC by predictive recalibration",
        description="Approximate the sampling distribution of the AUC by "
        "regenerating datasets from the fitted model and re-fitting.",
        epilog="summary.csv: auc_observed, pp_reps, p_value.\n"
        "predictive.csv: replicate, auc.\n" + DATASET_SCHEMA + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_dataset_flags(pp, _DATA_MODELS)
    pp.add_argument("--pp-reps", type=int, default=100, help="predictive replicates")
    pp.add_argument("--draws", type=int, default=1000, help="posterior draws per fit")
    _add_common(pp)

    mon = subs.add_parser(
        "monitor",
        help="stream parameter draws and alert on tail-rate excess; exit 3 on alert",
        description="Read one whitespace-separated parameter vector per line "
        "(normal: location scale; poisson-common: rate; poisson-saturated: one "
        "mean per observation; poisson-exchangeable: alpha0, effects..., sigma2) "
        "and track the statistic's running exceedance rate.  Malformed lines are "
        "skipped and counted, tolerated up to 10% of the stream.",
        epilog="trace.csv: index, value, valid, exceeds, cumulative_rate, alert.\n"
        + DATASET_SCHEMA + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_dataset_flags(mon, _DATA_MODELS)
    mon.add_argument("--draws-file", default="-",
                     help="draw stream path, or '-' for standard input")
    mon.add_argument("--threshold", type=float, default=None)
    mon.add_argument("--alert-factor", type=float, default=8.0,
                     help="alert when the running rate exceeds factor x nominal")
    mon.add_argument("--min-draws", type=int, default=200,
                     help="valid draws required before alerting")
    _add_common(mon)

    val = subs.add_parser(
        "validate",
        help="check a dataset file against the input schema",
        description="Parse a dataset and, when --model is given, check it against "
        "that model's requirements.",
        epilog=DATASET_SCHEMA + EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    val.add_argument("--data", required=True)
    val.add_argument("--model", choices=_DATA_MODELS, default=None)
    val.add_argument("--prior-exponent", type=float, default=0.5, choices=[0.5, 1.0])
    val.add_argument("--sigma2-fixed", type=float, default=None)
    val.add_argument("--chain-burn-in", type=int, default=2000)
    val.add_argument("--chain-thin", type=int, default=4)
    val.add_argument("--chain-step", type=float, default=0.2)
    val.add_argument("--chain-target-accept", type=float, default=0.44)
    _add_common(val)

    rp = subs.add_parser(
        "replay",
        help="re-run a recorded manifest; outputs are byte-identical",
        description="Re-execute the command recorded in a manifest.json with its "
        "stored configuration and seed.",
        epilog=EXIT_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    rp.add_argument("manifest", help="path to a manifest.json")
    rp.add_argument("--outdir", default=None,
                    help="write outputs here instead of the recorded directory")

    return parser


# ---------------------------------------------------------------------------
# config file merge
# ---------------------------------------------------------------------------

def _config_tokens(path: str, sub: argparse.ArgumentParser) -> list[str]:
    options = {}
    for action in sub._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                options[opt] = action
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    tokens: list[str] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        action = options.get(flag)
        if action is None or flag == "--config":
            raise ConfigError(f"{path}:{lineno}: unknown option {key!r}")
        if action.nargs == 0:
            low = value.lower()
            if low in ("true", "1", "yes"):
                tokens.append(flag)
            elif low not in ("false", "0", "no"):
                raise ConfigError(f"{path}:{lineno}: boolean {key!r} must be true or false")
        else:
            tokens.extend([flag, value])
    return tokens


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(args)
        config_path = getattr(ns, "config", None)
        if config_path:
            # flags win over the file: file tokens are injected first and
            # later command-line occurrences override them
            sub = next(
                a for a in parser._actions
                if isinstance(a, argparse._SubParsersAction)
            ).choices[ns.command]
            merged = [args[0]] + _config_tokens(config_path, sub) + args[1:]
            ns = parser.parse_args(merged)
        handler = _COMMANDS[ns.command]
        return handler(ns)
    except _UsageError as exc:
        print(exc.usage, end="", file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EvaluationError, OptimizationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
