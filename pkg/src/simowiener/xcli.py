"""Seeded Monte-Carlo experiment runner and command-line front end.

Three experiment kinds share one trial loop:

``identify``
    blind identification on a fixed system; also dumps channel tables and
    inverse-nonlinearity curves for the first trial.
``equalize_sweep``
    equalization quality over a list of SNR values.
``channel_sweep``
    the same over a list of branch counts ``P`` (the first ``P`` channels and
    nonlinearities of the configured system are used).

Every trial draws its data from a child seed derived from
``(seed, snr_index, run)`` only, so different algorithms and branch counts
see common random numbers and results do not depend on the worker schedule.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from .akcca import AkccaConfig, AkccaEstimate, run_akcca
from .cca import cca_channels, embed, ls_channels
from .equalizer import MetricReport, align, aligned_mse, ber, channel_nmse, equalize
from .signals import (
    CHANNELS,
    SOURCE_KINDS,
    WienerSimoSystem,
    generate_source,
    invert_nonlinearity,
    simulate,
    with_snr,
)

logger = logging.getLogger(__name__)

EXPERIMENTS = ("identify", "equalize_sweep", "channel_sweep")
ALGORITHMS = ("akcca", "akcca_i", "cca_linear", "ls_linear")
SUBCOMMANDS = {"identify": "identify", "sweep": "equalize_sweep", "channels": "channel_sweep"}
NONLINEARITIES = ("f1", "f2", "f3", "identity")

RESULT_HEADER = (
    "experiment,algorithm,P,N,snr_db,run,mse,ber,channel_nmse_mean,"
    "iterations,converged,wall_ms,seed"
).split(",")
SUMMARY_HEADER = (
    "experiment,algorithm,P,N,snr_db,runs,failed,mse_mean,mse_median,mse_stderr,"
    "ber_mean,ber_median,ber_stderr,channel_nmse_mean,channel_nmse_median,"
    "channel_nmse_stderr,converged_fraction"
).split(",")

_AKCCA_KEYS = ("c", "icd_precision", "conv_tol", "max_iters", "init")


class ConfigError(ValueError):
    """Invalid experiment configuration, located by field and (when known) line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, origin: str | None = None):
        self.message = message
        self.field = field
        self.line = line
        self.origin = origin
        super().__init__(str(self))

    def __str__(self) -> str:
        where = self.origin or "config"
        if self.line is not None:
            where += f":{self.line}"
        if self.field:
            return f"{where}: field '{self.field}': {self.message}"
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a reference system, a source, and what to sweep.

    ``channels`` are reference channel ids (1..5), ``nonlinearities`` one id
    per channel. ``p_list`` is only used by ``channel_sweep``; the other
    experiments always use every configured branch.
    """

    experiment: str
    channels: tuple
    nonlinearities: tuple
    source: str = "gaussian_iid"
    n: int = 256
    snr_db: tuple = (math.inf,)
    p_list: tuple = ()
    mc_runs: int = 20
    algorithms: tuple = ("akcca",)
    equalizer: str = "zf"
    noise_var: float = 0.0
    akcca: AkccaConfig = field(default_factory=lambda: AkccaConfig(order=5))
    seed: int = 0

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}", "experiment")
        if len(self.channels) < 2:
            raise ConfigError("need at least two channels", "system.channels")
        for cid in self.channels:
            if cid not in CHANNELS:
                raise ConfigError(f"invalid channel id {cid!r}; expected one of {sorted(CHANNELS)}", "system.channels")
        if len(self.nonlinearities) != len(self.channels):
            raise ConfigError("need one nonlinearity per channel", "system.nonlinearities")
        for nl in self.nonlinearities:
            if nl not in NONLINEARITIES:
                raise ConfigError(f"invalid nonlinearity id {nl!r}; expected one of {NONLINEARITIES}", "system.nonlinearities")
        if self.source not in SOURCE_KINDS:
            raise ConfigError(f"unknown source {self.source!r}; expected one of {SOURCE_KINDS}", "source")
        if self.n < 2 * self.akcca.order - 1:
            raise ConfigError(f"n must be at least {2 * self.akcca.order - 1}", "n")
        if not self.snr_db:
            raise ConfigError("snr_db must not be empty", "snr_db")
        if any(math.isnan(v) for v in self.snr_db) or len(set(self.snr_db)) != len(self.snr_db):
            raise ConfigError("snr_db values must be distinct numbers", "snr_db")
        if self.mc_runs < 1:
            raise ConfigError("mc_runs must be at least 1", "mc_runs")
        if not self.algorithms:
            raise ConfigError("algorithms must not be empty", "algorithms")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}", "algorithms")
        for p in self.branch_counts:
            if not 2 <= p <= len(self.channels):
                raise ConfigError(f"branch count {p} outside 2..{len(self.channels)}", "p_list")
        if "ls_linear" in self.algorithms and any(p != 2 for p in self.branch_counts):
            raise ConfigError("ls_linear needs exactly two branches", "algorithms")
        if self.equalizer not in ("zf", "mmse"):
            raise ConfigError(f"unknown equalizer {self.equalizer!r}; expected 'zf' or 'mmse'", "equalizer")
        if not self.noise_var >= 0:
            raise ConfigError("noise_var must be non-negative", "noise_var")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer", "seed")

    @property
    def branch_counts(self) -> tuple:
        if self.experiment == "channel_sweep" and self.p_list:
            return tuple(self.p_list)
        return (len(self.channels),)

    def system(self, p: int | None = None) -> WienerSimoSystem:
        p = len(self.channels) if p is None else p
        return WienerSimoSystem.reference(self.channels[:p], self.nonlinearities[:p])


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    algorithm: str
    p: int
    n: int
    snr_db: float
    run: int
    seed: int
    metrics: MetricReport
    iterations: int
    converged: bool
    wall_ms: float
    final_cost: float = math.nan
    ranks: tuple = ()


# -- configuration parsing -------------------------------------------------


def _line_map(text: str) -> dict:
    """Dotted key path -> 1-based line number, from the YAML node tree."""
    lines: dict = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
                lines[path] = key_node.start_mark.line + 1
                walk(value_node, path)

    try:
        walk(yaml.compose(text, Loader=yaml.SafeLoader), "")
    except yaml.YAMLError:
        pass
    return lines


def _as_tuple(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return (value,)


def _float(value) -> float:
    if isinstance(value, bool):
        raise TypeError("boolean is not a number")
    if isinstance(value, str):
        value = value.strip().lower().replace(".inf", "inf")
    return float(value)


def _int(value) -> int:
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise TypeError("expected an integer")
    return int(value)


def apply_override(data: dict, assignment: str) -> dict:
    """Apply one ``dotted.key=value`` override; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value", origin="--set")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError("empty key in override", origin="--set")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value {raw!r}: {exc}", key, origin="--set") from None
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot descend into a non-mapping value", key, origin="--set")
    node[parts[-1]] = value
    return data


def config_from_mapping(data: dict, lines: dict | None = None, origin: str = "config") -> ExperimentConfig:
    """Validate a parsed mapping into an :class:`ExperimentConfig`.

    Errors carry the offending dotted field name and, when ``lines`` is
    given, its line in the source text.
    """
    lines = lines or {}

    def fail(name, message):
        top = name.split(".")[0]
        raise ConfigError(message, name, lines.get(name, lines.get(top)), origin)

    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", origin=origin)
    known = {"experiment", "system", "source", "n", "snr_db", "p_list", "mc_runs",
             "algorithms", "equalizer", "noise_var", "akcca", "seed"}
    for key in data:
        if key not in known:
            fail(str(key), "unknown field")
    if "experiment" not in data:
        raise ConfigError("missing field 'experiment'", origin=origin)
    system = data.get("system")
    if not isinstance(system, dict):
        fail("system", "missing or not a mapping with 'channels' and 'nonlinearities'")
    for key in system:
        if key not in ("channels", "nonlinearities"):
            fail(f"system.{key}", "unknown field")

    kwargs = {"experiment": data["experiment"]}
    try:
        kwargs["channels"] = tuple(_int(v) for v in _as_tuple(system.get("channels", ())))
    except (TypeError, ValueError) as exc:
        fail("system.channels", str(exc))
    nls = tuple(str(v) for v in _as_tuple(system.get("nonlinearities", ())))
    if len(nls) == 1:
        nls = nls * len(kwargs["channels"])
    kwargs["nonlinearities"] = nls

    scalar = {"source": str, "n": _int, "mc_runs": _int, "equalizer": str, "noise_var": _float, "seed": _int}
    for key, conv in scalar.items():
        if key in data:
            try:
                kwargs[key] = conv(data[key])
            except (TypeError, ValueError) as exc:
                fail(key, str(exc))
    for key, conv in (("snr_db", _float), ("p_list", _int), ("algorithms", str)):
        if key in data:
            try:
                kwargs[key] = tuple(conv(v) for v in _as_tuple(data[key]))
            except (TypeError, ValueError) as exc:
                fail(key, str(exc))

    akcca = data.get("akcca") or {}
    if not isinstance(akcca, dict):
        fail("akcca", "must be a mapping")
    akcca_kwargs = {}
    for key, value in akcca.items():
        if key not in _AKCCA_KEYS:
            fail(f"akcca.{key}", "unknown field")
        try:
            akcca_kwargs[key] = {"max_iters": _int, "init": str}.get(key, _float)(value)
        except (TypeError, ValueError) as exc:
            fail(f"akcca.{key}", str(exc))
    try:
        order = max(len(CHANNELS[c]) for c in kwargs["channels"]) if kwargs["channels"] else 5
    except KeyError as exc:
        fail("system.channels", f"invalid channel id {exc.args[0]!r}; expected one of {sorted(CHANNELS)}")
    try:
        kwargs["akcca"] = AkccaConfig(order=order, **akcca_kwargs)
    except ValueError as exc:
        fail("akcca", str(exc))

    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as exc:
        fail(exc.field or "", exc.message)


def load_config(path, overrides=()) -> ExperimentConfig:
    """Read a YAML experiment file and apply ``key=value`` overrides."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", origin=str(path)) from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, origin=str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", origin=str(path))
    lines = _line_map(text)
    for assignment in overrides:
        apply_override(data, assignment)
        lines.pop(assignment.split("=", 1)[0].strip(), None)
    return config_from_mapping(data, lines, str(path))


# -- trials ------------------------------------------------------------------


def child_seed(base_seed: int, snr_index: int, run: int) -> int:
    """Deterministic 64-bit trial seed.

    The hash is numpy's ``SeedSequence`` entropy mixing with
    ``entropy=base_seed`` and ``spawn_key=(snr_index, run)``.
    """
    ss = np.random.SeedSequence(base_seed, spawn_key=(snr_index, run))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_data(config: ExperimentConfig, p: int, snr_index: int, run: int):
    """Source, system and observed outputs for one trial.

    Returns ``(seed, system, source, x)``. The source uses the stream
    ``(seed, 0)``, the noise ``(seed, 1)``.
    """
    seed = child_seed(config.seed, snr_index, run)
    system = config.system(p)
    source = generate_source(config.source, config.n, (seed, 0))
    noisy = with_snr(system, source, config.snr_db[snr_index])
    x, _ = simulate(noisy, source, (seed, 1))
    return seed, noisy, source, x


def estimate_channels(x: np.ndarray, algorithm: str, akcca: AkccaConfig):
    """Run one identification algorithm.

    Returns ``(h_hat, y_hat, estimate)`` where ``estimate`` is the
    :class:`AkccaEstimate` for the kernel methods and ``None`` otherwise.
    The linear methods treat the observed outputs as the intermediate signals.
    """
    if algorithm in ("akcca", "akcca_i"):
        est = run_akcca(x, replace(akcca, shared_nonlinearity=algorithm == "akcca_i"))
        return est.h_hat, est.y_hat, est
    embeddings = [embed(xi, akcca.order) for xi in x]
    if algorithm == "cca_linear":
        return cca_channels(embeddings).h_hat, x, None
    if algorithm == "ls_linear":
        return ls_channels(embeddings).h_hat, x, None
    raise ValueError(f"unknown algorithm {algorithm!r}")


def run_trial(config: ExperimentConfig, algorithm: str, p: int, snr_index: int, run: int) -> ResultRecord:
    seed, system, source, x = trial_data(config, p, snr_index, run)
    order = system.order
    s = source.samples
    start = time.perf_counter()
    est = None
    try:
        h_hat, y_hat, est = estimate_channels(x, algorithm, config.akcca)
        s_hat = equalize(h_hat, y_hat, config.equalizer, config.noise_var).s_hat
        wall_ms = (time.perf_counter() - start) * 1e3
        window = slice(order - 1, None)
        mse = aligned_mse(s[window], s_hat[window])
        bit_error = ber(s[window], s_hat[window]) if source.kind == "binary" else math.nan
        nmse = tuple(channel_nmse(t, e) for t, e in zip(system.taps, h_hat))
    except np.linalg.LinAlgError as exc:
        logger.warning("trial %s P=%d snr#%d run %d failed: %s", algorithm, p, snr_index, run, exc)
        wall_ms = (time.perf_counter() - start) * 1e3
        mse, bit_error, nmse = math.nan, math.nan, (math.nan,) * p
    return ResultRecord(
        experiment=config.experiment,
        algorithm=algorithm,
        p=p,
        n=config.n,
        snr_db=config.snr_db[snr_index],
        run=run,
        seed=seed,
        metrics=MetricReport(mse=mse, ber=bit_error, channel_nmse=nmse),
        iterations=est.iterations if est is not None else 0,
        converged=est.converged if est is not None else not math.isnan(mse),
        wall_ms=wall_ms,
        final_cost=est.cost_history[-1] if est is not None and est.cost_history else math.nan,
        ranks=tuple(est.ranks) if est is not None else (),
    )


def _trial(args) -> ResultRecord:
    return run_trial(*args)


def _limit_threads():
    threadpool_limits(limits=1)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[ResultRecord]:
    """All trials of ``config``, ordered by (algorithm, P, snr, run).

    BLAS is pinned to one thread per trial, serial or parallel, so the
    floating-point results do not depend on ``jobs``.
    """
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    tasks = [
        (config, algo, p, k, run)
        for algo in config.algorithms
        for p in config.branch_counts
        for k in range(len(config.snr_db))
        for run in range(config.mc_runs)
    ]
    if jobs == 1:
        with threadpool_limits(limits=1):
            records = [_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_limit_threads) as pool:
            records = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    order = {a: i for i, a in enumerate(config.algorithms)}
    return sorted(records, key=lambda r: (order[r.algorithm], r.p, config.snr_db.index(r.snr_db), r.run))


# -- output ------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".9g")


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_summary{path.suffix or '.csv'}")


def _stats(values) -> tuple:
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan, math.nan
    stderr = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else math.nan
    return float(np.mean(v)), float(np.median(v)), stderr


def write_results(records, path, timing: bool = False) -> tuple[Path, Path]:
    """Write per-trial rows and the per-snr summary next to them.

    ``wall_ms`` is left empty unless ``timing`` is set, which keeps the
    default output byte-identical across re-runs.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_HEADER)
        for r in records:
            nmse = float(np.mean(r.metrics.channel_nmse)) if r.metrics.channel_nmse else math.nan
            writer.writerow([
                r.experiment, r.algorithm, _fmt(r.p), _fmt(r.n), _fmt(r.snr_db), _fmt(r.run),
                _fmt(r.metrics.mse), _fmt(r.metrics.ber), _fmt(nmse), _fmt(r.iterations),
                _fmt(r.converged), _fmt(r.wall_ms) if timing else "", _fmt(r.seed),
            ])

    groups: dict = {}
    for r in records:
        groups.setdefault((r.experiment, r.algorithm, r.p, r.n, r.snr_db), []).append(r)
    out = summary_path(path)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for (experiment, algorithm, p, n, snr), group in groups.items():
            mse = [g.metrics.mse for g in group]
            nmse = [float(np.mean(g.metrics.channel_nmse)) for g in group]
            writer.writerow([
                experiment, algorithm, _fmt(p), _fmt(n), _fmt(snr), _fmt(len(group)),
                _fmt(sum(math.isnan(m) for m in mse)),
                *map(_fmt, _stats(mse)),
                *map(_fmt, _stats([g.metrics.ber for g in group])),
                *map(_fmt, _stats(nmse)),
                _fmt(sum(g.converged for g in group) / len(group)),
            ])
    return path, out


def _branch_data(estimate: AkccaEstimate, branch: int) -> np.ndarray:
    factors = estimate.factors
    if len(factors) == 1:
        n = estimate.y_hat.shape[1]
        return factors[0].base_points[branch * n : (branch + 1) * n]
    return factors[branch].base_points


def nonlinearity_curve(estimate: AkccaEstimate, system: WienerSimoSystem, branch: int, points: int = 201):
    """Grid over the observed range of branch ``branch`` with true and estimated inverses.

    ``g_hat`` is the kernel expansion mapped onto ``g_true`` by a
    least-squares gain and offset: the blind estimate carries an arbitrary
    scale and is centered over the data.

    Returns ``(grid, g_true, g_hat)``.
    """
    data = _branch_data(estimate, branch)
    grid = np.linspace(data.min(), data.max(), points)
    g_true = invert_nonlinearity(system.nonlinearities[branch], grid)
    raw = estimate.expansion(branch)(grid)
    design = np.column_stack([raw, np.ones_like(raw)])
    coef, *_ = np.linalg.lstsq(design, g_true, rcond=None)
    return grid, g_true, design @ coef


def dump_identification(estimate: AkccaEstimate, system: WienerSimoSystem, path, points: int = 201):
    """Write ``channels.csv`` and ``nonlinearity_<i>.csv`` under directory ``path``.

    The channel table has one ``true`` and one ``estimate`` row per branch,
    the estimate scaled onto the truth by least squares. Each curve file has
    columns ``x,g_true,g_hat``.

    Returns the metric report (channel NMSE and nonlinearity RMSE per branch)
    and the list of written files.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    taps = system.taps
    order = taps.shape[1]
    written = [path / "channels.csv"]
    with open(written[0], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["branch", "kind", *[f"h{k + 1}" for k in range(order)]])
        for i, (truth, est) in enumerate(zip(taps, estimate.h_hat)):
            writer.writerow([i + 1, "true", *map(_fmt, truth)])
            writer.writerow([i + 1, "estimate", *map(_fmt, align(truth, est))])
    rmse = []
    for i in range(system.n_branches):
        grid, g_true, g_hat = nonlinearity_curve(estimate, system, i, points)
        rmse.append(float(np.sqrt(np.mean((g_true - g_hat) ** 2))))
        target = path / f"nonlinearity_{i + 1}.csv"
        with open(target, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "g_true", "g_hat"])
            for row in zip(grid, g_true, g_hat):
                writer.writerow(list(map(_fmt, row)))
        written.append(target)
    report = MetricReport(
        mse=math.nan,
        ber=math.nan,
        channel_nmse=tuple(channel_nmse(t, e) for t, e in zip(taps, estimate.h_hat)),
        nonlinearity_rmse=tuple(rmse),
    )
    return report, written


# -- command line ----------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simowiener", description="SIMO Wiener identification experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "identify": "blind identification; dumps channel tables and nonlinearity curves",
        "sweep": "equalization quality over an SNR list",
        "channels": "equalization quality over the number of branches",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--seed", type=int, help="base seed (unsigned 64-bit), overrides the config")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")
        p.add_argument("--algo", help="algorithm(s), comma separated; overrides the config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field, e.g. --set akcca.max_iters=50")
        p.add_argument("--timing", action="store_true", help="fill the wall_ms column")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = [f"experiment={SUBCOMMANDS[args.command]}", *args.set]
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.algo:
        overrides.append(f"algorithms=[{args.algo}]")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1", origin="command line")
        config = load_config(args.config, overrides)
        out = Path(args.out)
        records = run_experiment(config, jobs=args.jobs)
        table, summary = write_results(records, out / f"{config.experiment}.csv", timing=args.timing)
        print(f"wrote {table} and {summary} ({len(records)} trials)")
        if config.experiment == "identify":
            kernel = [a for a in config.algorithms if a in ("akcca", "akcca_i")]
            if kernel:
                _, _, _, x = trial_data(config, len(config.channels), 0, 0)
                with threadpool_limits(limits=1):
                    _, _, est = estimate_channels(x, kernel[0], config.akcca)
                report, files = dump_identification(est, config.system(), out / "identification")
                nmse = ", ".join(f"{v:.3g}" for v in report.channel_nmse)
                print(f"wrote {len(files)} identification files to {out / 'identification'} (channel NMSE {nmse})")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
