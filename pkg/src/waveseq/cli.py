"""Command-line driver: ``waveseq <command> [--config FILE] [--set key=value ...]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import hypertune
from .config import TUNABLES, ConfigError, RunConfig, keys_help, load_config
from .dataset import (AffineScaler, SampleWindow, SplitSpec, WindowSpec, build_reconstruction_set,
                      derive_power_column, split_windows, stack)
from .feature_select import attribution_to_csv, feature_attribution, nonzero_percentage
from .metrics import MetricReport
from .ndbc import (AlignedTable, EmptyAlignmentError, IngestReport, StdmetFormatError, align_stations,
                   column_label, concat_series, fetch_stdmet, format_timestamp, parse_column_label,
                   read_stdmet, refined_station_filter, series_to_csv)
from .optim import OptimizerConfig, RegularizerConfig
from .seq2seq.checkpoint import load_checkpoint, save_checkpoint
from .seq2seq.model import build_model
from .seq2seq.schedule import SchedulePolicy
from .seq2seq.training import TrainConfig, TrainingDiverged, train

logger = logging.getLogger("waveseq")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3, 4

ColumnKey = Tuple[str, str]


# ---------------------------------------------------------------- data plumbing


def _archive_path(data_dir: Path, station: str, year: int, allow_net: bool) -> Path:
    for name in (f"{station}h{year}.txt", f"{station}h{year}.txt.gz"):
        if (data_dir / name).exists():
            return data_dir / name
    return fetch_stdmet(station, year, data_dir, allow_net=allow_net)


def load_station_series(cfg: RunConfig, allow_net: bool):
    data_dir = Path(cfg.data_dir)
    series, reports = [], []
    for st in cfg.stations:
        parts = []
        for year in cfg.years:
            s = read_stdmet(_archive_path(data_dir, st, year, allow_net), station_id=st)
            reports.append(s.report)
            if not refined_station_filter(s, year):
                logger.info("station %s fails the refined-station rule for %d", st, year)
            parts.append(s)
        series.append(concat_series(parts))
    return series, reports


def _resolve(labels: Sequence[str], stations: Sequence[str]) -> List[ColumnKey]:
    keys: List[ColumnKey] = []
    for label in labels:
        if ":" in label:
            cand = [parse_column_label(label)]
        else:
            cand = [(st, label.upper()) for st in stations]
        keys.extend(k for k in cand if k not in keys)
    return keys


def load_table(cfg: RunConfig, allow_net: bool, exclude_targets: bool = False):
    """Aligned table plus resolved input and target keys."""
    if cfg.table:
        table = AlignedTable.from_csv(cfg.table)
        stations = list(dict.fromkeys(k[0] for k in table.keys))
    else:
        stations = list(cfg.stations)
        series, _ = load_station_series(cfg, allow_net)
        wanted = _resolve(cfg.features, stations) + _resolve(cfg.target, stations)
        for st in cfg.power:
            wanted += [(st, "WVHT"), (st, "APD")]
        base = []
        for k in wanted:
            if k[1] != "POWER" and k not in base:
                base.append(k)
        table = align_stations(series, base)
    for st in cfg.power:
        if (st, "POWER") not in table.keys:
            table = derive_power_column(table, st)
    targets = _resolve(cfg.target, stations)
    inputs = _resolve(cfg.features, stations)
    if exclude_targets:
        inputs = [k for k in inputs if k not in targets]
    for k in inputs + targets:
        if k not in table.keys:
            raise ConfigError("features" if k in inputs else "target", f"column {column_label(k)} not in table")
    if not inputs:
        raise ConfigError("features", "no input columns left")
    return table, inputs, targets


def fit_scalers(windows: Sequence[SampleWindow], enabled: bool):
    X, Y = stack(windows)
    if not enabled:
        return (AffineScaler(np.zeros(X.shape[2]), np.ones(X.shape[2])),
                AffineScaler(np.zeros(Y.shape[2]), np.ones(Y.shape[2])))
    return AffineScaler.fit(X.reshape(-1, X.shape[2])), AffineScaler.fit(Y.reshape(-1, Y.shape[2]))


def scale_windows(windows, sx: AffineScaler, sy: AffineScaler) -> List[SampleWindow]:
    return [SampleWindow(sx.transform(w.x), sy.transform(w.y), w.origin) for w in windows]


def _scaler_dict(s: AffineScaler) -> Dict[str, list]:
    return {"shift": [float(v) for v in np.atleast_1d(s.shift)], "scale": [float(v) for v in np.atleast_1d(s.scale)]}


def _scaler_from(d) -> AffineScaler:
    return AffineScaler(np.array(d["shift"]), np.array(d["scale"]))


def train_config(cfg: RunConfig, epochs: Optional[int] = None, **over) -> TrainConfig:
    epochs = epochs or cfg.epochs
    values = dict(hidden=cfg.hidden, batch_size=cfg.batch_size, lr=cfg.lr, l2=cfg.l2, k_fraction=cfg.k_fraction,
                  l1=cfg.l1)
    values.update(over)
    schedule = SchedulePolicy.from_fraction(values["k_fraction"], epochs, forced_tail=min(2, epochs))
    opt = OptimizerConfig(cfg.optimizer, values["lr"], decay=cfg.decay, clip_norm=cfg.clip_norm)
    return TrainConfig(epochs, values["batch_size"], opt, RegularizerConfig(l2=values["l2"], l1=values["l1"]),
                       schedule, seed=cfg.seed)


def _new_model(cfg: RunConfig, d: int, m: int, seed: int, **over):
    hidden = over.get("hidden", cfg.hidden)
    T = over.get("T", cfg.T)
    layers = over.get("layers", cfg.layers)
    return build_model(cfg.model, d, m, hidden, T, cfg.T_out, layers).init(seed, cfg.init_std, cfg.forget_bias)


def _manifest(cfg: RunConfig, tc: TrainConfig, table: AlignedTable, inputs, targets, sx, sy) -> dict:
    return {
        "inputs": [column_label(k) for k in inputs],
        "targets": [column_label(k) for k in targets],
        "T": cfg.T,
        "T_out": cfg.T_out,
        "seed": cfg.seed,
        "epochs": tc.epochs,
        "schedule": {"k": tc.schedule.k, "forced_tail": tc.schedule.forced_tail},
        "optimizer": {"variant": tc.optimizer.variant, "lr": tc.optimizer.lr, "decay": tc.optimizer.decay,
                      "beta1": tc.optimizer.beta1, "beta2": tc.optimizer.beta2, "eps": tc.optimizer.epsilon},
        "regularizer": {"l2": tc.reg.l2, "l1": tc.reg.l1},
        "data_fingerprint": table.fingerprint(),
        "x_scaler": _scaler_dict(sx),
        "y_scaler": _scaler_dict(sy),
    }


def _write_predictions(path: Path, stamps, labels: Sequence[str], Y: np.ndarray, Yhat: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + [f"{l}_true" for l in labels] + [f"{l}_pred" for l in labels])
        for s, y, p in zip(stamps, Y, Yhat):
            w.writerow([format_timestamp(s)] + [repr(float(v)) for v in y] + [repr(float(v)) for v in p])


def _fit(cfg, model, tr, va, tc, out: Path):
    try:
        model, report = train(model, tr, va, tc)
    except TrainingDiverged as exc:
        exc.report.to_csv(out / "train_report.csv")
        raise
    report.to_csv(out / "train_report.csv")
    return model, report


def _train_and_test(cfg: RunConfig, table, inputs, targets, out: Path, keep_best: bool = True):
    spec = WindowSpec(cfg.T, cfg.T_out, tuple(inputs), tuple(targets))
    tr, va, te = split_windows(table, spec, SplitSpec(*cfg.split), cfg.stride)
    if not (tr and va):
        raise ConfigError("split", "training and validation parts must be non-empty")
    sx, sy = fit_scalers(tr, cfg.scale)
    model = _new_model(cfg, len(inputs), len(targets), cfg.seed)
    tc = replace(train_config(cfg), keep_best=keep_best)
    model, report = _fit(cfg, model, scale_windows(tr, sx, sy), scale_windows(va, sx, sy), tc, out)
    save_checkpoint(out / "checkpoint", model, _manifest(cfg, tc, table, inputs, targets, sx, sy))
    if te:
        X, Y = stack(te)
        Yhat = sy.inverse(model.predict(sx.transform(X), t_out=cfg.T_out))
        MetricReport.compute(Y, Yhat).to_csv(out / "test_metrics.csv", {"model": cfg.model, "split": "test"})
    return model, report


# ---------------------------------------------------------------- commands


def cmd_ingest(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.paths:
        groups: Dict[str, list] = {}
        for p in args.paths:
            s = read_stdmet(p)
            groups.setdefault(s.station_id, []).append(s)
        reports = [s.report for g in groups.values() for s in g]
        series = [concat_series(g) for g in groups.values()]
    else:
        series, reports = load_station_series(cfg, args.allow_net)
    with open(out / "ingest_report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, IngestReport.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow(r.csv_row())
    for s in series:
        series_to_csv(s, out / f"series_{s.station_id}.csv")
    stations = [s.station_id for s in series]
    wanted = _resolve(cfg.features, stations) + [k for k in _resolve(cfg.target, stations) if k[0] in stations]
    wanted = list(dict.fromkeys(wanted))
    table = align_stations(series, wanted)
    table.to_csv(out / "aligned.csv")
    print(f"aligned {len(table)} rows x {len(table.keys)} columns -> {out / 'aligned.csv'}")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    table, inputs, targets = load_table(cfg, args.allow_net)
    _, report = _train_and_test(cfg, table, inputs, targets, out)
    print(f"trained {len(report)} epochs; best epoch {report.best_epoch}; checkpoint {out / 'checkpoint'}")
    return EXIT_OK


def cmd_forecast(cfg: RunConfig, args) -> int:
    ckpt_dir = args.checkpoint or cfg.checkpoint
    source = args.input or cfg.input
    if not ckpt_dir:
        raise ConfigError("checkpoint", "required")
    if not source:
        raise ConfigError("input", "required")
    ck = load_checkpoint(ckpt_dir)
    man = ck.manifest
    table = AlignedTable.from_csv(source)
    inputs = [parse_column_label(l) for l in man["inputs"]]
    T = int(man["T"])
    t_out = args.t_out or int(man["T_out"])
    if len(table) < T:
        raise ValueError(f"input table has {len(table)} rows, model needs {T}")
    sx, sy = _scaler_from(man["x_scaler"]), _scaler_from(man["y_scaler"])
    x = sx.transform(table.columns(inputs)[-T:])
    yhat = sy.inverse(ck.model.predict(x[None], t_out=t_out)[0])
    step = table.timestamps[-1] - table.timestamps[-2] if len(table) > 1 else np.timedelta64(60, "m")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "forecast.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + list(man["targets"]))
        for k, row in enumerate(yhat, 1):
            w.writerow([format_timestamp(table.timestamps[-1] + k * step)] + [repr(float(v)) for v in row])
    print(f"{t_out}-step forecast -> {out / 'forecast.csv'}")
    return EXIT_OK


def reconstruction_sets(cfg: RunConfig, table, inputs, target):
    """Train/validation windows from ``train_year`` and test windows from ``test_year``."""
    train_rows = table.year_rows([cfg.train_year])
    test_rows = table.year_rows([cfg.test_year])
    if len(train_rows) < 2 or len(test_rows) == 0:
        raise ValueError(f"table lacks rows for years {cfg.train_year}/{cfg.test_year}")
    n_val = max(1, int(round(cfg.val_frac * len(train_rows))))
    fit_rows, val_rows = train_rows[:-n_val], train_rows[-n_val:]
    make = lambda rows: build_reconstruction_set(table, target, inputs, cfg.T, rows=rows, lead=cfg.lead, pad=True)
    kept = [r for r in test_rows if r - cfg.lead >= 0]
    return make(fit_rows), make(val_rows), make(test_rows), table.timestamps[kept]


def cmd_reconstruct(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    if cfg.T_out != 1:
        raise ConfigError("T_out", "reconstruction predicts a single value (T_out=1)")
    if len(cfg.target) != 1:
        raise ConfigError("target", "reconstruction takes exactly one target")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    table, inputs, targets = load_table(cfg, args.allow_net, exclude_targets=True)
    tr, va, te, stamps = reconstruction_sets(cfg, table, inputs, targets[0])
    sx, sy = fit_scalers(tr, cfg.scale)
    model = _new_model(cfg, len(inputs), 1, cfg.seed)
    tc = train_config(cfg)
    model, _ = _fit(cfg, model, scale_windows(tr, sx, sy), scale_windows(va, sx, sy), tc, out)
    save_checkpoint(out / "checkpoint", model, _manifest(cfg, tc, table, inputs, targets, sx, sy))
    X, Y = stack(te)
    Yhat = sy.inverse(model.predict(sx.transform(X), t_out=1))
    _write_predictions(out / "reconstruction.csv", stamps, [column_label(targets[0])], Y[:, 0], Yhat[:, 0])
    rep = MetricReport.compute(Y, Yhat)
    rep.to_csv(out / "metrics.csv", {"model": cfg.model, "train_year": cfg.train_year, "test_year": cfg.test_year})
    print(f"{len(table)} aligned rows; test rmse={rep.rmse:.4f} r2={rep.r2:.4f}")
    return EXIT_OK


def tune_grid(cfg: RunConfig) -> hypertune.ParamGrid:
    dims = {n: cfg[f"grid_{n}"] for n in TUNABLES}
    if cfg.grid_l1:
        dims["l1"] = cfg.grid_l1  # feature-selection mode tunes the 1-norm weight too
    return hypertune.ParamGrid.from_dict(dims)


def cmd_tune(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    table, inputs, targets = load_table(cfg, args.allow_net)
    grid = tune_grid(cfg)
    epochs = cfg.tune_epochs or cfg.epochs
    cache: Dict[int, tuple] = {}

    def windows_for(T: int):
        if T not in cache:
            spec = WindowSpec(T, cfg.T_out, tuple(inputs), tuple(targets))
            tr, va, _ = split_windows(table, spec, SplitSpec(*cfg.split), cfg.stride)
            sx, sy = fit_scalers(tr, cfg.scale)
            cache[T] = (scale_windows(tr, sx, sy), scale_windows(va, sx, sy))
        return cache[T]

    def objective(c) -> float:
        v = grid.values_of(c)
        tr, va = windows_for(int(v["T"]))
        seed = cfg.seed + grid.flat(c)
        model = _new_model(cfg, len(inputs), len(targets), seed, hidden=int(v["hidden"]), T=int(v["T"]),
                           layers=int(v["layers"]))
        tc = train_config(cfg, epochs, batch_size=int(v["batch_size"]), lr=v["lr"], l2=v["l2"],
                          k_fraction=v["k_fraction"], l1=v.get("l1", cfg.l1))
        _, report = train(model, tr, va, tc)
        return min(r.val.maape for r in report.records)

    best, state = hypertune.tune(objective, grid, cfg.budget, cfg.seed, jobs=args.jobs,
                                 ledger=out / "tune_ledger.csv")
    best_cfg = RunConfig(cfg.as_dict())
    for name, value in grid.values_of(best).items():
        best_cfg.set(name, type(cfg[name])(value))
    (out / "best.conf").write_text(best_cfg.to_text())
    print(f"best {grid.values_of(best)} maape={state.incumbent.value:.6f} after {len(state.observations)} evaluations")
    return EXIT_OK


def _numeric_columns(path) -> Tuple[List[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    head = rows[0]
    keep = [j for j, h in enumerate(head) if h != "timestamp"]
    data = np.array([[float(r[j]) for j in keep] for r in rows[1:] if r], dtype=float)
    return [head[j] for j in keep], data.reshape(-1, len(keep))


def cmd_metrics(cfg: RunConfig, args) -> int:
    truth = args.truth or cfg.truth
    pred = args.prediction or cfg.prediction
    if not truth:
        raise ConfigError("truth", "required")
    if not pred:
        raise ConfigError("prediction", "required")
    _, Y = _numeric_columns(truth)
    _, P = _numeric_columns(pred)
    if Y.shape != P.shape:
        raise ValueError(f"truth {Y.shape} and prediction {P.shape} differ in shape")
    rep = MetricReport.compute(Y, P)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rep.to_csv(out / "metrics.csv")
    if rep.note:
        print(f"warning: {rep.note}", file=sys.stderr)
    print(",".join(MetricReport.header()))
    print(",".join(str(v) for v in rep.row()))
    return EXIT_OK


def cmd_select_features(cfg: RunConfig, args) -> int:
    cfg.require("seed")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    table, inputs, targets = load_table(cfg, args.allow_net)
    # sparsity is a property of the end of training; a best-epoch restore could undo the penalty
    model, _ = _train_and_test(cfg, table, inputs, targets, out, keep_best=False)
    ranking = feature_attribution(model, [column_label(k) for k in inputs])
    rep = nonzero_percentage(model.params, model=model, names=[column_label(k) for k in inputs])
    rep.to_csv(out / "sparsity.csv")
    attribution_to_csv(ranking, out / "attribution.csv")
    print(f"non-zero variables: {rep.nonzero_vars}/{rep.total_vars} ({rep.nonzero_pct:.2f}%)")
    return EXIT_OK


COMMANDS = {
    "ingest": (cmd_ingest, "parse stdmet archives into per-station series and an aligned table"),
    "train": (cmd_train, "train a forecaster; writes checkpoint, train_report.csv, test_metrics.csv"),
    "forecast": (cmd_forecast, "autoregressive forecast from a checkpoint and an input table"),
    "reconstruct": (cmd_reconstruct, "estimate one buoy's series from its neighbours"),
    "tune": (cmd_tune, "GP-EI search over the tuning grid; writes tune_ledger.csv and best.conf"),
    "metrics": (cmd_metrics, "error metrics between a truth CSV and a prediction CSV"),
    "select-features": (cmd_select_features, "elastic-net training with sparsity and attribution reports"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="parallel tuning evaluations")
    common.add_argument("--allow-net", action="store_true", help="permit downloading missing archives")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(prog="waveseq", description="Wave-buoy sequence models.",
                                     epilog=keys_help(), formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text,
                           epilog=keys_help(), formatter_class=fmt)
        if name == "ingest":
            p.add_argument("paths", nargs="*", help="stdmet files (default: stations x years from the config)")
        elif name == "forecast":
            p.add_argument("--checkpoint", help="checkpoint directory")
            p.add_argument("--input", help="aligned table CSV whose last T rows feed the encoder")
            p.add_argument("--t-out", type=int, help="forecast steps")
        elif name == "metrics":
            p.add_argument("truth", nargs="?", help="truth CSV")
            p.add_argument("prediction", nargs="?", help="prediction CSV")
    return parser


def _overrides(args) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(key, "--set expects KEY=VALUE")
        out[key.strip()] = value.strip()
    if args.seed is not None:
        out["seed"] = str(args.seed)
    if args.out is not None:
        out["out"] = args.out
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn = COMMANDS[args.command][0]
    try:
        if args.config is not None and not args.config.exists():
            raise FileNotFoundError(f"config file {args.config} not found")
        cfg = load_config(args.config, _overrides(args))
        return fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, StdmetFormatError, EmptyAlignmentError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
