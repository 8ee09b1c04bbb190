"""Command-line pipeline wiring all stages end to end.

Subcommands: ``synth`` (generate a cohort), ``ingest`` (validate and
normalize raw logs), ``featurize`` (daily feature/label tables),
``train`` (per-user grid search, saved models), ``evaluate`` (per-user +
pooled report), ``report`` (category usage, optional SVG plot).

Configuration is a plain key=value file; any command-line flag overrides
the file. Exit codes: 0 success, 1 fatal data/pipeline error, 2
configuration error. All artifacts are written deterministically, so a
rerun with the same inputs and seed reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import features as features_mod
from . import ingest as ingest_mod
from .errors import ConfigError, PipelineError, SchemaError
from .evaluation import (
    MIN_LABELED_DAYS,
    SplitSpec,
    category_usage_summary,
    evaluate_cohort,
    format_report_table,
    report_csv_text,
    split_train_test,
    usage_svg_text,
)
from .features import (
    FEATURE_NAMES,
    LABEL_REDUCERS,
    DailyFeatureVector,
    DailyLabel,
    aggregate_daily_label,
    extract_daily_features,
    join_features_labels,
)
from .model_selection import FoldSpec, default_grid, grid_search, load_grid
from .svm import model_to_json, train_multiclass
from .synth import HETEROGENEITY_MODES, CohortSpec, generate_cohort
from .taxonomy import Taxonomy, default_taxonomy, load_taxonomy

_DATE_FORMAT = "%Y-%m-%d"


@dataclass(frozen=True)
class PipelineConfig:
    output_dir: str = "out"
    events: str | None = None
    screen: str | None = None
    ema: str | None = None
    taxonomy: str | None = None
    grid: str | None = None
    timezone: str = "UTC"
    label_reducer: str = "mean"
    seed: int = 42
    k: int = 10
    stratified: bool = True
    fold_seed: int | None = None
    split_seed: int | None = None
    split_mode: str = "chronological"
    train_fraction: float = 0.7
    min_days: int = MIN_LABELED_DAYS
    work_hours: bool = False
    work_start: str = "09:00"
    work_end: str = "18:00"
    n_users: int = 22
    n_days: int = 30
    signal_strength: float = 0.9
    heterogeneity: str = "per_user_rules"
    ema_missing_rate: float = 0.05

    def path(self, name: str, default_basename: str) -> str:
        configured = getattr(self, name)
        if configured:
            return configured
        return os.path.join(self.output_dir, default_basename)

    def fold_spec(self) -> FoldSpec:
        seed = self.seed if self.fold_seed is None else self.fold_seed
        return FoldSpec(k=self.k, seed=seed, stratified=self.stratified)

    def split_spec(self) -> SplitSpec:
        seed = self.seed if self.split_seed is None else self.split_seed
        return SplitSpec(train_fraction=self.train_fraction, mode=self.split_mode, seed=seed)


_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}

_CONFIG_PARSERS = {
    "output_dir": str, "events": str, "screen": str, "ema": str, "taxonomy": str,
    "grid": str, "timezone": str, "label_reducer": str, "split_mode": str,
    "heterogeneity": str, "work_start": str, "work_end": str,
    "seed": int, "k": int, "fold_seed": int, "split_seed": int,
    "min_days": int, "n_users": int, "n_days": int,
    "train_fraction": float, "signal_strength": float, "ema_missing_rate": float,
    "stratified": "bool", "work_hours": "bool",
}


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("cli", f"cannot read config file {path}: {exc}") from exc
    values: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("cli", f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        parser = _CONFIG_PARSERS.get(key)
        if parser is None:
            raise ConfigError("cli", f"{path}:{lineno}: unknown config key {key!r}")
        try:
            if parser == "bool":
                values[key] = _BOOL_WORDS[value.lower()]
            else:
                values[key] = parser(value)
        except (ValueError, KeyError) as exc:
            raise ConfigError("cli", f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def build_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig()
    if getattr(args, "config", None):
        config = replace(config, **load_config_file(args.config))
    overrides = {}
    for field_name in (
        "output_dir", "events", "screen", "ema", "taxonomy", "grid", "timezone",
        "seed", "k", "n_users", "n_days", "signal_strength", "heterogeneity",
        "label_reducer",
    ):
        value = getattr(args, field_name, None)
        if value is not None:
            overrides[field_name] = value
    if overrides:
        config = replace(config, **overrides)
    if config.label_reducer not in LABEL_REDUCERS:
        raise ConfigError("cli", f"label_reducer must be one of {LABEL_REDUCERS}")
    if config.seed < 0:
        raise ConfigError("cli", "seed must be non-negative")
    if config.min_days < 2:
        raise ConfigError("cli", "min_days must be at least 2")
    return config


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError("cli", f"{what} file does not exist: {path}")
    return path


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _emit_diagnostics(diagnostics) -> None:
    for diag in diagnostics:
        print(diag, file=sys.stderr)


# -- artifact readers/writers -------------------------------------------------


def events_csv_text(events) -> str:
    lines = [",".join(ingest_mod.APP_EVENT_COLUMNS)]
    for ev in events:
        lines.append(
            f"{ev.user_id},{ev.app_id},{ingest_mod.format_timestamp(ev.start)},"
            f"{ingest_mod.format_timestamp(ev.end)}"
        )
    return "\n".join(lines) + "\n"


def screens_csv_text(screens) -> str:
    lines = [",".join(ingest_mod.SCREEN_COLUMNS)]
    for iv in screens:
        lines.append(
            f"{iv.user_id},{ingest_mod.format_timestamp(iv.start)},{ingest_mod.format_timestamp(iv.end)}"
        )
    return "\n".join(lines) + "\n"


def emas_csv_text(emas) -> str:
    lines = [",".join(ingest_mod.EMA_COLUMNS)]
    for r in emas:
        lines.append(f"{r.user_id},{ingest_mod.format_timestamp(r.at)},{r.level}")
    return "\n".join(lines) + "\n"


def truth_csv_text(truth) -> str:
    lines = ["user_id,date,latent_stress,rule_id"]
    for t in truth:
        lines.append(f"{t.user_id},{t.date.isoformat()},{t.latent_stress},{t.rule_id}")
    return "\n".join(lines) + "\n"


def features_csv_text(vectors: list[DailyFeatureVector]) -> str:
    lines = ["user_id,date," + ",".join(FEATURE_NAMES)]
    for v in vectors:
        values = ",".join(str(int(getattr(v, name))) for name in FEATURE_NAMES)
        lines.append(f"{v.user_id},{v.date.isoformat()},{values}")
    return "\n".join(lines) + "\n"


def labels_csv_text(labels: list[DailyLabel]) -> str:
    lines = ["user_id,date,level,n_responses"]
    for l in labels:
        lines.append(f"{l.user_id},{l.date.isoformat()},{l.level},{l.n_responses}")
    return "\n".join(lines) + "\n"


def read_features_csv(path: str) -> list[DailyFeatureVector]:
    import csv
    import datetime as dt

    expected = ["user_id", "date"] + FEATURE_NAMES
    vectors = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected:
            raise SchemaError("cli", f"{path}: expected columns {expected}, got {reader.fieldnames}")
        for row in reader:
            vectors.append(
                DailyFeatureVector(
                    user_id=row["user_id"],
                    date=dt.date.fromisoformat(row["date"]),
                    **{name: int(row[name]) for name in FEATURE_NAMES},
                )
            )
    return vectors


def read_labels_csv(path: str) -> list[DailyLabel]:
    import csv
    import datetime as dt

    expected = ["user_id", "date", "level", "n_responses"]
    labels = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected:
            raise SchemaError("cli", f"{path}: expected columns {expected}, got {reader.fieldnames}")
        for row in reader:
            labels.append(
                DailyLabel(
                    user_id=row["user_id"],
                    date=dt.date.fromisoformat(row["date"]),
                    level=int(row["level"]),
                    n_responses=int(row["n_responses"]),
                )
            )
    return labels


# -- shared loading steps -----------------------------------------------------


def _load_taxonomy(config: PipelineConfig) -> Taxonomy:
    if config.taxonomy is None:
        return default_taxonomy()
    path = _require_file(config.taxonomy, "taxonomy")
    with open(path, "rb") as fh:
        return load_taxonomy(fh)


def _work_filter(config: PipelineConfig) -> ingest_mod.WorkHoursFilter:
    if not config.work_hours:
        return ingest_mod.WorkHoursFilter(enabled=False)
    import datetime as dt

    try:
        start = dt.time.fromisoformat(config.work_start)
        end = dt.time.fromisoformat(config.work_end)
    except ValueError as exc:
        raise ConfigError("cli", f"bad work-hours bounds: {exc}") from exc
    return ingest_mod.WorkHoursFilter(
        enabled=True, weekday_start=start, weekday_end=end, timezone=config.timezone
    )


def _load_clean_logs(config: PipelineConfig):
    """Parse, filter, normalize, and clip the three raw log files."""
    events_path = _require_file(config.path("events", "app_events.csv"), "app events")
    screen_path = _require_file(config.path("screen", "screen.csv"), "screen")
    ema_path = _require_file(config.path("ema", "ema.csv"), "ema")
    with open(events_path, "rb") as fh:
        ev_result = ingest_mod.parse_app_events(fh)
    with open(screen_path, "rb") as fh:
        sc_result = ingest_mod.parse_screen_intervals(fh)
    with open(ema_path, "rb") as fh:
        ema_result = ingest_mod.parse_ema(fh)
    _emit_diagnostics(ev_result.diagnostics)
    _emit_diagnostics(sc_result.diagnostics)
    _emit_diagnostics(ema_result.diagnostics)
    events = ingest_mod.apply_work_filter(ev_result.records, _work_filter(config))
    screens = ingest_mod.normalize_screen_intervals(sc_result.records)
    clipped = ingest_mod.clip_to_screen_on(events, screens)
    n_diags = len(ev_result.diagnostics) + len(sc_result.diagnostics) + len(ema_result.diagnostics)
    return clipped, screens, ema_result.records, n_diags


def _grid(config: PipelineConfig):
    if config.grid is None:
        return default_grid()
    return load_grid(_require_file(config.grid, "grid"))


def _pairs_by_user(config: PipelineConfig) -> dict[str, list[tuple[np.ndarray, int]]]:
    features = read_features_csv(
        _require_file(os.path.join(config.output_dir, "features.csv"), "features")
    )
    labels = read_labels_csv(
        _require_file(os.path.join(config.output_dir, "labels.csv"), "labels")
    )
    pairs, join_report = join_features_labels(features, labels)
    print(
        f"joined {join_report.n_joined} user-days "
        f"({join_report.n_features_unmatched} feature rows and "
        f"{join_report.n_labels_unmatched} label rows unmatched)"
    )
    grouped: dict[str, list[tuple[np.ndarray, int]]] = {}
    for fv, level in pairs:
        grouped.setdefault(fv.user_id, []).append((fv.as_array(), level))
    return grouped


# -- subcommands --------------------------------------------------------------


def cmd_synth(config: PipelineConfig, args: argparse.Namespace) -> int:
    spec = CohortSpec(
        n_users=config.n_users,
        n_days=config.n_days,
        seed=config.seed,
        signal_strength=config.signal_strength,
        heterogeneity=config.heterogeneity,
        ema_missing_rate=config.ema_missing_rate,
    )
    cohort = generate_cohort(spec)
    out = config.output_dir
    _write_text(os.path.join(out, "app_events.csv"), events_csv_text(cohort.events))
    _write_text(os.path.join(out, "screen.csv"), screens_csv_text(cohort.screens))
    _write_text(os.path.join(out, "ema.csv"), emas_csv_text(cohort.emas))
    _write_text(os.path.join(out, "truth.csv"), truth_csv_text(cohort.truth))
    print(
        f"wrote cohort to {out}: {spec.n_users} users x {spec.n_days} days, "
        f"{len(cohort.events)} events, {len(cohort.emas)} ema responses "
        f"(seed {spec.seed}, signal {spec.signal_strength:g}, {spec.heterogeneity})"
    )
    return 0


def cmd_ingest(config: PipelineConfig, args: argparse.Namespace) -> int:
    _load_taxonomy(config)  # validates the configured taxonomy early
    clipped, screens, emas, n_diags = _load_clean_logs(config)
    out = config.output_dir
    _write_text(os.path.join(out, "events_clean.csv"), events_csv_text(clipped))
    _write_text(os.path.join(out, "screen_clean.csv"), screens_csv_text(screens))
    _write_text(os.path.join(out, "ema_clean.csv"), emas_csv_text(emas))
    print(
        f"ingested {len(clipped)} screen-clipped events, {len(screens)} screen intervals, "
        f"{len(emas)} ema responses ({n_diags} rows rejected; see stderr)"
    )
    return 0


def cmd_featurize(config: PipelineConfig, args: argparse.Namespace) -> int:
    taxonomy = _load_taxonomy(config)
    clipped, _, emas, _ = _load_clean_logs(config)
    vectors = extract_daily_features(clipped, taxonomy, tz=config.timezone)
    labels = aggregate_daily_label(emas, tz=config.timezone, reducer=config.label_reducer)
    out = config.output_dir
    _write_text(os.path.join(out, "features.csv"), features_csv_text(vectors))
    _write_text(os.path.join(out, "labels.csv"), labels_csv_text(labels))
    print(f"wrote {len(vectors)} feature rows and {len(labels)} label rows to {out}")
    return 0


def cmd_train(config: PipelineConfig, args: argparse.Namespace) -> int:
    grouped = _pairs_by_user(config)
    grid = _grid(config)
    fold_spec = config.fold_spec()
    split_spec = config.split_spec()
    models_dir = os.path.join(config.output_dir, "models")
    n_saved = 0
    for user_id in sorted(grouped):
        pairs = grouped[user_id]
        if len(pairs) < config.min_days:
            print(f"{user_id}: skipped ({len(pairs)} labeled days < {config.min_days})")
            continue
        train, _ = split_train_test(pairs, split_spec)
        if len({label for _, label in train}) < 2:
            print(f"{user_id}: skipped (single-class training split)")
            continue
        selection = grid_search(train, grid, fold_spec)
        print(f"{user_id}: grid ({len(selection.table)} points)")
        for (kernel, c), accuracy in selection.table.items():
            print(f"  {kernel.describe():<28} c={c:<8g} cv={accuracy:.4f}")
        kernel, params = selection.best
        print(
            f"  selected {kernel.describe()} c={params.c:g} "
            f"(cv accuracy {selection.cv_accuracy:.4f}, {len(train)} training days)"
        )
        model = train_multiclass(train, kernel, params)
        _write_text(os.path.join(models_dir, f"{user_id}.json"), model_to_json(model) + "\n")
        n_saved += 1
    print(f"saved {n_saved} models to {models_dir}")
    return 0


def cmd_evaluate(config: PipelineConfig, args: argparse.Namespace) -> int:
    grouped = _pairs_by_user(config)
    report = evaluate_cohort(
        grouped, _grid(config), config.fold_spec(), config.split_spec(), min_days=config.min_days
    )
    table = format_report_table(report)
    csv_path = os.path.join(config.output_dir, "report.csv")
    _write_text(csv_path, report_csv_text(report))
    _write_text(os.path.join(config.output_dir, "report.txt"), table)
    print(table, end="")
    print(f"wrote {csv_path}")
    return 0


def cmd_report(config: PipelineConfig, args: argparse.Namespace) -> int:
    taxonomy = _load_taxonomy(config)
    clipped, _, _, _ = _load_clean_logs(config)
    usage = category_usage_summary(clipped, taxonomy, timezone=config.timezone)
    print(f"{'category':<20}{'uses/day':>12}{'sec/use':>12}")
    for cat, (freq, dur) in usage.items():
        print(f"{cat.value:<20}{freq:>12.3f}{dur:>12.1f}")
    if args.plot:
        svg_path = os.path.join(config.output_dir, "usage.svg")
        _write_text(svg_path, usage_svg_text(usage))
        print(f"wrote {svg_path}")
    return 0


_HANDLERS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--output-dir", dest="output_dir", help="artifact directory (default: out)")
    common.add_argument("--events", help="app events CSV path")
    common.add_argument("--screen", help="screen intervals CSV path")
    common.add_argument("--ema", help="ema responses CSV path")
    common.add_argument("--taxonomy", help="taxonomy CSV path (default: bundled)")
    common.add_argument("--timezone", help="feature timezone (default: UTC)")
    common.add_argument("--seed", type=int, help="master seed for folds/splits/generation")

    parser = argparse.ArgumentParser(
        prog="appstress",
        description="Predict daily perceived stress from smartphone app-usage logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    p.add_argument("--n-users", dest="n_users", type=int, help="number of users (default: 22)")
    p.add_argument("--n-days", dest="n_days", type=int, help="days per user (default: 30)")
    p.add_argument(
        "--signal-strength", dest="signal_strength", type=float,
        help="probability a day's usage follows the latent stress (default: 0.9)",
    )
    p.add_argument(
        "--heterogeneity", choices=HETEROGENEITY_MODES,
        help="rule assignment across users (default: per_user_rules)",
    )

    sub.add_parser("ingest", parents=[common], help="validate, normalize, and clip raw logs")

    p = sub.add_parser("featurize", parents=[common], help="emit daily features and labels")
    p.add_argument(
        "--reducer", dest="label_reducer", choices=LABEL_REDUCERS,
        help="daily label aggregation (default: mean)",
    )

    for name, help_text in (
        ("train", "grid-search and save per-user models"),
        ("evaluate", "per-user and pooled evaluation report"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--k", type=int, help="cross-validation folds (default: 10)")
        p.add_argument("--grid", help="JSON grid file (default: built-in grid)")

    p = sub.add_parser("report", parents=[common], help="category usage summary")
    p.add_argument("--plot", action="store_true", help="also write an SVG scatter plot")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        return _HANDLERS[args.command](config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
