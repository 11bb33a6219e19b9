"""Command-line interface: analyze a dataset, or run simulation studies.

Subcommands
-----------
analyze   Load a summary-data CSV, orient it to a reference risk factor,
          run the requested estimators, and print a report (text, csv, or
          jsonl — all three carry the same fields).
simulate  Run one Monte Carlo scenario (from a flat key=value config file
          and/or flags) and write summary files.
grid      Run the full 64-row scenario grid and write CSV + text tables.

Exit status: 0 success, 1 success with warnings, 2 errors (bad usage, bad
data, estimator failure). Simulation worker threads are controlled by the
MRKIT_THREADS environment variable.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings as _warnings
from dataclasses import dataclass, field

from .data import DataError, SummaryDataset, load_correlation, load_dataset, select_risk_factor
from .estimators import (
    MRResult,
    egger_correlated,
    egger_multivariable,
    egger_univariable,
    f_statistic,
    ivw_correlated,
    ivw_multivariable,
    ivw_univariable,
)
from .orientation import OrientationReport, orient
from .regression import FactorizationError, RankError, WeightScheme
from .simulation import (
    DEFAULT_SEED,
    DESK_REPLICATES,
    GridRow,
    ScenarioConfig,
    SimulationSummary,
    run_scenario_grid,
    run_scenario,
    scenario_config,
)

__all__ = ["AnalysisConfig", "AnalysisReport", "run_analyze", "main"]

_METHOD_LABELS = {
    "UI": "univariable IVW",
    "UE": "univariable MR-Egger",
    "MI": "multivariable IVW",
    "ME": "multivariable MR-Egger",
}
_CAUSAL_UNITS = "log odds ratio per SD of risk factor"
_INTERCEPT_UNITS = "log odds ratio per effect allele"


@dataclass(frozen=True)
class AnalysisConfig:
    """Resolved options for one CLI invocation (any subcommand)."""

    mode: str
    data_path: str | None = None
    k: int | None = None
    corr_path: str | None = None
    methods: tuple[str, ...] = ()
    reference: str | None = None
    scheme: WeightScheme = WeightScheme.MULTIPLICATIVE_RANDOM_EFFECT
    level: float = 0.95
    fmt: str = "text"
    n_participants: int | None = None
    r2: float | None = None
    scenario: int | None = None
    theta1: float = 0.0
    mu: float = 0.0
    correlated: bool = False
    mediation: bool = False
    j_variants: int = 185
    weight_mode: str = "realized"
    replicates: int = DESK_REPLICATES
    seed: int = DEFAULT_SEED
    mediation_only: bool = False
    out_prefix: str | None = None


@dataclass(frozen=True)
class MethodBlock:
    requested: str
    result: MRResult
    note: str | None = None


@dataclass(frozen=True)
class InstrumentBlock:
    n_participants: int
    k_variants: int
    r2: float
    f_stat: float


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the analyze subcommand reports, format-independent."""

    dataset_j: int
    dataset_k: int
    risk_factors: tuple[str, ...]
    correlated: bool
    orientation: OrientationReport | None
    methods: tuple[MethodBlock, ...]
    instrument: InstrumentBlock | None
    warnings: tuple[str, ...] = field(default=())


def run_analyze(config: AnalysisConfig) -> AnalysisReport:
    """Load, orient, estimate; raises on invalid config/data."""
    if not config.methods:
        raise ValueError("no methods requested; use --methods")
    for method in config.methods:
        if method not in _METHOD_LABELS:
            raise ValueError(
                f"unknown method {method!r}; choose from UI, UE, MI, ME")
    if config.data_path is None or config.k is None:
        raise ValueError("analyze requires --data and --k")

    dataset = load_dataset(config.data_path, config.k)
    if config.corr_path is not None:
        dataset = dataset.with_correlation(
            load_correlation(config.corr_path, dataset))

    needs_reference = [m for m in config.methods if m in ("UE", "ME")]
    if config.k > 1:
        needs_reference += [m for m in config.methods if m == "UI"]
    if needs_reference and config.reference is None:
        raise ValueError(
            f"--ref is required for {', '.join(sorted(set(needs_reference)))}"
            f" (orientation / risk-factor selection)")

    captured: list[str] = []
    orientation = None
    analysis = dataset
    if config.reference is not None:
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            analysis, orientation = orient(dataset, config.reference)
        captured.extend(str(w.message) for w in caught)

    blocks = [
        _run_method(method, dataset, analysis, config)
        for method in config.methods
    ]

    instrument = None
    if config.n_participants is not None or config.r2 is not None:
        if config.n_participants is None or config.r2 is None:
            raise ValueError(
                "instrument strength needs both --n-participants and --r2")
        instrument = InstrumentBlock(
            n_participants=config.n_participants,
            k_variants=dataset.j,
            r2=config.r2,
            f_stat=f_statistic(config.n_participants, dataset.j, config.r2),
        )

    return AnalysisReport(
        dataset_j=dataset.j,
        dataset_k=dataset.k,
        risk_factors=dataset.risk_factor_names,
        correlated=dataset.correlation is not None,
        orientation=orientation,
        methods=tuple(blocks),
        instrument=instrument,
        warnings=tuple(captured),
    )


def _run_method(method: str, raw: SummaryDataset, analysis: SummaryDataset,
                config: AnalysisConfig) -> MethodBlock:
    correlated = analysis.correlation is not None
    note = None
    k = analysis.k

    if method == "MI" and k == 1:
        method = "UI"
        note = ("multivariable IVW on a single risk factor reduces to "
                "univariable IVW; reporting it as UI")
    if method == "ME" and k == 1:
        method = "UE"
        note = ("multivariable MR-Egger on a single risk factor reduces to "
                "univariable MR-Egger; reporting it as UE")

    if method == "UI":
        target = analysis if k == 1 else select_risk_factor(
            analysis, config.reference)
        if correlated:
            result = ivw_correlated(target, config.scheme, config.level)
        else:
            result = ivw_univariable(target, config.scheme, config.level)
    elif method == "UE":
        reference = config.reference or analysis.risk_factor_names[0]
        target = analysis if k == 1 else select_risk_factor(analysis,
                                                            reference)
        if correlated:
            result = egger_correlated(target, reference, config.scheme,
                                      config.level)
        else:
            result = egger_univariable(target, config.scheme, config.level)
    elif method == "MI":
        if correlated:
            result = ivw_correlated(analysis, config.scheme, config.level)
        else:
            result = ivw_multivariable(analysis, config.scheme, config.level)
    else:  # ME
        if correlated:
            result = egger_correlated(analysis, config.reference,
                                      config.scheme, config.level)
        else:
            result = egger_multivariable(analysis, config.reference,
                                         config.scheme, config.level)

    if result.experimental and note is None:
        note = ("correlated-variant MR-Egger is experimental; interpret "
                "with caution")
    return MethodBlock(requested=method, result=result, note=note)


# --- report rendering -------------------------------------------------------
# All three formats are views of the same record stream, so they agree
# field-for-field by construction.

_CSV_COLUMNS = [
    "record", "method", "label", "scheme", "variants", "risk_factor",
    "estimate", "se", "ci_low", "ci_high", "p_value", "df", "odds_ratio",
    "or_ci_low", "or_ci_high", "residual_scale", "units", "reference",
    "flipped", "zero_oriented", "ids", "j", "k", "risk_factors",
    "correlated", "experimental", "n_participants", "r2", "f_statistic",
    "message", "note",
]


def _fmt(value: float) -> float | None:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(f"{value:.6g}")


def _report_records(report: AnalysisReport) -> list[dict]:
    records: list[dict] = [{
        "record": "dataset",
        "j": report.dataset_j,
        "k": report.dataset_k,
        "risk_factors": ";".join(report.risk_factors),
        "correlated": report.correlated,
    }]
    if report.orientation is not None:
        records.append({
            "record": "orientation",
            "reference": report.orientation.reference,
            "flipped": len(report.orientation.flipped_ids),
            "zero_oriented": len(report.orientation.zero_ids),
            "ids": ";".join(report.orientation.flipped_ids),
        })
    if report.instrument is not None:
        records.append({
            "record": "instrument_strength",
            "n_participants": report.instrument.n_participants,
            "k": report.instrument.k_variants,
            "r2": _fmt(report.instrument.r2),
            "f_statistic": _fmt(report.instrument.f_stat),
            "units": "dimensionless",
        })
    for block in report.methods:
        result = block.result
        tag = result.estimates[0].method
        records.append({
            "record": "method",
            "method": tag.estimator,
            "label": _METHOD_LABELS[tag.estimator],
            "scheme": tag.scheme.value,
            "variants": tag.variants,
            "df": result.estimates[0].df,
            "residual_scale": _fmt(result.residual_scale),
            "reference": result.orientation_reference,
            "experimental": result.experimental,
            "note": block.note,
        })
        for estimate in result.estimates:
            records.append({
                "record": "estimate",
                "method": tag.estimator,
                "risk_factor": estimate.risk_factor,
                "estimate": _fmt(estimate.theta_hat),
                "se": _fmt(estimate.se),
                "ci_low": _fmt(estimate.ci_low),
                "ci_high": _fmt(estimate.ci_high),
                "p_value": _fmt(estimate.p_value),
                "df": estimate.df,
                "odds_ratio": _fmt(math.exp(estimate.theta_hat)),
                "or_ci_low": _fmt(_safe_exp(estimate.ci_low)),
                "or_ci_high": _fmt(_safe_exp(estimate.ci_high)),
                "units": _CAUSAL_UNITS,
            })
        if result.intercept is not None:
            records.append({
                "record": "intercept",
                "method": tag.estimator,
                "estimate": _fmt(result.intercept.theta_0),
                "se": _fmt(result.intercept.se),
                "p_value": _fmt(result.intercept.p_value),
                "df": result.estimates[0].df,
                "units": _INTERCEPT_UNITS,
            })
    for message in report.warnings:
        records.append({"record": "warning", "message": message})
    return records


def _safe_exp(value: float) -> float:
    return math.exp(value) if not math.isnan(value) else math.nan


def _num(value, missing: str = "n/a") -> str:
    if value is None:
        return missing
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_text(report: AnalysisReport) -> str:
    lines = []
    for record in _report_records(report):
        kind = record["record"]
        if kind == "dataset":
            names = record["risk_factors"].replace(";", ", ")
            lines.append(
                f"Dataset: J={record['j']} variants, K={record['k']} risk "
                f"factor(s): {names}")
            lines.append(
                "Variant correlation: "
                + ("supplied (generalized weighting)"
                   if record["correlated"] else "none (independent)"))
        elif kind == "orientation":
            lines.append(
                f"Orientation: reference {record['reference']}; "
                f"{record['flipped']} variant(s) flipped; "
                f"{record['zero_oriented']} with zero reference association")
            if record["ids"]:
                lines.append(f"  flipped: {record['ids'].replace(';', ', ')}")
        elif kind == "instrument_strength":
            lines.append(
                f"Instrument strength: R2={_num(record['r2'])}, "
                f"N={record['n_participants']}, k={record['k']} variants, "
                f"F={_num(record['f_statistic'])} (dimensionless)")
        elif kind == "method":
            lines.append("")
            title = (f"[{record['method']}] {record['label']} — "
                     f"{record['scheme']}-effects, {record['variants']} "
                     f"variants")
            lines.append(title)
            detail = (f"  df={record['df']}, residual scale="
                      f"{_num(record['residual_scale'])}")
            if record["reference"]:
                detail += f", oriented to {record['reference']}"
            if record["experimental"]:
                detail += "  [EXPERIMENTAL]"
            lines.append(detail)
            if record["note"]:
                lines.append(f"  note: {record['note']}")
            lines.append(
                f"  {'risk factor':<12} {'estimate':>10} {'se':>10} "
                f"{'95% CI':>24} {'p':>10}  {'OR (95% CI)':>26}")
        elif kind == "estimate":
            ci = f"[{_num(record['ci_low'])}, {_num(record['ci_high'])}]"
            or_ci = (f"{_num(record['odds_ratio'])} "
                     f"({_num(record['or_ci_low'])}, "
                     f"{_num(record['or_ci_high'])})")
            lines.append(
                f"  {record['risk_factor']:<12} "
                f"{_num(record['estimate']):>10} {_num(record['se']):>10} "
                f"{ci:>24} {_num(record['p_value']):>10}  {or_ci:>26}")
            lines.append(f"    units: {record['units']}")
        elif kind == "intercept":
            lines.append(
                f"  intercept (average direct effect): "
                f"{_num(record['estimate'])} (se {_num(record['se'])}), "
                f"p={_num(record['p_value'])}  [{record['units']}]")
        elif kind == "warning":
            lines.append(f"warning: {record['message']}")
    return "\n".join(lines) + "\n"


def render_csv(report: AnalysisReport) -> str:
    import csv
    import io

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_CSV_COLUMNS, restval="",
                            lineterminator="\n")
    writer.writeheader()
    for record in _report_records(report):
        row = {}
        for key, value in record.items():
            if value is None:
                row[key] = ""
            elif isinstance(value, bool):
                row[key] = "true" if value else "false"
            elif isinstance(value, float):
                row[key] = f"{value:.6g}"
            else:
                row[key] = value
        writer.writerow(row)
    return buffer.getvalue()


def render_jsonl(report: AnalysisReport) -> str:
    lines = [json.dumps(record, sort_keys=True)
             for record in _report_records(report)]
    return "\n".join(lines) + "\n"


_RENDERERS = {"text": render_text, "csv": render_csv, "jsonl": render_jsonl}


# --- simulate / grid --------------------------------------------------------

_SUMMARY_COLUMNS = [
    "mi_mean", "mi_mean_se", "mi_power_pct",
    "ue_mean", "ue_mean_se", "ue_power_pct", "ue_intercept_power_pct",
    "me_mean", "me_mean_se", "me_power_pct", "me_intercept_power_pct",
    "replicates_used", "failures",
]


def _summary_cells(summary: SimulationSummary) -> list[str]:
    def pct(x):
        return f"{100.0 * x:.6g}"

    cells = []
    for est in (summary.mi, summary.ue, summary.me):
        cells += [f"{est.mean_theta1:.6g}", f"{est.mean_se:.6g}",
                  pct(est.power_causal)]
        if est.power_intercept is not None:
            cells.append(pct(est.power_intercept))
    cells += [str(summary.mi.replicates_used), str(summary.failures)]
    return cells


def _scenario_text(scenario: int, mu: float) -> str:
    return {
        1: "no pleiotropy",
        2: "balanced pleiotropy",
        3: f"directional (mu={mu:g}), InSIDE ok",
        4: f"directional (mu={mu:g}), InSIDE violated",
    }[scenario]


def _grid_text_table(rows: list[GridRow]) -> str:
    header = (f"{'theta1':>6}  {'pleiotropy':<36}"
              f"{'MI mean (se)':>18} {'pw%':>6}"
              f"{'UE mean (se)':>18} {'pw%':>6} {'int%':>6}"
              f"{'ME mean (se)':>18} {'pw%':>6} {'int%':>6}")
    lines = []
    block = None
    for row in rows:
        key = (row.mediation, row.correlated)
        if key != block:
            block = key
            grid = "mediation grid" if row.mediation else "main grid"
            corr = "correlated" if row.correlated else "independent"
            lines += ["", f"== {grid}, {corr} risk factors ==", header]
        s = row.summary

        def cell(est):
            return f"{est.mean_theta1:+.3f} ({est.mean_se:.3f})"

        lines.append(
            f"{row.theta1:>6.1f}  {_scenario_text(row.scenario, row.mu):<36}"
            f"{cell(s.mi):>18} {100 * s.mi.power_causal:>6.1f}"
            f"{cell(s.ue):>18} {100 * s.ue.power_causal:>6.1f} "
            f"{100 * s.ue.power_intercept:>6.1f}"
            f"{cell(s.me):>18} {100 * s.me.power_causal:>6.1f} "
            f"{100 * s.me.power_intercept:>6.1f}")
    return "\n".join(lines).lstrip("\n") + "\n"


def _write_grid_outputs(rows: list[GridRow], config: AnalysisConfig) -> list[str]:
    import csv

    prefix = config.out_prefix or "mrkit_grid"
    csv_path, txt_path = f"{prefix}.csv", f"{prefix}.txt"
    audit = (f"# seed={config.seed} replicates={config.replicates} "
             f"rows={len(rows)} mediation_only="
             f"{'true' if config.mediation_only else 'false'}")
    with open(csv_path, "w", newline="") as handle:
        handle.write("# mrkit grid\n")
        handle.write(audit + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["row", "grid", "correlated", "theta1", "scenario",
                         "mu", "seed"] + _SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([
                row.index,
                "mediation" if row.mediation else "main",
                "true" if row.correlated else "false",
                f"{row.theta1:g}",
                row.scenario,
                f"{row.mu:g}",
                row.seed,
            ] + _summary_cells(row.summary))
    text = _grid_text_table(rows)
    with open(txt_path, "w") as handle:
        handle.write("mrkit grid\n" + audit.lstrip("# ") + "\n\n")
        handle.write(text)
    return [csv_path, txt_path]


def _write_simulate_outputs(config: ScenarioConfig, scenario: int,
                            summary: SimulationSummary,
                            out_prefix: str) -> list[str]:
    import csv

    csv_path, txt_path = f"{out_prefix}.csv", f"{out_prefix}.txt"
    audit = (f"# scenario={scenario} theta1={config.theta[0]:g} "
             f"mu={config.mu:g} correlated="
             f"{'true' if config.rhos != (0.0, 0.0, 0.0) else 'false'} "
             f"gamma={config.gamma:g} j_variants={config.j_variants} "
             f"replicates={config.replicates} seed={config.seed} "
             f"weight_mode={config.weight_mode}")
    with open(csv_path, "w", newline="") as handle:
        handle.write("# mrkit simulate\n")
        handle.write(audit + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["scenario", "theta1", "mu", "gamma", "j_variants",
                         "replicates", "seed", "weight_mode"]
                        + _SUMMARY_COLUMNS)
        writer.writerow([
            scenario, f"{config.theta[0]:g}", f"{config.mu:g}",
            f"{config.gamma:g}", config.j_variants, config.replicates,
            config.seed, config.weight_mode,
        ] + _summary_cells(summary))

    lines = ["mrkit simulate", audit.lstrip("# "), ""]
    lines.append(f"{'estimator':<12} {'mean theta1':>12} {'mean se':>10} "
                 f"{'power %':>8} {'intercept power %':>18}")
    for est in (summary.mi, summary.ue, summary.me):
        intercept_power = ("" if est.power_intercept is None
                           else f"{100 * est.power_intercept:.1f}")
        lines.append(
            f"{est.estimator:<12} {est.mean_theta1:>12.4f} "
            f"{est.mean_se:>10.4f} {100 * est.power_causal:>8.1f} "
            f"{intercept_power:>18}")
    lines.append(f"replicates used: {summary.mi.replicates_used}; "
                 f"failures: {summary.failures}")
    text = "\n".join(lines) + "\n"
    with open(txt_path, "w") as handle:
        handle.write(text)
    print(text, end="")
    return [csv_path, txt_path]


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; '#' comments and blank lines ignored."""
    values: dict[str, str] = {}
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(
                    f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


_CONFIG_KEYS = {
    "scenario": int,
    "theta1": float,
    "mu": float,
    "correlated": None,  # bool
    "mediation": None,
    "j_variants": int,
    "replicates": int,
    "seed": int,
    "weight_mode": str,
}


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"config key {key} expects a boolean, got {value!r}")


def _simulate_settings(args: argparse.Namespace) -> dict:
    settings: dict = {}
    if args.config is not None:
        for key, value in _parse_config_file(args.config).items():
            if key not in _CONFIG_KEYS:
                raise ValueError(
                    f"unknown config key {key!r}; valid keys: "
                    f"{', '.join(sorted(_CONFIG_KEYS))}")
            caster = _CONFIG_KEYS[key]
            settings[key] = (_parse_bool(value, key) if caster is None
                             else caster(value))
    for key in _CONFIG_KEYS:
        override = getattr(args, key, None)
        if override is not None:
            settings[key] = override
    if "scenario" not in settings:
        raise ValueError(
            "simulate needs a scenario: pass --scenario or a config file "
            "with a scenario= line")
    return settings


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = AnalysisConfig(
        mode="analyze",
        data_path=args.data,
        k=args.k,
        corr_path=args.corr,
        methods=tuple(m.strip().upper()
                      for m in args.methods.split(",") if m.strip()),
        reference=args.ref,
        scheme=(WeightScheme.FIXED_EFFECT if args.scheme == "fixed"
                else WeightScheme.MULTIPLICATIVE_RANDOM_EFFECT),
        level=args.level,
        fmt=args.format,
        n_participants=args.n_participants,
        r2=args.r2,
    )
    report = run_analyze(config)
    sys.stdout.write(_RENDERERS[config.fmt](report))
    return 1 if report.warnings else 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    settings = _simulate_settings(args)
    scenario = settings.pop("scenario")
    config = scenario_config(
        scenario,
        theta1=settings.get("theta1", 0.0),
        mu=settings.get("mu", 0.0),
        correlated=settings.get("correlated", False),
        mediation=settings.get("mediation", False),
        j_variants=settings.get("j_variants", 185),
        replicates=settings.get("replicates", DESK_REPLICATES),
        seed=settings.get("seed", DEFAULT_SEED),
        weight_mode=settings.get("weight_mode", "realized"),
    )
    summary = run_scenario(config)
    paths = _write_simulate_outputs(config, scenario, summary,
                                    args.out or "mrkit_sim")
    print(f"wrote {', '.join(paths)}")
    if summary.failures:
        print(f"warning: {summary.failures} replicate(s) failed",
              file=sys.stderr)
        return 1
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    rows = list(run_scenario_grid(replicates=args.replicates, seed=args.seed))
    if args.mediation:
        rows = [row for row in rows if row.mediation]
    config = AnalysisConfig(mode="grid", replicates=args.replicates,
                            seed=args.seed, mediation_only=args.mediation,
                            out_prefix=args.out)
    paths = _write_grid_outputs(rows, config)
    sys.stdout.write(_grid_text_table(rows))
    print(f"wrote {', '.join(paths)}")
    failures = sum(row.summary.failures for row in rows)
    if failures:
        print(f"warning: {failures} replicate(s) failed across the grid",
              file=sys.stderr)
        return 1
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrkit",
        description=("Summary-data Mendelian randomization: IVW and "
                     "MR-Egger estimation, and Monte Carlo studies."),
        epilog=("Simulation worker threads: set MRKIT_THREADS (default "
                "min(4, cpu count)). Determinism is guaranteed for any "
                "thread count."),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser(
        "analyze", help="estimate causal effects from a summary-data CSV")
    analyze.add_argument("--data", required=True,
                         help="summary-data CSV (see README for the schema)")
    analyze.add_argument("--k", required=True, type=int,
                         help="number of risk-factor columns in the file")
    analyze.add_argument("--corr",
                         help="optional JxJ variant correlation CSV")
    analyze.add_argument("--methods", required=True,
                         help="comma-separated subset of UI,UE,MI,ME")
    analyze.add_argument("--ref",
                         help="reference risk factor for orientation "
                              "(required by UE/ME, and by UI when K > 1)")
    analyze.add_argument("--scheme", choices=("fixed", "random"),
                         default="random",
                         help="fixed-effect or multiplicative random-effects "
                              "standard errors (default random)")
    analyze.add_argument("--level", type=float, default=0.95,
                         help="confidence level (default 0.95)")
    analyze.add_argument("--format", choices=("text", "csv", "jsonl"),
                         default="text", help="output format (default text)")
    analyze.add_argument("--n-participants", type=int,
                         help="sample size behind the risk-factor "
                              "associations (for the F-statistic block)")
    analyze.add_argument("--r2", type=float,
                         help="variance in the reference risk factor "
                              "explained by the variants (for the "
                              "F-statistic block)")
    analyze.set_defaults(func=_cmd_analyze)

    simulate = sub.add_parser(
        "simulate", help="run one Monte Carlo scenario")
    simulate.add_argument("--config",
                          help="flat key=value config file (keys: scenario, "
                               "theta1, mu, correlated, mediation, "
                               "j_variants, replicates, seed, weight_mode)")
    simulate.add_argument("--scenario", type=int, choices=(1, 2, 3, 4),
                          help="pleiotropy scenario (1 none, 2 balanced, "
                               "3 directional, 4 InSIDE-violated)")
    simulate.add_argument("--theta1", type=float, help="causal effect of x1")
    simulate.add_argument("--mu", type=float,
                          help="mean direct effect (scenarios 3-4)")
    simulate.add_argument("--correlated", action="store_const", const=True,
                          help="correlated risk-factor associations")
    simulate.add_argument("--mediation", action="store_const", const=True,
                          help="x1 partially mediated through x2 "
                               "(gamma = 0.5)")
    simulate.add_argument("--j-variants", dest="j_variants", type=int,
                          help="variants per dataset (default 185)")
    simulate.add_argument("--weight-mode", dest="weight_mode",
                          choices=("realized", "variance_component"),
                          help="outcome-se convention (default realized)")
    simulate.add_argument("--reps", dest="replicates", type=int,
                          help=f"replicates (default {DESK_REPLICATES}; "
                               f"full-scale studies use 10000)")
    simulate.add_argument("--seed", type=int, help="root RNG seed")
    simulate.add_argument("--out", help="output file prefix "
                                        "(default mrkit_sim)")
    simulate.set_defaults(func=_cmd_simulate)

    grid = sub.add_parser(
        "grid", help="run the 64-row scenario grid")
    grid.add_argument("--reps", dest="replicates", type=int,
                      default=DESK_REPLICATES,
                      help=f"replicates per row (default {DESK_REPLICATES}; "
                           f"full-scale studies use 10000)")
    grid.add_argument("--seed", type=int, default=DEFAULT_SEED,
                      help=f"root RNG seed (default {DEFAULT_SEED})")
    grid.add_argument("--mediation", action="store_true",
                      help="write only the 32 mediation rows")
    grid.add_argument("--out", help="output file prefix "
                                    "(default mrkit_grid)")
    grid.set_defaults(func=_cmd_grid)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RankError, FactorizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
