"""Command-line front end.

Subcommands: ``simulate`` (exact distribution and aggregates), ``counts``
(Poisson coincidence tables), ``analyze`` (count-table ingestion),
``sweep`` (per-angle tables feeding the fit), ``fit`` (Bell-magnitude
line fit), ``figures`` (plot-ready csv/svg) and ``validate`` (invariant
suites).  Reports are JSON by default, comma-separated tables on request.
Angles are degrees everywhere.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import figures as figmod
from . import selfcheck
from .analysis import MINIMAL_OUTCOMES, fit_bell_magnitude, pbflip_outcome
from .core import (
    CIRELSON_BOUND,
    TwoQubitState,
    VisibilityPair,
    bell_expectation,
    singlet_state,
    werner_state,
)
from .sim import (
    ALL_OUTCOMES,
    CountFileError,
    aggregate_b,
    b_value,
    joint_distribution,
    probabilities_from_counts,
    read_count_table,
    sample_counts,
    write_count_table,
)

#: Environment variable naming the directory for outputs written without
#: an explicit --out / --out-dir.
OUTPUT_DIR_ENV = "JOINTBELL_OUTPUT_DIR"

_CONFIG_FIELDS = {
    "state": str,
    "theta_a": float,
    "theta_b": float,
    "mean_total": float,
    "seed": int,
    "out": str,
    "format": str,
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: built-in defaults, overlaid by a config
    file, overlaid by explicit command-line flags."""

    state: str = "singlet"
    theta_a: float = 45.0
    theta_b: float = 45.0
    mean_total: float = 100000.0
    seed: int = 1
    out: str | None = None
    format: str = "json"


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines into typed config values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_FIELDS[key](value)
        except ValueError:
            raise ValueError(f"config line {lineno}: bad value {value!r} for {key!r}") from None
    return values


def serialize_config(config: RunConfig) -> str:
    lines = []
    for key in _CONFIG_FIELDS:
        value = getattr(config, key)
        if value is not None:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def build_config(file_values: dict | None = None, **overrides) -> RunConfig:
    config = RunConfig()
    if file_values:
        config = replace(config, **file_values)
    config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
    if config.format not in ("json", "csv"):
        raise ValueError(f"format must be 'json' or 'csv', got {config.format!r}")
    return config


def parse_state_spec(spec: str) -> TwoQubitState:
    """Resolve 'singlet', 'werner:<v>' or a 4x4 matrix file path."""
    if spec == "singlet":
        return singlet_state()
    if spec.startswith("werner:"):
        try:
            v = float(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad mixing parameter in state spec {spec!r}") from None
        return werner_state(v)
    path = Path(spec)
    if not path.is_file():
        raise ValueError(
            f"state must be 'singlet', 'werner:<v>' or a matrix file path; {spec!r} is none"
        )
    try:
        matrix = np.loadtxt(path, dtype=complex)
    except Exception as exc:
        raise ValueError(f"cannot read matrix file {spec!r}: {exc}") from None
    return TwoQubitState(rho=matrix)


def _output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _resolve_out(out: str | None, default_name: str) -> Path:
    if out is not None:
        return Path(out)
    directory = _output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    return directory / default_name


def _load_config(config_path: str | None, **overrides) -> RunConfig:
    file_values = None
    if config_path is not None:
        try:
            file_values = parse_config_text(Path(config_path).read_text())
        except ValueError as exc:
            raise click.ClickException(f"{config_path}: {exc}") from None
    try:
        return build_config(file_values, **overrides)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


def _state_or_fail(spec: str) -> TwoQubitState:
    try:
        return parse_state_spec(spec)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None


def _pbflip_table(theta_a: float, theta_b: float) -> dict[str, float] | None:
    if not (0.0 <= theta_a <= 90.0 and 0.0 <= theta_b <= 90.0):
        return None
    ra, rb = math.radians(theta_a), math.radians(theta_b)
    vis_a = VisibilityPair(math.cos(ra), math.sin(ra))
    vis_b = VisibilityPair(math.cos(rb), math.sin(rb))
    return {m.label(): pbflip_outcome(m, vis_a, vis_b) for m in ALL_OUTCOMES}


def _emit_report(report: dict, rows_key: str, out: Path | None, fmt: str) -> None:
    if fmt == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        buffer = io.StringIO()
        rows = report[rows_key]
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        for key, value in report.items():
            if key == rows_key or isinstance(value, (dict, list)):
                continue
            buffer.write(f"# {key}={value}\n")
        text = buffer.getvalue()
    if out is None:
        click.echo(text, nl=False)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        click.echo(f"wrote {out}")


@click.group()
def main() -> None:
    """Joint-measurement simulator and Bell-correlation analysis for
    polarization-entangled photon pairs."""


_config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Key-value config file; explicit flags override its entries.",
)
_state_option = click.option(
    "--state", default=None, help="singlet | werner:<v> | path to a 4x4 matrix file."
)
_format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
    help="Report format (default json).",
)


@main.command()
@_config_option
@_state_option
@click.option("--theta-a", type=float, default=None, help="Trade-off angle for side A (degrees).")
@click.option("--theta-b", type=float, default=None, help="Trade-off angle for side B (degrees).")
@click.option("--out", default=None, help="Output file (default: stdout).")
@_format_option
def simulate(config_path, state, theta_a, theta_b, out, fmt) -> None:
    """Compute the sixteen-outcome distribution and b-value aggregates."""
    cfg = _load_config(
        config_path, state=state, theta_a=theta_a, theta_b=theta_b, out=out, format=fmt
    )
    prepared = _state_or_fail(cfg.state)
    dist = joint_distribution(prepared, cfg.theta_a, cfg.theta_b)
    agg = aggregate_b(dist)
    rows = [
        {
            "x_a": m.x_a, "y_a": m.y_a, "x_b": m.x_b, "y_b": m.y_b,
            "b": b_value(m), "probability": dist.probs[m],
        }
        for m in ALL_OUTCOMES
    ]
    ra, rb = math.radians(cfg.theta_a), math.radians(cfg.theta_b)
    report = {
        "state": cfg.state,
        "theta_a_deg": cfg.theta_a,
        "theta_b_deg": cfg.theta_b,
        "visibilities": {
            "a": {"vx": math.cos(ra), "vy": math.sin(ra)},
            "b": {"vx": math.cos(rb), "vy": math.sin(rb)},
        },
        "bell_expectation": bell_expectation(prepared),
        "p_b_plus": agg.p_plus,
        "p_b_minus": agg.p_minus,
        "mean_b": agg.mean_b,
        "p_bflip": _pbflip_table(cfg.theta_a, cfg.theta_b),
        "outcomes": rows,
    }
    _emit_report(report, "outcomes", Path(cfg.out) if cfg.out else None, cfg.format)


@main.command()
@_config_option
@_state_option
@click.option("--theta-a", type=float, default=None)
@click.option("--theta-b", type=float, default=None)
@click.option("--mean-total", type=float, default=None, help="Expected total coincidences.")
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--duration-s", type=float, default=10.0, help="Accumulation time metadata.")
@click.option("--out", default=None, help="Output file (default: counts.csv in the output dir).")
def counts(config_path, state, theta_a, theta_b, mean_total, seed, duration_s, out) -> None:
    """Sample a Poisson coincidence-count table and write it."""
    cfg = _load_config(
        config_path, state=state, theta_a=theta_a, theta_b=theta_b,
        mean_total=mean_total, seed=seed, out=out,
    )
    prepared = _state_or_fail(cfg.state)
    dist = joint_distribution(prepared, cfg.theta_a, cfg.theta_b)
    try:
        table = sample_counts(dist, cfg.mean_total, seed=cfg.seed, duration_s=duration_s)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from None
    path = _resolve_out(cfg.out, "counts.csv")
    write_count_table(table, path)
    click.echo(f"wrote {path}")


@main.command()
@click.argument("countfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--theta-a", type=float, required=True, help="Declared side-A angle (degrees).")
@click.option("--theta-b", type=float, required=True, help="Declared side-B angle (degrees).")
@click.option("--out", default=None, help="Output file (default: stdout).")
@_format_option
def analyze(countfile, theta_a, theta_b, out, fmt) -> None:
    """Estimate probabilities and b statistics from a count table."""
    try:
        table = read_count_table(countfile)
        dist, errors = probabilities_from_counts(table)
    except (CountFileError, ValueError) as exc:
        raise click.ClickException(f"{countfile}: {exc}") from None
    agg = aggregate_b(dist)
    total = table.total()
    n_plus = sum(table.counts[m] for m in ALL_OUTCOMES if b_value(m) == 2)
    rows = [
        {
            "x_a": m.x_a, "y_a": m.y_a, "x_b": m.x_b, "y_b": m.y_b,
            "b": b_value(m), "counts": table.counts[m],
            "probability": dist.probs[m], "std_err": errors[m],
        }
        for m in ALL_OUTCOMES
    ]
    report = {
        "count_file": str(countfile),
        "total_counts": total,
        "duration_s": table.duration_s,
        "theta_a_deg": theta_a,
        "theta_b_deg": theta_b,
        "p_b_plus": agg.p_plus,
        "p_b_plus_std_err": math.sqrt(n_plus) / total,
        "p_b_minus": agg.p_minus,
        "p_b_minus_std_err": math.sqrt(total - n_plus) / total,
        "mean_b": agg.mean_b,
        "mean_b_std_err": 2.0 / math.sqrt(total),
        "p_bflip": _pbflip_table(theta_a, theta_b),
        "outcomes": rows,
    }
    _emit_report(report, "outcomes", Path(out) if out else None, fmt or "json")


_SWEEP_COLUMNS = (
    "theta_deg", "x_a", "y_a", "x_b", "y_b", "b",
    "p_theory", "p_bflip", "counts", "p_obs", "std_err",
)


@main.command()
@_config_option
@_state_option
@click.option("--thetas", default=None, help="Comma-separated trade-off angles in degrees.")
@click.option("--sample/--no-sample", default=False,
              help="Add Poisson-sampled counts per angle (seed derived per angle).")
@click.option("--mean-total", type=float, default=None)
@click.option("--seed", type=click.IntRange(min=0), default=None)
@click.option("--out", default=None, help="Output file (default: sweep.csv in the output dir).")
def sweep(config_path, state, thetas, sample, mean_total, seed, out) -> None:
    """Tabulate per-(angle, outcome) probabilities and flip probabilities."""
    cfg = _load_config(config_path, state=state, mean_total=mean_total, seed=seed, out=out)
    if thetas is None:
        raise click.ClickException("--thetas is required (comma-separated degrees)")
    try:
        theta_list = [float(t) for t in thetas.split(",") if t.strip()]
    except ValueError:
        raise click.ClickException(f"bad theta list {thetas!r}") from None
    if not theta_list:
        raise click.ClickException("theta list is empty")
    if any(not 0.0 <= t <= 90.0 for t in theta_list):
        raise click.ClickException("sweep angles must lie in [0, 90] degrees")
    prepared = _state_or_fail(cfg.state)
    records = []
    for index, theta in enumerate(theta_list):
        dist = joint_distribution(prepared, theta, theta)
        r = math.radians(theta)
        vis = VisibilityPair(math.cos(r), math.sin(r))
        observed = errors = counts_table = None
        if sample:
            counts_table = sample_counts(dist, cfg.mean_total, seed=cfg.seed ^ index)
            observed, errors = probabilities_from_counts(counts_table)
        for m in ALL_OUTCOMES:
            records.append({
                "theta_deg": theta,
                "x_a": m.x_a, "y_a": m.y_a, "x_b": m.x_b, "y_b": m.y_b,
                "b": b_value(m),
                "p_theory": dist.probs[m],
                "p_bflip": pbflip_outcome(m, vis, vis),
                "counts": counts_table.counts[m] if counts_table else "",
                "p_obs": observed.probs[m] if observed else "",
                "std_err": errors[m] if errors else "",
            })
    path = _resolve_out(cfg.out, "sweep.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(_SWEEP_COLUMNS), lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
    click.echo(f"wrote {path}")


@main.command()
@click.argument("sweepfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, help="Output file (default: stdout).")
def fit(sweepfile, out) -> None:
    """Fit the minimal-outcome line from a sweep table and report |<B>|."""
    with open(sweepfile, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in _SWEEP_COLUMNS[:8] if c not in (reader.fieldnames or ())]
        if missing:
            raise click.ClickException(f"{sweepfile}: missing columns {missing}")
        rows = list(reader)
    minimal = {tuple(m): m for m in MINIMAL_OUTCOMES}
    points = []
    for row in rows:
        key = (int(row["x_a"]), int(row["y_a"]), int(row["x_b"]), int(row["y_b"]))
        if key not in minimal:
            continue
        x = float(row["p_bflip"])
        if row.get("p_obs"):
            points.append((x, float(row["p_obs"]), float(row["std_err"])))
        else:
            points.append((x, float(row["p_theory"])))
    lengths = {len(p) for p in points}
    if len(lengths) > 1:
        raise click.ClickException(f"{sweepfile}: mixes sampled and exact rows")
    try:
        result = fit_bell_magnitude(points)
    except ValueError as exc:
        raise click.ClickException(f"{sweepfile}: {exc}") from None
    report = {
        "sweep_file": str(sweepfile),
        "n_points": len(points),
        "slope": result.slope,
        "slope_std_err": result.slope_std_err,
        "intercept": result.intercept,
        "intercept_std_err": result.intercept_std_err,
        "bell_magnitude": result.bell_magnitude,
        "bell_magnitude_std_err": result.bell_magnitude_std_err,
        "p_int_low": result.p_int_low,
        "p_int_low_std_err": result.intercept_std_err,
        "cirelson_ratio": result.bell_magnitude / CIRELSON_BOUND,
        "cirelson_ratio_std_err": result.bell_magnitude_std_err / CIRELSON_BOUND,
    }
    text = json.dumps(report, indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        click.echo(f"wrote {path}")


@main.command()
@click.option("--which", type=click.Choice(["6", "7", "8", "9"]), required=True,
              help="Preset view id.")
@click.option("--format", "fmt", type=click.Choice(["csv", "svg"]), default="csv")
@click.option("--state", default="werner:0.9716", show_default=True)
@click.option("--sample/--no-sample", default=False)
@click.option("--mean-total", type=float, default=568352.0, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--out-dir", default=None, help="Target directory (default: output dir).")
def figures(which, fmt, state, sample, mean_total, seed, out_dir) -> None:
    """Emit plot-ready data (csv) or vector graphics (svg) for a preset view."""
    prepared = _state_or_fail(state)
    directory = Path(out_dir) if out_dir else _output_dir()
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if which in ("6", "7", "8"):
        for index, theta in enumerate(figmod.FIGURE_THETAS[int(which)]):
            rows = figmod.distribution_rows(
                prepared, theta,
                mean_total=mean_total if sample else None,
                seed=(seed ^ index) if sample else None,
            )
            stem = directory / f"figure{which}_theta{theta:g}"
            if fmt == "csv":
                path = stem.with_suffix(".csv")
                with open(path, "w", newline="") as fh:
                    writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()),
                                            lineterminator="\n")
                    writer.writeheader()
                    writer.writerows(rows)
            else:
                path = stem.with_suffix(".svg")
                path.write_text(figmod.bars_svg(
                    rows, f"joint distribution at theta = {theta:g} deg"))
            written.append(path)
    else:
        points, result = figmod.line_points(
            prepared, figmod.FIT_GRID,
            mean_total=mean_total if sample else None,
            seed=seed if sample else None,
        )
        if fmt == "csv":
            path = directory / "figure9.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(points[0].keys()),
                                        lineterminator="\n")
                writer.writeheader()
                writer.writerows(points)
            written.append(path)
            fit_path = directory / "figure9_fit.json"
            fit_path.write_text(json.dumps({
                "slope": result.slope,
                "slope_std_err": result.slope_std_err,
                "intercept": result.intercept,
                "intercept_std_err": result.intercept_std_err,
                "bell_magnitude": result.bell_magnitude,
            }, indent=2) + "\n")
            written.append(fit_path)
        else:
            path = directory / "figure9.svg"
            path.write_text(figmod.scatter_svg(
                points, result, "observed probability vs flip probability"))
            written.append(path)
    for path in written:
        click.echo(f"wrote {path}")


@main.command()
def validate() -> None:
    """Run the invariant suites; exit nonzero on any failure."""
    results = selfcheck.run_all_checks()
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    failed = [r for r in results if not r.passed]
    click.echo(f"{len(results) - len(failed)}/{len(results)} suites passed")
    if failed:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
