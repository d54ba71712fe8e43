"""Dataset ingestion, report construction and rendering.

File formats
------------
Dataset CSV: UTF-8, comma separated, header ``label,a0,...,a7``, one
cohort per row, counts nonnegative (decimals allowed, so expected-count
tables round-trip).  Dataset JSON: array of ``{"label": ..., "counts":
[8 numbers]}``.  Parameter tables: CSV header
``label,v,e1,e2,e3,s1,s2,s3`` or JSON array of ``{"label", "v", "e",
"s"}`` objects.  Order is preserved everywhere.

Malformed content raises :class:`ParseError` (with the offending line
where known); structurally wrong but well-formed content (bad column
count, negative counts, duplicate labels) raises :class:`SchemaError`.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import as_count_vector, invariants
from .inversion import (
    EstimateResult,
    EstimationError,
    ValidityReport,
    check_validity,
    estimate,
)
from .mle import FitConfig, FitResult, fit_counts
from .model import ModelParams, expected_counts, sample_cohort

DATASET_FIELDS = ("label", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7")
PARAMS_FIELDS = ("label", "v", "e1", "e2", "e3", "s1", "s2", "s3")
FORMATS = ("csv", "json")


class ParseError(ValueError):
    """Unreadable content (bad number, broken JSON, missing header)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValueError):
    """Well-formed content violating the dataset schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class CohortRecord:
    """One labelled cohort: an age-group id and its 8 counts."""

    label: str
    counts: tuple


def _check_format(fmt: str) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    return fmt


def _parse_number(text: str, line: int | None):
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a number: {text!r}", line) from None
    return int(value) if value.denominator == 1 else value


def _record_from_counts(label, counts, line=None) -> CohortRecord:
    if not isinstance(label, str) or not label.strip():
        raise SchemaError("label must be a nonempty string", line)
    if len(counts) != 8:
        raise SchemaError(f"expected 8 counts, got {len(counts)}", line)
    for c in counts:
        if c < 0:
            raise SchemaError(f"negative count: {c}", line)
    try:
        cells = as_count_vector(counts)
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(exc), line) from None
    return CohortRecord(label=label.strip(), counts=cells)


def load_dataset(path, format: str = "csv") -> list[CohortRecord]:
    """Read a cohort dataset, preserving row order."""
    _check_format(format)
    with open(path, encoding="utf-8") as fh:
        if format == "csv":
            records = _load_dataset_csv(fh)
        else:
            records = _load_dataset_json(fh)
    seen = set()
    for rec in records:
        if rec.label in seen:
            raise SchemaError(f"duplicate label: {rec.label!r}")
        seen.add(rec.label)
    return records


def _load_dataset_csv(fh) -> list[CohortRecord]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, expected a header row", 1) from None
    if tuple(h.strip().lower() for h in header) != DATASET_FIELDS:
        raise SchemaError(
            f"expected header {','.join(DATASET_FIELDS)}", 1
        )
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 9:
            raise SchemaError(f"expected 9 columns, got {len(row)}", lineno)
        counts = [_parse_number(x, lineno) for x in row[1:]]
        records.append(_record_from_counts(row[0], counts, lineno))
    return records


def _load_dataset_json(fh) -> list[CohortRecord]:
    try:
        data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(data, list):
        raise SchemaError("expected a JSON array of cohort objects")
    records = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or set(item) != {"label", "counts"}:
            raise SchemaError(
                f"entry {i}: expected an object with 'label' and 'counts'"
            )
        counts = item["counts"]
        if not isinstance(counts, list):
            raise SchemaError(f"entry {i}: 'counts' must be an array")
        records.append(_record_from_counts(item["label"], counts))
    return records


def save_dataset(fh, records: list[CohortRecord]) -> None:
    """Write cohorts as dataset CSV (inverse of csv loading)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DATASET_FIELDS)
    for rec in records:
        writer.writerow([rec.label, *[_plain(c) for c in rec.counts]])


def _plain(x):
    """Render an exact count: integers bare, rationals as decimals."""
    if isinstance(x, int):
        return x
    return repr(float(x))


def load_params_table(path, format: str = "csv") -> list[tuple[str, ModelParams]]:
    """Read a labelled parameter table (v, e1..e3, s1..s3 per row)."""
    _check_format(format)
    out: list[tuple[str, ModelParams]] = []
    with open(path, encoding="utf-8") as fh:
        if format == "csv":
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError("empty file, expected a header row", 1) from None
            if tuple(h.strip().lower() for h in header) != PARAMS_FIELDS:
                raise SchemaError(f"expected header {','.join(PARAMS_FIELDS)}", 1)
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 8:
                    raise SchemaError(f"expected 8 columns, got {len(row)}", lineno)
                try:
                    nums = [float(x) for x in row[1:]]
                except ValueError:
                    raise ParseError(f"not a number in row {row!r}", lineno) from None
                label = row[0].strip()
                if not label:
                    raise SchemaError("label must be a nonempty string", lineno)
                out.append(
                    (label, ModelParams(v=nums[0], e=tuple(nums[1:4]),
                                        s=tuple(nums[4:7])))
                )
        else:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(exc.msg, exc.lineno) from None
            if not isinstance(data, list):
                raise SchemaError("expected a JSON array of parameter objects")
            for i, item in enumerate(data):
                if not isinstance(item, dict) or set(item) != {"label", "v", "e", "s"}:
                    raise SchemaError(
                        f"entry {i}: expected keys label, v, e, s"
                    )
                out.append(
                    (str(item["label"]),
                     ModelParams(v=float(item["v"]),
                                 e=tuple(float(x) for x in item["e"]),
                                 s=tuple(float(x) for x in item["s"])))
                )
    labels = [label for label, _ in out]
    if len(set(labels)) != len(labels):
        raise SchemaError("duplicate labels in parameter table")
    return out


# ---------------------------------------------------------------------------
# report construction


@dataclass
class ReportRow:
    """Flattened per-cohort results for rendering."""

    label: str
    result: EstimateResult | None = None
    error: str | None = None
    fit: FitResult | None = None
    validity: ValidityReport | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def build_report(records, oracle: bool = False,
                 fit_config: FitConfig | None = None) -> list[ReportRow]:
    """Estimate every cohort; row-local errors never abort the run."""
    rows = []
    for rec in records:
        row = ReportRow(label=rec.label)
        row.validity = check_validity(invariants(rec.counts))
        try:
            row.result = estimate(rec.counts)
        except EstimationError as exc:
            row.error = exc.code
        if oracle:
            try:
                row.fit = fit_counts(rec.counts, fit_config)
            except EstimationError:
                pass
        rows.append(row)
    return rows


def mean_seroconversion(rows) -> tuple[float, float, float] | None:
    """Per-disease mean of the seroconversion estimates across cohorts.

    Undefined (NaN) components of individual cohorts are left out of
    their disease's average.
    """
    values = [row.result.params.s for row in rows if row.ok]
    if not values:
        return None
    means = []
    for i in range(3):
        defined = [s[i] for s in values if not math.isnan(s[i])]
        means.append(statistics.fmean(defined) if defined else math.nan)
    return tuple(means)


def _fmt(x, precision: int) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    r = round(x, precision)
    if r == 0:
        r = 0.0  # avoid "-0.000" for exact-boundary zeros
    return f"{r:.{precision}f}"


def _flag(b: bool) -> str:
    return "true" if b else "false"


def _failed_flags(v: ValidityReport) -> list[str]:
    names = []
    if not v.f4_positive:
        names.append("f4>0")
    if not v.f1_positive:
        names.append("n>0")
    for i in range(3):
        if not v.f2_positive[i]:
            names.append(f"f2_{i + 1}>0")
    for i in range(3):
        if not v.strong_gate[i]:
            names.append(f"gate_{i + 1}")
    if not v.v_in_range:
        names.append("v-range")
    for i in range(3):
        if not v.e_in_range[i]:
            names.append(f"e{i + 1}-range")
    for i in range(3):
        if not v.s_in_range[i]:
            names.append(f"s{i + 1}-range")
    return names


REPORT_COLUMNS = (
    ["label", "v", "e1", "e2", "e3", "s1", "s2", "s3", "q1", "q2", "q3", "level"]
    + ["f4_positive", "f1_positive"]
    + [f"f2_positive_{i}" for i in (1, 2, 3)]
    + [f"strong_gate_{i}" for i in (1, 2, 3)]
    + ["v_in_range"]
    + [f"e_in_range_{i}" for i in (1, 2, 3)]
    + [f"s_in_range_{i}" for i in (1, 2, 3)]
    + ["error"]
)
FIT_COLUMNS = ["fit_v", "fit_e1", "fit_e2", "fit_e3",
               "fit_s1", "fit_s2", "fit_s3", "fit_objective", "fit_converged"]


def report_csv_rows(rows, precision: int = 3) -> list[list[str]]:
    """Report as CSV cells, header first, mean-s summary row last."""
    with_fit = any(row.fit is not None for row in rows)
    header = list(REPORT_COLUMNS) + (FIT_COLUMNS if with_fit else [])
    out = [header]
    for row in rows:
        if row.ok:
            p = row.result.params
            cells = [row.label]
            cells += [_fmt(x, precision) for x in (p.v, *p.e, *p.s, *row.result.q)]
            v = row.result.validity
            cells += [str(v.level)]
        else:
            cells = [row.label] + [""] * 10
            v = row.validity
            cells += [str(v.level) if v is not None else ""]
        if v is not None:
            cells += [_flag(v.f4_positive), _flag(v.f1_positive)]
            cells += [_flag(b) for b in v.f2_positive]
            cells += [_flag(b) for b in v.strong_gate]
            cells += [_flag(v.v_in_range)]
            cells += [_flag(b) for b in v.e_in_range]
            cells += [_flag(b) for b in v.s_in_range]
        else:
            cells += [""] * 15
        cells += [row.error or ""]
        if with_fit:
            if row.fit is not None:
                fp = row.fit.params
                cells += [_fmt(x, precision) for x in (fp.v, *fp.e, *fp.s)]
                cells += [_fmt(row.fit.objective, 6), _flag(row.fit.converged)]
            else:
                cells += [""] * 9
        out.append(cells)
    means = mean_seroconversion(rows)
    if means is not None:
        summary = ["mean_s"] + [""] * 4 + [_fmt(x, precision) for x in means]
        summary += [""] * (len(header) - len(summary))
        out.append(summary)
    return out


def _table(lines: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    rendered = []
    for row in lines:
        rendered.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(rendered)


def render_report(rows, precision: int = 3) -> str:
    """Human-readable fixed-width report table with a mean-s footer."""
    with_fit = any(row.fit is not None for row in rows)
    header = ["label", "v", "e1", "e2", "e3", "s1", "s2", "s3",
              "q1", "q2", "q3", "level", "notes"]
    if with_fit:
        header += ["fit_v", "fit_objective"]
    lines = [header]
    for row in rows:
        if row.ok:
            p = row.result.params
            cells = [row.label]
            cells += [_fmt(x, precision) for x in (p.v, *p.e, *p.s, *row.result.q)]
            cells += [str(row.result.validity.level)]
            failed = _failed_flags(row.result.validity)
            cells += [",".join(failed) if failed else "-"]
        else:
            cells = [row.label] + ["-"] * 10
            cells += [str(row.validity.level) if row.validity else "-"]
            cells += [row.error or "-"]
        if with_fit:
            if row.fit is not None:
                cells += [_fmt(row.fit.params.v, precision),
                          _fmt(row.fit.objective, 6)]
            else:
                cells += ["-", "-"]
        lines.append(cells)
    text = _table(lines)
    means = mean_seroconversion(rows)
    if means is not None:
        text += "\nmean seroconversion: " + "  ".join(
            _fmt(x, precision) for x in means
        )
    return text


# ---------------------------------------------------------------------------
# validation-only view


def build_validation(records) -> list[tuple[str, ValidityReport]]:
    """Gate flags per cohort, no estimation (never fails row-locally)."""
    return [
        (rec.label, check_validity(invariants(rec.counts))) for rec in records
    ]


VALIDATION_COLUMNS = REPORT_COLUMNS[:1] + list(REPORT_COLUMNS[11:-1])


def validation_csv_rows(pairs) -> list[list[str]]:
    out = [list(VALIDATION_COLUMNS)]
    for label, v in pairs:
        cells = [label, str(v.level), _flag(v.f4_positive), _flag(v.f1_positive)]
        cells += [_flag(b) for b in v.f2_positive]
        cells += [_flag(b) for b in v.strong_gate]
        cells += [_flag(v.v_in_range)]
        cells += [_flag(b) for b in v.e_in_range]
        cells += [_flag(b) for b in v.s_in_range]
        out.append(cells)
    return out


def render_validation(pairs) -> str:
    lines = [["label", "level", "failed checks"]]
    for label, v in pairs:
        failed = _failed_flags(v)
        lines.append([label, str(v.level), ",".join(failed) if failed else "-"])
    return _table(lines)


# ---------------------------------------------------------------------------
# reconstruction


@dataclass
class ReconstructionRow:
    label: str
    cells: tuple | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.cells is not None


def build_reconstruction(records, params_by_label=None) -> list[ReconstructionRow]:
    """Expected counts per cohort, from closed-form or external parameters.

    With ``params_by_label=None`` each cohort is re-expanded through its
    own closed-form estimate, which reproduces the observed counts
    exactly (up to float rounding).
    """
    rows = []
    for rec in records:
        n = sum(rec.counts)
        try:
            if params_by_label is None:
                params = estimate(rec.counts).params
            else:
                try:
                    params = params_by_label[rec.label]
                except KeyError:
                    raise SchemaError(
                        f"no parameters for cohort {rec.label!r}"
                    ) from None
            cells = tuple(float(c) for c in expected_counts(params, n))
            rows.append(ReconstructionRow(label=rec.label, cells=cells))
        except EstimationError as exc:
            rows.append(ReconstructionRow(label=rec.label, error=exc.code))
    return rows


def reconstruction_csv_rows(rows, precision: int = 3) -> list[list[str]]:
    out = [list(DATASET_FIELDS) + ["error"]]
    for row in rows:
        if row.ok:
            out.append([row.label] + [_fmt(c, precision) for c in row.cells] + [""])
        else:
            out.append([row.label] + [""] * 8 + [row.error])
    return out


def render_reconstruction(rows, precision: int = 3) -> str:
    lines = [list(DATASET_FIELDS) + ["notes"]]
    for row in rows:
        if row.ok:
            lines.append(
                [row.label] + [_fmt(c, precision) for c in row.cells] + ["-"]
            )
        else:
            lines.append([row.label] + ["-"] * 8 + [row.error])
    return _table(lines)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationSummary:
    """Synthetic cohorts plus recovery statistics for one parameter point."""

    records: list[CohortRecord]
    rows: list[ReportRow]
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)
    gate_failures: dict = field(default_factory=dict)
    error_fraction: float = 0.0


PARAM_KEYS = ("v", "e1", "e2", "e3", "s1", "s2", "s3")


def run_simulation(params: ModelParams, n: int, replicates: int,
                   seed: int) -> SimulationSummary:
    """Sample cohorts with seeds seed, seed+1, ... and re-estimate each."""
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    records = [
        CohortRecord(label=f"rep{i + 1:03d}",
                     counts=sample_cohort(params, n, seed + i))
        for i in range(replicates)
    ]
    rows = build_report(records)
    summary = SimulationSummary(records=records, rows=rows)

    estimated = [row.result.params for row in rows if row.ok]
    if estimated:
        series = {
            "v": [p.v for p in estimated],
            **{f"e{i + 1}": [p.e[i] for p in estimated] for i in range(3)},
            **{f"s{i + 1}": [p.s[i] for p in estimated] for i in range(3)},
        }
        for key, values in series.items():
            # exact-boundary cohorts can leave a seroconversion undefined
            defined = [x for x in values if not math.isnan(x)]
            summary.mean[key] = statistics.fmean(defined) if defined else math.nan
            summary.std[key] = (
                statistics.pstdev(defined) if len(defined) > 1 else 0.0
            )
    total = len(rows)
    summary.error_fraction = sum(not row.ok for row in rows) / total

    def fraction_failing(pick) -> float:
        return sum(not pick(row.validity) for row in rows) / total

    summary.gate_failures = {
        "f4_positive": fraction_failing(lambda v: v.f4_positive),
        **{
            f"f2_positive_{i + 1}": fraction_failing(
                lambda v, i=i: v.f2_positive[i])
            for i in range(3)
        },
        **{
            f"strong_gate_{i + 1}": fraction_failing(
                lambda v, i=i: v.strong_gate[i])
            for i in range(3)
        },
        "fully_valid": fraction_failing(
            lambda v: v.level.value == "fully_valid"),
    }
    return summary


def render_simulation(summary: SimulationSummary, precision: int = 3) -> str:
    parts = [render_report(summary.rows, precision)]
    if summary.mean:
        parts.append(
            "mean estimate:  " + "  ".join(
                f"{k}={_fmt(summary.mean[k], precision)}" for k in PARAM_KEYS)
        )
        parts.append(
            "stddev:         " + "  ".join(
                f"{k}={_fmt(summary.std[k], precision)}" for k in PARAM_KEYS)
        )
    parts.append(
        "gate failure fractions:  " + "  ".join(
            f"{k}={_fmt(v, precision)}" for k, v in summary.gate_failures.items())
    )
    parts.append(f"estimation error fraction: {_fmt(summary.error_fraction, precision)}")
    return "\n".join(parts)
