"""CSV ingestion and JSON report documents.

JSON is the single output format. Infinite values are encoded as the
string sentinels "inf"/"-inf" since plain JSON has no infinities; the
atomic writer refuses any float that slipped through unconverted.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import MissingResponse, NonNumericCell, ParseError
from .intervals import IntervalSet
from .path import SolutionPath
from .predictors import PredictionReport
from .simulate import ExperimentResult

QUERY_POLICIES = ("last-row-unlabeled", "held-out-index", "random-with-seed")


@dataclass(frozen=True)
class ParsedDataset:
    """A CSV split into training rows and one query row."""

    data: Dataset
    x_new: np.ndarray
    y_query: float | None
    feature_names: tuple[str, ...]
    response_name: str
    query_index: int


def _read_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _parse_cell(raw: str, row: int, col: str) -> float:
    text = raw.strip()
    if not text:
        raise NonNumericCell(f"row {row}, column {col!r}: empty cell")
    try:
        return float(text)
    except ValueError:
        raise NonNumericCell(f"row {row}, column {col!r}: {raw!r} is not numeric") from None
    # unreachable


def parse_dataset_csv(
    path,
    query_row_policy: str = "last-row-unlabeled",
    response: str | int | None = None,
    holdout_index: int | None = None,
    seed: int | None = None,
) -> ParsedDataset:
    """Read a header CSV into training rows plus one query row.

    ``response`` names the label column (by header name or 0-based
    index); the last column is used when omitted. Policies:

      last-row-unlabeled  last row is the query; its response cell may
                          be empty (or kept as the known truth)
      held-out-index      row ``holdout_index`` (0-based data row)
                          becomes the query, label retained
      random-with-seed    a seeded draw picks the held-out row
    """
    if query_row_policy not in QUERY_POLICIES:
        raise ParseError(
            f"unknown query_row_policy {query_row_policy!r}; use one of {QUERY_POLICIES}"
        )
    rows = _read_rows(path)
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise ParseError("need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    if width < 2:
        raise ParseError("need at least one feature column and a response column")

    if response is None:
        resp_idx = width - 1
    elif isinstance(response, int) or (isinstance(response, str) and response.lstrip("-").isdigit()):
        resp_idx = int(response)
        if not 0 <= resp_idx < width:
            raise ParseError(f"response column index {resp_idx} out of range")
    else:
        try:
            resp_idx = header.index(response)
        except ValueError:
            raise MissingResponse(f"response column {response!r} not found in header") from None

    feature_names = tuple(h for i, h in enumerate(header) if i != resp_idx)
    data_rows = rows[1:]
    n_total = len(data_rows)
    if n_total < 3:
        raise ParseError("need at least 3 data rows (2 training + 1 query)")

    if query_row_policy == "last-row-unlabeled":
        query_index = n_total - 1
    elif query_row_policy == "held-out-index":
        if holdout_index is None:
            raise ParseError("held-out-index policy requires holdout_index")
        if not 0 <= holdout_index < n_total:
            raise ParseError(f"holdout_index {holdout_index} out of range [0, {n_total})")
        query_index = holdout_index
    else:
        rng = np.random.default_rng(seed)
        query_index = int(rng.integers(n_total))

    x_rows, y_vals = [], []
    x_new = None
    y_query = None
    for i, row in enumerate(data_rows):
        rownum = i + 2  # 1-based file line, counting the header
        if len(row) != width:
            raise ParseError(f"row {rownum}: expected {width} cells, found {len(row)}")
        feats = [
            _parse_cell(cell, rownum, header[c])
            for c, cell in enumerate(row)
            if c != resp_idx
        ]
        resp_raw = row[resp_idx].strip()
        if i == query_index:
            x_new = np.array(feats)
            if resp_raw:
                y_query = _parse_cell(resp_raw, rownum, header[resp_idx])
        else:
            if not resp_raw:
                raise MissingResponse(f"row {rownum}: response value is missing")
            x_rows.append(feats)
            y_vals.append(_parse_cell(resp_raw, rownum, header[resp_idx]))

    return ParsedDataset(
        data=Dataset(np.array(x_rows), np.array(y_vals)),
        x_new=x_new,
        y_query=y_query,
        feature_names=feature_names,
        response_name=header[resp_idx],
        query_index=query_index,
    )


def parse_labeled_csv(path, response: str | int | None = None):
    """Read a fully labeled CSV (no query row); returns (Dataset, names)."""
    rows = [r for r in _read_rows(path) if r and any(cell.strip() for cell in r)]
    if len(rows) < 3:
        raise ParseError("need a header row and at least two data rows")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    if response is None:
        resp_idx = width - 1
    elif isinstance(response, int) or (isinstance(response, str) and response.lstrip("-").isdigit()):
        resp_idx = int(response)
    else:
        try:
            resp_idx = header.index(response)
        except ValueError:
            raise MissingResponse(f"response column {response!r} not found in header") from None
    x_rows, y_vals = [], []
    for i, row in enumerate(rows[1:]):
        rownum = i + 2
        if len(row) != width:
            raise ParseError(f"row {rownum}: expected {width} cells, found {len(row)}")
        x_rows.append(
            [_parse_cell(c, rownum, header[j]) for j, c in enumerate(row) if j != resp_idx]
        )
        if not row[resp_idx].strip():
            raise MissingResponse(f"row {rownum}: response value is missing")
        y_vals.append(_parse_cell(row[resp_idx], rownum, header[resp_idx]))
    names = tuple(h for i, h in enumerate(header) if i != resp_idx)
    return Dataset(np.array(x_rows), np.array(y_vals)), names


# --- JSON documents ---------------------------------------------------------


def encode_float(x: float):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def decode_float(v) -> float:
    if isinstance(v, str):
        return float(v)
    return float(v)


def intervals_to_json(s: IntervalSet) -> list:
    return [[encode_float(lo), encode_float(hi)] for lo, hi in s.intervals]


def intervals_from_json(items) -> IntervalSet:
    return IntervalSet.from_pairs((decode_float(lo), decode_float(hi)) for lo, hi in items)


def report_document(report: PredictionReport, seed=None, software_version: str = "") -> dict:
    return {
        "epsilon": report.epsilon,
        "variant": report.variant.kind,
        "variant_options": {
            "penalty_weight": report.variant.penalty_weight,
            "ridge_weight": report.variant.ridge_weight,
            "half_offset": report.variant.half_offset,
        },
        "rule": report.rule,
        "selected_lambda": encode_float(report.selected_lambda),
        "selected_step_index": report.selected_index,
        "active_variables": list(report.active_variables),
        "intervals": intervals_to_json(report.final_set),
        "lebesgue_length": encode_float(report.lebesgue_length),
        "per_step": [
            {
                "lambda": encode_float(s.lam),
                "length": encode_float(s.length),
                "stopped": s.stopped,
            }
            for s in report.per_step
        ],
        "stopped_at": report.stopped_at,
        "selected_past_early_stop": report.selected_past_early_stop,
        "warnings": list(report.warnings),
        "metadata": dict(report.metadata),
        "seed": seed,
        "software_version": software_version,
    }


def experiment_document(result: ExperimentResult, config: dict | None = None,
                        software_version: str = "") -> dict:
    return {
        "validity_freq": result.validity_freq,
        "ci_half_width": result.ci_half_width,
        "median_length": encode_float(result.median_length),
        "mean_length_finite": encode_float(result.mean_length_finite),
        "selection_frequency": [float(f) for f in result.selection_frequency],
        "precision": result.precision,
        "recall": result.recall,
        "reps": result.reps,
        "seed": result.seed,
        "error_count": result.error_count,
        "unbounded_count": result.unbounded_count,
        "config": config or {},
        "software_version": software_version,
    }


def path_document(path: SolutionPath, feature_names=None, software_version: str = "") -> dict:
    doc = {
        "steps": [
            {
                "lambda": encode_float(step.lam),
                "active_set": list(step.active_set),
                "signs": [float(s) for s in step.signs],
                "beta": [float(b) for b in step.beta],
            }
            for step in path.steps
        ],
        "terminal_lambda": encode_float(path.terminal_lambda),
        "indexing": "0-based",
        "software_version": software_version,
    }
    if feature_names is not None:
        doc["columns"] = list(feature_names)
    return doc


def write_json_atomic(path, document: dict) -> None:
    """Serialize to a temp file in the target directory, then rename."""
    text = json.dumps(document, indent=2, sort_keys=True, allow_nan=False)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
