"""0-1 evaluation on E, E^c and E^rev, and table rendering."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .graph import EdgePartitions
from .model import RescalModel, difference_matrix

__all__ = [
    "EvalReport",
    "RunSummary",
    "CellFailure",
    "CSV_COLUMNS",
    "DEFAULT_EC_CAP",
    "accuracy",
    "positive_count",
    "evaluate_all",
    "aggregate_runs",
    "render_table",
    "parse_table",
    "pretty_table",
]

DEFAULT_EC_CAP = 10_000_000
CSV_COLUMNS = [
    "mode", "V", "d", "seed_count",
    "acc_E_mean", "acc_E_std", "acc_Ec_mean", "acc_Ec_std", "acc_Erev_mean", "acc_Erev_std",
]
MISSING = "NA"
FAILED = "failed"


@dataclass
class EvalReport:
    acc_e: float
    acc_ec: float
    acc_erev: float
    n_e: int
    n_ec: int
    n_erev: int
    ec_sampled: bool = False
    ec_evaluated: int = 0
    seed: int | None = None
    config: dict = field(default_factory=dict)

    def accuracies(self) -> tuple[float, float, float]:
        return self.acc_e, self.acc_ec, self.acc_erev

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(**data)


@dataclass
class RunSummary:
    reports: list[EvalReport]
    mean: tuple[float, float, float]
    std: tuple[float, float, float]

    @property
    def seed_count(self) -> int:
        return len(self.reports)


@dataclass(frozen=True)
class CellFailure:
    """Placeholder for a sweep cell whose training or evaluation raised."""

    message: str


def _chunks(n: int, parts: int):
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i] < bounds[i + 1]]


def positive_count(model: RescalModel, pairs: np.ndarray, n_jobs: int = 1) -> int:
    """Number of pairs with s(v, r1, w) > s(v, r0, w)."""
    pairs = np.ascontiguousarray(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))
    subs = np.ascontiguousarray(pairs[:, 0])
    objs = np.ascontiguousarray(pairs[:, 1])
    A = model.A
    D = np.ascontiguousarray(difference_matrix(model))

    def count(lo_hi):
        lo, hi = lo_hi
        return int(np.count_nonzero(kernels.bilinear_pairs(A, D, subs[lo:hi], objs[lo:hi]) > 0.0))

    spans = _chunks(len(pairs), max(1, n_jobs))
    if n_jobs <= 1 or len(spans) <= 1:
        return sum(map(count, spans))
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return sum(pool.map(count, spans))


def accuracy(model: RescalModel, pairs: np.ndarray, expected_label: bool, n_jobs: int = 1) -> float:
    """Fraction of pairs whose r1-vs-r0 decision equals ``expected_label``."""
    n = len(np.asarray(pairs).reshape(-1, 2))
    if n == 0:
        raise ValueError("accuracy over an empty pair set is undefined")
    positives = positive_count(model, pairs, n_jobs)
    return (positives if expected_label else n - positives) / n


def _exact_ec_positives(model: RescalModel, partitions: EdgePartitions, block: int = 512) -> int:
    """Positive decisions over E^c, from dense row blocks of A D A^T."""
    A = model.A
    AD = A @ difference_matrix(model)
    e = partitions.e_set
    row_starts = np.searchsorted(e[:, 0], np.arange(0, partitions.num_vertices + block, block))
    total = 0
    for k, lo in enumerate(range(0, partitions.num_vertices, block)):
        hi = min(lo + block, partitions.num_vertices)
        S = AD[lo:hi] @ A.T
        pos = S > 0.0
        a, b = row_starts[k], row_starts[k + 1]
        in_e = pos[e[a:b, 0] - lo, e[a:b, 1]]
        total += int(np.count_nonzero(pos)) - int(np.count_nonzero(in_e))
    return total


def evaluate_all(model: RescalModel, partitions: EdgePartitions, ec_cap: int = DEFAULT_EC_CAP,
                 seed: int = 0, n_jobs: int = 1, config: dict | None = None) -> EvalReport:
    """Accuracy on E (expect present), E^c and E^rev (expect absent).

    E^c is evaluated exactly when it has at most ``ec_cap`` pairs, otherwise
    on a uniform sample of ``ec_cap`` pairs and the report says so.
    """
    if model.num_entities != partitions.num_vertices:
        raise ValueError(
            f"model has {model.num_entities} entities, partitions have {partitions.num_vertices}")
    acc_e = accuracy(model, partitions.e_set, True, n_jobs)
    acc_erev = accuracy(model, partitions.erev_set, False, n_jobs)
    if partitions.num_ec <= ec_cap:
        acc_ec = 1.0 - _exact_ec_positives(model, partitions) / partitions.num_ec
        sampled, evaluated = False, partitions.num_ec
    else:
        acc_ec = accuracy(model, partitions.sample_ec(ec_cap, seed), False, n_jobs)
        sampled, evaluated = True, ec_cap
    return EvalReport(acc_e, acc_ec, acc_erev, partitions.num_e, partitions.num_ec,
                      partitions.num_erev, sampled, evaluated, model.meta.get("config", {}).get("seed"),
                      dict(config if config is not None else model.meta.get("config", {})))


def aggregate_runs(reports: list[EvalReport]) -> RunSummary:
    """Mean and sample standard deviation (0 for a single run) per set."""
    if not reports:
        raise ValueError("aggregate_runs needs at least one report")
    acc = np.array([r.accuracies() for r in reports], dtype=float)
    mean = tuple(float(x) for x in acc.mean(axis=0))
    std = tuple(float(x) for x in acc.std(axis=0, ddof=1)) if len(reports) > 1 else (0.0, 0.0, 0.0)
    return RunSummary(list(reports), mean, std)


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def render_table(summaries, d_values, v_values, modes=None, extra: dict | None = None) -> str:
    """CSV with one row per (mode, d, V) cell, d-major (d rows, V within each d).

    ``summaries`` maps ``(mode, V, d)`` to a RunSummary or CellFailure.
    Absent cells are written with the marker ``NA``; failed ones with
    ``failed``. ``extra`` appends constant metadata columns.
    """
    if modes is None:
        modes = sorted({key[0] for key in summaries})
    extra = extra or {}
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + list(extra))
    for mode in modes:
        for d in d_values:
            for V in v_values:
                cell = summaries.get((mode, V, d))
                if isinstance(cell, RunSummary):
                    values = [cell.seed_count]
                    for m, s in zip(cell.mean, cell.std):
                        values += [_pct(m), _pct(s)]
                else:
                    marker = FAILED if isinstance(cell, CellFailure) else MISSING
                    values = [0 if cell is None else marker] + [marker] * 6
                writer.writerow([mode, V, d, *values, *extra.values()])
    return out.getvalue()


def parse_table(text: str) -> list[dict]:
    """Rows of a rendered CSV with numbers converted and markers kept as strings."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for key, value in row.items():
            if key in ("V", "d", "seed_count") and value.lstrip("-").isdigit():
                parsed[key] = int(value)
            elif key.startswith("acc_") and value not in (MISSING, FAILED):
                parsed[key] = float(value)
            else:
                parsed[key] = value
        rows.append(parsed)
    return rows


def pretty_table(summaries, d_values, v_values, mode: str) -> str:
    """Plain-text layout of one mode: d rows, V columns, 'E Ec Erev' percentages."""
    header = ["d"] + [f"V={V}" for V in v_values]
    lines = [header]
    for d in d_values:
        row = [str(d)]
        for V in v_values:
            cell = summaries.get((mode, V, d))
            if isinstance(cell, RunSummary):
                row.append(" ".join(str(int(math.floor(100 * m + 0.5))) for m in cell.mean))
            else:
                row.append(FAILED if isinstance(cell, CellFailure) else "-")
        lines.append(row)
    widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
    text = [f"{mode}"]
    for r in lines:
        text.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(text) + "\n"
