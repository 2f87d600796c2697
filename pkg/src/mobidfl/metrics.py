"""Metrics export (CSV / JSON lines) and Monte Carlo aggregation."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from typing import Iterable, Sequence

from .errors import MobiDFLError
from .simulation import MetricsRecord
from .topology import GridLocation

FORMATS = ("csv", "jsonl")
BASE_COLUMNS = ["run", "round", "mean_accuracy", "contraction", "components"]


class MetricsIOError(MobiDFLError, OSError):
    pass


def _num(x: float) -> str:
    # repr gives the shortest string that round-trips the float exactly
    return repr(float(x))


def record_to_dict(rec: MetricsRecord) -> dict:
    return {
        "run": rec.run,
        "round": rec.round,
        "mean_accuracy": rec.mean_accuracy,
        "accuracies": list(rec.accuracies),
        "contraction": rec.contraction,
        "components": rec.components,
        "locations": {str(i): [loc[0], loc[1]] for i, loc in sorted(rec.locations.items())},
    }


def record_from_dict(raw: dict) -> MetricsRecord:
    return MetricsRecord(
        run=int(raw["run"]),
        round=int(raw["round"]),
        mean_accuracy=float(raw["mean_accuracy"]),
        accuracies=tuple(float(a) for a in raw["accuracies"]),
        contraction=float(raw["contraction"]),
        components=int(raw["components"]),
        locations={int(k): GridLocation(int(v[0]), int(v[1])) for k, v in raw.get("locations", {}).items()},
    )


def csv_header(num_clients: int) -> list[str]:
    return BASE_COLUMNS + [f"acc_{i}" for i in range(num_clients)]


def write_metrics(
    records: Sequence[MetricsRecord],
    path: str | os.PathLike,
    format: str = "csv",
    num_clients: int | None = None,
) -> None:
    """Write records as CSV or JSON lines (UTF-8, ``\\n`` line endings).

    ``num_clients`` fixes the ``acc_*`` columns of an empty CSV; otherwise it is
    taken from the records.
    """
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            if format == "jsonl":
                for rec in records:
                    f.write(json.dumps(record_to_dict(rec), separators=(",", ":")) + "\n")
                return
            if num_clients is None:
                num_clients = len(records[0].accuracies) if records else 0
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(csv_header(num_clients))
            for rec in records:
                writer.writerow(
                    [rec.run, rec.round, _num(rec.mean_accuracy), _num(rec.contraction), rec.components]
                    + [_num(a) for a in rec.accuracies]
                )
    except OSError as exc:
        raise MetricsIOError(f"cannot write metrics to {os.fspath(path)}: {exc.strerror or exc}") from exc


def read_metrics(path: str | os.PathLike) -> list[MetricsRecord]:
    """Parse a file written by :func:`write_metrics`; CSV input carries no locations."""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            text = f.read()
    except OSError as exc:
        raise MetricsIOError(f"cannot read metrics from {os.fspath(path)}: {exc.strerror or exc}") from exc
    first = text.lstrip()[:1]
    if first == "{":
        return [record_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    rows = list(csv.DictReader(text.splitlines()))
    out = []
    for row in rows:
        accs = [k for k in row if k.startswith("acc_")]
        accs.sort(key=lambda k: int(k[4:]))
        out.append(
            MetricsRecord(
                run=int(row["run"]),
                round=int(row["round"]),
                mean_accuracy=float(row["mean_accuracy"]),
                accuracies=tuple(float(row[k]) for k in accs),
                contraction=float(row["contraction"]),
                components=int(row["components"]),
            )
        )
    return out


def aggregate(records: Iterable[MetricsRecord]) -> list[dict]:
    """Per-round mean and sample standard deviation of ``mean_accuracy`` across runs."""
    by_round: dict[int, list[float]] = defaultdict(list)
    for rec in records:
        by_round[rec.round].append(rec.mean_accuracy)
    rows = []
    for rnd in sorted(by_round):
        vals = by_round[rnd]
        mean = math.fsum(vals) / len(vals)
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
        rows.append({"round": rnd, "runs": len(vals), "mean_accuracy": mean, "std_accuracy": std})
    return rows


def write_summary(summaries: dict[str, list[dict]], path: str | os.PathLike) -> None:
    """One CSV with a ``source`` column per aggregated metrics file."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["source", "round", "runs", "mean_accuracy", "std_accuracy"])
            for source, rows in summaries.items():
                for r in rows:
                    writer.writerow(
                        [source, r["round"], r["runs"], _num(r["mean_accuracy"]), _num(r["std_accuracy"])]
                    )
    except OSError as exc:
        raise MetricsIOError(f"cannot write summary to {os.fspath(path)}: {exc.strerror or exc}") from exc
