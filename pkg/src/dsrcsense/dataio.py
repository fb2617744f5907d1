"""CSV interchange for channel-magnitude datasets.

One row per (snapshot, receiver): ``snapshot,receiver,mag_00..,count``
with a header, UTF-8 text and ``.`` decimals. Floats are written with
``repr`` so values round-trip exactly and files are byte-stable across
runs. Ingestion validates row by row, keeps what parses, and reports the
rejects with line numbers so a partial load is visible to the caller.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import DataError

__all__ = [
    "CfrRecord",
    "RejectedRow",
    "Dataset",
    "magnitude_columns",
    "write_records",
    "read_records",
    "build_dataset",
    "resolve_gamma",
]


@dataclass
class CfrRecord:
    """One receiver's channel magnitude snapshot with its ground truth."""

    snapshot: int
    receiver: int
    magnitudes: np.ndarray
    count: int


@dataclass
class RejectedRow:
    line: int  # 1-based line number in the file
    reason: str


def magnitude_columns(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"mag_{i:0{width}d}" for i in range(n)]


def write_records(records: Iterable[CfrRecord], fh: IO[str]) -> int:
    records = list(records)
    if not records:
        raise DataError("refusing to write an empty dataset")
    n_mag = records[0].magnitudes.size
    writer = csv.writer(fh)
    writer.writerow(["snapshot", "receiver", *magnitude_columns(n_mag), "count"])
    for rec in records:
        if rec.magnitudes.size != n_mag:
            raise DataError(
                f"inconsistent magnitude width: {rec.magnitudes.size} != {n_mag}"
            )
        writer.writerow([
            rec.snapshot, rec.receiver,
            *[repr(float(v)) for v in rec.magnitudes],
            rec.count,
        ])
    return len(records)


def _parse_row(row: list[str], n_mag: int) -> CfrRecord:
    if len(row) != n_mag + 3:
        raise ValueError(f"expected {n_mag + 3} columns, got {len(row)}")
    snapshot = int(row[0])
    receiver = int(row[1])
    if snapshot < 0 or receiver < 0:
        raise ValueError("snapshot and receiver must be nonnegative")
    mags = np.array([float(v) for v in row[2:2 + n_mag]], dtype=float)
    if not np.all(np.isfinite(mags)):
        raise ValueError("magnitudes must be finite")
    if np.any(mags < 0):
        raise ValueError("magnitudes must be nonnegative")
    count = int(row[-1])
    if count < 0:
        raise ValueError("count must be nonnegative")
    return CfrRecord(snapshot=snapshot, receiver=receiver, magnitudes=mags, count=count)


def read_records(source: str | Path | IO[str]) -> tuple[list[CfrRecord], list[RejectedRow]]:
    """Parse a dataset file; returns (kept records, rejected rows).

    Raises :class:`DataError` when the header is malformed or no row
    parses at all.
    """
    if isinstance(source, (str, Path)):
        try:
            fh = open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read dataset file: {exc}") from exc
        with fh:
            return read_records(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("dataset file is empty") from None
    if len(header) < 4 or header[0] != "snapshot" or header[1] != "receiver" \
            or header[-1] != "count":
        raise DataError(f"unrecognized dataset header: {header[:4]}...")
    n_mag = len(header) - 3
    if header[2:-1] != magnitude_columns(n_mag):
        raise DataError("magnitude columns are misnamed or out of order")

    records: list[CfrRecord] = []
    rejected: list[RejectedRow] = []
    seen: set[tuple[int, int]] = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            rec = _parse_row(row, n_mag)
        except ValueError as exc:
            rejected.append(RejectedRow(line=line_no, reason=str(exc)))
            continue
        key = (rec.snapshot, rec.receiver)
        if key in seen:
            rejected.append(RejectedRow(line=line_no,
                                        reason=f"duplicate snapshot/receiver {key}"))
            continue
        seen.add(key)
        records.append(rec)
    if not records:
        raise DataError("no valid rows in dataset file")
    return records, rejected


@dataclass
class Dataset:
    """Feature matrix assembled from records, one row per snapshot."""

    snapshots: np.ndarray  # (n,) int, ascending
    features: np.ndarray  # (n, receivers * n_mag) magnitudes, receiver-major
    counts: np.ndarray  # (n,) int
    gamma: float
    labels: np.ndarray  # (n,) ints in {-1, +1}; +1 iff count > gamma
    n_receivers: int


def resolve_gamma(gamma: float | str, counts: np.ndarray) -> float:
    if isinstance(gamma, str):
        if gamma != "median":
            raise DataError(f"unknown gamma rule {gamma!r}")
        return float(np.median(counts))
    return float(gamma)


def build_dataset(records: list[CfrRecord], receivers: int,
                  gamma: float | str) -> Dataset:
    """Join per-receiver rows into snapshot feature vectors.

    Requires receivers ``0..receivers-1`` for every snapshot, with equal
    counts across a snapshot's rows. Features concatenate receivers in
    id order.
    """
    if receivers < 1:
        raise DataError(f"receivers must be >= 1, got {receivers}")
    by_key: dict[tuple[int, int], CfrRecord] = {
        (r.snapshot, r.receiver): r for r in records
    }
    snapshots = sorted({r.snapshot for r in records})
    rows = []
    counts = []
    for snap in snapshots:
        parts = []
        snap_counts = set()
        for rx in range(receivers):
            rec = by_key.get((snap, rx))
            if rec is None:
                raise DataError(f"snapshot {snap} is missing receiver {rx}")
            parts.append(rec.magnitudes)
            snap_counts.add(rec.count)
        if len(snap_counts) != 1:
            raise DataError(
                f"snapshot {snap} has conflicting counts across receivers: "
                f"{sorted(snap_counts)}"
            )
        rows.append(np.concatenate(parts))
        counts.append(snap_counts.pop())

    features = np.vstack(rows)
    counts_arr = np.asarray(counts, dtype=int)
    gamma_value = resolve_gamma(gamma, counts_arr)
    labels = np.where(counts_arr > gamma_value, 1, -1)
    return Dataset(
        snapshots=np.asarray(snapshots, dtype=int),
        features=features,
        counts=counts_arr,
        gamma=gamma_value,
        labels=labels,
        n_receivers=receivers,
    )
