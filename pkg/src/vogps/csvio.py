"""CSV log formats.

``vo.csv``    k,t,qw,qx,qy,qz,tx,ty,tz   relative transform of frame k+1 in frame k
``gps.csv``   k,t,vn,ve,vd               NED velocity, m/s
``truth.csv`` k,t,qw,qx,qy,qz,pn,pe,pd   camera-to-NED attitude and NED position, m

Quaternions are scalar-first. Every number is written with 17 significant
digits so a write/read round trip is lossless.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import SchemaError
from .measurement import RelativeTransform, VelocitySample

VO_COLUMNS = ("k", "t", "qw", "qx", "qy", "qz", "tx", "ty", "tz")
GPS_COLUMNS = ("k", "t", "vn", "ve", "vd")
TRUTH_COLUMNS = ("k", "t", "qw", "qx", "qy", "qz", "pn", "pe", "pd")

QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class VoRecord:
    k: int
    t: float
    rel: RelativeTransform


@dataclass(frozen=True)
class GpsRecord:
    k: int
    sample: VelocitySample

    @property
    def t(self) -> float:
        return self.sample.t


@dataclass(frozen=True)
class TruthRecord:
    k: int
    t: float
    r: np.ndarray
    p: np.ndarray


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def quat_to_matrix(q: Sequence[float]) -> np.ndarray:
    return Rotation.from_quat(np.asarray(q, dtype=float), scalar_first=True).as_matrix()


def matrix_to_quat(r: np.ndarray) -> np.ndarray:
    """Scalar-first unit quaternion with non-negative scalar part."""
    return Rotation.from_matrix(r).as_quat(canonical=True, scalar_first=True)


def _read_rows(path: str | Path, columns: Sequence[str]) -> list[tuple[int, int, list[float]]]:
    """Parse ``path`` into ``(line, k, values)`` tuples, checking header and numerics."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise SchemaError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
        rows = []
        prev_k = None
        for line, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            try:
                values = [float(raw[i]) for i in idx]
            except (IndexError, ValueError):
                raise SchemaError(f"{path}: row {line}: malformed or missing value") from None
            if not all(math.isfinite(v) for v in values):
                raise SchemaError(f"{path}: row {line}: non-finite value")
            k = values[0]
            if k != int(k):
                raise SchemaError(f"{path}: row {line}: k must be an integer")
            k = int(k)
            if prev_k is not None and k <= prev_k:
                raise SchemaError(f"{path}: row {line}: k not strictly increasing ({prev_k} -> {k})")
            prev_k = k
            rows.append((line, k, values[1:]))
    return rows


def _check_times(path, rows) -> None:
    for (_, _, a), (line, _, b) in zip(rows, rows[1:]):
        if not b[0] > a[0]:
            raise SchemaError(f"{path}: row {line}: timestamp not strictly increasing ({a[0]} -> {b[0]})")


def _unit_quat(path, line, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise SchemaError(f"{path}: row {line}: quaternion norm {n:.9g} is not 1 (tolerance {QUAT_NORM_TOL})")
    return q / n


def read_vo_csv(path: str | Path) -> list[VoRecord]:
    rows = _read_rows(path, VO_COLUMNS)
    _check_times(path, rows)
    out = []
    for line, k, (t, qw, qx, qy, qz, tx, ty, tz) in rows:
        r = quat_to_matrix(_unit_quat(path, line, (qw, qx, qy, qz)))
        out.append(VoRecord(k, t, RelativeTransform(r, np.array([tx, ty, tz]))))
    return out


def read_gps_csv(path: str | Path) -> list[GpsRecord]:
    rows = _read_rows(path, GPS_COLUMNS)
    _check_times(path, rows)
    return [GpsRecord(k, VelocitySample(t, np.array(v))) for _, k, (t, *v) in rows]


def read_truth_csv(path: str | Path) -> list[TruthRecord]:
    rows = _read_rows(path, TRUTH_COLUMNS)
    _check_times(path, rows)
    out = []
    for line, k, (t, qw, qx, qy, qz, pn, pe, pd) in rows:
        r = quat_to_matrix(_unit_quat(path, line, (qw, qx, qy, qz)))
        out.append(TruthRecord(k, t, r, np.array([pn, pe, pd])))
    return out


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(
                [
                    "" if v is None else (str(v) if isinstance(v, (int, np.integer, str)) else fmt(v))
                    for v in row
                ]
            )


def write_vo_csv(path: str | Path, records: Iterable[VoRecord]) -> None:
    write_csv(
        path,
        VO_COLUMNS,
        ((r.k, r.t, *matrix_to_quat(r.rel.rot), *r.rel.trans) for r in records),
    )


def write_gps_csv(path: str | Path, records: Iterable[GpsRecord]) -> None:
    write_csv(path, GPS_COLUMNS, ((r.k, r.t, *r.sample.v) for r in records))


def write_truth_csv(path: str | Path, records: Iterable[TruthRecord]) -> None:
    write_csv(path, TRUTH_COLUMNS, ((r.k, r.t, *matrix_to_quat(r.r), *r.p) for r in records))
