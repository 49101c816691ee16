"""CSV datasets, report files and the correlated two-Gaussian generator."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import Dataset, InvalidInputError, LPMError, Rng
from .evaluation import CSV_HEADER, EvalReport, SweepPoint

BUNDLED = ("iris", "wine", "sonar", "libras")


class DataIOError(LPMError, OSError):
    """File could not be read or written."""


class DataFormatError(InvalidInputError):
    """File contents do not match the expected layout."""


@dataclass(frozen=True)
class CsvSchema:
    has_header: bool = True
    label_column: str | int = -1
    delimiter: str = ","


def load_csv(path, schema: CsvSchema = CsvSchema()) -> Dataset:
    """Read a labeled CSV; class vocabulary follows first appearance."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh, delimiter=schema.delimiter) if any(cell.strip() for cell in r)]
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]] if schema.has_header else None
    body = rows[1:] if schema.has_header else rows
    if not body:
        raise DataFormatError(f"{path}: no data rows")
    width = len(body[0])
    lab = schema.label_column
    if isinstance(lab, str):
        if header is None or lab not in header:
            raise DataFormatError(f"{path}: label column {lab!r} not found")
        lab = header.index(lab)
    if not -width <= lab < width:
        raise DataFormatError(f"{path}: label column {lab} out of range for {width} columns")
    lab %= width
    if width < 2:
        raise DataFormatError(f"{path}: need at least one feature column and a label column")
    features, labels = [], []
    first_row = 2 if schema.has_header else 1
    for i, row in enumerate(body):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {i + first_row} has {len(row)} cells, expected {width}")
        values = []
        for j, cell in enumerate(row):
            if j == lab:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(f"{path}: row {i + first_row} column {j + 1}: cannot parse {cell!r}") from None
            if not math.isfinite(v):
                raise DataFormatError(f"{path}: row {i + first_row} column {j + 1}: non-finite value {cell!r}")
            values.append(v)
        features.append(values)
        labels.append(row[lab].strip())
    names = tuple(h for j, h in enumerate(header) if j != lab) if header else ()
    return Dataset.from_labels(np.array(features), labels, names)


def save_csv(data: Dataset, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(data.feature_names) + ["class"])
            for x, y in zip(data.features, data.labels):
                w.writerow([repr(float(v)) for v in x] + [data.class_names[y]])
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc


def bundled_path(name: str) -> Path:
    """Path of a dataset shipped with the package (iris, wine, sonar, libras)."""
    if name not in BUNDLED:
        raise InvalidInputError(f"no bundled dataset {name!r}; available: {', '.join(BUNDLED)}")
    return Path(str(resources.files("lpmbc") / "datasets" / f"{name}.csv"))


def load_bundled(name: str) -> Dataset:
    return load_csv(bundled_path(name))


@dataclass(frozen=True)
class SyntheticSpec:
    """Two 2-d Gaussian classes centered at (0, 1) and (0, -1) with covariance [[2, C], [C, 2]]."""

    covariance_c: float = 0.0
    n_per_class: int = 100
    variance: float = 2.0
    centers: tuple[tuple[float, float], ...] = ((0.0, 1.0), (0.0, -1.0))

    def cholesky(self) -> np.ndarray:
        v, c = self.variance, self.covariance_c
        if abs(c) > v:
            raise InvalidInputError(f"|C|={abs(c)} exceeds the variance {v}; covariance is not PSD")
        s = math.sqrt(v)
        return np.array([[s, 0.0], [c / s, math.sqrt(max(v - c * c / v, 0.0))]])


def gen_synthetic(spec: SyntheticSpec, rng: Rng) -> Dataset:
    if spec.n_per_class < 1:
        raise InvalidInputError("n_per_class must be >= 1")
    chol = spec.cholesky()
    feats, labels = [], []
    for cls, center in enumerate(spec.centers):
        z = rng.normal(2 * spec.n_per_class).reshape(spec.n_per_class, 2)
        feats.append(np.asarray(center) + z @ chol.T)
        labels += [cls] * spec.n_per_class
    names = tuple(str(i + 1) for i in range(len(spec.centers)))
    return Dataset(np.vstack(feats), np.array(labels), names, ("x1", "x2"))


def save_report(report: EvalReport, path, fmt: str = "json") -> None:
    """Write a report as JSON (config, cells, aggregates) or one CSV row per fold."""
    if not report.cells:
        raise InvalidInputError("refusing to save a report without fold records")
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
        elif fmt == "csv":
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_HEADER)
                w.writerows([[r, f, repr(a), repr(m), k, name] for r, f, a, m, k, name in report.csv_rows()])
        else:
            raise InvalidInputError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc


def load_report(path) -> EvalReport:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    return EvalReport.from_dict(obj)


def save_sweep(points: list[SweepPoint], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k_fraction", "assumption", "mean_acc", "mean_mse"])
            for p in points:
                w.writerow([repr(p.k_fraction), p.assumption, repr(p.mean_acc), repr(p.mean_mse)])
    except OSError as exc:
        raise DataIOError(f"{path}: {exc.strerror or exc}") from exc
