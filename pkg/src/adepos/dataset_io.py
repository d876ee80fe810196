"""Readers for the IMS bearing run-to-failure files and feature CSVs."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import MappingError, MissingColumn, ParseError, ShapeError
from .features import FEATURE_NAMES, FeatureVector, extract_features

logger = logging.getLogger(__name__)

IMS_ROWS = 20480


@dataclass(frozen=True)
class ImsLayout:
    """Directory, channel count and bearing roster of one IMS test."""

    name: str
    directory: str
    channels: int
    mapping: Mapping[int, tuple[int, ...]]
    faulty: frozenset


IMS_LAYOUTS = {
    "1": ImsLayout("1", "1st_test", 8, {1: (0, 1), 2: (2, 3), 3: (4, 5), 4: (6, 7)}, frozenset({3, 4})),
    "2": ImsLayout("2", "2nd_test", 4, {1: (0,), 2: (1,), 3: (2,), 4: (3,)}, frozenset({1})),
    "3": ImsLayout("3", "3rd_test", 4, {1: (0,), 2: (1,), 3: (2,), 4: (3,)}, frozenset({3})),
}


def load_ims_file(path, expected_channels: int, expected_rows: int = IMS_ROWS) -> np.ndarray:
    """Parse one whitespace-delimited IMS snapshot into ``(rows, channels)``."""
    path = Path(path)
    try:
        data = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError:
        _locate_parse_error(path, expected_channels)
        raise
    if data.shape[1] != expected_channels:
        raise ParseError(path, 1, f"expected {expected_channels} columns, found {data.shape[1]}")
    if data.shape[0] != expected_rows:
        raise ShapeError(f"{path}: expected {expected_rows} rows, found {data.shape[0]}")
    return data


def _locate_parse_error(path: Path, expected_channels: int):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != expected_channels:
                raise ParseError(path, lineno, f"expected {expected_channels} values, found {len(tokens)}")
            for tok in tokens:
                try:
                    float(tok)
                except ValueError:
                    raise ParseError(path, lineno, f"non-numeric token {tok!r}") from None
    raise ParseError(path, 0, "unparseable file")


@dataclass
class ImsFileSet:
    files: list[Path]
    channels: int
    rows: int = IMS_ROWS

    @classmethod
    def from_directory(cls, directory, channels: int, manifest=None, rows: int = IMS_ROWS) -> "ImsFileSet":
        """All regular files in ``directory`` sorted by name.

        IMS snapshot names are timestamps, so name order is time order. A
        manifest (one file name per line) overrides the ordering and selection.
        """
        directory = Path(directory)
        if manifest is not None:
            names = [ln.strip() for ln in Path(manifest).read_text().splitlines() if ln.strip()]
            files = [directory / n for n in names]
        else:
            files = sorted((p for p in directory.iterdir() if p.is_file() and not p.name.startswith(".")),
                           key=lambda p: p.name)
        return cls(files, channels, rows)

    def __len__(self):
        return len(self.files)

    def load(self, i: int) -> np.ndarray:
        return load_ims_file(self.files[i], self.channels, self.rows)


def _check_mapping(mapping: Mapping[int, Sequence[int]], channels: int):
    if not mapping:
        raise MappingError("empty bearing mapping")
    for bearing, cols in mapping.items():
        if not cols:
            raise MappingError(f"bearing {bearing} maps to no channel")
        for c in cols:
            if not 0 <= c < channels:
                raise MappingError(f"bearing {bearing} references column {c} of a {channels}-column set")


def _reduce(data: np.ndarray, cols: Sequence[int], reduce: str) -> np.ndarray:
    if reduce == "first":
        return data[:, cols[0]]
    if reduce == "mean":
        return data[:, list(cols)].mean(axis=1)
    raise MappingError(f"unknown channel reduction {reduce!r}")


@dataclass
class BearingStream:
    """Lazily loaded windows of one bearing, one per snapshot file."""

    bearing: int
    fileset: ImsFileSet
    columns: tuple[int, ...]
    reduce: str = "first"

    def __len__(self):
        return len(self.fileset)

    def windows(self) -> Iterator[np.ndarray]:
        for i in range(len(self.fileset)):
            yield _reduce(self.fileset.load(i), self.columns, self.reduce)


def bearing_streams(fileset: ImsFileSet, mapping: Mapping[int, Sequence[int]],
                    reduce: str = "first") -> list[BearingStream]:
    _check_mapping(mapping, fileset.channels)
    if reduce not in ("first", "mean"):
        raise MappingError(f"unknown channel reduction {reduce!r}")
    return [BearingStream(b, fileset, tuple(cols), reduce) for b, cols in sorted(mapping.items())]


def extract_bearing_features(fileset: ImsFileSet, mapping: Mapping[int, Sequence[int]],
                             reduce: str = "first", workers: int = 1) -> dict[int, list[FeatureVector]]:
    """Features of every bearing, reading each snapshot file once.

    Files are parsed by ``workers`` threads; output order follows the file set.
    """
    _check_mapping(mapping, fileset.channels)

    def one(i):
        data = fileset.load(i)
        return {b: extract_features(_reduce(data, cols, reduce)) for b, cols in mapping.items()}

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            per_file = list(pool.map(one, range(len(fileset))))
    else:
        per_file = [one(i) for i in range(len(fileset))]
    return {b: [row[b] for row in per_file] for b in sorted(mapping)}


@dataclass
class FeatureTable:
    features: list[FeatureVector]
    labels: list[str] | None = None

    def as_array(self) -> np.ndarray:
        return np.array([fv.as_array() for fv in self.features]).reshape(-1, len(FEATURE_NAMES))


def load_feature_csv(path) -> FeatureTable:
    """Read ``rms,kurtosis,peak_peak,crest_factor,skewness[,label]`` rows in order."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        missing = [n for n in FEATURE_NAMES if n not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        idx = [header.index(n) for n in FEATURE_NAMES]
        label_idx = header.index("label") if "label" in header else None
        feats, labels = [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} fields, found {len(row)}")
            try:
                feats.append(FeatureVector(*(float(row[i]) for i in idx)))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if label_idx is not None:
                labels.append(row[label_idx].strip())
    return FeatureTable(feats, labels if label_idx is not None else None)


def write_feature_csv(path, features: Sequence[FeatureVector], labels: Sequence[str] | None = None):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(FEATURE_NAMES) + (["label"] if labels is not None else []))
        for i, fv in enumerate(features):
            row = [repr(float(v)) for v in fv.as_array()]
            if labels is not None:
                row.append(labels[i])
            w.writerow(row)


def dataset_root_from_env(default=None):
    return os.environ.get("ADEPOS_DATASET_ROOT", default)
