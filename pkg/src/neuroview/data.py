"""Dataset ingestion, padding, and synthetic fixtures.

The on-disk format is the classic archive layout for univariate series:
one sample per row, first field the class label, remaining fields the
series values, separated by tabs or commas (autodetected). A multivariate
extension uses tab-separated fields where each timestep field holds
``m`` comma-separated values.

Raw labels may be arbitrary numbers ({1,2}, {-1,1}, ...); they are
remapped to contiguous ids 0..d-1 by sorted order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List

import numpy as np

from .linalg import DTYPE


@dataclass
class SequenceSample:
    features: np.ndarray  # (steps, feature_dim)
    label: int
    true_length: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=DTYPE)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError(
                f"features must be a (steps, m) matrix with steps >= 1, "
                f"got shape {self.features.shape}"
            )
        if self.true_length < 1:
            raise ValueError(f"true_length must be >= 1, got {self.true_length}")
        if self.label < 0:
            raise ValueError(f"label must be non-negative, got {self.label}")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")


@dataclass
class DataSet:
    samples: List[SequenceSample]
    num_classes: int
    feature_dim: int
    horizon: int

    def __post_init__(self):
        for i, s in enumerate(self.samples):
            if s.features.shape != (self.horizon, self.feature_dim):
                raise ValueError(
                    f"sample {i}: shape {s.features.shape} != "
                    f"({self.horizon}, {self.feature_dim})"
                )
            if not 0 <= s.label < self.num_classes:
                raise ValueError(
                    f"sample {i}: label {s.label} outside [0, {self.num_classes})"
                )

    def __len__(self):
        return len(self.samples)

    def features(self) -> np.ndarray:
        """All samples stacked as (B, horizon, feature_dim)."""
        return np.stack([s.features for s in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)


def _parse_value(token: str, line_no: int, col: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ValueError(
            f"line {line_no}, field {col}: could not parse {token!r}"
        ) from None
    if not np.isfinite(v):
        raise ValueError(
            f"line {line_no}, field {col}: missing or non-finite value {token!r}"
        )
    return v


def load_ucr(path, znorm: bool = False) -> DataSet:
    """Load a label-first delimited archive file.

    Rows must all have the same number of timesteps (the archive ships
    fixed-length splits); raw labels are remapped to 0..d-1 by sorted
    order. ``znorm=True`` applies per-series standardization per channel.
    """
    path = Path(path)
    text = path.read_text()
    raw_rows = []
    n_fields = None
    feature_dim = None

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split("\t") if "\t" in line else line.split(",")
        if len(fields) < 2:
            raise ValueError(f"line {line_no}: expected a label and at least one value")
        if n_fields is None:
            n_fields = len(fields)
        elif len(fields) != n_fields:
            raise ValueError(
                f"line {line_no}: ragged row, expected {n_fields} fields, "
                f"got {len(fields)}"
            )
        raw_label = _parse_value(fields[0], line_no, 0)
        steps = []
        for col, token in enumerate(fields[1:], start=1):
            parts = token.split(",")
            vec = [_parse_value(p, line_no, col) for p in parts]
            if feature_dim is None:
                feature_dim = len(vec)
            elif len(vec) != feature_dim:
                raise ValueError(
                    f"line {line_no}, field {col}: expected {feature_dim} "
                    f"channel values, got {len(vec)}"
                )
            steps.append(vec)
        raw_rows.append((raw_label, np.array(steps, dtype=DTYPE)))

    if not raw_rows:
        raise ValueError(f"{path}: no data rows")

    raw_labels = sorted({lab for lab, _ in raw_rows})
    if len(raw_labels) < 2:
        raise ValueError(
            f"{path}: found {len(raw_labels)} class(es); need at least 2"
        )
    label_map = {lab: i for i, lab in enumerate(raw_labels)}

    samples = []
    for raw_label, feats in raw_rows:
        if znorm:
            mu = feats.mean(axis=0)
            sd = feats.std(axis=0)
            feats = (feats - mu) / np.where(sd < 1e-12, 1.0, sd)
        samples.append(
            SequenceSample(feats, label_map[raw_label], feats.shape[0])
        )
    horizon = samples[0].features.shape[0]
    return DataSet(samples, len(raw_labels), feature_dim, horizon)


def save_ucr(ds: DataSet, path) -> None:
    """Re-serialize a dataset; floats are written so reloading is exact."""
    lines = []
    for s in ds.samples:
        fields = [str(s.label)]
        for step in s.features:
            fields.append(",".join(repr(float(v)) for v in step))
        lines.append("\t".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def pad_sequence(s: SequenceSample, horizon: int) -> SequenceSample:
    """Zero-pad at the tail or keep only the first ``horizon`` steps.

    The sample's original true length is preserved as metadata.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    steps, m = s.features.shape
    if steps == horizon:
        return s
    if steps > horizon:
        feats = s.features[:horizon].copy()
    else:
        feats = np.zeros((horizon, m), dtype=DTYPE)
        feats[:steps] = s.features
    return SequenceSample(feats, s.label, s.true_length)


def pad_dataset(ds: DataSet, horizon: int) -> DataSet:
    return DataSet(
        [pad_sequence(s, horizon) for s in ds.samples],
        ds.num_classes, ds.feature_dim, horizon,
    )


def synth_separable(num_classes: int, horizon: int, feature_dim: int,
                    n_per_class: int, seed: int,
                    amplitude: float = 3.0, noise: float = 1.0) -> DataSet:
    """Synthetic classification fixture with known informative timesteps.

    Class k carries a constant ``amplitude`` offset on its own early
    timestep window; everything else (including the whole late half of the
    horizon) is pure noise. A per-timestep linear readout can key directly
    on the offset windows, which makes the classes separable by
    construction, while nothing at the end of the sequence is informative.
    """
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    if horizon < num_classes:
        raise ValueError(
            f"horizon {horizon} too short for {num_classes} class windows"
        )
    if feature_dim < 1 or n_per_class < 1:
        raise ValueError("feature_dim and n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    window = max(1, (horizon // 2) // num_classes)
    samples = []
    for k in range(num_classes):
        lo = k * window
        hi = min(lo + window, horizon)
        for _ in range(n_per_class):
            feats = rng.normal(0.0, noise, size=(horizon, feature_dim))
            feats[lo:hi] += amplitude
            samples.append(SequenceSample(feats, k, horizon))
    return DataSet(samples, num_classes, feature_dim, horizon)
