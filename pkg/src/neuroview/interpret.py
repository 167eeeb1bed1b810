"""Reading the classifier: timestep weight maps, class similarity, and
input-ablation counterfactuals.

Everything here works off the trained global matrix V of a per-timestep
("NeuroView") head. Row i of V scores class i as an inner product with the
rectified, concatenated hidden states, so the row decomposes exactly into
one block per (layer, timestep, direction). Those blocks are the raw
material for:

* weight maps   -- per-timestep mean weights and per-unit grids per class;
* similarity    -- cosine similarity between any two classes' rows;
* time analysis -- zero the inputs at a class's top-K (most positive or
                   most negative) timesteps and re-evaluate the model.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .linalg import DTYPE
from .network import EncoderConfig, HeadKind, HeadParams, Model
from .data import DataSet, SequenceSample
from .train import EvalReport, evaluate


class AblationMode(enum.Enum):
    TOP_POSITIVE = "top-positive"
    TOP_NEGATIVE = "top-negative"


class AblationTarget(enum.Enum):
    INPUTS = "inputs"    # zero the input features at the chosen timesteps
    WEIGHTS = "weights"  # zero the classifier blocks at the chosen timesteps


@dataclass
class WeightMap:
    """One class's view of the classifier matrix.

    ``per_unit`` has shape (layers, T, directions, hidden_dim) and flattens
    back to the class's V row exactly. ``per_timestep_mean`` has shape
    (layers, directions, T): the mean over hidden units of each block.
    """

    class_index: int
    per_unit: np.ndarray
    per_timestep_mean: np.ndarray

    def flatten(self) -> np.ndarray:
        return self.per_unit.reshape(-1)

    def timestep_means(self, layer: int = 0, direction: int = 0) -> np.ndarray:
        return self.per_timestep_mean[layer, direction]

    def unit_grid(self, layer: int = 0, direction: int = 0) -> np.ndarray:
        """(T, hidden_dim) grid of raw weights for one layer/direction."""
        return self.per_unit[layer, :, direction, :]


@dataclass
class SimilarityMatrix:
    values: np.ndarray  # (d, d), symmetric, unit diagonal

    def __getitem__(self, ij):
        return self.values[ij]


@dataclass
class CounterfactualResult:
    class_index: int
    k: int
    zeroed_steps: List[int]
    mode: AblationMode
    target: AblationTarget
    report: EvalReport


def _require_nv(head: HeadParams):
    if head.kind is not HeadKind.NEUROVIEW:
        raise ValueError(
            "interpretability requires the per-timestep (NeuroView) head; "
            f"got {head.kind.value!r}"
        )


def weight_map(head: HeadParams, cfg: EncoderConfig, class_index: int) -> WeightMap:
    """Reshape one class's classifier row into per-timestep blocks."""
    _require_nv(head)
    if not 0 <= class_index < head.num_classes:
        raise ValueError(
            f"class {class_index} outside [0, {head.num_classes})"
        )
    row = head.V[class_index]
    per_unit = row.reshape(
        cfg.layers, cfg.max_len, cfg.directions, cfg.hidden_dim
    ).copy()
    means = per_unit.mean(axis=3).transpose(0, 2, 1)  # (L, dir, T)
    return WeightMap(class_index, per_unit, means)


def class_similarity(head: HeadParams) -> SimilarityMatrix:
    """Cosine similarity between every pair of class weight rows."""
    _require_nv(head)
    d = head.num_classes
    if d < 2:
        raise ValueError(f"similarity needs at least 2 classes, got {d}")
    norms = np.linalg.norm(head.V, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(f"class {int(zero[0])} has a zero weight row")
    R = head.V / norms[:, None]
    S = R @ R.T
    S = np.clip((S + S.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(S)


def rank_timesteps(head: HeadParams, cfg: EncoderConfig, class_index: int,
                   mode: AblationMode, layer: int = 0,
                   direction: int = 0) -> np.ndarray:
    """Timesteps ordered by the class's mean block weight.

    Descending for TOP_POSITIVE, ascending for TOP_NEGATIVE; ties resolve
    toward the lower timestep index, so rankings are reproducible.
    """
    means = weight_map(head, cfg, class_index).timestep_means(layer, direction)
    key = -means if mode is AblationMode.TOP_POSITIVE else means
    return np.argsort(key, kind="stable")


def _zero_input_steps(ds: DataSet, steps: Sequence[int]) -> DataSet:
    samples = []
    for s in ds.samples:
        feats = s.features.copy()
        feats[list(steps)] = 0.0
        samples.append(SequenceSample(feats, s.label, s.true_length))
    return DataSet(samples, ds.num_classes, ds.feature_dim, ds.horizon)


def _zero_weight_steps(model: Model, steps: Sequence[int], layer: int) -> Model:
    cfg = model.encoder
    V = model.head.V.copy()
    sw = cfg.step_width
    T = cfg.max_len
    for t in steps:
        start = (layer * T + t) * sw
        V[:, start:start + sw] = 0.0
    head = HeadParams(model.head.kind, V, model.head.mean_pool)
    return Model(cfg, model.cells, head)


def time_analysis(model: Model, dataset: DataSet, class_index: int, k: int,
                  mode: AblationMode = AblationMode.TOP_POSITIVE,
                  target: AblationTarget = AblationTarget.INPUTS,
                  layer: int = 0, direction: int = 0) -> CounterfactualResult:
    """Counterfactual evaluation after silencing a class's top-K timesteps.

    Timesteps are ranked by the chosen class's mean per-step weights (one
    layer/direction block; layer 0 forward by default). The default target
    zeroes the *input* features at those steps for every sample; the
    alternate target zeroes the classifier's weight blocks instead.
    """
    _require_nv(model.head)
    cfg = model.encoder
    if not 0 <= class_index < model.num_classes:
        raise ValueError(f"class {class_index} outside [0, {model.num_classes})")
    if not 0 <= k <= cfg.max_len:
        raise ValueError(f"k must be in [0, {cfg.max_len}], got {k}")
    order = rank_timesteps(model.head, cfg, class_index, mode, layer, direction)
    steps = [int(t) for t in order[:k]]
    if target is AblationTarget.INPUTS:
        report = evaluate(model, _zero_input_steps(dataset, steps))
    else:
        report = evaluate(_zero_weight_steps(model, steps, layer), dataset)
    return CounterfactualResult(class_index, k, steps, mode, target, report)


def _write_csv(path: Path, header: List[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def export_weight_map_csv(m: WeightMap, cfg: EncoderConfig, path) -> None:
    """One CSV per class: timestep, mean_weight, unit_0..unit_{n-1}.

    Single-layer unidirectional maps write exactly that schema; deeper or
    bidirectional maps prepend layer and direction columns. Floats are
    written with full round-trip precision.
    """
    n = cfg.hidden_dim
    unit_cols = [f"unit_{u}" for u in range(n)]
    rows = []
    if cfg.layers == 1 and cfg.directions == 1:
        header = ["timestep", "mean_weight"] + unit_cols
        for t in range(cfg.max_len):
            rows.append(
                [t, repr(float(m.per_timestep_mean[0, 0, t]))]
                + [repr(float(v)) for v in m.per_unit[0, t, 0]]
            )
    else:
        header = ["layer", "direction", "timestep", "mean_weight"] + unit_cols
        for layer in range(cfg.layers):
            for direction in range(cfg.directions):
                for t in range(cfg.max_len):
                    rows.append(
                        [layer, direction, t,
                         repr(float(m.per_timestep_mean[layer, direction, t]))]
                        + [repr(float(v)) for v in m.per_unit[layer, t, direction]]
                    )
    _write_csv(Path(path), header, rows)


def load_weight_map_csv(path, cfg: EncoderConfig, class_index: int) -> WeightMap:
    """Inverse of ``export_weight_map_csv`` (bit-exact)."""
    per_unit = np.zeros(
        (cfg.layers, cfg.max_len, cfg.directions, cfg.hidden_dim), dtype=DTYPE
    )
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_layer = header[0] == "layer"
        for row in reader:
            if has_layer:
                layer, direction, t = int(row[0]), int(row[1]), int(row[2])
                units = [float(v) for v in row[4:]]
            else:
                layer, direction, t = 0, 0, int(row[0])
                units = [float(v) for v in row[2:]]
            per_unit[layer, t, direction] = units
    means = per_unit.mean(axis=3).transpose(0, 2, 1)
    return WeightMap(class_index, per_unit, means)


def export_similarity_csv(sim: SimilarityMatrix, path) -> None:
    d = sim.values.shape[0]
    header = ["class"] + [f"class_{j}" for j in range(d)]
    rows = [
        [i] + [repr(float(v)) for v in sim.values[i]]
        for i in range(d)
    ]
    _write_csv(Path(path), header, rows)


def counterfactual_rows(results: Sequence[CounterfactualResult]) -> List[dict]:
    rows = []
    for r in results:
        rows.append({
            "class": r.class_index,
            "k": r.k,
            "mode": r.mode.value,
            "target": r.target.value,
            "zeroed_steps": r.zeroed_steps,
            "overall_accuracy": r.report.overall_accuracy,
            "per_class_accuracy": [
                None if np.isnan(a) else float(a)
                for a in r.report.per_class_accuracy
            ],
        })
    return rows


def export_report(maps: Sequence[WeightMap], similarity: Optional[SimilarityMatrix],
                  counterfactuals: Sequence[CounterfactualResult],
                  cfg: EncoderConfig, out_dir) -> List[Path]:
    """Write the analysis bundle: one CSV per weight map, one similarity
    CSV, one JSON of counterfactual rows, plus a manifest listing them."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for m in maps:
        p = out / f"weight_map_class{m.class_index}.csv"
        export_weight_map_csv(m, cfg, p)
        written.append(p)
    if similarity is not None:
        p = out / "class_similarity.csv"
        export_similarity_csv(similarity, p)
        written.append(p)
    if counterfactuals:
        p = out / "counterfactuals.json"
        with open(p, "w") as fh:
            json.dump(counterfactual_rows(counterfactuals), fh, indent=2)
            fh.write("\n")
        written.append(p)
    manifest = out / "manifest.json"
    with open(manifest, "w") as fh:
        json.dump({"files": [f.name for f in written]}, fh, indent=2)
        fh.write("\n")
    written.append(manifest)
    return written
