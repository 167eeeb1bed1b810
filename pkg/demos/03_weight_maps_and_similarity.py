#!/usr/bin/env python3
"""Read a trained classifier's per-timestep weights.

After training, row i of the global classifier matrix scores class i as an
inner product with the concatenated rectified hidden states, so slicing
that row into per-timestep blocks says exactly which timesteps push a
prediction toward (positive weights) or away from (negative weights) each
class. This script trains a small model, prints each class's mean weight
per timestep as a bar strip, and exports the analysis CSVs.
"""

import numpy as np

from neuroview import (
    CellKind,
    EncoderConfig,
    HeadKind,
    InitKind,
    InitScheme,
    TrainConfig,
    class_similarity,
    export_report,
    fit,
    synth_separable,
    weight_map,
)

BARS = " ▁▂▃▄▅▆▇█"


def strip(values):
    lo, hi = values.min(), values.max()
    span = (hi - lo) or 1.0
    return "".join(BARS[int(round((v - lo) / span * 8))] for v in values)


train = synth_separable(num_classes=3, horizon=30, feature_dim=1,
                        n_per_class=25, seed=7)
encoder = EncoderConfig(CellKind.GRU, 1, 8, train.horizon)
model, _ = fit(train, TrainConfig(epochs=400, seed=7), encoder,
               HeadKind.NEUROVIEW, InitScheme(InitKind.UNIFORM, 7))

print("per-timestep mean classifier weight, one strip per class")
print("(each class's evidence window sits at a different early position)\n")
maps = []
for c in range(train.num_classes):
    m = weight_map(model.head, encoder, c)
    means = m.timestep_means()
    top = np.argsort(-means, kind="stable")[:4]
    maps.append(m)
    print(f"class {c}: {strip(means)}  top steps {sorted(int(t) for t in top)}")

sim = class_similarity(model.head)
print("\ncosine similarity between class weight rows:")
print(np.round(sim.values, 3))

files = export_report(maps, sim, [], encoder, "analysis")
print(f"\nexported {len(files)} files to analysis/:")
for f in files:
    print("  ", f.name)
