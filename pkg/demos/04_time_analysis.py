#!/usr/bin/env python3
"""Counterfactual timestep ablation.

Rank a class's timesteps by their mean classifier weight, zero the input
data at the top-K of them for every test sequence, and watch the accuracy
respond. Zeroing the most positive steps starves the class of evidence;
zeroing the most negative steps removes counter-evidence and should never
meaningfully hurt it.
"""

from neuroview import (
    AblationMode,
    CellKind,
    EncoderConfig,
    HeadKind,
    InitKind,
    InitScheme,
    TrainConfig,
    evaluate,
    fit,
    synth_separable,
    time_analysis,
)

train = synth_separable(2, 24, 1, 20, seed=11, amplitude=3.0)
test = synth_separable(2, 24, 1, 40, seed=22, amplitude=3.0)
encoder = EncoderConfig(CellKind.GRU, 1, 8, train.horizon)
model, _ = fit(train, TrainConfig(epochs=400, seed=11), encoder,
               HeadKind.NEUROVIEW, InitScheme(InitKind.UNIFORM, 11))

base = evaluate(model, test)
print(f"unmodified test accuracy: {base.overall_accuracy:.3f}\n")

cls = 0
print(f"zeroing input data at class-{cls}'s highest-weight timesteps:")
print(f"{'k':>3s} {'zeroed steps':24s} {'overall':>8s} {'class 0':>8s} {'class 1':>8s}")
for k in (0, 1, 3, 6, 10):
    r = time_analysis(model, test, cls, k, AblationMode.TOP_POSITIVE)
    pc = r.report.per_class_accuracy
    print(f"{k:3d} {str(sorted(r.zeroed_steps)):24s} "
          f"{r.report.overall_accuracy:8.3f} {pc[0]:8.3f} {pc[1]:8.3f}")

print(f"\nsame, but zeroing class-{cls}'s most NEGATIVE timesteps:")
for k in (0, 1, 5):
    r = time_analysis(model, test, cls, k, AblationMode.TOP_NEGATIVE)
    pc = r.report.per_class_accuracy
    print(f"{k:3d} {str(sorted(r.zeroed_steps)):24s} "
          f"{r.report.overall_accuracy:8.3f} {pc[0]:8.3f} {pc[1]:8.3f}")
