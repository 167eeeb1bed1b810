#!/usr/bin/env python3
"""Step the three recurrence cells by hand and verify their analytic
gradients against central finite differences.

Every gradient in this library is a closed-form derivation, not an
autodiff tape, so the one check that matters is agreement with the
difference quotient. This script reproduces that check interactively.
"""

import numpy as np

from neuroview import (
    CellKind,
    CellState,
    InitKind,
    InitScheme,
    cell_backward,
    cell_forward,
    init_params,
    zero_state,
)

rng = np.random.default_rng(0)

print("=== stepping each cell on a tiny input sequence ===")
for kind in CellKind:
    p = init_params(kind, input_dim=2, hidden_dim=4, scheme=InitScheme(InitKind.UNIFORM, 1))
    state = zero_state(kind, 4)
    for t in range(3):
        state, trace = cell_forward(p, state, rng.normal(size=2))
    print(f"{kind.value:5s} h after 3 steps: {np.round(state.h, 4)}")

print()
print("=== analytic vs finite-difference gradients (one step) ===")
eps = 1e-5
for kind in CellKind:
    p = init_params(kind, 2, 4, InitScheme(InitKind.UNIFORM, 2))
    h_prev = rng.uniform(-0.5, 0.5, 4)
    c_prev = rng.uniform(-0.5, 0.5, 4) if kind is CellKind.LSTM else None
    x = rng.normal(size=2)
    w = rng.normal(size=4)  # random readout defining the scalar to differentiate

    def scalar():
        s, _ = cell_forward(p, CellState(h_prev, c_prev), x)
        return float(w @ s.h)

    prev = CellState(h_prev, c_prev)
    _, trace = cell_forward(p, prev, x)
    grads, dh, dc, dx = cell_backward(p, trace, prev, x, w)

    worst = 0.0
    for name, arr in p.arrays.items():
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            keep = arr[i]
            arr[i] = keep + eps
            up = scalar()
            arr[i] = keep - eps
            down = scalar()
            arr[i] = keep
            fd = (up - down) / (2 * eps)
            worst = max(worst, abs(fd - grads[name][i]) / max(abs(fd), abs(grads[name][i]), 1e-8))
    print(f"{kind.value:5s} worst relative disagreement over all parameters: {worst:.2e}")

print()
print("=== initialization schemes ===")
for scheme in InitKind:
    p = init_params(CellKind.SIMPLE_RNN, 2, 6, InitScheme(scheme, 3))
    W = p.arrays["W"]
    ortho = np.max(np.abs(W.T @ W - np.eye(6)))
    print(f"{scheme.value:10s} hidden matrix: |W|_max={np.abs(W).max():.3f}  "
          f"max|W'W - I|={ortho:.2e}")
