"""Sequence encoders and classifier heads.

An encoder unrolls one or more recurrence cells over a fixed horizon of T
timesteps (optionally bidirectional and/or stacked) and retains every
hidden state. Three heads turn the retained states into class scores:

* ``LAST_STATE``    -- linear map of the final timestep's hidden state.
* ``AVERAGE_POOL``  -- linear map of the sum of all timesteps' hidden
                       states (optionally divided by T via ``mean_pool``).
* ``NEUROVIEW``     -- every timestep's hidden state is rectified
                       (``ReLU``), all of them are concatenated into one
                       long feature vector Q, and a single global matrix V
                       maps Q to class scores. Each timestep then owns an
                       additive share of every class score, which is what
                       the interpretability tooling reads off.

Feature vector layout (also the column layout of the NeuroView ``V``):
layer-major, then timestep, then direction, then hidden unit::

    column((layer, t, direction, unit)) =
        ((layer * T + t) * n_directions + direction) * hidden_dim + unit

For the NeuroView head, hidden states of *all* layers feed the classifier,
so its width is ``layers * T * n_directions * hidden_dim``. The baseline
heads read only the top layer (width ``n_directions * hidden_dim``); for
bidirectional encoders the per-timestep state is the concatenation
``[forward, reverse]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .linalg import DTYPE, relu
from .cells import (
    CellKind,
    CellParams,
    CellState,
    GateTrace,
    cell_backward,
    cell_forward,
    zero_state,
)


class HeadKind(enum.Enum):
    LAST_STATE = "last"
    AVERAGE_POOL = "avg"
    NEUROVIEW = "nv"


@dataclass(frozen=True)
class EncoderConfig:
    cell: CellKind
    input_dim: int
    hidden_dim: int
    max_len: int
    layers: int = 1
    bidirectional: bool = False

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")

    @property
    def directions(self) -> int:
        return 2 if self.bidirectional else 1

    @property
    def step_width(self) -> int:
        """Per-timestep feature width of one layer's output."""
        return self.hidden_dim * self.directions

    def head_width(self, kind: HeadKind) -> int:
        if kind is HeadKind.NEUROVIEW:
            return self.layers * self.max_len * self.step_width
        return self.step_width

    def num_cells(self) -> int:
        return self.layers * self.directions


@dataclass
class HeadParams:
    kind: HeadKind
    V: np.ndarray  # (num_classes, width)
    mean_pool: bool = False

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=DTYPE)
        if self.V.ndim != 2:
            raise ValueError(f"head matrix must be 2-D, got shape {self.V.shape}")

    @property
    def num_classes(self) -> int:
        return self.V.shape[0]


@dataclass
class ForwardTrace:
    """Everything one forward pass retains.

    ``hidden[layer]`` has shape (T, B, step_width); forward-direction units
    occupy ``[:, :, :hidden_dim]`` and reverse-direction units the rest.
    ``gate_traces[layer][direction][t]`` is the cell trace produced at
    timestep ``t``. ``layer_inputs[layer]`` is the (T, B, in_width) input
    sequence the layer consumed. NeuroView-only fields (``q``, ``logits``,
    ``step_logits``) are filled by ``head_forward``.
    """

    hidden: List[np.ndarray]
    gate_traces: list
    layer_inputs: List[np.ndarray]
    batched: bool
    q: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None
    step_logits: Optional[np.ndarray] = None  # (layers, T, B, d)


def _check_cells(cfg: EncoderConfig, cells: List[CellParams]):
    if len(cells) != cfg.num_cells():
        raise ValueError(
            f"encoder needs {cfg.num_cells()} cells "
            f"({cfg.layers} layers x {cfg.directions} directions), got {len(cells)}"
        )
    for idx, p in enumerate(cells):
        layer = idx // cfg.directions
        want_in = cfg.input_dim if layer == 0 else cfg.step_width
        if p.kind is not cfg.cell:
            raise ValueError(f"cell {idx}: kind {p.kind.value!r} != config {cfg.cell.value!r}")
        if p.hidden_dim != cfg.hidden_dim or p.input_dim != want_in:
            raise ValueError(
                f"cell {idx}: dims ({p.input_dim}, {p.hidden_dim}) do not match "
                f"config ({want_in}, {cfg.hidden_dim})"
            )


def _as_time_major(cfg: EncoderConfig, x) -> tuple:
    """Normalize input to (T, B, m); accepts (T, m), (B, T, m), or a sample."""
    feats = getattr(x, "features", x)
    feats = np.asarray(feats, dtype=DTYPE)
    if feats.ndim == 2:
        if feats.shape != (cfg.max_len, cfg.input_dim):
            raise ValueError(
                f"expected one sequence of shape {(cfg.max_len, cfg.input_dim)}, "
                f"got {feats.shape}"
            )
        return feats[:, None, :], False
    if feats.ndim == 3:
        if feats.shape[1:] != (cfg.max_len, cfg.input_dim):
            raise ValueError(
                f"expected batch of shape (B, {cfg.max_len}, {cfg.input_dim}), "
                f"got {feats.shape}"
            )
        return feats.transpose(1, 0, 2), True
    raise ValueError(f"expected 2-D or 3-D input, got shape {feats.shape}")


def encode(cfg: EncoderConfig, cells: List[CellParams], x) -> ForwardTrace:
    """Unroll the encoder over a sequence (or batch of sequences).

    ``x`` may be a SequenceSample, a (T, m) array, or a (B, T, m) batch,
    already padded/truncated to exactly ``cfg.max_len`` steps. Cells are
    ordered layer-major with the forward direction first:
    ``[l0_fwd, l0_rev, l1_fwd, l1_rev, ...]``.
    """
    _check_cells(cfg, cells)
    X, batched = _as_time_major(cfg, x)
    T = cfg.max_len
    B = X.shape[1]
    n = cfg.hidden_dim

    hidden: List[np.ndarray] = []
    gate_traces = []
    layer_inputs: List[np.ndarray] = []

    for layer in range(cfg.layers):
        layer_inputs.append(X)
        p_f = cells[layer * cfg.directions]
        state = zero_state(cfg.cell, n, B)
        h_f = np.empty((T, B, n), dtype=DTYPE)
        traces_f: List[GateTrace] = [None] * T
        for t in range(T):
            state, tr = cell_forward(p_f, state, X[t])
            h_f[t] = state.h
            traces_f[t] = tr
        dir_traces = [traces_f]

        if cfg.bidirectional:
            p_r = cells[layer * cfg.directions + 1]
            state = zero_state(cfg.cell, n, B)
            h_r = np.empty((T, B, n), dtype=DTYPE)
            traces_r: List[GateTrace] = [None] * T
            for t in range(T - 1, -1, -1):
                state, tr = cell_forward(p_r, state, X[t])
                h_r[t] = state.h
                traces_r[t] = tr
            dir_traces.append(traces_r)
            H = np.concatenate([h_f, h_r], axis=2)
        else:
            H = h_f

        hidden.append(H)
        gate_traces.append(dir_traces)
        X = H

    return ForwardTrace(hidden, gate_traces, layer_inputs, batched)


def _nv_features(cfg: EncoderConfig, trace: ForwardTrace) -> np.ndarray:
    """Rectify and concatenate all retained hidden states: (B, nv_width)."""
    B = trace.hidden[0].shape[1]
    per_layer = [
        relu(H).transpose(1, 0, 2).reshape(B, cfg.max_len * cfg.step_width)
        for H in trace.hidden
    ]
    return np.concatenate(per_layer, axis=1)


def head_forward(head: HeadParams, trace: ForwardTrace,
                 cfg: EncoderConfig) -> np.ndarray:
    """Class scores for a forward trace; fills the trace's NeuroView fields.

    Returns shape (d,) for a single sequence or (B, d) for a batch.
    """
    width = cfg.head_width(head.kind)
    if head.V.shape[1] != width:
        raise ValueError(
            f"head width mismatch: V has {head.V.shape[1]} columns, "
            f"encoder produces {width} features for {head.kind.value!r}"
        )
    top = trace.hidden[-1]
    T = cfg.max_len
    B = top.shape[1]
    d = head.num_classes

    if head.kind is HeadKind.LAST_STATE:
        logits = top[T - 1] @ head.V.T
    elif head.kind is HeadKind.AVERAGE_POOL:
        pooled = top.sum(axis=0)
        if head.mean_pool:
            pooled = pooled / T
        logits = pooled @ head.V.T
    elif head.kind is HeadKind.NEUROVIEW:
        q = _nv_features(cfg, trace)
        logits = q @ head.V.T
        sw = cfg.step_width
        step_logits = np.empty((cfg.layers, T, B, d), dtype=DTYPE)
        for layer in range(cfg.layers):
            for t in range(T):
                block = head.V[:, (layer * T + t) * sw:(layer * T + t + 1) * sw]
                step_logits[layer, t] = relu(trace.hidden[layer][t]) @ block.T
        trace.q = q
        trace.step_logits = step_logits
        trace.logits = logits
    else:
        raise ValueError(f"unknown head kind {head.kind!r}")

    return logits if trace.batched else logits[0]


def network_backward(cfg: EncoderConfig, cells: List[CellParams],
                     head: HeadParams, trace: ForwardTrace,
                     grad_logits: np.ndarray):
    """Backpropagate from class-score gradients through head and encoder.

    Returns ``(grad_V, cell_grads)`` with ``cell_grads[i]`` mirroring
    ``cells[i].arrays``. For batches, gradients are summed over the batch
    (softmax_xent's mean reduction already carries the 1/B factor).
    """
    _check_cells(cfg, cells)
    gl = np.asarray(grad_logits, dtype=DTYPE)
    if gl.ndim == 1:
        gl = gl[None, :]
    if gl.shape[1] != head.num_classes:
        raise ValueError(
            f"grad_logits width {gl.shape[1]} != {head.num_classes} classes"
        )
    T = cfg.max_len
    n = cfg.hidden_dim
    sw = cfg.step_width
    B = trace.hidden[0].shape[1]
    if gl.shape[0] != B:
        raise ValueError(f"grad_logits batch {gl.shape[0]} != trace batch {B}")

    # Upstream gradient arriving at each layer's per-timestep output.
    dH = [np.zeros((T, B, sw), dtype=DTYPE) for _ in range(cfg.layers)]

    if head.kind is HeadKind.NEUROVIEW:
        if trace.q is None:
            raise ValueError("trace has no NeuroView features; run head_forward first")
        grad_V = gl.T @ trace.q
        grad_q = gl @ head.V
        for layer in range(cfg.layers):
            blocks = grad_q[:, layer * T * sw:(layer + 1) * T * sw]
            blocks = blocks.reshape(B, T, sw).transpose(1, 0, 2)
            dH[layer] += blocks * (trace.hidden[layer] > 0.0)
    elif head.kind is HeadKind.LAST_STATE:
        grad_V = gl.T @ trace.hidden[-1][T - 1]
        dH[-1][T - 1] += gl @ head.V
    elif head.kind is HeadKind.AVERAGE_POOL:
        scale = 1.0 / T if head.mean_pool else 1.0
        grad_V = scale * (gl.T @ trace.hidden[-1].sum(axis=0))
        dH[-1] += scale * (gl @ head.V)[None, :, :]
    else:
        raise ValueError(f"unknown head kind {head.kind!r}")

    cell_grads = [p.zeros_like() for p in cells]

    for layer in range(cfg.layers - 1, -1, -1):
        X = trace.layer_inputs[layer]
        H = trace.hidden[layer]
        dX = np.zeros_like(X)
        is_lstm = cfg.cell is CellKind.LSTM

        # Forward direction: gradients flow from t to t-1.
        idx = layer * cfg.directions
        p_f = cells[idx]
        traces_f = trace.gate_traces[layer][0]
        carry_h = np.zeros((B, n), dtype=DTYPE)
        carry_c = np.zeros((B, n), dtype=DTYPE) if is_lstm else None
        for t in range(T - 1, -1, -1):
            gh = dH[layer][t][:, :n] + carry_h
            if t > 0:
                prev = CellState(
                    H[t - 1][:, :n],
                    traces_f[t - 1].cached["c"] if is_lstm else None,
                )
            else:
                prev = zero_state(cfg.cell, n, B)
            grads, carry_h, carry_c, dx = cell_backward(
                p_f, traces_f[t], prev, X[t], gh, carry_c
            )
            for k, v in grads.items():
                cell_grads[idx][k] += v
            dX[t] += dx

        # Reverse direction: the recurrence runs t+1 -> t, so its BPTT
        # carry flows from t to t+1.
        if cfg.bidirectional:
            idx_r = idx + 1
            p_r = cells[idx_r]
            traces_r = trace.gate_traces[layer][1]
            carry_h = np.zeros((B, n), dtype=DTYPE)
            carry_c = np.zeros((B, n), dtype=DTYPE) if is_lstm else None
            for t in range(T):
                gh = dH[layer][t][:, n:] + carry_h
                if t < T - 1:
                    prev = CellState(
                        H[t + 1][:, n:],
                        traces_r[t + 1].cached["c"] if is_lstm else None,
                    )
                else:
                    prev = zero_state(cfg.cell, n, B)
                grads, carry_h, carry_c, dx = cell_backward(
                    p_r, traces_r[t], prev, X[t], gh, carry_c
                )
                for k, v in grads.items():
                    cell_grads[idx_r][k] += v
                dX[t] += dx

        if layer > 0:
            dH[layer - 1] += dX

    return grad_V, cell_grads


@dataclass
class Model:
    """A trained (or trainable) classifier: encoder cells plus one head."""

    encoder: EncoderConfig
    cells: List[CellParams]
    head: HeadParams

    def __post_init__(self):
        _check_cells(self.encoder, self.cells)
        if self.head.V.shape[1] != self.encoder.head_width(self.head.kind):
            raise ValueError(
                f"head V has {self.head.V.shape[1]} columns, encoder provides "
                f"{self.encoder.head_width(self.head.kind)}"
            )

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    def forward(self, x) -> tuple:
        trace = encode(self.encoder, self.cells, x)
        logits = head_forward(self.head, trace, self.encoder)
        return logits, trace


def predict(cfg: EncoderConfig, cells: List[CellParams], head: HeadParams, x):
    """Predicted class and raw class scores for one sequence or a batch.

    Ties break toward the lowest class index. Scores stay un-normalized;
    the softmax only matters inside the training loss and never changes
    the argmax.
    """
    trace = encode(cfg, cells, x)
    logits = head_forward(head, trace, cfg)
    if logits.ndim == 1:
        return int(np.argmax(logits)), logits
    return np.argmax(logits, axis=1), logits


def init_head(cfg: EncoderConfig, kind: HeadKind, num_classes: int,
              seed: int, mean_pool: bool = False) -> HeadParams:
    """Uniform fan-in initialization for the classifier matrix."""
    width = cfg.head_width(kind)
    bound = 1.0 / np.sqrt(width)
    rng = np.random.default_rng(seed)
    V = rng.uniform(-bound, bound, size=(num_classes, width))
    return HeadParams(kind, V, mean_pool)
