"""Recurrence cells: simple RNN, GRU, and LSTM.

Each cell advances a hidden state one timestep and can push gradients back
through that step analytically (no autodiff tape; the closed forms are
checked against central finite differences in the test suite).

Update rules
------------
Simple RNN (sigmoid activation)::

    h' = sigmoid(W h + U x + b)

GRU::

    r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
    z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
    n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
    h' = (1 - z) * n + z * h

LSTM::

    i  = sigmoid(W_ii x + b_ii + W_hi h + b_hi)
    f  = sigmoid(W_if x + b_if + W_hf h + b_hf)
    g  = tanh  (W_ig x + b_ig + W_hg h + b_hg)
    o  = sigmoid(W_io x + b_io + W_ho h + b_ho)
    c' = f * c + i * g
    h' = o * tanh(c')

States and inputs may be single vectors (shape ``(n,)`` / ``(m,)``) or
batches (``(B, n)`` / ``(B, m)``); outputs match the input's batch shape.
All functions are pure: parameters and traces are never mutated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import DTYPE, sigmoid


class CellKind(enum.Enum):
    SIMPLE_RNN = "rnn"
    GRU = "gru"
    LSTM = "lstm"


class InitKind(enum.Enum):
    UNIFORM = "uniform"
    ORTHOGONAL = "orthogonal"
    IDENTITY = "identity"
    NORMAL = "normal"


@dataclass(frozen=True)
class InitScheme:
    """Weight initialization recipe. ``kind`` governs hidden-to-hidden
    matrices only; input-to-hidden matrices and biases always use the
    uniform fan-in rule U(-1/sqrt(n), 1/sqrt(n))."""

    kind: InitKind = InitKind.UNIFORM
    seed: int = 0


# Parameter schemas: name -> shape kind ("hh" = n x n, "ih" = n x m, "b" = n).
# Insertion order is the canonical draw/serialization order.
_SCHEMAS = {
    CellKind.SIMPLE_RNN: {"W": "hh", "U": "ih", "b": "b"},
    CellKind.GRU: {
        "W_ir": "ih", "W_iz": "ih", "W_in": "ih",
        "W_hr": "hh", "W_hz": "hh", "W_hn": "hh",
        "b_ir": "b", "b_iz": "b", "b_in": "b",
        "b_hr": "b", "b_hz": "b", "b_hn": "b",
    },
    CellKind.LSTM: {
        "W_ii": "ih", "W_if": "ih", "W_ig": "ih", "W_io": "ih",
        "W_hi": "hh", "W_hf": "hh", "W_hg": "hh", "W_ho": "hh",
        "b_ii": "b", "b_if": "b", "b_ig": "b", "b_io": "b",
        "b_hi": "b", "b_hf": "b", "b_hg": "b", "b_ho": "b",
    },
}

_SHAPE_OF = {
    "hh": lambda m, n: (n, n),
    "ih": lambda m, n: (n, m),
    "b": lambda m, n: (n,),
}


def param_shapes(kind: CellKind, input_dim: int, hidden_dim: int) -> dict:
    """Canonical name -> shape map for one cell's parameter arrays."""
    schema = _SCHEMAS[kind]
    return {
        name: _SHAPE_OF[role](input_dim, hidden_dim)
        for name, role in schema.items()
    }


@dataclass
class CellParams:
    kind: CellKind
    input_dim: int
    hidden_dim: int
    arrays: dict

    def __post_init__(self):
        expected = param_shapes(self.kind, self.input_dim, self.hidden_dim)
        if set(self.arrays) != set(expected):
            raise ValueError(
                f"{self.kind.value} cell expects parameters "
                f"{sorted(expected)}, got {sorted(self.arrays)}"
            )
        for name, shape in expected.items():
            arr = np.asarray(self.arrays[name], dtype=DTYPE)
            if arr.shape != shape:
                raise ValueError(
                    f"parameter {name!r}: expected shape {shape}, got {arr.shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name!r} contains non-finite entries")
            self.arrays[name] = arr

    def copy(self) -> "CellParams":
        return CellParams(
            self.kind, self.input_dim, self.hidden_dim,
            {k: v.copy() for k, v in self.arrays.items()},
        )

    def zeros_like(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}


@dataclass
class CellState:
    h: np.ndarray
    c: Optional[np.ndarray] = None


@dataclass
class GateTrace:
    """Per-step activations cached for the backward pass.

    Keys by kind:
      SIMPLE_RNN: pre, h
      GRU:        r, z, n, h, hn_affine  (hn_affine = W_hn h_prev + b_hn)
      LSTM:       i, f, g, o, c, h
    """

    kind: CellKind
    cached: dict = field(default_factory=dict)


def zero_state(kind: CellKind, hidden_dim: int, batch: Optional[int] = None) -> CellState:
    shape = (hidden_dim,) if batch is None else (batch, hidden_dim)
    h = np.zeros(shape, dtype=DTYPE)
    c = np.zeros(shape, dtype=DTYPE) if kind is CellKind.LSTM else None
    return CellState(h, c)


def _as_batch(a, dim, what):
    a = np.asarray(a, dtype=DTYPE)
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise ValueError(f"{what}: expected length {dim}, got {a.shape[0]}")
        return a[None, :], True
    if a.ndim == 2:
        if a.shape[1] != dim:
            raise ValueError(f"{what}: expected width {dim}, got {a.shape[1]}")
        return a, False
    raise ValueError(f"{what}: expected 1-D or 2-D array, got shape {a.shape}")


def cell_forward(p: CellParams, state: CellState, x_t: np.ndarray):
    """One recurrence step. Returns ``(new_state, trace)``."""
    a = p.arrays
    x, x1 = _as_batch(x_t, p.input_dim, "input x_t")
    h, h1 = _as_batch(state.h, p.hidden_dim, "state h")
    squeeze = x1 and h1

    def out(arr):
        return arr[0] if squeeze else arr

    if p.kind is CellKind.SIMPLE_RNN:
        pre = h @ a["W"].T + x @ a["U"].T + a["b"]
        h_new = sigmoid(pre)
        trace = GateTrace(p.kind, {"pre": out(pre), "h": out(h_new)})
        return CellState(out(h_new)), trace

    if p.kind is CellKind.GRU:
        r = sigmoid(x @ a["W_ir"].T + a["b_ir"] + h @ a["W_hr"].T + a["b_hr"])
        z = sigmoid(x @ a["W_iz"].T + a["b_iz"] + h @ a["W_hz"].T + a["b_hz"])
        hn_affine = h @ a["W_hn"].T + a["b_hn"]
        n = np.tanh(x @ a["W_in"].T + a["b_in"] + r * hn_affine)
        h_new = (1.0 - z) * n + z * h
        trace = GateTrace(p.kind, {
            "r": out(r), "z": out(z), "n": out(n),
            "h": out(h_new), "hn_affine": out(hn_affine),
        })
        return CellState(out(h_new)), trace

    if p.kind is CellKind.LSTM:
        if state.c is None:
            raise ValueError("LSTM state requires a cell vector c")
        c, _ = _as_batch(state.c, p.hidden_dim, "state c")
        i = sigmoid(x @ a["W_ii"].T + a["b_ii"] + h @ a["W_hi"].T + a["b_hi"])
        f = sigmoid(x @ a["W_if"].T + a["b_if"] + h @ a["W_hf"].T + a["b_hf"])
        g = np.tanh(x @ a["W_ig"].T + a["b_ig"] + h @ a["W_hg"].T + a["b_hg"])
        o = sigmoid(x @ a["W_io"].T + a["b_io"] + h @ a["W_ho"].T + a["b_ho"])
        c_new = f * c + i * g
        h_new = o * np.tanh(c_new)
        trace = GateTrace(p.kind, {
            "i": out(i), "f": out(f), "g": out(g), "o": out(o),
            "c": out(c_new), "h": out(h_new),
        })
        return CellState(out(h_new), out(c_new)), trace

    raise ValueError(f"unknown cell kind {p.kind!r}")


def cell_backward(
    p: CellParams,
    trace: GateTrace,
    prev_state: CellState,
    x_t: np.ndarray,
    grad_h: np.ndarray,
    grad_c_in: Optional[np.ndarray] = None,
):
    """Backward pass through one recurrence step.

    ``grad_h`` (and ``grad_c_in`` for LSTM) are the loss gradients arriving
    at this step's outputs. Returns ``(grad_params, grad_prev_h,
    grad_prev_c, grad_x)`` where ``grad_params`` mirrors ``p.arrays`` and
    ``grad_prev_c`` is None for non-LSTM cells. Batched upstream gradients
    produce parameter gradients summed over the batch.
    """
    if trace.kind is not p.kind:
        raise ValueError(
            f"trace kind {trace.kind.value!r} does not match cell kind {p.kind.value!r}"
        )
    a = p.arrays
    x, x1 = _as_batch(x_t, p.input_dim, "input x_t")
    hp, h1 = _as_batch(prev_state.h, p.hidden_dim, "previous h")
    dh, _ = _as_batch(grad_h, p.hidden_dim, "grad_h")
    squeeze = x1 and h1

    def out(arr):
        return arr[0] if squeeze else arr

    def cached(key):
        arr, _ = _as_batch(trace.cached[key], p.hidden_dim, f"trace[{key}]")
        return arr

    if p.kind is CellKind.SIMPLE_RNN:
        h = cached("h")
        dpre = dh * h * (1.0 - h)
        grads = {
            "W": dpre.T @ hp,
            "U": dpre.T @ x,
            "b": dpre.sum(axis=0),
        }
        return grads, out(dpre @ a["W"]), None, out(dpre @ a["U"])

    if p.kind is CellKind.GRU:
        r, z, n = cached("r"), cached("z"), cached("n")
        hn_affine = cached("hn_affine")

        dz = dh * (hp - n)
        dn = dh * (1.0 - z)
        dhp = dh * z

        dn_pre = dn * (1.0 - n * n)
        dr = dn_pre * hn_affine
        d_affine = dn_pre * r
        dhp = dhp + d_affine @ a["W_hn"]

        dz_pre = dz * z * (1.0 - z)
        dr_pre = dr * r * (1.0 - r)
        dhp = dhp + dz_pre @ a["W_hz"] + dr_pre @ a["W_hr"]

        dx = dn_pre @ a["W_in"] + dz_pre @ a["W_iz"] + dr_pre @ a["W_ir"]
        grads = {
            "W_ir": dr_pre.T @ x, "W_iz": dz_pre.T @ x, "W_in": dn_pre.T @ x,
            "W_hr": dr_pre.T @ hp, "W_hz": dz_pre.T @ hp, "W_hn": d_affine.T @ hp,
            "b_ir": dr_pre.sum(axis=0), "b_iz": dz_pre.sum(axis=0),
            "b_in": dn_pre.sum(axis=0), "b_hr": dr_pre.sum(axis=0),
            "b_hz": dz_pre.sum(axis=0), "b_hn": d_affine.sum(axis=0),
        }
        return grads, out(dhp), None, out(dx)

    if p.kind is CellKind.LSTM:
        if prev_state.c is None:
            raise ValueError("LSTM backward requires the previous cell state c")
        cp, _ = _as_batch(prev_state.c, p.hidden_dim, "previous c")
        i, f, g, o, c = cached("i"), cached("f"), cached("g"), cached("o"), cached("c")
        tanh_c = np.tanh(c)

        dc = dh * o * (1.0 - tanh_c * tanh_c)
        if grad_c_in is not None:
            dc_in, _ = _as_batch(grad_c_in, p.hidden_dim, "grad_c_in")
            dc = dc + dc_in
        do = dh * tanh_c
        di = dc * g
        df = dc * cp
        dg = dc * i
        dcp = dc * f

        di_pre = di * i * (1.0 - i)
        df_pre = df * f * (1.0 - f)
        dg_pre = dg * (1.0 - g * g)
        do_pre = do * o * (1.0 - o)

        dhp = (
            di_pre @ a["W_hi"] + df_pre @ a["W_hf"]
            + dg_pre @ a["W_hg"] + do_pre @ a["W_ho"]
        )
        dx = (
            di_pre @ a["W_ii"] + df_pre @ a["W_if"]
            + dg_pre @ a["W_ig"] + do_pre @ a["W_io"]
        )
        grads = {
            "W_ii": di_pre.T @ x, "W_if": df_pre.T @ x,
            "W_ig": dg_pre.T @ x, "W_io": do_pre.T @ x,
            "W_hi": di_pre.T @ hp, "W_hf": df_pre.T @ hp,
            "W_hg": dg_pre.T @ hp, "W_ho": do_pre.T @ hp,
            "b_ii": di_pre.sum(axis=0), "b_if": df_pre.sum(axis=0),
            "b_ig": dg_pre.sum(axis=0), "b_io": do_pre.sum(axis=0),
            "b_hi": di_pre.sum(axis=0), "b_hf": df_pre.sum(axis=0),
            "b_hg": dg_pre.sum(axis=0), "b_ho": do_pre.sum(axis=0),
        }
        return grads, out(dhp), out(dcp), out(dx)

    raise ValueError(f"unknown cell kind {p.kind!r}")


def scheme_matrix(kind: InitKind, shape, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix under an initialization scheme.

    Orthogonal and identity require a square shape; uniform and normal use
    the fan-in rule with n = shape[0].
    """
    rows, cols = shape
    n = rows
    if kind is InitKind.UNIFORM:
        bound = 1.0 / np.sqrt(n)
        return rng.uniform(-bound, bound, size=shape)
    if kind is InitKind.ORTHOGONAL:
        if rows != cols:
            raise ValueError(f"orthogonal init requires a square matrix, got {shape}")
        q, r = np.linalg.qr(rng.standard_normal(shape))
        return q * np.sign(np.diag(r))
    if kind is InitKind.IDENTITY:
        if rows != cols:
            raise ValueError(f"identity init requires a square matrix, got {shape}")
        return np.eye(n, dtype=DTYPE)
    if kind is InitKind.NORMAL:
        return rng.normal(0.0, np.sqrt(1.0 / n), size=shape)
    raise ValueError(f"unknown init kind {kind!r}")


def init_params(kind: CellKind, input_dim: int, hidden_dim: int,
                scheme: InitScheme) -> CellParams:
    """Create cell parameters under an initialization scheme.

    The scheme applies to hidden-to-hidden matrices; input-to-hidden
    matrices and biases always follow the uniform fan-in rule. Draws happen
    in canonical schema order, so a fixed seed gives bit-identical
    parameters.
    """
    if input_dim < 1 or hidden_dim < 1:
        raise ValueError(
            f"dimensions must be >= 1, got input_dim={input_dim}, hidden_dim={hidden_dim}"
        )
    rng = np.random.default_rng(scheme.seed)
    bound = 1.0 / np.sqrt(hidden_dim)
    shapes = param_shapes(kind, input_dim, hidden_dim)
    arrays = {}
    for name, role in _SCHEMAS[kind].items():
        if role == "hh":
            arrays[name] = scheme_matrix(scheme.kind, shapes[name], rng)
        else:
            arrays[name] = rng.uniform(-bound, bound, size=shapes[name])
    return CellParams(kind, input_dim, hidden_dim, arrays)
