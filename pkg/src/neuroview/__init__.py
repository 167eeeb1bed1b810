"""Recurrent sequence classifiers with a per-timestep linear readout.

The library trains simple RNN, GRU, and LSTM encoders from scratch
(analytic backpropagation through time, no autodiff framework) and
attaches one of three classifier heads: last hidden state, pooled hidden
states, or the per-timestep global linear readout whose weights expose how
much each timestep contributes to each class.
"""

from .linalg import concat, elementwise, matvec, relu, sigmoid, tanh
from .cells import (
    CellKind,
    CellParams,
    CellState,
    GateTrace,
    InitKind,
    InitScheme,
    cell_backward,
    cell_forward,
    init_params,
    param_shapes,
    scheme_matrix,
    zero_state,
)
from .network import (
    EncoderConfig,
    ForwardTrace,
    HeadKind,
    HeadParams,
    Model,
    encode,
    head_forward,
    init_head,
    network_backward,
    predict,
)
from .train import (
    AdamState,
    EvalReport,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    build_model,
    evaluate,
    fit,
    param_tree,
    save_history_csv,
    softmax_xent,
)
from .data import (
    DataSet,
    SequenceSample,
    load_ucr,
    pad_dataset,
    pad_sequence,
    save_ucr,
    synth_separable,
)
from .interpret import (
    AblationMode,
    AblationTarget,
    CounterfactualResult,
    SimilarityMatrix,
    WeightMap,
    class_similarity,
    export_report,
    rank_timesteps,
    time_analysis,
    weight_map,
)
from .cli import RunConfig, load_checkpoint, save_checkpoint

__version__ = "0.1.0"
