"""Length-adaptive 1-d convolutional classifier for wrist pulse signals.

The pieces, in pipeline order: `dataset` reads portable subject directories
and cuts labeled frames, `dsp` conditions the raw signal, `network` is the
hand-rolled conv + dense model with its gradients, `training` fits it,
`metrics` scores it, `experiment` glues a benchmark grid on top, and
`synthetic` fakes data so everything runs without recordings.
"""

from .dataset import (
    ClassMap,
    ClassMode,
    DataFormatError,
    Frame,
    FrameSet,
    SplitError,
    SubjectRecord,
    cut_frames,
    load_subject,
    pool_subjects,
    split_40_60,
)
from .dsp import (
    FilterDesign,
    FilterDesignError,
    NonFiniteSignalError,
    PreprocessSettings,
    apply_filter,
    design_bandpass,
    design_from_text,
    design_to_text,
    moving_average,
    normalize,
    preprocess_record,
)
from .experiment import DataRecipe, build_frames, build_split, run_grid, run_row
from .metrics import (
    DEFAULT_GRID,
    ConfusionMatrix,
    EvalResult,
    GridResult,
    GridRow,
    evaluate,
    render_grid,
)
from .network import (
    ConfigError,
    Network,
    NetworkConfig,
    conv1d_full,
    conv1d_valid,
    frame_loss,
    gradient_check,
    load_model,
    save_model,
    subsample,
    target_vector,
    trace_shapes,
    upsample,
)
from .synthetic import make_labeled_record, make_sine_vs_noise_frames
from .training import TrainConfig, TrainingDivergedError, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "ClassMap",
    "ClassMode",
    "ConfigError",
    "ConfusionMatrix",
    "DEFAULT_GRID",
    "DataFormatError",
    "DataRecipe",
    "EvalResult",
    "FilterDesign",
    "FilterDesignError",
    "Frame",
    "FrameSet",
    "GridResult",
    "GridRow",
    "Network",
    "NetworkConfig",
    "NonFiniteSignalError",
    "PreprocessSettings",
    "SplitError",
    "SubjectRecord",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "apply_filter",
    "build_frames",
    "build_split",
    "conv1d_full",
    "conv1d_valid",
    "cut_frames",
    "design_bandpass",
    "design_from_text",
    "design_to_text",
    "evaluate",
    "frame_loss",
    "gradient_check",
    "load_model",
    "load_subject",
    "make_labeled_record",
    "make_sine_vs_noise_frames",
    "moving_average",
    "normalize",
    "pool_subjects",
    "preprocess_record",
    "render_grid",
    "run_grid",
    "run_row",
    "save_model",
    "split_40_60",
    "subsample",
    "target_vector",
    "trace_shapes",
    "train",
    "upsample",
]
