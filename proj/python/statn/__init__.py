"""Learnable statistical shape model in a spatial transformer pipeline."""

from ._statn import (
    ConfigError,
    ConstraintError,
    Dataset,
    DatasetItem,
    EvalLog,
    FitResult,
    FormatError,
    InputError,
    Model,
    ModelConfig,
    NumericError,
    PoseParams,
    StepLog,
    SynthConfig,
    Tensor,
    TrainConfig,
    TrainLog,
    average_identity,
    bilinear_resize,
    build_model,
    fit,
    forward,
    gradient_suite,
    load_image_dir,
    load_model,
    make_template,
    read_ppm,
    save_model,
    synth_generate,
    synth_generate_classes,
    train,
    write_ppm,
)

__all__ = [
    "ConfigError",
    "ConstraintError",
    "Dataset",
    "DatasetItem",
    "EvalLog",
    "FitResult",
    "FormatError",
    "InputError",
    "Model",
    "ModelConfig",
    "NumericError",
    "PoseParams",
    "StepLog",
    "SynthConfig",
    "Tensor",
    "TrainConfig",
    "TrainLog",
    "average_identity",
    "bilinear_resize",
    "build_model",
    "fit",
    "forward",
    "gradient_suite",
    "load_image_dir",
    "load_model",
    "make_template",
    "read_ppm",
    "save_model",
    "synth_generate",
    "synth_generate_classes",
    "train",
    "write_ppm",
]

__version__ = "0.1.0"
