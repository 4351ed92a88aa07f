"""serkit: speech emotion recognition experiments over frame embeddings.

Compares hand-engineered acoustic descriptors against pretrained speech
and text representations with small classifier heads, under
speaker-independent five-fold cross-validation.
"""

from .audio import AudioClip, load_wav
from .data import (
    CLASSES,
    NUM_CLASSES,
    SESSIONS,
    FoldPlan,
    LoadReport,
    UtteranceRecord,
    crop_frames,
    embedding_path,
    load_manifest,
    make_folds,
    split_fold,
    subsample_balanced,
)
from .embio import container_size, read_container, read_header, write_container
from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    ContainerFormatError,
    DataError,
    DimensionError,
    NumericError,
    SerkitError,
    StateError,
    TruncatedError,
)
from .frames import SOURCE_BERT, SOURCE_DIMS, SOURCE_LLD, SOURCE_WAV2VEC, FrameSequence
from .lld import LLD_FEATURE_NAMES, extract_lld, frame_signal
from .metrics import (
    confusion_matrix,
    per_class_recall,
    unweighted_accuracy,
    weighted_accuracy,
)
from .models import (
    MODEL_KINDS,
    ModelSpec,
    PaddedBatch,
    build_batch,
    default_spec,
    forward_logits,
    forward_single,
    init_params,
    load_checkpoint,
    save_checkpoint,
)
from .synth import make_synthetic_dataset
from .train import (
    EmbeddingStore,
    FoldReport,
    InMemoryEmbeddings,
    RunReport,
    ScalePoint,
    TrainConfig,
    evaluate,
    predict,
    run_cv,
    run_scaling_curve,
    train_one,
)

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "BadMagicError",
    "CLASSES",
    "ChecksumError",
    "ConfigError",
    "ContainerFormatError",
    "DataError",
    "DimensionError",
    "EmbeddingStore",
    "FoldPlan",
    "FoldReport",
    "FrameSequence",
    "InMemoryEmbeddings",
    "LLD_FEATURE_NAMES",
    "LoadReport",
    "MODEL_KINDS",
    "ModelSpec",
    "NUM_CLASSES",
    "NumericError",
    "PaddedBatch",
    "RunReport",
    "SESSIONS",
    "SOURCE_BERT",
    "SOURCE_DIMS",
    "SOURCE_LLD",
    "SOURCE_WAV2VEC",
    "ScalePoint",
    "SerkitError",
    "StateError",
    "TrainConfig",
    "TruncatedError",
    "UtteranceRecord",
    "build_batch",
    "confusion_matrix",
    "container_size",
    "crop_frames",
    "default_spec",
    "embedding_path",
    "evaluate",
    "extract_lld",
    "forward_logits",
    "forward_single",
    "frame_signal",
    "init_params",
    "load_checkpoint",
    "load_manifest",
    "load_wav",
    "make_folds",
    "make_synthetic_dataset",
    "per_class_recall",
    "predict",
    "read_container",
    "read_header",
    "run_cv",
    "run_scaling_curve",
    "save_checkpoint",
    "split_fold",
    "subsample_balanced",
    "train_one",
    "unweighted_accuracy",
    "weighted_accuracy",
    "write_container",
]
