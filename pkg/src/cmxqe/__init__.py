"""Quality estimation for code-mixed (Hinglish) generation.

Pipeline: parse a paired dataset, embed each synthetic and human sentence
against its English and Hindi context, fuse the four vectors per record into
one feature row, and train small dense classifiers for two 10-class tasks —
average human rating and annotator disagreement.
"""

from .dataset import (
    DatasetSplit,
    LabeledRecord,
    SentencePairRecord,
    SyntheticRecord,
    ValidationReport,
    compute_average_rating,
    compute_disagreement,
    label_records,
    parse_hinge,
    split_dataset,
    validate_dataset,
)
from .embeddings import (
    DIM,
    EmbeddingKey,
    EmbeddingStore,
    deterministic_embed,
    read_clsv,
    write_clsv,
)
from .fusion import (
    FUSED_DIM,
    FeatureMatrix,
    build_feature_matrix,
    load_feature_matrix,
    save_feature_matrix,
)
from .metrics import MetricReport, cohens_kappa, confusion_matrix, evaluate, f1_score, mse
from .nn import (
    ARCHITECTURE,
    TrainConfig,
    init_model,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from .tasks import NUM_CLASSES, Task

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURE",
    "DIM",
    "FUSED_DIM",
    "NUM_CLASSES",
    "DatasetSplit",
    "EmbeddingKey",
    "EmbeddingStore",
    "FeatureMatrix",
    "LabeledRecord",
    "MetricReport",
    "SentencePairRecord",
    "SyntheticRecord",
    "Task",
    "TrainConfig",
    "ValidationReport",
    "build_feature_matrix",
    "cohens_kappa",
    "compute_average_rating",
    "compute_disagreement",
    "confusion_matrix",
    "deterministic_embed",
    "evaluate",
    "f1_score",
    "init_model",
    "label_records",
    "load_checkpoint",
    "load_feature_matrix",
    "mse",
    "parse_hinge",
    "predict",
    "read_clsv",
    "save_checkpoint",
    "save_feature_matrix",
    "split_dataset",
    "train",
    "validate_dataset",
    "write_clsv",
    "__version__",
]
