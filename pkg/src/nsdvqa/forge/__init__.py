from .categories import BINARY_CATEGORIES, CATEGORIES, CATEGORY_NAMES, CategorySpec
from .dataset import DatasetError, QAPair, canonical_order, read_dataset, write_dataset
from .filters import (
    CategoryHistogram,
    balance_skew,
    dataset_stats,
    enforce_support,
    filter_dataset,
)
from .generate import (
    answer_for,
    build_vocabulary,
    generate_negatives,
    generate_qa,
    negative_target_count,
)
from .labels import LabelMap, LabelMerger, apply_label_map, merge_labels, read_embeddings
from .pipeline import ForgeParams, ForgeResult, forge, stream_seed
from .templates import TemplateError, TemplateSet
from .verify import DiscardLog, verify_counts

__all__ = [
    "BINARY_CATEGORIES",
    "CATEGORIES",
    "CATEGORY_NAMES",
    "CategoryHistogram",
    "CategorySpec",
    "DatasetError",
    "DiscardLog",
    "ForgeParams",
    "ForgeResult",
    "LabelMap",
    "LabelMerger",
    "QAPair",
    "TemplateError",
    "TemplateSet",
    "answer_for",
    "apply_label_map",
    "balance_skew",
    "build_vocabulary",
    "canonical_order",
    "dataset_stats",
    "enforce_support",
    "filter_dataset",
    "forge",
    "generate_negatives",
    "generate_qa",
    "merge_labels",
    "negative_target_count",
    "read_dataset",
    "read_embeddings",
    "stream_seed",
    "verify_counts",
    "write_dataset",
]
