from .client import (
    AnnotatorClient,
    AnnotatorConfig,
    AnnotatorError,
    CacheMiss,
    PromptTemplate,
    request_annotation,
    request_many,
)
from .parse import (
    ParseResult,
    Reject,
    SchemaError,
    ValidationIssue,
    annotation_from_dict,
    dumps_annotation,
    parse_annotations,
    validate_annotation,
    write_annotations,
)
from .schema import (
    POSITIONS,
    SEMANTIC_CATEGORIES,
    ImageAnnotation,
    Interaction,
    ObjectEntry,
    PersonEntry,
    RawAnnotation,
    SceneEntry,
    annotation_to_dict,
)

__all__ = [
    "AnnotatorClient",
    "AnnotatorConfig",
    "AnnotatorError",
    "CacheMiss",
    "ImageAnnotation",
    "Interaction",
    "ObjectEntry",
    "POSITIONS",
    "ParseResult",
    "PersonEntry",
    "PromptTemplate",
    "RawAnnotation",
    "Reject",
    "SEMANTIC_CATEGORIES",
    "SceneEntry",
    "SchemaError",
    "ValidationIssue",
    "annotation_from_dict",
    "annotation_to_dict",
    "dumps_annotation",
    "parse_annotations",
    "request_annotation",
    "request_many",
    "validate_annotation",
    "write_annotations",
]
