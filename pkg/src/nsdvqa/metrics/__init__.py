from .accuracy import exact_match_accuracy, vqa_consensus_accuracy
from .evaluate import ALL_METRICS, EvalReport, PredictionRun, RunError, evaluate_run
from .meteor import meteor_lite, meteor_sentence, stem
from .ngram import bleu, cider, cider_per_image, lcs_length, rouge_l, rouge_l_sentence
from .normalize import AnswerNormalizer, TokenSequence, normalize_answer, tokenize

__all__ = [
    "ALL_METRICS",
    "AnswerNormalizer",
    "EvalReport",
    "PredictionRun",
    "RunError",
    "TokenSequence",
    "bleu",
    "cider",
    "cider_per_image",
    "evaluate_run",
    "exact_match_accuracy",
    "lcs_length",
    "meteor_lite",
    "meteor_sentence",
    "normalize_answer",
    "rouge_l",
    "rouge_l_sentence",
    "stem",
    "tokenize",
    "vqa_consensus_accuracy",
]
