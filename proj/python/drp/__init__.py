"""Python bindings for the drp review-personalization toolkit."""

from ._drp import (
    DrpError,
    bleu,
    canonical_dimension_name,
    evaluate,
    ingest,
    kmeans,
    meteor,
    pearson,
    request_body,
    request_hash,
    rouge_1,
    rouge_l,
    run,
    split_reasoning,
    tokenize,
    uvq,
)

__all__ = [
    "DrpError",
    "bleu",
    "canonical_dimension_name",
    "evaluate",
    "ingest",
    "kmeans",
    "meteor",
    "pearson",
    "request_body",
    "request_hash",
    "rouge_1",
    "rouge_l",
    "run",
    "split_reasoning",
    "tokenize",
    "uvq",
]
