"""Python bindings for the medsum C++ core."""

import json as _json

from ._medsum import (
    MedsumError,
    ParseError,
    RecordError,
    StorageError,
    Store,
    ValidationError,
    assign_bucket,
    bert_score,
    bleu,
    embed_token,
    lcs_length,
    parse_dataset,
    rouge_l,
    score_pair,
    summarize,
    tokenize,
    word_count,
)
from ._medsum import evaluate as _evaluate


def evaluate(corpus, task, seed=0, workers=1):
    """Score the extractive baseline on a JSON or JSON-lines corpus string.

    Returns the aggregate report as a dict plus its CSV rendering.
    """
    report, csv = _evaluate(corpus, task, seed, workers)
    return _json.loads(report), csv


__all__ = [
    "MedsumError",
    "ParseError",
    "RecordError",
    "StorageError",
    "Store",
    "ValidationError",
    "assign_bucket",
    "bert_score",
    "bleu",
    "embed_token",
    "evaluate",
    "lcs_length",
    "parse_dataset",
    "rouge_l",
    "score_pair",
    "summarize",
    "tokenize",
    "word_count",
]
