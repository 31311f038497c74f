"""Corpus annotation, masking strategies and image-necessity metrics.

Thin wrapper over the native ``_core`` module: records go in and come out as
plain dicts, and the shipped stop-word, punctuation and POS resources are used
unless other paths are given.
"""

import json
import os
from pathlib import Path

from . import _core
from ._core import ConfigError, DataError, derive_seed, pre_tokenize

__all__ = [
    "Annotator",
    "ConfigError",
    "DataError",
    "Vocab",
    "class_report",
    "data_dir",
    "derive_seed",
    "evaluate_probe",
    "masking_report",
    "plan",
    "pre_tokenize",
    "run",
]


def data_dir():
    """Directory holding stopwords.txt, punctuation.txt and pos_lexicon.tsv."""
    return Path(__file__).resolve().parent / "data"


class Vocab:
    """WordPiece vocabulary loaded from a one-token-per-line file."""

    def __init__(self, path, max_chars=100):
        self._native = _core.Vocab(os.fspath(path), max_chars)

    def __len__(self):
        return len(self._native)

    def __contains__(self, token):
        return self._native.__contains__(token)

    def wordpiece(self, word):
        return self._native.wordpiece(word)

    def tokenize(self, text):
        """Returns {"words", "pieces", "spans"} for raw text."""
        return json.loads(self._native.tokenize(text))


def _path(p):
    return "" if p is None else os.fspath(p)


class Annotator:
    """Annotates caption records ({"id", "image_id", "text"[, "words", "pos"]})."""

    def __init__(self, objects=None, attributes=None, relationships=None,
                 concreteness=None, scene_graphs=None, stopwords=None,
                 punctuation=None, pos_lexicon=None):
        d = data_dir()
        self._native = _core.Annotator(
            _path(pos_lexicon or d / "pos_lexicon.tsv"),
            _path(stopwords or d / "stopwords.txt"),
            _path(punctuation or d / "punctuation.txt"),
            _path(objects), _path(attributes), _path(relationships),
            _path(concreteness), _path(scene_graphs))

    def annotate(self, caption):
        return json.loads(self._native.annotate(json.dumps(caption)))


def plan(annotation, vocab, strategy="uniform", p=0.15, seed=0,
         policy="0.8:0.1:0.1", restricted_class=None):
    """Mask plan for one annotated sentence, as written to plans.jsonl."""
    return json.loads(_core.plan(json.dumps(annotation), vocab._native, strategy,
                                 p, seed, policy, restricted_class or ""))


def masking_report(annotations, vocab, strategy="uniform", p=0.15, seed=0,
                   policy="0.8:0.1:0.1", restricted_class=None, trials=1,
                   parallelism=1, piece_shares=False):
    return json.loads(_core.masking_report(
        json.dumps(list(annotations)), vocab._native, strategy, p, seed, policy,
        restricted_class or "", trials, parallelism, piece_shares))


def class_report(records, annotations, group=None, k=5,
                 aggregation="exp_of_mean"):
    """Per-class LossGap rows, highest mean LossGap first."""
    return json.loads(_core.class_report(
        json.dumps(list(records)), json.dumps(list(annotations)), group or "", k,
        aggregation))


def evaluate_probe(records, graphs, max_k=10, plural_fold=False, micro=False):
    """prompt -> [{"k", "precision", "recall"}, ...]."""
    return json.loads(_core.evaluate_probe(
        json.dumps(list(records)), json.dumps(list(graphs)), max_k, plural_fold,
        micro))


def run(args):
    """Runs the command-line tool in-process; returns (code, stdout, stderr)."""
    return _core.run([os.fspath(a) for a in args])
