"""Sparse n-gram feature extraction with train-only vocabularies.

Stage 1 uses unigrams, stage 2 word trigrams. Out-of-vocabulary n-grams are
ignored at vectorization time, which is what keeps held-out data from leaking
into any fitted vocabulary.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyVocabulary


@dataclass(frozen=True)
class Vocabulary:
    """Dense 0-based feature index fitted on training documents only.

    `fallback_short_docs` makes documents shorter than `n` contribute a single
    feature, the space-join of their tokens, so short posts are not all-zero
    under trigram features.
    """

    index: dict[str, int]
    n: int
    fallback_short_docs: bool = True

    @property
    def size(self) -> int:
        return len(self.index)

    def __contains__(self, feature: str) -> bool:
        return feature in self.index

    @property
    def features(self) -> list[str]:
        ordered = [""] * len(self.index)
        for feature, idx in self.index.items():
            ordered[idx] = feature
        return ordered

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"n={self.n};fallback={int(self.fallback_short_docs)}\n".encode())
        for idx, feature in enumerate(self.features):
            digest.update(f"{idx}\t{feature}\n".encode())
        return digest.hexdigest()


@dataclass(frozen=True)
class FeatureVector:
    """Sorted sparse (index, count) pairs plus the producing vocabulary size."""

    pairs: tuple[tuple[int, int], ...]
    dimension: int

    def __post_init__(self):
        last = -1
        for idx, value in self.pairs:
            if idx <= last or idx >= self.dimension:
                raise ValueError(f"bad sparse index {idx} (dimension {self.dimension})")
            if value <= 0:
                raise ValueError(f"non-positive count at index {idx}")
            last = idx

    def __iter__(self):
        return iter(self.pairs)

    @property
    def nnz(self) -> int:
        return len(self.pairs)


def _ngrams(doc: Sequence[str], n: int, fallback: bool) -> list[str]:
    if len(doc) < n:
        if fallback and doc:
            return [" ".join(doc)]
        return []
    return [" ".join(doc[i : i + n]) for i in range(len(doc) - n + 1)]


def fit_vocabulary(
    docs: Iterable[Sequence[str]], n: int, fallback_short_docs: bool = True
) -> Vocabulary:
    """Index every contiguous n-gram of `docs` in first-occurrence order."""
    if n not in (1, 3):
        raise ValueError(f"n-gram order must be 1 or 3, got {n}")
    index: dict[str, int] = {}
    empty = True
    for doc in docs:
        empty = False
        for gram in _ngrams(doc, n, fallback_short_docs):
            if gram not in index:
                index[gram] = len(index)
    if empty:
        raise ValueError("no documents given")
    if not index:
        raise EmptyVocabulary(f"no document yields any {n}-gram")
    return Vocabulary(index=index, n=n, fallback_short_docs=fallback_short_docs)


def vectorize(doc: Sequence[str], vocab: Vocabulary) -> FeatureVector:
    """Count in-vocabulary n-grams of `doc`; unknown n-grams are ignored."""
    counts = Counter(
        vocab.index[gram]
        for gram in _ngrams(doc, vocab.n, vocab.fallback_short_docs)
        if gram in vocab.index
    )
    pairs = tuple(sorted(counts.items()))
    return FeatureVector(pairs=pairs, dimension=vocab.size)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write `index<TAB>feature` lines, one per feature, in index order."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx, feature in enumerate(vocab.features):
            fh.write(f"{idx}\t{feature}\n")


def load_vocabulary(
    path: str | Path, n: int, fallback_short_docs: bool = True
) -> Vocabulary:
    """Read an `index<TAB>feature` file; the caller supplies the n-gram order
    and fallback flag it was fitted with (the line format carries neither)."""
    index: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            idx_text, feature = line.split("\t", 1)
            idx = int(idx_text)
            if idx != lineno:
                raise ValueError(f"{path}:{lineno + 1}: non-contiguous index {idx}")
            index[feature] = idx
    return Vocabulary(index=index, n=n, fallback_short_docs=fallback_short_docs)
