"""Sanitizes raw post text in four fixed stages: cleaning, run compression,
chat-language normalization and spell correction.

All operations here are pure functions over immutable `Dictionary` /
`NormalizationMap` values; they are safe to call concurrently.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EmptyAfterCleaning

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
# Comma is the only punctuation kept (as a standalone token); these are dropped.
_DROPPED_PUNCT_RE = re.compile(r"[!?.\"'()*&%$;:/\\]")
_WS_RE = re.compile(r"\s+")

# Candidate enumeration is exponential in the number of doubled windows; real
# words never get near this, so refuse to enumerate past it.
_MAX_WINDOWS = 12


class Dictionary:
    """Known-word list with per-word counts.

    Counts rank competing correction candidates (compression winners,
    normalization targets, spelling suggestions). The bundled seed file uses
    hand-binned counts tuned for correction ranking rather than raw corpus
    frequencies; any `word<TAB>count` file can be swapped in.
    """

    def __init__(self, frequencies: Mapping[str, int]):
        freq: dict[str, int] = {}
        for word, count in frequencies.items():
            if word != word.lower():
                raise ValueError(f"dictionary entries must be lowercase: {word!r}")
            if count < 0:
                raise ValueError(f"negative count for {word!r}")
            freq[word] = int(count)
        self._freq = freq
        self._total = sum(freq.values())
        self._spell_cache: dict[str, str] = {}

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._freq

    def __len__(self) -> int:
        return len(self._freq)

    @property
    def entries(self) -> frozenset[str]:
        return frozenset(self._freq)

    def count(self, word: str) -> int:
        return self._freq.get(word.lower(), 0)

    def smoothed_frequency(self, word: str) -> float:
        """Add-one smoothed relative frequency; positive even for unknown words."""
        return (self.count(word) + 1) / (self._total + len(self._freq) + 1)


class NormalizationMap:
    """Weighted phrase table mapping un-normalized chat phrases to plain English.

    Keys and targets are lowercase, space-separated phrases. A key may carry
    several weighted targets; `normalize_tokens` picks the best one.
    """

    def __init__(self, pairs: Mapping[str, Sequence[tuple[str, int]]]):
        table: dict[str, tuple[tuple[str, int], ...]] = {}
        for key, candidates in pairs.items():
            if key != key.lower():
                raise ValueError(f"normalization keys must be lowercase: {key!r}")
            cands = tuple((t, int(c)) for t, c in candidates)
            if not cands:
                raise ValueError(f"no candidates for key {key!r}")
            if any(c <= 0 for _, c in cands):
                raise ValueError(f"non-positive count under key {key!r}")
            if all(t == key for t, _ in cands):
                raise ValueError(f"key {key!r} maps only to itself")
            table[key] = cands
        self._table = table
        self._max_key_tokens = max((len(k.split()) for k in table), default=0)

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, key: str) -> bool:
        return key in self._table

    @property
    def max_key_tokens(self) -> int:
        return self._max_key_tokens

    def candidates(self, key: str) -> tuple[tuple[str, int], ...]:
        return self._table.get(key, ())


@dataclass(frozen=True)
class RawPost:
    """An ingested post, the unit entering the pipeline."""

    id: str
    text: str
    timestamp: datetime
    author: str = ""
    coords: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("post text is empty")
        if self.coords is not None:
            lat, lon = self.coords
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise ValueError(f"coordinates out of range: {self.coords}")


@dataclass(frozen=True)
class StageRecord:
    stage: str
    before: str
    after: str


@dataclass(frozen=True)
class SanitizedPost:
    """Token sequence after the four-stage chain, with per-stage provenance."""

    source_id: str
    tokens: tuple[str, ...]
    stage_log: tuple[StageRecord, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def clean(text: str) -> str:
    """Strip URLs, @-mentions, #-tags and noise punctuation from raw text.

    Commas survive as standalone space-delimited tokens; letter case is
    preserved. Idempotent.
    """
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _HASHTAG_RE.sub(" ", text)
    # stray marker symbols with no attached word
    text = text.replace("@", " ").replace("#", " ")
    text = _DROPPED_PUNCT_RE.sub(" ", text)
    text = text.replace(",", " , ")
    return _WS_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    """Whitespace tokens of the cleaned text, lowercased for all later stages."""
    return clean(text).lower().split()


def _squeeze_runs(token: str) -> tuple[list[str], list[int]]:
    """Collapse character runs of length >= 3 down to 2.

    Returns the squeezed token as a segment list plus the indices of segments
    that are doubled windows (length exactly 2 after collapsing).
    """
    segments: list[str] = []
    windows: list[int] = []
    for char, group in itertools.groupby(token):
        run = len(list(group))
        if run >= 2:
            windows.append(len(segments))
            segments.append(char * 2)
        else:
            segments.append(char)
    return segments, windows


def compress_token(token: str, dictionary: Dictionary) -> str:
    """Undo expressive character stretching ("fiiiirreeeeee" -> "fire").

    In-dictionary tokens are returned unchanged. Otherwise runs of three or
    more identical characters are collapsed to two, and each remaining doubled
    window is independently kept at two characters or reduced to one; the
    best dictionary word among the 2^n combinations wins (highest count, then
    fewest letters, then lexicographic). With no dictionary hit, the collapsed
    all-windows-at-two form is returned.
    """
    if token in dictionary:
        return token
    segments, windows = _squeeze_runs(token)
    squeezed = "".join(segments)
    if not windows or len(windows) > _MAX_WINDOWS:
        return squeezed
    best: str | None = None
    best_key: tuple[int, int, str] | None = None
    for choice in itertools.product((2, 1), repeat=len(windows)):
        parts = list(segments)
        for idx, keep in zip(windows, choice):
            parts[idx] = parts[idx][:keep]
        candidate = "".join(parts)
        if candidate not in dictionary:
            continue
        key = (-dictionary.count(candidate), len(candidate), candidate)
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    return best if best is not None else squeezed


def _target_score(target: str, count: int, dictionary: Dictionary) -> float:
    score = float(count)
    for word in target.split():
        score *= dictionary.smoothed_frequency(word)
    return score


def normalize_tokens(
    tokens: Sequence[str], mapping: NormalizationMap, dictionary: Dictionary
) -> list[str]:
    """Rewrite ad-hoc abbreviations via longest-match-first greedy phrase lookup.

    A match is only taken when every matched source token is out of
    dictionary, so recognized English is never rewritten. Among a key's
    targets the one maximizing count x smoothed unigram frequency of its
    words wins.
    """
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        replacement: str | None = None
        span = 0
        longest = min(mapping.max_key_tokens, n - i)
        for width in range(longest, 0, -1):
            window = tokens[i : i + width]
            if any(tok in dictionary for tok in window):
                continue
            candidates = mapping.candidates(" ".join(window))
            if not candidates:
                continue
            replacement = max(
                candidates,
                key=lambda tc: (_target_score(tc[0], tc[1], dictionary), tc[1], tc[0]),
            )[0]
            span = width
            break
        if replacement is None:
            out.append(tokens[i])
            i += 1
        else:
            out.extend(replacement.split())
            i += span
    return out


def damerau_levenshtein(a: str, b: str) -> int:
    """Edit distance counting insert, delete, substitute and adjacent swap
    (optimal string alignment variant)."""
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return la or lb
    prev2: list[int] | None = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i]
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            value = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                value = min(value, prev2[j - 2] + cost)  # type: ignore[index]
            cur.append(value)
        prev2, prev = prev, cur
    return prev[lb]


def _best_correction(token: str, dictionary: Dictionary) -> str:
    cached = dictionary._spell_cache.get(token)
    if cached is not None:
        return cached
    best: str | None = None
    best_key: tuple[int, int, str] | None = None
    for word in dictionary.entries:
        if abs(len(word) - len(token)) > 2:
            continue
        distance = damerau_levenshtein(token, word)
        if distance > 2:
            continue
        key = (distance, -dictionary.count(word), word)
        if best_key is None or key < best_key:
            best, best_key = word, key
    result = best if best is not None else token
    dictionary._spell_cache[token] = result
    return result


def spell_correct(tokens: Sequence[str], dictionary: Dictionary) -> list[str]:
    """Replace out-of-dictionary all-letter tokens by their closest dictionary
    word within edit distance 2.

    Distance-1 candidates strictly beat distance-2 ones; ties fall to the
    higher count, then the lexicographically smaller word. Tokens containing
    digits, punctuation or non-ASCII letters pass through unchanged.
    """
    out: list[str] = []
    for token in tokens:
        if token in dictionary or not token.isascii() or not token.isalpha():
            out.append(token)
        else:
            out.append(_best_correction(token, dictionary))
    return out


def sanitize(
    post: RawPost, dictionary: Dictionary, mapping: NormalizationMap
) -> SanitizedPost:
    """Run the four-stage chain over a post and record per-stage provenance.

    Raises EmptyAfterCleaning when no tokens survive the cleaning stage; the
    pipeline drops such posts.
    """
    cleaned = clean(post.text)
    tokens = cleaned.lower().split()
    if not tokens:
        raise EmptyAfterCleaning(f"post {post.id} has no content after cleaning")
    compressed = [compress_token(t, dictionary) for t in tokens]
    normalized = normalize_tokens(compressed, mapping, dictionary)
    spelled = spell_correct(normalized, dictionary)
    log = (
        StageRecord("cleaning", post.text, cleaned),
        StageRecord("compression", " ".join(tokens), " ".join(compressed)),
        StageRecord("normalization", " ".join(compressed), " ".join(normalized)),
        StageRecord("spelling", " ".join(normalized), " ".join(spelled)),
    )
    return SanitizedPost(source_id=post.id, tokens=tuple(spelled), stage_log=log)


def load_dictionary(path: str | Path) -> Dictionary:
    """Read a `word<TAB>count` file (UTF-8, one entry per line)."""
    frequencies: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                word, count = line.split("\t")
                frequencies[word] = int(count)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad dictionary line {line!r}") from exc
    return Dictionary(frequencies)


def load_normalization_map(path: str | Path) -> NormalizationMap:
    """Read a `source<TAB>target<TAB>count` phrase-table file."""
    pairs: dict[str, list[tuple[str, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                source, target, count = line.split("\t")
                pairs.setdefault(source, []).append((target, int(count)))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad mapping line {line!r}") from exc
    return NormalizationMap(pairs)
