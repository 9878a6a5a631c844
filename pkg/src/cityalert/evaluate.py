"""Stratified k-fold cross validation, precision/recall/F1 reporting,
information-gain attribute ranking and a deterministic synthetic corpus
generator for desk-scale verification.

The fold scorer pools the confusion matrix over all folds before computing
F1 (per-fold scores are still reported). Binary tasks report the positive
class F1, multiclass tasks macro-F1.
"""

from __future__ import annotations

import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .classify import (
    EMERGENCY,
    NON_EMERGENCY,
    LabeledExample,
    predict,
    train_margin,
    train_margin_multiclass,
    train_nb,
)
from .errors import TooFewExamples
from .features import Vocabulary, fit_vocabulary, vectorize


@dataclass(frozen=True)
class FoldPlan:
    """Example index -> fold id assignment, stratified per class."""

    k: int
    assignments: tuple[int, ...]
    seed: int
    best_effort: bool = False

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f != fold]


def make_folds(labels: Sequence[str], k: int, seed: int) -> FoldPlan:
    """Per-class round-robin assignment after a seeded shuffle.

    Every class spreads across folds with per-fold counts differing by at
    most one. Classes with fewer than k examples set the best-effort flag.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(labels) < k:
        raise TooFewExamples(f"{len(labels)} examples cannot fill {k} folds")
    by_class: dict[str, list[int]] = defaultdict(list)
    for i, label in enumerate(labels):
        by_class[label].append(i)
    rng = random.Random(seed)
    assignments = [0] * len(labels)
    best_effort = False
    for label in sorted(by_class):
        indices = by_class[label]
        if len(indices) < k:
            best_effort = True
        rng.shuffle(indices)
        for position, idx in enumerate(indices):
            assignments[idx] = position % k
    return FoldPlan(
        k=k, assignments=tuple(assignments), seed=seed, best_effort=best_effort
    )


@dataclass
class EvalReport:
    """Pooled-confusion evaluation results with a per-fold breakdown."""

    classes: tuple[str, ...]
    confusion: dict[str, dict[str, int]]  # true label -> predicted label -> count
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    aggregate_f1: float
    positive_label: str | None
    per_fold: list[dict]
    fold_vocabularies: list[Vocabulary] = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "precision": dict(self.precision),
            "recall": dict(self.recall),
            "f1": dict(self.f1),
            "aggregate_f1": self.aggregate_f1,
            "positive_label": self.positive_label,
            "confusion": {t: dict(row) for t, row in self.confusion.items()},
            "per_fold": list(self.per_fold),
        }


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def report_from_confusion(
    confusion: Mapping[str, Mapping[str, int]],
    classes: Sequence[str],
    positive_label: str | None = None,
    per_fold: list[dict] | None = None,
) -> EvalReport:
    """Score a (possibly pooled) confusion matrix.

    `positive_label` selects binary scoring (that class's F1 is the
    aggregate); without it the aggregate is the macro average over classes.
    """
    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    for cls in classes:
        tp = confusion.get(cls, {}).get(cls, 0)
        fn = sum(confusion.get(cls, {}).values()) - tp
        fp = sum(confusion.get(other, {}).get(cls, 0) for other in classes) - tp
        precision[cls], recall[cls], f1[cls] = _prf(tp, fp, fn)
    if positive_label is not None:
        aggregate = f1[positive_label]
    else:
        aggregate = sum(f1.values()) / len(classes) if classes else 0.0
    return EvalReport(
        classes=tuple(classes),
        confusion={c: dict(confusion.get(c, {})) for c in classes},
        precision=precision,
        recall=recall,
        f1=f1,
        aggregate_f1=aggregate,
        positive_label=positive_label,
        per_fold=per_fold or [],
    )


@dataclass(frozen=True)
class CVConfig:
    """Feature and classifier settings for one cross-validation run."""

    ngram_order: int = 1
    fallback_short_docs: bool = True
    family: str = "margin"  # "margin" or "nb"
    alpha: float = 1.0
    reg: float = 0.01
    epochs: int = 30
    seed: int = 0
    positive_label: str | None = None  # set for binary positive-class F1


def _train_for(config: CVConfig, train_vecs, train_labels, vocab, classes):
    examples = list(zip(train_vecs, train_labels))
    if config.family == "nb":
        return train_nb(examples, alpha=config.alpha, classes=classes, vocab=vocab)
    if config.family == "margin":
        if len(classes) == 2 and config.positive_label is not None:
            return train_margin(
                examples,
                reg=config.reg,
                epochs=config.epochs,
                seed=config.seed,
                positive_label=config.positive_label,
                vocab=vocab,
            )
        return train_margin_multiclass(
            examples,
            reg=config.reg,
            epochs=config.epochs,
            seed=config.seed,
            classes=classes,
            vocab=vocab,
        )
    raise ValueError(f"unknown classifier family {config.family!r}")


def cross_validate(
    docs: Sequence[Sequence[str]],
    labels: Sequence[str],
    config: CVConfig,
    plan: FoldPlan,
) -> EvalReport:
    """Fit vocabulary and model on k-1 folds, score the held-out fold, pool.

    Nothing is ever fitted on held-out examples: each fold's vocabulary comes
    from its training split only (the fitted vocabularies are kept on the
    report so tests can probe for leakage).
    """
    if len(docs) != len(labels) or len(docs) != len(plan.assignments):
        raise ValueError("plan does not match dataset size")
    class_order: dict[str, None] = {}
    for label in labels:
        class_order.setdefault(label)
    classes = tuple(class_order)
    pooled: dict[str, dict[str, int]] = {c: defaultdict(int) for c in classes}
    per_fold: list[dict] = []
    fold_vocabularies: list[Vocabulary] = []
    for fold in range(plan.k):
        train_idx = plan.train_indices(fold)
        test_idx = plan.test_indices(fold)
        vocab = fit_vocabulary(
            [docs[i] for i in train_idx],
            n=config.ngram_order,
            fallback_short_docs=config.fallback_short_docs,
        )
        fold_vocabularies.append(vocab)
        train_vecs = [vectorize(docs[i], vocab) for i in train_idx]
        model = _train_for(
            config, train_vecs, [labels[i] for i in train_idx], vocab, classes
        )
        fold_confusion: dict[str, dict[str, int]] = {c: defaultdict(int) for c in classes}
        for i in test_idx:
            predicted = predict(model, vectorize(docs[i], vocab)).label
            pooled[labels[i]][predicted] += 1
            fold_confusion[labels[i]][predicted] += 1
        fold_report = report_from_confusion(
            fold_confusion, classes, positive_label=config.positive_label
        )
        per_fold.append(
            {"fold": fold, "f1": fold_report.aggregate_f1, "size": len(test_idx)}
        )
    report = report_from_confusion(
        pooled, classes, positive_label=config.positive_label, per_fold=per_fold
    )
    report.fold_vocabularies = fold_vocabularies
    return report


@dataclass(frozen=True)
class AttributeRanking:
    """Features ranked by information gain, highest first."""

    entries: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return len(self.entries)


def _entropy(counts: Iterable[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return h


def information_gain(
    docs: Sequence[Sequence[str]], labels: Sequence[str], vocab: Vocabulary
) -> AttributeRanking:
    """IG(f) = H(label) - H(label | f present/absent) on binarized occurrence."""
    n = len(docs)
    label_counts = Counter(labels)
    base_entropy = _entropy(label_counts.values())
    present: dict[str, Counter] = defaultdict(Counter)
    for doc, label in zip(docs, labels):
        grams = {
            " ".join(doc[i : i + vocab.n]) for i in range(len(doc) - vocab.n + 1)
        }
        if vocab.fallback_short_docs and len(doc) < vocab.n and doc:
            grams.add(" ".join(doc))
        for gram in grams:
            if gram in vocab.index:
                present[gram][label] += 1
    scored: list[tuple[str, float]] = []
    for feature in vocab.features:
        with_f = present.get(feature, Counter())
        n_with = sum(with_f.values())
        without_f = {lab: label_counts[lab] - with_f.get(lab, 0) for lab in label_counts}
        n_without = n - n_with
        conditional = (
            n_with / n * _entropy(with_f.values())
            + n_without / n * _entropy(without_f.values())
        )
        gain = base_entropy - conditional
        scored.append((feature, max(gain, 0.0)))
    scored.sort(key=lambda fs: (-fs[1], fs[0]))
    return AttributeRanking(entries=tuple(scored))


def export_wordcloud(ranking: AttributeRanking, top_k: int) -> list[dict]:
    """Top-k (term, weight) records with weights scaled into (0, 1] by the max."""
    if top_k > len(ranking):
        raise ValueError(f"top_k {top_k} exceeds ranking length {len(ranking)}")
    top = ranking.entries[:top_k]
    peak = max((score for _, score in top), default=0.0)
    return [
        {"term": term, "weight": (score / peak) if peak > 0 else 1.0}
        for term, score in top
    ]


DEFAULT_CATEGORY_KEYWORDS: dict[str, str] = {
    "fire": "fire",
    "accident": "accident",
    "earthquake": "earthquake",
    "cyclone": "cyclone",
    "theft": "theft",
    "drunk-driving": "drunk",
}

_PLACES = [
    "powai", "andheri", "bandra", "dadar", "colaba", "worli", "juhu",
    "kurla", "chembur", "malad", "borivali", "vashi", "parel", "mahim",
]

# per-category phrasing, the way such reports actually read; commas survive
# sanitization as standalone tokens, so they appear here too. Keeping each
# category's phrasing distinct is what makes the noise-free corpus cleanly
# separable for trigram models.
_CATEGORY_TEMPLATES = {
    "fire": [
        "huge fire near {place} station please send help now",
        "fire broke out at the {place} market , stalls burning fast",
        "huge fire , flames and thick smoke rising over {place}",
        "fire spreading on the third floor of a building in {place}",
        "big fire near {place} , fire brigade not here yet please hurry",
        "trapped by the fire at {place} , we need rescue right now",
        "smoke everywhere after a fire at the {place} godown",
    ],
    "accident": [
        "terrible accident on the highway near {place} , many injured",
        "road accident , two cars crashed at the {place} junction send an ambulance",
        "bad accident at {place} signal , a truck overturned",
        "accident near {place} flyover , victims bleeding send ambulance fast",
        "bus accident in {place} this evening , several people hurt",
        "major accident on the {place} bridge traffic completely stopped",
        "scooter accident at {place} corner , rider lying on the road",
    ],
    "earthquake": [
        "earthquake tremors felt across {place} , walls shaking badly",
        "strong earthquake just now in {place} everyone ran outside",
        "earthquake shaking our building in {place} , cracks on the walls",
        "felt a sharp earthquake jolt in {place} a minute ago",
        "earthquake again in {place} , people standing out on the streets",
        "things fell off the shelves earthquake hit {place} hard",
        "mild earthquake tremor in {place} but everyone is scared",
    ],
    "cyclone": [
        "cyclone winds battering {place} seaface , stay indoors everyone",
        "heavy cyclone rain flooding the streets of {place} , take shelter",
        "cyclone alert , trees uprooted near {place} and wires down",
        "the cyclone is getting worse in {place} waves crossing the wall",
        "cyclone winds ripped off hoardings in {place} do not go out",
        "roof blown away by the cyclone in {place} , we need shelter",
        "power gone since the cyclone started in {place} water rising",
    ],
    "theft": [
        "theft reported at a shop in {place} , the thief ran away",
        "someone stole a bike outside {place} station , reported the theft to police",
        "theft in our society in {place} , lock broken cash missing",
        "chain snatching theft near {place} market , thief on a bike",
        "my phone got stolen in the {place} bus , reporting the theft",
        "theft at the {place} atm , police are checking the camera",
        "burglars broke in at night , big theft in {place} colony",
    ],
    "drunk-driving": [
        "drunk driving crash near the {place} signal , car hit a divider",
        "a drunk driver is swerving wildly near {place} please stop him",
        "drunk driving again at {place} circle , the car almost hit a child",
        "caught a drunk driver zigzag on the {place} road , very dangerous",
        "drunk man driving into oncoming traffic near {place} , stop him",
        "drunk driving wreck by the {place} toll , glass all over",
        "that cab driver is fully drunk , driving all over the {place} lane",
    ],
}

_NEGATIVE_TEMPLATES = [
    "lovely weather in {place} today going out with friends",
    "the new cafe at {place} has amazing coffee and cake",
    "traffic is moving slowly near {place} this morning nothing unusual",
    "watching the sunset from {place} beach such a calm evening",
    "great match at the {place} ground yesterday what a finish",
    "shopping at {place} market with the whole family today",
    "having coffee with friends near {place} station this morning",
    "a new shop just opened near {place} market , looks great",
    "long walk near the {place} lake , such a lovely evening",
]

_FIGURATIVE_TEMPLATES = [
    "this new track from the band is straight {kw} what a tune",
    "that sale felt like {kw} the prices were unreal at {place}",
    "my week has been a total {kw} of deadlines and meetings",
]


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of a generated corpus; defaults mirror the bundled evaluation set."""

    n_positive: int = 1313
    n_negative: int = 1887
    keywords: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_CATEGORY_KEYWORDS)
    )
    noise_rate: float = 0.0
    seed: int = 7

    def __post_init__(self):
        if self.n_positive <= 0 or self.n_negative < 0:
            raise ValueError("corpus sizes must be positive")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise rate must be in [0, 1)")


def _stretch(word: str, rng: random.Random) -> str:
    pos = rng.randrange(len(word))
    return word[:pos] + word[pos] * rng.randint(3, 6) + word[pos + 1 :]


def _typo(word: str, rng: random.Random) -> str:
    if len(word) < 3:
        return word
    pos = rng.randrange(len(word) - 1)
    return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]


def generate_synthetic_corpus(spec: CorpusSpec) -> list[LabeledExample]:
    """Deterministic planted-keyword corpus.

    Noise-free, positives contain their category keyword verbatim and
    negatives never mention any keyword, so the labels are keyword-separable.
    With noise, keyword mentions get run-stretched or typoed and some
    negatives mention keywords figuratively.
    """
    rng = random.Random(spec.seed)
    categories = list(spec.keywords)
    examples: list[LabeledExample] = []
    for i in range(spec.n_positive):
        category = categories[i % len(categories)]
        keyword = spec.keywords[category]
        pool = _CATEGORY_TEMPLATES.get(
            category, ["urgent {kw} reported near {place} please respond"]
        )
        text = rng.choice(pool).format(kw=keyword, place=rng.choice(_PLACES))
        if spec.noise_rate and rng.random() < spec.noise_rate:
            corrupt = _stretch if rng.random() < 0.5 else _typo
            first = keyword.split()[0]
            text = text.replace(first, corrupt(first, rng), 1)
        examples.append(
            LabeledExample(
                tokens=tuple(text.split()),
                stage1_label=EMERGENCY,
                stage2_category=category,
            )
        )
    for i in range(spec.n_negative):
        if spec.noise_rate and rng.random() < spec.noise_rate:
            category = rng.choice(categories)
            text = rng.choice(_FIGURATIVE_TEMPLATES).format(
                kw=spec.keywords[category], place=rng.choice(_PLACES)
            )
        else:
            text = rng.choice(_NEGATIVE_TEMPLATES).format(place=rng.choice(_PLACES))
        examples.append(
            LabeledExample(
                tokens=tuple(text.split()),
                stage1_label=NON_EMERGENCY,
                stage2_category=None,
            )
        )
    return examples


def apply_label_noise(
    examples: Sequence[LabeledExample],
    rate: float,
    seed: int,
    categories: Sequence[str] | None = None,
) -> list[LabeledExample]:
    """Flip the stage-1 label of a seeded `rate` fraction of examples.

    Flipped positives lose their category; flipped negatives gain a random
    one so the labeled-example shape stays valid.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError("noise rate must be in [0, 1)")
    rng = random.Random(seed)
    cats = list(categories or DEFAULT_CATEGORY_KEYWORDS)
    flipped = set(
        rng.sample(range(len(examples)), k=int(round(rate * len(examples))))
    )
    noisy: list[LabeledExample] = []
    for i, ex in enumerate(examples):
        if i not in flipped:
            noisy.append(ex)
        elif ex.stage1_label == EMERGENCY:
            noisy.append(
                LabeledExample(
                    tokens=ex.tokens, stage1_label=NON_EMERGENCY, stage2_category=None
                )
            )
        else:
            noisy.append(
                LabeledExample(
                    tokens=ex.tokens,
                    stage1_label=EMERGENCY,
                    stage2_category=rng.choice(cats),
                )
            )
    return noisy


@dataclass(frozen=True)
class DatasetRow:
    """One TSV dataset line; category and coordinates may be absent."""

    text: str
    stage1_label: str
    stage2_category: str | None = None
    coords: tuple[float, float] | None = None
    timestamp: str | None = None

    def to_example(self) -> LabeledExample:
        return LabeledExample(
            tokens=tuple(self.text.split()),
            stage1_label=self.stage1_label,
            stage2_category=self.stage2_category,
        )


def save_dataset(rows: Iterable[DatasetRow], path: str | Path) -> None:
    """Write `text<TAB>stage1_label<TAB>stage2_category<TAB>lat<TAB>lon<TAB>timestamp`."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            lat = f"{row.coords[0]!r}" if row.coords else ""
            lon = f"{row.coords[1]!r}" if row.coords else ""
            fh.write(
                "\t".join(
                    [
                        row.text,
                        row.stage1_label,
                        row.stage2_category or "",
                        lat,
                        lon,
                        row.timestamp or "",
                    ]
                )
                + "\n"
            )


def load_dataset(path: str | Path) -> list[DatasetRow]:
    rows: list[DatasetRow] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            text, label, category, lat, lon, timestamp = parts
            coords = (float(lat), float(lon)) if lat and lon else None
            rows.append(
                DatasetRow(
                    text=text,
                    stage1_label=label,
                    stage2_category=category or None,
                    coords=coords,
                    timestamp=timestamp or None,
                )
            )
    return rows


def rows_from_examples(
    examples: Sequence[LabeledExample], start: datetime | None = None
) -> list[DatasetRow]:
    """Rows with deterministic minute-spaced timestamps, no coordinates."""
    base = start or datetime(2016, 4, 2, 9, 0, tzinfo=timezone.utc)
    return [
        DatasetRow(
            text=" ".join(ex.tokens),
            stage1_label=ex.stage1_label,
            stage2_category=ex.stage2_category,
            timestamp=(base + timedelta(minutes=i)).isoformat(),
        )
        for i, ex in enumerate(examples)
    ]
