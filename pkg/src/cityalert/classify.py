"""From-scratch multinomial Naive Bayes and linear max-margin classifiers.

The production setup runs the max-margin model as the binary stage-1
emergency filter and Naive Bayes as the stage-2 category classifier; both
families can be trained for either stage for comparison runs.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, MissingClass, SingleClass, VocabularyMismatch
from .features import FeatureVector, Vocabulary, load_vocabulary

EMERGENCY = "emergency"
NON_EMERGENCY = "non-emergency"

_MODEL_MAGIC = "cityalert-model"
_MODEL_VERSION = 1


@dataclass(frozen=True)
class LabeledExample:
    """A labeled post: token sequence, binary stage-1 label and, for
    emergencies, the stage-2 category."""

    tokens: tuple[str, ...]
    stage1_label: str
    stage2_category: str | None = None

    def __post_init__(self):
        if (self.stage1_label == EMERGENCY) != (self.stage2_category is not None):
            raise ValueError(
                "stage2_category must be present exactly for emergency examples"
            )


@dataclass(frozen=True)
class Prediction:
    label: str
    scores: dict[str, float]


def _argmax_label(classes: Sequence[str], scores: dict[str, float]) -> str:
    best = classes[0]
    for cls in classes[1:]:
        if scores[cls] > scores[best]:
            best = cls
    return best


def log_scores_to_posterior(scores: dict[str, float]) -> dict[str, float]:
    """Normalize log scores into a probability distribution (softmax)."""
    peak = max(scores.values())
    raw = {cls: math.exp(s - peak) for cls, s in scores.items()}
    total = sum(raw.values())
    return {cls: v / total for cls, v in raw.items()}


@dataclass(frozen=True)
class NaiveBayesModel:
    classes: tuple[str, ...]
    log_prior: dict[str, float]
    log_likelihood: np.ndarray  # shape (len(classes), vocab_size)
    alpha: float
    vocab_size: int
    vocab_hash: str | None = None


def train_nb(
    examples: Sequence[tuple[FeatureVector, str]],
    alpha: float = 1.0,
    classes: Sequence[str] | None = None,
    vocab: Vocabulary | None = None,
) -> NaiveBayesModel:
    """Multinomial Naive Bayes with add-alpha smoothing.

    likelihood(f|c) = (count(f, c) + alpha) / (total_count(c) + alpha * V),
    priors are class document fractions.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not examples:
        raise ValueError("no training examples")
    vocab_size = examples[0][0].dimension
    if any(vec.dimension != vocab_size for vec, _ in examples):
        raise DimensionMismatch("training vectors disagree on dimension")
    if classes is None:
        seen: dict[str, None] = {}
        for _, label in examples:
            seen.setdefault(label)
        class_list = tuple(seen)
    else:
        class_list = tuple(classes)
    doc_counts = {cls: 0 for cls in class_list}
    feature_counts = np.zeros((len(class_list), vocab_size), dtype=np.float64)
    class_index = {cls: i for i, cls in enumerate(class_list)}
    for vec, label in examples:
        if label not in class_index:
            raise ValueError(f"label {label!r} not among declared classes")
        doc_counts[label] += 1
        row = class_index[label]
        for idx, value in vec:
            feature_counts[row, idx] += value
    missing = [cls for cls, count in doc_counts.items() if count == 0]
    if missing:
        raise MissingClass(f"no examples for classes: {missing}")
    total_docs = len(examples)
    log_prior = {
        cls: math.log(doc_counts[cls] / total_docs) for cls in class_list
    }
    totals = feature_counts.sum(axis=1, keepdims=True)
    log_likelihood = np.log(
        (feature_counts + alpha) / (totals + alpha * vocab_size)
    )
    return NaiveBayesModel(
        classes=class_list,
        log_prior=log_prior,
        log_likelihood=log_likelihood,
        alpha=alpha,
        vocab_size=vocab_size,
        vocab_hash=vocab.content_hash() if vocab is not None else None,
    )


def predict_nb(model: NaiveBayesModel, vec: FeatureVector) -> Prediction:
    """Log-posterior scores per class; the argmax wins, ties fall to class order."""
    if vec.dimension != model.vocab_size:
        raise DimensionMismatch(
            f"vector dimension {vec.dimension} != model vocab {model.vocab_size}"
        )
    scores: dict[str, float] = {}
    for row, cls in enumerate(model.classes):
        score = model.log_prior[cls]
        for idx, value in vec:
            score += value * model.log_likelihood[row, idx]
        scores[cls] = score
    return Prediction(label=_argmax_label(model.classes, scores), scores=scores)


@dataclass(frozen=True)
class MaxMarginModel:
    """Linear hinge-loss classifier trained by deterministic subgradient descent."""

    weights: np.ndarray
    bias: float
    positive_label: str
    negative_label: str
    reg_strength: float
    epochs: int
    seed: int
    vocab_hash: str | None = None

    @property
    def classes(self) -> tuple[str, str]:
        # positive first so a score tie resolves to the positive label
        return (self.positive_label, self.negative_label)

    @property
    def vocab_size(self) -> int:
        return int(self.weights.shape[0])


def train_margin(
    examples: Sequence[tuple[FeatureVector, str]],
    reg: float = 0.01,
    epochs: int = 30,
    seed: int = 0,
    positive_label: str = EMERGENCY,
    vocab: Vocabulary | None = None,
) -> MaxMarginModel:
    """L2-regularized hinge loss minimized by epoch-ordered subgradient steps
    with learning rate 1/(reg * t). Identical inputs and seed give a
    bit-identical model.

    The bias rides along as an implicit always-one feature, so it shrinks
    with the same regularization factor as the weights.
    """
    if reg <= 0:
        raise ValueError("reg must be positive")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    labels = {label for _, label in examples}
    if len(labels) < 2:
        raise SingleClass(f"need both labels, got {sorted(labels)}")
    if positive_label not in labels:
        raise ValueError(f"positive label {positive_label!r} absent from examples")
    negative_label = next(l for _, l in examples if l != positive_label)
    vocab_size = examples[0][0].dimension
    if any(vec.dimension != vocab_size for vec, _ in examples):
        raise DimensionMismatch("training vectors disagree on dimension")

    prepared = [
        (list(vec.pairs), 1.0 if label == positive_label else -1.0)
        for vec, label in examples
    ]
    v = [0.0] * vocab_size
    vb = 0.0
    scale = 1.0
    rng = random.Random(seed)
    order = list(range(len(prepared)))
    t = 0
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            t += 1
            pairs, y = prepared[i]
            dot = vb
            for idx, value in pairs:
                dot += v[idx] * value
            margin = y * scale * dot
            scale *= 1.0 - 1.0 / t
            if scale == 0.0:  # first step zeroes the weight vector exactly
                scale = 1.0
                v = [0.0] * vocab_size
                vb = 0.0
            if margin < 1.0:
                coef = y / (reg * t * scale)
                for idx, value in pairs:
                    v[idx] += coef * value
                vb += coef
    weights = np.array(v, dtype=np.float64) * scale
    return MaxMarginModel(
        weights=weights,
        bias=vb * scale,
        positive_label=positive_label,
        negative_label=negative_label,
        reg_strength=reg,
        epochs=epochs,
        seed=seed,
        vocab_hash=vocab.content_hash() if vocab is not None else None,
    )


def margin_score(model: MaxMarginModel, vec: FeatureVector) -> float:
    if vec.dimension != model.vocab_size:
        raise DimensionMismatch(
            f"vector dimension {vec.dimension} != model vocab {model.vocab_size}"
        )
    score = model.bias
    for idx, value in vec:
        score += float(model.weights[idx]) * value
    return score


def predict_margin(model: MaxMarginModel, vec: FeatureVector) -> Prediction:
    """Signed margin w.x + b; a score of exactly zero counts as positive."""
    score = margin_score(model, vec)
    label = model.positive_label if score >= 0.0 else model.negative_label
    return Prediction(
        label=label,
        scores={model.positive_label: score, model.negative_label: -score},
    )


@dataclass(frozen=True)
class MulticlassMarginModel:
    """One-vs-rest stack of binary max-margin models, argmax of margins."""

    classes: tuple[str, ...]
    models: dict[str, MaxMarginModel]
    vocab_hash: str | None = None

    @property
    def vocab_size(self) -> int:
        return next(iter(self.models.values())).vocab_size


_REST = "__rest__"


def train_margin_multiclass(
    examples: Sequence[tuple[FeatureVector, str]],
    reg: float = 0.01,
    epochs: int = 30,
    seed: int = 0,
    classes: Sequence[str] | None = None,
    vocab: Vocabulary | None = None,
) -> MulticlassMarginModel:
    if classes is None:
        seen: dict[str, None] = {}
        for _, label in examples:
            seen.setdefault(label)
        class_list = tuple(seen)
    else:
        class_list = tuple(classes)
    missing = [c for c in class_list if all(l != c for _, l in examples)]
    if missing:
        raise MissingClass(f"no examples for classes: {missing}")
    models: dict[str, MaxMarginModel] = {}
    for cls in class_list:
        relabeled = [
            (vec, cls if label == cls else _REST) for vec, label in examples
        ]
        models[cls] = train_margin(
            relabeled,
            reg=reg,
            epochs=epochs,
            seed=seed,
            positive_label=cls,
            vocab=vocab,
        )
    return MulticlassMarginModel(
        classes=class_list,
        models=models,
        vocab_hash=vocab.content_hash() if vocab is not None else None,
    )


def predict_margin_multiclass(
    model: MulticlassMarginModel, vec: FeatureVector
) -> Prediction:
    scores = {cls: margin_score(model.models[cls], vec) for cls in model.classes}
    return Prediction(label=_argmax_label(model.classes, scores), scores=scores)


def predict(model, vec: FeatureVector) -> Prediction:
    """Family-dispatching predict."""
    if isinstance(model, NaiveBayesModel):
        return predict_nb(model, vec)
    if isinstance(model, MaxMarginModel):
        return predict_margin(model, vec)
    if isinstance(model, MulticlassMarginModel):
        return predict_margin_multiclass(model, vec)
    raise TypeError(f"unknown model type {type(model)!r}")


@dataclass(frozen=True)
class ModelBundle:
    """A trained model paired with the vocabulary that produced its features.

    Pairing is refused when the model embeds a different vocabulary hash.
    """

    model: NaiveBayesModel | MaxMarginModel | MulticlassMarginModel
    vocab: Vocabulary

    def __post_init__(self):
        if self.model.vocab_hash is not None:
            actual = self.vocab.content_hash()
            if self.model.vocab_hash != actual:
                raise VocabularyMismatch(
                    f"model expects vocab {self.model.vocab_hash[:12]}..., "
                    f"got {actual[:12]}..."
                )

    def predict_tokens(self, tokens: Sequence[str]) -> Prediction:
        from .features import vectorize

        return predict(self.model, vectorize(tokens, self.vocab))


@dataclass(frozen=True)
class TwoStageResult:
    category: str
    stage1_scores: dict[str, float]
    stage2_scores: dict[str, float]


def two_stage_classify(
    post, stage1: ModelBundle, stage2: ModelBundle
) -> TwoStageResult | None:
    """Stage 1 filters non-emergencies; survivors get a stage-2 category.

    `post` is anything with a `tokens` attribute (a SanitizedPost) or a plain
    token sequence. Returns None when stage 1 says non-emergency.
    """
    tokens = getattr(post, "tokens", post)
    first = stage1.predict_tokens(tokens)
    if first.label != EMERGENCY:
        return None
    second = stage2.predict_tokens(tokens)
    return TwoStageResult(
        category=second.label,
        stage1_scores=first.scores,
        stage2_scores=second.scores,
    )


def save_model(model, path: str | Path) -> None:
    """Single UTF-8 text file: header lines then parameter lines."""
    lines: list[str] = [f"{_MODEL_MAGIC} {_MODEL_VERSION}"]

    def header(family: str, classes: Sequence[str], vocab_size: int, vocab_hash):
        lines.append(f"family {family}")
        lines.append(f"classes {json.dumps(list(classes))}")
        lines.append(f"vocab_size {vocab_size}")
        lines.append(f"vocab_hash {vocab_hash or '-'}")

    def margin_params(m: MaxMarginModel, prefix: str = "") -> None:
        lines.append(f"{prefix}bias {m.bias!r}")
        for idx in np.nonzero(m.weights)[0]:
            lines.append(f"{prefix}w {idx} {float(m.weights[idx])!r}")

    if isinstance(model, NaiveBayesModel):
        header("nb", model.classes, model.vocab_size, model.vocab_hash)
        lines.append(f"alpha {model.alpha!r}")
        for row, cls in enumerate(model.classes):
            lines.append(f"prior {row} {model.log_prior[cls]!r}")
            for idx in range(model.vocab_size):
                lines.append(f"lik {row} {idx} {float(model.log_likelihood[row, idx])!r}")
    elif isinstance(model, MaxMarginModel):
        header("margin", model.classes, model.vocab_size, model.vocab_hash)
        lines.append(
            f"hyper {model.reg_strength!r} {model.epochs} {model.seed}"
        )
        margin_params(model)
    elif isinstance(model, MulticlassMarginModel):
        header("margin-ovr", model.classes, model.vocab_size, model.vocab_hash)
        first = model.models[model.classes[0]]
        lines.append(f"hyper {first.reg_strength!r} {first.epochs} {first.seed}")
        for row, cls in enumerate(model.classes):
            margin_params(model.models[cls], prefix=f"sub {row} ")
    else:
        raise TypeError(f"cannot serialize {type(model)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith(_MODEL_MAGIC):
        raise ValueError(f"{path}: not a model file")
    fields: dict[str, str] = {}
    body: list[str] = []
    for line in text[1:]:
        key, _, rest = line.partition(" ")
        if key in {"family", "classes", "vocab_size", "vocab_hash", "alpha", "hyper"}:
            fields[key] = rest
        else:
            body.append(line)
    family = fields["family"]
    classes = tuple(json.loads(fields["classes"]))
    vocab_size = int(fields["vocab_size"])
    vocab_hash = None if fields["vocab_hash"] == "-" else fields["vocab_hash"]

    if family == "nb":
        log_prior: dict[str, float] = {}
        log_likelihood = np.zeros((len(classes), vocab_size), dtype=np.float64)
        for line in body:
            parts = line.split()
            if parts[0] == "prior":
                log_prior[classes[int(parts[1])]] = float(parts[2])
            elif parts[0] == "lik":
                log_likelihood[int(parts[1]), int(parts[2])] = float(parts[3])
        return NaiveBayesModel(
            classes=classes,
            log_prior=log_prior,
            log_likelihood=log_likelihood,
            alpha=float(fields["alpha"]),
            vocab_size=vocab_size,
            vocab_hash=vocab_hash,
        )

    reg_text, epochs_text, seed_text = fields["hyper"].split()
    reg, epochs, seed = float(reg_text), int(epochs_text), int(seed_text)

    def empty_margin(positive: str, negative: str) -> dict:
        return {
            "weights": np.zeros(vocab_size, dtype=np.float64),
            "bias": 0.0,
            "positive_label": positive,
            "negative_label": negative,
        }

    if family == "margin":
        state = empty_margin(classes[0], classes[1])
        for line in body:
            parts = line.split()
            if parts[0] == "bias":
                state["bias"] = float(parts[1])
            elif parts[0] == "w":
                state["weights"][int(parts[1])] = float(parts[2])
        return MaxMarginModel(
            reg_strength=reg, epochs=epochs, seed=seed, vocab_hash=vocab_hash, **state
        )

    if family == "margin-ovr":
        states = {cls: empty_margin(cls, _REST) for cls in classes}
        for line in body:
            parts = line.split()
            if parts[0] != "sub":
                continue
            cls = classes[int(parts[1])]
            if parts[2] == "bias":
                states[cls]["bias"] = float(parts[3])
            elif parts[2] == "w":
                states[cls]["weights"][int(parts[3])] = float(parts[4])
        models = {
            cls: MaxMarginModel(
                reg_strength=reg,
                epochs=epochs,
                seed=seed,
                vocab_hash=vocab_hash,
                **state,
            )
            for cls, state in states.items()
        }
        return MulticlassMarginModel(
            classes=classes, models=models, vocab_hash=vocab_hash
        )

    raise ValueError(f"{path}: unknown model family {family!r}")
