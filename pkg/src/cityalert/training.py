"""Production model training: max-margin stage-1 filter on unigrams, Naive
Bayes stage-2 categorizer on trigrams (trained on positive examples only)."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

from .classify import (
    EMERGENCY,
    NON_EMERGENCY,
    LabeledExample,
    ModelBundle,
    save_model,
    train_margin,
    train_nb,
)
from .evaluate import AttributeRanking, export_wordcloud, information_gain
from .features import fit_vocabulary, save_vocabulary, vectorize

logger = logging.getLogger(__name__)


def train_stage_models(
    examples: Sequence[LabeledExample],
    categories: Sequence[str],
    reg: float = 0.01,
    epochs: int = 30,
    alpha: float = 1.0,
    seed: int = 7,
) -> tuple[ModelBundle, ModelBundle, AttributeRanking]:
    """Fit both stages on the full labeled set.

    Returns the two bundles plus the unigram information-gain ranking used
    for the word-cloud export.
    """
    docs = [list(ex.tokens) for ex in examples]
    stage1_labels = [ex.stage1_label for ex in examples]
    stage1_vocab = fit_vocabulary(docs, n=1)
    stage1_vecs = [vectorize(doc, stage1_vocab) for doc in docs]
    stage1_model = train_margin(
        list(zip(stage1_vecs, stage1_labels)),
        reg=reg,
        epochs=epochs,
        seed=seed,
        positive_label=EMERGENCY,
        vocab=stage1_vocab,
    )

    positives = [ex for ex in examples if ex.stage1_label == EMERGENCY]
    if not positives:
        raise ValueError("no positive examples to train the category stage on")
    pos_docs = [list(ex.tokens) for ex in positives]
    stage2_vocab = fit_vocabulary(pos_docs, n=3)
    stage2_model = train_nb(
        [
            (vectorize(doc, stage2_vocab), ex.stage2_category)
            for doc, ex in zip(pos_docs, positives)
        ],
        alpha=alpha,
        classes=[c for c in categories if any(ex.stage2_category == c for ex in positives)],
        vocab=stage2_vocab,
    )
    ranking = information_gain(docs, stage1_labels, stage1_vocab)
    return (
        ModelBundle(model=stage1_model, vocab=stage1_vocab),
        ModelBundle(model=stage2_model, vocab=stage2_vocab),
        ranking,
    )


def save_stage_models(
    stage1: ModelBundle,
    stage2: ModelBundle,
    ranking: AttributeRanking,
    out_dir: str | Path,
    wordcloud_top_k: int = 40,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(stage1.model, out / "stage1.model")
    save_vocabulary(stage1.vocab, out / "stage1.vocab")
    save_model(stage2.model, out / "stage2.model")
    save_vocabulary(stage2.vocab, out / "stage2.vocab")
    records = export_wordcloud(ranking, min(wordcloud_top_k, len(ranking)))
    (out / "wordcloud.json").write_text(
        json.dumps({"records": records}, indent=2) + "\n", encoding="utf-8"
    )
    logger.info("saved stage models to %s", out)
