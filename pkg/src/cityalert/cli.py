"""Thin command-line front: train, eval, classify, replay, serve, synth."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import evaluate, training
from .classify import EMERGENCY
from .config import Config, build_context, load_config, load_contacts
from .evaluate import CorpusSpec, CVConfig, cross_validate, make_folds
from .pipeline import ReplayFileSource, replay_clock, run_stream
from .store import IncidentStore


def _load_examples(dataset: str | None, synthetic: bool, seed: int):
    if synthetic or dataset is None:
        return evaluate.generate_synthetic_corpus(CorpusSpec(seed=seed))
    return [row.to_example() for row in evaluate.load_dataset(dataset)]


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Detect, classify and map urban emergencies from short-text posts."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


@main.command()
@click.option("--dataset", type=click.Path(exists=True), help="Labeled TSV dataset.")
@click.option("--synthetic", is_flag=True, help="Train on the generated corpus.")
@click.option("--out-dir", type=click.Path(), default="cityalert-data/models")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--reg", default=0.01, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--alpha", default=1.0, show_default=True)
@click.option("--seed", default=7, show_default=True)
def train(dataset, synthetic, out_dir, config_path, reg, epochs, alpha, seed) -> None:
    """Fit the stage-1 filter and stage-2 categorizer, write model files."""
    config = load_config(config_path)
    categories, _ = load_contacts(config.contacts_path)
    examples = _load_examples(dataset, synthetic, seed)
    stage1, stage2, ranking = training.train_stage_models(
        examples, categories, reg=reg, epochs=epochs, alpha=alpha, seed=seed
    )
    training.save_stage_models(stage1, stage2, ranking, out_dir)
    click.echo(f"trained on {len(examples)} examples -> {out_dir}")


@main.command("eval")
@click.option("--dataset", type=click.Path(exists=True))
@click.option("--synthetic", is_flag=True)
@click.option("--folds", default=10, show_default=True)
@click.option("--stage", type=click.Choice(["1", "2", "both"]), default="both")
@click.option("--family", type=click.Choice(["margin", "nb", "both"]), default="both")
@click.option("--noise", default=0.0, show_default=True, help="Label noise rate.")
@click.option("--reg", default=0.01, show_default=True)
@click.option("--epochs", default=30, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--json", "json_out", type=click.Path(), help="Write full reports as JSON.")
def eval_command(
    dataset, synthetic, folds, stage, family, noise, reg, epochs, seed, json_out
) -> None:
    """Stratified k-fold cross validation; prints pooled F-scores."""
    examples = _load_examples(dataset, synthetic, seed)
    if noise:
        examples = evaluate.apply_label_noise(examples, noise, seed)
    families = ["margin", "nb"] if family == "both" else [family]
    stages = ["1", "2"] if stage == "both" else [stage]
    reports: dict[str, dict] = {}
    for st in stages:
        if st == "1":
            docs = [list(ex.tokens) for ex in examples]
            labels = [ex.stage1_label for ex in examples]
            ngram, positive = 1, EMERGENCY
        else:
            positives = [ex for ex in examples if ex.stage1_label == EMERGENCY]
            docs = [list(ex.tokens) for ex in positives]
            labels = [ex.stage2_category for ex in positives]
            ngram, positive = 3, None
        plan = make_folds(labels, k=folds, seed=seed)
        for fam in families:
            cv = CVConfig(
                ngram_order=ngram,
                family=fam,
                reg=reg,
                epochs=epochs,
                seed=seed,
                positive_label=positive,
            )
            report = cross_validate(docs, labels, cv, plan)
            reports[f"stage{st}/{fam}"] = report.to_json_dict()
            click.echo(
                f"stage {st} {fam:>6}: pooled F1 = {report.aggregate_f1:.4f} "
                f"({folds}-fold, n={len(labels)})"
            )
    if json_out:
        Path(json_out).write_text(json.dumps(reports, indent=2), encoding="utf-8")
        click.echo(f"wrote {json_out}")


@main.command()
@click.option("--text", required=True, help="Post text to classify.")
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
def classify(text, models_dir, config_path) -> None:
    """Run one post through the full pipeline and print the outcome as JSON."""
    from datetime import datetime, timezone

    from .pipeline import RawPost, classify_and_locate

    config = load_config(config_path)
    config.models_dir = Path(models_dir)
    ctx = build_context(config)
    post = RawPost(id="cli", text=text, timestamp=datetime.now(timezone.utc))
    incident, reason = classify_and_locate(post, ctx)
    if incident is None:
        click.echo(json.dumps({"incident": None, "drop_reason": reason}, indent=2))
    else:
        click.echo(json.dumps({"incident": incident.to_record()}, indent=2))


@main.command()
@click.option("--file", "replay_file", type=click.Path(exists=True), required=True)
@click.option("--rate", type=float, default=None, help="Posts per second throttle.")
@click.option("--models", "models_dir", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), help="Write incidents as JSON Lines.")
@click.option("--store", "store_path", type=click.Path(), help="Append to an incident log.")
def replay(replay_file, rate, models_dir, config_path, out, store_path) -> None:
    """Replay a JSON Lines post stream through the pipeline deterministically."""
    config = load_config(config_path)
    config.models_dir = Path(models_dir)
    ctx = build_context(config, clock=replay_clock)
    sinks = []
    handle = None
    if out:
        handle = open(out, "w", encoding="utf-8")
        sinks.append(
            lambda inc: handle.write(
                json.dumps(inc.to_record(), sort_keys=True, separators=(",", ":")) + "\n"
            )
        )
    if store_path:
        store = IncidentStore(store_path)
        sinks.append(store.append)
    summary = run_stream(
        ReplayFileSource(replay_file, rate=rate),
        ctx,
        sink=lambda inc: [s(inc) for s in sinks],
        queue_size=config.queue_size,
    )
    if handle:
        handle.close()
    click.echo(json.dumps(summary.to_dict(), indent=2))
    if not summary.conserved():
        click.echo("WARNING: stream summary does not conserve", err=True)
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
def serve(config_path, port, host) -> None:
    """Start the HTTP service (trains fixture models first if none exist)."""
    import uvicorn

    from .server import create_app

    config = load_config(config_path)
    if port is not None:
        config.port = port
    if host is not None:
        config.host = host
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--out", type=click.Path(), required=True)
@click.option("--positives", default=1313, show_default=True)
@click.option("--negatives", default=1887, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--seed", default=7, show_default=True)
def synth(out, positives, negatives, noise, seed) -> None:
    """Generate a deterministic synthetic dataset TSV."""
    spec = CorpusSpec(
        n_positive=positives, n_negative=negatives, noise_rate=noise, seed=seed
    )
    examples = evaluate.generate_synthetic_corpus(spec)
    evaluate.save_dataset(evaluate.rows_from_examples(examples), out)
    click.echo(f"wrote {len(examples)} rows to {out}")


if __name__ == "__main__":
    main()
