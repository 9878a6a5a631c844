"""Runtime configuration: one JSON file with paths to every data asset plus
environment-variable overrides for port and data directory."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .classify import ModelBundle, load_model
from .features import load_vocabulary
from .geo import BBox
from .pipeline import FilterList, PipelineContext, load_filter_list
from .preprocess import load_dictionary, load_normalization_map
from .geo import load_gazetteer

ENV_PORT = "CITYALERT_PORT"
ENV_DATA_DIR = "CITYALERT_DATA_DIR"

# fixture default; the monitored city box is configuration, not a constant
DEFAULT_BBOX: BBox = (18.89, 72.77, 19.28, 73.03)


def packaged_data(name: str) -> Path:
    """Path to a read-only data asset bundled with the package."""
    return Path(resources.files("cityalert") / "data" / name)


@dataclass
class Config:
    host: str = "127.0.0.1"
    port: int = 8000
    data_dir: Path = Path("cityalert-data")
    dictionary_path: Path = field(default_factory=lambda: packaged_data("dictionary.tsv"))
    normalization_path: Path = field(default_factory=lambda: packaged_data("normalization.tsv"))
    gazetteer_path: Path = field(default_factory=lambda: packaged_data("gazetteer.tsv"))
    filters_path: Path = field(default_factory=lambda: packaged_data("filters.txt"))
    contacts_path: Path = field(default_factory=lambda: packaged_data("contacts.json"))
    bbox: BBox = DEFAULT_BBOX
    models_dir: Path | None = None  # default: <data_dir>/models
    static_dir: Path | None = None
    queue_size: int = 1024
    auto_train: bool = True
    train_seed: int = 7
    tile_url: str = "https://tile.openstreetmap.org/{z}/{x}/{y}.png"

    def __post_init__(self):
        for name in (
            "data_dir",
            "dictionary_path",
            "normalization_path",
            "gazetteer_path",
            "filters_path",
            "contacts_path",
        ):
            setattr(self, name, Path(getattr(self, name)))
        if self.models_dir is not None:
            self.models_dir = Path(self.models_dir)
        if self.static_dir is not None:
            self.static_dir = Path(self.static_dir)
        self.bbox = tuple(float(v) for v in self.bbox)  # type: ignore[assignment]

    @property
    def resolved_models_dir(self) -> Path:
        return self.models_dir if self.models_dir is not None else self.data_dir / "models"

    @property
    def incidents_log(self) -> Path:
        return self.data_dir / "incidents.jsonl"

    @property
    def preferences_log(self) -> Path:
        return self.data_dir / "preferences.jsonl"

    @property
    def wordcloud_path(self) -> Path:
        return self.resolved_models_dir / "wordcloud.json"


def load_config(path: str | Path | None = None) -> Config:
    """Defaults, overridden by the JSON file when given, then by env vars."""
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(Config)}
        unknown = set(raw) - known - {"version"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values = {k: v for k, v in raw.items() if k in known}
    config = Config(**values)
    if os.environ.get(ENV_PORT):
        config.port = int(os.environ[ENV_PORT])
    if os.environ.get(ENV_DATA_DIR):
        config.data_dir = Path(os.environ[ENV_DATA_DIR])
    return config


def load_contacts(path: str | Path) -> tuple[tuple[str, ...], list[dict]]:
    """Categories and authority contact entries from the versioned config file."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    categories = tuple(raw["categories"])
    contacts = list(raw["contacts"])
    for entry in contacts:
        if entry["category"] not in categories:
            raise ValueError(f"contact for unknown category {entry['category']!r}")
        if not entry.get("phone"):
            raise ValueError(f"contact {entry.get('name')!r} has no phone")
    return categories, contacts


def model_paths(models_dir: Path) -> dict[str, Path]:
    return {
        "stage1_model": models_dir / "stage1.model",
        "stage1_vocab": models_dir / "stage1.vocab",
        "stage2_model": models_dir / "stage2.model",
        "stage2_vocab": models_dir / "stage2.vocab",
    }


def models_present(models_dir: Path) -> bool:
    return all(p.exists() for p in model_paths(models_dir).values())


def load_bundles(models_dir: Path) -> tuple[ModelBundle, ModelBundle]:
    paths = model_paths(models_dir)
    stage1_model = load_model(paths["stage1_model"])
    stage2_model = load_model(paths["stage2_model"])
    stage1_vocab = load_vocabulary(paths["stage1_vocab"], n=1)
    stage2_vocab = load_vocabulary(paths["stage2_vocab"], n=3)
    return (
        ModelBundle(model=stage1_model, vocab=stage1_vocab),
        ModelBundle(model=stage2_model, vocab=stage2_vocab),
    )


def build_context(config: Config, clock=None) -> PipelineContext:
    """Load every asset named by the config into an immutable pipeline context."""
    categories, _ = load_contacts(config.contacts_path)
    stage1, stage2 = load_bundles(config.resolved_models_dir)
    kwargs = {"clock": clock} if clock is not None else {}
    return PipelineContext(
        dictionary=load_dictionary(config.dictionary_path),
        normalization=load_normalization_map(config.normalization_path),
        gazetteer=load_gazetteer(config.gazetteer_path),
        filters=load_filter_list(config.filters_path),
        bbox=config.bbox,
        stage1=stage1,
        stage2=stage2,
        categories=categories,
        **kwargs,
    )
