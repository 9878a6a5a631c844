import pytest

from cityalert.classify import EMERGENCY, NON_EMERGENCY, LabeledExample
from cityalert.config import packaged_data
from cityalert.evaluate import CorpusSpec, generate_synthetic_corpus
from cityalert.preprocess import (
    Dictionary,
    NormalizationMap,
    load_dictionary,
    load_normalization_map,
)
from cityalert.training import train_stage_models

CATEGORIES = ("fire", "accident", "earthquake", "cyclone", "theft", "drunk-driving")


@pytest.fixture(scope="session")
def bundled_dictionary() -> Dictionary:
    return load_dictionary(packaged_data("dictionary.tsv"))


@pytest.fixture(scope="session")
def bundled_map() -> NormalizationMap:
    return load_normalization_map(packaged_data("normalization.tsv"))


@pytest.fixture()
def small_dictionary() -> Dictionary:
    # the Table-1 tweet's target words plus a few confusables
    return Dictionary(
        {
            "help": 900,
            "fire": 900,
            "at": 40,
            "powai": 10,
            "lake": 120,
            "lucene": 5,
            "building": 500,
            "floor": 500,
            "stuck": 500,
            "half": 60,
            "now": 40,
            "so": 40,
            "drunk": 500,
            "right": 120,
        }
    )


@pytest.fixture()
def small_map() -> NormalizationMap:
    return NormalizationMap(
        {
            "bldng": [("building", 40)],
            "hlp": [("help", 80)],
            "2mrw": [("tomorrow", 50)],
        }
    )


@pytest.fixture(scope="session")
def tiny_corpus() -> list[LabeledExample]:
    # small but wide enough that every category appears in every CV split
    spec = CorpusSpec(n_positive=120, n_negative=180, seed=42)
    return generate_synthetic_corpus(spec)


@pytest.fixture(scope="session")
def tiny_bundles(tiny_corpus):
    stage1, stage2, ranking = train_stage_models(
        tiny_corpus, CATEGORIES, epochs=12, seed=42
    )
    return stage1, stage2, ranking


@pytest.fixture(scope="session")
def tiny_context(tiny_bundles, bundled_dictionary, bundled_map):
    from cityalert.config import DEFAULT_BBOX, packaged_data
    from cityalert.geo import load_gazetteer
    from cityalert.pipeline import PipelineContext, load_filter_list, replay_clock

    stage1, stage2, _ = tiny_bundles
    return PipelineContext(
        dictionary=bundled_dictionary,
        normalization=bundled_map,
        gazetteer=load_gazetteer(packaged_data("gazetteer.tsv")),
        filters=load_filter_list(packaged_data("filters.txt")),
        bbox=DEFAULT_BBOX,
        stage1=stage1,
        stage2=stage2,
        categories=CATEGORIES,
        clock=replay_clock,
    )
