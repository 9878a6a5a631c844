import itertools
from datetime import datetime, timezone

import pytest

from cityalert.errors import EmptyAfterCleaning
from cityalert.preprocess import (
    Dictionary,
    NormalizationMap,
    RawPost,
    clean,
    compress_token,
    damerau_levenshtein,
    normalize_tokens,
    sanitize,
    spell_correct,
)

TABLE1_INPUT = (
    "@user heellllllppp!!! Firrreee at powai, lake lucene bldng 4th flor, hlp! #fire"
)
TABLE1_OUTPUT = "heellllllppp Firrreee at powai , lake lucene bldng 4th flor , hlp"


def ts() -> datetime:
    return datetime(2016, 4, 2, 10, 0, tzinfo=timezone.utc)


class TestClean:
    def test_reference_tweet(self):
        assert clean(TABLE1_INPUT) == TABLE1_OUTPUT

    def test_empty(self):
        assert clean("") == ""

    def test_url_hashtag_mention_removed(self):
        assert clean("help http://t.co/abc #fire @john now") == "help now"

    def test_www_url_removed(self):
        assert clean("see www.example.com/page for info") == "see for info"

    def test_commas_become_standalone_tokens(self):
        assert clean("a,b,,c") == "a , b , , c"

    def test_case_preserved(self):
        assert clean("Fire IN Powai!") == "Fire IN Powai"

    def test_stray_symbols_removed(self):
        assert clean("odd @ and # alone") == "odd and alone"

    @pytest.mark.parametrize(
        "text",
        [TABLE1_INPUT, "", "a,b", "x!?.\"'()*&%$;:/\\y", "  spaced   out  "],
    )
    def test_idempotent(self, text):
        once = clean(text)
        assert clean(once) == once


def oracle_compress(token: str, dictionary: Dictionary) -> str:
    """Independent brute force: enumerate every reduction combination by
    regenerating candidate strings character-run by character-run."""
    if token in dictionary:
        return token
    runs = [(ch, len(list(g))) for ch, g in itertools.groupby(token)]
    squeezed_runs = [(ch, min(n, 2)) for ch, n in runs]
    window_positions = [i for i, (_, n) in enumerate(squeezed_runs) if n == 2]
    candidates = []
    for bits in itertools.product([2, 1], repeat=len(window_positions)):
        parts = []
        choice = dict(zip(window_positions, bits))
        for i, (ch, n) in enumerate(squeezed_runs):
            parts.append(ch * choice.get(i, n))
        candidates.append("".join(parts))
    in_dict = [c for c in candidates if c in dictionary]
    if not in_dict:
        return "".join(ch * n for ch, n in squeezed_runs)
    return min(in_dict, key=lambda c: (-dictionary.count(c), len(c), c))


class TestCompress:
    def test_reference_outputs(self, small_dictionary):
        assert compress_token("fiiiirreeeeee", small_dictionary) == "fire"
        assert compress_token("helllllp", small_dictionary) == "help"
        assert compress_token("sttuuuuuccckk", small_dictionary) == "stuck"

    def test_dictionary_word_identity(self, small_dictionary):
        assert compress_token("fire", small_dictionary) == "fire"

    def test_no_candidate_falls_back_to_double_windows(self, small_dictionary):
        assert compress_token("xyyyzz", small_dictionary) == "xyyzz"

    def test_never_longer(self, small_dictionary):
        for token in ["aaaa", "fiiiire", "ok", "heyyyyy"]:
            assert len(compress_token(token, small_dictionary)) <= len(token)

    def test_no_triple_runs_in_output(self, small_dictionary):
        for token in ["aaaabbbbcccc", "looooln", "zzzz"]:
            out = compress_token(token, small_dictionary)
            assert all(
                len(list(g)) <= 2 for _, g in itertools.groupby(out)
            ), out

    def test_matches_bruteforce_oracle(self, bundled_dictionary):
        tokens = [
            "fiiiirreeeeee", "helllllp", "sttuuuuuccckk", "xyyyzz", "soooooo",
            "ruuuuunnnn", "druuuuuunnnkkk", "pleeeeeeaaaasssee", "fflloooodd",
            "heellllllppp", "nowwwwwww", "aabbccddee", "qqqq", "mmmm",
        ]
        for token in tokens:
            assert compress_token(token, bundled_dictionary) == oracle_compress(
                token, bundled_dictionary
            ), token


class TestNormalize:
    def test_reference_sentence(self, small_dictionary, small_map):
        tokens = ["bldng", "4th", "flor", ",", "hlp"]
        assert normalize_tokens(tokens, small_map, small_dictionary) == [
            "building", "4th", "flor", ",", "help",
        ]

    def test_no_key_matches(self, small_dictionary, small_map):
        assert normalize_tokens(["fire"], small_map, small_dictionary) == ["fire"]

    def test_single_entry_lookup(self, small_dictionary, small_map):
        assert normalize_tokens(["2mrw"], small_map, small_dictionary) == ["tomorrow"]

    def test_longest_match_first(self, small_dictionary):
        mapping = NormalizationMap(
            {"gd": [("good", 10)], "gd mrng": [("good morning", 20)]}
        )
        assert normalize_tokens(["gd", "mrng"], mapping, small_dictionary) == [
            "good", "morning",
        ]

    def test_weighted_candidate_selection(self):
        # higher count x unigram frequency wins
        dictionary = Dictionary({"your": 100, "you": 100, "are": 100})
        mapping = NormalizationMap({"ur": [("your", 10), ("you are", 60)]})
        assert normalize_tokens(["ur"], mapping, dictionary) == ["you", "are"]

    def test_in_dictionary_token_never_rewritten(self):
        dictionary = Dictionary({"gut": 5, "good": 50})
        mapping = NormalizationMap({"gut": [("good", 50)]})
        # "gut" is a dictionary word here, so the mapping must not fire
        assert normalize_tokens(["gut"], mapping, dictionary) == ["gut"]


def oracle_edit_distance(a: str, b: str) -> int:
    """Recursive optimal-string-alignment distance, memoized."""
    seen: dict[tuple[int, int], int] = {}

    def go(i: int, j: int) -> int:
        if (i, j) in seen:
            return seen[(i, j)]
        if i == 0 or j == 0:
            return i or j
        best = min(
            go(i - 1, j) + 1,
            go(i, j - 1) + 1,
            go(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )
        if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
            best = min(best, go(i - 2, j - 2) + (a[i - 1] != b[j - 1]))
        seen[(i, j)] = best
        return best

    return go(len(a), len(b))


class TestSpell:
    def test_reference_correction(self, small_dictionary):
        tokens = ["building", "4th", "flor", ",", "help"]
        assert spell_correct(tokens, small_dictionary) == [
            "building", "4th", "floor", ",", "help",
        ]

    def test_in_dictionary_identity(self, small_dictionary):
        assert spell_correct(["help"], small_dictionary) == ["help"]

    def test_frequency_tiebreak(self):
        dictionary = Dictionary({"help": 900, "half": 60})
        assert spell_correct(["halp"], dictionary) == ["help"]

    def test_lexicographic_tiebreak_on_equal_counts(self):
        dictionary = Dictionary({"help": 60, "half": 60})
        assert spell_correct(["halp"], dictionary) == ["half"]

    def test_distance_one_preferred_over_distance_two(self):
        dictionary = Dictionary({"flooring": 900, "floor": 1})
        assert spell_correct(["flor"], dictionary) == ["floor"]

    def test_digits_and_punct_pass_through(self, small_dictionary):
        assert spell_correct(["4th", ",", "a1b"], small_dictionary) == ["4th", ",", "a1b"]

    def test_non_ascii_passes_through(self, small_dictionary):
        assert spell_correct(["café"], small_dictionary) == ["café"]

    def test_no_candidate_within_two(self, small_dictionary):
        assert spell_correct(["zzzzzzzz"], small_dictionary) == ["zzzzzzzz"]

    def test_distance_matches_oracle(self):
        words = ["flor", "floor", "for", "help", "halp", "stuck", "stukc", "ab", "ba", ""]
        for a in words:
            for b in words:
                assert damerau_levenshtein(a, b) == oracle_edit_distance(a, b), (a, b)


class TestSanitize:
    def test_reference_tweet_end_to_end(self, small_dictionary, small_map):
        post = RawPost(id="p1", text=TABLE1_INPUT, timestamp=ts())
        result = sanitize(post, small_dictionary, small_map)
        assert list(result.tokens) == [
            "help", "fire", "at", "powai", ",", "lake", "lucene",
            "building", "4th", "floor", ",", "help",
        ]

    def test_stage_log_has_four_entries(self, small_dictionary, small_map):
        post = RawPost(id="p1", text=TABLE1_INPUT, timestamp=ts())
        result = sanitize(post, small_dictionary, small_map)
        assert [r.stage for r in result.stage_log] == [
            "cleaning", "compression", "normalization", "spelling",
        ]
        assert result.stage_log[0].before == TABLE1_INPUT
        assert result.stage_log[0].after == TABLE1_OUTPUT

    def test_hashtag_only_post_raises(self, small_dictionary, small_map):
        post = RawPost(id="p2", text="#fire", timestamp=ts())
        with pytest.raises(EmptyAfterCleaning):
            sanitize(post, small_dictionary, small_map)

    def test_plain_word_identity(self, small_dictionary, small_map):
        post = RawPost(id="p3", text="fire", timestamp=ts())
        assert sanitize(post, small_dictionary, small_map).tokens == ("fire",)

    def test_deterministic(self, small_dictionary, small_map):
        post = RawPost(id="p4", text=TABLE1_INPUT, timestamp=ts())
        first = sanitize(post, small_dictionary, small_map)
        second = sanitize(post, small_dictionary, small_map)
        assert first == second

    def test_no_remnants_in_tokens(self, bundled_dictionary, bundled_map):
        post = RawPost(
            id="p5",
            text="@you look http://x.io #tag fire at powai!!",
            timestamp=ts(),
        )
        result = sanitize(post, bundled_dictionary, bundled_map)
        for token in result.tokens:
            assert "@" not in token and "#" not in token and "http" not in token


class TestRawPost:
    def test_rejects_blank_text(self):
        with pytest.raises(ValueError):
            RawPost(id="x", text="   ", timestamp=ts())

    def test_rejects_bad_coords(self):
        with pytest.raises(ValueError):
            RawPost(id="x", text="hi", timestamp=ts(), coords=(91.0, 0.0))


class TestDataIntegrity:
    def test_bundled_dictionary_shape(self, bundled_dictionary):
        assert len(bundled_dictionary) > 1000
        for word in ["fire", "help", "stuck", "floor", "building"]:
            assert word in bundled_dictionary

    def test_normalization_targets_are_known_words(
        self, bundled_dictionary, bundled_map
    ):
        # keep the chain stable: what normalization emits, spelling keeps
        missing = []
        for key in list(bundled_map._table):
            for target, _ in bundled_map.candidates(key):
                for word in target.split():
                    if word not in bundled_dictionary:
                        missing.append((key, word))
        assert not missing, missing

    def test_reference_pairs_present(self, bundled_map):
        assert ("building", 40) in bundled_map.candidates("bldng")
        assert ("help", 80) in bundled_map.candidates("hlp")
        assert "flor" not in bundled_map
