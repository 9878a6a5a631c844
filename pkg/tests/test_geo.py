import random

import pytest

from cityalert.config import DEFAULT_BBOX, packaged_data
from cityalert.errors import GeocoderUnavailable
from cityalert.geo import (
    Gazetteer,
    GeoPoint,
    HttpGeocoder,
    in_bounds,
    load_gazetteer,
    resolve_location,
)


class Post:
    def __init__(self, coords=None):
        self.coords = coords


@pytest.fixture()
def gazetteer():
    return Gazetteer(
        {
            "powai": (19.1176, 72.9060),
            "marine drive": (18.9432, 72.8237),
            "drive": (10.0, 10.0),
        }
    )


class TestResolveLocation:
    def test_metadata_passthrough(self, gazetteer):
        point = resolve_location(Post(coords=(19.12, 72.91)), ["anything"], gazetteer)
        assert point == GeoPoint(19.12, 72.91, "post-metadata")

    def test_gazetteer_lookup(self, gazetteer):
        point = resolve_location(Post(), ["fire", "at", "powai"], gazetteer)
        assert point.source == "gazetteer"
        assert point.place_name == "powai"
        assert (point.lat, point.lon) == (19.1176, 72.9060)

    def test_longest_match_wins(self, gazetteer):
        point = resolve_location(Post(), ["on", "marine", "drive", "now"], gazetteer)
        assert point.place_name == "marine drive"

    def test_no_match_no_backend(self, gazetteer):
        assert resolve_location(Post(), ["nothing", "here"], gazetteer) is None

    def test_metadata_beats_gazetteer(self, gazetteer):
        point = resolve_location(Post(coords=(1.0, 2.0)), ["powai"], gazetteer)
        assert point.source == "post-metadata"

    def test_external_backend_used_last(self, gazetteer):
        class Fake:
            def __init__(self):
                self.calls = 0

            def geocode(self, query):
                self.calls += 1
                return (3.0, 4.0)

        backend = Fake()
        point = resolve_location(Post(), ["unknown", "place"], gazetteer, backend)
        assert point.source == "external-geocoder"
        assert backend.calls == 1
        # gazetteer hit -> backend never called
        resolve_location(Post(), ["powai"], gazetteer, backend)
        assert backend.calls == 1

    def test_unreachable_backend_propagates(self, gazetteer):
        class Broken:
            def geocode(self, query):
                raise GeocoderUnavailable("connection refused")

        with pytest.raises(GeocoderUnavailable):
            resolve_location(Post(), ["unknown"], gazetteer, Broken())

    def test_deterministic_without_backend(self, gazetteer):
        tokens = ["maybe", "powai", "or", "marine", "drive"]
        first = resolve_location(Post(), tokens, gazetteer)
        second = resolve_location(Post(), tokens, gazetteer)
        assert first == second


class TestInBounds:
    def test_mumbai_point_inside(self):
        assert in_bounds(GeoPoint(19.12, 72.91, "post-metadata"), DEFAULT_BBOX)

    def test_boundary_is_inside(self):
        bbox = (10.0, 20.0, 30.0, 40.0)
        assert in_bounds(GeoPoint(10.0, 20.0, "gazetteer"), bbox)
        assert in_bounds(GeoPoint(30.0, 40.0, "gazetteer"), bbox)

    def test_origin_outside_mumbai(self):
        assert not in_bounds(GeoPoint(0.0, 0.0, "gazetteer"), DEFAULT_BBOX)

    def test_malformed_bbox_rejected(self):
        with pytest.raises(ValueError):
            in_bounds(GeoPoint(0.0, 0.0, "gazetteer"), (5.0, 0.0, 1.0, 10.0))

    def test_agrees_with_interval_checks_on_random_points(self):
        rng = random.Random(123)
        bbox = (-10.0, -20.0, 15.0, 25.0)
        for _ in range(1000):
            lat = rng.uniform(-90, 90)
            lon = rng.uniform(-180, 180)
            expected = (
                bbox[0] <= lat
                and lat <= bbox[2]
                and bbox[1] <= lon
                and lon <= bbox[3]
            )
            assert in_bounds(GeoPoint(lat, lon, "gazetteer"), bbox) == expected


class TestHttpGeocoder:
    def test_dotted_path_extraction(self):
        geocoder = HttpGeocoder("http://x", lat_path="results.0.lat", lon_path="results.0.lon")
        payload = {"results": [{"lat": "19.1", "lon": "72.9"}]}
        assert geocoder._dig(payload, "results.0.lat") == "19.1"

    def test_unreachable_raises(self):
        geocoder = HttpGeocoder("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(GeocoderUnavailable):
            geocoder.geocode("powai")


class TestBundledGazetteer:
    def test_loads_and_covers_fixture_places(self):
        gazetteer = load_gazetteer(packaged_data("gazetteer.tsv"))
        assert len(gazetteer) >= 25
        for place in ["powai", "andheri", "marine drive"]:
            assert gazetteer.get(place) is not None

    def test_all_places_inside_city_box(self):
        gazetteer = load_gazetteer(packaged_data("gazetteer.tsv"))
        for name in gazetteer._places:
            lat, lon = gazetteer.get(name)
            assert in_bounds(GeoPoint(lat, lon, "gazetteer"), DEFAULT_BBOX), name
