"""Incident geolocation: post metadata first, offline gazetteer second,
optional external HTTP geocoder last."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import httpx

from .errors import GeocoderUnavailable

SOURCE_METADATA = "post-metadata"
SOURCE_GAZETTEER = "gazetteer"
SOURCE_EXTERNAL = "external-geocoder"


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    source: str
    place_name: str | None = None

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"coordinates out of range: ({self.lat}, {self.lon})")


class Gazetteer:
    """Offline place-name -> coordinate lookup; keys lowercase, may be phrases."""

    def __init__(self, places: Mapping[str, tuple[float, float]]):
        table: dict[str, tuple[float, float]] = {}
        for name, (lat, lon) in places.items():
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise ValueError(f"bad coordinates for {name!r}")
            table[name.lower()] = (float(lat), float(lon))
        self._places = table
        self._max_tokens = max((len(k.split()) for k in table), default=0)

    def __len__(self) -> int:
        return len(self._places)

    def get(self, name: str) -> tuple[float, float] | None:
        return self._places.get(name.lower())

    def longest_match(self, tokens: Sequence[str]) -> tuple[str, tuple[float, float]] | None:
        """Longest place phrase occurring contiguously in `tokens`; earliest
        occurrence wins among equal lengths."""
        for width in range(min(self._max_tokens, len(tokens)), 0, -1):
            for i in range(len(tokens) - width + 1):
                name = " ".join(tokens[i : i + width])
                coords = self._places.get(name)
                if coords is not None:
                    return name, coords
        return None


def load_gazetteer(path: str | Path) -> Gazetteer:
    """Read a `place<TAB>lat<TAB>lon` file."""
    places: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            try:
                name, lat, lon = line.split("\t")
                places[name] = (float(lat), float(lon))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad gazetteer line {line!r}") from exc
    return Gazetteer(places)


class GeocoderClient(Protocol):
    def geocode(self, query: str) -> tuple[float, float] | None: ...


class HttpGeocoder:
    """Generic GET-based geocoding client.

    The endpoint, query parameter and the dotted key paths to latitude and
    longitude in the JSON response are all configurable, so any vendor with a
    compatible shape can back it.
    """

    def __init__(
        self,
        endpoint: str,
        query_param: str = "q",
        lat_path: str = "lat",
        lon_path: str = "lon",
        extra_params: Mapping[str, str] | None = None,
        timeout: float = 2.0,
    ):
        self.endpoint = endpoint
        self.query_param = query_param
        self.lat_path = lat_path
        self.lon_path = lon_path
        self.extra_params = dict(extra_params or {})
        self.timeout = timeout

    @staticmethod
    def _dig(payload, path: str):
        value = payload
        for key in path.split("."):
            if isinstance(value, list):
                value = value[int(key)]
            elif isinstance(value, dict):
                value = value[key]
            else:
                raise KeyError(path)
        return value

    def geocode(self, query: str) -> tuple[float, float] | None:
        params = {self.query_param: query, **self.extra_params}
        try:
            response = httpx.get(self.endpoint, params=params, timeout=self.timeout)
            response.raise_for_status()
            payload = response.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise GeocoderUnavailable(str(exc)) from exc
        try:
            lat = float(self._dig(payload, self.lat_path))
            lon = float(self._dig(payload, self.lon_path))
        except (KeyError, IndexError, TypeError, ValueError):
            return None  # reachable backend, no result
        return lat, lon


def resolve_location(
    post,
    sanitized,
    gazetteer: Gazetteer,
    geocoder: GeocoderClient | None = None,
) -> GeoPoint | None:
    """Post coordinates win; otherwise gazetteer match over sanitized tokens;
    otherwise a single external lookup when a client is configured."""
    coords = getattr(post, "coords", None)
    if coords is not None:
        return GeoPoint(lat=coords[0], lon=coords[1], source=SOURCE_METADATA)
    tokens = getattr(sanitized, "tokens", sanitized) or ()
    match = gazetteer.longest_match(list(tokens))
    if match is not None:
        name, (lat, lon) = match
        return GeoPoint(lat=lat, lon=lon, source=SOURCE_GAZETTEER, place_name=name)
    if geocoder is not None:
        found = geocoder.geocode(" ".join(tokens))
        if found is not None:
            return GeoPoint(lat=found[0], lon=found[1], source=SOURCE_EXTERNAL)
    return None


BBox = tuple[float, float, float, float]  # (min_lat, min_lon, max_lat, max_lon)


def in_bounds(point: GeoPoint, bbox: BBox) -> bool:
    """Closed-box containment; boundary points count as inside."""
    min_lat, min_lon, max_lat, max_lon = bbox
    if min_lat >= max_lat or min_lon >= max_lon:
        raise ValueError(f"malformed bounding box {bbox}")
    return min_lat <= point.lat <= max_lat and min_lon <= point.lon <= max_lon
