"""Country registry: the seven default target countries and lookup helpers."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TranscreateError


@dataclass(frozen=True)
class Country:
    iso_code: str
    display_name: str
    cctld: str

    def __post_init__(self) -> None:
        if len(self.iso_code) != 2 or not self.iso_code.islower():
            raise ValueError(f"iso_code must be a 2-letter lowercase code, got {self.iso_code!r}")
        if not self.cctld.startswith("."):
            raise ValueError(f"cctld must start with '.', got {self.cctld!r}")


class UnknownCountry(TranscreateError):
    """Country key matched neither an iso code nor a display name."""


# .in and .jp follow the source examples directly; the others are the
# standard ISO ccTLD assignments for those countries.
DEFAULT_COUNTRIES: tuple[Country, ...] = (
    Country("br", "Brazil", ".br"),
    Country("in", "India", ".in"),
    Country("jp", "Japan", ".jp"),
    Country("ng", "Nigeria", ".ng"),
    Country("pt", "Portugal", ".pt"),
    Country("tr", "Turkey", ".tr"),
    Country("us", "United States", ".us"),
)

_BY_ISO = {c.iso_code: c for c in DEFAULT_COUNTRIES}
_BY_NAME = {c.display_name.lower(): c for c in DEFAULT_COUNTRIES}
_BY_TLD = {c.cctld.lstrip("."): c for c in DEFAULT_COUNTRIES}


def country(key: str) -> Country:
    """Resolve a country from an iso code or display name (case-insensitive)."""
    k = key.strip().lower()
    found = _BY_ISO.get(k) or _BY_NAME.get(k)
    if found is None:
        raise UnknownCountry(f"unknown country {key!r}")
    return found


def maybe_country(key: str) -> Country | None:
    try:
        return country(key)
    except UnknownCountry:
        return None


def country_for_tld(label: str) -> Country | None:
    """Country whose ccTLD equals the given TLD label (no leading dot)."""
    return _BY_TLD.get(label.lower())


def all_countries() -> tuple[Country, ...]:
    return DEFAULT_COUNTRIES
