"""Area code canonicalization.

Sources name the same place many ways ("DE", "Germany", "EL", "Greece").
Cross-dataset linking keys on area codes, so every parser funnels source
tokens through one alias table to a canonical short code plus a display
label. Tokens the table does not know keep their identity as a slugged
uppercase code so no data is dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class AreaKey:
    """One canonical area.

    Attributes:
        code: Stable canonical code, unique within a cube.
        label: Human-readable name.
    """

    code: str
    label: str

    def __post_init__(self) -> None:
        if not self.code:
            raise ValueError("area code must be non-empty")
        if not self.label:
            raise ValueError("area label must be non-empty")


# canonical code -> display label
_LABELS: dict[str, str] = {
    "AFR": "Africa",
    "AUT": "Austria",
    "BEL": "Belgium",
    "CHE": "Switzerland",
    "DEU": "Germany",
    "DNK": "Denmark",
    "ESP": "Spain",
    "EUU": "European Union",
    "FIN": "Finland",
    "FRA": "France",
    "GBR": "United Kingdom",
    "GRC": "Greece",
    "IRL": "Ireland",
    "ITA": "Italy",
    "NLD": "Netherlands",
    "NOR": "Norway",
    "POL": "Poland",
    "PRT": "Portugal",
    "SWE": "Sweden",
    "USA": "United States",
    "WLD": "World",
}

# normalized source token -> canonical code; canonical codes map to themselves
_ALIASES: dict[str, str] = {
    "africa": "AFR",
    "sub-saharan africa": "AFR",
    "at": "AUT",
    "austria": "AUT",
    "be": "BEL",
    "belgium": "BEL",
    "ch": "CHE",
    "switzerland": "CHE",
    "de": "DEU",
    "germany": "DEU",
    "dk": "DNK",
    "denmark": "DNK",
    "es": "ESP",
    "spain": "ESP",
    "eu": "EUU",
    "eu27": "EUU",
    "eu28": "EUU",
    "european union": "EUU",
    "fi": "FIN",
    "finland": "FIN",
    "fr": "FRA",
    "france": "FRA",
    "gb": "GBR",
    "uk": "GBR",
    "united kingdom": "GBR",
    "el": "GRC",
    "gr": "GRC",
    "greece": "GRC",
    "ie": "IRL",
    "ireland": "IRL",
    "it": "ITA",
    "italy": "ITA",
    "nl": "NLD",
    "netherlands": "NLD",
    "no": "NOR",
    "norway": "NOR",
    "pl": "POL",
    "poland": "POL",
    "pt": "PRT",
    "portugal": "PRT",
    "se": "SWE",
    "sweden": "SWE",
    "us": "USA",
    "united states": "USA",
    "world": "WLD",
}
_ALIASES.update({code.lower(): code for code in _LABELS})

_SLUG_RE = re.compile(r"[^A-Z0-9]+")


def slug_code(token: str) -> str:
    """Uppercase slug of a source token, usable as a fallback area code."""
    out = _SLUG_RE.sub("-", token.strip().upper()).strip("-")
    return out or "UNKNOWN"


def lookup(token: str) -> AreaKey:
    """Map one source token to its canonical AreaKey.

    Unknown tokens become their own code: slug for the code, the trimmed
    original text for the label.
    """
    trimmed = token.strip()
    norm = trimmed.casefold()
    code = _ALIASES.get(norm)
    if code is not None:
        return AreaKey(code=code, label=_LABELS[code])
    fallback = slug_code(trimmed)
    return AreaKey(code=fallback, label=trimmed or fallback)


class AreaResolver:
    """Per-parse area assignment that never merges distinct source tokens.

    Two different source tokens occasionally canonicalize to the same code
    (a file mixing "UK" and "GB"). Folding them together would overwrite
    cells, so the first token keeps the canonical code and later ones fall
    back to their slug, suffixed until unique.
    """

    def __init__(self) -> None:
        self._by_token: dict[str, AreaKey] = {}
        self._taken: dict[str, str] = {}

    def resolve(self, token: str) -> AreaKey:
        trimmed = token.strip()
        if trimmed in self._by_token:
            return self._by_token[trimmed]
        key = lookup(trimmed)
        code = key.code
        if self._taken.get(code, trimmed) != trimmed:
            code = slug_code(trimmed)
            n = 2
            while self._taken.get(code, trimmed) != trimmed:
                code = f"{slug_code(trimmed)}-{n}"
                n += 1
            key = AreaKey(code=code, label=key.label)
        self._by_token[trimmed] = key
        self._taken[code] = trimmed
        return key

    def areas(self) -> tuple[AreaKey, ...]:
        """All resolved areas in first-appearance order."""
        return tuple(self._by_token.values())
