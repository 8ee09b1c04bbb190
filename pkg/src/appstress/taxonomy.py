"""App-id to category mapping with a configurable rule file.

Rules come in two kinds: exact (whole app id) and substring. Exact rules
always win; substring rules apply in file order, first match wins. Apps
matching no rule fall into the Unknown bucket, which feeds the unique-app
count but none of the per-category features.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import BinaryIO

from .errors import PipelineError, SchemaError

TAXONOMY_COLUMNS = ["pattern", "match_kind", "category"]


class AppCategory(Enum):
    ENTERTAINMENT = "entertainment"
    SOCIAL_NETWORKING = "social_networking"
    UTILITY = "utility"
    BROWSER = "browser"
    GAME = "game"
    UNKNOWN = "unknown"


# The five categories that carry frequency/time features, in feature order.
FEATURE_CATEGORIES = (
    AppCategory.ENTERTAINMENT,
    AppCategory.SOCIAL_NETWORKING,
    AppCategory.GAME,
    AppCategory.UTILITY,
    AppCategory.BROWSER,
)

_NAMED = {c.value: c for c in AppCategory if c is not AppCategory.UNKNOWN}


@dataclass
class Taxonomy:
    exact_rules: dict[str, AppCategory] = field(default_factory=dict)
    substring_rules: list[tuple[str, AppCategory]] = field(default_factory=list)

    def categorize(self, app_id: str) -> AppCategory:
        return categorize_app(self, app_id)


def load_taxonomy(source: BinaryIO | bytes) -> Taxonomy:
    """Load a `pattern,match_kind,category` CSV into a Taxonomy.

    Duplicate exact patterns and unknown category names are fatal.
    """
    try:
        data = source if isinstance(source, bytes) else source.read()
        text = data.decode("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise PipelineError("taxonomy", f"unreadable taxonomy stream: {exc}") from exc

    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return Taxonomy()
    missing = [c for c in TAXONOMY_COLUMNS if c not in header]
    if missing:
        raise SchemaError("taxonomy", f"missing required column(s): {', '.join(missing)}")
    idx = {c: header.index(c) for c in TAXONOMY_COLUMNS}

    taxonomy = Taxonomy()
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise SchemaError(
                "taxonomy", f"line {reader.line_num}: expected {len(header)} fields"
            )
        pattern = row[idx["pattern"]].strip().lower()
        kind = row[idx["match_kind"]].strip().lower()
        name = row[idx["category"]].strip().lower()
        if not pattern:
            raise SchemaError("taxonomy", f"line {reader.line_num}: empty pattern")
        if name not in _NAMED:
            raise PipelineError("taxonomy", f"line {reader.line_num}: unknown category {name!r}")
        category = _NAMED[name]
        if kind == "exact":
            if pattern in taxonomy.exact_rules:
                raise PipelineError("taxonomy", f"duplicate exact pattern {pattern!r}")
            taxonomy.exact_rules[pattern] = category
        elif kind == "substring":
            taxonomy.substring_rules.append((pattern, category))
        else:
            raise PipelineError("taxonomy", f"line {reader.line_num}: unknown match_kind {kind!r}")
    return taxonomy


def categorize_app(taxonomy: Taxonomy, app_id: str) -> AppCategory:
    """Total, deterministic lookup: Unknown iff no rule matches."""
    key = app_id.lower()
    hit = taxonomy.exact_rules.get(key)
    if hit is not None:
        return hit
    for pattern, category in taxonomy.substring_rules:
        if pattern in key:
            return category
    return AppCategory.UNKNOWN


def default_taxonomy() -> Taxonomy:
    """The bundled five-category mapping, overridable via --taxonomy."""
    data = resources.files("appstress").joinpath("data/default_taxonomy.csv").read_bytes()
    return load_taxonomy(data)
