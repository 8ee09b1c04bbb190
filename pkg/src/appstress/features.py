"""Daily feature extraction and stress-label aggregation.

Each (user, local day) with at least one clipped event yields an
11-component vector: per-category usage counts and seconds for the five
app categories, plus the number of distinct apps seen that day. EMA
responses are reduced to one integer label per (user, day).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

import numpy as np

from .errors import ConfigError
from .ingest import AppEvent, EmaResponse
from .taxonomy import FEATURE_CATEGORIES, AppCategory, Taxonomy

FEATURE_NAMES = [
    "freq_ent",
    "freq_social",
    "freq_game",
    "freq_utility",
    "freq_browser",
    "time_ent",
    "time_social",
    "time_game",
    "time_utility",
    "time_browser",
    "unique_app_count",
]

# Column position of each category inside the freq/time blocks.
_CAT_SLOT = {
    AppCategory.ENTERTAINMENT: 0,
    AppCategory.SOCIAL_NETWORKING: 1,
    AppCategory.GAME: 2,
    AppCategory.UTILITY: 3,
    AppCategory.BROWSER: 4,
}

LABEL_REDUCERS = ("mean", "max", "last")


@dataclass(frozen=True)
class DailyFeatureVector:
    user_id: str
    date: date
    freq_ent: int = 0
    freq_social: int = 0
    freq_game: int = 0
    freq_utility: int = 0
    freq_browser: int = 0
    time_ent: int = 0
    time_social: int = 0
    time_game: int = 0
    time_utility: int = 0
    time_browser: int = 0
    unique_app_count: int = 0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=float)


@dataclass(frozen=True)
class DailyLabel:
    user_id: str
    date: date
    level: int
    n_responses: int


@dataclass
class JoinReport:
    n_joined: int = 0
    n_features_unmatched: int = 0
    n_labels_unmatched: int = 0


def _zone(tz: str) -> ZoneInfo:
    try:
        return ZoneInfo(tz)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ConfigError("features", f"unknown timezone {tz!r}") from exc


def _local_date(ts: int, zone: ZoneInfo) -> date:
    return datetime.fromtimestamp(ts, zone).date()


def split_event_at_midnight(event: AppEvent, zone: ZoneInfo) -> list[AppEvent]:
    """Split an event into per-local-day pieces (half-open on day bounds)."""
    pieces: list[AppEvent] = []
    t = event.start
    while True:
        local_day = _local_date(t, zone)
        next_midnight = int(
            datetime.combine(local_day + timedelta(days=1), time(0), tzinfo=zone).timestamp()
        )
        if event.end <= next_midnight:
            pieces.append(AppEvent(event.user_id, event.app_id, t, event.end))
            return pieces
        pieces.append(AppEvent(event.user_id, event.app_id, t, next_midnight))
        t = next_midnight


def extract_daily_features(
    events: list[AppEvent], taxonomy: Taxonomy, tz: str = "UTC"
) -> list[DailyFeatureVector]:
    """Aggregate clipped events into per-(user, day) feature vectors.

    Events are split at local midnight first; frequencies count post-split
    events, times sum whole seconds (floored), and the unique-app count
    includes apps that map to no category. Days without events yield
    nothing.
    """
    zone = _zone(tz)
    freq: dict[tuple[str, date], list[int]] = {}
    secs: dict[tuple[str, date], list[float]] = {}
    apps: dict[tuple[str, date], set[str]] = {}

    for ev in events:
        for piece in split_event_at_midnight(ev, zone):
            day = _local_date(piece.start, zone)
            key = (piece.user_id, day)
            if key not in freq:
                freq[key] = [0] * 5
                secs[key] = [0.0] * 5
                apps[key] = set()
            apps[key].add(piece.app_id)
            category = taxonomy.categorize(piece.app_id)
            if category is AppCategory.UNKNOWN:
                continue
            slot = _CAT_SLOT[category]
            freq[key][slot] += 1
            secs[key][slot] += piece.duration

    vectors: list[DailyFeatureVector] = []
    for key in sorted(freq, key=lambda k: (k[0], k[1])):
        user_id, day = key
        f = freq[key]
        t = [int(math.floor(s)) for s in secs[key]]
        vectors.append(
            DailyFeatureVector(
                user_id=user_id,
                date=day,
                freq_ent=f[0],
                freq_social=f[1],
                freq_game=f[2],
                freq_utility=f[3],
                freq_browser=f[4],
                time_ent=t[0],
                time_social=t[1],
                time_game=t[2],
                time_utility=t[3],
                time_browser=t[4],
                unique_app_count=len(apps[key]),
            )
        )
    return vectors


def aggregate_daily_label(
    responses: list[EmaResponse], tz: str = "UTC", reducer: str = "mean"
) -> list[DailyLabel]:
    """Reduce each (user, local day)'s responses to one stress level.

    ``mean`` averages and rounds half-up (biases toward detecting stress),
    ``max`` takes the day's peak, ``last`` the latest response.
    """
    if reducer not in LABEL_REDUCERS:
        raise ConfigError("features", f"unknown label reducer {reducer!r}")
    zone = _zone(tz)
    by_day: dict[tuple[str, date], list[EmaResponse]] = {}
    for r in responses:
        day = datetime.fromtimestamp(r.at, zone).date()
        by_day.setdefault((r.user_id, day), []).append(r)

    labels: list[DailyLabel] = []
    for key in sorted(by_day, key=lambda k: (k[0], k[1])):
        user_id, day = key
        rs = by_day[key]
        if reducer == "mean":
            level = int(math.floor(sum(r.level for r in rs) / len(rs) + 0.5))
        elif reducer == "max":
            level = max(r.level for r in rs)
        else:
            level = max(rs, key=lambda r: r.at).level
        labels.append(DailyLabel(user_id, day, level, len(rs)))
    return labels


def join_features_labels(
    features: list[DailyFeatureVector], labels: list[DailyLabel]
) -> tuple[list[tuple[DailyFeatureVector, int]], JoinReport]:
    """Inner-join features and labels on (user_id, date); count the drops."""
    by_key = {(l.user_id, l.date): l for l in labels}
    pairs: list[tuple[DailyFeatureVector, int]] = []
    matched: set[tuple[str, date]] = set()
    for fv in features:
        label = by_key.get((fv.user_id, fv.date))
        if label is None:
            continue
        pairs.append((fv, label.level))
        matched.add((fv.user_id, fv.date))
    report = JoinReport(
        n_joined=len(pairs),
        n_features_unmatched=len(features) - len(pairs),
        n_labels_unmatched=len(labels) - len(matched),
    )
    return pairs, report
