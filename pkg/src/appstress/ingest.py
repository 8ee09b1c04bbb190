"""Raw log ingestion: app events, screen intervals, EMA responses.

All timestamps are UTC epoch seconds (int). Intervals are half-open
[start, end): a zero-length interval is empty. Parsing never drops
well-formed rows and never aborts on malformed ones; each bad row becomes
a line-numbered diagnostic instead.
"""

from __future__ import annotations

import csv
import io
import json
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, time, timedelta, timezone
from typing import BinaryIO, Generic, Iterable, TypeVar
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import ConfigError, PipelineError, SchemaError

APP_EVENT_COLUMNS = ["user_id", "app_id", "start_ts", "end_ts"]
SCREEN_COLUMNS = ["user_id", "start_ts", "end_ts"]
EMA_COLUMNS = ["user_id", "ts", "level"]


@dataclass(frozen=True)
class AppEvent:
    """One timestamped usage interval of one app by one user."""

    user_id: str
    app_id: str
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class ScreenInterval:
    user_id: str
    start: int
    end: int

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class EmaResponse:
    user_id: str
    at: int
    level: int


@dataclass(frozen=True)
class WorkHoursFilter:
    """Optional weekday work-hours restriction applied after screen clipping."""

    enabled: bool = False
    weekday_start: time = time(9, 0)
    weekday_end: time = time(18, 0)
    timezone: str = "UTC"

    def __post_init__(self) -> None:
        if self.enabled and not self.weekday_start < self.weekday_end:
            raise ConfigError("ingest", "work-hours start must precede end")


@dataclass(frozen=True)
class Diagnostic:
    """One malformed input row, identified by physical line number."""

    line: int
    reason: str

    def __str__(self) -> str:
        return f"line:{self.line} {self.reason}"


T = TypeVar("T")


@dataclass
class ParseResult(Generic[T]):
    records: list[T] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def parse_timestamp(text: str) -> int:
    """Parse an ISO-8601 timestamp with explicit offset into epoch seconds."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a UTC offset")
    return int(dt.timestamp())


def format_timestamp(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _decode(source: BinaryIO | bytes) -> str:
    try:
        data = source if isinstance(source, bytes) else source.read()
        return data.decode("utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise PipelineError("ingest", f"unreadable input stream: {exc}") from exc


def _iter_rows(
    text: str, fmt: str, columns: list[str]
) -> Iterable[tuple[int, dict[str, str] | None, str]]:
    """Yield (line number, field dict or None, error reason) per data row."""
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("ingest", "empty file, header row required") from None
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError("ingest", f"missing required column(s): {', '.join(missing)}")
        idx = {c: header.index(c) for c in columns}
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                yield line, None, f"expected {len(header)} fields, got {len(row)}"
                continue
            yield line, {c: row[idx[c]].strip() for c in columns}, ""
    elif fmt == "jsonl":
        for line, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                yield line, None, f"invalid JSON: {exc.msg}"
                continue
            if not isinstance(obj, dict):
                yield line, None, "expected a JSON object"
                continue
            missing = [c for c in columns if c not in obj]
            if missing:
                yield line, None, f"missing field(s): {', '.join(missing)}"
                continue
            yield line, {c: str(obj[c]).strip() for c in columns}, ""
    else:
        raise ConfigError("ingest", f"unknown format {fmt!r}, expected csv or jsonl")


def parse_app_events(source: BinaryIO | bytes, fmt: str = "csv") -> ParseResult[AppEvent]:
    """Parse app usage rows; malformed rows become diagnostics, not errors."""
    result: ParseResult[AppEvent] = ParseResult()
    for line, fields, reason in _iter_rows(_decode(source), fmt, APP_EVENT_COLUMNS):
        if fields is None:
            result.diagnostics.append(Diagnostic(line, reason))
            continue
        user_id = fields["user_id"]
        app_id = fields["app_id"].lower()
        if not user_id or not app_id:
            result.diagnostics.append(Diagnostic(line, "empty user_id or app_id"))
            continue
        try:
            start = parse_timestamp(fields["start_ts"])
            end = parse_timestamp(fields["end_ts"])
        except ValueError as exc:
            result.diagnostics.append(Diagnostic(line, f"bad timestamp: {exc}"))
            continue
        if end < start:
            result.diagnostics.append(Diagnostic(line, "end precedes start"))
            continue
        result.records.append(AppEvent(user_id, app_id, start, end))
    return result


def parse_screen_intervals(source: BinaryIO | bytes, fmt: str = "csv") -> ParseResult[ScreenInterval]:
    """Parse raw screen-on intervals (not yet normalized)."""
    result: ParseResult[ScreenInterval] = ParseResult()
    for line, fields, reason in _iter_rows(_decode(source), fmt, SCREEN_COLUMNS):
        if fields is None:
            result.diagnostics.append(Diagnostic(line, reason))
            continue
        user_id = fields["user_id"]
        if not user_id:
            result.diagnostics.append(Diagnostic(line, "empty user_id"))
            continue
        try:
            start = parse_timestamp(fields["start_ts"])
            end = parse_timestamp(fields["end_ts"])
        except ValueError as exc:
            result.diagnostics.append(Diagnostic(line, f"bad timestamp: {exc}"))
            continue
        if end < start:
            result.diagnostics.append(Diagnostic(line, "end precedes start"))
            continue
        result.records.append(ScreenInterval(user_id, start, end))
    return result


def parse_ema(source: BinaryIO | bytes, fmt: str = "csv") -> ParseResult[EmaResponse]:
    """Parse EMA stress responses; levels outside [1,5] are diagnostics.

    Level 0 conventionally marks "no data available" and is rejected like
    any other out-of-range value.
    """
    result: ParseResult[EmaResponse] = ParseResult()
    for line, fields, reason in _iter_rows(_decode(source), fmt, EMA_COLUMNS):
        if fields is None:
            result.diagnostics.append(Diagnostic(line, reason))
            continue
        user_id = fields["user_id"]
        if not user_id:
            result.diagnostics.append(Diagnostic(line, "empty user_id"))
            continue
        try:
            at = parse_timestamp(fields["ts"])
        except ValueError as exc:
            result.diagnostics.append(Diagnostic(line, f"bad timestamp: {exc}"))
            continue
        try:
            level = int(fields["level"])
        except ValueError:
            result.diagnostics.append(Diagnostic(line, f"non-integer level {fields['level']!r}"))
            continue
        if not 1 <= level <= 5:
            result.diagnostics.append(Diagnostic(line, f"level {level} outside [1,5]"))
            continue
        result.records.append(EmaResponse(user_id, at, level))
    return result


def normalize_screen_intervals(raw: list[ScreenInterval]) -> list[ScreenInterval]:
    """Merge overlapping/adjacent intervals per user; sort by (user, start).

    The union of seconds covered is preserved exactly.
    """
    by_user: dict[str, list[ScreenInterval]] = {}
    for iv in raw:
        by_user.setdefault(iv.user_id, []).append(iv)
    out: list[ScreenInterval] = []
    for user_id in sorted(by_user):
        merged: list[list[int]] = []
        for iv in sorted(by_user[user_id], key=lambda v: (v.start, v.end)):
            if merged and iv.start <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], iv.end)
            else:
                merged.append([iv.start, iv.end])
        out.extend(ScreenInterval(user_id, s, e) for s, e in merged)
    return out


def clip_to_screen_on(events: list[AppEvent], screen: list[ScreenInterval]) -> list[AppEvent]:
    """Intersect each event with the user's screen-on intervals.

    An event overlapping n screen intervals yields n clipped events; empty
    intersections vanish. Requires normalized screen intervals.
    """
    starts_by_user: dict[str, list[int]] = {}
    ivs_by_user: dict[str, list[ScreenInterval]] = {}
    for iv in screen:
        ivs_by_user.setdefault(iv.user_id, []).append(iv)
    for user_id, ivs in ivs_by_user.items():
        ivs.sort(key=lambda v: v.start)
        starts_by_user[user_id] = [v.start for v in ivs]

    out: list[AppEvent] = []
    for ev in events:
        ivs = ivs_by_user.get(ev.user_id)
        if not ivs:
            continue
        starts = starts_by_user[ev.user_id]
        # First interval that could overlap: the one before the insertion point.
        i = max(bisect_left(starts, ev.start) - 1, 0)
        while i < len(ivs) and ivs[i].start < ev.end:
            s = max(ev.start, ivs[i].start)
            e = min(ev.end, ivs[i].end)
            if s < e:
                out.append(AppEvent(ev.user_id, ev.app_id, s, e))
            i += 1
    return out


def apply_work_filter(events: list[AppEvent], flt: WorkHoursFilter) -> list[AppEvent]:
    """Clip events to weekday work hours in the filter's timezone.

    Disabled filters are the identity. Weekend portions are removed; an
    event spanning several days yields one clipped piece per workday.
    """
    if not flt.enabled:
        return list(events)
    try:
        tz = ZoneInfo(flt.timezone)
    except (ZoneInfoNotFoundError, ValueError) as exc:
        raise ConfigError("ingest", f"unknown timezone {flt.timezone!r}") from exc

    out: list[AppEvent] = []
    for ev in events:
        t = ev.start
        while t < ev.end:
            local = datetime.fromtimestamp(t, tz)
            day = local.date()
            next_midnight = int(
                datetime.combine(day + timedelta(days=1), time(0), tzinfo=tz).timestamp()
            )
            if day.weekday() < 5:
                win_s = int(datetime.combine(day, flt.weekday_start, tzinfo=tz).timestamp())
                win_e = int(datetime.combine(day, flt.weekday_end, tzinfo=tz).timestamp())
                s = max(ev.start, t, win_s)
                e = min(ev.end, win_e)
                if s < e:
                    out.append(AppEvent(ev.user_id, ev.app_id, s, e))
            t = next_midnight
    return out
