"""From raw usage logs to one 11-number feature vector per user-day.

Three CSV streams go in: app events (which app, when), screen-on intervals
(when the display was actually lit), and stress self-reports. The pipeline
validates rows (bad ones become line-numbered diagnostics, never silent
drops), merges overlapping screen intervals, clips app events to screen-on
time, splits anything that crosses local midnight, and finally counts
frequency and time per app category plus the day's unique-app count.

Run:  python demos/02_ingest_features.py
"""

from appstress.features import (
    FEATURE_NAMES,
    aggregate_daily_label,
    extract_daily_features,
    join_features_labels,
)
from appstress.ingest import (
    clip_to_screen_on,
    normalize_screen_intervals,
    parse_app_events,
    parse_ema,
    parse_screen_intervals,
)
from appstress.taxonomy import default_taxonomy

EVENTS_CSV = b"""user_id,app_id,start_ts,end_ts
u1,facebook,2013-11-04T09:00:00Z,2013-11-04T09:10:00Z
u1,chrome,2013-11-04T09:10:00Z,2013-11-04T09:15:00Z
u1,candycrushsaga,2013-11-04T12:00:00Z,2013-11-04T12:30:00Z
u1,chrome,2013-11-04T23:55:00Z,2013-11-05T00:05:00Z
u1,email,not-a-timestamp,2013-11-04T13:00:00Z
u1,youtube,2013-11-05T08:00:00Z,2013-11-05T08:45:00Z
"""

SCREEN_CSV = b"""user_id,start_ts,end_ts
u1,2013-11-04T08:55:00Z,2013-11-04T09:12:00Z
u1,2013-11-04T09:12:00Z,2013-11-04T09:20:00Z
u1,2013-11-04T11:58:00Z,2013-11-04T12:31:00Z
u1,2013-11-04T23:50:00Z,2013-11-05T00:10:00Z
u1,2013-11-05T07:59:00Z,2013-11-05T08:30:00Z
"""

EMA_CSV = b"""user_id,ts,level
u1,2013-11-04T10:00:00Z,2
u1,2013-11-04T15:00:00Z,3
u1,2013-11-04T21:00:00Z,3
u1,2013-11-05T10:00:00Z,4
"""

ev = parse_app_events(EVENTS_CSV)
sc = parse_screen_intervals(SCREEN_CSV)
em = parse_ema(EMA_CSV)
print(f"parsed {len(ev.records)} events, {len(sc.records)} screen rows, "
      f"{len(em.records)} self-reports")
for diag in ev.diagnostics + sc.diagnostics + em.diagnostics:
    print(f"  rejected -> {diag}")

screens = normalize_screen_intervals(sc.records)
print(f"\nscreen intervals after merging overlaps/adjacency: "
      f"{len(sc.records)} -> {len(screens)}")

# The youtube event claims 45 minutes but the screen was only on until 08:30;
# the overhang is usage the phone never displayed, so it is cut.
clipped = clip_to_screen_on(ev.records, screens)
total_raw = sum(e.end - e.start for e in ev.records)
total_clip = sum(e.end - e.start for e in clipped)
print(f"clipping events to screen-on time: {total_raw}s claimed -> {total_clip}s kept")

# The midnight-crossing chrome session (23:55-00:05) lands partly on each day.
vectors = extract_daily_features(clipped, default_taxonomy(), tz="UTC")
print(f"\ndaily feature vectors ({len(vectors)} user-days):")
print("  " + " ".join(f"{name:>12}" for name in ["user", "date"] + FEATURE_NAMES))
for v in vectors:
    row = [v.user_id, v.date.isoformat()] + [str(x) for x in v.as_array()]
    print("  " + " ".join(f"{cell:>12}" for cell in row))

labels = aggregate_daily_label(em.records, tz="UTC", reducer="mean")
pairs, report = join_features_labels(vectors, labels)
print(f"\njoined with daily stress labels: {report.n_joined} trainable user-days")
for fv, level in pairs:
    print(f"  {fv.user_id} {fv.date}: features -> stress level {level}")
