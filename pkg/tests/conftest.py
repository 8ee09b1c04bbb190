"""Shared fixtures: the hand-computed 10-event feature fixture.

The event table below is the reference oracle for daily feature
extraction. Expected values are derived by hand, not by running the
library:

day 2013-11-04 (UTC)
  chrome   09:00-09:10          600 s  browser
  email    09:20-09:30 -> clipped to 09:25 by the first screen interval,
                                 300 s  browser
  chrome   10:00-10:05          300 s  browser
  facebook 11:00-11:02:30       150 s  social
  candycrushsaga 12:00-12:30   1800 s  game
  youtube  13:00-13:20         1200 s  entertainment
  calendar 14:00-14:04          240 s  utility
  youtube  23:50-(next)00:20 -> split at midnight: 600 s today
day 2013-11-05
  youtube (continued)          1200 s  entertainment
  whatsapp 08:00-08:01           60 s  social
  mysteryapp 09:00-09:07        420 s  unknown (unique count only)
"""

from __future__ import annotations

from datetime import date

import pytest

from appstress.features import DailyFeatureVector

TEN_EVENTS_CSV = (
    "user_id,app_id,start_ts,end_ts\n"
    "u1,chrome,2013-11-04T09:00:00Z,2013-11-04T09:10:00Z\n"
    "u1,email,2013-11-04T09:20:00Z,2013-11-04T09:30:00Z\n"
    "u1,chrome,2013-11-04T10:00:00Z,2013-11-04T10:05:00Z\n"
    "u1,facebook,2013-11-04T11:00:00Z,2013-11-04T11:02:30Z\n"
    "u1,candycrushsaga,2013-11-04T12:00:00Z,2013-11-04T12:30:00Z\n"
    "u1,youtube,2013-11-04T13:00:00Z,2013-11-04T13:20:00Z\n"
    "u1,calendar,2013-11-04T14:00:00Z,2013-11-04T14:04:00Z\n"
    "u1,youtube,2013-11-04T23:50:00Z,2013-11-05T00:20:00Z\n"
    "u1,whatsapp,2013-11-05T08:00:00Z,2013-11-05T08:01:00Z\n"
    "u1,mysteryapp,2013-11-05T09:00:00Z,2013-11-05T09:07:00Z\n"
)

TEN_EVENTS_SCREEN_CSV = (
    "user_id,start_ts,end_ts\n"
    "u1,2013-11-04T08:00:00Z,2013-11-04T09:25:00Z\n"
    "u1,2013-11-04T10:00:00Z,2013-11-05T23:00:00Z\n"
)

TEN_EVENTS_EXPECTED = [
    DailyFeatureVector(
        user_id="u1",
        date=date(2013, 11, 4),
        freq_ent=2,
        freq_social=1,
        freq_game=1,
        freq_utility=1,
        freq_browser=3,
        time_ent=1800,
        time_social=150,
        time_game=1800,
        time_utility=240,
        time_browser=1200,
        unique_app_count=6,
    ),
    DailyFeatureVector(
        user_id="u1",
        date=date(2013, 11, 5),
        freq_ent=1,
        freq_social=1,
        freq_game=0,
        freq_utility=0,
        freq_browser=0,
        time_ent=1200,
        time_social=60,
        time_game=0,
        time_utility=0,
        time_browser=0,
        unique_app_count=3,
    ),
]


@pytest.fixture
def ten_event_fixture() -> tuple[bytes, bytes, list[DailyFeatureVector]]:
    return TEN_EVENTS_CSV.encode(), TEN_EVENTS_SCREEN_CSV.encode(), TEN_EVENTS_EXPECTED
