"""
Timezone utility functions for consistent UTC handling.

This module provides a single source of truth for timezone operations:
- All ingested timestamps are normalised to timezone-aware UTC
- Daily bucketing uses the UTC calendar date
- Clock-time features may be read on a fixed UTC offset
"""

import sys
from datetime import date, datetime, time
from typing import Union

import pytz

UTC_TZ = pytz.UTC


def to_utc(dt: datetime) -> datetime:
    """
    Normalise a datetime to timezone-aware UTC.

    Args:
        dt: datetime (timezone-aware or naive)

    Returns:
        datetime: UTC time, timezone-aware. Naive input is assumed to be UTC.
    """
    if dt.tzinfo is None:
        return UTC_TZ.localize(dt)
    return dt.astimezone(UTC_TZ)


def parse_timestamp(value: Union[str, datetime]) -> datetime:
    """
    Parse an ISO-8601 timestamp into timezone-aware UTC.

    Accepts a trailing 'Z'. Raises ValueError on unparseable input.
    """
    if isinstance(value, datetime):
        return to_utc(value)
    if not isinstance(value, str) or not value.strip():
        raise ValueError(f"timestamp must be a nonempty ISO-8601 string, got {value!r}")
    value = value.strip()
    if sys.version_info < (3, 11) and value[-1:] in ("Z", "z"):
        # Python < 3.11 fromisoformat does not accept a trailing 'Z'
        value = value[:-1] + "+00:00"
    return to_utc(datetime.fromisoformat(value))


def offset_timezone(minutes: int):
    """
    Get a fixed-offset timezone.

    Args:
        minutes: offset from UTC in minutes (e.g. 60 for UTC+1)

    Returns:
        pytz timezone object (UTC itself for a zero offset)
    """
    if minutes == 0:
        return UTC_TZ
    return pytz.FixedOffset(minutes)


def clock_time(dt: datetime, utc_offset_minutes: int = 0) -> time:
    """Wall-clock time of `dt` on a fixed UTC offset."""
    return to_utc(dt).astimezone(offset_timezone(utc_offset_minutes)).time()


def utc_date(dt: datetime) -> date:
    """Calendar date of `dt` in UTC."""
    return to_utc(dt).date()
