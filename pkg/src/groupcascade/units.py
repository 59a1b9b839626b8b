"""Time constants shared across the package.

All event times are integer seconds since a fixed epoch.  A "month" is the
30-day convention used for feature snapshots and sampling windows.
"""

MINUTE_SECONDS = 60
HOUR_SECONDS = 3600
DAY_SECONDS = 86_400
MONTH_SECONDS = 30 * DAY_SECONDS

# Snapshot taken shortly after creation, once founding members are in place.
SETUP_OFFSET_SECONDS = 600
