"""Calendar helpers shared by corpus loading, panels and regressions."""
from __future__ import annotations

import datetime as dt
import re

_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})\s*$")


def month_index_of(date: dt.date) -> int:
    """Months since year 0; monotone in ``date``."""
    return date.year * 12 + (date.month - 1)


def month_label(index: int) -> str:
    year, m = divmod(index, 12)
    return f"{year:04d}-{m + 1:02d}"


def parse_month(label: str) -> int:
    """Inverse of :func:`month_label`. Also accepts ``YYYY-MM-DD``."""
    m = _MONTH_RE.match(label)
    if m:
        year, month = int(m.group(1)), int(m.group(2))
        if not 1 <= month <= 12:
            raise ValueError(f"bad month: {label!r}")
        return year * 12 + month - 1
    return month_index_of(dt.date.fromisoformat(label.strip()))


def parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())
