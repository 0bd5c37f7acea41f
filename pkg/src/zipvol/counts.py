"""Weekly count series and the zero-inflated Poisson observation density."""

from __future__ import annotations

import datetime as dt
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

_WEEK_RE = re.compile(r"^(\d{4})-W(\d{2})$")


def _week_to_monday(label: str) -> dt.date:
    """Parse a week label (``2015-W40`` or the Monday's ISO date)."""
    m = _WEEK_RE.match(label)
    if m:
        year, week = int(m.group(1)), int(m.group(2))
        try:
            return dt.date.fromisocalendar(year, week, 1)
        except ValueError as exc:
            raise ValueError(f"invalid ISO week label {label!r}: {exc}") from None
    try:
        day = dt.date.fromisoformat(label)
    except ValueError:
        raise ValueError(
            f"invalid week label {label!r}: expected YYYY-Www or an ISO date"
        ) from None
    if day.isoweekday() != 1:
        raise ValueError(f"date label {label!r} is not a Monday")
    return day


def _monday_to_week(day: dt.date) -> str:
    year, week, _ = day.isocalendar()
    return f"{year}-W{week:02d}"


def week_labels(start: str, n: int) -> list[str]:
    """``n`` consecutive week labels beginning at ``start``."""
    day = _week_to_monday(start)
    return [_monday_to_week(day + dt.timedelta(weeks=i)) for i in range(n)]


def next_week(label: str) -> str:
    """Label of the calendar week following ``label``."""
    return _monday_to_week(_week_to_monday(label) + dt.timedelta(weeks=1))


def week_from_date(day: dt.date) -> str:
    """ISO week label of the week containing ``day``."""
    year, week, _ = day.isocalendar()
    return f"{year}-W{week:02d}"


@dataclass
class CountSeries:
    """Ordered weekly non-negative counts with ISO-week labels.

    Labels must be strictly increasing and weekly-consecutive; counts must be
    non-negative integers.  Both are validated on construction.
    """

    labels: list[str]
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if len(self.labels) != self.counts.size:
            raise ValueError("labels and counts differ in length")
        if self.counts.size < 2:
            raise ValueError("series must contain at least 2 observations")
        if np.any(self.counts < 0):
            bad = int(np.argmax(self.counts < 0))
            raise ValueError(f"negative count at row {bad + 1} ({self.labels[bad]})")
        mondays = [_week_to_monday(lab) for lab in self.labels]
        missing = []
        for prev, cur in zip(mondays, mondays[1:]):
            gap = (cur - prev).days
            if gap <= 0:
                raise ValueError("labels must be strictly increasing")
            step = prev + dt.timedelta(weeks=1)
            while step < cur:
                missing.append(_monday_to_week(step))
                step += dt.timedelta(weeks=1)
        if missing:
            raise ValueError("gap in weekly labels, missing: " + ", ".join(missing))
        self.labels = [_monday_to_week(d) for d in mondays]

    @property
    def T(self) -> int:
        return self.counts.size

    def slice(self, start: int, stop: int) -> "CountSeries":
        return CountSeries(self.labels[start:stop], self.counts[start:stop].copy())

    def __len__(self) -> int:
        return self.counts.size


@dataclass
class ZipParams:
    """Log-intensity and sampling-path probability of the ZIP mixture."""

    z: float
    pi: float

    def __post_init__(self):
        if not np.isfinite(self.z):
            raise ValueError("invalid log-intensity")
        if not 0.0 < self.pi < 1.0:
            raise ValueError("pi must lie strictly inside (0, 1)")


def poisson_log_pmf(y, z):
    """Log pmf of a Poisson count with log-intensity ``z``.

    Vectorized over both arguments; raises on non-finite ``z`` or negative
    ``y``.
    """
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("invalid log-intensity")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    out = y * z - np.exp(z) - gammaln(y + 1.0)
    return out if out.ndim else float(out)


def zip_log_pmf(y, z, pi):
    """Log pmf of the zero-inflated Poisson mixture.

    For ``y = 0`` the structural-zero and sampling-zero branches are combined
    with a two-term log-sum-exp so that neither underflows; for ``y >= 1``
    the result is ``log(pi)`` plus the Poisson term.
    """
    y = np.asarray(y, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    if np.any((pi < 0.0) | (pi > 1.0)):
        raise ValueError("pi must lie in [0, 1]")
    y, z, pi = np.broadcast_arrays(y, z, pi)
    with np.errstate(divide="ignore", over="ignore"):
        log_pi = np.log(pi)
        log_one_minus_pi = np.log1p(-pi)
        lam = np.exp(z)
        zero_branch = np.logaddexp(log_one_minus_pi, log_pi - lam)
        pos_branch = log_pi + (y * z - lam - gammaln(y + 1.0))
    out = np.where(y == 0, zero_branch, pos_branch)
    return out if out.ndim else float(out)


# numpy's Poisson sampler rejects rates above roughly 9.2e18; explosive
# latent paths can exceed that long before the chain itself fails
POISSON_NORMAL_APPROX = 1e9
POISSON_RATE_CAP = 1e15


def safe_poisson(rng: np.random.Generator, lam: float) -> int:
    """Poisson draw that stays usable for extreme rates.

    Rates above ``POISSON_NORMAL_APPROX`` switch to the normal approximation
    (relative error is negligible there) and are capped at
    ``POISSON_RATE_CAP`` so a diverging intensity cannot overflow the draw.
    """
    lam = float(lam)
    if not lam > 0.0:  # also catches nan
        return 0
    lam = min(lam, POISSON_RATE_CAP)
    if lam > POISSON_NORMAL_APPROX:
        return max(0, int(round(rng.normal(lam, math.sqrt(lam)))))
    return int(rng.poisson(lam))
