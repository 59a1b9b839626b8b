"""Empirical lifecycle and adoption estimators.

Lifespan is measured as the gap between group creation and its last chat;
groups still chatting in the final day of the observation window are flagged
as censored because their true lifespan is cut off.  Adoption curves compare
two membership snapshots a fixed gap apart and carry Wilson score intervals,
which behave sensibly for the small counts that show up in the tail bins.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.stats import norm

from .context import AnalysisContext
from .features import structural_diversity
from .temporal import INVITED, fringe_at
from .units import DAY_SECONDS

DEFAULT_SNAPSHOT_GAP_SECONDS = 10 * DAY_SECONDS
SHORT_MAX_DAYS = 5.0
LONG_MIN_DAYS = 25.0
CENSOR_MARGIN_SECONDS = DAY_SECONDS

# Friend-count strata for diversity curves: exact 2..5, then 6-10, then >10.
DEFAULT_K_BUCKETS: tuple[tuple[int, int | None], ...] = (
    (2, 2),
    (3, 3),
    (4, 4),
    (5, 5),
    (6, 10),
    (11, None),
)


@dataclass(frozen=True)
class LifespanRecord:
    group_id: str
    lifespan_seconds: int
    censored: bool


@dataclass
class EmpiricalCurve:
    """y over x with per-bin sample counts and a 95% confidence band."""

    x: list[float]
    y: list[float]
    counts: list[int]
    ci_low: list[float]
    ci_high: list[float]

    def rows(self) -> list[tuple[float, float, int, float, float]]:
        return list(zip(self.x, self.y, self.counts, self.ci_low, self.ci_high))


def wilson_interval(successes: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise ValueError("wilson interval needs at least one sample")
    if not 0 <= successes <= total:
        raise ValueError("successes outside [0, total]")
    z = norm.ppf((1 + confidence) / 2)
    p = successes / total
    denom = 1 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = (z / denom) * ((p * (1 - p) / total + z * z / (4 * total * total)) ** 0.5)
    # the bound is exact at the extremes; don't let rounding pull it inward
    low = 0.0 if successes == 0 else max(0.0, center - half)
    high = 1.0 if successes == total else min(1.0, center + half)
    return low, high


# ---------------------------------------------------------------------------
# lifespans and labels


def group_lifespan(ctx: AnalysisContext, group_id: str) -> LifespanRecord:
    """Last chat minus creation; cleaned datasets always have chats, but a
    chatless group degrades to lifespan 0."""
    created = ctx.dataset.groups[group_id].created_at
    last = ctx.last_chat_time(group_id)
    if last is None:
        last = created
    _, window_end = ctx.dataset.window
    return LifespanRecord(
        group_id=group_id,
        lifespan_seconds=last - created,
        censored=(window_end - last) <= CENSOR_MARGIN_SECONDS,
    )


def all_lifespans(ctx: AnalysisContext) -> list[LifespanRecord]:
    return [group_lifespan(ctx, gid) for gid in ctx.group_ids()]


def lifecycle_labels(
    records: list[LifespanRecord],
    short_max_days: float = SHORT_MAX_DAYS,
    long_min_days: float = LONG_MIN_DAYS,
) -> dict[str, str]:
    """Dichotomy labels: short / long / unlabeled.

    Censored groups are excluded from the short label only; a censored group
    may still have died later, but it certainly lived at least as long as
    observed, so a long label stands.
    """
    labels = {}
    for record in records:
        days = record.lifespan_seconds / DAY_SECONDS
        if days > long_min_days:
            labels[record.group_id] = "long"
        elif days < short_max_days and not record.censored:
            labels[record.group_id] = "short"
        else:
            labels[record.group_id] = "unlabeled"
    return labels


def lifespan_histogram(records: list[LifespanRecord], bin_days: int = 1) -> list[tuple[int, int]]:
    """(day_bin, count) rows; bin d covers [d, d + bin_days) days."""
    counts: dict[int, int] = {}
    for record in records:
        day = int(record.lifespan_seconds // (bin_days * DAY_SECONDS)) * bin_days
        counts[day] = counts.get(day, 0) + 1
    return sorted(counts.items())


# ---------------------------------------------------------------------------
# invitation timing


@dataclass(frozen=True)
class InvitationTiming:
    first_latency: int | None       # join -> own first invitation, invited joiners only
    intervals: tuple[int, ...]      # gaps between the member's consecutive invitations


def latency_and_intervals(ctx: AnalysisContext, group_id: str) -> dict[str, InvitationTiming]:
    timings = {}
    for member in ctx.timeline.members_ever(group_id):
        invites = ctx.invite_times.get(group_id, {}).get(member, [])
        latency = None
        if invites and ctx.timeline.joined_via(group_id, member) == INVITED:
            latency = invites[0] - ctx.timeline.join_time(group_id, member)
        intervals = tuple(b - a for a, b in zip(invites, invites[1:]))
        timings[member] = InvitationTiming(latency, intervals)
    return timings


def first_latencies(ctx: AnalysisContext) -> list[int]:
    values = []
    for gid in ctx.group_ids():
        for timing in latency_and_intervals(ctx, gid).values():
            if timing.first_latency is not None:
                values.append(timing.first_latency)
    return values


def invitation_intervals(ctx: AnalysisContext) -> list[int]:
    values = []
    for gid in ctx.group_ids():
        for timing in latency_and_intervals(ctx, gid).values():
            values.extend(timing.intervals)
    return values


def empirical_cdf(values: list[float]) -> EmpiricalCurve:
    """CDF over the observed support with Wilson bands on each cumulative
    fraction (a fraction of n samples is itself a binomial proportion)."""
    if not values:
        raise ValueError("empirical cdf of no samples")
    ordered = sorted(values)
    n = len(ordered)
    xs: list[float] = []
    per_bin: list[int] = []
    for value in ordered:
        if xs and xs[-1] == value:
            per_bin[-1] += 1
        else:
            xs.append(float(value))
            per_bin.append(1)
    curve = EmpiricalCurve([], [], [], [], [])
    cumulative = 0
    for x, count in zip(xs, per_bin):
        cumulative += count
        low, high = wilson_interval(cumulative, n)
        curve.x.append(x)
        curve.y.append(cumulative / n)
        curve.counts.append(count)
        curve.ci_low.append(low)
        curve.ci_high.append(high)
    return curve


# ---------------------------------------------------------------------------
# adoption curves


def _adoption_tuples(ctx: AnalysisContext, t1: int, gap: int, with_components: bool):
    """(k, components, joined) per fringe user per group at snapshot t1."""
    start, end = ctx.dataset.window
    if not (start <= t1 and t1 + gap <= end):
        raise ValueError(f"snapshots {t1} and {t1 + gap} must lie inside the window {ctx.dataset.window}")
    for gid in ctx.group_ids():
        if ctx.timeline.created_at(gid) > t1:
            continue
        members_now = ctx.timeline.members_at(gid, t1)
        members_later = ctx.timeline.members_at(gid, t1 + gap)
        for user in sorted(fringe_at(ctx.graph, ctx.timeline, gid, t1)):
            k = len(ctx.graph.neighbors_at(user, t1) & members_now)
            components = 0
            if with_components:
                _, components = structural_diversity(ctx.graph, ctx.timeline, user, gid, t1)
            yield k, components, user in members_later


def adoption_curve(
    ctx: AnalysisContext, t1: int, gap: int = DEFAULT_SNAPSHOT_GAP_SECONDS
) -> EmpiricalCurve:
    """P(fringe user with k in-group friends at t1 joins by t1 + gap), by k."""
    totals: dict[int, int] = {}
    joins: dict[int, int] = {}
    for k, _, joined in _adoption_tuples(ctx, t1, gap, with_components=False):
        totals[k] = totals.get(k, 0) + 1
        if joined:
            joins[k] = joins.get(k, 0) + 1
    curve = EmpiricalCurve([], [], [], [], [])
    for k in sorted(totals):
        n = totals[k]
        s = joins.get(k, 0)
        low, high = wilson_interval(s, n)
        curve.x.append(float(k))
        curve.y.append(s / n)
        curve.counts.append(n)
        curve.ci_low.append(low)
        curve.ci_high.append(high)
    return curve


def bucket_label(bucket: tuple[int, int | None]) -> str:
    lo, hi = bucket
    if hi is None:
        return f"gt{lo - 1}"
    if lo == hi:
        return str(lo)
    return f"{lo}-{hi}"


def diversity_curve(
    ctx: AnalysisContext,
    t1: int,
    gap: int = DEFAULT_SNAPSHOT_GAP_SECONDS,
    k_buckets: tuple[tuple[int, int | None], ...] = DEFAULT_K_BUCKETS,
) -> dict[str, EmpiricalCurve]:
    """Join probability versus friend-component count, one curve per k stratum."""
    totals: dict[tuple[str, int], int] = {}
    joins: dict[tuple[str, int], int] = {}
    labels = [bucket_label(b) for b in k_buckets]
    for k, components, joined in _adoption_tuples(ctx, t1, gap, with_components=True):
        for bucket, label in zip(k_buckets, labels):
            lo, hi = bucket
            if k >= lo and (hi is None or k <= hi):
                key = (label, components)
                totals[key] = totals.get(key, 0) + 1
                if joined:
                    joins[key] = joins.get(key, 0) + 1
                break
    curves: dict[str, EmpiricalCurve] = {}
    for label in labels:
        curve = EmpiricalCurve([], [], [], [], [])
        for key in sorted((k for k in totals if k[0] == label), key=lambda k: k[1]):
            n = totals[key]
            s = joins.get(key, 0)
            low, high = wilson_interval(s, n)
            curve.x.append(float(key[1]))
            curve.y.append(s / n)
            curve.counts.append(n)
            curve.ci_low.append(low)
            curve.ci_high.append(high)
        if curve.x:
            curves[label] = curve
    return curves
