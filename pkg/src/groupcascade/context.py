"""Shared derived state for feature extraction and empirical estimators.

Building the friendship graph, membership timelines, cascade trees, and the
demographic category vocabulary once per dataset keeps the per-snapshot
feature calls cheap and guarantees every consumer sees the same category
ordering (feature names must be identical across a dataset).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .cascade import CascadeTree, build_cascade_tree
from .records import Dataset
from .temporal import MembershipTimeline, TemporalFriendGraph

AGE_BIN_YEARS = 5


def age_bin_label(age: int | None) -> str:
    if age is None:
        return "unstated"
    lo = (age // AGE_BIN_YEARS) * AGE_BIN_YEARS
    return f"{lo}_{lo + AGE_BIN_YEARS - 1}"


@dataclass(frozen=True)
class DemographicVocabulary:
    """Category orderings observed in a dataset; 'unstated' is always last."""

    genders: tuple[str, ...]
    age_bins: tuple[str, ...]
    countries: tuple[str, ...]

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "DemographicVocabulary":
        ages = sorted({p.age for p in dataset.profiles.values() if p.age is not None})
        bins = sorted({age_bin_label(a) for a in ages}, key=lambda s: int(s.split("_")[0]))
        countries = sorted({p.country for p in dataset.profiles.values() if p.country})
        return cls(
            genders=("male", "female", "unstated"),
            age_bins=tuple(bins) + ("unstated",),
            countries=tuple(countries) + ("unstated",),
        )


class AnalysisContext:
    """Dataset plus everything derived from it that snapshot queries reuse."""

    def __init__(
        self,
        dataset: Dataset,
        graph: TemporalFriendGraph,
        timeline: MembershipTimeline,
        trees: dict[str, CascadeTree],
        vocab: DemographicVocabulary,
    ):
        self.dataset = dataset
        self.graph = graph
        self.timeline = timeline
        self.trees = trees
        self.vocab = vocab

        self.chat_times: dict[str, dict[str, list[int]]] = {}
        self.group_chat_times: dict[str, list[int]] = {gid: [] for gid in dataset.groups}
        for chat in dataset.chats:  # chats are time-sorted, so these lists are too
            self.chat_times.setdefault(chat.group_id, {}).setdefault(chat.user_id, []).append(chat.time)
            self.group_chat_times[chat.group_id].append(chat.time)

        self.invite_times: dict[str, dict[str, list[int]]] = {}
        for inv in dataset.invitations:
            self.invite_times.setdefault(inv.group_id, {}).setdefault(inv.inviter_id, []).append(inv.time)

        self._setup_triads: dict[str, tuple[int, int]] = {}

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "AnalysisContext":
        graph = TemporalFriendGraph.from_dataset(dataset)
        timeline = MembershipTimeline.from_dataset(dataset)
        by_group: dict[str, list] = {gid: [] for gid in dataset.groups}
        for inv in dataset.invitations:
            by_group[inv.group_id].append(inv)
        trees = {
            gid: build_cascade_tree(group, by_group[gid]) for gid, group in dataset.groups.items()
        }
        return cls(dataset, graph, timeline, trees, DemographicVocabulary.from_dataset(dataset))

    def group_ids(self) -> list[str]:
        return sorted(self.dataset.groups)

    def chats_by_user_until(self, group_id: str, user_id: str, t: int) -> int:
        times = self.chat_times.get(group_id, {}).get(user_id, [])
        return bisect_right(times, t)

    def invitations_by_user_until(self, group_id: str, user_id: str, t: int) -> list[int]:
        times = self.invite_times.get(group_id, {}).get(user_id, [])
        return times[: bisect_right(times, t)]

    def invitations_by_user_in(self, group_id: str, user_id: str, lo: int, hi: int) -> int:
        """Invitations by user_id in the half-open-from-left interval (lo, hi]."""
        times = self.invite_times.get(group_id, {}).get(user_id, [])
        return bisect_right(times, hi) - bisect_right(times, lo)

    def last_chat_time(self, group_id: str) -> int | None:
        times = self.group_chat_times.get(group_id)
        return times[-1] if times else None
