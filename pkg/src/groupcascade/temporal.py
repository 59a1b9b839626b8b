"""Snapshot queries over the friendship graph and group membership timelines.

Both structures replay append-only event streams: friendships carry their
formation time and are never removed, and membership is monotone (members
never leave within the observation window).  Every query at time t uses the
inclusive convention: an edge or membership formed exactly at t counts.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .records import Dataset

FOUNDING = "founding"
INVITED = "invited"


class TemporalFriendGraph:
    """Per-user adjacency with edge formation times.

    Neighbor lists are sorted by neighbor id; queries filter by time on the
    fly, which is cheap at the degrees this package works with.
    """

    def __init__(self, adjacency: dict[str, list[tuple[str, int]]]):
        self._adj = adjacency
        self._edge_time = {}
        for user, neighbors in adjacency.items():
            for other, t in neighbors:
                if user < other:
                    self._edge_time[(user, other)] = t

    @classmethod
    def from_edges(cls, edges, users=()) -> "TemporalFriendGraph":
        """Build from (user_a, user_b, time) triples; `users` adds isolated nodes."""
        adjacency: dict[str, list[tuple[str, int]]] = {u: [] for u in users}
        for a, b, t in edges:
            adjacency.setdefault(a, []).append((b, t))
            adjacency.setdefault(b, []).append((a, t))
        for neighbors in adjacency.values():
            neighbors.sort()
        return cls(adjacency)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "TemporalFriendGraph":
        return cls.from_edges(
            ((f.user_a, f.user_b, f.time) for f in dataset.friendships),
            users=dataset.profiles.keys(),
        )

    def users(self) -> list[str]:
        return sorted(self._adj)

    def _neighbors(self, user_id: str) -> list[tuple[str, int]]:
        try:
            return self._adj[user_id]
        except KeyError:
            raise KeyError(f"unknown user {user_id!r}") from None

    def neighbors_at(self, user_id: str, t: int) -> set[str]:
        """Friends whose edge formed at or before t."""
        return {other for other, formed in self._neighbors(user_id) if formed <= t}

    def degree_at(self, user_id: str, t: int) -> int:
        return sum(1 for _, formed in self._neighbors(user_id) if formed <= t)

    def has_edge_at(self, u: str, v: str, t: int) -> bool:
        if u == v:
            return False
        a, b = (u, v) if u < v else (v, u)
        formed = self._edge_time.get((a, b))
        return formed is not None and formed <= t


@dataclass
class _GroupTimeline:
    created_at: int
    join_times: list[int]          # sorted, parallel to joiners
    joiners: list[str]
    join_of: dict[str, int]
    via: dict[str, str]


class MembershipTimeline:
    """Join events per group: founders at created_at, invitees at invitation time."""

    def __init__(self, timelines: dict[str, _GroupTimeline]):
        self._groups = timelines

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "MembershipTimeline":
        events: dict[str, list[tuple[int, str, str]]] = {}
        for gid, group in dataset.groups.items():
            events[gid] = [(group.created_at, member, FOUNDING) for member in group.founding_members]
        for inv in dataset.invitations:
            events[inv.group_id].append((inv.time, inv.invitee_id, INVITED))

        timelines = {}
        for gid, group_events in events.items():
            group_events.sort(key=lambda e: (e[0], e[1]))
            timelines[gid] = _GroupTimeline(
                created_at=dataset.groups[gid].created_at,
                join_times=[t for t, _, _ in group_events],
                joiners=[user for _, user, _ in group_events],
                join_of={user: t for t, user, _ in group_events},
                via={user: via for _, user, via in group_events},
            )
        return cls(timelines)

    def group_ids(self) -> list[str]:
        return sorted(self._groups)

    def _timeline(self, group_id: str) -> _GroupTimeline:
        try:
            return self._groups[group_id]
        except KeyError:
            raise KeyError(f"unknown group {group_id!r}") from None

    def created_at(self, group_id: str) -> int:
        return self._timeline(group_id).created_at

    def members_at(self, group_id: str, t: int) -> set[str]:
        """Members as of t (inclusive); t before creation is an error."""
        timeline = self._timeline(group_id)
        if t < timeline.created_at:
            raise ValueError(
                f"group {group_id!r} queried at {t}, before creation at {timeline.created_at}"
            )
        cut = bisect_right(timeline.join_times, t)
        return set(timeline.joiners[:cut])

    def member_count_at(self, group_id: str, t: int) -> int:
        timeline = self._timeline(group_id)
        if t < timeline.created_at:
            raise ValueError(
                f"group {group_id!r} queried at {t}, before creation at {timeline.created_at}"
            )
        return bisect_right(timeline.join_times, t)

    def join_time(self, group_id: str, user_id: str) -> int | None:
        return self._timeline(group_id).join_of.get(user_id)

    def joined_via(self, group_id: str, user_id: str) -> str | None:
        return self._timeline(group_id).via.get(user_id)

    def members_ever(self, group_id: str) -> list[str]:
        """All members in join order (ties by id)."""
        return list(self._timeline(group_id).joiners)


def fringe_at(
    graph: TemporalFriendGraph, timeline: MembershipTimeline, group_id: str, t: int
) -> set[str]:
    """Non-members with at least one friend inside the group at time t."""
    members = timeline.members_at(group_id, t)
    fringe: set[str] = set()
    for member in members:
        fringe.update(graph.neighbors_at(member, t))
    return fringe - members
