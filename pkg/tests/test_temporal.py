"""Snapshot semantics of the friendship graph and membership timeline."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build
from groupcascade.temporal import (
    FOUNDING,
    INVITED,
    MembershipTimeline,
    TemporalFriendGraph,
    fringe_at,
)


@pytest.fixture()
def dataset():
    return build(
        groups=[("g1", "a", 100, ("a", "b", "c"))],
        invitations=[("a", "d", "g1", 400), ("d", "e", "g1", 900)],
        friendships=[("a", "b", 0), ("a", "c", 0), ("b", "c", 0),
                     ("a", "d", 10), ("d", "e", 20), ("c", "f", 30)],
        chats=[("a", "g1", 100 + i) for i in range(5)],
        window=(0, 2000),
    )


class TestTemporalFriendGraph:
    def test_edge_visible_from_formation_time_inclusive(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        assert "d" not in graph.neighbors_at("a", 9)
        assert "d" in graph.neighbors_at("a", 10)
        assert graph.has_edge_at("a", "d", 10)
        assert not graph.has_edge_at("a", "d", 9)

    def test_degree_counts_only_formed_edges(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        assert graph.degree_at("a", 0) == 2
        assert graph.degree_at("a", 50) == 3

    def test_unknown_user_raises(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        with pytest.raises(KeyError):
            graph.neighbors_at("zz", 100)

    def test_isolated_user_has_no_neighbors(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        # g is only in the profile table via explicit users list
        graph2 = TemporalFriendGraph.from_edges([], ["lonely"])
        assert graph2.neighbors_at("lonely", 100) == set()

    def test_from_edges_matches_from_dataset(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        edges = [(f.user_a, f.user_b, f.time) for f in dataset.friendships]
        other = TemporalFriendGraph.from_edges(edges, list(dataset.profiles))
        for user in dataset.profiles:
            assert graph.neighbors_at(user, 500) == other.neighbors_at(user, 500)


class TestMembershipTimeline:
    def test_founders_join_at_creation(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        assert timeline.members_at("g1", 100) == {"a", "b", "c"}
        assert timeline.join_time("g1", "b") == 100
        assert timeline.joined_via("g1", "b") == FOUNDING

    def test_query_before_creation_raises(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        with pytest.raises(ValueError):
            timeline.members_at("g1", 99)

    def test_invited_members_appear_at_invitation_time(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        assert "d" not in timeline.members_at("g1", 399)
        assert "d" in timeline.members_at("g1", 400)
        assert timeline.joined_via("g1", "d") == INVITED
        assert timeline.join_time("g1", "e") == 900

    def test_membership_is_monotone(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        previous = set()
        for t in range(100, 1100, 50):
            current = timeline.members_at("g1", t)
            assert previous <= current
            previous = current

    def test_member_count_and_members_ever(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        assert timeline.member_count_at("g1", 100) == 3
        assert timeline.member_count_at("g1", 1000) == 5
        assert timeline.members_ever("g1") == ["a", "b", "c", "d", "e"]

    def test_join_time_for_nonmember_is_none(self, dataset):
        timeline = MembershipTimeline.from_dataset(dataset)
        assert timeline.join_time("g1", "f") is None


class TestFringe:
    def test_fringe_is_outside_friends_of_members(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        timeline = MembershipTimeline.from_dataset(dataset)
        # at t=200 members are a,b,c; their friends include d (via a) and f (via c)
        assert fringe_at(graph, timeline, "g1", 200) == {"d", "f"}
        # once d joins, e enters the fringe through d
        assert fringe_at(graph, timeline, "g1", 450) == {"e", "f"}
        # after e joins only f remains
        assert fringe_at(graph, timeline, "g1", 950) == {"f"}

    def test_fringe_never_contains_members(self, dataset):
        graph = TemporalFriendGraph.from_dataset(dataset)
        timeline = MembershipTimeline.from_dataset(dataset)
        for t in range(100, 1500, 100):
            assert not (fringe_at(graph, timeline, "g1", t)
                        & timeline.members_at("g1", t))


@settings(max_examples=60, deadline=None)
@given(
    edges=st.lists(
        st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 100)),
        max_size=20,
    ),
    t=st.integers(0, 100),
)
def test_snapshot_equals_filtered_static_graph(edges, t):
    """A time-t snapshot equals the static graph over edges formed by t."""
    users = [f"n{i}" for i in range(7)]
    named = [(f"n{a}", f"n{b}", w) for a, b, w in edges if a != b]
    graph = TemporalFriendGraph.from_edges(named, users)
    for user in users:
        expected = {b for a, b, w in named if a == user and w <= t}
        expected |= {a for a, b, w in named if b == user and w <= t}
        assert graph.neighbors_at(user, t) == expected
