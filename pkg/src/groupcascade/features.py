"""Snapshot feature vectors at group, inviter, and invitee level.

Every extractor takes an absolute time t and only looks at events with
timestamps <= t, so vectors taken early in a group's life never leak later
activity.  Feature names and family tags are fixed per dataset (demographic
categories come from the dataset-wide vocabulary), which downstream training
relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cascade import cascade_summary, node_depths, truncate_tree
from .context import AnalysisContext, DemographicVocabulary, age_bin_label
from .records import UserProfile
from .temporal import MembershipTimeline, TemporalFriendGraph, fringe_at
from .units import DAY_SECONDS, SETUP_OFFSET_SECONDS

STRUCTURE = "structure"
CASCADE = "cascade"
DEMOGRAPHICS = "demographics"
BEHAVIOR = "behavior"
LOCAL_STRUCTURE = "local_structure"

# Thresholds for "how many of my fringe friends have >= k friends inside".
FRINGE_FRIEND_THRESHOLDS = tuple(range(1, 21)) + (30, 40, 50)

ACTIVE_INVITER_WINDOW_SECONDS = 7 * DAY_SECONDS


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: tuple[float, ...]
    families: tuple[str, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.values) == len(self.families)):
            raise ValueError("names, values, families must align")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names")
        for name, value in zip(self.names, self.values):
            if not math.isfinite(value):
                raise ValueError(f"feature {name!r} is not finite: {value}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def concat(self, other: "FeatureVector") -> "FeatureVector":
        return FeatureVector(
            self.names + other.names,
            self.values + other.values,
            self.families + other.families,
        )


class _Builder:
    def __init__(self):
        self.names: list[str] = []
        self.values: list[float] = []
        self.families: list[str] = []

    def add(self, name: str, family: str, value: float) -> None:
        self.names.append(name)
        self.values.append(float(value))
        self.families.append(family)

    def done(self) -> FeatureVector:
        return FeatureVector(tuple(self.names), tuple(self.values), tuple(self.families))


# ---------------------------------------------------------------------------
# structural primitives


def _internal_adjacency(
    members: set[str], graph: TemporalFriendGraph, t: int
) -> dict[str, set[str]]:
    return {m: graph.neighbors_at(m, t) & members for m in members}


def _triangle_counts(adj: dict[str, set[str]]) -> tuple[int, dict[str, int]]:
    """Total triangles and per-node triangle membership counts."""
    per_node = {node: 0 for node in adj}
    total = 0
    for a in adj:
        for b in adj[a]:
            if b <= a:
                continue
            for c in adj[a] & adj[b]:
                if c > b:
                    total += 1
                    per_node[a] += 1
                    per_node[b] += 1
                    per_node[c] += 1
    return total, per_node


def count_triads(node_set: set[str], graph: TemporalFriendGraph, t: int) -> tuple[int, int]:
    """(open, closed) triads among node_set using edges formed by t.

    Open = exactly two of the three possible edges present; closed = all
    three.  Triples with fewer than two edges count as neither.
    """
    adj = _internal_adjacency(set(node_set), graph, t)
    closed, _ = _triangle_counts(adj)
    two_paths = sum(len(nbrs) * (len(nbrs) - 1) // 2 for nbrs in adj.values())
    return two_paths - 3 * closed, closed


def edge_density(node_set: set[str], graph: TemporalFriendGraph, t: int) -> float:
    """Internal edge count over C(n, 2); needs at least two nodes."""
    n = len(node_set)
    if n < 2:
        raise ValueError("edge density needs at least two nodes")
    adj = _internal_adjacency(set(node_set), graph, t)
    edges = sum(len(nbrs) for nbrs in adj.values()) // 2
    return edges / (n * (n - 1) / 2)


def clustering_coefficient(node_set: set[str], graph: TemporalFriendGraph, t: int) -> float:
    """Mean local clustering over all nodes; degree < 2 contributes 0."""
    nodes = set(node_set)
    if not nodes:
        raise ValueError("clustering coefficient of an empty set")
    adj = _internal_adjacency(nodes, graph, t)
    _, per_node = _triangle_counts(adj)
    total = 0.0
    for node in sorted(nodes):  # fixed order keeps float sums reproducible
        degree = len(adj[node])
        if degree >= 2:
            total += per_node[node] / (degree * (degree - 1) / 2)
    return total / len(nodes)


def demographic_entropy(profiles: list[UserProfile], attribute: str) -> float:
    """Shannon entropy (base 2) of one attribute; unstated is its own category."""
    if attribute not in ("gender", "age", "country", "province", "city"):
        raise ValueError(f"unknown attribute {attribute!r}")
    if not profiles:
        raise ValueError("entropy of an empty member list")
    counts: dict[object, int] = {}
    for profile in profiles:
        value = getattr(profile, attribute)
        key = "unstated" if value is None else value
        counts[key] = counts.get(key, 0) + 1
    n = len(profiles)
    # + 0.0 turns the -0.0 a one-category count produces into plain 0.0
    return -sum((c / n) * math.log2(c / n) for c in counts.values() if c) + 0.0


def structural_diversity(
    graph: TemporalFriendGraph,
    timeline: MembershipTimeline,
    user_id: str,
    group_id: str,
    t: int,
) -> tuple[int, int]:
    """(k, components): the user's friend count inside the group at t and the
    number of connected components those friends form among themselves."""
    members = timeline.members_at(group_id, t)
    inside = sorted(graph.neighbors_at(user_id, t) & members)
    k = len(inside)
    if k == 0:
        raise ValueError(f"user {user_id!r} has no friends in group {group_id!r} at {t}")
    index = {node: i for i, node in enumerate(inside)}
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for node in inside:
        for other in graph.neighbors_at(node, t):
            j = index.get(other)
            if j is not None:
                a, b = find(index[node]), find(j)
                if a != b:
                    parent[a] = b
    return k, sum(1 for i in range(k) if find(i) == i)


# ---------------------------------------------------------------------------
# group-level vector


def group_feature_schema(vocab: DemographicVocabulary) -> tuple[tuple[str, ...], tuple[str, ...]]:
    names: list[str] = []
    families: list[str] = []

    def add(name: str, family: str) -> None:
        names.append(name)
        families.append(family)

    for name in (
        "fringe_size",
        "member_fringe_edges",
        "internal_edges",
        "open_triads",
        "closed_triads",
        "open_triads_setup",
        "closed_triads_setup",
        "clustering_coefficient",
    ):
        add(name, STRUCTURE)

    add("member_count", CASCADE)
    for i in range(1, 10):
        add(f"depth_decile_{i}", CASCADE)
    for i in range(1, 10):
        add(f"subtree_decile_{i}", CASCADE)
    for d in range(1, 10):
        add(f"members_at_depth_{d}", CASCADE)
    add("wiener_index", CASCADE)

    for gender in vocab.genders:
        add(f"gender_count_{gender}", DEMOGRAPHICS)
        add(f"gender_frac_{gender}", DEMOGRAPHICS)
    for bin_label in vocab.age_bins:
        add(f"age_count_{bin_label}", DEMOGRAPHICS)
        add(f"age_frac_{bin_label}", DEMOGRAPHICS)
    for country in vocab.countries:
        add(f"country_count_{country}", DEMOGRAPHICS)
        add(f"country_frac_{country}", DEMOGRAPHICS)
    for attribute in ("country", "province", "city", "age", "gender"):
        add(f"entropy_{attribute}", DEMOGRAPHICS)
    return tuple(names), tuple(families)


def group_feature_vector(ctx: AnalysisContext, group_id: str, t: int) -> FeatureVector:
    """Structure, cascade, and demographic features of one group at time t."""
    group = ctx.dataset.groups[group_id]
    if t < group.created_at:
        raise ValueError(f"snapshot at {t} precedes creation of {group_id!r} at {group.created_at}")

    members = ctx.timeline.members_at(group_id, t)
    members_sorted = sorted(members)
    adj = _internal_adjacency(members, ctx.graph, t)
    closed, per_node = _triangle_counts(adj)
    two_paths = sum(len(n) * (len(n) - 1) // 2 for n in adj.values())
    open_triads = two_paths - 3 * closed
    internal_edges = sum(len(n) for n in adj.values()) // 2

    fringe: set[str] = set()
    cross_edges = 0
    for member in members_sorted:
        outside = ctx.graph.neighbors_at(member, t) - members
        cross_edges += len(outside)
        fringe.update(outside)

    clustering = 0.0
    for member in members_sorted:  # fixed order keeps float sums reproducible
        degree = len(adj[member])
        if degree >= 2:
            clustering += per_node[member] / (degree * (degree - 1) / 2)
    clustering /= len(members)

    if group_id not in ctx._setup_triads:
        setup_members = ctx.timeline.members_at(group_id, group.created_at + SETUP_OFFSET_SECONDS)
        ctx._setup_triads[group_id] = count_triads(
            setup_members, ctx.graph, group.created_at + SETUP_OFFSET_SECONDS
        )
    open_setup, closed_setup = ctx._setup_triads[group_id]

    builder = _Builder()
    builder.add("fringe_size", STRUCTURE, len(fringe))
    builder.add("member_fringe_edges", STRUCTURE, cross_edges)
    builder.add("internal_edges", STRUCTURE, internal_edges)
    builder.add("open_triads", STRUCTURE, open_triads)
    builder.add("closed_triads", STRUCTURE, closed)
    builder.add("open_triads_setup", STRUCTURE, open_setup)
    builder.add("closed_triads_setup", STRUCTURE, closed_setup)
    builder.add("clustering_coefficient", STRUCTURE, clustering)

    summary = cascade_summary(truncate_tree(ctx.trees[group_id], t))
    builder.add("member_count", CASCADE, summary.size)
    for i, value in enumerate(summary.depth_deciles, start=1):
        builder.add(f"depth_decile_{i}", CASCADE, value)
    for i, value in enumerate(summary.subtree_deciles, start=1):
        builder.add(f"subtree_decile_{i}", CASCADE, value)
    for d, value in enumerate(summary.depth_counts, start=1):
        builder.add(f"members_at_depth_{d}", CASCADE, value)
    builder.add("wiener_index", CASCADE, summary.wiener)

    profiles = [ctx.dataset.profiles[m] for m in members_sorted]
    n = len(profiles)
    gender_counts = {g: 0 for g in ctx.vocab.genders}
    age_counts = {b: 0 for b in ctx.vocab.age_bins}
    country_counts = {c: 0 for c in ctx.vocab.countries}
    for profile in profiles:
        gender_counts[profile.gender] += 1
        age_counts[age_bin_label(profile.age)] += 1
        country_counts[profile.country if profile.country else "unstated"] += 1
    for gender in ctx.vocab.genders:
        builder.add(f"gender_count_{gender}", DEMOGRAPHICS, gender_counts[gender])
        builder.add(f"gender_frac_{gender}", DEMOGRAPHICS, gender_counts[gender] / n)
    for bin_label in ctx.vocab.age_bins:
        builder.add(f"age_count_{bin_label}", DEMOGRAPHICS, age_counts[bin_label])
        builder.add(f"age_frac_{bin_label}", DEMOGRAPHICS, age_counts[bin_label] / n)
    for country in ctx.vocab.countries:
        builder.add(f"country_count_{country}", DEMOGRAPHICS, country_counts[country])
        builder.add(f"country_frac_{country}", DEMOGRAPHICS, country_counts[country] / n)
    for attribute in ("country", "province", "city", "age", "gender"):
        builder.add(f"entropy_{attribute}", DEMOGRAPHICS, demographic_entropy(profiles, attribute))

    vector = builder.done()
    expected, _ = group_feature_schema(ctx.vocab)
    assert vector.names == expected
    return vector


# ---------------------------------------------------------------------------
# inviter-level vector (the member's own state; group features are concatenated
# separately by the assembly step)


def inviter_feature_schema() -> tuple[tuple[str, ...], tuple[str, ...]]:
    names: list[str] = []
    families: list[str] = []

    def add(name: str, family: str) -> None:
        names.append(name)
        families.append(family)

    for name in ("time_since_join", "time_since_last_invitation", "prior_invitations", "chat_count"):
        add(name, BEHAVIOR)
    for threshold in FRINGE_FRIEND_THRESHOLDS:
        add(f"fringe_friends_min_inside_{threshold}", LOCAL_STRUCTURE)
    for name in (
        "friends_in_group",
        "friends_in_group_frac",
        "friends_outside_group",
        "friends_outside_group_frac",
        "cross_boundary_edges",
        "cross_boundary_edge_ratio",
        "cascade_depth",
    ):
        add(name, LOCAL_STRUCTURE)
    return tuple(names), tuple(families)


def inviter_feature_vector(ctx: AnalysisContext, user_id: str, group_id: str, t: int) -> FeatureVector:
    """Invitation history and ego-network position of one member at time t."""
    join = ctx.timeline.join_time(group_id, user_id)
    if join is None or join > t:
        raise ValueError(f"user {user_id!r} is not a member of {group_id!r} at {t}")
    members = ctx.timeline.members_at(group_id, t)

    # An invitation stamped exactly t counts as past, matching the label
    # interval (t, t + dt] used downstream.
    past_invites = ctx.invitations_by_user_until(group_id, user_id, t)
    since_last = t - past_invites[-1] if past_invites else t - join

    friends = ctx.graph.neighbors_at(user_id, t)
    inside = friends & members
    outside = friends - members
    degree = len(friends)

    threshold_counts = {threshold: 0 for threshold in FRINGE_FRIEND_THRESHOLDS}
    for friend in outside:
        k = len(ctx.graph.neighbors_at(friend, t) & members)
        for threshold in FRINGE_FRIEND_THRESHOLDS:
            if k >= threshold:
                threshold_counts[threshold] += 1

    cross = sum(len(ctx.graph.neighbors_at(v, t) & outside) for v in inside)
    max_cross = len(inside) * len(outside)

    builder = _Builder()
    builder.add("time_since_join", BEHAVIOR, t - join)
    builder.add("time_since_last_invitation", BEHAVIOR, since_last)
    builder.add("prior_invitations", BEHAVIOR, len(past_invites))
    builder.add("chat_count", BEHAVIOR, ctx.chats_by_user_until(group_id, user_id, t))
    for threshold in FRINGE_FRIEND_THRESHOLDS:
        builder.add(f"fringe_friends_min_inside_{threshold}", LOCAL_STRUCTURE, threshold_counts[threshold])
    builder.add("friends_in_group", LOCAL_STRUCTURE, len(inside))
    builder.add("friends_in_group_frac", LOCAL_STRUCTURE, len(inside) / degree if degree else 0.0)
    builder.add("friends_outside_group", LOCAL_STRUCTURE, len(outside))
    builder.add("friends_outside_group_frac", LOCAL_STRUCTURE, len(outside) / degree if degree else 0.0)
    builder.add("cross_boundary_edges", LOCAL_STRUCTURE, cross)
    builder.add("cross_boundary_edge_ratio", LOCAL_STRUCTURE, cross / max_cross if max_cross else 0.0)
    builder.add("cascade_depth", LOCAL_STRUCTURE, node_depths(ctx.trees[group_id])[user_id])

    vector = builder.done()
    expected, _ = inviter_feature_schema()
    assert vector.names == expected
    return vector


# ---------------------------------------------------------------------------
# invitee-level vector (a fringe user who might join)


def invitee_feature_schema(vocab: DemographicVocabulary) -> tuple[tuple[str, ...], tuple[str, ...]]:
    names: list[str] = []
    families: list[str] = []

    def add(name: str, family: str) -> None:
        names.append(name)
        families.append(family)

    for gender in vocab.genders:
        add(f"candidate_gender_{gender}", DEMOGRAPHICS)
    for bin_label in vocab.age_bins:
        add(f"candidate_age_{bin_label}", DEMOGRAPHICS)
    for country in vocab.countries:
        add(f"candidate_country_{country}", DEMOGRAPHICS)
    add("candidate_province_stated", DEMOGRAPHICS)
    add("candidate_city_stated", DEMOGRAPHICS)
    for attribute in ("gender", "age", "country", "province", "city"):
        add(f"members_sharing_{attribute}_frac", DEMOGRAPHICS)
    for name in ("friends_in_group", "active_inviter_friends", "friend_components"):
        add(name, LOCAL_STRUCTURE)
    return tuple(names), tuple(families)


def invitee_feature_vector(ctx: AnalysisContext, user_id: str, group_id: str, t: int) -> FeatureVector:
    """Demographics and in-group friend structure of a fringe user at time t."""
    members = ctx.timeline.members_at(group_id, t)
    if user_id in members:
        raise ValueError(f"user {user_id!r} is already a member of {group_id!r} at {t}")
    inside = ctx.graph.neighbors_at(user_id, t) & members
    if not inside:
        raise ValueError(f"user {user_id!r} is not in the fringe of {group_id!r} at {t}")

    profile = ctx.dataset.profiles[user_id]
    member_profiles = [ctx.dataset.profiles[m] for m in members]
    n = len(member_profiles)

    builder = _Builder()
    for gender in ctx.vocab.genders:
        builder.add(f"candidate_gender_{gender}", DEMOGRAPHICS, 1.0 if profile.gender == gender else 0.0)
    candidate_bin = age_bin_label(profile.age)
    for bin_label in ctx.vocab.age_bins:
        builder.add(f"candidate_age_{bin_label}", DEMOGRAPHICS, 1.0 if candidate_bin == bin_label else 0.0)
    candidate_country = profile.country if profile.country else "unstated"
    for country in ctx.vocab.countries:
        builder.add(f"candidate_country_{country}", DEMOGRAPHICS, 1.0 if candidate_country == country else 0.0)
    builder.add("candidate_province_stated", DEMOGRAPHICS, 0.0 if profile.province is None else 1.0)
    builder.add("candidate_city_stated", DEMOGRAPHICS, 0.0 if profile.city is None else 1.0)
    # Shared-attribute fractions match raw values; unstated matches unstated.
    for attribute in ("gender", "age", "country", "province", "city"):
        own = getattr(profile, attribute)
        share = sum(1 for p in member_profiles if getattr(p, attribute) == own)
        builder.add(f"members_sharing_{attribute}_frac", DEMOGRAPHICS, share / n)

    window_start = t - ACTIVE_INVITER_WINDOW_SECONDS
    active = sum(
        1 for friend in inside if ctx.invitations_by_user_in(group_id, friend, window_start, t) > 0
    )
    k, components = structural_diversity(ctx.graph, ctx.timeline, user_id, group_id, t)

    builder.add("friends_in_group", LOCAL_STRUCTURE, k)
    builder.add("active_inviter_friends", LOCAL_STRUCTURE, active)
    builder.add("friend_components", LOCAL_STRUCTURE, components)

    vector = builder.done()
    expected, _ = invitee_feature_schema(ctx.vocab)
    assert vector.names == expected
    return vector
