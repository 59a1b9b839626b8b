"""Feature extractors against hand-computed values and exhaustive oracles."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import build
from groupcascade.context import AnalysisContext, DemographicVocabulary, age_bin_label
from groupcascade.features import (
    FRINGE_FRIEND_THRESHOLDS,
    FeatureVector,
    clustering_coefficient,
    count_triads,
    demographic_entropy,
    edge_density,
    group_feature_schema,
    group_feature_vector,
    invitee_feature_schema,
    invitee_feature_vector,
    inviter_feature_schema,
    inviter_feature_vector,
    structural_diversity,
)
from groupcascade.records import UserProfile
from groupcascade.temporal import TemporalFriendGraph
from groupcascade.units import DAY_SECONDS
from oracles import clustering_by_enumeration, entropy_by_counter, triads_by_enumeration

WEEK = 7 * DAY_SECONDS


@pytest.fixture(scope="module")
def ctx():
    dataset = build(
        groups=[("g1", "a", 1000, ("a", "b", "c"))],
        invitations=[("a", "d", "g1", 2000), ("d", "e", "g1", 3000)],
        friendships=[("a", "b", 0), ("a", "c", 0), ("b", "c", 0), ("a", "d", 0),
                     ("b", "d", 0), ("d", "e", 0), ("c", "f", 0), ("f", "g", 0),
                     ("e", "h", 0), ("a", "i", 0), ("b", "j", 0), ("e", "j", 0)],
        chats=[("a", "g1", 1000), ("b", "g1", 1100), ("c", "g1", 1200),
               ("d", "g1", 2100), ("d", "g1", 2200), ("a", "g1", 2300),
               ("e", "g1", 3100)],
        profiles=[
            UserProfile("a", "female", 23, "CN", "Beijing", "Beijing"),
            UserProfile("b", "male", 31, "CN", "Guangdong", "Shenzhen"),
            UserProfile("d", "male", 40, "CN", "Guangdong", "Guangzhou"),
            UserProfile("e", "male", 24, "CN", "Guangdong", "Guangzhou"),
            UserProfile("f", "female", None, "US", "California", "San Francisco"),
        ],
    )
    return AnalysisContext.from_dataset(dataset)


class TestFeatureVector:
    def test_alignment_is_enforced(self):
        with pytest.raises(ValueError):
            FeatureVector(("a", "b"), (1.0,), ("structure", "structure"))

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a", "a"), (1.0, 2.0), ("structure", "structure"))

    def test_non_finite_values_rejected(self):
        with pytest.raises(ValueError):
            FeatureVector(("a",), (float("nan"),), ("structure",))

    def test_concat_and_as_dict(self):
        left = FeatureVector(("a",), (1.0,), ("structure",))
        right = FeatureVector(("b",), (2.0,), ("cascade",))
        both = left.concat(right)
        assert both.names == ("a", "b")
        assert both.as_dict() == {"a": 1.0, "b": 2.0}


def random_graph(rng: random.Random, n: int, p: float):
    users = [f"v{i}" for i in range(n)]
    edges = [(a, b) for i, a in enumerate(users) for b in users[i + 1:]
             if rng.random() < p]
    graph = TemporalFriendGraph.from_edges([(a, b, 0) for a, b in edges], users)
    return users, edges, graph


class TestStructuralPrimitives:
    def test_triads_match_enumeration_on_random_graphs(self):
        rng = random.Random(99)
        for _ in range(25):
            n = rng.randint(3, 25)
            users, edges, graph = random_graph(rng, n, rng.random())
            assert count_triads(set(users), graph, 0) == triads_by_enumeration(users, edges)

    def test_clustering_matches_enumeration_on_random_graphs(self):
        rng = random.Random(77)
        for _ in range(25):
            n = rng.randint(1, 25)
            users, edges, graph = random_graph(rng, n, rng.random())
            assert clustering_coefficient(set(users), graph, 0) == pytest.approx(
                clustering_by_enumeration(users, edges), abs=1e-12)

    def test_triads_respect_snapshot_time(self):
        graph = TemporalFriendGraph.from_edges(
            [("x", "y", 0), ("y", "z", 0), ("x", "z", 50)], ["x", "y", "z"])
        assert count_triads({"x", "y", "z"}, graph, 10) == (1, 0)
        assert count_triads({"x", "y", "z"}, graph, 50) == (0, 1)

    def test_edge_density(self):
        graph = TemporalFriendGraph.from_edges([("x", "y", 0)], ["x", "y", "z"])
        assert edge_density({"x", "y", "z"}, graph, 0) == pytest.approx(1 / 3)
        with pytest.raises(ValueError):
            edge_density({"x"}, graph, 0)

    def test_structural_diversity_components(self, ctx):
        # j's in-group friends at 3500 are b and e, who are not friends
        assert structural_diversity(ctx.graph, ctx.timeline, "j", "g1", 3500) == (2, 2)
        # i has a single in-group friend
        assert structural_diversity(ctx.graph, ctx.timeline, "i", "g1", 2500) == (1, 1)
        with pytest.raises(ValueError):
            structural_diversity(ctx.graph, ctx.timeline, "g", "g1", 1500)


class TestEntropy:
    def test_analytic_cases(self):
        two = [UserProfile("1", "male"), UserProfile("2", "female")]
        assert demographic_entropy(two, "gender") == pytest.approx(1.0, abs=1e-12)
        four = [UserProfile(str(i), country=c) for i, c in enumerate("wxyz")]
        assert demographic_entropy(four, "country") == pytest.approx(2.0, abs=1e-12)
        same = [UserProfile(str(i), "male") for i in range(9)]
        assert demographic_entropy(same, "gender") == pytest.approx(0.0, abs=1e-12)

    def test_unstated_is_its_own_category(self):
        mixed = [UserProfile("1", age=20), UserProfile("2")]
        assert demographic_entropy(mixed, "age") == pytest.approx(1.0, abs=1e-12)

    def test_unknown_attribute_and_empty_list(self):
        with pytest.raises(ValueError):
            demographic_entropy([UserProfile("1")], "shoe_size")
        with pytest.raises(ValueError):
            demographic_entropy([], "gender")

    def test_permutation_invariance(self):
        rng = random.Random(5)
        profiles = [UserProfile(str(i), rng.choice(["male", "female", "unstated"]))
                    for i in range(30)]
        reference = demographic_entropy(profiles, "gender")
        for _ in range(50):
            rng.shuffle(profiles)
            assert demographic_entropy(profiles, "gender") == reference

    def test_matches_counter_oracle(self):
        rng = random.Random(8)
        for _ in range(20):
            ages = [rng.choice([None, 20, 25, 30]) for _ in range(rng.randint(1, 40))]
            profiles = [UserProfile(str(i), age=a) for i, a in enumerate(ages)]
            expected = entropy_by_counter(["unstated" if a is None else a for a in ages])
            assert demographic_entropy(profiles, "age") == pytest.approx(expected, abs=1e-12)


class TestGroupVector:
    def test_structure_block_by_hand(self, ctx):
        vec = group_feature_vector(ctx, "g1", 1500).as_dict()
        assert vec["fringe_size"] == 4                 # d, i, j, f
        assert vec["member_fringe_edges"] == 5         # a->d,i  b->d,j  c->f
        assert vec["internal_edges"] == 3
        assert vec["open_triads"] == 0
        assert vec["closed_triads"] == 1
        assert vec["open_triads_setup"] == 0
        assert vec["closed_triads_setup"] == 1
        assert vec["clustering_coefficient"] == pytest.approx(1.0)

    def test_structure_block_after_growth(self, ctx):
        vec = group_feature_vector(ctx, "g1", 2500).as_dict()
        assert vec["internal_edges"] == 5
        assert vec["open_triads"] == 2
        assert vec["closed_triads"] == 2
        assert vec["fringe_size"] == 4                 # i, j, f, e
        assert vec["member_fringe_edges"] == 4
        assert vec["clustering_coefficient"] == pytest.approx(5 / 6)
        # setup columns stay frozen at the ten-minute snapshot
        assert vec["open_triads_setup"] == 0
        assert vec["closed_triads_setup"] == 1

    def test_cascade_block_by_hand(self, ctx):
        vec = group_feature_vector(ctx, "g1", 3500).as_dict()
        assert vec["member_count"] == 5
        assert vec["members_at_depth_1"] == 3
        assert vec["members_at_depth_2"] == 1
        assert vec["wiener_index"] == pytest.approx(1.8)
        deciles = tuple(vec[f"depth_decile_{i}"] for i in range(1, 10))
        assert deciles == (1, 1, 1, 1, 1, 1, 1, 2, 2)

    def test_member_count_tracks_truncation(self, ctx):
        assert group_feature_vector(ctx, "g1", 1000).as_dict()["member_count"] == 3
        assert group_feature_vector(ctx, "g1", 2000).as_dict()["member_count"] == 4
        assert group_feature_vector(ctx, "g1", 2999).as_dict()["member_count"] == 4

    def test_demographic_block_by_hand(self, ctx):
        vec = group_feature_vector(ctx, "g1", 1500).as_dict()
        assert vec["gender_count_male"] == 1
        assert vec["gender_count_female"] == 1
        assert vec["gender_count_unstated"] == 1
        assert vec["gender_frac_male"] == pytest.approx(1 / 3)
        assert vec["age_count_20_24"] == 1
        assert vec["age_count_30_34"] == 1
        assert vec["age_count_unstated"] == 1
        assert vec["country_count_CN"] == 2
        assert vec["country_frac_unstated"] == pytest.approx(1 / 3)
        assert vec["entropy_gender"] == pytest.approx(math.log2(3))
        assert vec["entropy_country"] == pytest.approx(
            -(2 / 3) * math.log2(2 / 3) - (1 / 3) * math.log2(1 / 3))

    def test_snapshot_before_creation_raises(self, ctx):
        with pytest.raises(ValueError):
            group_feature_vector(ctx, "g1", 999)

    def test_vector_matches_schema(self, ctx):
        names, families = group_feature_schema(ctx.vocab)
        vec = group_feature_vector(ctx, "g1", 2500)
        assert vec.names == names
        assert vec.families == families
        assert set(families) == {"structure", "cascade", "demographics"}


class TestInviterVector:
    def test_behavior_block_by_hand(self, ctx):
        vec = inviter_feature_vector(ctx, "d", "g1", 3500).as_dict()
        assert vec["time_since_join"] == 1500
        assert vec["time_since_last_invitation"] == 500
        assert vec["prior_invitations"] == 1
        assert vec["chat_count"] == 2

    def test_no_invitations_falls_back_to_join_time(self, ctx):
        vec = inviter_feature_vector(ctx, "c", "g1", 2500).as_dict()
        assert vec["time_since_last_invitation"] == 1500
        assert vec["prior_invitations"] == 0
        assert vec["chat_count"] == 1

    def test_invitation_at_query_time_counts_as_past(self, ctx):
        vec = inviter_feature_vector(ctx, "d", "g1", 3000).as_dict()
        assert vec["prior_invitations"] == 1
        assert vec["time_since_last_invitation"] == 0

    def test_local_structure_block_by_hand(self, ctx):
        vec = inviter_feature_vector(ctx, "c", "g1", 2500).as_dict()
        assert vec["friends_in_group"] == 2
        assert vec["friends_outside_group"] == 1
        assert vec["friends_in_group_frac"] == pytest.approx(2 / 3)
        assert vec["fringe_friends_min_inside_1"] == 1   # f has one friend inside
        assert vec["fringe_friends_min_inside_2"] == 0
        assert vec["cross_boundary_edges"] == 0
        assert vec["cross_boundary_edge_ratio"] == 0.0
        assert vec["cascade_depth"] == 1

    def test_fully_internal_member(self, ctx):
        vec = inviter_feature_vector(ctx, "d", "g1", 3500).as_dict()
        assert vec["friends_in_group"] == 3
        assert vec["friends_outside_group"] == 0
        assert vec["friends_in_group_frac"] == 1.0
        assert all(vec[f"fringe_friends_min_inside_{k}"] == 0
                   for k in FRINGE_FRIEND_THRESHOLDS)

    def test_nonmember_raises(self, ctx):
        with pytest.raises(ValueError):
            inviter_feature_vector(ctx, "e", "g1", 2999)
        vec = inviter_feature_vector(ctx, "e", "g1", 3000).as_dict()
        assert vec["time_since_join"] == 0

    def test_vector_matches_schema(self, ctx):
        names, families = inviter_feature_schema()
        vec = inviter_feature_vector(ctx, "a", "g1", 5000)
        assert vec.names == names
        assert vec.families == families
        assert set(families) == {"behavior", "local_structure"}


class TestInviteeVector:
    def test_demographic_block_for_unstated_candidate(self, ctx):
        vec = invitee_feature_vector(ctx, "j", "g1", 3500).as_dict()
        assert vec["candidate_gender_unstated"] == 1.0
        assert vec["candidate_gender_male"] == 0.0
        assert vec["candidate_age_unstated"] == 1.0
        assert vec["candidate_country_unstated"] == 1.0
        assert vec["candidate_province_stated"] == 0.0
        assert vec["candidate_city_stated"] == 0.0
        # only c matches an unstated candidate on each attribute
        for attribute in ("gender", "age", "country", "province", "city"):
            assert vec[f"members_sharing_{attribute}_frac"] == pytest.approx(1 / 5)

    def test_demographic_block_for_stated_candidate(self, ctx):
        vec = invitee_feature_vector(ctx, "f", "g1", 3500).as_dict()
        assert vec["candidate_gender_female"] == 1.0
        assert vec["candidate_country_US"] == 1.0
        assert vec["candidate_age_unstated"] == 1.0
        assert vec["candidate_province_stated"] == 1.0
        # members sharing female: a -> 1/5; sharing country US: none
        assert vec["members_sharing_gender_frac"] == pytest.approx(1 / 5)
        assert vec["members_sharing_country_frac"] == 0.0

    def test_local_structure_block(self, ctx):
        vec = invitee_feature_vector(ctx, "j", "g1", 3500).as_dict()
        assert vec["friends_in_group"] == 2
        assert vec["friend_components"] == 2
        assert vec["active_inviter_friends"] == 0  # neither b nor e ever invited

    def test_active_inviter_window_boundaries(self, ctx):
        # a invited d at exactly t=2000: inclusive at the right edge
        vec = invitee_feature_vector(ctx, "i", "g1", 2000).as_dict()
        assert vec["active_inviter_friends"] == 1
        # exactly one window later the invitation has aged out
        vec = invitee_feature_vector(ctx, "i", "g1", 2000 + WEEK).as_dict()
        assert vec["active_inviter_friends"] == 0

    def test_member_and_nonfringe_raise(self, ctx):
        with pytest.raises(ValueError):
            invitee_feature_vector(ctx, "a", "g1", 1500)
        with pytest.raises(ValueError):
            invitee_feature_vector(ctx, "g", "g1", 1500)

    def test_vector_matches_schema(self, ctx):
        names, families = invitee_feature_schema(ctx.vocab)
        vec = invitee_feature_vector(ctx, "f", "g1", 2500)
        assert vec.names == names
        assert vec.families == families
        assert set(families) == {"demographics", "local_structure"}


class TestVocabulary:
    def test_age_bin_labels(self):
        assert age_bin_label(23) == "20_24"
        assert age_bin_label(25) == "25_29"
        assert age_bin_label(None) == "unstated"

    def test_vocabulary_from_dataset(self, ctx):
        vocab = DemographicVocabulary.from_dataset(ctx.dataset)
        assert vocab.genders == ("male", "female", "unstated")
        assert vocab.age_bins == ("20_24", "30_34", "40_44", "unstated")
        assert vocab.countries == ("CN", "US", "unstated")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(3, 14), st.floats(0.05, 0.95))
def test_triad_census_property(seed, n, p):
    rng = random.Random(seed)
    users, edges, graph = random_graph(rng, n, p)
    assert count_triads(set(users), graph, 0) == triads_by_enumeration(users, edges)


def test_group_vector_is_deterministic(desk_ctx):
    gid = desk_ctx.group_ids()[0]
    t = desk_ctx.dataset.groups[gid].created_at + 5 * DAY_SECONDS
    first = group_feature_vector(desk_ctx, gid, t)
    again = group_feature_vector(desk_ctx, gid, t)
    assert first == again
