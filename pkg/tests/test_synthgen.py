"""Synthetic corpus generation: determinism, planted effects, ground truth."""

from __future__ import annotations

import dataclasses

import pytest

from conftest import capacity_config, mini_config, star_config
from groupcascade.cascade import node_depths, wiener_index
from groupcascade.context import AnalysisContext
from groupcascade.empirics import wilson_interval
from groupcascade.records import (
    load_manifest,
    parse_dataset,
    validate_dataset,
    write_dataset,
)
from groupcascade.synthgen import (
    GroundTruth,
    SynthConfig,
    _pure_profile,
    default_desk_config,
    generate,
)


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        config = default_desk_config()
        assert SynthConfig.from_json_dict(config.to_json_dict()) == config
        path = tmp_path / "config.json"
        config.save(path)
        assert SynthConfig.load(path) == config

    def test_round_trip_keeps_optional_weights(self, tmp_path):
        config = dataclasses.replace(
            default_desk_config(), k_weights=(1.0, 2.0), component_weights=(1.0, 0.5))
        path = tmp_path / "config.json"
        config.save(path)
        assert SynthConfig.load(path) == config

    @pytest.mark.parametrize("patch", [
        {"p_intra": 1.5},
        {"long_fraction": -0.1},
        {"capacity_damping": 2.0},
        {"user_count": 5, "community_count": 10},
        {"founders_min": 0},
        {"founders_min": 6, "founders_max": 3},
        {"gender_probs": (0.5, 0.5, 0.5)},
        {"window_days": 30},
        {"creation_spread_seconds": 86_400},
        {"k_weights": ()},
        {"component_weights": (1.0, -0.5)},
    ])
    def test_validate_rejects(self, patch):
        config = dataclasses.replace(default_desk_config(), **patch)
        with pytest.raises(ValueError):
            config.validate()

    def test_desk_default_is_valid(self):
        default_desk_config().validate()


class TestDeterminism:
    def test_equal_configs_give_equal_output(self):
        first_data, first_truth = generate(mini_config())
        second_data, second_truth = generate(mini_config())
        assert first_data.groups == second_data.groups
        assert first_data.chats == second_data.chats
        assert first_data.invitations == second_data.invitations
        assert first_data.friendships == second_data.friendships
        assert first_data.profiles == second_data.profiles
        assert first_data.exclusions == second_data.exclusions
        assert first_truth.draw_stats == second_truth.draw_stats
        assert first_truth.modes == second_truth.modes

    def test_seed_changes_output(self):
        base, _ = generate(mini_config())
        other, _ = generate(dataclasses.replace(mini_config(), seed=4))
        assert base.invitations != other.invitations


class TestGeneratedShape:
    def test_reingested_output_validates_cleanly(self, tmp_path):
        dataset, _ = generate(mini_config())
        manifest = write_dataset(dataset, tmp_path)
        paths, window = load_manifest(manifest)
        report = validate_dataset(parse_dataset(paths, window))
        assert report.ok, report.counts_by_rule()

    def test_every_invitation_has_a_planted_probability(self):
        dataset, truth = generate(mini_config())
        assert len(truth.invitation_probs) == len(dataset.invitations)
        for entry in truth.invitation_probs:
            assert 0.0 < entry["probability"] <= 1.0

    def test_mode_fraction_tracks_config(self, desk):
        _, truth = desk
        long_count = sum(1 for mode in truth.modes.values() if mode == "long")
        assert 0.2 < long_count / len(truth.modes) < 0.4

    def test_desk_retention_clears_cleaning(self, desk, desk_clean):
        kept = len(desk_clean[0].groups)
        assert kept / len(desk[0].groups) >= 0.9

    def test_ground_truth_round_trip(self, tmp_path):
        _, truth = generate(mini_config())
        path = tmp_path / "truth.json"
        truth.save(path)
        loaded = GroundTruth.load(path)
        assert loaded.modes == truth.modes
        assert loaded.draw_stats == truth.draw_stats
        assert loaded.config == truth.config

    def test_activation_times_match_dataset_joins(self):
        dataset, truth = generate(mini_config())
        ctx = AnalysisContext.from_dataset(dataset)
        for gid, joins in truth.activation_times.items():
            tree = ctx.trees[gid]
            assert tree.join_time == joins


class TestPlantedEffects:
    def test_zero_branching_bias_yields_stars(self):
        dataset, _ = generate(star_config())
        creators = {g.group_id: g.creator_id for g in dataset.groups.values()}
        for invitation in dataset.invitations:
            assert invitation.inviter_id == creators[invitation.group_id]
        ctx = AnalysisContext.from_dataset(dataset)
        for tree in ctx.trees.values():
            assert max(node_depths(tree).values()) <= 1
            if tree.size >= 2:
                assert wiener_index(tree) < 2.0

    def test_capacity_damping_scales_acceptance(self):
        config = capacity_config()
        _, truth = generate(config)
        base_p = config.long.invite_probability
        for over, planted in ((False, base_p), (True, base_p * config.capacity_damping)):
            draws, successes = truth.acceptance_rate(over)
            assert draws > 1000, f"too few draws with over_capacity={over}"
            low, high = wilson_interval(successes, draws)
            assert low <= planted <= high, (over, successes / draws, planted)

    def test_ks_observed_are_positive_counts(self, flat_probability_data):
        _, truth = flat_probability_data
        ks = truth.ks_observed()
        assert ks == sorted(ks)
        assert ks[0] >= 1
        assert len(ks) > 3

    def test_pure_communities_have_uniform_profiles(self, demographic_signal_data):
        dataset, truth = demographic_signal_data
        config = truth.config
        pure_cut = config.community_count // 2
        checked = 0
        for i in range(config.user_count):
            community = i * config.community_count // config.user_count
            if community >= pure_cut:
                continue
            gender, age, region = _pure_profile(community, config.regions)
            profile = dataset.profiles[f"u{i:05d}"]
            assert (profile.gender, profile.age) == (gender, age)
            assert (profile.country, profile.province, profile.city) == region
            checked += 1
        assert checked > 0

    def test_long_creators_come_from_pure_communities(self, demographic_signal_data):
        dataset, truth = demographic_signal_data
        config = truth.config
        pure_cut = config.community_count // 2
        for gid, mode in truth.modes.items():
            creator = dataset.groups[gid].creator_id
            community = int(creator[1:]) * config.community_count // config.user_count
            if mode == "long":
                assert community < pure_cut
            else:
                assert community >= pure_cut
