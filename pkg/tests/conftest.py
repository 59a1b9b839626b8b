"""Shared fixtures: hand-built datasets and seeded synthetic corpora.

The generated corpora are session-scoped because building them dominates
test runtime; everything downstream treats them as read-only.
"""

from __future__ import annotations

from dataclasses import replace

import pytest

from groupcascade.context import AnalysisContext
from groupcascade.records import (
    ChatRecord,
    Dataset,
    FriendshipRecord,
    GroupRecord,
    InvitationRecord,
    UserProfile,
    build_dataset,
    clean,
)
from groupcascade.synthgen import ModeParams, default_desk_config, generate


def build(
    groups,
    chats=(),
    invitations=(),
    friendships=(),
    users=None,
    window=(0, 10_000_000),
    exclusions=(),
    profiles=None,
) -> Dataset:
    """Compact dataset builder for hand fixtures.

    groups: (gid, creator, created_at, founders) tuples; the other streams
    are plain tuples matching the record fields.  Profiles default to fully
    unstated for every id mentioned anywhere.
    """
    group_records = [GroupRecord(g, c, t, tuple(f)) for g, c, t, f in groups]
    chat_records = [ChatRecord(*c) for c in chats]
    invitation_records = [InvitationRecord(*i) for i in invitations]
    friendship_records = [FriendshipRecord(*f) for f in friendships]
    if users is None:
        mentioned = set(exclusions)
        for g in group_records:
            mentioned.update(g.founding_members)
            mentioned.add(g.creator_id)
        mentioned.update(c.user_id for c in chat_records)
        for i in invitation_records:
            mentioned.update((i.inviter_id, i.invitee_id))
        for f in friendship_records:
            mentioned.update((f.user_a, f.user_b))
        users = sorted(mentioned)
    profile_records = [UserProfile(u) for u in users]
    by_id = {p.user_id: p for p in profile_records}
    for p in profiles or ():
        by_id[p.user_id] = p
    return build_dataset(
        group_records,
        chat_records,
        invitation_records,
        friendship_records,
        list(by_id.values()),
        window,
        frozenset(exclusions),
    )


# ---------------------------------------------------------------------------
# synthetic corpora


def mini_config():
    """Small enough for CLI round-trips in a couple of seconds."""
    return replace(
        default_desk_config(), seed=3, user_count=900, community_count=9,
        group_count=40, exclusion_count=4,
    )


def flat_probability_config():
    """Every fringe candidate joins with the same daily probability, groups
    never stop inviting, so the ten-day joining probability is exactly
    1 - (1 - p)^10 for every friend count."""
    mode = ModeParams(
        chat_hazard=0.2, chats_per_day=6.0, creation_day_chats=9.0,
        invite_probability=0.02, branching_bias=0.5, friendship_growth=0.0,
    )
    return replace(
        default_desk_config(), seed=7, group_count=300, long_fraction=0.5,
        long=mode, short=mode, invitations_stop_at_death=False,
        capacity_damping=1.0, exclusion_count=0,
    )


def component_effect_config():
    """Joining probability halves with each extra friend component."""
    mode = ModeParams(
        chat_hazard=0.2, chats_per_day=6.0, creation_day_chats=9.0,
        invite_probability=0.05, branching_bias=0.5, friendship_growth=0.0,
    )
    return replace(
        default_desk_config(), seed=11, group_count=150, long_fraction=0.5,
        long=mode, short=mode, invitations_stop_at_death=False,
        capacity_damping=1.0, exclusion_count=0,
        component_weights=(1.0, 0.5, 0.25, 0.125, 0.0625),
    )


def demographic_signal_config():
    """Lifecycle modes share every growth parameter; only the demographic
    make-up of the communities the creators come from differs."""
    long_mode = ModeParams(
        chat_hazard=0.01, chats_per_day=6.0, creation_day_chats=9.0,
        invite_probability=0.008, branching_bias=0.3, friendship_growth=0.0,
    )
    short_mode = replace(long_mode, chat_hazard=0.45)
    return replace(
        default_desk_config(), seed=5, group_count=240,
        demographics_by_mode=True, invitations_stop_at_death=False,
        long=long_mode, short=short_mode, exclusion_count=0,
    )


def capacity_config():
    """Aggressive growth past the confirmation threshold with damping 0.3."""
    mode = ModeParams(
        chat_hazard=0.0, chats_per_day=4.0, creation_day_chats=6.0,
        invite_probability=0.05, branching_bias=0.5, friendship_growth=0.0,
    )
    return replace(
        default_desk_config(), seed=13, user_count=3000, community_count=15,
        p_intra=0.10, group_count=60, long_fraction=1.0, long=mode,
        capacity_damping=0.3, exclusion_count=0,
    )


def star_config():
    """Zero branching bias: every cascade stays a creator-centred star."""
    mode = ModeParams(
        chat_hazard=0.1, chats_per_day=5.0, creation_day_chats=8.0,
        invite_probability=0.03, branching_bias=0.0, friendship_growth=0.0,
    )
    return replace(
        default_desk_config(), seed=17, user_count=2000, community_count=20,
        group_count=80, long_fraction=1.0, long=mode, exclusion_count=0,
    )


@pytest.fixture(scope="session")
def desk():
    return generate(default_desk_config())


@pytest.fixture(scope="session")
def desk_clean(desk):
    return clean(desk[0])


@pytest.fixture(scope="session")
def desk_ctx(desk_clean):
    return AnalysisContext.from_dataset(desk_clean[0])


@pytest.fixture(scope="session")
def flat_probability_data():
    return generate(flat_probability_config())


@pytest.fixture(scope="session")
def component_effect_data():
    return generate(component_effect_config())


@pytest.fixture(scope="session")
def demographic_signal_data():
    return generate(demographic_signal_config())


@pytest.fixture(scope="session")
def mini_dir(tmp_path_factory):
    """Mini dataset written to disk once for CLI tests."""
    from groupcascade.records import write_dataset

    dataset, _ = generate(mini_config())
    out = tmp_path_factory.mktemp("mini")
    manifest = write_dataset(dataset, out)
    return out, manifest
