"""Seeded synthetic datasets with known planted dynamics.

Users live in a planted-partition friendship graph.  Each group follows one
of two lifecycle modes: a per-day hazard ends its chat activity, while a
per-fringe-user daily joining probability (optionally shaped by the
candidate's in-group friend count and friend-component count, and damped
above the confirmation capacity) grows its cascade.  Per-mode friendship
growth between co-members plants a structural trend.  Everything flows from
one seed, so equal configs give byte-identical datasets, and a GroundTruth
sidecar records the planted quantities every estimator can be checked
against.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .records import (
    ChatRecord,
    Dataset,
    FriendshipRecord,
    GroupRecord,
    InvitationRecord,
    UserProfile,
    build_dataset,
)
from .units import DAY_SECONDS, MONTH_SECONDS

CAPACITY_THRESHOLD = 40

DEFAULT_REGIONS: tuple[tuple[str, str, str], ...] = (
    ("CN", "Guangdong", "Guangzhou"),
    ("CN", "Guangdong", "Shenzhen"),
    ("CN", "Beijing", "Beijing"),
    ("CN", "Shanghai", "Shanghai"),
    ("CN", "Sichuan", "Chengdu"),
    ("US", "California", "San Francisco"),
    ("MY", "Selangor", "Petaling"),
    ("ID", "Jakarta", "Jakarta"),
)


@dataclass(frozen=True)
class ModeParams:
    """Per-lifecycle-mode dynamics.

    chat_hazard: per-day probability that chatting stops after the day.
    invite_probability: per fringe candidate per day joining probability
        (before k/component weighting and capacity damping).
    branching_bias: probability an invitation is attributed to a non-creator
        member; exactly 0.0 additionally restricts candidates to the
        creator's own friends, so every tree stays a star.
    friendship_growth: per day, per non-adjacent co-member pair, probability
        of forming a friendship.
    """

    chat_hazard: float
    chats_per_day: float
    creation_day_chats: float
    invite_probability: float
    branching_bias: float
    friendship_growth: float


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    user_count: int = 10_000
    community_count: int = 100
    p_intra: float = 0.12
    p_inter: float = 0.0002
    group_count: int = 500
    long_fraction: float = 0.3
    window_days: int = 31
    creation_spread_seconds: int = 43_200
    founders_min: int = 3
    founders_max: int = 6
    long: ModeParams = ModeParams(
        chat_hazard=0.01,
        chats_per_day=6.0,
        creation_day_chats=9.0,
        invite_probability=0.010,
        branching_bias=0.7,
        friendship_growth=0.003,
    )
    short: ModeParams = ModeParams(
        chat_hazard=0.45,
        chats_per_day=6.0,
        creation_day_chats=9.0,
        invite_probability=0.004,
        branching_bias=0.05,
        friendship_growth=0.0,
    )
    k_weights: tuple[float, ...] | None = None          # w(k), k = 1, 2, ...; last extends
    component_weights: tuple[float, ...] | None = None  # v(c), c = 1, 2, ...; last extends
    capacity_damping: float = 0.5   # joining probability multiplier once size > 40
    invitations_stop_at_death: bool = True
    demographics_by_mode: bool = False
    gender_probs: tuple[float, float, float] = (0.48, 0.45, 0.07)
    age_min: int = 16
    age_max: int = 70
    age_unstated_prob: float = 0.15
    regions: tuple[tuple[str, str, str], ...] = DEFAULT_REGIONS
    region_unstated_prob: float = 0.10
    exclusion_count: int = 20

    def validate(self) -> None:
        probs = {
            "p_intra": self.p_intra,
            "p_inter": self.p_inter,
            "long_fraction": self.long_fraction,
            "capacity_damping": self.capacity_damping,
            "age_unstated_prob": self.age_unstated_prob,
            "region_unstated_prob": self.region_unstated_prob,
        }
        for mode_name, params in (("long", self.long), ("short", self.short)):
            probs[f"{mode_name}.chat_hazard"] = params.chat_hazard
            probs[f"{mode_name}.invite_probability"] = params.invite_probability
            probs[f"{mode_name}.branching_bias"] = params.branching_bias
            probs[f"{mode_name}.friendship_growth"] = params.friendship_growth
        for name, value in probs.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be a probability, got {value}")
        if self.user_count < self.community_count or self.community_count < 1:
            raise ValueError("need user_count >= community_count >= 1")
        if not 1 <= self.founders_min <= self.founders_max:
            raise ValueError("need 1 <= founders_min <= founders_max")
        if abs(sum(self.gender_probs) - 1.0) > 1e-9:
            raise ValueError("gender_probs must sum to 1")
        if self.window_days < 31:
            raise ValueError("window must cover at least 31 days so one-month snapshots exist")
        if not 0 <= self.creation_spread_seconds <= DAY_SECONDS - 3600:
            raise ValueError(
                "groups are created during the first day and need at least an hour "
                "of it left for same-day events"
            )
        if self.creation_spread_seconds + MONTH_SECONDS > self.window_days * DAY_SECONDS:
            raise ValueError("creation spread leaves no room for one-month snapshots")
        for weights, name in ((self.k_weights, "k_weights"), (self.component_weights, "component_weights")):
            if weights is not None and (not weights or any(w < 0 for w in weights)):
                raise ValueError(f"{name} must be a non-empty tuple of non-negative weights")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SynthConfig":
        doc = dict(doc)
        for mode_name in ("long", "short"):
            doc[mode_name] = ModeParams(**doc[mode_name])
        for key in ("k_weights", "component_weights"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        doc["gender_probs"] = tuple(doc["gender_probs"])
        doc["regions"] = tuple(tuple(r) for r in doc["regions"])
        return cls(**doc)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "SynthConfig":
        with open(path, encoding="utf-8") as handle:
            return cls.from_json_dict(json.load(handle))


def default_desk_config() -> SynthConfig:
    """Desk-scale reference: 10k users, 500 groups, 31 days, seed 42.

    The lifecycle modes are separable on purpose: long-mode groups keep
    inviting (deeper trees via high branching bias), outlive the hazard, and
    densify internally through friendship growth, while short-mode groups
    die within days as shallow stars.
    """
    return SynthConfig()


@dataclass
class GroundTruth:
    """Planted quantities behind a generated dataset.

    draw_stats aggregates every per-candidate Bernoulli draw keyed by
    "k|components|over_capacity" (components is -1 when component weighting
    was off and therefore never computed).  invitation_probs records the
    planted probability behind each emitted invitation.
    """

    modes: dict[str, str]
    activation_times: dict[str, dict[str, int]]
    invitation_probs: list[dict]
    draw_stats: dict[str, list[int]]
    warnings: list[str]
    config: SynthConfig

    def acceptance_rate(self, over_capacity: bool, k: int | None = None) -> tuple[int, int]:
        """(draws, successes) pooled over components, optionally fixed k."""
        draws = successes = 0
        for key, (d, s) in self.draw_stats.items():
            key_k, _, key_over = key.split("|")
            if bool(int(key_over)) != over_capacity:
                continue
            if k is not None and int(key_k) != k:
                continue
            draws += d
            successes += s
        return draws, successes

    def ks_observed(self) -> list[int]:
        return sorted({int(key.split("|")[0]) for key in self.draw_stats})

    def to_json_dict(self) -> dict:
        return {
            "modes": self.modes,
            "activation_times": self.activation_times,
            "invitation_probs": self.invitation_probs,
            "draw_stats": self.draw_stats,
            "warnings": self.warnings,
            "config": self.config.to_json_dict(),
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
        return cls(
            modes=doc["modes"],
            activation_times=doc["activation_times"],
            invitation_probs=doc["invitation_probs"],
            draw_stats=doc["draw_stats"],
            warnings=doc["warnings"],
            config=SynthConfig.from_json_dict(doc["config"]),
        )


# ---------------------------------------------------------------------------
# generation helpers


def _indexed_weight(weights: tuple[float, ...] | None, index: int) -> float:
    if weights is None:
        return 1.0
    return weights[min(index, len(weights)) - 1]


def _pure_profile(community: int, regions: tuple[tuple[str, str, str], ...]) -> tuple[str, int, tuple[str, str, str]]:
    gender = "male" if community % 2 == 0 else "female"
    age = 20 + (community % 8) * 5
    return gender, age, regions[community % len(regions)]


def _component_count(
    user: str, adjacency: dict[str, dict[str, int]], member_set: set[str], cutoff: int
) -> int:
    inside = sorted(
        m for m, formed in adjacency[user].items() if formed <= cutoff and m in member_set
    )
    index = {node: i for i, node in enumerate(inside)}
    parent = list(range(len(inside)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for node in inside:
        for other, formed in adjacency[node].items():
            if formed <= cutoff and other in index:
                a, b = find(index[node]), find(index[other])
                if a != b:
                    parent[a] = b
    return sum(1 for i in range(len(inside)) if find(i) == i)


@dataclass
class _GroupState:
    group_id: str
    creator: str
    created_at: int
    mode: str
    params: ModeParams
    join_time: dict[str, int]
    member_order: list[str]
    alive: bool = True


def generate(config: SynthConfig) -> tuple[Dataset, GroundTruth]:
    """Generate a dataset plus its ground truth; equal configs give equal bytes."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    start = 0
    end = start + config.window_days * DAY_SECONDS

    users = [f"u{i:05d}" for i in range(config.user_count)]
    community_of = [i * config.community_count // config.user_count for i in range(config.user_count)]
    members_of_community: dict[int, list[int]] = {}
    for i, community in enumerate(community_of):
        members_of_community.setdefault(community, []).append(i)

    # demographics; under demographics_by_mode the first half of communities
    # are internally homogeneous and the rest sample the global mixture
    pure_cut = config.community_count // 2 if config.demographics_by_mode else 0
    profiles: list[UserProfile] = []
    genders = np.asarray(["male", "female", "unstated"])
    gender_draw = rng.choice(3, size=config.user_count, p=list(config.gender_probs))
    age_draw = rng.integers(config.age_min, config.age_max + 1, size=config.user_count)
    age_stated = rng.random(config.user_count) >= config.age_unstated_prob
    region_draw = rng.integers(0, len(config.regions), size=config.user_count)
    region_stated = rng.random(config.user_count) >= config.region_unstated_prob
    for i, user in enumerate(users):
        community = community_of[i]
        if community < pure_cut:
            gender, age, region = _pure_profile(community, config.regions)
            profiles.append(UserProfile(user, gender, age, *region))
            continue
        region = config.regions[region_draw[i]] if region_stated[i] else (None, None, None)
        profiles.append(
            UserProfile(
                user,
                str(genders[gender_draw[i]]),
                int(age_draw[i]) if age_stated[i] else None,
                *region,
            )
        )

    # base friendship graph: planted partition, all edges at window start
    adjacency: dict[str, dict[str, int]] = {u: {} for u in users}
    friendships: list[FriendshipRecord] = []

    def add_edge(a: str, b: str, t: int) -> bool:
        if a == b or b in adjacency[a]:
            return False
        adjacency[a][b] = t
        adjacency[b][a] = t
        lo, hi = (a, b) if a < b else (b, a)
        friendships.append(FriendshipRecord(lo, hi, t))
        return True

    for community in range(config.community_count):
        indices = members_of_community.get(community, [])
        n = len(indices)
        if n < 2:
            continue
        mask = rng.random((n, n)) < config.p_intra
        for row in range(n):
            for col in range(row + 1, n):
                if mask[row, col]:
                    add_edge(users[indices[row]], users[indices[col]], start)
    total_pairs = config.user_count * (config.user_count - 1) // 2
    inter_target = rng.binomial(total_pairs, config.p_inter)
    if inter_target:
        raw = rng.integers(0, config.user_count, size=(int(inter_target * 2), 2))
        made = 0
        for a_i, b_i in raw:
            if made >= inter_target:
                break
            if community_of[a_i] == community_of[b_i]:
                continue
            if add_edge(users[int(a_i)], users[int(b_i)], start):
                made += 1

    # groups
    warnings: list[str] = []
    states: list[_GroupState] = []
    pure_users = [i for i in range(config.user_count) if community_of[i] < pure_cut]
    mixed_users = [i for i in range(config.user_count) if community_of[i] >= pure_cut]
    for g in range(config.group_count):
        gid = f"g{g:04d}"
        mode = "long" if rng.random() < config.long_fraction else "short"
        if config.demographics_by_mode:
            pool = pure_users if mode == "long" else mixed_users
            creator = users[pool[int(rng.integers(0, len(pool)))]]
        else:
            creator = users[int(rng.integers(0, config.user_count))]
        created_at = start + int(rng.integers(0, config.creation_spread_seconds + 1))
        friends = sorted(adjacency[creator])
        want = int(rng.integers(config.founders_min - 1, config.founders_max))
        if len(friends) < want:
            warnings.append(
                f"{gid}: creator {creator} has {len(friends)} friends, wanted {want} co-founders"
            )
            chosen = friends
        else:
            picks = rng.choice(len(friends), size=want, replace=False)
            chosen = [friends[int(p)] for p in sorted(picks)]
        founders = [creator] + chosen
        states.append(
            _GroupState(
                group_id=gid,
                creator=creator,
                created_at=created_at,
                mode=mode,
                params=config.long if mode == "long" else config.short,
                join_time={member: created_at for member in founders},
                member_order=list(founders),
            )
        )

    groups = [
        GroupRecord(s.group_id, s.creator, s.created_at, tuple(s.member_order)) for s in states
    ]

    chats: list[ChatRecord] = []
    invitations: list[InvitationRecord] = []
    invitation_probs: list[dict] = []
    draw_stats: dict[str, list[int]] = {}
    want_components = config.component_weights is not None

    for day in range(config.window_days):
        day_start = start + day * DAY_SECONDS
        day_end = day_start + DAY_SECONDS
        for state in states:
            if state.created_at >= day_end:
                continue
            cutoff = max(day_start, state.created_at)
            creation_day = state.created_at >= day_start
            params = state.params
            members_before = list(state.member_order)
            member_set = set(members_before)

            # invitations
            if params.invite_probability > 0 and (
                state.alive or not config.invitations_stop_at_death
            ):
                candidates: dict[str, int] = {}
                for member in members_before:
                    for other, formed in adjacency[member].items():
                        if formed <= cutoff and other not in member_set:
                            candidates[other] = candidates.get(other, 0) + 1
                if params.branching_bias == 0.0:
                    reach = {
                        other
                        for other, formed in adjacency[state.creator].items()
                        if formed <= cutoff
                    }
                    candidates = {u: k for u, k in candidates.items() if u in reach}
                cand_list = sorted(candidates)
                if cand_list:
                    over = len(members_before) > CAPACITY_THRESHOLD
                    probs = np.empty(len(cand_list))
                    comps: list[int] = []
                    for idx, user in enumerate(cand_list):
                        k = candidates[user]
                        weight = _indexed_weight(config.k_weights, k)
                        comp = -1
                        if want_components:
                            comp = _component_count(user, adjacency, member_set, cutoff)
                            weight *= _indexed_weight(config.component_weights, comp)
                        prob = params.invite_probability * weight
                        if over:
                            prob *= config.capacity_damping
                        probs[idx] = min(1.0, prob)
                        comps.append(comp)
                    hits = rng.random(len(cand_list)) < probs
                    for idx, user in enumerate(cand_list):
                        key = f"{candidates[user]}|{comps[idx]}|{int(over)}"
                        entry = draw_stats.setdefault(key, [0, 0])
                        entry[0] += 1
                        entry[1] += int(hits[idx])
                    joiners = [i for i in range(len(cand_list)) if hits[i]]
                    if joiners:
                        times = rng.integers(cutoff + 1, day_end, size=len(joiners))
                        for when, idx in zip(times, joiners):
                            user = cand_list[idx]
                            when = int(when)
                            in_group = sorted(
                                m
                                for m, formed in adjacency[user].items()
                                if formed <= cutoff and m in member_set
                            )
                            non_root = [m for m in in_group if m != state.creator]
                            if params.branching_bias == 0.0:
                                inviter = state.creator
                            elif non_root and rng.random() < params.branching_bias:
                                inviter = non_root[int(rng.integers(0, len(non_root)))]
                            elif state.creator in in_group:
                                inviter = state.creator
                            else:
                                inviter = non_root[int(rng.integers(0, len(non_root)))]
                            invitations.append(
                                InvitationRecord(inviter, user, state.group_id, when)
                            )
                            invitation_probs.append(
                                {
                                    "group_id": state.group_id,
                                    "invitee_id": user,
                                    "time": when,
                                    "probability": float(probs[idx]),
                                }
                            )
                            state.join_time[user] = when
                            state.member_order.append(user)

            # chats, then the hazard that may end them
            if state.alive:
                n_chats = int(
                    rng.poisson(params.creation_day_chats if creation_day else params.chats_per_day)
                )
                if n_chats:
                    who = rng.integers(0, len(members_before), size=n_chats)
                    when = rng.integers(cutoff, day_end, size=n_chats)
                    for w, t in zip(who, when):
                        chats.append(ChatRecord(members_before[int(w)], state.group_id, int(t)))
                if rng.random() < params.chat_hazard:
                    state.alive = False

            # membership persists after chat death, so friendship keeps growing
            if params.friendship_growth > 0 and len(state.member_order) >= 2:
                m = len(state.member_order)
                n_new = int(rng.binomial(m * (m - 1) // 2, params.friendship_growth))
                if n_new:
                    raw = rng.integers(0, m, size=(n_new * 3 + 8, 2))
                    made = 0
                    for a_i, b_i in raw:
                        if made >= n_new:
                            break
                        a = state.member_order[int(a_i)]
                        b = state.member_order[int(b_i)]
                        if add_edge(a, b, int(rng.integers(cutoff + 1, day_end))):
                            made += 1

    exclusions: frozenset[str] = frozenset()
    if config.exclusion_count:
        picks = rng.choice(config.user_count, size=config.exclusion_count, replace=False)
        exclusions = frozenset(users[int(p)] for p in picks)

    dataset = build_dataset(
        groups, chats, invitations, friendships, profiles, (start, end), exclusions
    )
    truth = GroundTruth(
        modes={s.group_id: s.mode for s in states},
        activation_times={s.group_id: dict(s.join_time) for s in states},
        invitation_probs=invitation_probs,
        draw_stats=draw_stats,
        warnings=warnings,
        config=config,
    )
    return dataset, truth
