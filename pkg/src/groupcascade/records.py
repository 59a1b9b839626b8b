"""Event record types, dataset IO, validation, and cleaning rules.

A dataset is five CSV streams (groups, chats, invitations, friendships,
profiles) plus an exclusion list and an observation window, tied together by
a small JSON manifest.  Loading canonicalizes ordering and friendship
direction; validation replays the streams and checks referential and
temporal integrity; cleaning drops groups that are too quiet, too small, or
touched by excluded accounts.

Datasets are treated as immutable once validated: nothing in this package
mutates a loaded Dataset in place, so sharing one across threads is safe.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

GENDERS = ("male", "female", "unstated")

MIN_GROUP_CHATS = 5
MIN_FOUNDING_MEMBERS = 3


class ParseError(Exception):
    """A structurally malformed input file (bad header, field count, value)."""

    def __init__(self, path: str | Path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


@dataclass(frozen=True, slots=True)
class Violation:
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, rule: str, message: str) -> None:
        self.violations.append(Violation(rule, message))

    def counts_by_rule(self) -> dict[str, int]:
        return dict(Counter(v.rule for v in self.violations))

    @property
    def ok(self) -> bool:
        return not self.violations


class ValidationError(Exception):
    """Raised by parse_dataset when a loaded dataset violates integrity rules."""

    def __init__(self, report: ValidationReport):
        lines = [f"{v.rule}: {v.message}" for v in report.violations[:20]]
        if len(report.violations) > 20:
            lines.append(f"... and {len(report.violations) - 20} more")
        super().__init__(f"{len(report.violations)} validation violations\n" + "\n".join(lines))
        self.report = report


@dataclass(frozen=True, slots=True)
class UserProfile:
    """Demographic attributes. None / "unstated" mean the user declined to state."""

    user_id: str
    gender: str = "unstated"
    age: int | None = None
    country: str | None = None
    province: str | None = None
    city: str | None = None


@dataclass(frozen=True, slots=True)
class ChatRecord:
    user_id: str
    group_id: str
    time: int


@dataclass(frozen=True, slots=True)
class InvitationRecord:
    """A successful invitation; the invitee becomes a member at `time`."""

    inviter_id: str
    invitee_id: str
    group_id: str
    time: int


@dataclass(frozen=True, slots=True)
class FriendshipRecord:
    """Undirected friendship, canonicalized so user_a < user_b."""

    user_a: str
    user_b: str
    time: int


@dataclass(frozen=True)
class GroupRecord:
    """founding_members always includes creator_id and is creator-first, rest sorted."""

    group_id: str
    creator_id: str
    created_at: int
    founding_members: tuple[str, ...]


@dataclass
class Dataset:
    groups: dict[str, GroupRecord]
    chats: list[ChatRecord]
    invitations: list[InvitationRecord]
    friendships: list[FriendshipRecord]
    profiles: dict[str, UserProfile]
    window: tuple[int, int]
    exclusions: frozenset[str]


@dataclass(frozen=True)
class DatasetPaths:
    groups: Path
    chats: Path
    invitations: Path
    friendships: Path
    profiles: Path
    exclusions: Path

    @classmethod
    def in_dir(cls, directory: str | Path) -> "DatasetPaths":
        d = Path(directory)
        return cls(
            groups=d / "groups.csv",
            chats=d / "chats.csv",
            invitations=d / "invitations.csv",
            friendships=d / "friendships.csv",
            profiles=d / "profiles.csv",
            exclusions=d / "exclusions.csv",
        )


@dataclass
class CleaningReport:
    input_groups: int
    removed_few_chats: list[str]
    removed_excluded_user: list[str]
    removed_few_founders: list[str]
    output_groups: int

    def removed_total(self) -> int:
        return (
            len(self.removed_few_chats)
            + len(self.removed_excluded_user)
            + len(self.removed_few_founders)
        )


# ---------------------------------------------------------------------------
# loading


def _read_rows(path: Path, fields: tuple[str, ...]):
    try:
        handle = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "missing header row")
        if tuple(header) != fields:
            raise ParseError(path, 1, f"expected header {','.join(fields)}, got {','.join(header)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(fields):
                raise ParseError(path, line_no, f"expected {len(fields)} fields, got {len(row)}")
            yield line_no, row


def _parse_int(path: Path, line: int, text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(path, line, f"{what} is not an integer: {text!r}")


def _opt(text: str) -> str | None:
    return text if text else None


def build_dataset(
    groups: list[GroupRecord],
    chats: list[ChatRecord],
    invitations: list[InvitationRecord],
    friendships: list[FriendshipRecord],
    profiles: list[UserProfile],
    window: tuple[int, int],
    exclusions: frozenset[str],
) -> Dataset:
    """Canonicalize record collections into a Dataset.

    Friendships are flipped to user_a < user_b and exact duplicates (same
    pair, same time) collapse to one record.  Streams are sorted by time with
    id tie-breaks so loading is order-independent.
    """
    canon: dict[tuple[str, str, int], FriendshipRecord] = {}
    for f in friendships:
        a, b = sorted((f.user_a, f.user_b))
        canon.setdefault((a, b, f.time), FriendshipRecord(a, b, f.time))
    sorted_friendships = sorted(canon.values(), key=lambda r: (r.time, r.user_a, r.user_b))

    group_map: dict[str, GroupRecord] = {}
    for g in sorted(groups, key=lambda r: r.group_id):
        # creator first, rest sorted; malformed listings (creator absent or
        # repeated) are kept as-is for validation to flag
        creators = [m for m in g.founding_members if m == g.creator_id]
        rest = sorted(m for m in g.founding_members if m != g.creator_id)
        group_map[g.group_id] = replace(g, founding_members=tuple(creators + rest))

    return Dataset(
        groups=group_map,
        chats=sorted(chats, key=lambda r: (r.time, r.user_id, r.group_id)),
        invitations=sorted(
            invitations, key=lambda r: (r.time, r.group_id, r.inviter_id, r.invitee_id)
        ),
        friendships=sorted_friendships,
        profiles={p.user_id: p for p in sorted(profiles, key=lambda p: p.user_id)},
        window=(int(window[0]), int(window[1])),
        exclusions=frozenset(exclusions),
    )


def load_dataset(paths: DatasetPaths, window: tuple[int, int]) -> Dataset:
    """Read the CSV streams without semantic validation (parse errors still raise)."""
    groups: list[GroupRecord] = []
    seen_groups: set[str] = set()
    for line_no, row in _read_rows(paths.groups, ("group_id", "creator_id", "created_at", "founding_members")):
        gid, creator, created_text, founders_text = row
        if gid in seen_groups:
            raise ParseError(paths.groups, line_no, f"duplicate group_id {gid!r}")
        seen_groups.add(gid)
        founders = tuple(m for m in founders_text.split(";") if m)
        groups.append(GroupRecord(gid, creator, _parse_int(paths.groups, line_no, created_text, "created_at"), founders))

    chats = [
        ChatRecord(row[0], row[1], _parse_int(paths.chats, line_no, row[2], "time"))
        for line_no, row in _read_rows(paths.chats, ("user_id", "group_id", "time"))
    ]
    invitations = [
        InvitationRecord(row[0], row[1], row[2], _parse_int(paths.invitations, line_no, row[3], "time"))
        for line_no, row in _read_rows(
            paths.invitations, ("inviter_id", "invitee_id", "group_id", "time")
        )
    ]
    friendships = [
        FriendshipRecord(row[0], row[1], _parse_int(paths.friendships, line_no, row[2], "time"))
        for line_no, row in _read_rows(paths.friendships, ("user_a", "user_b", "time"))
    ]

    profiles: list[UserProfile] = []
    seen_users: set[str] = set()
    for line_no, row in _read_rows(
        paths.profiles, ("user_id", "gender", "age", "country", "province", "city")
    ):
        uid, gender, age_text, country, province, city = row
        if uid in seen_users:
            raise ParseError(paths.profiles, line_no, f"duplicate user_id {uid!r}")
        seen_users.add(uid)
        gender = gender or "unstated"
        if gender not in GENDERS:
            raise ParseError(paths.profiles, line_no, f"unknown gender {gender!r}")
        age = _parse_int(paths.profiles, line_no, age_text, "age") if age_text else None
        profiles.append(UserProfile(uid, gender, age, _opt(country), _opt(province), _opt(city)))

    exclusions = frozenset(
        row[0] for _, row in _read_rows(paths.exclusions, ("user_id",))
    )
    return build_dataset(groups, chats, invitations, friendships, profiles, window, exclusions)


def load_manifest(manifest_path: str | Path) -> tuple[DatasetPaths, tuple[int, int]]:
    """Read a dataset manifest; file entries are resolved relative to the manifest."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as handle:
        doc = json.load(handle)
    base = manifest_path.parent
    files = doc["files"]
    paths = DatasetPaths(**{key: base / files[key] for key in
                            ("groups", "chats", "invitations", "friendships", "profiles", "exclusions")})
    start, end = doc["window"]
    return paths, (int(start), int(end))


# ---------------------------------------------------------------------------
# validation


def _check_window(report: ValidationReport, window: tuple[int, int], time: int, what: str) -> None:
    start, end = window
    if not (start <= time <= end):
        report.add("window", f"{what} at {time} outside [{start}, {end}]")


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Replay every stream and collect integrity violations (does not raise)."""
    report = ValidationReport()
    profiles = dataset.profiles
    window = dataset.window

    def known(user_id: str, what: str) -> bool:
        if user_id not in profiles:
            report.add("dangling_id", f"{what} references unknown user {user_id!r}")
            return False
        return True

    for uid, profile in profiles.items():
        if profile.age is not None and not (0 <= profile.age <= 130):
            report.add("profile_age_range", f"user {uid!r} has age {profile.age}")

    for user in sorted(dataset.exclusions):
        known(user, "exclusion list")

    friend_time: dict[tuple[str, str], int] = {}
    for f in dataset.friendships:
        known(f.user_a, "friendship")
        known(f.user_b, "friendship")
        _check_window(report, window, f.time, f"friendship ({f.user_a},{f.user_b})")
        if f.user_a == f.user_b:
            report.add("friendship_self_loop", f"user {f.user_a!r} paired with itself")
            continue
        pair = (f.user_a, f.user_b)
        if pair in friend_time:
            report.add(
                "duplicate_friendship",
                f"pair ({f.user_a},{f.user_b}) listed at {friend_time[pair]} and {f.time}",
            )
        else:
            friend_time[pair] = f.time

    def friends_at(u: str, v: str, t: int) -> bool:
        a, b = sorted((u, v))
        formed = friend_time.get((a, b))
        return formed is not None and formed <= t

    # membership replay: founders at created_at, invitees at invitation time
    joined: dict[str, dict[str, int]] = {}
    for gid, group in dataset.groups.items():
        _check_window(report, window, group.created_at, f"group {gid} created_at")
        known(group.creator_id, f"group {gid} creator")
        if group.creator_id not in group.founding_members:
            report.add("creator_not_founding", f"group {gid} creator not in founding_members")
        if len(set(group.founding_members)) != len(group.founding_members):
            report.add("duplicate_membership", f"group {gid} lists a founding member twice")
        members = {}
        for founder in group.founding_members:
            known(founder, f"group {gid} founding member")
            members[founder] = group.created_at
        joined[gid] = members

    for inv in dataset.invitations:
        known(inv.inviter_id, "invitation")
        known(inv.invitee_id, "invitation")
        _check_window(report, window, inv.time, f"invitation of {inv.invitee_id}")
        members = joined.get(inv.group_id)
        if members is None:
            report.add("dangling_id", f"invitation references unknown group {inv.group_id!r}")
            continue
        inviter_join = members.get(inv.inviter_id)
        if inviter_join is None or inviter_join >= inv.time:
            report.add(
                "invitation_inviter_not_member",
                f"{inv.inviter_id!r} not a member of {inv.group_id} before {inv.time}",
            )
            continue
        if inv.invitee_id in members:
            report.add(
                "invitation_invitee_already_member",
                f"{inv.invitee_id!r} already in {inv.group_id} at {inv.time}",
            )
            continue
        if not friends_at(inv.inviter_id, inv.invitee_id, inv.time):
            report.add(
                "invitation_not_friends",
                f"{inv.inviter_id!r} and {inv.invitee_id!r} not friends at {inv.time}",
            )
        members[inv.invitee_id] = inv.time

    for chat in dataset.chats:
        known(chat.user_id, "chat")
        _check_window(report, window, chat.time, f"chat by {chat.user_id}")
        members = joined.get(chat.group_id)
        if members is None:
            report.add("dangling_id", f"chat references unknown group {chat.group_id!r}")
            continue
        join = members.get(chat.user_id)
        if join is None or join > chat.time:
            report.add(
                "chat_nonmember",
                f"{chat.user_id!r} chatted in {chat.group_id} at {chat.time} without membership",
            )
    return report


def parse_dataset(paths: DatasetPaths, window: tuple[int, int]) -> Dataset:
    """Load and fully validate; raises ParseError or ValidationError on bad input."""
    dataset = load_dataset(paths, window)
    report = validate_dataset(dataset)
    if not report.ok:
        raise ValidationError(report)
    return dataset


# ---------------------------------------------------------------------------
# cleaning


def group_members_ever(dataset: Dataset, group_id: str) -> set[str]:
    """Everyone who ever belonged to the group (founders plus invitees)."""
    members = set(dataset.groups[group_id].founding_members)
    for inv in dataset.invitations:
        if inv.group_id == group_id:
            members.add(inv.invitee_id)
    return members


def clean(dataset: Dataset, min_chats: int = MIN_GROUP_CHATS) -> tuple[Dataset, CleaningReport]:
    """Drop unusable groups; rules apply in a fixed priority order.

    1. groups with fewer than `min_chats` chat records,
    2. groups containing any excluded user,
    3. groups with fewer than MIN_FOUNDING_MEMBERS founding members.

    A group is counted against the first rule that removes it.  The returned
    Dataset keeps only surviving groups' chats and invitations; user-level
    streams are untouched.
    """
    chat_counts = Counter(c.group_id for c in dataset.chats)
    members_by_group: dict[str, set[str]] = {
        gid: set(g.founding_members) for gid, g in dataset.groups.items()
    }
    for inv in dataset.invitations:
        if inv.group_id in members_by_group:
            members_by_group[inv.group_id].add(inv.invitee_id)

    few_chats: list[str] = []
    excluded: list[str] = []
    few_founders: list[str] = []
    kept: set[str] = set()
    for gid, group in dataset.groups.items():
        if chat_counts.get(gid, 0) < min_chats:
            few_chats.append(gid)
        elif members_by_group[gid] & dataset.exclusions:
            excluded.append(gid)
        elif len(group.founding_members) < MIN_FOUNDING_MEMBERS:
            few_founders.append(gid)
        else:
            kept.add(gid)

    cleaned = Dataset(
        groups={gid: g for gid, g in dataset.groups.items() if gid in kept},
        chats=[c for c in dataset.chats if c.group_id in kept],
        invitations=[i for i in dataset.invitations if i.group_id in kept],
        friendships=dataset.friendships,
        profiles=dataset.profiles,
        window=dataset.window,
        exclusions=dataset.exclusions,
    )
    report = CleaningReport(
        input_groups=len(dataset.groups),
        removed_few_chats=few_chats,
        removed_excluded_user=excluded,
        removed_few_founders=few_founders,
        output_groups=len(kept),
    )
    return cleaned, report


# ---------------------------------------------------------------------------
# serialization


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_dataset(dataset: Dataset, out_dir: str | Path, manifest_name: str = "manifest.json") -> Path:
    """Serialize all streams plus a manifest into out_dir; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = DatasetPaths.in_dir(out)

    _write_csv(
        paths.groups,
        ("group_id", "creator_id", "created_at", "founding_members"),
        (
            (g.group_id, g.creator_id, g.created_at, ";".join(g.founding_members))
            for g in dataset.groups.values()
        ),
    )
    _write_csv(
        paths.chats,
        ("user_id", "group_id", "time"),
        ((c.user_id, c.group_id, c.time) for c in dataset.chats),
    )
    _write_csv(
        paths.invitations,
        ("inviter_id", "invitee_id", "group_id", "time"),
        ((i.inviter_id, i.invitee_id, i.group_id, i.time) for i in dataset.invitations),
    )
    _write_csv(
        paths.friendships,
        ("user_a", "user_b", "time"),
        ((f.user_a, f.user_b, f.time) for f in dataset.friendships),
    )
    _write_csv(
        paths.profiles,
        ("user_id", "gender", "age", "country", "province", "city"),
        (
            (
                p.user_id,
                p.gender,
                "" if p.age is None else p.age,
                p.country or "",
                p.province or "",
                p.city or "",
            )
            for p in dataset.profiles.values()
        ),
    )
    _write_csv(paths.exclusions, ("user_id",), ((u,) for u in sorted(dataset.exclusions)))

    manifest = {
        "window": [dataset.window[0], dataset.window[1]],
        "files": {
            "groups": paths.groups.name,
            "chats": paths.chats.name,
            "invitations": paths.invitations.name,
            "friendships": paths.friendships.name,
            "profiles": paths.profiles.name,
            "exclusions": paths.exclusions.name,
        },
    }
    manifest_path = out / manifest_name
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest_path
