"""Invitation cascade trees: construction, shape statistics, Wiener index.

Each group yields one tree rooted at its creator.  Founding members other
than the creator attach directly under the root; every later member hangs
under whoever invited them.  Parents always join strictly before their
children, so the structure is acyclic by construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .records import GroupRecord, InvitationRecord


class CascadeError(ValueError):
    """Invitation stream structurally inconsistent with tree construction."""


@dataclass
class CascadeTree:
    group_id: str
    root: str
    parent: dict[str, str | None]
    join_time: dict[str, int]
    children: dict[str, list[str]]
    ignored_invitations: int = 0

    @property
    def size(self) -> int:
        return len(self.parent)

    def nodes(self) -> list[str]:
        return list(self.parent)


def build_cascade_tree(group: GroupRecord, invitations: list[InvitationRecord]) -> CascadeTree:
    """Replay a group's invitations in time order into a tree.

    Duplicate invitations of an existing member are skipped and counted in
    ignored_invitations (concurrent invites race in real logs).  An inviter
    who is not yet a member at the invitation time is a structural error.
    """
    parent: dict[str, str | None] = {group.creator_id: None}
    join_time: dict[str, int] = {group.creator_id: group.created_at}
    children: dict[str, list[str]] = {group.creator_id: []}
    for member in group.founding_members:
        if member == group.creator_id:
            continue
        parent[member] = group.creator_id
        join_time[member] = group.created_at
        children[group.creator_id].append(member)
        children[member] = []

    ignored = 0
    ordered = sorted(invitations, key=lambda i: (i.time, i.inviter_id, i.invitee_id))
    for inv in ordered:
        if inv.group_id != group.group_id:
            raise CascadeError(
                f"invitation for group {inv.group_id!r} fed to tree of {group.group_id!r}"
            )
        if inv.invitee_id in parent:
            ignored += 1
            continue
        inviter_join = join_time.get(inv.inviter_id)
        if inviter_join is None or inviter_join >= inv.time:
            raise CascadeError(
                f"group {group.group_id}: inviter {inv.inviter_id!r} not a member before {inv.time}"
            )
        parent[inv.invitee_id] = inv.inviter_id
        join_time[inv.invitee_id] = inv.time
        children[inv.inviter_id].append(inv.invitee_id)
        children[inv.invitee_id] = []

    return CascadeTree(
        group_id=group.group_id,
        root=group.creator_id,
        parent=parent,
        join_time=join_time,
        children=children,
        ignored_invitations=ignored,
    )


def truncate_tree(tree: CascadeTree, t: int) -> CascadeTree:
    """Subtree of members who joined at or before t (parents join first, so
    the result stays connected)."""
    keep = {node for node, jt in tree.join_time.items() if jt <= t}
    if tree.root not in keep:
        raise ValueError(f"truncation time {t} precedes creation of {tree.group_id!r}")
    return CascadeTree(
        group_id=tree.group_id,
        root=tree.root,
        parent={n: tree.parent[n] for n in tree.parent if n in keep},
        join_time={n: tree.join_time[n] for n in tree.join_time if n in keep},
        children={n: [c for c in tree.children[n] if c in keep] for n in tree.children if n in keep},
        ignored_invitations=tree.ignored_invitations,
    )


def _nodes_outside_in(tree: CascadeTree) -> list[str]:
    """Nodes ordered so every child precedes its parent (reverse join order)."""
    return sorted(tree.parent, key=lambda n: (tree.join_time[n], n), reverse=True)


def node_depths(tree: CascadeTree) -> dict[str, int]:
    depths = {tree.root: 0}
    stack = [tree.root]
    while stack:
        node = stack.pop()
        for child in tree.children[node]:
            depths[child] = depths[node] + 1
            stack.append(child)
    return depths


def subtree_sizes(tree: CascadeTree) -> dict[str, int]:
    sizes = {node: 1 for node in tree.parent}
    for node in _nodes_outside_in(tree):
        up = tree.parent[node]
        if up is not None:
            sizes[up] += sizes[node]
    return sizes


def wiener_index(tree: CascadeTree) -> float:
    """Mean shortest-path distance over unordered node pairs; 0 for size < 2.

    Each edge (child, parent) lies on exactly size_child * (n - size_child)
    shortest paths, so one pass over the subtree sizes gives the pair-distance
    sum in linear time.
    """
    n = tree.size
    if n < 2:
        return 0.0
    sizes = subtree_sizes(tree)
    total = sum(
        sizes[node] * (n - sizes[node]) for node in tree.parent if tree.parent[node] is not None
    )
    return total / (n * (n - 1) / 2)


def nearest_rank_deciles(values: list[float]) -> tuple[float, ...]:
    """Nine deciles by the nearest-rank rule (ceil(q*n)-th order statistic);
    an empty input yields zeros."""
    if not values:
        return (0.0,) * 9
    ordered = sorted(values)
    n = len(ordered)
    return tuple(float(ordered[math.ceil(i / 10 * n) - 1]) for i in range(1, 10))


@dataclass(frozen=True)
class CascadeSummary:
    size: int
    depth_deciles: tuple[float, ...]
    subtree_deciles: tuple[float, ...]
    depth_counts: tuple[int, ...]   # members at depth 1..9
    wiener: float


def cascade_summary(tree: CascadeTree) -> CascadeSummary:
    """Shape statistics of a tree.

    Depth and subtree-size deciles run over non-root members: every member
    either was brought in by someone (depth >= 1) or is a founder at depth 1,
    and the root's subtree is always the whole tree, so including the root
    would only restate group size.
    """
    depths = node_depths(tree)
    sizes = subtree_sizes(tree)
    non_root = [n for n in tree.parent if n != tree.root]
    depth_values = [float(depths[n]) for n in non_root]
    size_values = [float(sizes[n]) for n in non_root]
    counts = tuple(sum(1 for n in non_root if depths[n] == d) for d in range(1, 10))
    return CascadeSummary(
        size=tree.size,
        depth_deciles=nearest_rank_deciles(depth_values),
        subtree_deciles=nearest_rank_deciles(size_values),
        depth_counts=counts,
        wiener=wiener_index(tree),
    )


def tree_edge_rows(tree: CascadeTree) -> list[tuple[str, str, int]]:
    """(member, parent, join_time) rows in join order; the root's parent is ''."""
    ordered = sorted(tree.parent, key=lambda n: (tree.join_time[n], n))
    return [(n, tree.parent[n] or "", tree.join_time[n]) for n in ordered]


def write_tree_csv(tree: CascadeTree, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("member_id", "parent_id", "join_time"))
        writer.writerows(tree_edge_rows(tree))
