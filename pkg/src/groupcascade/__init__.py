"""Lifecycle and membership-cascade analysis of invitation-only chat groups.

The package ingests timestamped event logs (group creations, chats,
invitations, friendship formation), rebuilds per-group membership timelines
and invitation cascade trees, derives structural / demographic / behavioral
features at arbitrary snapshot times, estimates empirical adoption curves,
and trains linear max-margin classifiers for four prediction tasks.  A
seeded synthetic generator produces desk-scale datasets with known planted
dynamics so every estimator can be checked end to end.
"""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    ChatRecord,
    CleaningReport,
    Dataset,
    DatasetPaths,
    FriendshipRecord,
    GroupRecord,
    InvitationRecord,
    ParseError,
    UserProfile,
    ValidationError,
    clean,
    load_dataset,
    load_manifest,
    parse_dataset,
    validate_dataset,
    write_dataset,
)
from .temporal import MembershipTimeline, TemporalFriendGraph, fringe_at  # noqa: F401
from .cascade import CascadeTree, build_cascade_tree, cascade_summary, wiener_index  # noqa: F401
from .context import AnalysisContext  # noqa: F401
