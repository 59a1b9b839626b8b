"""Labeled-example assembly and a seeded linear max-margin classifier.

Four tasks share one protocol: take a feature snapshot strictly before a
reference time, label by what happens after it, and evaluate with stratified
cross-validation.  The classifier is a self-contained stochastic subgradient
hinge-loss fit so results are bit-reproducible from a seed; the objective
weights the mean hinge loss by C, which makes the optimum invariant under
duplicating the dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .context import AnalysisContext
from .empirics import all_lifespans, lifecycle_labels
from .features import (
    FeatureVector,
    group_feature_vector,
    invitee_feature_vector,
    inviter_feature_vector,
)
from .temporal import fringe_at
from .units import DAY_SECONDS, MONTH_SECONDS

FAMILY_ORDER = ("structure", "cascade", "demographics", "behavior", "local_structure")

SAMPLE_MIN_OFFSET_SECONDS = 600
SAMPLE_MAX_OFFSET_SECONDS = MONTH_SECONDS
DEFAULT_NEGATIVE_RATIO = (1, 2)


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    label: int
    task: str
    group_id: str
    user_id: str | None
    ref_time: int


@dataclass(frozen=True)
class Hyper:
    c: float = 1.0
    epochs: int = 50
    seed: int = 0


@dataclass
class LinearModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    std: np.ndarray
    mask_label: str
    hyper: Hyper

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        """Raw margins for rows whose columns match feature_names."""
        x = np.asarray(x, dtype=float)
        return ((x - self.mean) / self.std) @ self.weights + self.bias

    def to_json_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "mask": self.mask_label,
            "hyper": {"c": self.hyper.c, "epochs": self.hyper.epochs, "seed": self.hyper.seed},
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_json_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            feature_names=tuple(doc["feature_names"]),
            weights=np.asarray(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            mean=np.asarray(doc["mean"], dtype=float),
            std=np.asarray(doc["std"], dtype=float),
            mask_label=doc["mask"],
            hyper=Hyper(**doc["hyper"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        with open(path, encoding="utf-8") as handle:
            return cls.from_json_dict(json.load(handle))


@dataclass
class EvalReport:
    mask_label: str
    auc: float
    precision: float
    recall: float
    f1: float
    fold_aucs: list[float] = field(default_factory=list)

    def row(self) -> tuple[str, float, float, float, float]:
        return (self.mask_label, self.auc, self.precision, self.recall, self.f1)


# ---------------------------------------------------------------------------
# assembly


def _check_examples(examples: list[LabeledExample], task: str) -> None:
    if not examples:
        raise ValueError(f"{task}: no labeled examples could be assembled")
    names = examples[0].features.names
    for example in examples:
        if example.features.names != names:
            raise ValueError(f"{task}: inconsistent feature names across examples")


def assemble_separability(
    ctx: AnalysisContext,
    labels: dict[str, str] | None = None,
    feature_age: int = MONTH_SECONDS,
) -> list[LabeledExample]:
    """One example per labeled group: features at created_at + feature_age,
    label 1 for long-lived groups, 0 for short-lived ones."""
    if labels is None:
        labels = lifecycle_labels(all_lifespans(ctx))
    examples = []
    for gid in ctx.group_ids():
        label = labels.get(gid)
        if label not in ("short", "long"):
            continue
        t = ctx.dataset.groups[gid].created_at + feature_age
        examples.append(
            LabeledExample(
                features=group_feature_vector(ctx, gid, t),
                label=1 if label == "long" else 0,
                task="separability",
                group_id=gid,
                user_id=None,
                ref_time=t,
            )
        )
    _check_examples(examples, "separability")
    return examples


def _sample_window(ctx: AnalysisContext, group_id: str) -> tuple[int, int]:
    created = ctx.dataset.groups[group_id].created_at
    lo = created + SAMPLE_MIN_OFFSET_SECONDS
    hi = min(created + SAMPLE_MAX_OFFSET_SECONDS, ctx.dataset.window[1])
    return lo, hi


def inviter_label(ctx: AnalysisContext, user_id: str, group_id: str, t: int, delta_t: int) -> int:
    """1 iff the member sends an invitation in (t, t + delta_t]."""
    return 1 if ctx.invitations_by_user_in(group_id, user_id, t, t + delta_t) > 0 else 0


def invitee_label(ctx: AnalysisContext, user_id: str, group_id: str, t: int, delta_t: int) -> int:
    """1 iff the fringe user joins the group in (t, t + delta_t]."""
    join = ctx.timeline.join_time(group_id, user_id)
    return 1 if join is not None and t < join <= t + delta_t else 0


def downsample_negatives(
    examples: list[LabeledExample],
    rng: np.random.Generator,
    ratio: tuple[int, int] = DEFAULT_NEGATIVE_RATIO,
) -> list[LabeledExample]:
    """Keep every positive; thin negatives to ratio positives:negatives
    (rounded), preserving the original example order."""
    positives = [i for i, e in enumerate(examples) if e.label == 1]
    negatives = [i for i, e in enumerate(examples) if e.label == 0]
    if not positives:
        raise ValueError("down-sampling needs at least one positive example")
    target = min(len(negatives), round(len(positives) * ratio[1] / ratio[0]))
    chosen = set(rng.choice(np.asarray(negatives), size=target, replace=False).tolist()) if target else set()
    keep = set(positives) | chosen
    return [e for i, e in enumerate(examples) if i in keep]


def assemble_inviter(
    ctx: AnalysisContext,
    delta_t: int = DAY_SECONDS,
    seed: int = 0,
    ratio: tuple[int, int] = DEFAULT_NEGATIVE_RATIO,
) -> list[LabeledExample]:
    """Will this member invite someone within delta_t of a random moment?

    One reference time is drawn per (member, group) uniformly over
    [creation + 10 min, min(creation + 1 month, window end)); the member must
    already belong to the group at that moment.
    """
    rng = np.random.default_rng(seed)
    examples = []
    for gid in ctx.group_ids():
        lo, hi = _sample_window(ctx, gid)
        if hi <= lo:
            continue
        for user in ctx.timeline.members_ever(gid):
            t = int(rng.integers(lo, hi))
            join = ctx.timeline.join_time(gid, user)
            if join is None or join > t:
                continue
            examples.append(
                LabeledExample(
                    features=group_feature_vector(ctx, gid, t).concat(
                        inviter_feature_vector(ctx, user, gid, t)
                    ),
                    label=inviter_label(ctx, user, gid, t, delta_t),
                    task="inviter",
                    group_id=gid,
                    user_id=user,
                    ref_time=t,
                )
            )
    _check_examples(examples, "inviter")
    return downsample_negatives(examples, rng, ratio)


def assemble_invitee(
    ctx: AnalysisContext,
    delta_t: int = DAY_SECONDS,
    seed: int = 0,
    ratio: tuple[int, int] = DEFAULT_NEGATIVE_RATIO,
) -> list[LabeledExample]:
    """Will this fringe user join within delta_t of a random moment?

    Candidates are everyone ever adjacent to a member; a candidate only
    yields an example if they are in the fringe at their drawn moment.
    """
    rng = np.random.default_rng(seed)
    examples = []
    for gid in ctx.group_ids():
        lo, hi = _sample_window(ctx, gid)
        if hi <= lo:
            continue
        window_end = ctx.dataset.window[1]
        candidates: set[str] = set()
        ever_members = ctx.timeline.members_ever(gid)
        for member in ever_members:
            candidates.update(ctx.graph.neighbors_at(member, window_end))
        for user in sorted(candidates):
            t = int(rng.integers(lo, hi))
            members = ctx.timeline.members_at(gid, t)
            if user in members or not (ctx.graph.neighbors_at(user, t) & members):
                continue
            examples.append(
                LabeledExample(
                    features=group_feature_vector(ctx, gid, t).concat(
                        invitee_feature_vector(ctx, user, gid, t)
                    ),
                    label=invitee_label(ctx, user, gid, t, delta_t),
                    task="invitee",
                    group_id=gid,
                    user_id=user,
                    ref_time=t,
                )
            )
    _check_examples(examples, "invitee")
    return downsample_negatives(examples, rng, ratio)


# ---------------------------------------------------------------------------
# matrices and masks


def feature_matrix(
    examples: list[LabeledExample],
) -> tuple[np.ndarray, np.ndarray, tuple[str, ...], tuple[str, ...]]:
    _check_examples(examples, "feature_matrix")
    x = np.array([e.features.values for e in examples], dtype=float)
    y = np.array([e.label for e in examples], dtype=int)
    return x, y, examples[0].features.names, examples[0].features.families


def family_mask(families: tuple[str, ...], keep: set[str]) -> np.ndarray:
    mask = np.array([fam in keep for fam in families], dtype=bool)
    if not mask.any():
        raise ValueError(f"no features remain for families {sorted(keep)}")
    return mask


def families_present(families: tuple[str, ...]) -> list[str]:
    present = set(families)
    return [fam for fam in FAMILY_ORDER if fam in present]


# ---------------------------------------------------------------------------
# fitting


def _fit(x: np.ndarray, y: np.ndarray, hyper: Hyper) -> tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    """Stochastic subgradient descent on 0.5*||w||^2 / C + mean hinge loss."""
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("feature matrix and labels misaligned")
    if not np.isfinite(x).all():
        raise ValueError("non-finite feature values")
    classes = set(np.unique(y).tolist())
    if classes != {0, 1}:
        raise ValueError(f"training needs both classes, got labels {sorted(classes)}")

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0.0] = 1.0
    xs = (x - mean) / std
    signs = np.where(y == 1, 1.0, -1.0)

    lam = 1.0 / hyper.c
    rng = np.random.default_rng(hyper.seed)
    w = np.zeros(x.shape[1])
    b = 0.0
    t = 0
    for _ in range(hyper.epochs):
        for i in rng.permutation(len(xs)):
            t += 1
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if signs[i] * (xs[i] @ w + b) < 1.0:
                w += eta * signs[i] * xs[i]
                b += eta * signs[i]
    return w, b, mean, std


def train(
    examples: list[LabeledExample],
    mask_families: set[str] | None = None,
    hyper: Hyper = Hyper(),
) -> LinearModel:
    """Fit on all examples; standardization statistics come from this data."""
    x, y, names, families = feature_matrix(examples)
    if mask_families is None:
        mask = np.ones(len(names), dtype=bool)
        label = "all"
    else:
        mask = family_mask(families, mask_families)
        label = "+".join(fam for fam in FAMILY_ORDER if fam in mask_families)
    w, b, mean, std = _fit(x[:, mask], y, hyper)
    return LinearModel(
        feature_names=tuple(n for n, keep in zip(names, mask) if keep),
        weights=w,
        bias=b,
        mean=mean,
        std=std,
        mask_label=label,
        hyper=hyper,
    )


# ---------------------------------------------------------------------------
# metrics


def auc_score(labels, scores) -> float:
    """Rank-statistic AUC; tied scores count half.

    Equivalent to the fraction of (positive, negative) pairs ranked correctly.
    """
    y = np.asarray(labels, dtype=int)
    s = np.asarray(scores, dtype=float)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=float)
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1  # average rank, 1-based
        i = j + 1
    rank_sum = ranks[y == 1].sum()
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def _threshold_metrics(y: np.ndarray, scores: np.ndarray) -> tuple[float, float, float]:
    predicted = scores > 0.0
    tp = int((predicted & (y == 1)).sum())
    fp = int((predicted & (y == 0)).sum())
    fn = int((~predicted & (y == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    """Deal each class round-robin into folds after a seeded shuffle."""
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(y), dtype=int)
    for cls in (0, 1):
        indices = np.flatnonzero(y == cls)
        if len(indices) < folds:
            raise ValueError(f"class {cls} has {len(indices)} examples, need >= {folds}")
        shuffled = indices[rng.permutation(len(indices))]
        for slot, index in enumerate(shuffled):
            assignments[index] = slot % folds
    return [np.flatnonzero(assignments == f) for f in range(folds)]


def evaluate_cv(
    examples: list[LabeledExample],
    mask_families: set[str] | None = None,
    hyper: Hyper = Hyper(),
    folds: int = 10,
    seed: int = 0,
) -> EvalReport:
    """Stratified k-fold evaluation; metrics are averaged over folds and
    standardization always comes from the training folds alone."""
    x, y, names, families = feature_matrix(examples)
    if mask_families is None:
        mask = np.ones(len(names), dtype=bool)
        label = "all"
    else:
        mask = family_mask(families, mask_families)
        label = "+".join(fam for fam in FAMILY_ORDER if fam in mask_families)
    xm = x[:, mask]

    fold_indices = stratified_folds(y, folds, seed)
    aucs, precisions, recalls, f1s = [], [], [], []
    for fold in fold_indices:
        train_rows = np.setdiff1d(np.arange(len(y)), fold)
        w, b, mean, std = _fit(xm[train_rows], y[train_rows], hyper)
        scores = ((xm[fold] - mean) / std) @ w + b
        aucs.append(auc_score(y[fold], scores))
        p, r, f1 = _threshold_metrics(y[fold], scores)
        precisions.append(p)
        recalls.append(r)
        f1s.append(f1)
    return EvalReport(
        mask_label=label,
        auc=float(np.mean(aucs)),
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        f1=float(np.mean(f1s)),
        fold_aucs=[float(a) for a in aucs],
    )


def ablation(
    examples: list[LabeledExample],
    families: list[str] | None = None,
    hyper: Hyper = Hyper(),
    folds: int = 10,
    seed: int = 0,
) -> list[EvalReport]:
    """All features, leave-one-family-out, a random-guess reference row, and
    only-one-family, in a fixed report order."""
    _, _, _, present_families = feature_matrix(examples)
    if families is None:
        families = families_present(present_families)
    reports = [evaluate_cv(examples, None, hyper, folds, seed)]
    for family in families:
        keep = set(families) - {family}
        report = evaluate_cv(examples, keep, hyper, folds, seed)
        report.mask_label = f"-{family}"
        reports.append(report)
    # Chance-level reference: every ranking metric sits at one half.
    reports.append(EvalReport("random_guess", 0.5, 0.5, 0.5, 0.5))
    for family in families:
        report = evaluate_cv(examples, {family}, hyper, folds, seed)
        report.mask_label = f"+{family}"
        reports.append(report)
    return reports
