"""Batch command line: validate, clean, features, curves, train-eval, synth.

Every run that writes files also writes a run manifest recording the
command, input hashes, a hash of the resolved parameters, the seed, and
output hashes.  Reruns with identical inputs and seed produce identical
bytes; only the duration field of the manifest differs.

Exit codes: 0 success, 1 data or task failure, 2 usage or environment
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .cascade import CascadeError
from .context import AnalysisContext
from .empirics import (
    DEFAULT_SNAPSHOT_GAP_SECONDS,
    adoption_curve,
    all_lifespans,
    diversity_curve,
    empirical_cdf,
    first_latencies,
    invitation_intervals,
    lifespan_histogram,
)
from .features import (
    group_feature_schema,
    group_feature_vector,
    invitee_feature_schema,
    invitee_feature_vector,
    inviter_feature_schema,
    inviter_feature_vector,
)
from .learner import (
    Hyper,
    ablation,
    assemble_invitee,
    assemble_inviter,
    assemble_separability,
    evaluate_cv,
    feature_matrix,
    train,
)
from .records import (
    ParseError,
    ValidationError,
    clean,
    load_dataset,
    load_manifest,
    validate_dataset,
    write_dataset,
)
from .temporal import fringe_at
from .units import DAY_SECONDS, HOUR_SECONDS, MINUTE_SECONDS, MONTH_SECONDS
from .synthgen import SynthConfig, default_desk_config, generate

DEFAULT_EARLY_AGES = ("+1h", "+1d", "+5d", "+10d", "+20d", "+1mo")


class UsageError(Exception):
    """Bad flags, tokens, or configs; maps to exit code 2."""


# ---------------------------------------------------------------------------
# timestamp specs

_AGE_UNITS = {
    "s": 1,
    "min": MINUTE_SECONDS,
    "h": HOUR_SECONDS,
    "d": DAY_SECONDS,
    "mo": MONTH_SECONDS,
}


def parse_when(text: str) -> tuple[str, int]:
    """'+1h', '+5d', '+1mo' -> ('age', seconds); plain integers -> ('abs', t)."""
    if text.startswith("+"):
        match = re.fullmatch(r"\+(\d+)(s|min|h|d|mo)", text)
        if not match:
            units = "/".join(sorted(_AGE_UNITS))
            raise UsageError(f"bad age token {text!r}; expected +N with unit {units}")
        return "age", int(match.group(1)) * _AGE_UNITS[match.group(2)]
    try:
        return "abs", int(text)
    except ValueError:
        raise UsageError(f"bad timestamp {text!r}; expected seconds or +N age token") from None


def parse_ratio(text: str) -> tuple[int, int]:
    match = re.fullmatch(r"(\d+):(\d+)", text)
    if not match or int(match.group(1)) == 0 or int(match.group(2)) == 0:
        raise UsageError(f"bad ratio {text!r}; expected positive 'a:b'")
    return int(match.group(1)), int(match.group(2))


# ---------------------------------------------------------------------------
# output plumbing


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    os.replace(tmp, path)


@dataclass
class RunManifest:
    command: str
    parameters: dict
    inputs: dict[str, str]
    config_hash: str
    seed: int | None
    outputs: dict[str, str]
    tool_version: str
    duration_seconds: float


def _hash_params(parameters: dict) -> str:
    return hashlib.sha256(
        json.dumps(parameters, sort_keys=True).encode("utf-8")
    ).hexdigest()


class _Run:
    """Collects inputs/outputs during a command and lands the run manifest."""

    def __init__(self, command: str, parameters: dict, seed: int | None = None):
        self.command = command
        self.parameters = parameters
        self.seed = seed
        self.started = time.monotonic()
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def note_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = _sha256(Path(path))

    def note_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = _sha256(Path(path))

    def write(self, path: Path) -> None:
        manifest = RunManifest(
            command=self.command,
            parameters=self.parameters,
            inputs=dict(sorted(self.inputs.items())),
            config_hash=_hash_params(self.parameters),
            seed=self.seed,
            outputs=dict(sorted(self.outputs.items())),
            tool_version=__version__,
            duration_seconds=round(time.monotonic() - self.started, 6),
        )
        _atomic_write_text(path, json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")


def _load(manifest_path: str | Path, run: _Run | None = None):
    paths, window = load_manifest(manifest_path)
    if run is not None:
        run.note_input(manifest_path)
        for path in (paths.groups, paths.chats, paths.invitations,
                     paths.friendships, paths.profiles, paths.exclusions):
            run.note_input(path)
    return load_dataset(paths, window)


def _float(value: float) -> str:
    return repr(float(value))


def _curve_rows(curve) -> list[tuple[str, str, str, str, str]]:
    return [
        (_float(x), _float(y), str(n), _float(lo), _float(hi))
        for x, y, n, lo, hi in curve.rows()
    ]


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args: argparse.Namespace) -> int:
    dataset = _load(args.manifest)
    report = validate_dataset(dataset)
    counts = report.counts_by_rule()
    if not counts:
        print("ok: 0 violations")
        return 0
    for rule in sorted(counts):
        print(f"{rule}: {counts[rule]}")
    for violation in report.violations[:20]:
        print(f"  {violation.rule}: {violation.message}")
    print(f"invalid: {len(report.violations)} violations")
    return 1


def cmd_clean(args: argparse.Namespace) -> int:
    run = _Run("clean", {"manifest": str(args.manifest), "out": str(args.out)})
    dataset = _load(args.manifest, run)
    report = validate_dataset(dataset)
    if not report.ok:
        raise ValidationError(report)
    cleaned, cleaning = clean(dataset)
    out = Path(args.out)
    manifest_path = write_dataset(cleaned, out)
    for name in ("groups", "chats", "invitations", "friendships", "profiles", "exclusions"):
        run.note_output(out / f"{name}.csv")
    run.note_output(manifest_path)
    summary = {
        "input_groups": cleaning.input_groups,
        "removed_few_chats": sorted(cleaning.removed_few_chats),
        "removed_excluded_user": sorted(cleaning.removed_excluded_user),
        "removed_few_founders": sorted(cleaning.removed_few_founders),
        "output_groups": cleaning.output_groups,
    }
    _atomic_write_text(out / "cleaning_report.json", json.dumps(summary, indent=2) + "\n")
    run.note_output(out / "cleaning_report.json")
    run.write(out / "run_manifest.json")
    print(
        f"kept {cleaning.output_groups}/{cleaning.input_groups} groups "
        f"(-{len(cleaning.removed_few_chats)} few chats, "
        f"-{len(cleaning.removed_excluded_user)} excluded user, "
        f"-{len(cleaning.removed_few_founders)} few founders)"
    )
    return 0


def _resolve_time(kind: str, value: int, created_at: int) -> int:
    return created_at + value if kind == "age" else value


def cmd_features(args: argparse.Namespace) -> int:
    kind, value = parse_when(args.at)
    run = _Run(
        "features",
        {"manifest": str(args.manifest), "level": args.level, "at": args.at, "out": str(args.out)},
    )
    dataset = _load(args.manifest, run)
    ctx = AnalysisContext.from_dataset(dataset)

    if args.level == "group":
        names, families = group_feature_schema(ctx.vocab)
        header: tuple[str, ...] = ("group_id",) + names
        rows = []
        for gid in ctx.group_ids():
            t = _resolve_time(kind, value, dataset.groups[gid].created_at)
            if t < dataset.groups[gid].created_at:
                continue
            vector = group_feature_vector(ctx, gid, t)
            rows.append((gid,) + tuple(_float(v) for v in vector.values))
    elif args.level == "inviter":
        names, families = inviter_feature_schema()
        header = ("group_id", "user_id") + names
        rows = []
        for gid in ctx.group_ids():
            t = _resolve_time(kind, value, dataset.groups[gid].created_at)
            if t < dataset.groups[gid].created_at:
                continue
            for user in sorted(ctx.timeline.members_at(gid, t)):
                vector = inviter_feature_vector(ctx, user, gid, t)
                rows.append((gid, user) + tuple(_float(v) for v in vector.values))
    else:
        names, families = invitee_feature_schema(ctx.vocab)
        header = ("group_id", "user_id") + names
        rows = []
        for gid in ctx.group_ids():
            t = _resolve_time(kind, value, dataset.groups[gid].created_at)
            if t < dataset.groups[gid].created_at:
                continue
            for user in sorted(fringe_at(ctx.graph, ctx.timeline, gid, t)):
                vector = invitee_feature_vector(ctx, user, gid, t)
                rows.append((gid, user) + tuple(_float(v) for v in vector.values))

    out = Path(args.out)
    _write_csv(out, header, rows)
    run.note_output(out)
    schema_path = out.with_suffix(".schema.json")
    schema = {
        "level": args.level,
        "at": args.at,
        "families": {name: family for name, family in zip(names, families)},
    }
    _atomic_write_text(schema_path, json.dumps(schema, indent=2, sort_keys=True) + "\n")
    run.note_output(schema_path)
    run.write(out.with_suffix(".run.json"))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


CURVE_HEADER = ("x", "probability", "count", "ci_low", "ci_high")


def cmd_curves(args: argparse.Namespace) -> int:
    params = {
        "manifest": str(args.manifest),
        "which": args.which,
        "out": str(args.out),
        "t1": args.t1,
        "gap": args.gap,
    }
    if args.which in ("adoption", "diversity") and args.t1 is None:
        raise UsageError(f"--which {args.which} requires --t1")
    run = _Run("curves", params)
    dataset = _load(args.manifest, run)
    ctx = AnalysisContext.from_dataset(dataset)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if args.which == "lifespan":
        records = all_lifespans(ctx)
        cdf = empirical_cdf([r.lifespan_seconds / DAY_SECONDS for r in records])
        path = out / "lifespan_cdf.csv"
        _write_csv(path, ("lifespan_days",) + CURVE_HEADER[1:], _curve_rows(cdf))
        written.append(path)
        hist = lifespan_histogram(records)
        path = out / "lifespan_hist.csv"
        _write_csv(path, ("day_bin", "groups"), [(str(b), str(n)) for b, n in hist])
        written.append(path)
    elif args.which == "latency":
        cdf = empirical_cdf([v / HOUR_SECONDS for v in first_latencies(ctx)])
        path = out / "latency_cdf.csv"
        _write_csv(path, ("latency_hours",) + CURVE_HEADER[1:], _curve_rows(cdf))
        written.append(path)
    elif args.which == "interval":
        cdf = empirical_cdf([v / HOUR_SECONDS for v in invitation_intervals(ctx)])
        path = out / "interval_cdf.csv"
        _write_csv(path, ("interval_hours",) + CURVE_HEADER[1:], _curve_rows(cdf))
        written.append(path)
    elif args.which == "adoption":
        curve = adoption_curve(ctx, args.t1, args.gap)
        path = out / "adoption.csv"
        _write_csv(path, ("friends_inside",) + CURVE_HEADER[1:], _curve_rows(curve))
        written.append(path)
    else:
        curves = diversity_curve(ctx, args.t1, args.gap)
        for label in sorted(curves):
            path = out / f"diversity_k{label}.csv"
            _write_csv(path, ("friend_components",) + CURVE_HEADER[1:], _curve_rows(curves[label]))
            written.append(path)

    for path in written:
        run.note_output(path)
    run.write(out / "run_manifest.json")
    print(f"wrote {len(written)} file(s) to {out}")
    return 0


REPORT_HEADER = ("mask", "auc", "precision", "recall", "f1")


def _report_rows(reports) -> list[tuple[str, str, str, str, str]]:
    return [
        (label, _float(auc), _float(p), _float(r), _float(f1))
        for label, auc, p, r, f1 in (rep.row() for rep in reports)
    ]


def cmd_train_eval(args: argparse.Namespace) -> int:
    ratio = parse_ratio(args.ratio)
    params = {
        "manifest": str(args.manifest),
        "task": args.task,
        "out": str(args.out),
        "seed": args.seed,
        "folds": args.folds,
        "delta_t": args.delta_t,
        "ratio": args.ratio,
        "ablate": bool(args.ablate),
        "at": args.at,
        "ages": args.ages,
        "c": args.c,
        "epochs": args.epochs,
    }
    run = _Run("train-eval", params, seed=args.seed)
    dataset = _load(args.manifest, run)
    ctx = AnalysisContext.from_dataset(dataset)
    hyper = Hyper(c=args.c, epochs=args.epochs, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.task == "early":
        tokens = [token.strip() for token in args.ages.split(",") if token.strip()]
        if not tokens:
            raise UsageError("--ages must name at least one age token")
        rows = []
        models = {}
        for token in tokens:
            kind, value = parse_when(token)
            if kind != "age":
                raise UsageError(f"--ages entries must be +N age tokens, got {token!r}")
            examples = assemble_separability(ctx, feature_age=value)
            report = evaluate_cv(examples, None, hyper, args.folds, args.seed)
            rows.append((token,) + tuple(_float(v) for v in report.row()[1:]))
            models[token] = train(examples, None, hyper).to_json_dict()
        _write_csv(out / "report.csv", ("age",) + REPORT_HEADER[1:], rows)
        _atomic_write_text(
            out / "model.json", json.dumps({"task": "early", "models": models}, sort_keys=True) + "\n"
        )
    else:
        if args.task == "separability":
            kind, value = parse_when(args.at)
            if kind != "age":
                raise UsageError(f"--at for separability must be a +N age token, got {args.at!r}")
            examples = assemble_separability(ctx, feature_age=value)
        elif args.task == "inviter":
            examples = assemble_inviter(ctx, delta_t=args.delta_t, seed=args.seed, ratio=ratio)
        else:
            examples = assemble_invitee(ctx, delta_t=args.delta_t, seed=args.seed, ratio=ratio)
        if args.ablate:
            reports = ablation(examples, None, hyper, args.folds, args.seed)
        else:
            reports = [evaluate_cv(examples, None, hyper, args.folds, args.seed)]
        _write_csv(out / "report.csv", REPORT_HEADER, _report_rows(reports))
        model = train(examples, None, hyper)
        _atomic_write_text(
            out / "model.json", json.dumps(model.to_json_dict(), sort_keys=True) + "\n"
        )

    run.note_output(out / "report.csv")
    run.note_output(out / "model.json")
    run.write(out / "run_manifest.json")
    print(f"wrote report.csv and model.json to {out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config is not None:
        try:
            config = SynthConfig.load(args.config)
        except (OSError, TypeError, KeyError, ValueError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load config {args.config}: {exc}") from exc
    else:
        config = default_desk_config()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    try:
        config.validate()
    except ValueError as exc:
        raise UsageError(f"invalid config: {exc}") from exc

    run = _Run("synth", {"config": None if args.config is None else str(args.config),
                         "out": str(args.out)}, seed=config.seed)
    if args.config is not None:
        run.note_input(args.config)
    dataset, truth = generate(config)
    out = Path(args.out)
    manifest_path = write_dataset(dataset, out)
    truth.save(out / "groundtruth.json")
    config.save(out / "config.json")
    for name in ("groups", "chats", "invitations", "friendships", "profiles", "exclusions"):
        run.note_output(out / f"{name}.csv")
    run.note_output(manifest_path)
    run.note_output(out / "groundtruth.json")
    run.note_output(out / "config.json")
    run.write(out / "run_manifest.json")
    print(
        f"wrote {len(dataset.groups)} groups, {len(dataset.chats)} chats, "
        f"{len(dataset.invitations)} invitations to {out}"
    )
    if truth.warnings:
        print(f"{len(truth.warnings)} generator warning(s); see groundtruth.json")
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupcascade",
        description="Reconstruct group lifecycles and invitation cascades from event logs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset against all integrity rules")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("clean", help="apply retention rules and write the cleaned dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("features", help="extract one feature row per entity at a time")
    p.add_argument("--manifest", required=True)
    p.add_argument("--level", required=True, choices=("group", "inviter", "invitee"))
    p.add_argument("--at", required=True, help="absolute seconds or age token like +1h/+5d/+1mo")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("curves", help="estimate empirical curves as CSV files")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--which", required=True, choices=("lifespan", "latency", "interval", "adoption", "diversity")
    )
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--t1", type=int, default=None, help="first snapshot time (adoption/diversity)")
    p.add_argument("--gap", type=int, default=DEFAULT_SNAPSHOT_GAP_SECONDS,
                   help="seconds between snapshots")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("train-eval", help="assemble a task, cross-validate, write the report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--task", required=True, choices=("separability", "early", "inviter", "invitee"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--delta-t", dest="delta_t", type=int, default=DAY_SECONDS)
    p.add_argument("--ratio", default="1:2", help="positive:negative downsampling ratio")
    p.add_argument("--ablate", action="store_true", help="add per-family ablation rows")
    p.add_argument("--at", default="+1mo", help="feature age for separability")
    p.add_argument("--ages", default=",".join(DEFAULT_EARLY_AGES),
                   help="comma-separated age tokens for the early task")
    p.add_argument("--c", type=float, default=1.0, help="inverse regularization strength")
    p.add_argument("--epochs", type=int, default=50)
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset with ground truth")
    p.add_argument("--config", default=None, help="SynthConfig JSON; defaults to the desk config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"invalid dataset: {exc}", file=sys.stderr)
        return 1
    except (CascadeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
