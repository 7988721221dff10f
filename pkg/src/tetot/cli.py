"""Command-line frontend for the transferability toolkit.

Every subcommand writes one JSON document to stdout (or ``--out``) and a
one-line human summary to stderr. Documents carry the command name, tool
version, a UTC timestamp, the effective config, and the metric reports;
apart from the timestamp they are byte-identical across reruns with the
same inputs and seed (volatile wall-clock fields are stripped). Exit codes:
0 success, 1 bad input or usage, 2 malformed file.

Subcommands::

    compute       full metric between a source and a target embedding file
    approx        statistics-only variant (source embeddings or STA1 stats)
    entropy       prediction-entropy baseline on a target
    accuracy      head accuracy on a labeled embedding file
    stats         fit Gaussian statistics and write an STA1 file
    rank          score a candidate manifest and order it (best first)
    correlate     Pearson rho between manifest scores and accuracies
    gen-fixtures  synthetic benchmark files for demos and tests

Batch manifests are JSON arrays of ``{candidate_id, source, target, head,
accuracy?}``; relative paths resolve against the manifest's directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import prediction_entropy, transferability_ground_truth
from .data_model import (
    MetricReport,
    NormalizationMode,
    TetotConfig,
    generate_synthetic_fixture,
)
from .errors import FormatError, InputError, TetotError
from .evaluation import Candidate, correlate_with_accuracy, rank_candidates
from .formats import (
    load_classifier_head,
    load_embedding_set,
    load_gaussian_stats,
    save_classifier_head,
    save_embedding_set,
    save_gaussian_stats,
)
from .gaussian import compute_tetot_approx, gaussian_stats
from .metric import compute_tetot

_METRIC_CHOICES = ("tetot", "tetot_approx", "entropy")


def _config_from_args(args) -> TetotConfig:
    return TetotConfig(
        label_weight=getattr(args, "label_weight", 1.0),
        norm_mode=NormalizationMode.from_name(getattr(args, "norm", "l2")),
        num_source=getattr(args, "num_source", None),
        num_target=getattr(args, "num_target", None),
        seed=getattr(args, "seed", 0),
        solver=getattr(args, "solver", "exact"),
        epsilon=getattr(args, "epsilon", None),
    )


def _report_dict(report: MetricReport) -> dict:
    # wall time varies between identical runs; everything else must not
    d = report.to_dict()
    d["meta"] = {k: v for k, v in d["meta"].items() if k != "wall_time_s"}
    return d


def _document(command: str, config, reports, **extra) -> dict:
    doc = {
        "command": command,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config.to_dict() if config is not None else None,
        "reports": [_report_dict(r) for r in reports],
    }
    doc.update(extra)
    return doc


def _load_manifest(path: str) -> list:
    """Parse a candidate manifest; paths become absolute via its directory."""
    manifest_path = Path(path)
    try:
        text = manifest_path.read_text()
    except FileNotFoundError:
        raise InputError(f"manifest not found: {path}")
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})")
    if not isinstance(rows, list) or not rows:
        raise FormatError(f"{path}: manifest must be a non-empty JSON array")
    base = manifest_path.parent
    out = []
    seen = set()
    for idx, row in enumerate(rows):
        if not isinstance(row, dict) or "candidate_id" not in row:
            raise FormatError(f"{path}: entry {idx} lacks candidate_id")
        cid = row["candidate_id"]
        if cid in seen:
            raise InputError(f"{path}: duplicate candidate_id {cid!r}")
        seen.add(cid)
        entry = {"candidate_id": cid, "accuracy": row.get("accuracy")}
        for key in ("source", "target", "head"):
            entry[key] = str(base / row[key]) if key in row else None
        out.append(entry)
    return out


def _score_row(row: dict, metric: str, config: TetotConfig) -> MetricReport:
    if row["target"] is None:
        raise InputError(f"candidate {row['candidate_id']!r} lacks a target")
    tgt = load_embedding_set(row["target"])
    if metric == "entropy":
        if row["head"] is None:
            raise InputError(f"candidate {row['candidate_id']!r} lacks a head")
        return prediction_entropy(load_classifier_head(row["head"]), tgt)
    if row["source"] is None:
        raise InputError(f"candidate {row['candidate_id']!r} lacks a source")
    if metric == "tetot_approx":
        if row["source"].endswith(".sta"):
            stats = load_gaussian_stats(row["source"])
        else:
            stats = gaussian_stats(load_embedding_set(row["source"]))
        return compute_tetot_approx(stats, tgt, config)
    src = load_embedding_set(row["source"])
    head = load_classifier_head(row["head"]) if row["head"] else None
    return compute_tetot(src, tgt, head, config)


def _score_manifest(rows: list, metric: str, config: TetotConfig) -> list:
    """Evaluate all rows; results come back in manifest order."""
    workers = min(len(rows), os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: _score_row(r, metric, config), rows))


# ---------------------------------------------------------------------------
# subcommand handlers: each returns (json document, one-line summary)


def _cmd_compute(args):
    config = _config_from_args(args)
    src = load_embedding_set(args.source)
    tgt = load_embedding_set(args.target)
    head = load_classifier_head(args.head) if args.head else None
    report = compute_tetot(src, tgt, head, config)
    summary = (
        f"tetot = {report.value:.6f}  "
        f"(m={report.meta['m']}, n={report.meta['n']}, "
        f"lambda={report.meta['label_weight']:g}, solver={report.meta['solver']})"
    )
    return _document("compute", config, [report]), summary


def _cmd_approx(args):
    config = _config_from_args(args)
    if args.source_stats:
        stats = load_gaussian_stats(args.source_stats)
    else:
        stats = gaussian_stats(load_embedding_set(args.source_emb))
    tgt = load_embedding_set(args.target)
    report = compute_tetot_approx(stats, tgt, config)
    summary = (
        f"tetot_approx = {report.value:.6f}  "
        f"(dim={report.meta['dim']}, n={report.meta['n']})"
    )
    return _document("approx", config, [report]), summary


def _cmd_entropy(args):
    head = load_classifier_head(args.head)
    tgt = load_embedding_set(args.target)
    report = prediction_entropy(head, tgt)
    summary = (
        f"entropy = {report.value:.6f}  "
        f"(n={report.meta['n']}, K={report.meta['num_classes']})"
    )
    return _document("entropy", None, [report]), summary


def _cmd_accuracy(args):
    head = load_classifier_head(args.head)
    tgt = load_embedding_set(args.target)
    report = transferability_ground_truth(head, tgt)
    summary = f"accuracy = {report.value:.6f}  (n={report.meta['n']})"
    return _document("accuracy", None, [report]), summary


def _cmd_stats(args):
    emb = load_embedding_set(args.source)
    stats = gaussian_stats(emb)
    save_gaussian_stats(stats, args.stats_out)
    info = {
        "dim": stats.dim,
        "count": stats.count,
        "mean_norm": float(np.linalg.norm(stats.mean)),
        "cov_trace": float(np.trace(stats.cov)),
        "path": str(args.stats_out),
    }
    summary = f"wrote stats for {stats.count} samples (dim {stats.dim}) to {args.stats_out}"
    return _document("stats", None, [], stats=info), summary


def _cmd_rank(args):
    config = _config_from_args(args)
    rows = _load_manifest(args.manifest)
    reports = _score_manifest(rows, args.metric, config)
    batch = [
        Candidate(row["candidate_id"], rep, row["accuracy"])
        for row, rep in zip(rows, reports)
    ]
    ordering = rank_candidates(batch, args.direction)
    candidates = [
        {
            "candidate_id": row["candidate_id"],
            "value": rep.value,
            "accuracy": row["accuracy"],
        }
        for row, rep in zip(rows, reports)
    ]
    doc = _document(
        "rank",
        config,
        reports,
        metric=args.metric,
        direction=args.direction,
        candidates=candidates,
        ranking=ordering,
        selection=ordering[0],
    )
    return doc, f"best candidate: {ordering[0]}  (of {len(ordering)}, by {args.metric})"


def _cmd_correlate(args):
    config = _config_from_args(args)
    rows = _load_manifest(args.manifest)
    reports = _score_manifest(rows, args.metric, config)
    batch = [
        Candidate(row["candidate_id"], rep, row["accuracy"])
        for row, rep in zip(rows, reports)
    ]
    corr = correlate_with_accuracy(batch, args.metric)
    doc = _document(
        "correlate", config, reports, metric=args.metric, correlation=corr.to_dict()
    )
    summary = f"rho({args.metric}, accuracy) = {corr.rho:.4f} over {corr.n_points} candidates"
    return doc, summary


def _cmd_gen_fixtures(args):
    shifts = [float(s) for s in args.shifts.split(",") if s.strip()]
    source, targets, head, accs = generate_synthetic_fixture(
        dim=args.dim,
        num_classes=args.num_classes,
        shift_levels=shifts,
        n_per_domain=args.n_per_domain,
        seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_embedding_set(source, out_dir / "source.emb")
    save_classifier_head(head, out_dir / "head.hed")
    manifest = []
    files = ["source.emb", "head.hed"]
    for idx, (tgt, acc) in enumerate(zip(targets, accs)):
        name = f"target_{idx:02d}.emb"
        save_embedding_set(tgt, out_dir / name)
        files.append(name)
        manifest.append(
            {
                "candidate_id": f"shift_{idx:02d}",
                "source": "source.emb",
                "target": name,
                "head": "head.hed",
                "accuracy": acc,
            }
        )
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    files.append("manifest.json")
    doc = _document(
        "gen-fixtures",
        None,
        [],
        out_dir=str(out_dir),
        files=files,
        shift_levels=shifts,
        true_accuracies={m["candidate_id"]: m["accuracy"] for m in manifest},
    )
    summary = f"wrote {len(files)} fixture files to {out_dir}"
    return doc, summary


# ---------------------------------------------------------------------------
# parser


def _add_config_flags(p: argparse.ArgumentParser, sampling_only: bool = False):
    if not sampling_only:
        p.add_argument(
            "--lambda",
            dest="label_weight",
            type=float,
            default=1.0,
            metavar="W",
            help="label cost weight (default 1; 0 disables pseudo-labels)",
        )
        p.add_argument(
            "--norm",
            choices=("none", "l2", "zscore"),
            default="l2",
            help="feature normalization (default l2)",
        )
        p.add_argument(
            "--num-source",
            type=int,
            default=None,
            metavar="M",
            help="subsample the source to M rows (default: all)",
        )
        p.add_argument(
            "--solver",
            choices=("exact", "sinkhorn"),
            default="exact",
            help="transport solver (default exact)",
        )
        p.add_argument(
            "--epsilon",
            type=float,
            default=None,
            metavar="E",
            help="sinkhorn regularization (default: 0.01 * mean cost)",
        )
    p.add_argument(
        "--num-target",
        type=int,
        default=None,
        metavar="N",
        help="subsample the target to N rows (default: all)",
    )
    p.add_argument("--seed", type=int, default=0, help="subsampling seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tetot",
        description="Estimate transferability of a frozen classifier between "
        "embedding domains. Embedding files are EMB1 binaries (or CSV with a "
        "header row); labels travel in a .lbl sidecar next to the embeddings; "
        "heads are HED1 files; Gaussian statistics are STA1 files.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("compute", help="full metric between two embedding files")
    p.add_argument("--source", required=True, help="labeled source embeddings")
    p.add_argument("--target", required=True, help="target embeddings")
    p.add_argument("--head", default=None, help="classifier head (HED1); needed unless --lambda 0")
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_compute)

    p = sub.add_parser("approx", help="statistics-only variant (no source data needed)")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--source-emb", help="source embeddings to fit statistics from")
    grp.add_argument("--source-stats", help="precomputed STA1 statistics file")
    p.add_argument("--target", required=True, help="target embeddings")
    _add_config_flags(p, sampling_only=True)
    p.set_defaults(handler=_cmd_approx)

    p = sub.add_parser("entropy", help="prediction-entropy baseline on a target")
    p.add_argument("--target", required=True, help="target embeddings")
    p.add_argument("--head", required=True, help="classifier head (HED1)")
    p.set_defaults(handler=_cmd_entropy)

    p = sub.add_parser("accuracy", help="head accuracy on a labeled embedding file")
    p.add_argument("--target", required=True, help="labeled embeddings")
    p.add_argument("--head", required=True, help="classifier head (HED1)")
    p.set_defaults(handler=_cmd_accuracy)

    p = sub.add_parser("stats", help="fit Gaussian statistics and write STA1")
    p.add_argument("--source", required=True, help="embeddings to fit")
    p.add_argument("--stats-out", required=True, help="output STA1 path")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("rank", help="order manifest candidates by a metric")
    p.add_argument("--manifest", required=True, help="candidate manifest JSON")
    p.add_argument("--metric", choices=_METRIC_CHOICES, default="tetot")
    p.add_argument(
        "--direction",
        choices=("lower_is_better", "higher_is_better"),
        default="lower_is_better",
    )
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser(
        "correlate", help="Pearson rho between manifest scores and accuracies"
    )
    p.add_argument("--manifest", required=True, help="candidate manifest JSON")
    p.add_argument("--metric", choices=_METRIC_CHOICES, default="tetot")
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_correlate)

    p = sub.add_parser("gen-fixtures", help="write a synthetic benchmark to a directory")
    p.add_argument("--out-dir", required=True, help="destination directory")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--num-classes", type=int, default=4)
    p.add_argument(
        "--shifts",
        default="0,0.5,1,1.5,2,2.5,3,3.5,4,4.5",
        help="comma-separated shift levels, one target domain each",
    )
    p.add_argument("--n-per-domain", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_gen_fixtures)

    for sp in sub.choices.values():
        sp.add_argument("--out", default=None, help="write the JSON document here instead of stdout")

    return parser


def run(argv=None) -> int:
    """Parse argv and execute; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract reserves 2 for
        # malformed files, so usage problems map to 1 (help/version stay 0)
        return 0 if exc.code in (0, None) else 1
    try:
        doc, summary = args.handler(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TetotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    print(summary, file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
