"""Command-line surface over the engine.

Exit codes: 0 success, 1 validation problem (bad flags, bad input, unknown
ids), 2 I/O problem (unreadable files, network failures, corrupt storage).
JSON output is canonical: identical state in, identical bytes out. Commands
operate on the project dot-directory and work offline; knowledge and
fix-time commands talk to the sync server when one is configured, and fall
back to project-local stores otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .errors import (
    BindFailure,
    CorruptJournal,
    UnknownFingerprint,
    WardenError,
)
from .fixtime import estimate_to_doc
from .ingest import (
    RunMeta,
    canonical_json_bytes,
    parse_findbugs_xml,
    parse_metrics_file,
    parse_sarif,
    run_to_doc,
)
from .knowledge import Vote, comment_to_doc, solution_to_doc
from .metrics import Direction, build_deltas, fit_impact, impact_to_doc, pattern_counts, recommend
from .model import Confidence, band_of
from .project import Project
from .triage import TriageConfig, TriageView, apply_level, view_to_doc


class CliUsageError(WardenError):
    """Bad flags or arguments; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliUsageError(message)


def _add_common_flags(parser: argparse.ArgumentParser, root: bool) -> None:
    # Attached to the root and to every subcommand, so the flags work in
    # either position; SUPPRESS keeps a subcommand from erasing a value
    # that was already parsed at the root.
    suppress = argparse.SUPPRESS
    parser.add_argument(
        "--project",
        default="." if root else suppress,
        help="project root directory",
    )
    parser.add_argument(
        "--server",
        default=None if root else suppress,
        help="sync server URL (default: WARDEN_SERVER environment variable)",
    )
    parser.add_argument(
        "--json",
        action="store_true",
        default=False if root else suppress,
        help="machine-readable canonical JSON output",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="warden", description="static-analysis warning triage")
    _add_common_flags(parser, root=True)
    common = _Parser(add_help=False)
    _add_common_flags(common, root=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_parser(name: str, **kwargs) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], **kwargs)

    ingest = add_parser("ingest", help="store an analysis run")
    ingest.add_argument("--format", choices=["findbugs", "sarif"], required=True)
    ingest.add_argument("--metrics", default=None, help="metrics snapshot JSON file")
    ingest.add_argument(
        "--project-id", default=None, help="server-side project id (default: dir name)"
    )
    ingest.add_argument("report", help="report file path")

    triage = add_parser("triage", help="print the triage view")
    _add_view_flags(triage)

    fp = add_parser("fp", help="false-positive marks")
    fp_sub = fp.add_subparsers(dest="action", required=True)
    fp_sub.add_parser("mark", parents=[common]).add_argument("fingerprint")
    fp_sub.add_parser("unmark", parents=[common]).add_argument("fingerprint")

    severity = add_parser("severity", help="severity overrides")
    severity_sub = severity.add_subparsers(dest="action", required=True)
    sev_set = severity_sub.add_parser("set", parents=[common])
    sev_set.add_argument("fingerprint")
    sev_set.add_argument("rank", type=int)
    severity_sub.add_parser("clear", parents=[common]).add_argument("fingerprint")

    comment = add_parser("comment", help="shared comments")
    comment_sub = comment.add_subparsers(dest="action", required=True)
    c_add = comment_sub.add_parser("add", parents=[common])
    c_add.add_argument("pattern_id")
    c_add.add_argument("text")
    c_add.add_argument("--author", default=None)
    c_add.add_argument("--fingerprint", default=None)

    solution = add_parser("solution", help="shared solution examples")
    solution_sub = solution.add_subparsers(dest="action", required=True)
    s_add = solution_sub.add_parser("add", parents=[common])
    s_add.add_argument("pattern_id")
    s_add.add_argument("text")
    s_add.add_argument("--code", default=None, help="code snippet")
    s_vote = solution_sub.add_parser("vote", parents=[common])
    s_vote.add_argument("solution_id")
    s_vote.add_argument("direction", choices=["up", "down"])

    fixtime = add_parser("fixtime", help="fix durations and estimates")
    fixtime_sub = fixtime.add_subparsers(dest="action", required=True)
    f_rec = fixtime_sub.add_parser("record", parents=[common])
    f_rec.add_argument("pattern_id")
    f_rec.add_argument("minutes", type=float)
    fixtime_sub.add_parser("estimate", parents=[common]).add_argument("pattern_id")

    metrics = add_parser("metrics", help="metric impact estimation")
    metrics_sub = metrics.add_subparsers(dest="action", required=True)
    metrics_sub.add_parser("impact", parents=[common])
    m_rec = metrics_sub.add_parser("recommend", parents=[common])
    m_rec.add_argument("--metric", required=True)
    m_rec.add_argument(
        "--direction", choices=["decrease", "increase"], default="decrease"
    )

    serve = add_parser("serve", help="run the sync server")
    serve.add_argument("--addr", default="127.0.0.1:8176", help="host:port")
    serve.add_argument("--storage", required=True, help="journal directory")

    report = add_parser("report", help="triage view plus fix-time estimates")
    _add_view_flags(report)

    return parser


def _add_view_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--level", type=int, default=None)
    parser.add_argument(
        "--min-confidence", choices=["high", "normal", "low"], default=None
    )
    parser.add_argument("--max-rank", type=int, default=None)
    parser.add_argument("--cap", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--preset", choices=["full", "none"], default=None)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _dispatch(args)
    except UnknownFingerprint as exc:
        print(f"unknown fingerprint: {exc}", file=sys.stderr)
        return 1
    except (BindFailure, CorruptJournal) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CliUsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except WardenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except httpx.HTTPError as exc:
        print(f"server unreachable: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "serve":
        # Long-running and independent of any project directory; must not
        # hold the project lock other invocations serialize on.
        return _cmd_serve(args)
    project = Project(args.project)
    server = args.server or os.environ.get("WARDEN_SERVER")
    with project.lock():
        if args.command == "ingest":
            return _cmd_ingest(args, project, server)
        if args.command == "triage":
            return _cmd_triage(args, project)
        if args.command == "fp":
            return _cmd_fp(args, project)
        if args.command == "severity":
            return _cmd_severity(args, project)
        if args.command == "comment":
            return _cmd_comment(args, project, server)
        if args.command == "solution":
            return _cmd_solution(args, project, server)
        if args.command == "fixtime":
            return _cmd_fixtime(args, project, server)
        if args.command == "metrics":
            return _cmd_metrics(args, project)
        if args.command == "report":
            return _cmd_report(args, project)
    raise CliUsageError(f"unknown command {args.command!r}")


# -- commands ------------------------------------------------------------


def _cmd_ingest(args: argparse.Namespace, project: Project, server: str | None) -> int:
    data = Path(args.report).read_bytes()
    if args.format == "findbugs":
        run = parse_findbugs_xml(data, RunMeta())
    else:
        run = parse_sarif(data, RunMeta())
    if args.metrics:
        metrics = parse_metrics_file(Path(args.metrics).read_bytes(), run.run_id)
        run = replace(run, metrics=metrics)

    previous = project.latest_run()
    diff = project.add_run(run)
    auto_records = 0
    if diff is not None and previous is not None:
        auto_records = project.derive_fix_records(diff, previous, run)

    if server:
        project_id = args.project_id or Path(args.project).resolve().name
        with _client(server) as client:
            _check(
                client.post(f"/api/v1/projects/{project_id}/runs", json=run_to_doc(run))
            )

    if args.json:
        _print_doc(
            {
                "runId": run.run_id,
                "findings": len(run.findings),
                "resolved": len(diff.resolved) if diff else 0,
                "introduced": len(diff.introduced) if diff else len(run.findings),
                "autoFixRecords": auto_records,
            }
        )
    else:
        print(f"stored run {run.run_id} with {len(run.findings)} findings")
        if diff is not None:
            print(
                f"vs previous: {len(diff.persisted)} persisted, "
                f"{len(diff.resolved)} resolved, {len(diff.introduced)} introduced"
            )
        if auto_records:
            print(f"derived {auto_records} automatic fix-time record(s)")
    return 0


def _view_config(args: argparse.Namespace) -> TriageConfig:
    if args.preset == "full":
        base = TriageConfig.full_support()
    elif args.preset == "none":
        base = TriageConfig.no_support()
    else:
        base = TriageConfig(level=5)
    overrides = {}
    if args.level is not None:
        overrides["level"] = args.level
    if args.min_confidence is not None:
        overrides["min_confidence"] = Confidence(args.min_confidence.upper())
    if args.max_rank is not None:
        overrides["max_rank"] = args.max_rank
    if args.cap is not None:
        overrides["cap"] = args.cap
    if args.seed is not None:
        overrides["random_seed"] = args.seed
    return replace(base, **overrides) if overrides else base


def _require_run(project: Project):
    run = project.latest_run()
    if run is None:
        raise WardenError("no runs ingested; run `warden ingest` first")
    return run


def _build_view(args: argparse.Namespace, project: Project) -> TriageView:
    run = _require_run(project)
    triage, _ = project.load_triage()
    return apply_level(run, triage, _view_config(args))


def _cmd_triage(args: argparse.Namespace, project: Project) -> int:
    view = _build_view(args, project)
    if args.json:
        _print_doc(view_to_doc(view))
        return 0
    print(f"level {view.level_applied}: {len(view.entries)} finding(s)")
    for entry in view.entries:
        f = entry.finding
        line = f.location.start_line if f.location.start_line is not None else "-"
        print(
            f"{f.fingerprint}  rank {f.severity.rank:>2} ({band_of(f.severity.rank).value})"
            f"  {f.confidence.value:<6}  {f.pattern_id}"
            f"  {f.location.file_path}:{line}  [{entry.stage.value}]"
        )
    return 0


def _cmd_fp(args: argparse.Namespace, project: Project) -> int:
    if args.action == "mark":
        project.mark_fp(args.fingerprint, _utcnow())
        print(f"marked {args.fingerprint} as false positive")
    else:
        project.unmark_fp(args.fingerprint)
        print(f"unmarked {args.fingerprint}")
    return 0


def _cmd_severity(args: argparse.Namespace, project: Project) -> int:
    if args.action == "set":
        try:
            project.set_override(args.fingerprint, args.rank)
        except ValueError as exc:  # out-of-range rank from the command line
            raise CliUsageError(str(exc)) from exc
        print(f"severity of {args.fingerprint} set to {args.rank}")
    else:
        project.clear_override(args.fingerprint)
        print(f"severity override of {args.fingerprint} cleared")
    return 0


def _cmd_comment(args: argparse.Namespace, project: Project, server: str | None) -> int:
    if server:
        with _client(server) as client:
            response = _check(
                client.post(
                    f"/api/v1/patterns/{args.pattern_id}/comments",
                    json={
                        "text": args.text,
                        "author": args.author,
                        "fingerprint": args.fingerprint,
                    },
                )
            )
            doc = response.json()
    else:
        store = project.load_knowledge()
        comment = store.add_comment(
            args.pattern_id, args.text, author=args.author, fingerprint=args.fingerprint
        )
        project.save_knowledge(store)
        doc = comment_to_doc(comment)
    if args.json:
        _print_doc(doc)
    else:
        print(f"comment {doc['commentId']} added to {args.pattern_id}")
    return 0


def _cmd_solution(args: argparse.Namespace, project: Project, server: str | None) -> int:
    if args.action == "add":
        if server:
            with _client(server) as client:
                response = _check(
                    client.post(
                        f"/api/v1/patterns/{args.pattern_id}/solutions",
                        json={"text": args.text, "codeSnippet": args.code},
                    )
                )
                doc = response.json()
        else:
            store = project.load_knowledge()
            solution = store.add_solution(args.pattern_id, args.text, args.code)
            project.save_knowledge(store)
            doc = solution_to_doc(solution)
        if args.json:
            _print_doc(doc)
        else:
            print(f"solution {doc['solutionId']} added to {args.pattern_id}")
        return 0

    direction = Vote(args.direction.upper())
    if server:
        with _client(server) as client:
            response = _check(
                client.post(
                    f"/api/v1/solutions/{args.solution_id}/votes",
                    json={"direction": direction.value},
                )
            )
            doc = response.json()
    else:
        store = project.load_knowledge()
        solution = store.vote(args.solution_id, direction)
        project.save_knowledge(store)
        doc = solution_to_doc(solution)
    if args.json:
        _print_doc(doc)
    else:
        print(
            f"solution {doc['solutionId']}: +{doc['upVotes']} / -{doc['downVotes']}"
        )
    return 0


def _cmd_fixtime(args: argparse.Namespace, project: Project, server: str | None) -> int:
    if args.action == "record":
        if server:
            with _client(server) as client:
                _check(
                    client.post(
                        "/api/v1/fixtimes",
                        json={"patternId": args.pattern_id, "minutes": args.minutes},
                    )
                )
        else:
            store = project.load_fixtimes()
            store.record_manual(args.pattern_id, args.minutes)
            project.save_fixtimes(store)
        if args.json:
            _print_doc({"patternId": args.pattern_id, "minutes": args.minutes})
        else:
            print(f"recorded {args.minutes} min for {args.pattern_id}")
        return 0

    if server:
        with _client(server) as client:
            response = _check(
                client.get(f"/api/v1/fixtimes/{args.pattern_id}/estimate")
            )
            doc = response.json()
    else:
        doc = estimate_to_doc(project.load_fixtimes().estimate(args.pattern_id))
    if args.json:
        _print_doc(doc)
    else:
        print(_format_estimate(doc))
    return 0


def _format_estimate(doc: dict) -> str:
    if doc["status"] == "INSUFFICIENT":
        return f"insufficient data (n={doc['sampleCount']}, need 5)"
    return (
        f"{doc['patternId']}: median {doc['median']:g} min "
        f"± {doc['halfWidth']:g} min (n={doc['sampleCount']}, {doc['status']})"
    )


def _cmd_metrics(args: argparse.Namespace, project: Project) -> int:
    runs = project.runs()
    model = fit_impact(build_deltas(runs))
    if args.action == "impact":
        if args.json:
            _print_doc(impact_to_doc(model))
            return 0
        for metric, impact in sorted(model.per_metric.items()):
            flag = " (underdetermined)" if impact.underdetermined else ""
            print(f"{metric}: {impact.observation_pairs} observation(s){flag}")
            for pattern, beta in sorted(impact.betas.items()):
                print(f"  {pattern}: {beta:+.4f} per finding")
        return 0

    counts = pattern_counts(_require_run(project))
    ranked = recommend(model, args.metric, Direction(args.direction.upper()), counts)
    if args.json:
        betas = model.per_metric[args.metric].betas
        _print_doc(
            [
                {
                    "patternId": pattern,
                    "count": counts.get(pattern, 0),
                    "beta": betas[pattern],
                    "projectedDelta": delta,
                }
                for pattern, delta in ranked
            ]
        )
        return 0
    print(f"to {args.direction} {args.metric}, clear patterns in this order:")
    for pattern, delta in ranked:
        print(f"  {pattern}: projected {delta:+.4f} ({counts.get(pattern, 0)} open)")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .server import serve

    serve(args.addr, args.storage)
    return 0


def _cmd_report(args: argparse.Namespace, project: Project) -> int:
    view = _build_view(args, project)
    fixtimes = project.load_fixtimes()
    patterns = sorted({e.finding.pattern_id for e in view.entries})
    doc = {
        "view": view_to_doc(view),
        "estimates": [estimate_to_doc(fixtimes.estimate(p)) for p in patterns],
    }
    if args.json:
        _print_doc(doc)
        return 0
    print(f"level {view.level_applied}: {len(view.entries)} finding(s)")
    for entry in view.entries:
        f = entry.finding
        print(f"  {f.fingerprint}  {f.pattern_id}  rank {f.severity.rank}")
    for est_doc in doc["estimates"]:
        print(f"  {est_doc['patternId']}: {_format_estimate(est_doc)}")
    return 0


# -- plumbing --------------------------------------------------------------


def _utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def _client(server: str) -> httpx.Client:
    return httpx.Client(base_url=server, timeout=30.0)


def _check(response: httpx.Response) -> httpx.Response:
    if response.status_code >= 400:
        try:
            message = response.json()["error"]["message"]
        except (json.JSONDecodeError, KeyError, TypeError):
            message = response.text
        raise WardenError(f"server rejected request ({response.status_code}): {message}")
    return response


def _print_doc(doc) -> None:
    sys.stdout.write(canonical_json_bytes(doc).decode("utf-8"))


if __name__ == "__main__":
    sys.exit(main())
