"""Operator CLI: serve the API, run the closed-loop simulator, build
improvement reports from session logs, and replay a log for inspection."""

import argparse
import json
import math
import sys
from pathlib import Path

from caploop.config import ServiceConfig
from caploop.evalkit import improvement_report
from caploop.simloop import SimConfig, run_simulation
from caploop.storage import read_log, replay_session, session_stats_from_log


def cmd_serve(args) -> int:
    import uvicorn

    from caploop.app import create_app

    config = ServiceConfig.load(args.config)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    app = create_app(config)
    uvicorn.run(
        app,
        host=config.host,
        port=config.port,
        ssl_certfile=config.tls_certfile,
        ssl_keyfile=config.tls_keyfile,
    )
    return 0


def cmd_simulate(args) -> int:
    per_participant = {}
    baselines = {}
    for i in range(args.runs):
        seed = args.seed + i
        cfg = SimConfig(
            sessions=args.sessions,
            words_per_script=args.words,
            confusion_seed=seed,
            confused_word_count=args.confused,
            corrector_recall=args.recall,
            workdir=str(Path(args.out) / f"run-{seed}") if args.out else None,
        )
        trajectory = run_simulation(cfg)
        label = f"run{seed}"
        per_participant[label] = trajectory.per_session
        baselines[label] = {
            "static": trajectory.baseline_static,
            "generic": trajectory.baseline_generic,
            "one_round": trajectory.baseline_one_round,
        }
        wers = ", ".join(f"{s.wer:.3f}" for s in trajectory.per_session)
        print(f"{label}: wer per session [{wers}]")
    report = improvement_report(per_participant, baselines)
    print()
    print(report.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
        print(f"report written to {out}/report.json and {out}/report.txt")
    return 0


def cmd_report(args) -> int:
    logs_root = Path(args.logs)
    per_participant = {}
    skipped = []
    for log_path in sorted(logs_root.glob("*/log.jsonl")):
        label, stats = session_stats_from_log(read_log(log_path))
        usable = [s for s in stats if not math.isnan(s.wer)]
        if usable:
            per_participant[label or log_path.parent.name] = usable
        else:
            skipped.append(log_path.parent.name)
    if not per_participant:
        print("no session logs with scripted rounds found", file=sys.stderr)
        return 1
    report = improvement_report(per_participant)
    print(report.to_text())
    for name in skipped:
        print(f"note: {name} had no scripted rounds; skipped")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    return 0


def cmd_replay(args) -> int:
    entries = read_log(args.log)
    replayed = replay_session(entries)
    doc = replayed.document
    print(f"session {replayed.session_id}: phase={replayed.phase}")
    print(f"participants: {replayed.participants}")
    print(f"document: version {doc.version}, {len(doc.tokens)} tokens, {len(doc.highlights)} highlights")
    print(f"text: {' '.join(doc.texts())}")
    for prompt in replayed.prompts.values():
        print(f"prompt {prompt.id} [{prompt.status}] {prompt.clause}")
    for vid, parent, engine in replayed.lineage:
        print(f"model v{vid} parent={parent} confusions={len(engine['confusion'])}")
    if args.json:
        print(json.dumps(doc.snapshot(), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="caploop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the captioning service")
    p_serve.add_argument("--config", help="path to a JSON config file")
    p_serve.add_argument("--host")
    p_serve.add_argument("--port", type=int)
    p_serve.set_defaults(func=cmd_serve)

    p_sim = sub.add_parser("simulate", help="run the closed-loop simulator")
    p_sim.add_argument("--sessions", type=int, default=5)
    p_sim.add_argument("--words", type=int, default=600)
    p_sim.add_argument("--confused", type=int, default=40)
    p_sim.add_argument("--recall", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--runs", type=int, default=1, help="number of seeded runs, one report row each")
    p_sim.add_argument("--out", help="directory for report.json/report.txt and run artifacts")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="improvement report over a directory of session logs")
    p_rep.add_argument("--logs", required=True, help="sessions root (one subdirectory per session)")
    p_rep.add_argument("--out", help="directory for report.json/report.txt")
    p_rep.set_defaults(func=cmd_report)

    p_replay = sub.add_parser("replay", help="rebuild session state from a log")
    p_replay.add_argument("--log", required=True, help="path to log.jsonl")
    p_replay.add_argument("--json", action="store_true", help="also dump the document snapshot")
    p_replay.set_defaults(func=cmd_replay)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
