"""Command-line entry point.

Subcommands: validate-data | train | eval | analyze | play | serve.
Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.
Settings resolve as preset < config file < explicit flags.
"""

import argparse
import dataclasses
import json
import os
import sys
import textwrap
from pathlib import Path

import numpy as np

from .analysis import (
    DESK_SAMPLE_COUNT,
    analysis_tables,
    analyze_checkpoint,
    analyze_run,
)
from .featurizer import build_vocab
from .persona_db import PersonaDB, bundled_bank_path
from .replay import EpisodeRecord
from .trainer import (
    REGIMES,
    NetAgent,
    TrainConfig,
    evaluate,
    load_checkpoint,
    train,
)
from .user_sim import UtteranceBank, bundled_utterance_path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class DataError(Exception):
    """Missing or malformed data files, checkpoints, or manifests."""


class UsageError(Exception):
    """Flag values that parse but do not make sense together."""


class Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    # data problems and uses 1 for usage
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_validate_data(args) -> int:
    personas = Path(args.personas) if args.personas else \
        bundled_bank_path(args.scale)
    utterances = Path(args.utterances) if args.utterances else \
        bundled_utterance_path(args.scale)
    try:
        db = PersonaDB.from_path(personas)
        bank = UtteranceBank.from_path(utterances)
    except (OSError, ValueError) as exc:
        raise DataError(exc) from exc
    vocab = build_vocab(bank)
    print(f"personas: {db.d} ({personas})")
    print(f"questions: {db.n_questions}")
    counts = bank.unique_counts()
    print("utterances: " + ", ".join(f"{k}={v}" for k, v in counts.items())
          + f" ({utterances})")
    print(f"vocab size: {vocab.size}")
    print(f"bank hash: {db.bank_hash()}")
    print(f"vocab hash: {vocab.content_hash()}")
    print("ok")
    return EXIT_OK


def build_train_config(args) -> TrainConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise DataError(f"no config file at {path}")
        try:
            cfg = TrainConfig.from_path(path)
        except (ValueError, TypeError, KeyError) as exc:
            raise DataError(f"bad config {path}: {exc}") from exc
    elif args.preset == "paper":
        cfg = TrainConfig.paper()
    else:
        cfg = TrainConfig()
    overrides = {name: getattr(args, name)
                 for name in ("regime", "seed", "total_steps")
                 if getattr(args, name) is not None}
    if overrides:
        try:
            cfg = dataclasses.replace(cfg, **overrides)
        except ValueError as exc:
            raise UsageError(exc) from exc
    return cfg


def cmd_train(args) -> int:
    cfg = build_train_config(args)
    run_dir = Path(args.out) if args.out else \
        Path("runs") / f"{cfg.regime}_seed{cfg.seed}"
    summary = train(cfg, run_dir)
    final = summary.get("final", {})
    print(f"run: {run_dir}")
    print(f"env_steps={summary['env_steps']} updates={summary['updates']} "
          f"win_rate={final.get('win_rate', float('nan')):.3f}")
    return EXIT_OK


def _checkpoint(path) -> Path:
    ckpt = Path(path)
    if not ckpt.is_dir():
        raise DataError(f"no checkpoint at {ckpt}")
    return ckpt


def cmd_eval(args) -> int:
    ckpt = _checkpoint(args.checkpoint)
    try:
        net, world, _ = load_checkpoint(ckpt)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(exc) from exc
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0xE7A1]))
    report = evaluate(world.env, NetAgent(net, world), args.episodes, rng,
                      keep_records=args.keep_transcripts)
    doc = {"checkpoint": str(ckpt), "n_episodes": args.episodes,
           "seed": args.seed, **report.to_jsonable()}
    if args.keep_transcripts:
        doc["transcripts"] = [r.to_jsonable() for r in report.records]
    out = Path(args.out) if args.out else ckpt / "eval_report.json"
    out.write_text(json.dumps(doc, indent=2))
    print(f"win_rate={report.win_rate:.3f} avg_turns={report.avg_turns:.2f} "
          f"avg_return={report.avg_raw_return:.2f} "
          f"({args.episodes} episodes, seed {args.seed})")
    print(out)
    return EXIT_OK


def load_transcripts(path) -> list:
    hint = ("run `twentyq eval --checkpoint <dir> --keep-transcripts N` "
            "first and pass its report")
    p = Path(path)
    if not p.is_file():
        raise DataError(f"no transcripts at {p}; {hint}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: {exc}") from exc
    rows = doc.get("transcripts")
    if not rows:
        raise DataError(f"{p} holds no transcripts; {hint}")
    return [EpisodeRecord.from_jsonable(r) for r in rows]


def cmd_analyze(args) -> int:
    if args.run:
        if args.transcripts:
            raise UsageError("--transcripts applies to --checkpoints, "
                             "not --run")
        run_dir = Path(args.run)
        if not (run_dir / "run_manifest.json").is_file():
            raise DataError(f"{run_dir} has no run_manifest.json; "
                            "point --run at a training run directory")
        try:
            doc = analyze_run(run_dir, n_samples=args.samples, seed=args.seed)
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(exc) from exc
        out = run_dir / "analysis.json"
    else:
        ckpts = [_checkpoint(c) for c in args.checkpoints]
        records = load_transcripts(args.transcripts) if args.transcripts \
            else None
        try:
            _, world, _ = load_checkpoint(ckpts[0])
            reports = [analyze_checkpoint(c, world, args.samples, args.seed,
                                          records=records) for c in ckpts]
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(exc) from exc
        doc = {"n_samples": args.samples, "checkpoints": reports}
        out = Path(args.out) if args.out else Path("analysis.json")
        out.write_text(json.dumps(doc, indent=2))
        table_dir = out.parent / "tables"
        table_dir.mkdir(parents=True, exist_ok=True)
        for name, text in analysis_tables(doc).items():
            (table_dir / name).write_text(text)
    print(analysis_tables(doc)["probe.csv"], end="")
    print(out)
    return EXIT_OK


QUIT_WORDS = frozenset({"quit", "exit"})


def _read_line(prompt: str) -> str | None:
    try:
        line = input(prompt)
    except EOFError:
        return None
    if line.strip().lower() in QUIT_WORDS:
        return None
    return line


def cmd_play(args) -> int:
    from .play_service import LiveSession, SessionError

    ckpt = _checkpoint(args.checkpoint)
    try:
        net, world, _ = load_checkpoint(ckpt)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(exc) from exc
    session = LiveSession(net, world)
    names = [world.db.record(pid).name for pid in world.db.ids]
    print(textwrap.fill("Personas: " + ", ".join(names), width=78))
    print("Think of one of them. Answer my questions freely; "
          "'quit' ends the game.")
    while session.outcome is None:
        move = session.next_move()
        if move["kind"] == "question":
            print(f"Sys: {move['text']}")
            while True:
                line = _read_line("You: ")
                if line is None:
                    print("Sys: Bye.")
                    return EXIT_OK
                try:
                    out = session.post_answer(text=line)
                    break
                except SessionError as exc:
                    print(f"({exc.message})")
            if out["agent_slot_decision"] is not None:
                print(f"  -> tracked as {out['agent_slot_decision']!r}; "
                      f"{out['candidates_count']} candidate(s) left")
        else:
            if not move["text"]:
                break      # nobody consistent left to name
            print(f"Sys: I guess this person is {move['text']}.")
            while True:
                line = _read_line("Correct? [yes/no] ")
                if line is None:
                    print("Sys: Bye.")
                    return EXIT_OK
                verdict = {"y": "correct", "yes": "correct",
                           "correct": "correct", "n": "wrong", "no": "wrong",
                           "wrong": "wrong"}.get(line.strip().lower())
                if verdict is not None:
                    break
                print("(answer yes or no; 'quit' ends the game)")
            session.post_answer(verdict=verdict)
    view = session.view()
    if session.outcome == "win":
        print(f"Sys: Got it in {view['steps_used']} steps with "
              f"{view['guesses_used']} guess(es).")
    else:
        print("Sys: I give up — you win this one.")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .play_service import create_app

    host = args.host or os.environ.get("TWENTYQ_HOST", "127.0.0.1")
    port = args.port if args.port is not None else \
        int(os.environ.get("TWENTYQ_PORT", "8823"))
    checkpoint = None
    if args.checkpoint:
        checkpoint = _checkpoint(args.checkpoint)
    try:
        app = create_app(checkpoint, idle_timeout=args.idle_timeout)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(exc) from exc
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="twentyq",
                    description="Recurrent Q-learning for the 20-questions "
                                "persona game: train, evaluate, analyze, "
                                "play, serve.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="command", parser_class=Parser)

    p = sub.add_parser("validate-data", help="check persona/utterance banks")
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--personas", help="persona bank JSON (default: bundled)")
    p.add_argument("--utterances",
                   help="utterance bank JSON (default: bundled)")
    p.set_defaults(func=cmd_validate_data)

    p = sub.add_parser("train", help="train an agent")
    p.add_argument("--config", help="TrainConfig JSON (overrides the preset)")
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--regime", choices=REGIMES)
    p.add_argument("--seed", type=int)
    p.add_argument("--total-steps", type=int, dest="total_steps")
    p.add_argument("--out", help="run directory "
                                 "(default runs/<regime>_seed<seed>)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-transcripts", type=int, default=0,
                   dest="keep_transcripts",
                   help="store the first N episode transcripts in the report")
    p.add_argument("--out", help="report path "
                                 "(default <checkpoint>/eval_report.json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze",
                       help="probe/retrieval/slot tables for checkpoints")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--run", help="training run directory")
    g.add_argument("--checkpoints", nargs="+", help="checkpoint directories")
    p.add_argument("--samples", type=int, default=DESK_SAMPLE_COUNT)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--transcripts",
                   help="eval report whose transcripts provide slot metrics")
    p.add_argument("--out", help="analysis JSON path (checkpoints mode)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("play", help="play against a checkpoint in the "
                                    "terminal")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("serve", help="HTTP play service")
    p.add_argument("--checkpoint")
    p.add_argument("--host", help="bind address (default $TWENTYQ_HOST "
                                  "or 127.0.0.1)")
    p.add_argument("--port", type=int,
                   help="bind port (default $TWENTYQ_PORT or 8823)")
    p.add_argument("--idle-timeout", type=float, default=1800.0,
                   dest="idle_timeout")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:       # argparse already printed its message
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:        # noqa: BLE001 — contract maps these to 3
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
