"""Command-line entry point.

Subcommands: ``mub``, ``run``, ``tables``, ``attack``, ``apparatus``.  Exit code
0 on success, 1 when a verification fails, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys

from .adversary import AttackSpec
from .errors import Inconclusive, InsufficientData, ProtocolAbort, RejectedInput, ReportWriteError
from .harness import (
    ExperimentSpec,
    emit_report,
    family_dict,
    render_report,
    reproduce_table,
    run_attack_experiment,
    run_protocol_experiment,
    table_row_within,
    verify_apparatus,
    verify_mub,
)
from .mub import FAMILY_DIMS
from .qudit import SeededRng

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--trials", type=int, help="trials per setting")
    p.add_argument("--visibility", type=float, help="interferometric visibility v in [0, 1]")
    p.add_argument("--format", choices=("csv", "json"), help="report format")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--config", help="JSON experiment spec; command-line flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qveto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mub", parents=[common], help="generate and verify MUB families")
    p.add_argument("--dim", type=int, action="append", help=f"dimension(s), default all of {FAMILY_DIMS}")
    p.add_argument("--states", action="store_true", help="include basis amplitudes in the output")

    p = sub.add_parser("run", parents=[common], help="run one protocol instance")
    p.add_argument("--dim", type=int)
    p.add_argument("--voters", type=int, dest="n_voters")
    p.add_argument("--votes", help="comma-separated 0/1 per voter, e.g. 1,0,0")
    p.add_argument("--mode", choices=("trusted", "untrusted", "qubit-simple"))
    p.add_argument("--disclosure", choices=("veto-boolean", "veto-count"))
    p.add_argument("--transcript", help="write the JSON-lines transcript here")
    p.add_argument("--runs", type=int, dest="n_runs", help="runs for untrusted mode")
    p.add_argument("--sender", choices=("honest", "lie"))
    p.add_argument("--receiver", choices=("honest", "lie"))

    p = sub.add_parser("tables", parents=[common], help="reproduce the experiment tables")
    p.add_argument("table", choices=("1", "2", "3"))
    p.add_argument("--per-row-calibration", action="store_true",
                   help="calibrate v per peaked row from its published peak")

    p = sub.add_parser("attack", parents=[common], help="simulate an attack")
    p.add_argument("--kind", choices=("intercept-resend", "voter-cancel", "sender-lie", "receiver-lie"))
    p.add_argument("--dim", type=int)
    p.add_argument("--voters", type=int, dest="n_voters")
    p.add_argument("--position", type=int)
    p.add_argument("--basis", help="eavesdropper basis index or 'uniform'")
    p.add_argument("--t-guess", help="cancel guess (integer) or 'uniform'")
    p.add_argument("--party", type=int, help="index of the dishonest voter")
    p.add_argument("--phase", choices=("voting", "infrastructure"))
    p.add_argument("--honesty-runs", type=int)

    sub.add_parser("apparatus", parents=[common], help="verify plate settings and source preparation")
    return parser


def _int_or_uniform(text):
    return text if text in (None, "uniform") else int(text)


def _spec(args, kind: str, **overrides) -> ExperimentSpec:
    base = {}
    if args.config:
        base = ExperimentSpec.load(args.config).to_dict()
    base["kind"] = kind
    flags = {"master_seed": args.seed, "trials": args.trials, "visibility": args.visibility,
             "format": args.format, "out": args.out}
    flags.update(overrides)
    base.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentSpec.from_dict(base)


def _write(text: str, out) -> None:
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise ReportWriteError(f"cannot write report to {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_mub(args) -> int:
    dims = args.dim or list(FAMILY_DIMS)
    results = []
    for d in dims:
        res = verify_mub(d)
        if args.states:
            res["family"] = family_dict(d)
        results.append(res)
    _write(_json({"families": results}), args.out)
    return EXIT_OK if all(r["ok"] for r in results) else EXIT_FAILED


def cmd_run(args) -> int:
    spec = _spec(args, "protocol", dim=args.dim, n_voters=args.n_voters, mode=args.mode,
                 disclosure=args.disclosure, transcript=args.transcript, n_runs=args.n_runs,
                 sender=args.sender, receiver=args.receiver,
                 votes=[int(v) for v in args.votes.split(",")] if args.votes else None)
    votes = list(spec.votes) or [0] * spec.n_voters
    _, _, summary = run_protocol_experiment(spec, votes, SeededRng(spec.master_seed))
    text = render_report(summary, "json" if args.format is None else spec.format)
    if spec.out:
        emit_report(summary, "json" if args.format is None else spec.format, spec.out)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tables(args) -> int:
    spec = _spec(args, f"table-{args.table}", per_row_calibration=args.per_row_calibration or None)
    report = reproduce_table(spec)
    if spec.out:
        emit_report(report, spec.format, spec.out)
    else:
        sys.stdout.write(render_report(report, spec.format))
    ok = spec.per_row_calibration or all(table_row_within(r, spec.trials) for r in report.rows)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_attack(args) -> int:
    attack = {}
    if args.config:
        attack = dict(ExperimentSpec.load(args.config).attack or {})
    given = {"kind": args.kind, "position": args.position, "basis_strategy": _int_or_uniform(args.basis),
             "t_guess": _int_or_uniform(args.t_guess), "dishonest_party": args.party, "phase": args.phase}
    attack.update({k: v for k, v in given.items() if v is not None})
    if "kind" not in attack:
        raise RejectedInput("attack needs --kind (or an 'attack' block in --config)")
    spec = _spec(args, "attack", dim=args.dim, n_voters=args.n_voters, attack=attack,
                 honesty_runs=args.honesty_runs)
    report = run_attack_experiment(spec, AttackSpec(**spec.attack), SeededRng(spec.master_seed))
    fmt = "json" if args.format is None and not args.config else spec.format
    if spec.out:
        emit_report(report, fmt, spec.out)
    else:
        sys.stdout.write(render_report(report, fmt))
    return EXIT_OK


def cmd_apparatus(args) -> int:
    res = verify_apparatus()
    _write(_json(res), args.out)
    return EXIT_OK if res["ok"] else EXIT_FAILED


COMMANDS = {"mub": cmd_mub, "run": cmd_run, "tables": cmd_tables, "attack": cmd_attack,
            "apparatus": cmd_apparatus}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (RejectedInput, ValueError, TypeError) as exc:
        print(f"qveto: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ProtocolAbort, Inconclusive, InsufficientData) as exc:
        print(f"qveto: protocol failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ReportWriteError as exc:
        print(f"qveto: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
