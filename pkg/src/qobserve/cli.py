"""Command-line interface.

Exit codes: 0 success, 1 invalid input (scenario or arguments), 2 computation
error (e.g. a scalar observable or an unsolvable reconstruction).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .examples import example, example_names
from .lie import ClosureError
from .linalg import Tolerance
from .measurement import run_experiment
from .observability import analyze, indistinguishable, separation
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .tomography import RankDeficientError, ancilla_tomography, run_permutation_tomography

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 1, 2
BUILTIN_PREFIX = "builtin:"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load(ref: str) -> Scenario:
    if ref.startswith(BUILTIN_PREFIX):
        name = ref[len(BUILTIN_PREFIX) :]
        try:
            return parse_scenario(example(name))
        except KeyError as exc:
            raise ScenarioError("scenario", exc.args[0]) from None
    return load_scenario(ref)


def _tol(scn: Scenario, args) -> Tolerance:
    if args.tol is None:
        return scn.tol
    try:
        return replace(scn.tol, rank_tol=args.tol)
    except ValueError as exc:
        raise ScenarioError("--tol", str(exc)) from None


def _state(scn: Scenario, name: str, flag: str):
    if name not in scn.states:
        raise ScenarioError(flag, f"unknown state {name!r}; scenario defines {sorted(scn.states)}")
    return scn.states[name]


def cmd_analyze(scn: Scenario, args) -> dict:
    max_k = args.max_k if args.max_k is not None else scn.max_k
    report = analyze(scn.system, max_k, _tol(scn, args))
    return {"command": "analyze", "scenario": scn.name, **report.to_dict()}


def cmd_distinguish(scn: Scenario, args) -> dict:
    a = _state(scn, args.state_a, "state_a")
    b = _state(scn, args.state_b, "state_b")
    if args.k < 1:
        raise ScenarioError("--k", "must be at least 1")
    tol = _tol(scn, args)
    return {
        "command": "distinguish",
        "scenario": scn.name,
        "state_a": args.state_a,
        "state_b": args.state_b,
        "k": args.k,
        "indistinguishable": indistinguishable(scn.system, a.matrix, b.matrix, args.k, tol),
        "max_separation": separation(scn.system, a.matrix, b.matrix, args.k, tol),
    }


def cmd_simulate(scn: Scenario, args) -> dict:
    if args.script not in scn.scripts:
        raise ScenarioError("script", f"unknown script {args.script!r}; scenario defines {sorted(scn.scripts)}")
    state = _state(scn, args.state, "state")
    record = run_experiment(state, scn.system, scn.scripts[args.script], _tol(scn, args))
    return {"command": "simulate", "scenario": scn.name, "script": args.script, "state": args.state, **record.to_dict()}


def cmd_reconstruct(scn: Scenario, args) -> dict:
    seed = args.seed if args.seed is not None else scn.seed
    tol = _tol(scn, args)
    if args.mode not in scn.tomography:
        raise ScenarioError(f"tomography.{args.mode}", "scenario has no such section")
    cfg = scn.tomography[args.mode]
    if args.mode == "permutation":
        state = scn.states[cfg["state"]]
        res = run_permutation_tomography(state, cfg["x1"], scn.system, None, args.noise, seed, tol)
        body = res.to_dict()
    else:
        res = ancilla_tomography(cfg["unknown"], cfg["known"], cfg["observable"], cfg["probes"], args.noise, seed, tol)
        body = res.to_dict()
    return {"command": "reconstruct", "scenario": scn.name, "mode": args.mode, **body}


def cmd_examples(name: str | None) -> dict:
    if name is None:
        return {"examples": example_names()}
    try:
        return example(name)
    except KeyError as exc:
        raise ScenarioError("name", exc.args[0]) from None


def _text(doc: dict, indent: int = 0) -> list[str]:
    lines = []
    pad = " " * indent
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text(value, indent + 2))
        elif isinstance(value, list) and value and isinstance(value[0], (list, dict)):
            lines.append(f"{pad}{key}: <{len(value)} entries>")
        else:
            lines.append(f"{pad}{key:<24} {json.dumps(value)}" if indent == 0 else f"{pad}{key}: {json.dumps(value)}")
    return lines


def render(doc: dict, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(_text(doc)) + "\n"
    return json.dumps(doc, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="rank tolerance (overrides scenario and $QOBSERVE_TOL)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None)

    p = _Parser(prog="qobserve", description="Observability analysis and measurement simulation for quantum control systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="observability report")
    a.add_argument("scenario", help=f"scenario JSON file or {BUILTIN_PREFIX}NAME")
    a.add_argument("--max-k", type=int, default=None)

    d = sub.add_parser("distinguish", parents=[common], help="k-step indistinguishability of two states")
    d.add_argument("scenario")
    d.add_argument("state_a")
    d.add_argument("state_b")
    d.add_argument("--k", type=int, default=1)

    s = sub.add_parser("simulate", parents=[common], help="run an experiment script")
    s.add_argument("scenario")
    s.add_argument("script")
    s.add_argument("state")

    r = sub.add_parser("reconstruct", parents=[common], help="initial-state reconstruction")
    r.add_argument("scenario")
    r.add_argument("--mode", choices=("permutation", "ancilla"), default="permutation")
    r.add_argument("--noise", type=float, default=0.0, help="std of Gaussian noise added to outputs")

    e = sub.add_parser("examples", parents=[common], help="print a built-in scenario (or list them)")
    e.add_argument("name", nargs="?")
    return p


_COMMANDS = {
    "analyze": cmd_analyze,
    "distinguish": cmd_distinguish,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"qobserve: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.command == "examples":
            doc = cmd_examples(args.name)
        else:
            doc = _COMMANDS[args.command](_load(args.scenario), args)
    except ScenarioError as exc:
        print(f"qobserve: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RankDeficientError, ClosureError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"qobserve: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    out = render(doc, args.format)
    if args.out is not None:
        args.out.write_text(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
