"""Command-line front end: translate, check, scan, run, verify, diff, debug.

Exit codes: 0 success or Verified, 1 finding / Falsified / abnormal run /
divergence, 2 Unknown, 3 usage or input error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Optional

from . import fether, fuzz, germ
from .fether import Fuel, Normal
from .frontend import FrontendError
from .ir import Econst, Efun, FunCall, typecheck_program
from .irtext import IRSyntaxError, pretty, show_stmt_inline
from .program import AddressError
from .scanner import FEATURES, scan_all
from .specfile import load_program, load_spec
from .symexec import solver
from .symexec.debugger import DebugError, Session, SessionEnded
from .symexec.engine import Falsified, SymMachine, SymRun, Unknown, Verified, prepare, verify
from .symexec.hoare import POLICIES, SpecError
from .symexec.notation import show_model
from .symexec.summary import SummaryStore, summarize
from .types import TAddress, TBool, TBytes, TInt, TString
from .values import VBool, VBytes, VInt, VString, zero_value

EXIT_OK, EXIT_FINDING, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3

GLOBAL_DEFAULTS = {
    "memory_size": germ.DEFAULT_SPACE,
    "gas": None,
    "k_stmt": None,
    "k_val": None,
    "send_policy": None,
    "seed": 42,
    "workers": 1,
    "script": None,
    "word_bits": 256,
}


class UsageError(Exception):
    pass


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    s = argparse.SUPPRESS
    g.add_argument("--memory-size", type=int, default=s, help="cells in the memory space (default 256)")
    g.add_argument("--gas", type=int, default=s, help="gas limit (charged steps)")
    g.add_argument("--k-stmt", type=int, default=s, help="statement fuel")
    g.add_argument("--k-val", type=int, default=s, help="expression fuel per statement")
    g.add_argument("--send-policy", choices=POLICIES, default=s, help="result of send calls")
    g.add_argument("--seed", type=int, default=s, help="random seed (default 42)")
    g.add_argument("--workers", type=int, default=s, help="worker processes (default 1)")
    g.add_argument("--script", default=s, help="debugger command script")
    g.add_argument("--word-bits", type=int, default=s, help="width of uint (default 256)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="hybridsol", parents=[common],
                                     description="Translate, scan, run and verify Solidity-subset contracts.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("translate", parents=[common], help="write the canonical IR and address table")
    p.add_argument("input")
    p.add_argument("--stdout", action="store_true", help="print the IR instead of writing files")
    p.add_argument("-o", "--output-dir", help="directory for the .lolisa and .addr files")

    p = sub.add_parser("check", parents=[common], help="type-check a program")
    p.add_argument("input")

    p = sub.add_parser("scan", parents=[common], help="scan for vulnerability patterns")
    p.add_argument("input")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--feature", choices=sorted(FEATURES))
    which.add_argument("--all", action="store_true")
    p.add_argument("--depth", type=int, help="statements to examine (default: all)")

    p = sub.add_parser("run", parents=[common], help="execute a function concretely")
    p.add_argument("input")
    p.add_argument("--entry", help="function to call (default: top-level statements)")
    p.add_argument("--args", default=None, help="comma-separated argument literals")
    p.add_argument("--value", type=lambda x: int(x, 0), help="msg.value")
    p.add_argument("--sender", type=lambda x: int(x, 0), help="msg.sender")
    p.add_argument("--balance", type=lambda x: int(x, 0), help="this.balance")
    p.add_argument("--full", action="store_true", help="dump every cell, not only used ones")

    p = sub.add_parser("verify", parents=[common], help="check a spec file")
    p.add_argument("spec")
    p.add_argument("--mode", choices=("static", "concolic", "selective"))
    p.add_argument("--store", help="summary-store directory (read, and written on success)")

    p = sub.add_parser("diff", parents=[common], help="differential test against the reference evaluator")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--max-stmts", type=int, default=30)
    p.add_argument("--swap-if", action="store_true", help="mutate the interpreter to swap If branches")
    p.add_argument("--keep-going", action="store_true", help="do not stop at the first divergence")

    p = sub.add_parser("debug", parents=[common], help="step through a run")
    p.add_argument("input", help=".sol/.lolisa program or .spec file")
    p.add_argument("--entry")
    p.add_argument("--value", type=lambda x: int(x, 0))
    p.add_argument("--sender", type=lambda x: int(x, 0))
    p.add_argument("--balance", type=lambda x: int(x, 0))
    return parser


def _opt(args, name):
    return getattr(args, name, GLOBAL_DEFAULTS[name])


def _fuel(args, base: Fuel = Fuel()) -> Fuel:
    return Fuel(
        _opt(args, "k_stmt") or base.k_stmt,
        _opt(args, "k_val") or base.k_val,
        _opt(args, "gas") or base.gas_limit,
    )


def _policy(name: Optional[str], default="true"):
    name = name or default
    return {"true": True, "false": False}.get(name, name)


def _program(args, path):
    return load_program(path, _opt(args, "word_bits"), _opt(args, "memory_size"))


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


# -- commands -----------------------------------------------------------------------------

def cmd_translate(args, out) -> int:
    if args.input.endswith(".lolisa"):
        raise UsageError("translate takes a .sol source")
    prog = _program(args, args.input)
    text = pretty(prog.stmts)
    if args.stdout:
        out.write(text)
        return EXIT_OK
    directory = args.output_dir or os.path.dirname(os.path.abspath(args.input))
    os.makedirs(directory, exist_ok=True)
    stem = os.path.join(directory, _stem(args.input))
    with open(stem + ".lolisa", "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(stem + ".addr", "w", encoding="utf-8") as fh:
        fh.write(prog.table.dump())
    out.write(f"wrote {stem}.lolisa\nwrote {stem}.addr\n")
    return EXIT_OK


def cmd_check(args, out) -> int:
    prog = _program(args, args.input)
    report = typecheck_program(prog.stmts, prog.lib)
    if not report.ok:
        out.write(f"{os.path.basename(args.input)}: {report}\n")
        return EXIT_ERROR
    out.write(f"{os.path.basename(args.input)}: well-typed\n")
    return EXIT_OK


def cmd_scan(args, out) -> int:
    prog = _program(args, args.input)
    features = None if args.all else [args.feature]
    report = scan_all(prog, features, args.depth)
    for line in report.lines():
        out.write(line + "\n")
    return EXIT_OK if report.empty else EXIT_FINDING


def parse_arg(text: str, ty):
    """Concrete value of a parameter type from its command-line literal."""
    text = text.strip()
    try:
        if isinstance(ty, TBool):
            if text not in ("true", "false"):
                raise ValueError(text)
            return VBool(text == "true")
        if isinstance(ty, TAddress):
            return VInt.address(int(text, 0))
        if isinstance(ty, TInt):
            n = int(text, 0)
            if not ty.lo <= n <= ty.hi:
                raise UsageError(f"argument {n} does not fit {ty}")
            return VInt.of(ty, n)
        if isinstance(ty, TBytes):
            raw = bytes.fromhex(text[2:] if text.startswith("0x") else text)
            if len(raw) > ty.length:
                raise UsageError(f"argument {text} is longer than {ty}")
            return VBytes(raw.ljust(ty.length, b"\0"))
        if isinstance(ty, TString):
            return VString(text)
    except ValueError:
        raise UsageError(f"bad {ty} argument {text!r}") from None
    raise UsageError(f"parameters of type {ty} cannot be given on the command line")


def _call_args(prog, entry: str, text: Optional[str]) -> tuple:
    f = prog.function(entry)
    if f is None:
        raise UsageError(f"no function {entry}")
    if text is None:
        return tuple(zero_value(p.ty, prog.structs()) for p in f.params)
    parts = text.split(",") if text.strip() else []
    if len(parts) != len(f.params):
        raise UsageError(f"{entry} takes {len(f.params)} arguments, got {len(parts)}")
    return tuple(parse_arg(t, p.ty) for t, p in zip(parts, f.params))


def _start_memory(args, prog):
    m = fether.fresh_memory(prog, _opt(args, "memory_size"))
    return fether.set_msg(m, prog.lib, args.value, args.sender, args.balance)


def cmd_run(args, out) -> int:
    prog = _program(args, args.input)
    if _opt(args, "send_policy") == "symbolic":
        raise UsageError("run needs a concrete send policy (true or false)")
    m0 = _start_memory(args, prog)
    mc = fether.Machine(prog, _policy(_opt(args, "send_policy")))
    fuel = _fuel(args)
    if args.entry is not None:
        call_args = _call_args(prog, args.entry, args.args)
        stmts = [FunCall(Efun(args.entry, prog.function(args.entry).sig.ret),
                         tuple(Econst(a) for a in call_args))]
    else:
        stmts = list(prog.stmts)
    r = mc.start(m0, stmts, fuel, None)
    while r.outcome is None:
        r.step()
    outcome = r.outcome
    final = fether.outcome_memory(outcome)
    if final is not None:
        out.write(germ.dump(final, only_used=not args.full) + "\n")
    if isinstance(outcome, Normal):
        for ev in fether.events_of(final):
            out.write(fether.format_event(ev) + "\n")
    out.write(f"result: {fether.describe_outcome(outcome)} after {r.steps} steps\n")
    return EXIT_OK if isinstance(outcome, Normal) else EXIT_FINDING


def _load_spec(args, path):
    spec, prog = load_spec(path)
    fuel = _fuel(args, spec.fuel)
    policy = _opt(args, "send_policy") or spec.send_policy
    spec = replace(spec, fuel=fuel, send_policy=policy)
    if getattr(args, "memory_size", None) is not None:
        spec = replace(spec, memory_size=args.memory_size)
    return spec, prog


def cmd_verify(args, out) -> int:
    spec, prog = _load_spec(args, args.spec)
    mode = args.mode or spec.mode
    store = SummaryStore(args.store) if args.store else None
    if mode == "selective" and store is None:
        store = SummaryStore()
    result = verify(spec, prog, mode, store if mode == "selective" else None)
    st = result.stats
    out.write(f"spec: {spec.name}\nmode: {mode}\nverdict: {result.verdict}\n")
    out.write(f"paths: {st.paths} (leaves {st.leaves}, pruned {st.pruned}, forks {st.forks})\n")
    if mode == "selective":
        out.write(f"summaries: {st.summary_hits} applied, {st.expansions} expanded\n")
    for w in st.warnings:
        out.write(f"warning: {w}\n")
    v = result.verdict
    if isinstance(v, Falsified):
        out.write(f"model: {show_model(v.model)}\n")
        out.write("trace:\n")
        for s in v.trace:
            out.write(f"  {show_stmt_inline(s)}\n")
        return EXIT_FINDING
    if isinstance(v, Unknown):
        out.write(f"reason: {v.reason}\n")
        return EXIT_UNKNOWN
    if isinstance(v, Verified) and store is not None and spec.segment is not None:
        s = summarize(result, prog)
        store.add(s)
        out.write(f"summary stored: {s.segment}\n")
    return EXIT_OK


def cmd_diff(args, out) -> int:
    if args.count < 0 or args.max_stmts < 1:
        raise UsageError("--count must be >= 0 and --max-stmts >= 1")
    if args.count == 0:
        out.write("warning: no cases run\n")
        return EXIT_OK
    stop = None if args.keep_going else 1
    report = fuzz.campaign(args.count, args.max_stmts, _opt(args, "seed"), _opt(args, "workers"),
                           swap_if=args.swap_if, stop_after=stop)
    out.write(f"cases: {report.cases}, checked: {report.checked}, skipped: {report.skipped}, "
              f"divergences: {len(report.divergences)}\n")
    if report.divergences:
        out.write(fuzz.format_repro(report.divergences[0]))
        return EXIT_FINDING
    return EXIT_OK


# -- debugger -----------------------------------------------------------------------------

DEBUG_HELP = """commands:
  step [n]     execute one statement (or n) and print the changed memory lines
  mem          print the full memory dump
  branch <i>   choose alternative i at a symbolic fork
  trace        statements executed so far
  pc           current path condition
  quit         end the session
"""


def _debug_session(args) -> Session:
    if args.input.endswith(".spec"):
        spec, prog = _load_spec(args, args.input)
        _, root = prepare(spec, prog)
        return Session(root)
    prog = _program(args, args.input)
    if args.entry is None:
        raise UsageError("debugging a program needs --entry")
    m0 = _start_memory(args, prog)
    mc = SymMachine(prog, _policy(_opt(args, "send_policy")))
    call_args = _call_args(prog, args.entry, None)
    call = FunCall(Efun(args.entry, prog.function(args.entry).sig.ret), tuple(Econst(a) for a in call_args))
    base = mc.start(m0, [call], _fuel(args), None)
    return Session(SymRun.of(base, solver.PathCondition([])))


def _print_report(rep, out):
    out.write(f"{rep.statement}\n")
    for line in rep.changes:
        out.write(f"  {line}\n")
    for i, (label, cond) in enumerate(rep.alternatives):
        out.write(f"  fork {i}: {label} when {cond}\n")
    if rep.outcome is not None:
        out.write(f"session ended: {rep.outcome}\n")


def debug_loop(session: Session, lines, out, echo: bool) -> int:
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if echo:
            out.write(f"> {line}\n")
        cmd, *rest = line.split()
        try:
            if cmd == "quit":
                break
            if cmd == "step":
                n = int(rest[0]) if rest else 1
                for _ in range(n):
                    _print_report(session.step(), out)
            elif cmd == "branch":
                if len(rest) != 1 or not rest[0].isdigit():
                    raise DebugError("usage: branch <i>")
                _print_report(session.branch(int(rest[0])), out)
            elif cmd == "mem":
                out.write(session.dump() + "\n")
            elif cmd == "trace":
                for i, s in enumerate(session.trace()):
                    out.write(f"{i}: {s}\n")
            elif cmd == "pc":
                out.write(session.path_condition + "\n")
            else:
                out.write(f"unknown command {cmd!r}\n{DEBUG_HELP}")
        except SessionEnded as err:
            out.write(f"session ended: {err}\n")
        except (DebugError, ValueError) as err:
            out.write(f"error: {err}\n")
    return EXIT_OK


def cmd_debug(args, out) -> int:
    session = _debug_session(args)
    script = _opt(args, "script")
    if script is not None:
        with open(script, encoding="utf-8") as fh:
            return debug_loop(session, fh.read().splitlines(), out, echo=True)
    interactive = sys.stdin.isatty()

    def lines():
        while True:
            if interactive:
                out.write("(debug) ")
                out.flush()
            line = sys.stdin.readline()
            if not line:
                return
            yield line
    return debug_loop(session, lines(), out, echo=not interactive)


COMMANDS = {
    "translate": cmd_translate,
    "check": cmd_check,
    "scan": cmd_scan,
    "run": cmd_run,
    "verify": cmd_verify,
    "diff": cmd_diff,
    "debug": cmd_debug,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, SpecError, FrontendError, IRSyntaxError, AddressError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
