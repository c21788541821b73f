"""Hybrid verification: symbolic execution of Hoare specs over the cell memory model."""

from .hoare import (
    Assertions, HoareSpec, OutOfGasPost, Rollback, SpecError, SymbolDecl, Target, parse_target,
    replay,
)
from .engine import (
    Falsified, Result, Stats, SymMachine, SymRun, Unknown, Verified, explore, prepare, verify,
    verify_concolic, verify_selective, verify_static,
)
from .solver import PathCondition, Sat, Unsat, solve
from .summary import Summary, SummaryStore, segment_id, summarize
from .bounded import BoundedReport, bounded_check
from .debugger import DebugError, Session, SessionEnded, debug_step
from .symvalue import App, Sym, SymTypeError, mk

__all__ = [
    "App", "Assertions", "BoundedReport", "DebugError", "Falsified", "HoareSpec", "OutOfGasPost",
    "PathCondition", "Result", "Rollback", "Sat", "Session", "SessionEnded", "SpecError", "Stats",
    "Summary", "SummaryStore", "Sym", "SymMachine", "SymRun", "SymTypeError", "SymbolDecl",
    "Target", "Unknown", "Unsat", "Verified", "bounded_check", "debug_step", "explore", "mk",
    "parse_target", "prepare", "replay", "segment_id", "solve", "summarize", "verify",
    "verify_concolic", "verify_selective", "verify_static",
]
