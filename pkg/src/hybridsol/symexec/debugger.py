"""Statement-by-statement debugging sessions over symbolic or concrete runs.

A session wraps one ``SymRun``.  ``step`` executes exactly one statement and
returns the memory dump with the lines that changed.  Where the next
statement forks, the session stops with the feasible alternatives listed and
waits for ``branch``.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Optional

from .. import germ
from ..fether import describe_outcome
from ..irtext import show_stmt_inline
from . import solver
from .engine import Stuck, SymRun


class SessionEnded(Exception):
    pass


class DebugError(Exception):
    pass


@dataclass
class StepReport:
    statement: str
    dump: str
    changes: list
    alternatives: list = field(default_factory=list)  # (label, condition) at a fork
    outcome: Optional[str] = None


def outcome_text(out) -> str:
    if isinstance(out, Stuck):
        return f"STUCK: {out.reason}"
    return describe_outcome(out)


def dump_diff(before: str, after: str) -> list:
    return [line for line in difflib.ndiff(before.splitlines(), after.splitlines())
            if line[:2] in ("- ", "+ ")]


class Session:
    def __init__(self, run: SymRun):
        self.run = run
        self.pending: Optional[list] = None
        self.steps = 0
        run.prepare()
        self.last_dump = self.dump()

    @property
    def ended(self) -> bool:
        return self.run.outcome is not None

    def dump(self) -> str:
        return germ.dump(self.run.m, only_used=True)

    def step(self) -> StepReport:
        if self.pending is not None:
            raise DebugError("at a fork: choose a branch with 'branch <n>'")
        if self.ended:
            raise SessionEnded(outcome_text(self.run.outcome))
        s = self.run.stack[-1][0]
        text = show_stmt_inline(s)
        children = []
        for child in self.run.advance():
            if child.grew:
                child.grew = False
                if isinstance(solver.solve(child.pc), solver.Unsat):
                    continue
            children.append(child)
        self.steps += 1
        if len(children) == 1:
            return self._settle(children[0], text)
        self.pending = children
        alts = [(c.label, str(c.pc.items[-1]) if c.pc.items else "true") for c in children]
        return StepReport(text, self.last_dump, [], alts)

    def branch(self, i: int) -> StepReport:
        if self.pending is None:
            raise DebugError("not at a fork")
        if not 0 <= i < len(self.pending):
            raise DebugError(f"branch must be between 0 and {len(self.pending) - 1}")
        chosen = self.pending[i]
        self.pending = None
        return self._settle(chosen, f"branch {i} ({chosen.label})")

    def _settle(self, run: SymRun, text: str) -> StepReport:
        self.run = run
        run.prepare()
        now = self.dump()
        changes = dump_diff(self.last_dump, now)
        self.last_dump = now
        out = outcome_text(run.outcome) if run.outcome is not None else None
        return StepReport(text, now, changes, [], out)

    def trace(self) -> list:
        return [show_stmt_inline(s) for s in self.run.trace]

    @property
    def path_condition(self) -> str:
        return str(self.run.pc)


def debug_step(session: Session) -> tuple:
    """(session, memory dump) after exactly one statement."""
    report = session.step()
    return session, report.dump


__all__ = ["DebugError", "Session", "SessionEnded", "StepReport", "debug_step", "dump_diff",
           "outcome_text"]
