"""Exhaustive concrete check of a spec over a small value grid.

Every boolean symbol takes both values and every integer symbol takes
0, 1 and the all-ones bit pattern of its width.  Each assignment that
satisfies the precondition is run through the interpreter; with a symbolic
send policy every sequence of send outcomes the run can reach is enumerated
as well.  This is the reference the symbolic verdicts are checked against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..program import Program
from ..types import TBool
from ..values import VBool
from .hoare import HoareSpec, concrete_run, post_holds, precondition_holds, send_symbol
from .symvalue import const_of

MAX_SENDS = 12


def grid(ty) -> list:
    if isinstance(ty, TBool):
        return [VBool(False), VBool(True)]
    width = getattr(ty, "width", 160)
    vals = [const_of(ty, 0), const_of(ty, 1), const_of(ty, (1 << width) - 1)]
    out = []
    for v in vals:
        if v not in out:
            out.append(v)
    return out


def assignments(spec: HoareSpec):
    decls = list(spec.symbols)
    pools = [[d.value] if d.value is not None else grid(d.ty) for d in decls]
    for combo in itertools.product(*pools):
        yield {d.name: v for d, v in zip(decls, combo)}


@dataclass
class BoundedReport:
    checked: int = 0
    vacuous: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def _send_scripts(prog, spec, model):
    """Runs under every reachable send-outcome sequence: (model with sends, m0, outcome)."""
    if spec.send_policy != "symbolic":
        m0, out, _ = concrete_run(prog, spec, model)
        yield model, m0, out
        return
    queue = [()]
    while queue:
        script = queue.pop(0)
        full = dict(model)
        for i, r in enumerate(script, 1):
            full[send_symbol(i)] = VBool(r)
        used = [0]

        def policy(i, kind, target, amount, script=script):
            used[0] = max(used[0], i)
            return script[i - 1] if i <= len(script) else True
        m0, out, _ = concrete_run(prog, spec, full, policy)
        for i in range(len(script) + 1, min(used[0], MAX_SENDS) + 1):
            full[send_symbol(i)] = VBool(True)
        yield full, m0, out
        for i in range(len(script), min(used[0], MAX_SENDS)):
            queue.append(script + (True,) * (i - len(script)) + (False,))


def bounded_check(spec: HoareSpec, prog: Program, stop_after: int = 0) -> BoundedReport:
    rep = BoundedReport()
    for model in assignments(spec):
        if not precondition_holds(spec, model):
            rep.vacuous += 1
            continue
        for full, m0, out in _send_scripts(prog, spec, model):
            rep.checked += 1
            if not post_holds(prog, spec, m0, out, full):
                rep.counterexamples.append((full, out))
                if stop_after and len(rep.counterexamples) >= stop_after:
                    return rep
    return rep


__all__ = ["BoundedReport", "assignments", "bounded_check", "grid"]
