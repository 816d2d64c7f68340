"""
Membership of an MSC in the seven communication models, with witnesses.

The models, from weakest to strongest: fully asynchronous (``asy``),
per-channel FIFO (``p2p``), causally ordered (``co``), mailbox (``mb``),
per-sender FIFO (``onen``), global FIFO (``nn``), and realizable with
synchronous communication (``rsc``).  Membership verdicts are downward
closed along that chain.

Two independent decision routes are kept side by side: the relational
checks used by :func:`classify`, and the brute-force
linearization-enumeration oracle :func:`oracle_membership` that the test
suite plays against them.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

from . import relations
from .core import (
    Linearization,
    Msc,
    MscError,
    RelationGraph,
    _topo_order,
    enumerate_linearizations,
    extends_hb,
    find_cycle,
    require_valid,
)

MODELS = ("asy", "p2p", "co", "mb", "onen", "nn", "rsc")


class NotInModelError(MscError):
    """A linearization was requested for a model the MSC does not belong to."""


class OracleLimitError(MscError):
    """The MSC exceeds the configured brute-force bound."""


class HierarchyViolation(MscError):
    """Internal consistency failure: the verdicts broke the model chain."""


def oracle_limit(default: int = 10) -> int:
    """Event cap for brute-force enumeration, overridable through the
    MSCKIT_ORACLE_LIMIT environment variable."""
    raw = os.environ.get("MSCKIT_ORACLE_LIMIT")
    return int(raw) if raw else default


@dataclass(frozen=True, slots=True)
class Crown:
    """A cyclic chain of matched messages, each sent before the next one
    is received; its existence rules out a synchronous schedule."""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class ClassReport:
    verdicts: dict[str, bool]
    witnesses: dict[str, Linearization] = field(default_factory=dict)
    negatives: dict[str, tuple[int, ...]] = field(default_factory=dict)

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(m for m in MODELS if self.verdicts[m])

    def to_json(self) -> dict:
        out = {
            "models": {m: self.verdicts[m] for m in MODELS},
            "witnesses": {m: list(lin.order) for m, lin in sorted(self.witnesses.items())},
            "negatives": {m: list(w) for m, w in sorted(self.negatives.items())},
        }
        return out

    @staticmethod
    def from_json(data: dict) -> "ClassReport":
        return ClassReport(
            verdicts=dict(data["models"]),
            witnesses={
                m: Linearization(tuple(v)) for m, v in data.get("witnesses", {}).items()
            },
            negatives={m: tuple(v) for m, v in data.get("negatives", {}).items()},
        )

    def to_table(self, msc: Msc | None = None) -> str:
        rows = []
        for m in MODELS:
            if self.verdicts[m]:
                extra = ""
                if msc is not None and self.witnesses.get(m, Linearization(())).order:
                    extra = "  witness: " + format_linearization(msc, self.witnesses[m])
                rows.append(f"{m:<5} yes{extra}")
            else:
                extra = ""
                if m in self.negatives:
                    extra = "  witness: " + " ".join(str(e) for e in self.negatives[m])
                rows.append(f"{m:<5} no{extra}")
        return "\n".join(rows)


def format_linearization(msc: Msc, lin: Linearization | Sequence[int]) -> str:
    """Render an event order with `!name`/`?name` tokens, the same ones
    the text format uses."""
    from .io import message_names

    order = lin.order if isinstance(lin, Linearization) else tuple(lin)
    names = message_names(msc)
    rnames = {msc.matching[s]: n for s, n in names.items() if s in msc.matching}
    return " ".join(
        ("!" + names[e]) if msc.labels[e].is_send else ("?" + rnames[e]) for e in order
    )


# -- universal-clause models -----------------------------------------------


def is_p2p(msc: Msc) -> tuple[bool, tuple[int, int] | None]:
    """Per-channel FIFO: same-channel sends have receives in send order,
    or the later send is unmatched."""
    require_valid(msc)
    for ch, sends in relations.channel_sends(msc).items():
        for i, s1 in enumerate(sends):
            for s2 in sends[i + 1 :]:
                if not _pair_ok(msc, s1, s2, proc_order_receives=True):
                    return (False, (s1, s2))
    return (True, None)


def is_co(msc: Msc) -> tuple[bool, tuple[int, int] | None]:
    """Causal delivery: sends to a common receiver ordered by
    happens-before have receives in the same order, or the later send is
    unmatched."""
    require_valid(msc)
    by_receiver: dict[str, list[int]] = {}
    for s in msc.send_events:
        by_receiver.setdefault(msc.labels[s].receiver, []).append(s)
    for sends in by_receiver.values():
        for s1 in sends:
            for s2 in sends:
                if s1 != s2 and msc.hb(s1, s2):
                    if not _pair_ok(msc, s1, s2, proc_order_receives=True):
                        return (False, (s1, s2))
    return (True, None)


def _pair_ok(msc: Msc, s1: int, s2: int, proc_order_receives: bool) -> bool:
    if s2 not in msc.matching:
        return True
    if s1 not in msc.matching:
        return False
    r1, r2 = msc.matching[s1], msc.matching[s2]
    if proc_order_receives:
        return msc.proc_before(r1, r2)
    return True


# -- acyclicity-based models --------------------------------------------------


def is_mb(msc: Msc) -> tuple[bool, tuple[int, ...] | None]:
    ok, cycle = relations.is_acyclic(relations.mb_generators(msc))
    return (ok, tuple(cycle) if cycle else None)


def is_onen(msc: Msc) -> tuple[bool, tuple[int, ...] | None]:
    ok, cycle = relations.is_acyclic(relations.onen_generators(msc))
    return (ok, tuple(cycle) if cycle else None)


def is_nn(msc: Msc) -> tuple[bool, tuple[int, ...] | None]:
    ok, cycle = relations.is_acyclic(relations.nn_bowtie(msc).base)
    return (ok, tuple(cycle) if cycle else None)


# -- rsc and crowns ------------------------------------------------------------


def crown_digraph(msc: Msc) -> RelationGraph:
    """Digraph on matched sends with an edge s1 -> s2 whenever s1 happens
    strictly before the receive matching s2."""
    require_valid(msc)
    matched = sorted(msc.matched_sends)
    edges = set()
    for s1 in matched:
        for s2 in matched:
            if s1 != s2 and msc.hb_strict(s1, msc.matching[s2]):
                edges.add((s1, s2))
    return RelationGraph.of(matched, edges)


def find_crown(msc: Msc) -> Crown | None:
    cycle = find_cycle(crown_digraph(msc))
    if cycle is None:
        return None
    sends = cycle[:-1]
    return Crown(tuple((s, msc.matching[s]) for s in sends))


def is_rsc(msc: Msc) -> tuple[bool, tuple[int, ...] | None]:
    """Synchronously realizable: no unmatched send and no crown."""
    require_valid(msc)
    unm = sorted(msc.unmatched_sends)
    if unm:
        return (False, (unm[0],))
    crown = find_crown(msc)
    if crown is not None:
        return (False, tuple(e for pair in crown.pairs for e in pair))
    return (True, None)


# -- linearization construction -------------------------------------------------


class NnAlgorithmError(MscError):
    """The dependency-graph loop got stuck; happens exactly when the
    event dependency relation is cyclic."""


def nn_linearize(msc: Msc) -> Linearization:
    """Build a global-FIFO linearization from the event dependency graph.

    Loop, with ascending event id breaking every tie:

    1. emit a matched send of in-degree 0;
    2. else, if no matched send remains, emit an unmatched send of
       in-degree 0;
    3. else emit the receive of the oldest emitted-but-unreceived
       message, provided it has in-degree 0;
    4. anything else is an error (cyclic dependency relation);
    5. stop once every event is emitted.

    Emitted events leave the graph together with their outgoing edges.
    """
    require_valid(msc)
    edges = relations.nn_bowtie(msc).edges
    out_adj: dict[int, list[int]] = {e: [] for e in msc.events}
    indeg = {e: 0 for e in msc.events}
    for a, b in edges:
        out_adj[a].append(b)
        indeg[b] += 1

    remaining = set(msc.events)
    matched_left = {e for e in msc.matched_sends}
    fifo: list[int] = []  # matched sends emitted, receive still pending
    order: list[int] = []

    def emit(e: int) -> None:
        remaining.discard(e)
        matched_left.discard(e)
        for f in out_adj[e]:
            indeg[f] -= 1
        order.append(e)

    while remaining:
        step1 = sorted(
            e for e in remaining if indeg[e] == 0 and e in msc.matching
        )
        if step1:
            s = step1[0]
            emit(s)
            fifo.append(s)
            continue
        if not matched_left:
            step2 = sorted(
                e
                for e in remaining
                if indeg[e] == 0 and msc.labels[e].is_send and e not in msc.matching
            )
            if step2:
                emit(step2[0])
                continue
        if fifo:
            r = msc.matching[fifo[0]]
            if r in remaining and indeg[r] == 0:
                emit(r)
                fifo.pop(0)
                continue
        raise NnAlgorithmError("dependency graph has no admissible event; relation is cyclic")

    return Linearization(tuple(order), ("nn",))


def rsc_linearize(msc: Msc) -> Linearization:
    """Schedule that pairs every send with its receive back to back.
    Exists exactly when the MSC has no unmatched send and no crown."""
    require_valid(msc)
    emitted: set[int] = set()
    order: list[int] = []
    pending = sorted(msc.matched_sends)
    preds = {e: {a for a in msc.events if msc.hb_strict(a, e)} for e in msc.events}
    while pending:
        chosen = None
        for s in pending:
            r = msc.matching[s]
            if preds[s] <= emitted and preds[r] <= emitted | {s}:
                chosen = s
                break
        if chosen is None:
            raise NotInModelError("no synchronous schedule (crown present)")
        pending.remove(chosen)
        order.extend((chosen, msc.matching[chosen]))
        emitted.update((chosen, msc.matching[chosen]))
    return Linearization(tuple(order), ("rsc",))


def _toposort_relation(msc: Msc, rel: RelationGraph) -> Linearization:
    adj: dict[int, list[int]] = {e: [] for e in msc.events}
    for a, b in rel.edges:
        if a != b:
            adj[a].append(b)
    order = _topo_order(msc.events, adj)
    if order is None:
        raise NotInModelError("relation is cyclic")
    return Linearization(tuple(order))


def linearize(msc: Msc, model: str) -> Linearization:
    """A linearization witnessing membership of the MSC in `model`.

    Topological sort of the model's scheduling relation, the dependency
    graph loop for ``nn``, and send-receive pairing for ``rsc``.  Raises
    :class:`NotInModelError` when the MSC is not in the class.  Output is
    verified against :func:`check_linearization` before being returned.
    """
    require_valid(msc)
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if not membership(msc, model)[0]:
        raise NotInModelError(f"MSC is not {model}")
    if model in ("asy", "p2p", "co"):
        lin = _toposort_relation(
            msc, RelationGraph.of(msc.events, msc.succ_edges | msc.msg_edges)
        )
    elif model == "mb":
        lin = _toposort_relation(msc, relations.mb_generators(msc))
    elif model == "onen":
        lin = _toposort_relation(msc, relations.onen_generators(msc))
    elif model == "nn":
        lin = nn_linearize(msc)
    else:
        lin = rsc_linearize(msc)
    if not check_linearization(msc, lin, model):
        raise MscError(f"internal error: produced order fails the {model} clause")
    return Linearization(lin.order, (model,))


def check_linearization(msc: Msc, lin: Linearization | Sequence[int], model: str) -> bool:
    """Evaluate the defining clause of `model` on a total order.

    The order must linearize the MSC.  For ``asy`` any linearization
    qualifies; ``p2p`` and ``co`` constrain send pairs on one channel or
    to one receiver; ``mb``, ``onen``, and ``nn`` compare receive order
    with send order at the mailbox, sender, or global level; ``rsc``
    wants each send immediately followed by its receive.
    """
    require_valid(msc)
    order = lin.order if isinstance(lin, Linearization) else tuple(lin)
    if not extends_hb(msc, order):
        raise MscError("order does not linearize the MSC")
    pos = {e: i for i, e in enumerate(order)}

    if model == "asy":
        return True
    if model == "rsc":
        if msc.unmatched_sends:
            return False
        return all(pos[r] == pos[s] + 1 for s, r in msc.matching.items())

    sends = list(msc.send_events)

    def receives_ordered(s1: int, s2: int) -> bool:
        if s2 not in msc.matching:
            return True
        if s1 not in msc.matching:
            return False
        return pos[msc.matching[s1]] < pos[msc.matching[s2]]

    if model == "p2p":
        pairs = (
            (s1, s2)
            for s1 in sends
            for s2 in sends
            if s1 != s2
            and pos[s1] < pos[s2]
            and msc.labels[s1].channel == msc.labels[s2].channel
        )
    elif model == "co":
        pairs = (
            (s1, s2)
            for s1 in sends
            for s2 in sends
            if s1 != s2
            and msc.hb(s1, s2)
            and msc.labels[s1].receiver == msc.labels[s2].receiver
        )
    elif model == "mb":
        pairs = (
            (s1, s2)
            for s1 in sends
            for s2 in sends
            if s1 != s2
            and pos[s1] < pos[s2]
            and msc.labels[s1].receiver == msc.labels[s2].receiver
        )
    elif model == "onen":
        pairs = (
            (s1, s2)
            for s1 in sends
            for s2 in sends
            if s1 != s2 and msc.proc_before(s1, s2)
        )
    elif model == "nn":
        pairs = (
            (s1, s2) for s1 in sends for s2 in sends if s1 != s2 and pos[s1] < pos[s2]
        )
    else:
        raise ValueError(f"unknown model {model!r}")

    return all(receives_ordered(s1, s2) for s1, s2 in pairs)


# -- membership dispatch and the brute-force oracle ----------------------------


def membership(msc: Msc, model: str) -> tuple[bool, tuple[int, ...] | None]:
    """Relational membership verdict plus a negative witness."""
    if model == "asy":
        return (True, None)
    if model == "p2p":
        ok, pair = is_p2p(msc)
        return (ok, pair)
    if model == "co":
        ok, pair = is_co(msc)
        return (ok, pair)
    if model == "mb":
        return is_mb(msc)
    if model == "onen":
        return is_onen(msc)
    if model == "nn":
        return is_nn(msc)
    if model == "rsc":
        return is_rsc(msc)
    raise ValueError(f"unknown model {model!r}")


def oracle_membership(msc: Msc, model: str, limit: int | None = None) -> bool:
    """Ground truth by enumeration: some linearization satisfies the
    model's clause.  The universally-quantified models (asy, p2p, co)
    are evaluated on their definitional clause directly."""
    require_valid(msc)
    cap = oracle_limit() if limit is None else limit
    if len(msc.events) > cap:
        raise OracleLimitError(f"{len(msc.events)} events exceed the oracle cap {cap}")
    if model == "asy":
        return True
    if model == "p2p":
        return is_p2p(msc)[0]
    if model == "co":
        return is_co(msc)[0]
    if model == "rsc" and msc.unmatched_sends:
        # first conjunct of the definition; skips a pointless enumeration
        return False
    for lin in enumerate_linearizations(msc):
        if check_linearization(msc, lin, model):
            return True
    return False


def classify(msc: Msc, with_witnesses: bool = True) -> ClassReport:
    """Run every membership check, assert hierarchy downward closure,
    and package witnesses (a model linearization for members, a violating
    pair or cycle for non-members)."""
    require_valid(msc)
    verdicts: dict[str, bool] = {}
    negatives: dict[str, tuple[int, ...]] = {}
    witnesses: dict[str, Linearization] = {}
    for model in MODELS:
        ok, witness = membership(msc, model)
        verdicts[model] = ok
        if not ok and witness is not None:
            negatives[model] = witness
        elif ok and with_witnesses:
            witnesses[model] = linearize(msc, model)
    for smaller, larger in zip(reversed(MODELS), list(reversed(MODELS))[1:]):
        if verdicts[smaller] and not verdicts[larger]:
            raise HierarchyViolation(f"{smaller} holds but {larger} does not")
    return ClassReport(verdicts, witnesses, negatives)


def report_to_json_text(report: ClassReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
