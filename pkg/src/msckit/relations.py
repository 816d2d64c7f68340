"""
Auxiliary orderings between events of an MSC.

Besides plain happens-before, several communication models force extra
scheduling constraints that are conveniently expressed as binary
relations over events:

* ``mb_rel``     sends to a common receiver must enter its mailbox in
  receive order (and a matched send beats an unmatched one);
* ``onen_rel``   a sender's outgoing messages must be received in send
  order (and its matched sends beat its unmatched ones);
* ``nn_bowtie``  the event dependency relation whose acyclicity
  characterises global-FIFO schedulability;
* ``relb`` / ``relb_asy``  the "receive i before send i+k" constraints
  of k-bounded channels, in the FIFO and the general form.

Relations are materialized as explicit edge sets; the MSCs handled here
have at most a few hundred events, so cubic closures are fine.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Msc, RelationGraph, find_cycle, require_valid

MB = "mbrel"
ONEN = "onenrel"
NNREL = "nnrel"
BOWTIE = "nnbowtie"
RELB = "relb"
RELB_ASY = "relb_asy"


class NotP2pError(Exception):
    """Raised when a FIFO-indexed construction is applied to a non-FIFO MSC."""


@dataclass(frozen=True, slots=True)
class ModelRelation:
    base: RelationGraph
    kind: str

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return self.base.edges


def transitive_closure(r: RelationGraph, reflexive: bool = False) -> RelationGraph:
    """Standard transitive closure; with `reflexive`, adds all loops."""
    succ: dict[int, set[int]] = {n: set() for n in r.nodes}
    for a, b in r.edges:
        succ.setdefault(a, set()).add(b)
    changed = True
    while changed:
        changed = False
        for a in succ:
            extra = set()
            for b in succ[a]:
                extra |= succ.get(b, set()) - succ[a]
            if extra:
                succ[a] |= extra
                changed = True
    edges = {(a, b) for a, bs in succ.items() for b in bs}
    if reflexive:
        edges |= {(n, n) for n in r.nodes}
    return RelationGraph.of(r.nodes, edges)


def is_acyclic(r: RelationGraph) -> tuple[bool, list[int] | None]:
    """True plus None, or False plus a minimal cycle (first == last)."""
    cycle = find_cycle(r)
    return (cycle is None, cycle)


def union(*rs: RelationGraph) -> RelationGraph:
    nodes: frozenset[int] = frozenset()
    edges: frozenset[tuple[int, int]] = frozenset()
    for r in rs:
        nodes |= r.nodes
        edges |= r.edges
    return RelationGraph(nodes, edges)


# -- mailbox -------------------------------------------------------------


def mb_rel(msc: Msc) -> ModelRelation:
    """Edges between sends to a common receiver: matched before
    unmatched, and matched pairs ordered as their receives."""
    require_valid(msc)
    edges = set()
    by_receiver: dict[str, list[int]] = {}
    for s in msc.send_events:
        by_receiver.setdefault(msc.labels[s].receiver, []).append(s)
    for sends in by_receiver.values():
        for s1 in sends:
            for s2 in sends:
                if s1 == s2:
                    continue
                m1, m2 = s1 in msc.matching, s2 in msc.matching
                if m1 and not m2:
                    edges.add((s1, s2))
                elif m1 and m2 and msc.proc_before(msc.matching[s1], msc.matching[s2]):
                    edges.add((s1, s2))
    return ModelRelation(RelationGraph.of(msc.events, edges), MB)


def mb_generators(msc: Msc) -> RelationGraph:
    """Process succession, matching, and the mailbox ordering, unclosed."""
    return RelationGraph.of(
        msc.events, msc.succ_edges | msc.msg_edges | mb_rel(msc).edges
    )


def mb_partial(msc: Msc, reflexive: bool = False) -> RelationGraph:
    """Transitive closure of the mailbox generators (strict by default)."""
    return transitive_closure(mb_generators(msc), reflexive=reflexive)


# -- 1-n -----------------------------------------------------------------


def onen_rel(msc: Msc) -> ModelRelation:
    """Edges forced by per-sender FIFO: a sender's matched sends precede
    its unmatched ones, and receives of one sender's messages follow the
    order of the sends."""
    require_valid(msc)
    edges = set()
    by_sender: dict[str, list[int]] = {}
    for s in msc.send_events:
        by_sender.setdefault(msc.labels[s].sender, []).append(s)
    for sends in by_sender.values():
        for s1 in sends:
            for s2 in sends:
                if s1 == s2:
                    continue
                m1, m2 = s1 in msc.matching, s2 in msc.matching
                if m1 and not m2:
                    edges.add((s1, s2))
                elif m1 and m2 and msc.proc_before(s1, s2):
                    edges.add((msc.matching[s1], msc.matching[s2]))
    return ModelRelation(RelationGraph.of(msc.events, edges), ONEN)


def onen_generators(msc: Msc) -> RelationGraph:
    return RelationGraph.of(
        msc.events, msc.succ_edges | msc.msg_edges | onen_rel(msc).edges
    )


def onen_partial(msc: Msc, reflexive: bool = False) -> RelationGraph:
    return transitive_closure(onen_generators(msc), reflexive=reflexive)


# -- n-n -----------------------------------------------------------------


def nn_rel(msc: Msc) -> RelationGraph:
    """Transitive closure of succession, matching, mailbox and 1-n edges."""
    return transitive_closure(
        RelationGraph.of(
            msc.events,
            msc.succ_edges | msc.msg_edges | mb_rel(msc).edges | onen_rel(msc).edges,
        )
    )


def nn_bowtie(msc: Msc) -> ModelRelation:
    """The event dependency relation for the global-FIFO model.

    Contains the closed relation from :func:`nn_rel` plus, for pairs not
    already related there: receive-receive edges mirroring related
    sends, send-send edges mirroring related receives, and
    matched-to-unmatched send edges.  These extra edges are not
    re-closed; acyclicity of the resulting digraph is what matters.
    """
    require_valid(msc)
    base = nn_rel(msc)
    rel = base.edges
    edges = set(rel)
    matched = sorted(msc.matched_sends)
    for s1 in matched:
        r1 = msc.matching[s1]
        for s2 in matched:
            if s1 == s2:
                continue
            r2 = msc.matching[s2]
            if (s1, s2) in rel and (r1, r2) not in rel:
                edges.add((r1, r2))
            if (r1, r2) in rel and (s1, s2) not in rel:
                edges.add((s1, s2))
        for u in msc.unmatched_sends:
            if (s1, u) not in rel:
                edges.add((s1, u))
    return ModelRelation(RelationGraph.of(msc.events, edges), BOWTIE)


# -- k-bounded channel constraints ----------------------------------------


def channel_sends(msc: Msc) -> dict[tuple[str, str], list[int]]:
    """Per-channel send events in process order."""
    out: dict[tuple[str, str], list[int]] = {}
    for p in msc.processes:
        for e in msc.proc_order[p]:
            a = msc.labels[e]
            if a.is_send:
                out.setdefault(a.channel, []).append(e)
    return out


def channel_receives(msc: Msc) -> dict[tuple[str, str], list[int]]:
    """Per-channel receive events in the receiver's process order."""
    out: dict[tuple[str, str], list[int]] = {}
    for p in msc.processes:
        for e in msc.proc_order[p]:
            a = msc.labels[e]
            if not a.is_send:
                out.setdefault(a.channel, []).append(e)
    return out


def relb(msc: Msc, k: int) -> ModelRelation:
    """For each channel, an edge from its i-th receive to its (i+k)-th
    send: the receive must be scheduled first in any k-bounded
    linearization.  FIFO channels make the indexing meaningful, so the
    MSC must satisfy the per-channel FIFO discipline."""
    require_valid(msc)
    if k < 0:
        raise ValueError("k must be >= 0")
    from .classify import is_p2p

    ok, witness = is_p2p(msc)
    if not ok:
        raise NotP2pError(f"receive indexing needs FIFO channels; offending sends {witness}")
    edges = set()
    sends = channel_sends(msc)
    for ch, recvs in channel_receives(msc).items():
        ss = sends[ch]
        for i, r in enumerate(recvs):
            j = i + k
            if j < len(ss):
                edges.add((r, ss[j]))
    return ModelRelation(RelationGraph.of(msc.events, edges), RELB)


def relb_asy(msc: Msc, k: int) -> ModelRelation:
    """Order-free variant of :func:`relb`: whenever k+1 sends are chained
    on one channel and at least one is matched, the earliest of their
    receives must precede the last send."""
    require_valid(msc)
    if k < 0:
        raise ValueError("k must be >= 0")
    from itertools import combinations

    edges = set()
    for ch, ss in channel_sends(msc).items():
        if len(ss) < k + 1:
            continue
        rpos = {}
        for s in ss:
            if s in msc.matching:
                rpos[s] = msc.position[msc.matching[s]][1]
        for tup in combinations(ss, k + 1):
            matched = [s for s in tup if s in rpos]
            if not matched:
                continue
            first = min(matched, key=lambda s: rpos[s])
            edges.add((msc.matching[first], tup[-1]))
    return ModelRelation(RelationGraph.of(msc.events, edges), RELB_ASY)


# -- export ----------------------------------------------------------------


def to_dot(r: RelationGraph, msc: Msc | None = None, name: str = "relation") -> str:
    """DOT rendering of a relation, labelling nodes with their actions
    when the owning MSC is supplied."""
    lines = [f"digraph {name} {{"]
    for n in sorted(r.nodes):
        label = str(msc.labels[n]) if msc is not None and n in msc.labels else str(n)
        lines.append(f'  e{n} [label="{label}"];')
    for a, b in sorted(r.edges):
        lines.append(f"  e{a} -> e{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
