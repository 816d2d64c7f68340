"""
Channel-bounded linearizations and weak synchronizability.

A linearization is k-bounded when no channel ever holds more than k
in-flight messages (counted per ordered process pair, following the
original definition; a global count is available behind a flag).  An MSC
is existentially k-bounded for a model when some linearization
witnessing that model is k-bounded, universally when all of them are.
Both are decided relationally, against the "receive i before send i+k"
constraints, and cross-checked by enumeration in the tests.

Weakly (k-)synchronous MSCs factor into exchanges: blocks whose sends
can all be scheduled ahead of their receives.  Factorization feasibility
is decided on the unit graph (messages and unmatched sends), where a
factorization exists iff no strongly connected component contains a
"receive happens before send" constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import relations
from .classify import NotInModelError, membership
from .core import (
    Linearization,
    Msc,
    MscError,
    RelationGraph,
    extends_hb,
    require_valid,
)

BOUNDED_MODELS = ("asy", "p2p", "co", "mb", "onen", "nn")


def is_k_bounded_linearization(
    msc: Msc, lin: Linearization | Sequence[int], k: int, per_channel: bool = True
) -> bool:
    """Check the occupancy bound along a linearization: at every send,
    its channel (or, with ``per_channel=False``, the whole network) holds
    at most k messages including the one just sent."""
    require_valid(msc)
    order = lin.order if isinstance(lin, Linearization) else tuple(lin)
    if not extends_hb(msc, order):
        raise MscError("order does not linearize the MSC")
    counts: dict[tuple[str, str], int] = {}
    total = 0
    for e in order:
        a = msc.labels[e]
        if a.is_send:
            counts[a.channel] = counts.get(a.channel, 0) + 1
            total += 1
            occupancy = counts[a.channel] if per_channel else total
            if occupancy > k:
                return False
        else:
            counts[a.channel] = counts.get(a.channel, 0) - 1
            total -= 1
    return True


def _model_relation(msc: Msc, model: str) -> RelationGraph:
    if model in ("asy", "p2p", "co"):
        return RelationGraph.of(msc.events, msc.succ_edges | msc.msg_edges)
    if model == "mb":
        return relations.mb_generators(msc)
    if model == "onen":
        return relations.onen_generators(msc)
    if model == "nn":
        return relations.nn_bowtie(msc).base
    raise ValueError(f"unknown model {model!r}")


def _require_member(msc: Msc, model: str) -> None:
    if model == "asy":
        return
    ok, _ = membership(msc, model)
    if not ok:
        raise NotInModelError(f"MSC is not {model}")


def _unmatched_ok(msc: Msc, k: int) -> bool:
    per_channel: dict[tuple[str, str], int] = {}
    for u in msc.unmatched_sends:
        ch = msc.labels[u].channel
        per_channel[ch] = per_channel.get(ch, 0) + 1
    return all(n <= k for n in per_channel.values())


def exists_k_bounded(msc: Msc, k: int, model: str = "asy") -> bool:
    """Some `model` linearization is k-bounded.

    Decided as acyclicity of the model's scheduling relation joined with
    the k-window constraints, plus a cap of k unmatched sends per
    channel.  The cap is necessary for every model (unmatched messages
    occupy their channel forever), and with it the acyclicity test is
    also sufficient: the window constraints then force a receive before
    every send that would overfill its channel.
    """
    require_valid(msc)
    if model not in BOUNDED_MODELS:
        raise ValueError(f"unknown model {model!r}")
    _require_member(msc, model)
    if not _unmatched_ok(msc, k):
        return False
    if model == "asy":
        window = relations.relb_asy(msc, k).edges
    else:
        window = relations.relb(msc, k).edges
    joined = RelationGraph.of(msc.events, _model_relation(msc, model).edges | window)
    ok, _ = relations.is_acyclic(joined)
    return ok


def forall_k_bounded(msc: Msc, k: int, model: str = "asy") -> bool:
    """Every `model` linearization is k-bounded: the k-window constraints
    are already implied by the model's scheduling relation."""
    require_valid(msc)
    if model not in BOUNDED_MODELS:
        raise ValueError(f"unknown model {model!r}")
    _require_member(msc, model)
    if not _unmatched_ok(msc, k):
        return False
    if model == "asy":
        window = relations.relb_asy(msc, k).edges
        implied = {(a, b) for a in msc.events for b in msc.hb_reach[a]}
    else:
        window = relations.relb(msc, k).edges
        # every model linearization extends the transitive closure of
        # the scheduling relation, so inclusion is tested against it
        implied = relations.transitive_closure(_model_relation(msc, model)).edges
    return all(edge in implied for edge in window)


def bounded_failure_witness(msc: Msc, k: int, model: str, universal: bool) -> dict:
    """Concrete evidence for a negative boundedness verdict: an
    overfull channel, an unimplied window constraint, or a cycle."""
    per_channel: dict[tuple[str, str], int] = {}
    for u in msc.unmatched_sends:
        ch = msc.labels[u].channel
        per_channel[ch] = per_channel.get(ch, 0) + 1
    for ch, n in sorted(per_channel.items()):
        if n > k:
            return {"kind": "unmatched-overflow", "channel": list(ch), "unmatched": n}
    window = (
        relations.relb_asy(msc, k) if model == "asy" else relations.relb(msc, k)
    ).edges
    if universal:
        if model == "asy":
            implied = {(a, b) for a in msc.events for b in msc.hb_reach[a]}
        else:
            implied = relations.transitive_closure(_model_relation(msc, model)).edges
        for r, s in sorted(window):
            if (r, s) not in implied:
                return {"kind": "unforced-window", "receive": r, "send": s}
    joined = RelationGraph.of(msc.events, _model_relation(msc, model).edges | window)
    ok, cycle = relations.is_acyclic(joined)
    if not ok:
        return {"kind": "cycle", "events": list(cycle or ())}
    return {"kind": "none"}


def minimal_exists_k(msc: Msc, model: str = "asy", cap: int = 32) -> int | None:
    """Linear scan for the least k with a k-bounded model linearization."""
    for k in range(cap + 1):
        if exists_k_bounded(msc, k, model):
            return k
    return None


# -- exchanges and weak synchronizability -------------------------------------


@dataclass(frozen=True)
class ExchangeDecomposition:
    """Ordered factors (tuples of event ids) multiplying back to the MSC."""

    factors: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class DecompositionFailure:
    """Witness that no factorization exists.

    ``reason`` is ``"receive-before-send"`` when one unavoidable block
    contains a receive that happens before a send (then `receive` and
    `send` name the pair), or ``"block-exceeds-cap"`` when a block needs
    more sends than the requested exchange size (then `events` lists the
    block)."""

    reason: str
    receive: int | None = None
    send: int | None = None
    events: tuple[int, ...] = ()


def is_exchange(msc: Msc) -> bool:
    """Send events form a happens-before downward-closed set."""
    require_valid(msc)
    return not any(
        msc.hb_strict(r, s) for r in msc.receive_events for s in msc.send_events
    )


def _units(msc: Msc) -> list[tuple[int, ...]]:
    """Messages as (send, receive) pairs, unmatched sends as singletons."""
    units = []
    for s in sorted(msc.send_events):
        if s in msc.matching:
            units.append((s, msc.matching[s]))
        else:
            units.append((s,))
    return units


def _unit_graph(msc: Msc) -> tuple[list[tuple[int, ...]], dict[int, set[int]], set[tuple[int, int]]]:
    """Unit digraph: weak edges u -> v when some event of u happens
    before some event of v (v cannot be in an earlier factor), strict
    edges when u's receive happens before v's send (v must be strictly
    later)."""
    units = _units(msc)
    weak: dict[int, set[int]] = {i: set() for i in range(len(units))}
    strict: set[tuple[int, int]] = set()
    for i, u in enumerate(units):
        for j, v in enumerate(units):
            if i == j:
                continue
            if any(msc.hb_strict(e, f) for e in u for f in v):
                weak[i].add(j)
            if len(u) == 2 and msc.hb(u[1], v[0]):
                strict.add((i, j))
                weak[i].add(j)
    return units, weak, strict


def _sccs(n: int, adj: dict[int, set[int]]) -> list[list[int]]:
    """Tarjan, iterative; components returned with members sorted."""
    index = {}
    low = {}
    on_stack = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if root in index:
            continue
        work = [(root, iter(sorted(adj[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(adj[w]))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    return out


def decompose_exchanges(
    msc: Msc, k: int | None = None
) -> ExchangeDecomposition | DecompositionFailure:
    """Factor the MSC into exchanges, each capped at k sends when given.

    Strongly connected unit blocks are atomic: a factorization exists
    iff no block carries an internal receive-before-send constraint (and,
    with the cap, no block sends more than k messages).  Factors are the
    blocks in topological order, greedily merged into maximal exchanges
    for a deterministic result.
    """
    require_valid(msc)
    if not msc.events:
        return ExchangeDecomposition(())
    units, weak, strict = _unit_graph(msc)
    comps = _sccs(len(units), weak)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for u in comp:
            comp_of[u] = ci

    for i, j in sorted(strict):
        if comp_of[i] == comp_of[j]:
            return DecompositionFailure(
                "receive-before-send", receive=units[i][1], send=units[j][0]
            )
    if k is not None:
        for comp in comps:
            if len(comp) > k:
                block = tuple(sorted(e for u in comp for e in units[u]))
                return DecompositionFailure("block-exceeds-cap", events=block)

    # condensation in deterministic topological order (min event id first)
    dag: dict[int, set[int]] = {i: set() for i in range(len(comps))}
    indeg = {i: 0 for i in range(len(comps))}
    for u, vs in weak.items():
        for v in vs:
            a, b = comp_of[u], comp_of[v]
            if a != b and b not in dag[a]:
                dag[a].add(b)
                indeg[b] += 1
    key = {ci: min(units[u][0] for u in comp) for ci, comp in enumerate(comps)}
    import heapq

    ready = [(key[ci], ci) for ci in indeg if indeg[ci] == 0]
    heapq.heapify(ready)
    topo: list[int] = []
    while ready:
        _, ci = heapq.heappop(ready)
        topo.append(ci)
        for cj in sorted(dag[ci]):
            indeg[cj] -= 1
            if indeg[cj] == 0:
                heapq.heappush(ready, (key[cj], cj))

    factors: list[list[int]] = []
    group: list[int] = []

    def group_ok(candidate: list[int]) -> bool:
        members = {u for ci in candidate for u in comps[ci]}
        if any(i in members and j in members for i, j in strict):
            return False
        if k is not None:
            sends = sum(len(comps[ci]) for ci in candidate)
            if sends > k:
                return False
        return True

    for ci in topo:
        if group and not group_ok(group + [ci]):
            factors.append(group)
            group = [ci]
        else:
            group.append(ci)
    if group:
        factors.append(group)

    out = []
    for g in factors:
        events = sorted(e for ci in g for u in comps[ci] for e in units[u])
        out.append(tuple(events))
    return ExchangeDecomposition(tuple(out))


def is_weakly_synchronous(msc: Msc) -> bool:
    return isinstance(decompose_exchanges(msc), ExchangeDecomposition)


def is_weakly_k_synchronous(msc: Msc, k: int) -> bool:
    return isinstance(decompose_exchanges(msc, k), ExchangeDecomposition)
