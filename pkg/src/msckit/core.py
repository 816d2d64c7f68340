"""
Core MSC data model.

An MSC is a finite set of events, each labelled with a send or receive
action, together with a per-process total order and a partial injective
matching from send events to receive events.  The induced happens-before
relation (the reflexive-transitive closure of process succession and
matching) must be a partial order.

Everything here is immutable after construction and every operation is a
pure function of its inputs, so values can be shared freely across
threads.  Construction performs only shape normalisation; semantic
checks live in :func:`validate`, which reports violations as data rather
than raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

SEND = "send"
RECV = "recv"


class MscError(Exception):
    """Base class for errors raised by msckit operations."""


class InvalidMscError(MscError):
    """An operation with a validity precondition was given an invalid MSC."""


class LimitExceededError(MscError):
    """A brute-force enumeration hit its configured bound."""


class NotDownwardClosedError(MscError):
    """Requested prefix set is not downward closed; carries a witness pair."""

    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"not downward closed: {pair[0]} precedes kept event {pair[1]}")
        self.pair = pair


@dataclass(frozen=True, slots=True)
class Action:
    """A send or receive of `payload` on the channel (sender, receiver)."""

    kind: str
    sender: str
    receiver: str
    payload: str

    def __post_init__(self) -> None:
        if self.kind not in (SEND, RECV):
            raise ValueError(f"bad action kind: {self.kind!r}")
        if self.sender == self.receiver:
            # Self-sends are rejected at construction; every channel has
            # two distinct endpoints.
            raise ValueError(f"self-send not allowed: {self.sender}")

    @property
    def is_send(self) -> bool:
        return self.kind == SEND

    @property
    def process(self) -> str:
        """The process that executes this action."""
        return self.sender if self.kind == SEND else self.receiver

    @property
    def channel(self) -> tuple[str, str]:
        return (self.sender, self.receiver)

    def __str__(self) -> str:
        mark = "!" if self.kind == SEND else "?"
        return f"{mark}({self.sender},{self.receiver},{self.payload})"


def send(p: str, q: str, m: str) -> Action:
    return Action(SEND, p, q, m)


def recv(p: str, q: str, m: str) -> Action:
    """Receive, executed by `q`, of message `m` sent by `p`."""
    return Action(RECV, p, q, m)


@dataclass(frozen=True, slots=True)
class RelationGraph:
    """A finite binary relation over event identifiers."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    @staticmethod
    def of(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> "RelationGraph":
        return RelationGraph(frozenset(nodes), frozenset(edges))

    def successors(self, node: int) -> list[int]:
        return sorted(b for (a, b) in self.edges if a == node)

    def has(self, a: int, b: int) -> bool:
        return (a, b) in self.edges

    def to_edge_list(self) -> str:
        """One `a b` pair per line, sorted."""
        return "\n".join(f"{a} {b}" for a, b in sorted(self.edges))


@dataclass(frozen=True, slots=True)
class Linearization:
    """A total order of an MSC's events, possibly tagged with the models
    whose definitional clause it has been checked to witness."""

    order: tuple[int, ...]
    models: tuple[str, ...] = ()

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __len__(self) -> int:
        return len(self.order)


class Msc:
    """A message sequence chart.

    Parameters
    ----------
    processes:
        Declared processes, in declaration order.  Processes without
        events are allowed.
    labels:
        Mapping from event id to its action.
    proc_order:
        Per-process sequences of event ids, inducing the process
        relation.  Events must appear on the line of the process that
        executes their action (checked by :func:`validate`, not here).
    matching:
        Partial map from send-event id to receive-event id.
    """

    __slots__ = ("processes", "labels", "proc_order", "matching", "_cache")

    def __init__(
        self,
        processes: Sequence[str],
        labels: Mapping[int, Action],
        proc_order: Mapping[str, Sequence[int]],
        matching: Mapping[int, int],
    ):
        object.__setattr__(self, "processes", tuple(processes))
        object.__setattr__(self, "labels", dict(labels))
        object.__setattr__(
            self, "proc_order", {p: tuple(proc_order.get(p, ())) for p in self.processes}
        )
        object.__setattr__(self, "matching", dict(matching))
        object.__setattr__(self, "_cache", {})

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("Msc is immutable")

    # -- basic views ---------------------------------------------------

    @property
    def events(self) -> tuple[int, ...]:
        if "events" not in self._cache:
            self._cache["events"] = tuple(sorted(self.labels))
        return self._cache["events"]

    @property
    def send_events(self) -> tuple[int, ...]:
        return tuple(e for e in self.events if self.labels[e].is_send)

    @property
    def receive_events(self) -> tuple[int, ...]:
        return tuple(e for e in self.events if not self.labels[e].is_send)

    @property
    def matched_sends(self) -> frozenset[int]:
        return frozenset(self.matching)

    @property
    def unmatched_sends(self) -> frozenset[int]:
        return frozenset(e for e in self.send_events if e not in self.matching)

    @property
    def rmatching(self) -> dict[int, int]:
        """Receive id -> matching send id."""
        if "rmatching" not in self._cache:
            self._cache["rmatching"] = {r: s for s, r in self.matching.items()}
        return self._cache["rmatching"]

    @property
    def succ_edges(self) -> frozenset[tuple[int, int]]:
        """The process relation: immediate successor pairs on each line."""
        if "succ" not in self._cache:
            edges = set()
            for seq in self.proc_order.values():
                edges.update(zip(seq, seq[1:]))
            self._cache["succ"] = frozenset(edges)
        return self._cache["succ"]

    @property
    def msg_edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.matching.items())

    @property
    def position(self) -> dict[int, tuple[str, int]]:
        """Event id -> (process, index on that process line)."""
        if "position" not in self._cache:
            pos = {}
            for p, seq in self.proc_order.items():
                for i, e in enumerate(seq):
                    pos[e] = (p, i)
            self._cache["position"] = pos
        return self._cache["position"]

    def process_of(self, e: int) -> str:
        return self.position[e][0]

    def proc_before(self, a: int, b: int) -> bool:
        """a ->+ b: strictly earlier on the same process line."""
        pa, ia = self.position[a]
        pb, ib = self.position[b]
        return pa == pb and ia < ib

    # -- happens-before ------------------------------------------------

    @property
    def hb_reach(self) -> dict[int, frozenset[int]]:
        """For each event, the set of events reachable through -> and <|
        (reflexive)."""
        if "hb_reach" not in self._cache:
            adj: dict[int, list[int]] = {e: [] for e in self.events}
            for a, b in self.succ_edges | self.msg_edges:
                adj[a].append(b)
            order = _topo_order(self.events, adj)
            reach: dict[int, frozenset[int]] = {}
            if order is None:
                # Cyclic candidate structure: fall back to generic
                # reachability so callers that merely inspect still work.
                for e in self.events:
                    reach[e] = frozenset(_reachable_from(e, adj)) | {e}
            else:
                for e in reversed(order):
                    acc = {e}
                    for f in adj[e]:
                        acc.update(reach[f])
                    reach[e] = frozenset(acc)
            self._cache["hb_reach"] = reach
        return self._cache["hb_reach"]

    def hb(self, a: int, b: int) -> bool:
        """a <= b in the happens-before partial order (reflexive)."""
        return b in self.hb_reach[a]

    def hb_strict(self, a: int, b: int) -> bool:
        return a != b and b in self.hb_reach[a]

    # -- structural equality / isomorphism ------------------------------

    def canonical(self) -> tuple:
        """Canonical form: per-process label sequences plus the matching
        expressed through (process, position) coordinates.  Two MSCs are
        isomorphic iff their canonical forms are equal."""
        procs = tuple(sorted(p for p in self.processes if self.proc_order[p]))
        lines = tuple((p, tuple(str(self.labels[e]) for e in self.proc_order[p])) for p in procs)
        match = tuple(
            sorted((self.position[s], self.position[r]) for s, r in self.matching.items())
        )
        return (lines, match)

    def isomorphic(self, other: "Msc") -> bool:
        return self.canonical() == other.canonical()

    def __repr__(self) -> str:
        return f"Msc({len(self.events)} events on {len(self.processes)} processes)"


EMPTY_MSC = Msc((), {}, {}, {})


# -- validation ---------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    condition: str
    events: tuple[int, ...]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate(msc: Msc) -> ValidationReport:
    """Check the defining conditions of an MSC on an arbitrary candidate.

    Violations are returned as data, one entry per failed condition with
    the offending event ids:

    * ``1``   an event is missing from / duplicated on process lines, or
      sits on a line other than the one executing its action;
    * ``2a``  a matched pair whose labels do not correspond;
    * ``2b``  a receive event without exactly one matching send;
    * ``2c``  a send matched more than once (or a non-send matched);
    * ``3``   process succession plus matching has a cycle.
    """
    out: list[Violation] = []

    seen: dict[int, str] = {}
    for p, seq in msc.proc_order.items():
        for e in seq:
            if e in seen:
                out.append(Violation("1", (e,), f"event on lines {seen[e]} and {p}"))
            seen[e] = p
            if e not in msc.labels:
                out.append(Violation("1", (e,), "event on a line but unlabelled"))
            elif msc.labels[e].process != p:
                out.append(Violation("1", (e,), f"action of {msc.labels[e]} placed on line {p}"))
    for e in msc.labels:
        if e not in seen:
            out.append(Violation("1", (e,), "labelled event on no process line"))

    for s, r in msc.matching.items():
        if s not in msc.labels or r not in msc.labels:
            out.append(Violation("2a", (s, r), "matching references unknown event"))
            continue
        ls, lr = msc.labels[s], msc.labels[r]
        if not ls.is_send:
            out.append(Violation("2c", (s,), "matched event is not a send"))
        if lr.is_send:
            out.append(Violation("2a", (s, r), "matched target is not a receive"))
        elif ls.is_send and (ls.sender, ls.receiver, ls.payload) != (
            lr.sender,
            lr.receiver,
            lr.payload,
        ):
            out.append(Violation("2a", (s, r), f"labels differ: {ls} vs {lr}"))

    receive_hits: dict[int, int] = {}
    for s, r in msc.matching.items():
        receive_hits[r] = receive_hits.get(r, 0) + 1
    for e in msc.events:
        if e in msc.labels and not msc.labels[e].is_send:
            n = receive_hits.get(e, 0)
            if n != 1:
                out.append(Violation("2b", (e,), f"receive matched by {n} sends"))
    # matching is a dict, so a send cannot be matched twice; flag receives
    # hit twice (an injectivity failure) under 2b above.

    adj: dict[int, list[int]] = {e: [] for e in msc.events}
    for a, b in msc.succ_edges | msc.msg_edges:
        if a in adj and b in adj:
            adj[a].append(b)
    if _topo_order(msc.events, adj) is None:
        cyc = find_cycle(RelationGraph.of(msc.events, msc.succ_edges | msc.msg_edges))
        out.append(Violation("3", tuple(cyc or ()), "happens-before is not a partial order"))

    return ValidationReport(not out, tuple(out))


def require_valid(msc: Msc) -> None:
    report = validate(msc)
    if not report.ok:
        raise InvalidMscError("; ".join(f"({v.condition}) {v.detail}" for v in report.violations))


# -- graph helpers -------------------------------------------------------


def _topo_order(nodes: Iterable[int], adj: Mapping[int, list[int]]) -> list[int] | None:
    """Kahn topological order with ascending-id tie-break, None if cyclic."""
    nodes = sorted(nodes)
    indeg = {n: 0 for n in nodes}
    for n in nodes:
        for m in adj.get(n, ()):
            indeg[m] += 1
    import heapq

    ready = [n for n in nodes if indeg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in adj.get(n, ()):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    return order if len(order) == len(nodes) else None


def _reachable_from(start: int, adj: Mapping[int, list[int]]) -> set[int]:
    seen: set[int] = set()
    stack = list(adj.get(start, ()))
    while stack:
        n = stack.pop()
        if n not in seen:
            seen.add(n)
            stack.extend(adj.get(n, ()))
    return seen


def find_cycle(r: RelationGraph) -> list[int] | None:
    """A minimal-length cycle of `r`, as a node list with first == last,
    or None if acyclic.  BFS from every node keeps witnesses short."""
    adj: dict[int, list[int]] = {n: [] for n in r.nodes}
    for a, b in sorted(r.edges):
        adj.setdefault(a, []).append(b)
    best: list[int] | None = None
    for start in sorted(r.nodes):
        parent: dict[int, int] = {}
        frontier = [start]
        depth = 0
        found = None
        while frontier and found is None:
            depth += 1
            if best is not None and depth >= len(best):
                break
            nxt = []
            for n in frontier:
                for m in adj.get(n, ()):
                    if m == start:
                        found = n
                        break
                    if m not in parent:
                        parent[m] = n
                        nxt.append(m)
                if found is not None:
                    break
            frontier = nxt
        if found is not None:
            path = [found]
            while path[-1] != start:
                path.append(parent[path[-1]] if path[-1] in parent else start)
            path.reverse()
            cycle = path + [start]
            if best is None or len(cycle) < len(best):
                best = cycle
    return best


# -- operations ----------------------------------------------------------


def happens_before(msc: Msc) -> RelationGraph:
    """The reflexive-transitive closure of process succession and matching."""
    require_valid(msc)
    edges = set()
    for e, reach in msc.hb_reach.items():
        for f in reach:
            edges.add((e, f))
    return RelationGraph.of(msc.events, edges)


def enumerate_linearizations(
    msc: Msc, limit: int | None = None
) -> Iterator[Linearization]:
    """Yield every total order extending happens-before, in the
    deterministic order given by the ascending-id tie-break.

    Raises :class:`LimitExceededError` once `limit` linearizations have
    been produced and at least one more exists.
    """
    require_valid(msc)
    events = list(msc.events)
    adj: dict[int, list[int]] = {e: [] for e in events}
    indeg = {e: 0 for e in events}
    for a, b in msc.succ_edges | msc.msg_edges:
        adj[a].append(b)
        indeg[b] += 1

    produced = 0
    prefix: list[int] = []

    def rec() -> Iterator[Linearization]:
        nonlocal produced
        if len(prefix) == len(events):
            if limit is not None and produced >= limit:
                raise LimitExceededError(f"more than {limit} linearizations")
            produced += 1
            yield Linearization(tuple(prefix))
            return
        for e in sorted(indeg):
            if indeg[e] == 0:
                del indeg[e]
                for f in adj[e]:
                    indeg[f] -= 1
                prefix.append(e)
                yield from rec()
                prefix.pop()
                for f in adj[e]:
                    indeg[f] += 1
                indeg[e] = 0

    return rec()


def extends_hb(msc: Msc, order: Sequence[int]) -> bool:
    """True if `order` is a linearization of the MSC (covers every event
    once and extends happens-before)."""
    if sorted(order) != list(msc.events):
        return False
    pos = {e: i for i, e in enumerate(order)}
    return all(pos[a] < pos[b] for a, b in msc.succ_edges | msc.msg_edges)


def concatenate(m1: Msc, m2: Msc) -> Msc:
    """Vertical composition: disjoint union with each process line of m2
    appended after the corresponding line of m1.  Events of m2 are
    renumbered past those of m1."""
    require_valid(m1)
    require_valid(m2)
    offset = (max(m1.events) + 1) if m1.events else 0
    shift = {e: e + offset for e in m2.events}
    processes = list(m1.processes) + [p for p in m2.processes if p not in m1.processes]
    labels = dict(m1.labels)
    labels.update({shift[e]: m2.labels[e] for e in m2.events})
    proc_order = {}
    for p in processes:
        proc_order[p] = tuple(m1.proc_order.get(p, ())) + tuple(
            shift[e] for e in m2.proc_order.get(p, ())
        )
    matching = dict(m1.matching)
    matching.update({shift[s]: shift[r] for s, r in m2.matching.items()})
    out = Msc(processes, labels, proc_order, matching)
    require_valid(out)
    return out


def prefix(msc: Msc, keep: Iterable[int], closure: str = "hb") -> Msc:
    """Restrict the MSC to `keep`, provided `keep` is downward closed
    under the chosen relation: ``hb`` for happens-before, ``onen`` for
    the sender-side schedulability order, ``nn`` for the global-order
    dependency relation.

    Raises :class:`NotDownwardClosedError` with a witness pair otherwise.
    """
    require_valid(msc)
    keep = frozenset(keep)
    unknown = keep - set(msc.events)
    if unknown:
        raise MscError(f"prefix keeps unknown events: {sorted(unknown)}")

    if closure == "hb":
        rel = happens_before(msc).edges
    elif closure == "onen":
        from . import relations

        rel = relations.onen_partial(msc).edges
    elif closure == "nn":
        from . import relations

        rel = relations.nn_bowtie(msc).base.edges
    else:
        raise ValueError(f"unknown closure: {closure!r}")

    for a, b in sorted(rel):
        if b in keep and a not in keep and a != b:
            raise NotDownwardClosedError((a, b))

    labels = {e: msc.labels[e] for e in keep}
    proc_order = {p: tuple(e for e in seq if e in keep) for p, seq in msc.proc_order.items()}
    matching = {s: r for s, r in msc.matching.items() if s in keep and r in keep}
    return Msc(msc.processes, labels, proc_order, matching)


def hb_prefixes(msc: Msc) -> Iterator[frozenset[int]]:
    """All happens-before downward-closed event sets, smallest first."""
    return _downward_closed_sets(msc.events, happens_before(msc).edges)


def _downward_closed_sets(
    events: Sequence[int], rel: frozenset[tuple[int, int]]
) -> Iterator[frozenset[int]]:
    preds: dict[int, frozenset[int]] = {
        e: frozenset(a for (a, b) in rel if b == e and a != e) for e in events
    }
    seen: set[frozenset[int]] = set()
    frontier = [frozenset()]
    seen.add(frozenset())
    while frontier:
        nxt = []
        for cur in frontier:
            yield cur
            for e in events:
                if e not in cur and preds[e] <= cur:
                    ext = cur | {e}
                    if ext not in seen:
                        seen.add(ext)
                        nxt.append(ext)
        frontier = nxt


def to_dot(msc: Msc) -> str:
    """Deterministic DOT rendering: solid arrowless edges along process
    lines, arrowed edges for messages, and a dashed stub arrow out of
    every unmatched send."""
    require_valid(msc)
    lines = ["digraph msc {", "  rankdir=TB;"]
    for e in msc.events:
        lines.append(f'  e{e} [label="{msc.labels[e]}"];')
    for a, b in sorted(msc.succ_edges):
        lines.append(f"  e{a} -> e{b} [arrowhead=none];")
    for s, r in sorted(msc.msg_edges):
        lines.append(f"  e{s} -> e{r};")
    for s in sorted(msc.unmatched_sends):
        lines.append(f'  u{s} [shape=point, label=""];')
        lines.append(f"  e{s} -> u{s} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
