"""
Special treewidth of an MSC via the mark-disconnect-split game.

The MSC is taken as an undirected graph whose vertices are events and
whose edges are process succession and message matching.  One player
marks up to k+1 events, removes edges between marked endpoints so the
fragment falls apart, and splits it; the opponent picks the part to
continue on.  Width at most k means the marking player can always reach
fully-marked fragments without ever exceeding k+1 marks in a visited
position.

Fragments reached during the search are canonicalized as (surviving
events, surviving edges, marked set) and memoized; disconnected
positions decompose into independent per-component subgames, which keeps
the search tractable for the desk-scale inputs this targets (roughly 20
events).  The memo table lives inside one evaluation; distinct
evaluations can run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .core import Msc, MscError, require_valid

DEFAULT_GAME_BOUND = 20


class GameSizeError(MscError):
    pass


Fragment = tuple[frozenset[int], frozenset[frozenset[int]], frozenset[int]]


def _msc_graph(msc: Msc) -> tuple[frozenset[int], frozenset[frozenset[int]]]:
    edges = {frozenset((a, b)) for a, b in msc.succ_edges | msc.msg_edges}
    return frozenset(msc.events), frozenset(edges)


def _components(
    nodes: frozenset[int], edges: frozenset[frozenset[int]]
) -> list[frozenset[int]]:
    adj: dict[int, set[int]] = {n: set() for n in nodes}
    for e in edges:
        a, b = tuple(e)
        adj[a].add(b)
        adj[b].add(a)
    seen: set[int] = set()
    comps = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            n = stack.pop()
            for m in adj[n]:
                if m not in seen:
                    seen.add(m)
                    comp.add(m)
                    stack.append(m)
        comps.append(frozenset(comp))
    return comps


@dataclass
class _Move:
    marked: frozenset[int]
    parts: tuple[Fragment, ...]


class _Solver:
    def __init__(self, k: int):
        self.budget = k + 1
        self.memo: dict[Fragment, bool] = {}
        self.plan: dict[Fragment, _Move] = {}

    def win(self, nodes: frozenset[int], edges: frozenset[frozenset[int]], marked: frozenset[int]) -> bool:
        # Disconnected fragments are equivalent to playing each component
        # separately; splitting them off costs no marks.
        comps = _components(nodes, edges)
        if len(comps) > 1:
            return all(
                self.win(c, frozenset(e for e in edges if e <= c), marked & c)
                for c in comps
            )
        return self._win_connected(nodes, edges, marked)

    def _win_connected(
        self, nodes: frozenset[int], edges: frozenset[frozenset[int]], marked: frozenset[int]
    ) -> bool:
        if marked == nodes:
            return True
        key: Fragment = (nodes, edges, marked)
        if key in self.memo:
            return self.memo[key]
        self.memo[key] = False  # cycle guard; positions only shrink, so safe
        result = self._search(nodes, edges, marked, key)
        self.memo[key] = result
        return result

    def _search(
        self,
        nodes: frozenset[int],
        edges: frozenset[frozenset[int]],
        marked: frozenset[int],
        key: Fragment,
    ) -> bool:
        free = self.budget - len(marked)
        if free < 0:
            return False
        unmarked = sorted(nodes - marked)
        if len(unmarked) <= free:
            # mark everything at once: terminal position
            self.plan[key] = _Move(nodes, ())
            return True
        # try extending the marking, smallest extensions first
        for extra in range(free + 1):
            for chosen in combinations(unmarked, extra):
                new_marked = marked | set(chosen)
                removable = {e for e in edges if e <= new_marked}
                if not removable:
                    continue
                remaining = edges - removable
                comps = _components(nodes, remaining)
                if len(comps) < 2:
                    continue
                parts = tuple(
                    (c, frozenset(e for e in remaining if e <= c), new_marked & c)
                    for c in comps
                )
                if all(self.win(*part) for part in parts):
                    self.plan[key] = _Move(new_marked, parts)
                    return True
        return False


def stw_at_most(msc: Msc, k: int, game_bound: int = DEFAULT_GAME_BOUND) -> bool:
    """Decide whether the marking player wins the width-k decomposition
    game on the MSC."""
    require_valid(msc)
    if len(msc.events) > game_bound:
        raise GameSizeError(f"{len(msc.events)} events exceed the game bound {game_bound}")
    if k < 0:
        return not msc.events
    nodes, edges = _msc_graph(msc)
    return _Solver(k).win(nodes, edges, frozenset())


def special_treewidth(
    msc: Msc, max_k: int, game_bound: int = DEFAULT_GAME_BOUND
) -> int | None:
    """The least k <= max_k with :func:`stw_at_most`, or None beyond it."""
    for k in range(max_k + 1):
        if stw_at_most(msc, k, game_bound):
            return k
    return None


def strategy_transcript(msc: Msc, k: int, game_bound: int = DEFAULT_GAME_BOUND) -> str | None:
    """A textual trace of one winning strategy, or None if k is too small."""
    require_valid(msc)
    if len(msc.events) > game_bound:
        raise GameSizeError(f"{len(msc.events)} events exceed the game bound {game_bound}")
    nodes, edges = _msc_graph(msc)
    solver = _Solver(k)
    if not solver.win(nodes, edges, frozenset()):
        return None

    lines: list[str] = []

    def describe(nodes: frozenset[int], edges: frozenset[frozenset[int]], marked: frozenset[int], depth: int) -> None:
        pad = "  " * depth
        comps = _components(nodes, edges)
        if len(comps) > 1:
            lines.append(f"{pad}fragment {sorted(nodes)} is disconnected; play components separately")
            for c in comps:
                describe(c, frozenset(e for e in edges if e <= c), marked & c, depth + 1)
            return
        if marked == nodes:
            lines.append(f"{pad}fragment {sorted(nodes)} fully marked: done")
            return
        move = solver.plan[(nodes, edges, marked)]
        newly = sorted(move.marked - marked)
        if not move.parts:
            lines.append(f"{pad}mark {newly}: all of {sorted(nodes)} marked, done")
            return
        lines.append(
            f"{pad}mark {newly} (marked now {sorted(move.marked)}), remove marked-marked edges, split:"
        )
        for part_nodes, part_edges, part_marked in move.parts:
            lines.append(f"{pad}  part {sorted(part_nodes)}")
            describe(part_nodes, part_edges, part_marked, depth + 2)

    lines.append(f"winning strategy with at most {k + 1} marks:")
    describe(nodes, edges, frozenset(), 1)
    return "\n".join(lines) + "\n"
