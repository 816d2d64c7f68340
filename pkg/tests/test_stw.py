import random
from itertools import combinations

import pytest

from conftest import channel_chain, random_msc
from msckit.core import EMPTY_MSC, prefix, hb_prefixes, validate
from msckit.corpus import example
from msckit.stw import GameSizeError, special_treewidth, strategy_transcript, stw_at_most


def reference_stw_at_most(msc, k):
    """Literal rules, no shortcuts: try every marking, every removal set
    of marked-marked edges, and every bipartition of the components."""
    budget = k + 1
    edges0 = frozenset(frozenset(e) for e in msc.succ_edges | msc.msg_edges)
    memo = {}

    def components(nodes, edges):
        adj = {n: set() for n in nodes}
        for e in edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        seen, comps = set(), []
        for s in sorted(nodes):
            if s in seen:
                continue
            comp, stack = {s}, [s]
            seen.add(s)
            while stack:
                n = stack.pop()
                for m in adj[n]:
                    if m not in seen:
                        seen.add(m)
                        comp.add(m)
                        stack.append(m)
            comps.append(frozenset(comp))
        return comps

    def win(nodes, edges, marked):
        if marked == nodes:
            return True
        key = (nodes, edges, marked)
        if key in memo:
            return memo[key]
        memo[key] = False
        unmarked = sorted(nodes - marked)
        result = False
        for extra in range(budget - len(marked) + 1):
            if result:
                break
            for chosen in combinations(unmarked, extra):
                mk = marked | set(chosen)
                if mk == nodes:
                    result = True
                    break
                removable = sorted(e for e in edges if e <= mk)
                for drop in range(len(removable) + 1):
                    if result:
                        break
                    for fs in combinations(removable, drop):
                        left = edges - set(fs)
                        comps = components(nodes, left)
                        if len(comps) < 2:
                            continue
                        for cut in range(1, len(comps)):
                            for half in combinations(range(len(comps)), cut):
                                a_nodes = frozenset().union(*(comps[i] for i in half))
                                b_nodes = nodes - a_nodes
                                ok = win(
                                    a_nodes,
                                    frozenset(e for e in left if e <= a_nodes),
                                    mk & a_nodes,
                                ) and win(
                                    b_nodes,
                                    frozenset(e for e in left if e <= b_nodes),
                                    mk & b_nodes,
                                )
                                if ok:
                                    result = True
                                    break
                            if result:
                                break
                        if result:
                            break
        memo[key] = result
        return result

    if k < 0:
        return not msc.events
    return win(frozenset(msc.events), edges0, frozenset())


def test_overtake_three_winning():
    assert stw_at_most(example("overtake"), 3)


def test_empty_width_zero():
    assert special_treewidth(EMPTY_MSC, 3) == 0


def test_single_message_width_one():
    m = channel_chain(1)
    assert not stw_at_most(m, 0)
    assert stw_at_most(m, 1)
    assert special_treewidth(m, 3) == 1


@pytest.mark.parametrize("n", [2, 4, 6])
def test_channel_chains_within_three(n):
    assert stw_at_most(channel_chain(n), 3)


def test_monotone_in_k():
    for name in ("relay", "overtake", "two_targets", "handshake"):
        m = example(name)
        width = special_treewidth(m, 6)
        assert width is not None
        for k in range(width, 5):
            assert stw_at_most(m, k)
        for k in range(width):
            assert not stw_at_most(m, k)


def test_game_bound():
    with pytest.raises(GameSizeError):
        stw_at_most(example("producer"), 2, game_bound=10)


def test_strategy_transcript():
    transcript = strategy_transcript(example("overtake"), 3)
    assert transcript is not None
    assert "mark" in transcript and "split" in transcript
    assert strategy_transcript(channel_chain(1), 0) is None


def test_solver_matches_literal_reference():
    rng = random.Random(42)
    cases = [random_msc(rng, max_events=5) for _ in range(25)]
    cases += [example("handshake"), example("blocked"), example("fanout"), channel_chain(2)]
    for m in cases:
        for k in (0, 1, 2, 3):
            assert stw_at_most(m, k) == reference_stw_at_most(m, k), (m.canonical(), k)


def test_hb_prefixes_never_wider():
    # empirical: restriction cannot increase the width
    rng = random.Random(41)
    for _ in range(25):
        m = random_msc(rng, max_events=6)
        whole = special_treewidth(m, 6)
        assert whole is not None
        for keep in hb_prefixes(m):
            if len(keep) in (0, len(m.events)):
                continue
            part = prefix(m, keep, "hb")
            assert validate(part).ok
            w = special_treewidth(part, 6)
            assert w is not None and w <= whole
