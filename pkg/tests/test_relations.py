import random

import pytest

from conftest import random_msc
from msckit import relations
from msckit.core import Msc, RelationGraph, happens_before, send, recv
from msckit.corpus import example


def test_transitive_closure_chain():
    r = RelationGraph.of([1, 2, 3], [(1, 2), (2, 3)])
    closed = relations.transitive_closure(r)
    assert (1, 3) in closed.edges


def test_transitive_closure_idempotent():
    rng = random.Random(1)
    for _ in range(30):
        nodes = range(6)
        edges = {(rng.randrange(6), rng.randrange(6)) for _ in range(8)}
        once = relations.transitive_closure(RelationGraph.of(nodes, edges))
        twice = relations.transitive_closure(once)
        assert once.edges == twice.edges


def test_closure_of_generators_is_happens_before():
    rng = random.Random(2)
    for _ in range(40):
        m = random_msc(rng, max_events=7)
        if not m.events:
            continue
        from msckit.core import validate

        if not validate(m).ok:
            continue
        closed = relations.transitive_closure(
            RelationGraph.of(m.events, m.succ_edges | m.msg_edges), reflexive=True
        )
        assert closed.edges == happens_before(m).edges


def test_is_acyclic_empty():
    ok, cycle = relations.is_acyclic(RelationGraph.of([], []))
    assert ok and cycle is None


def test_is_acyclic_hb_strict():
    m = example("pipeline")
    strict = {(a, b) for a, b in happens_before(m).edges if a != b}
    ok, _ = relations.is_acyclic(RelationGraph.of(m.events, strict))
    assert ok


def test_mb_rel_mailbox_cross():
    # !4 and !1 target s, !2 and !3 target q; receives order them
    m = example("mailbox_cross")
    assert relations.mb_rel(m).edges == {(5, 0), (1, 4)}


def test_mb_cycle_mailbox_cross():
    ok, cycle = relations.is_acyclic(relations.mb_generators(example("mailbox_cross")))
    assert not ok
    assert cycle == [0, 1, 4, 5, 0]  # !1 -> !2 mb !3 -> !4 mb !1


def test_mb_rel_no_common_receiver():
    m = example("lost_elsewhere")
    assert relations.mb_rel(m).edges == frozenset()


def test_mb_rel_blocked_matched_beats_unmatched():
    m = example("blocked")
    assert relations.mb_rel(m).edges == {(1, 0)}


def test_mb_partial_two_targets_acyclic():
    ok, _ = relations.is_acyclic(relations.mb_generators(example("two_targets")))
    assert ok


def test_mb_partial_empty_msc():
    from msckit.core import EMPTY_MSC

    assert relations.mb_partial(EMPTY_MSC).edges == frozenset()


def test_onen_cycle_overtake():
    ok, _ = relations.is_acyclic(relations.onen_generators(example("overtake")))
    assert not ok


def test_onen_two_targets_acyclic_with_witness():
    m = example("two_targets")
    ok, _ = relations.is_acyclic(relations.onen_generators(m))
    assert ok
    from msckit.classify import check_linearization

    # !1 !2 !3 ?1 ?2 ?3 from the text
    assert check_linearization(m, (0, 1, 4, 5, 2, 3), "onen")


def test_onen_rel_empty_when_single_sends():
    m = example("relay")  # every process sends at most one message
    assert relations.onen_rel(m).edges == frozenset()


def test_bowtie_pipeline_acyclic():
    ok, _ = relations.is_acyclic(relations.nn_bowtie(example("pipeline")).base)
    assert ok


def test_bowtie_late_receive_cyclic():
    ok, cycle = relations.is_acyclic(relations.nn_bowtie(example("late_receive")).base)
    assert not ok and cycle


def test_bowtie_single_message():
    m = Msc(("p", "q"), {0: send("p", "q", "m"), 1: recv("p", "q", "m")}, {"p": (0,), "q": (1,)}, {0: 1})
    assert relations.nn_bowtie(m).edges == {(0, 1)}


def test_relb_train_k2():
    assert relations.relb(example("train"), 2).edges == {(3, 2)}


def test_relb_few_sends_empty():
    assert relations.relb(example("relay"), 2).edges == frozenset()


def test_relb_producer_k1_channel_windows():
    m = example("producer")
    got = relations.relb(m, 1).edges
    sends = relations.channel_sends(m)
    recvs = relations.channel_receives(m)
    expected = set()
    for ch, rs in recvs.items():
        for i, r in enumerate(rs):
            if i + 1 < len(sends[ch]):
                expected.add((r, sends[ch][i + 1]))
    assert got == expected and len(got) == 5


def test_relb_requires_p2p():
    with pytest.raises(relations.NotP2pError):
        relations.relb(example("crossing"), 1)


def test_relb_asy_train_k2():
    assert relations.relb_asy(example("train"), 2).edges == {(3, 2)}


def test_relb_asy_all_unmatched_empty():
    m = Msc(
        ("p", "q"),
        {0: send("p", "q", "a"), 1: send("p", "q", "b")},
        {"p": (0, 1)},
        {},
    )
    assert relations.relb_asy(m, 1).edges == frozenset()


def test_relb_asy_matches_relb_verdicts_on_random_p2p():
    # acyclicity of hb + window agrees between the FIFO-indexed and the
    # order-free constructions on p2p instances
    from msckit.classify import is_p2p

    rng = random.Random(3)
    checked = 0
    while checked < 60:
        m = random_msc(rng, max_events=6)
        if not m.events or not is_p2p(m)[0]:
            continue
        checked += 1
        hb = {(a, b) for a, b in happens_before(m).edges if a != b}
        for k in (1, 2, 3):
            a = relations.is_acyclic(
                RelationGraph.of(m.events, hb | relations.relb(m, k).edges)
            )[0]
            b = relations.is_acyclic(
                RelationGraph.of(m.events, hb | relations.relb_asy(m, k).edges)
            )[0]
            assert a == b


def test_hb_contained_in_partials():
    rng = random.Random(4)
    for _ in range(40):
        m = random_msc(rng, max_events=6)
        hb_strict = {(a, b) for a, b in happens_before(m).edges if a != b}
        mbp = relations.mb_partial(m).edges
        onenp = relations.onen_partial(m).edges
        nn = relations.nn_rel(m).edges
        assert hb_strict <= mbp and hb_strict <= onenp
        assert mbp <= nn and onenp <= nn


def test_receive_bowtie_implies_send_bowtie():
    rng = random.Random(5)
    for _ in range(60):
        m = random_msc(rng, max_events=7)
        bow = relations.nn_bowtie(m).edges
        for s1, r1 in m.matching.items():
            for s2, r2 in m.matching.items():
                if s1 != s2 and (r1, r2) in bow:
                    assert (s1, s2) in bow


def bowtie_by_hand(msc):
    """Independent reconstruction of the dependency relation: closure of
    all four generator families, then the three mirrored/ordering rules
    added pointwise under the not-already-related guard."""
    events = list(msc.events)
    base = set(msc.succ_edges | msc.msg_edges)
    for s1 in msc.send_events:
        for s2 in msc.send_events:
            if s1 == s2:
                continue
            a1, a2 = msc.labels[s1], msc.labels[s2]
            m1, m2 = s1 in msc.matching, s2 in msc.matching
            if a1.receiver == a2.receiver:
                if m1 and not m2:
                    base.add((s1, s2))
                if m1 and m2 and msc.proc_before(msc.matching[s1], msc.matching[s2]):
                    base.add((s1, s2))
            if a1.sender == a2.sender:
                if m1 and not m2:
                    base.add((s1, s2))
                if m1 and m2 and msc.proc_before(s1, s2):
                    base.add((msc.matching[s1], msc.matching[s2]))
    # reachability closure
    closed = set()
    adj = {e: set() for e in events}
    for a, b in base:
        adj[a].add(b)
    for start in events:
        seen, stack = set(), list(adj[start])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(adj[n])
        closed.update((start, e) for e in seen)
    out = set(closed)
    for s1, r1 in msc.matching.items():
        for s2, r2 in msc.matching.items():
            if s1 == s2:
                continue
            if (s1, s2) in closed and (r1, r2) not in closed:
                out.add((r1, r2))
            if (r1, r2) in closed and (s1, s2) not in closed:
                out.add((s1, s2))
        for u in msc.unmatched_sends:
            if (s1, u) not in closed:
                out.add((s1, u))
    return out


def test_bowtie_matches_independent_reconstruction():
    rng = random.Random(7)
    cases = [random_msc(rng, max_events=7) for _ in range(120)]
    cases += [example(n) for n in ("pipeline", "late_receive", "handshake", "staggered")]
    for m in cases:
        assert set(relations.nn_bowtie(m).edges) == bowtie_by_hand(m)


def test_no_unmatched_mb_iff_onen():
    rng = random.Random(6)
    for _ in range(120):
        m = random_msc(rng, max_events=7)
        if m.unmatched_sends:
            continue
        a = relations.is_acyclic(relations.mb_generators(m))[0]
        b = relations.is_acyclic(relations.onen_generators(m))[0]
        assert a == b


def test_relation_dot_and_edge_list():
    m = example("blocked")
    rel = relations.mb_rel(m)
    assert "e1 -> e0" in relations.to_dot(rel.base, m)
    assert rel.base.to_edge_list() == "1 0"
