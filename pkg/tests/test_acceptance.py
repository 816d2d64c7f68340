"""
Acceptance gate: every criterion printed as its own pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import random
import sys
import time
from contextlib import contextmanager

import pytest

from conftest import random_msc
from msckit import relations
from msckit.bounded import (
    BOUNDED_MODELS,
    DecompositionFailure,
    ExchangeDecomposition,
    decompose_exchanges,
    exists_k_bounded,
    forall_k_bounded,
    is_k_bounded_linearization,
    is_weakly_k_synchronous,
    is_weakly_synchronous,
    minimal_exists_k,
)
from msckit.classify import (
    MODELS,
    check_linearization,
    classify,
    format_linearization,
    membership,
    nn_linearize,
    oracle_membership,
)
from msckit.core import _downward_closed_sets, enumerate_linearizations, happens_before, prefix, send, recv
from msckit.corpus import EXAMPLES, example
from msckit.mso import builtin, evaluate, parse_formula
from msckit.network import (
    KINDS,
    classify_execution,
    linearization_to_execution,
    network_for,
    run_execution,
)
from msckit.stw import special_treewidth, stw_at_most


@contextmanager
def criterion(number: int, label: str):
    try:
        yield
    except BaseException:
        print(f"criterion {number:2d} FAIL  {label}", file=sys.stderr)
        raise
    print(f"criterion {number:2d} PASS  {label}")


EXPECTED_CLASSES = {
    "relay": {"asy", "p2p", "co", "mb", "onen", "nn", "rsc"},
    "crossing": {"asy"},
    "overtake": {"asy", "p2p"},
    "two_targets": {"asy", "p2p", "co", "mb", "onen", "nn"},
    "roundtrip": {"asy", "p2p", "co", "mb", "onen", "nn", "rsc"},
    "blocked": {"asy"},
    "lost_elsewhere": {"asy", "p2p", "co", "mb"},
    "mailbox_cross": {"asy", "p2p", "co"},
    "late_receive": {"asy", "p2p", "co", "mb", "onen"},
    "handshake": {"asy", "p2p", "co", "mb", "onen", "nn"},
    "staggered": {"asy", "p2p", "co", "mb", "onen", "nn"},
    "pipeline": {"asy", "p2p", "co", "mb", "onen", "nn"},
    "producer": {"asy", "p2p", "co", "mb", "onen", "nn"},
    "train": {"asy", "p2p", "co", "mb", "onen", "nn", "rsc"},
    "fanout": {"asy", "p2p", "co", "mb", "onen", "nn", "rsc"},
    "fanout_lost": {"asy", "p2p", "co", "mb"},
}


def _population():
    rng = random.Random(20260810)
    sample = [random_msc(rng, max_events=8) for _ in range(1000)]
    corpus = [example(name) for name in EXAMPLES if len(example(name).events) <= 10]
    return sample + corpus


def test_criterion_1_example_corpus():
    with criterion(1, "example corpus classifies exactly as expected (< 1 s)"):
        start = time.monotonic()
        for name in EXAMPLES:
            got = set(classify(example(name), with_witnesses=False).members)
            assert got == EXPECTED_CLASSES[name], (name, got)
        elapsed = time.monotonic() - start
        assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_criterion_2_algorithm_golden():
    with criterion(2, "dependency-graph linearization of the pipeline example matches the golden schedule"):
        m = example("pipeline")
        lin = nn_linearize(m)
        assert format_linearization(m, lin) == (
            "!m5 !m1 !m2 !m3 ?m5 ?m1 ?m2 !m4 !m6 ?m3 ?m4"
        )
        assert check_linearization(m, lin, "nn")


def test_criterion_3_oracle_equivalence():
    with criterion(3, "relational classifiers match enumeration oracles, 1000 random + corpus (< 60 s)"):
        start = time.monotonic()
        disagreements = 0
        for m in _population():
            report = classify(m, with_witnesses=False)
            for model in ("mb", "onen", "nn", "rsc"):
                if report.verdicts[model] != oracle_membership(m, model):
                    disagreements += 1
        assert disagreements == 0
        elapsed = time.monotonic() - start
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_4_hierarchy():
    with criterion(4, "verdicts downward closed, inclusions strict, mb = onen without unmatched"):
        chain = list(MODELS)
        no_unmatched_seen = 0
        for m in _population():
            report = classify(m, with_witnesses=False)
            for smaller, larger in zip(chain[1:], chain):
                assert not report.verdicts[smaller] or report.verdicts[larger]
            if not m.unmatched_sends:
                no_unmatched_seen += 1
                assert report.verdicts["mb"] == report.verdicts["onen"]
        assert no_unmatched_seen > 100
        strict = {
            ("asy", "p2p"): "crossing",
            ("p2p", "co"): "overtake",
            ("co", "mb"): "mailbox_cross",
            ("mb", "onen"): "lost_elsewhere",
            ("onen", "nn"): "late_receive",
            ("nn", "rsc"): "handshake",
        }
        for (larger, smaller), name in strict.items():
            report = classify(example(name), with_witnesses=False)
            assert report.verdicts[larger] and not report.verdicts[smaller]


def test_criterion_5_execution_correspondence():
    with criterion(5, "queue-network acceptance matches classification; worked executions agree"):
        for name in EXAMPLES:
            m = example(name)
            if len(m.events) > 10:
                continue
            lins = list(enumerate_linearizations(m))
            for kind in KINDS:
                net = network_for(kind, m.processes)
                runs = any(
                    run_execution(net, linearization_to_execution(m, lin)).ok
                    for lin in lins
                )
                assert runs == membership(m, kind)[0], (name, kind)
        ex1 = [send("p", "q", "m1"), send("q", "r", "m2"), recv("q", "r", "m2"), recv("p", "q", "m1")]
        ex2 = [send("p", "q", "m1"), send("r", "q", "m2"), recv("r", "q", "m2")]
        assert classify_execution(ex1, ("p", "q", "r")) == {"p2p", "mb", "onen"}
        assert classify_execution(ex2, ("p", "q", "r")) == {"p2p", "onen"}


def test_criterion_6_boundedness():
    with criterion(6, "k-bounded window relation, worked schedules, and enumeration agreement"):
        train = example("train")
        assert relations.relb(train, 2).edges == {(3, 2)}  # ?m1 before !m3
        assert is_k_bounded_linearization(train, (0, 1, 3, 2, 4, 5), 2)
        assert not is_k_bounded_linearization(train, (0, 1, 2, 3, 4, 5), 2)
        assert exists_k_bounded(example("producer"), 1, "p2p")

        rng = random.Random(606)
        pool = [random_msc(rng, max_events=9) for _ in range(300)]
        pool += [example(n) for n in EXAMPLES if len(example(n).events) <= 9]
        for m in pool:
            lins = list(enumerate_linearizations(m))
            for model in BOUNDED_MODELS:
                if not membership(m, model)[0]:
                    continue
                witnesses = [l for l in lins if check_linearization(m, l, model)]
                for k in (0, 1, 2):
                    assert exists_k_bounded(m, k, model) == any(
                        is_k_bounded_linearization(m, l, k) for l in witnesses
                    ), (model, k)
                    assert forall_k_bounded(m, k, model) == all(
                        is_k_bounded_linearization(m, l, k) for l in witnesses
                    ), (model, k)


def test_criterion_7_weak_synchronizability():
    with criterion(7, "staggered splits into three 1-exchanges; producer admits no factorization"):
        dec = decompose_exchanges(example("staggered"), 1)
        assert isinstance(dec, ExchangeDecomposition) and len(dec) == 3
        assert is_weakly_k_synchronous(example("staggered"), 1)
        assert isinstance(decompose_exchanges(example("producer")), DecompositionFailure)
        assert not is_weakly_synchronous(example("producer"))


def test_criterion_8_special_treewidth():
    with criterion(8, "decomposition game: overtake within width 3; width <= k|P|^2 for bounded corpus (< 120 s)"):
        start = time.monotonic()
        assert stw_at_most(example("overtake"), 3)
        for name in EXAMPLES:
            m = example(name)
            if len(m.events) > 14 or not m.events:
                continue
            if not membership(m, "p2p")[0]:
                continue
            k = minimal_exists_k(m, "p2p", cap=6)
            assert k is not None
            cap = k * len(m.processes) ** 2
            assert stw_at_most(m, cap), (name, k, cap)
        elapsed = time.monotonic() - start
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_9_mso_cross_validation():
    with criterion(9, "defining formulas match the classifiers; closure modes agree"):
        for name in EXAMPLES:
            m = example(name)
            if len(m.events) > 12:
                continue
            report = classify(m, with_witnesses=False)
            for model in MODELS[1:]:
                assert evaluate(m, builtin(model)) == report.verdicts[model], (name, model)
        closure_forms = [
            "A x. A y. (x ->+ y) => (x < y)",
            "E x. E y. mb+(x, y)",
            "E x. mbp(x, x)",
            "E x. onenp(x, x)",
        ]
        for name in EXAMPLES:
            m = example(name)
            if len(m.events) > 8:
                continue
            for text in closure_forms:
                f = parse_formula(text)
                assert evaluate(m, f) == evaluate(m, f, closure_mode="subset", so_limit=8)


def test_criterion_10_prefix_closure():
    with criterion(10, "prefix closure per model on 500 random MSCs; the lost-fanout prefix drops out of onen/nn"):
        rng = random.Random(1010)
        for _ in range(500):
            m = random_msc(rng, max_events=7)
            report = classify(m, with_witnesses=False)
            hb_edges = happens_before(m).edges
            for keep in _downward_closed_sets(m.events, hb_edges):
                part = prefix(m, keep, "hb")
                for model in ("p2p", "co", "mb"):
                    if report.verdicts[model]:
                        assert membership(part, model)[0], (model, keep)
            if report.verdicts["nn"]:
                bow = relations.nn_bowtie(m).edges
                for keep in _downward_closed_sets(m.events, bow):
                    part = prefix(m, keep, "nn")
                    assert membership(part, "nn")[0], keep
        lost = example("fanout_lost")
        report = classify(lost, with_witnesses=False)
        assert not report.verdicts["onen"] and not report.verdicts["nn"]
