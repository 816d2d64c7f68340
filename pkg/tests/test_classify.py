import random

import pytest

from conftest import random_msc
from msckit.classify import (
    MODELS,
    ClassReport,
    NotInModelError,
    check_linearization,
    classify,
    find_crown,
    format_linearization,
    is_co,
    is_mb,
    is_nn,
    is_onen,
    is_p2p,
    is_rsc,
    linearize,
    membership,
    nn_linearize,
    oracle_membership,
)
from msckit.core import EMPTY_MSC, Msc, send, recv
from msckit.corpus import EXAMPLES, example

# expected class set per corpus example, frozen from the enumeration oracle
EXPECTED = {
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


@pytest.mark.parametrize("name", EXAMPLES)
def test_corpus_classification(name):
    assert set(classify(example(name), with_witnesses=False).members) == EXPECTED[name]


def test_p2p_verdicts():
    assert not is_p2p(example("crossing"))[0]
    assert is_p2p(example("overtake"))[0]
    ok, pair = is_p2p(example("blocked"))
    assert not ok and pair == (0, 1)  # unmatched before matched on (p,q)


def test_co_verdicts():
    ok, pair = is_co(example("overtake"))
    assert not ok and pair == (0, 6)  # !m1 happens before !m3, receives flipped
    assert is_co(example("two_targets"))[0]
    one = Msc(("p", "q"), {0: send("p", "q", "m"), 1: recv("p", "q", "m")}, {"p": (0,), "q": (1,)}, {0: 1})
    assert is_co(one)[0]


def test_acyclicity_verdicts():
    assert not is_mb(example("mailbox_cross"))[0] and is_co(example("mailbox_cross"))[0]
    assert is_onen(example("late_receive"))[0] and not is_nn(example("late_receive"))[0]
    m = example("two_targets")
    assert is_mb(m)[0] and is_onen(m)[0] and is_nn(m)[0]


def test_crowns():
    crown = find_crown(example("handshake"))
    assert crown is not None and len(crown) == 2
    assert not is_rsc(example("handshake"))[0]
    assert is_rsc(example("roundtrip"))[0]
    assert find_crown(example("roundtrip")) is None
    # any unmatched send rules rsc out
    ok, witness = is_rsc(example("lost_elsewhere"))
    assert not ok and witness == (0,)


def test_nn_linearize_pipeline_golden():
    m = example("pipeline")
    lin = nn_linearize(m)
    assert format_linearization(m, lin) == (
        "!m5 !m1 !m2 !m3 ?m5 ?m1 ?m2 !m4 !m6 ?m3 ?m4"
    )
    assert check_linearization(m, lin, "nn")


def test_nn_linearize_empty():
    assert nn_linearize(EMPTY_MSC).order == ()


def test_nn_linearize_cyclic_dependency_errors():
    from msckit.classify import NnAlgorithmError

    with pytest.raises(NnAlgorithmError):
        nn_linearize(example("mailbox_cross"))


def test_nn_linearize_handshake():
    # the matched-send steps drain both sends before any receive; the
    # ascending-id tie-break fixes the order
    m = example("handshake")
    assert nn_linearize(m).order == (0, 2, 3, 1)  # !m1 !m2 ?m1 ?m2


def test_nn_linearize_random_members():
    rng = random.Random(11)
    checked = 0
    while checked < 80:
        m = random_msc(rng, max_events=7)
        if not is_nn(m)[0]:
            continue
        checked += 1
        assert check_linearization(m, nn_linearize(m), "nn")


def test_linearize_examples():
    two = example("two_targets")
    assert check_linearization(two, linearize(two, "mb"), "mb")
    rt = example("roundtrip")
    assert linearize(rt, "rsc").order == (0, 2, 3, 5, 4, 1)  # !1 ?1 !2 ?2 !3 ?3
    late = example("late_receive")
    assert check_linearization(late, linearize(late, "onen"), "onen")
    # a hand-picked alternative schedule is a valid onen witness too
    assert check_linearization(late, (6, 0, 7, 1, 2, 3, 4, 5), "onen")


def test_linearize_not_member():
    with pytest.raises(NotInModelError):
        linearize(example("crossing"), "p2p")
    with pytest.raises(NotInModelError):
        linearize(example("mailbox_cross"), "mb")


def test_check_linearization_two_targets_examples():
    m = example("two_targets")
    # ids p: !m1=0 !m2=1, q: ?m2=2 ?m3=3, r: !m3=4 ?m1=5
    assert check_linearization(m, (0, 1, 4, 2, 5, 3), "mb")  # !1 !2 !3 ?2 ?1 ?3
    assert not check_linearization(m, (0, 1, 4, 2, 5, 3), "onen")
    assert check_linearization(m, (0, 4, 1, 5, 2, 3), "onen")  # !1 !3 !2 ?1 ?2 ?3
    assert not check_linearization(m, (0, 4, 1, 5, 2, 3), "mb")


def test_check_linearization_empty():
    for model in MODELS:
        assert check_linearization(EMPTY_MSC, (), model)


def test_oracle_examples():
    assert not oracle_membership(example("mailbox_cross"), "mb")
    assert oracle_membership(example("two_targets"), "nn")


def test_oracle_limit():
    from msckit.classify import OracleLimitError

    with pytest.raises(OracleLimitError):
        oracle_membership(example("producer"), "mb", limit=10)


def test_oracle_env_override(monkeypatch):
    from msckit.classify import OracleLimitError

    monkeypatch.setenv("MSCKIT_ORACLE_LIMIT", "4")
    with pytest.raises(OracleLimitError):
        oracle_membership(example("two_targets"), "mb")
    monkeypatch.setenv("MSCKIT_ORACLE_LIMIT", "6")
    assert oracle_membership(example("two_targets"), "mb")


def test_classify_empty_all_models():
    assert set(classify(EMPTY_MSC).members) == set(MODELS)


def test_classify_witnesses_verify():
    for name in EXAMPLES:
        m = example(name)
        report = classify(m)
        for model, lin in report.witnesses.items():
            assert check_linearization(m, lin, model)
        for model in MODELS:
            if not report.verdicts[model] and model != "asy":
                assert model in report.negatives


def test_report_json_roundtrip():
    report = classify(example("late_receive"))
    again = ClassReport.from_json(report.to_json())
    assert again.verdicts == report.verdicts
    assert {m: w.order for m, w in again.witnesses.items()} == {
        m: w.order for m, w in report.witnesses.items()
    }


def test_hierarchy_downward_closed_on_random():
    rng = random.Random(12)
    order = list(MODELS)
    for _ in range(150):
        m = random_msc(rng, max_events=7)
        report = classify(m, with_witnesses=False)
        for smaller, larger in zip(order[1:], order):
            assert not report.verdicts[smaller] or report.verdicts[larger]


def test_hierarchy_strictness_witnessed_by_corpus():
    # each inclusion is strict somewhere in the example corpus
    strict_pairs = {
        ("asy", "p2p"): "crossing",
        ("p2p", "co"): "overtake",
        ("co", "mb"): "mailbox_cross",
        ("mb", "onen"): "lost_elsewhere",
        ("onen", "nn"): "late_receive",
        ("nn", "rsc"): "handshake",
    }
    for (larger, smaller), name in strict_pairs.items():
        report = classify(example(name), with_witnesses=False)
        assert report.verdicts[larger] and not report.verdicts[smaller]


def test_oracle_equivalence_random():
    rng = random.Random(13)
    for i in range(250):
        procs = ("p", "q", "r", "s") if i % 3 == 0 else ("p", "q", "r")
        m = random_msc(rng, max_events=8, procs=procs)
        report = classify(m, with_witnesses=False)
        for model in ("mb", "onen", "nn", "rsc"):
            assert report.verdicts[model] == oracle_membership(m, model)


def test_membership_unknown_model():
    with pytest.raises(ValueError):
        membership(EMPTY_MSC, "sync")
