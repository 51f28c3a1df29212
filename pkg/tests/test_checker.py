"""Atomicity verdicts: tag-witness rules vs exhaustive search.

The violation fixtures at the bottom are hand-built histories that break
the value story itself (stale reads, inverted read pairs, phantom values),
so both verdict procedures must reject every one of them. Shapes that only
a tag can expose, like inverted tags on writes whose values still
linearize, are deliberately not here; those appear in the agreement tests
as the known asymmetry between the two procedures.
"""

import pytest

from ohram.checker import (
    BRUTE_MAX_OPS,
    check_bruteforce,
    check_history,
    check_witness,
)
from ohram.core import (
    HistoryTooLarge,
    OpId,
    OpRecord,
    Tag,
    UntaggedHistory,
    parse_pid,
)
from violations import VIOLATIONS


def rec(pid_text, seq, kind, invoked, responded, ts=None, wid=None, value=None):
    pid = parse_pid(pid_text)
    tag = Tag(ts, parse_pid(wid)) if ts is not None else None
    return OpRecord(OpId(pid, seq), kind, pid, invoked, responded, tag, value)


def w(pid_text, seq, invoked, responded, ts, value):
    return rec(pid_text, seq, "write", invoked, responded, ts, pid_text, value)


def both_reject(history):
    witness = check_witness(history)
    brute = check_bruteforce(history)
    assert not witness.atomic, "witness accepted a broken history"
    assert not brute.atomic, "bruteforce accepted a broken history"
    assert witness.witness, "non-atomic verdict without witnessing ops"
    assert brute.witness
    assert witness.prop in {"P1", "P2", "P3", "A1", "A2", "A3"}
    return witness, brute


def both_accept(history):
    assert check_witness(history).atomic
    assert check_bruteforce(history).atomic


# -- acceptance shapes --


def test_write_then_matching_read_is_atomic():
    both_accept([
        w("w1", 1, 0, 2, 1, "A"),
        rec("r1", 1, "read", 3, 5, 1, "w1", "A"),
    ])


def test_single_read_of_initial_value_is_atomic():
    history = [rec("r1", 1, "read", 0, 2, 0, "s1", None)]
    both_accept(history)


def test_concurrent_writes_allow_either_order():
    # reads pin a then b while both writes are still in flight
    both_accept([
        w("w1", 1, 0, 100, 1, "a"),
        w("w2", 1, 1, 101, 1, "b"),
        rec("r1", 1, "read", 10, 12, 1, "w1", "a"),
        rec("r1", 2, "read", 13, 15, 1, "w2", "b"),
    ])


def test_read_during_write_may_return_either_state():
    write = w("w1", 1, 0, 10, 1, "A")
    old = rec("r1", 1, "read", 2, 4, 0, "s1", None)
    new = rec("r1", 2, "read", 5, 7, 1, "w1", "A")
    both_accept([write, old, new])


def test_pending_write_may_be_observed_or_not():
    pending = rec("w1", 1, "write", 0, None, None, None, "A#w1.1")
    seen = rec("r1", 1, "read", 1, 3, 1, "w1", "A#w1.1")
    unseen = rec("r1", 1, "read", 1, 3, 0, "s1", None)
    assert check_bruteforce([pending, seen]).atomic
    assert check_bruteforce([pending, unseen]).atomic
    assert check_witness([pending, seen]).atomic
    assert check_witness([pending, unseen]).atomic


def test_pending_reads_are_ignored():
    history = [
        w("w1", 1, 0, 2, 1, "A"),
        rec("r1", 1, "read", 3, None),
    ]
    both_accept(history)


def test_untagged_completed_op_is_a_witness_error():
    with pytest.raises(UntaggedHistory):
        check_witness([rec("r1", 1, "read", 0, 1, value="A")])


def test_bruteforce_size_cap():
    history = [w("w1", k, 10 * k, 10 * k + 5, k, f"V{k}#w1.{k}")
               for k in range(1, BRUTE_MAX_OPS + 2)]
    with pytest.raises(HistoryTooLarge):
        check_bruteforce(history)
    # the dispatcher falls back to the witness rules instead
    assert check_history(history).method == "witness"


def test_dispatcher_prefers_bruteforce_when_small():
    assert check_history([w("w1", 1, 0, 2, 1, "A")]).method == "bruteforce"


def test_verdict_json_shape():
    v = check_witness([
        w("w1", 1, 0, 2, 1, "A"),
        rec("r1", 1, "read", 3, 5, 0, "s1", None),
    ])
    obj = v.to_json()
    assert obj["atomic"] is False
    assert obj["violation"]["property"] == "A1"
    assert obj["violation"]["pair"]
    assert "explanation" in obj["violation"]


# -- the twelve violation fixtures --


@pytest.mark.parametrize("name", sorted(VIOLATIONS))
def test_violation_fixture_rejected_by_both(name):
    both_reject(VIOLATIONS[name])


def test_there_are_twelve_fixtures():
    assert len(VIOLATIONS) == 12


def test_fixture_property_labels():
    """Spot-check which rule each verdict procedure trips on."""
    witness, _ = both_reject(VIOLATIONS["initial_after_completed_write"])
    assert witness.prop == "A1"
    witness, brute = both_reject(VIOLATIONS["one_reader_goes_backwards"])
    assert witness.prop == "A3"
    assert brute.witness == (OpId(parse_pid("r1"), 1),
                             OpId(parse_pid("r1"), 2))
    witness, _ = both_reject(VIOLATIONS["superseded_write_single_writer"])
    assert witness.prop == "A1"
    witness, _ = both_reject(VIOLATIONS["value_nobody_wrote"])
    assert witness.prop == "P3"
    witness, _ = both_reject(VIOLATIONS["concurrent_writes_inverted_by_two_readers"])
    assert witness.prop == "A3"
