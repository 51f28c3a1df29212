"""Unsound three-exchange-write protocol: the decision rule in isolation."""

import pytest

from ohram.core import (
    Config,
    Message,
    OpId,
    Tag,
    WriteRecord,
    writer_id,
    server_id,
)
from ohram.naive3x import Naive3xServer, Naive3xWriter, default_x, order_writes
from ohram.protocols import get_protocol

CFG = Config(n_servers=3, n_readers=1, n_writers=2, f=1)
W1, W2 = writer_id(1), writer_id(2)
S1, S2, S3 = server_id(1), server_id(2), server_id(3)

REC_A = WriteRecord(OpId(W1, 1), Tag(1, W1), "A#w1.1")
REC_B = WriteRecord(OpId(W2, 1), Tag(1, W2), "B#w2.1")


def test_default_threshold_is_half_rounded_up():
    assert [default_x(n) for n in (3, 4, 5, 7)] == [2, 2, 3, 4]


def test_order_unanimous_evidence_wins():
    assert order_writes(3, 0, x=2) is True
    assert order_writes(0, 3, x=2) is False


def test_order_conflicting_evidence_flips_at_threshold():
    assert order_writes(1, 1, x=2) is True
    assert order_writes(1, 2, x=2) is True  # still below the threshold
    assert order_writes(2, 1, x=2) is False  # x-th smaller-first witness
    assert order_writes(3, 2, x=4) is True
    assert order_writes(4, 1, x=4) is False


def test_writer_picks_tag_locally():
    w = Naive3xWriter(W2, CFG)
    outs = w.invoke_write("A")
    assert [m.kind for m in outs] == ["writeRequest"] * 3
    assert outs[0].tag == Tag(1, W2)
    w.acks = set()
    done = None
    for s in (S1, S3):
        _, done = w.on_message(Message("writeAck", outs[0].op, s, W2,
                                       tag=outs[0].tag, value=outs[0].value))
    assert done is not None and done.tag == Tag(1, W2)


def test_server_with_no_evidence_serves_initial():
    s = Naive3xServer(S1, CFG)
    assert s.adopted() == (Tag(0, S1), None)


def test_server_with_one_write_serves_it():
    s = Naive3xServer(S1, CFG)
    s._note_write(REC_B)
    assert s.adopted() == (REC_B.tag, REC_B.value)


def test_two_writes_unanimous_order_serves_later_one():
    s = Naive3xServer(S1, CFG, x=2)
    s._note_write(REC_A)
    s._note_write(REC_B)
    s._merge_origin(S2, (REC_A, REC_B))
    # every declaration says the smaller-tag write came first
    assert s.adopted() == (REC_B.tag, REC_B.value)


def test_two_writes_flip_on_xth_witness():
    s = Naive3xServer(S3, CFG, x=2)
    # own observations: the smaller-tag write first
    s._note_write(REC_A)
    s._note_write(REC_B)
    # one origin saw the larger-tag write first: 1 vs 1, below x
    s._merge_origin(S1, (REC_B, REC_A))
    assert s.adopted() == (REC_B.tag, REC_B.value)
    # the second smaller-first witness reaches x and flips the order,
    # so the larger-tag write is now declared first and A is served
    s._merge_origin(S2, (REC_A, REC_B))
    assert s.adopted() == (REC_A.tag, REC_A.value)


def test_origin_merge_keeps_longest_list():
    s = Naive3xServer(S1, CFG)
    s._merge_origin(S2, (REC_A, REC_B))
    s._merge_origin(S2, (REC_A,))  # shorter snapshot arrives late
    assert s.origin_obs[S2] == (REC_A, REC_B)


def test_three_or_more_writes_fall_back_to_max_tag():
    s = Naive3xServer(S1, CFG)
    third = WriteRecord(OpId(W1, 2), Tag(2, W1), "C#w1.2")
    for rec in (REC_B, third, REC_A):
        s._note_write(rec)
    assert s.adopted() == (third.tag, third.value)


def test_write_relay_round_acks_at_quorum_origins():
    s = Naive3xServer(S1, CFG)
    op = OpId(W1, 1)
    req = Message("writeRequest", op, W1, S1, tag=Tag(1, W1), value="A#w1.1")
    outs = s.on_message(req)
    assert [m.kind for m in outs] == ["writeRelay"] * 3
    assert s.on_message(req) == []  # relay once
    rel = lambda origin: Message("writeRelay", op, origin, S1, tag=Tag(1, W1),
                                 value="A#w1.1", relay_origin=origin,
                                 observations=(REC_A,))
    assert s.on_message(rel(S2)) == []
    outs = s.on_message(rel(S3))
    assert [m.kind for m in outs] == ["writeAck"]
    assert s.on_message(rel(S1)) == []  # ack once


def test_read_relays_carry_observation_snapshots():
    from ohram.core import reader_id
    s = Naive3xServer(S2, CFG)
    s._note_write(REC_B)
    outs = s.on_message(Message("readRequest", OpId(reader_id(1), 1),
                                reader_id(1), S2))
    assert [m.kind for m in outs] == ["readRelay"] * 3
    assert outs[0].observations == (REC_B,)
    assert outs[0].tag == REC_B.tag


def test_live_runner_refuses_this_protocol():
    bundle = get_protocol("naive3x")
    assert bundle.runner_ok is False
    assert bundle.checked_invariants is False


def test_protocol_registry_rejects_unknown_names():
    from ohram.core import ModeMismatch
    with pytest.raises(ModeMismatch):
        get_protocol("paxos")
