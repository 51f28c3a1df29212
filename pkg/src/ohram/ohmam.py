"""Multi-writer atomic register: four-exchange writes, three-exchange reads.

The read path is identical to the single-writer setting and is reused from
the three-exchange read module wholesale. Writes generalize timestamps to
(ts, writer-id) tags and add a discover phase:

  discover -> discoverAck -> writeRequest -> writeAck

The writer's write_op counter is incremented twice per write, once before
the discover broadcast and once before the writeRequest broadcast, so
discover messages carry odd counters and writeRequests even ones.
discoverAck matching uses the first counter and writeAck matching the
second. The counter parity is observable on the wire; history events use
the per-operation ordinal (write k by writer w is op (w, k)).

Upon a majority of discoverAcks the writer takes maxTS as the maximum of
the ts components alone (the writer ids of the collected tags are
discarded, since a fresh wid is assigned) and writes tag (maxTS + 1, own
id). A server adopts an incoming writeRequest only when the tag is larger
AND the writer's recorded write_op counter is stale-free, i.e.
(tag < tag') and (write_operations[w] < write_op); the writeAck is sent
unconditionally either way. write_operations is not refreshed on
non-adopting acks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Completion,
    Config,
    KIND_DISCOVER,
    KIND_DISCOVER_ACK,
    KIND_WRITE_ACK,
    KIND_WRITE_REQUEST,
    Message,
    NotWellFormed,
    OpId,
    ProcessId,
    Tag,
    make_value,
    quorum_size,
    tag_less,
)
from .ohsam import ReaderStateS, ServerStateS

# The reader is literally the single-writer one: broadcast, collect a
# majority of readAcks, return the minimum tag's value.
ReaderStateM = ReaderStateS

IDLE = "idle"
DISCOVERING = "discovering"
WRITING = "writing"


@dataclass
class WriterStateM:
    """Multi-writer: discover the maximum timestamp, then write above it."""

    pid: ProcessId
    config: Config
    tag: Tag = None
    value: Optional[str] = None
    write_op: int = 0
    max_ts: int = 0
    q: dict[ProcessId, Message] = field(default_factory=dict)
    acks: set[ProcessId] = field(default_factory=set)
    phase: str = IDLE

    def __post_init__(self):
        if self.tag is None:
            self.tag = Tag(0, self.pid)

    @property
    def busy(self) -> bool:
        return self.phase != IDLE

    @property
    def op_ordinal(self) -> int:
        # write k uses counters 2k-1 and 2k
        return (self.write_op + 1) // 2

    def invoke_write(self, label: str) -> list[Message]:
        if self.phase != IDLE:
            raise NotWellFormed(f"{self.pid} already has a write in flight")
        self.write_op += 1
        self.phase = DISCOVERING
        self.q = {}
        self.value = make_value(label, OpId(self.pid, self.op_ordinal))
        op = OpId(self.pid, self.write_op)
        return [Message(KIND_DISCOVER, op, self.pid, s)
                for s in self.config.servers()]

    def on_message(self, msg: Message) -> tuple[list[Message], Optional[Completion]]:
        if msg.kind == KIND_DISCOVER_ACK and self.phase == DISCOVERING:
            if msg.op.invoker != self.pid or msg.op.seq != self.write_op:
                return [], None
            self.q[msg.sender] = msg
            if len(self.q) >= quorum_size(self.config.n_servers):
                self.max_ts = max(m.tag.ts for m in self.q.values())
                self.tag = Tag(self.max_ts + 1, self.pid)
                self.write_op += 1
                self.phase = WRITING
                self.acks = set()
                op = OpId(self.pid, self.write_op)
                return [
                    Message(KIND_WRITE_REQUEST, op, self.pid, s,
                            tag=self.tag, value=self.value)
                    for s in self.config.servers()
                ], None
            return [], None
        if msg.kind == KIND_WRITE_ACK and self.phase == WRITING:
            if msg.op.invoker != self.pid or msg.op.seq != self.write_op:
                return [], None
            self.acks.add(msg.sender)
            if len(self.acks) >= quorum_size(self.config.n_servers):
                done = Completion(OpId(self.pid, self.op_ordinal), "write",
                                  self.tag, self.value)
                self.phase = IDLE
                return [], done
        return [], None


@dataclass
class ServerStateM(ServerStateS):
    """Server with the stale-write guard; read handlers are inherited."""

    write_operations: dict[ProcessId, int] = field(default_factory=dict)

    def on_message(self, msg: Message) -> list[Message]:
        if msg.kind == KIND_DISCOVER:
            return self.on_discover(msg)
        if msg.kind == KIND_WRITE_REQUEST:
            return self.on_write_request(msg)
        return super().on_message(msg)

    def on_discover(self, msg: Message) -> list[Message]:
        # Echo the current tag and value; receipt never updates the tag.
        return [Message(KIND_DISCOVER_ACK, msg.op, self.pid, msg.op.invoker,
                        tag=self.tag, value=self.value)]

    def on_write_request(self, msg: Message) -> list[Message]:
        wid = msg.op.invoker
        if tag_less(self.tag, msg.tag) and self.write_operations.get(wid, 0) < msg.op.seq:
            self.tag = msg.tag
            self.value = msg.value
            self.write_operations[wid] = msg.op.seq
        return [Message(KIND_WRITE_ACK, msg.op, self.pid, msg.op.invoker,
                        tag=self.tag, value=self.value)]
