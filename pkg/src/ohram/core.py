"""Shared domain vocabulary for the register emulation artifact.

Identifiers, tags, operation ids, protocol messages, configuration, and
quorum arithmetic. Every protocol module, the simulator, the checker, and
the TCP runner build on these types. All of them are plain values: nothing
here mutates after construction, so instances are safe to share freely.

The canonical JSON encoding of each type lives next to the type (the
``*_to_json`` / ``*_from_json`` pairs). Wire frames, schedule scripts,
history files, and metrics reports all use exactly these encodings; field
names are part of the contract. Unknown fields are ignored on decode for
forward compatibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Optional


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class OhramError(Exception):
    """Base class for every artifact-specific error."""


class InvalidFaultBound(OhramError):
    """f does not satisfy f < n_servers / 2."""


class ModeMismatch(OhramError):
    """Role counts conflict with the declared register mode."""


class NotWellFormed(OhramError):
    """A client invoked an operation while another one is pending."""


class StuckExecution(OhramError):
    """An operation by a correct process cannot make progress."""


class ScheduleUnresolvable(OhramError):
    """A scripted delivery selector matched nothing (or was ambiguous)."""


class FaultBudgetExceeded(OhramError):
    """More crash directives than the configured fault bound f."""


class UntaggedHistory(OhramError):
    """The witness checker needs tags on every response."""


class HistoryTooLarge(OhramError):
    """The exhaustive checker only accepts small histories."""


class BindFailure(OhramError):
    """A server daemon could not bind its listen address."""


class QuorumUnreachable(OhramError):
    """A client exhausted its retry budget without reaching a quorum."""


# ---------------------------------------------------------------------------
# Process identifiers
# ---------------------------------------------------------------------------

ROLE_WRITER = "writer"
ROLE_READER = "reader"
ROLE_SERVER = "server"

_ROLE_RANK = {ROLE_WRITER: 0, ROLE_READER: 1, ROLE_SERVER: 2}
_ROLE_PREFIX = {ROLE_WRITER: "w", ROLE_READER: "r", ROLE_SERVER: "s"}
_PREFIX_ROLE = {v: k for k, v in _ROLE_PREFIX.items()}


@dataclass(frozen=True, slots=True)
class ProcessId:
    """A process identity: role plus 1-based index within the role.

    The order over all ids is total and stable: role-major (writers,
    then readers, then servers), index-minor.
    """

    role: str
    index: int

    def sort_key(self) -> tuple[int, int]:
        return (_ROLE_RANK[self.role], self.index)

    def __lt__(self, other: "ProcessId") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{_ROLE_PREFIX[self.role]}{self.index}"


@lru_cache(maxsize=4096)
def parse_pid(text: str) -> ProcessId:
    """Parse "w1" / "r2" / "s3" into a ProcessId."""
    role = _PREFIX_ROLE.get(text[:1])
    if role is None or not text[1:].isdigit():
        raise ValueError(f"bad process id: {text!r}")
    index = int(text[1:])
    if index < 1:
        raise ValueError(f"process index must be >= 1: {text!r}")
    return ProcessId(role, index)


def writer_id(i: int) -> ProcessId:
    return ProcessId(ROLE_WRITER, i)


def reader_id(i: int) -> ProcessId:
    return ProcessId(ROLE_READER, i)


def server_id(i: int) -> ProcessId:
    return ProcessId(ROLE_SERVER, i)


# ---------------------------------------------------------------------------
# Tags
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Tag:
    """Version number of a written value: (timestamp, writer id).

    Strict lexicographic order. In the single-writer setting the wid is
    pinned to the sole writer, so the tag degenerates to a bare timestamp.
    A tag with ts == 0 is an initial tag; its wid is the owning process
    (servers start at (0, own id)) and it is always associated with the
    unwritten sentinel value.
    """

    ts: int
    wid: ProcessId

    def __lt__(self, other: "Tag") -> bool:
        return tag_less(self, other)

    def __str__(self) -> str:
        return f"({self.ts},{self.wid})"


def tag_less(a: Tag, b: Tag) -> bool:
    """Strict lexicographic tag order: ts first, writer id as tiebreak."""
    if a.ts != b.ts:
        return a.ts < b.ts
    return a.wid.sort_key() < b.wid.sort_key()


def tag_max(tags: Iterable[Tag]) -> Tag:
    best: Optional[Tag] = None
    for t in tags:
        if best is None or tag_less(best, t):
            best = t
    if best is None:
        raise ValueError("tag_max of empty iterable")
    return best


# ---------------------------------------------------------------------------
# Operation identifiers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class OpId:
    """Identifies one client operation: (invoker, per-invoker counter).

    The seq is the invoker's operation counter and strictly increases, so
    (invoker, seq) is globally unique. Wire messages of the four-exchange
    write protocol carry the raw write_op counter, which ticks twice per
    write; history events always use the per-operation id (one per
    invocation).
    """

    invoker: ProcessId
    seq: int

    def __str__(self) -> str:
        return f"{self.invoker}#{self.seq}"


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

# The register's initial value. Distinct from every written value; written
# values are opaque strings made unique per invocation by a nonce suffix.
BOTTOM = None


def make_value(label: str, op: OpId) -> str:
    """Written value: opaque label plus a per-invocation unique nonce."""
    return f"{label}#{op.invoker}.{op.seq}"


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

KIND_READ_REQUEST = "readRequest"
KIND_READ_RELAY = "readRelay"
KIND_READ_ACK = "readAck"
KIND_WRITE_REQUEST = "writeRequest"
KIND_WRITE_ACK = "writeAck"
KIND_DISCOVER = "discover"
KIND_DISCOVER_ACK = "discoverAck"
# Used only by the deliberately unsound three-exchange write protocol,
# which disseminates write requests among servers before acknowledging.
KIND_WRITE_RELAY = "writeRelay"

MESSAGE_KINDS = (
    KIND_READ_REQUEST,
    KIND_READ_RELAY,
    KIND_READ_ACK,
    KIND_WRITE_REQUEST,
    KIND_WRITE_ACK,
    KIND_DISCOVER,
    KIND_DISCOVER_ACK,
    KIND_WRITE_RELAY,
)


@dataclass(frozen=True, slots=True)
class Message:
    """Typed protocol envelope.

    Every message names exactly one destination; a broadcast is expanded
    into one message per destination at send time so the metrics layer
    counts messages exactly as the complexity table does.

    relay_origin is set on relays only: the server whose relay this is.
    A relay carries the target client's OpId, which lets a server answer
    a reader it never heard from directly.

    observations is used by the unsound three-exchange write protocol
    only: the relaying server's record of the writes it has seen, in
    first-contact order. Each entry is an (op, tag, value) triple.
    """

    kind: str
    op: OpId
    sender: ProcessId
    destination: ProcessId
    tag: Optional[Tag] = None
    value: Optional[str] = None
    relay_origin: Optional[ProcessId] = None
    observations: Optional[tuple["WriteRecord", ...]] = None


@dataclass(frozen=True, slots=True)
class WriteRecord:
    """One write as known to a server: identity, tag, and value."""

    op: OpId
    tag: Tag
    value: Optional[str]


@dataclass(frozen=True, slots=True)
class Completion:
    """A finished client operation: canonical id, kind, and result.

    Write completions carry the tag and value that were written; read
    completions carry the tag and value that were returned. The tag makes
    recorded histories checkable by the witness checker.
    """

    op: OpId
    kind: str  # "read" | "write"
    tag: Tag
    value: Optional[str]


@dataclass
class OpRecord:
    """One operation in a recorded history.

    invoked and responded are indices on a single monotone scale (event
    counter in the simulator, monotonic clock in the live runner); the
    scale only needs to order events of one run consistently. responded
    is None while the operation is pending. tag and value are the
    operation's result: what a read returned, or what a write wrote.
    """

    op: OpId
    kind: str  # "read" | "write"
    invoker: ProcessId
    invoked: int
    responded: Optional[int]
    tag: Optional[Tag]
    value: Optional[str]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

MODE_SWMR = "swmr"
MODE_MWMR = "mwmr"


@dataclass(frozen=True, slots=True)
class Config:
    """System configuration: role counts, fault bound, register mode."""

    n_servers: int
    n_readers: int
    n_writers: int
    f: int
    mode: str = MODE_MWMR

    def servers(self) -> list[ProcessId]:
        return [server_id(i) for i in range(1, self.n_servers + 1)]

    def readers(self) -> list[ProcessId]:
        return [reader_id(i) for i in range(1, self.n_readers + 1)]

    def writers(self) -> list[ProcessId]:
        return [writer_id(i) for i in range(1, self.n_writers + 1)]


def quorum_size(n_servers: int) -> int:
    """Majority size: floor(n/2) + 1. Any two majorities intersect."""
    if n_servers < 1:
        raise ValueError("need at least one server")
    return n_servers // 2 + 1


def validate_config(c: Config) -> None:
    """Reject configurations outside the failure model or mode rules.

    Raises InvalidFaultBound when f >= n_servers / 2, and ModeMismatch
    when a single-writer configuration declares more than one writer.
    """
    if c.n_servers < 1:
        raise InvalidFaultBound("need at least one server")
    if c.f < 0 or c.f * 2 >= c.n_servers:
        raise InvalidFaultBound(
            f"f={c.f} must satisfy f < n_servers/2 = {c.n_servers / 2}")
    if c.mode not in (MODE_SWMR, MODE_MWMR):
        raise ModeMismatch(f"unknown mode {c.mode!r}")
    if c.mode == MODE_SWMR and c.n_writers != 1:
        raise ModeMismatch(
            f"single-writer mode requires exactly one writer, got {c.n_writers}")
    if c.n_writers < 0 or c.n_readers < 0:
        raise ModeMismatch("role counts must be non-negative")


# ---------------------------------------------------------------------------
# JSON codecs
# ---------------------------------------------------------------------------

def tag_to_json(t: Optional[Tag]) -> Optional[dict[str, Any]]:
    if t is None:
        return None
    return {"ts": t.ts, "wid": str(t.wid)}


def tag_from_json(obj: Optional[dict[str, Any]]) -> Optional[Tag]:
    if obj is None:
        return None
    return Tag(int(obj["ts"]), parse_pid(obj["wid"]))


def opid_to_json(op: OpId) -> dict[str, Any]:
    return {"invoker": str(op.invoker), "seq": op.seq}


def opid_from_json(obj: dict[str, Any]) -> OpId:
    return OpId(parse_pid(obj["invoker"]), int(obj["seq"]))


def message_to_json(m: Message) -> dict[str, Any]:
    obj: dict[str, Any] = {
        "kind": m.kind,
        "op": opid_to_json(m.op),
        "sender": str(m.sender),
        "destination": str(m.destination),
        "tag": tag_to_json(m.tag),
        "value": m.value,
        "relay_origin": str(m.relay_origin) if m.relay_origin else None,
    }
    if m.observations is not None:
        obj["observations"] = [
            {"op": opid_to_json(w.op), "tag": tag_to_json(w.tag), "value": w.value}
            for w in m.observations
        ]
    return obj


def message_from_json(obj: dict[str, Any]) -> Message:
    kind = obj["kind"]
    if kind not in MESSAGE_KINDS:
        raise ValueError(f"unknown message kind {kind!r}")
    obs = None
    if obj.get("observations") is not None:
        obs = tuple(
            WriteRecord(opid_from_json(w["op"]), tag_from_json(w["tag"]), w["value"])
            for w in obj["observations"]
        )
    return Message(
        kind=kind,
        op=opid_from_json(obj["op"]),
        sender=parse_pid(obj["sender"]),
        destination=parse_pid(obj["destination"]),
        tag=tag_from_json(obj.get("tag")),
        value=obj.get("value"),
        relay_origin=parse_pid(obj["relay_origin"]) if obj.get("relay_origin") else None,
        observations=obs,
    )


def config_to_json(c: Config) -> dict[str, Any]:
    return {
        "n_servers": c.n_servers,
        "n_readers": c.n_readers,
        "n_writers": c.n_writers,
        "f": c.f,
        "mode": c.mode,
    }


def config_from_json(obj: dict[str, Any]) -> Config:
    return Config(
        n_servers=int(obj["n_servers"]),
        n_readers=int(obj["n_readers"]),
        n_writers=int(obj["n_writers"]),
        f=int(obj["f"]),
        mode=obj.get("mode", MODE_MWMR),
    )
