"""Builders for the four shipped counterexample schedules (xi1p..xi4).

All four run the unsound three-exchange write protocol with three
servers, two writers, one reader and threshold x=2, so the server sets
of the boundary construction are S1={s1} (x-1 servers that observe w1's
write first), S2={s2} (the |S|-x servers that observe w2's write first),
and s3 in the swing seat.

xi1p   w1 writes, then w2 writes, then one read. Unanimous evidence,
       the read returns w2's value: the later write wins. Atomic.
xi2p   the same with the writers swapped: w2 writes first, then w1,
       the read returns w1's value. Atomic. (The tags the unsound
       protocol mints disagree with real time here, so only the
       exhaustive checker is meaningful on this history.)
xi3pp  concurrent writes, split evidence, s3 observes w2's write first.
       s3's relays to the other servers are withheld, so both reads are
       answered under mixed evidence below threshold and return w2's
       value. Atomic.
xi4    as xi3pp but s3 observes w1's write first. The first read is
       answered by s1 and s2 before s3's evidence reaches them and
       returns w2's value. The second read's relay from s3 delivers the
       x-th "w1 first" declaration to s1 and s2, flipping their answers
       to w1's value. Two sequential reads thus return w2's value, then
       w1's: the second read violates atomicity.

A schedule is a header line plus directives; render() produces the
line-delimited JSON the replay machinery consumes, and write_all()
regenerates the shipped files byte for byte.
"""

from __future__ import annotations

import json
import os

_CONFIG = {"n_servers": 3, "n_readers": 1, "n_writers": 2,
           "f": 1, "mode": "mwmr"}

_SERVERS = ("s1", "s2", "s3")


def _header(comment: str) -> dict:
    return {"protocol": "naive3x", "config": dict(_CONFIG), "x": 2,
            "comment": comment}


def _inv(client: str, kind: str, label: str | None = None) -> dict:
    spec = {"client": client, "kind": kind}
    if label is not None:
        spec["label"] = label
    return {"invoke": spec}


def _dlv(**sel) -> dict:
    return {"deliver": sel}


_DRAIN = {"drain": True}


def _sequential(first_writer: str, second_writer: str,
                comment: str) -> tuple[dict, list[dict]]:
    steps = [
        _inv(first_writer, "write", "A"),
        _DRAIN,
        _inv(second_writer, "write", "B"),
        _DRAIN,
        _inv("r1", "read"),
        _DRAIN,
    ]
    return _header(comment), steps


def build_xi1p() -> tuple[dict, list[dict]]:
    return _sequential(
        "w1", "w2",
        "sequential writes w1 then w2; the read returns w2's value")


def build_xi2p() -> tuple[dict, list[dict]]:
    return _sequential(
        "w2", "w1",
        "sequential writes w2 then w1; the read returns w1's value")


def _boundary(s3_first: str, comment: str) -> tuple[dict, list[dict]]:
    """Concurrent writes with split evidence; s3's relays are withheld.

    s3_first names the writer whose writeRequest s3 receives first.
    Deliveries to s1 and s2 never include anything originating at s3
    until the second read's relay round (and the trailing auto-drain).
    """
    s3_second = "w2" if s3_first == "w1" else "w1"
    steps = [
        _inv("w1", "write", "A"),
        _inv("w2", "write", "B"),
        # receipt orders: s1 sees w1's request first, s2 sees w2's first
        _dlv(kind="writeRequest", invoker="w1", to="s1"),
        _dlv(kind="writeRequest", invoker="w2", to="s2"),
        _dlv(kind="writeRequest", invoker=s3_first, to="s3"),
        _dlv(kind="writeRequest", invoker=s3_second, to="s3"),
        _dlv(kind="writeRequest", invoker="w2", to="s1"),
        _dlv(kind="writeRequest", invoker="w1", to="s2"),
    ]
    # both writes complete on acks from s1 and s2 alone
    for w in ("w1", "w2"):
        for dest in ("s1", "s2"):
            steps.append(_dlv(kind="writeRelay", invoker=w, origin="s1", to=dest))
            steps.append(_dlv(kind="writeRelay", invoker=w, origin="s2", to=dest))
        steps.append(_dlv(kind="writeAck", invoker=w, **{"from": "s1"}))
        steps.append(_dlv(kind="writeAck", invoker=w, **{"from": "s2"}))
    # s3 hears everyone (its own acks stay parked in the network)
    for w in ("w1", "w2"):
        for origin in ("s3", "s1", "s2"):
            steps.append(_dlv(kind="writeRelay", invoker=w, origin=origin, to="s3"))

    # first read: s1 and s2 answer before any word from s3 reaches them
    steps.append(_inv("r1", "read"))
    for dest in _SERVERS:
        steps.append(_dlv(kind="readRequest", invoker="r1", seq=1, to=dest))
    for dest in ("s1", "s2"):
        steps.append(_dlv(kind="readRelay", invoker="r1", seq=1, origin="s1", to=dest))
        steps.append(_dlv(kind="readRelay", invoker="r1", seq=1, origin="s2", to=dest))
    for origin in ("s3", "s1", "s2"):
        steps.append(_dlv(kind="readRelay", invoker="r1", seq=1, origin=origin, to="s3"))
    steps.append(_dlv(kind="readAck", invoker="r1", seq=1, **{"from": "s1"}))
    steps.append(_dlv(kind="readAck", invoker="r1", seq=1, **{"from": "s2"}))

    # second read: s3's relay (carrying its observations) arrives at s1
    # and s2 before they answer
    steps.append(_inv("r1", "read"))
    for dest in _SERVERS:
        steps.append(_dlv(kind="readRequest", invoker="r1", seq=2, to=dest))
    for dest in ("s1", "s2"):
        steps.append(_dlv(kind="readRelay", invoker="r1", seq=2, origin="s3", to=dest))
        steps.append(_dlv(kind="readRelay", invoker="r1", seq=2, origin=dest, to=dest))
    steps.append(_dlv(kind="readAck", invoker="r1", seq=2, **{"from": "s1"}))
    steps.append(_dlv(kind="readAck", invoker="r1", seq=2, **{"from": "s2"}))
    return _header(comment), steps


def build_xi3pp() -> tuple[dict, list[dict]]:
    return _boundary(
        "w2",
        "concurrent writes, s3 sees w2's first; both reads return w2's value")


def build_xi4() -> tuple[dict, list[dict]]:
    return _boundary(
        "w1",
        "concurrent writes, s3 sees w1's first; reads return w2's then "
        "w1's value, violating atomicity")


BUILDERS = {
    "xi1p": build_xi1p,
    "xi2p": build_xi2p,
    "xi3pp": build_xi3pp,
    "xi4": build_xi4,
}


def render(name: str) -> str:
    header, steps = BUILDERS[name]()
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(s, sort_keys=True) for s in steps)
    return "\n".join(lines) + "\n"


def write_all(directory: str) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    for name in BUILDERS:
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render(name))
        written.append(path)
    return written
