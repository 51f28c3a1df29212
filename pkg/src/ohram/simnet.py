"""Deterministic discrete-event simulator for the register protocols.

The network is a bag of in-flight messages. One run interleaves three
kinds of events: delivering an in-flight message, invoking the next
operation of an idle client, and crashing a server. Seeded runs pick
uniformly among the currently enabled events with a private RNG, so a
(protocol, config, seed) triple fully determines the execution. Scripted
runs replay a schedule file instead; see parse_schedule for the format.

Message sends are counted at send time and attributed to the client
operation whose identifier the message carries, so the per-operation
message and exchange tallies match the protocol's complexity exactly on
failure-free runs that deliver everything.

Crashing a server removes its undelivered inbound messages and silences
it from then on; messages it already sent stay deliverable. Crashes are
refused beyond the configured fault bound f.

A run that exhausts its event budget, or that still has a pending client
operation when no event is enabled, raises StuckExecution. With crash
counts at most floor((n-1)/2) that cannot happen for the protocols here:
every live server still hears from a majority.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Completion,
    Config,
    FaultBudgetExceeded,
    KIND_READ_ACK,
    KIND_READ_RELAY,
    KIND_WRITE_ACK,
    KIND_WRITE_REQUEST,
    Message,
    ModeMismatch,
    NotWellFormed,
    OpId,
    OpRecord,
    ProcessId,
    ROLE_READER,
    ROLE_WRITER,
    ScheduleUnresolvable,
    StuckExecution,
    Tag,
    config_from_json,
    config_to_json,
    opid_from_json,
    opid_to_json,
    parse_pid,
    tag_from_json,
    tag_less,
    tag_to_json,
    validate_config,
)
from .protocols import ProtocolBundle, get_protocol

STEP_BUDGET = 10 ** 6


@dataclass
class OpMetrics:
    kind: str
    messages: int = 0
    exchange_kinds: set[str] = field(default_factory=set)

    @property
    def exchanges(self) -> int:
        return len(self.exchange_kinds)


@dataclass
class RunResult:
    protocol: str
    config: Config
    seed: Optional[int]
    history: list[OpRecord]
    metrics: dict[OpId, OpMetrics]
    events: int
    crashed: list[ProcessId]
    invariant_failures: list[str]

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "config": config_to_json(self.config),
            "seed": self.seed,
            "events": self.events,
            "crashed": [str(p) for p in self.crashed],
            "history": [
                {
                    "op": opid_to_json(r.op),
                    "kind": r.kind,
                    "invoked": r.invoked,
                    "responded": r.responded,
                    "tag": tag_to_json(r.tag) if r.tag is not None else None,
                    "value": r.value,
                }
                for r in self.history
            ],
            "metrics": {
                str(op): {
                    "kind": m.kind,
                    "messages": m.messages,
                    "exchanges": m.exchanges,
                    "exchange_kinds": sorted(m.exchange_kinds),
                }
                for op, m in sorted(self.metrics.items(),
                                    key=lambda kv: str(kv[0]))
            },
            "invariant_failures": list(self.invariant_failures),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


class SimNet:
    def __init__(self, protocol: str, config: Config, *,
                 seed: Optional[int] = None, x: Optional[int] = None,
                 gc_relays: bool = True,
                 check_invariants: Optional[bool] = None):
        validate_config(config)
        bundle = get_protocol(protocol, x=x, gc_relays=gc_relays)
        if config.mode != bundle.mode:
            raise ModeMismatch(
                f"protocol {protocol} needs mode {bundle.mode!r}, "
                f"config says {config.mode!r}")
        self.bundle: ProtocolBundle = bundle
        self.config = config
        self.seed = seed
        self.rng = random.Random(seed) if seed is not None else None
        self.check_invariants = (bundle.checked_invariants
                                 if check_invariants is None
                                 else check_invariants)

        self.clients = {}
        for pid in config.writers():
            self.clients[pid] = bundle.make_writer(pid, config)
        for pid in config.readers():
            self.clients[pid] = bundle.make_reader(pid, config)
        self.servers = {pid: bundle.make_server(pid, config)
                        for pid in config.servers()}

        self.programs: dict[ProcessId, list] = {p: [] for p in self.clients}
        self.inflight: list[Message] = []
        self.crashed: set[ProcessId] = set()
        self.pending_crashes: list[ProcessId] = []
        self.events = 0
        self.history: list[OpRecord] = []
        self._open: dict[OpId, OpRecord] = {}
        self.metrics: dict[OpId, OpMetrics] = {}
        self.invariant_failures: list[str] = []
        # emitted-vs-received check state: largest relay tag delivered
        # to a server for a given read operation
        self._relay_high: dict[tuple[ProcessId, OpId], Tag] = {}
        self._read_acks_sent: dict[tuple[ProcessId, OpId], int] = {}

    # -- send side --

    def _send(self, msgs: list[Message]) -> None:
        for m in msgs:
            group = self.bundle.op_group(m.op)
            om = self.metrics.get(group)
            if om is None:
                rec = self._open.get(group)
                om = OpMetrics(kind=rec.kind if rec else "?")
                self.metrics[group] = om
            om.messages += 1
            om.exchange_kinds.add(m.kind)
            if m.destination not in self.crashed:
                self.inflight.append(m)

    # -- the three event kinds --

    def invoke_next(self, pid: ProcessId) -> OpId:
        kind, label = self.programs[pid].pop(0)
        machine = self.clients[pid]
        if kind == "write":
            msgs = machine.invoke_write(label)
        else:
            msgs = machine.invoke_read()
        self.events += 1
        group = self.bundle.op_group(msgs[0].op)
        # a write's value is fixed at invocation; recording it now keeps
        # histories with a pending write (client never finished) checkable
        value = None
        if kind == "write":
            value = getattr(machine, "pending_value", None) or machine.value
        rec = OpRecord(op=group, kind=kind, invoker=pid,
                       invoked=self.events, responded=None,
                       tag=None, value=value)
        self.history.append(rec)
        self._open[group] = rec
        self._send(msgs)
        return group

    def deliver(self, index: int, *, fifo: bool = False) -> None:
        if fifo:
            msg = self.inflight.pop(index)
        else:
            msg = self.inflight[index]
            self.inflight[index] = self.inflight[-1]
            self.inflight.pop()
        self.events += 1
        dest = msg.destination
        if dest in self.crashed:
            return
        if dest in self.servers:
            self._deliver_server(dest, msg)
        else:
            machine = self.clients[dest]
            outs, completion = machine.on_message(msg)
            self._send(outs)
            if completion is not None:
                self._record_completion(completion)

    def _deliver_server(self, dest: ProcessId, msg: Message) -> None:
        server = self.servers[dest]
        check = self.check_invariants
        before = server.tag if check else None
        outs = server.on_message(msg)
        if check:
            self._check_server_step(dest, server, msg, before, outs)
        self._send(outs)

    def crash(self, pid: ProcessId) -> None:
        if pid not in self.servers:
            raise ScheduleUnresolvable(f"{pid} is not a server")
        if pid in self.crashed:
            raise ScheduleUnresolvable(f"{pid} already crashed")
        if len(self.crashed) + 1 > self.config.f:
            raise FaultBudgetExceeded(
                f"crashing {pid} would exceed the fault bound f={self.config.f}")
        self.events += 1
        self.crashed.add(pid)
        self.inflight = [m for m in self.inflight if m.destination != pid]

    # -- bookkeeping --

    def _record_completion(self, completion: Completion) -> None:
        rec = self._open.get(completion.op)
        if rec is None or rec.responded is not None:
            raise NotWellFormed(f"unexpected completion for {completion.op}")
        rec.responded = self.events
        rec.tag = completion.tag
        rec.value = completion.value
        del self._open[completion.op]

    def _check_server_step(self, pid, server, msg, before, outs) -> None:
        after = server.tag
        if tag_less(after, before):
            self.invariant_failures.append(
                f"{pid}: tag moved backwards {before} -> {after}")
        if msg.kind == KIND_READ_RELAY and msg.tag is not None:
            key = (pid, msg.op)
            high = self._relay_high.get(key)
            if high is None or tag_less(high, msg.tag):
                self._relay_high[key] = msg.tag
        for out in outs:
            if out.kind == KIND_READ_ACK:
                key = (pid, out.op)
                self._read_acks_sent[key] = self._read_acks_sent.get(key, 0) + 1
                if self._read_acks_sent[key] > 1:
                    self.invariant_failures.append(
                        f"{pid}: second readAck for {out.op}")
                high = self._relay_high.get(key)
                if high is not None and tag_less(out.tag, high):
                    self.invariant_failures.append(
                        f"{pid}: readAck tag {out.tag} below received "
                        f"relay tag {high} for {out.op}")
            if (out.kind == KIND_WRITE_ACK and msg.kind == KIND_WRITE_REQUEST
                    and out.op == msg.op and msg.tag is not None
                    and tag_less(out.tag, msg.tag)):
                self.invariant_failures.append(
                    f"{pid}: writeAck tag {out.tag} below request tag "
                    f"{msg.tag} for {out.op}")

    # -- seeded execution --

    def load_program(self, pid: ProcessId, ops: list) -> None:
        self.programs[pid].extend(ops)

    def _enabled(self) -> list:
        choices = [("deliver", i) for i in range(len(self.inflight))]
        for pid, machine in self.clients.items():
            if self.programs[pid] and not machine.busy:
                choices.append(("invoke", pid))
        choices.extend(("crash", pid) for pid in self.pending_crashes)
        return choices

    def run_seeded(self) -> None:
        if self.rng is None:
            raise ModeMismatch("run_seeded needs a seed")
        while True:
            if self.events > STEP_BUDGET:
                raise StuckExecution(
                    f"step budget {STEP_BUDGET} exceeded")
            choices = self._enabled()
            if not choices:
                break
            action, arg = choices[self.rng.randrange(len(choices))]
            if action == "deliver":
                self.deliver(arg)
            elif action == "invoke":
                self.invoke_next(arg)
            else:
                self.pending_crashes.remove(arg)
                self.crash(arg)
        self._finish()

    def _finish(self) -> None:
        if self._open:
            pending = ", ".join(str(op) for op in self._open)
            raise StuckExecution(f"no event enabled, operations pending: {pending}")

    def drain(self) -> None:
        while self.inflight:
            if self.events > STEP_BUDGET:
                raise StuckExecution(f"step budget {STEP_BUDGET} exceeded")
            self.deliver(0, fifo=True)

    def result(self) -> RunResult:
        return RunResult(
            protocol=self.bundle.name, config=self.config, seed=self.seed,
            history=self.history, metrics=self.metrics, events=self.events,
            crashed=sorted(self.crashed, key=lambda p: p.sort_key()),
            invariant_failures=self.invariant_failures,
        )


# -- seeded workload construction --

_LABELS = "ABCDEFGHJKLMNPQRSTUVXYZ"


def simulate(protocol: str, config: Config, seed: int, *,
             max_ops: int = 10, max_crashes: Optional[int] = None,
             victims: Optional[list[ProcessId]] = None,
             x: Optional[int] = None,
             check_invariants: Optional[bool] = None) -> RunResult:
    """One seeded run: random small workload, random interleaving.

    The same arguments always produce the same result, bit for bit.
    Crash count is drawn from 0..max_crashes, which defaults to the
    largest count that keeps every operation live,
    min(f, floor((n-1)/2)). Passing victims pins the crash set instead;
    the seed still decides when each one falls over.
    """
    validate_config(config)
    hard_cap = (config.n_servers - 1) // 2
    if max_crashes is None:
        max_crashes = min(config.f, hard_cap)
    if victims is not None:
        if len(victims) > config.f:
            raise FaultBudgetExceeded(
                f"crash plan names {len(victims)} servers, fault bound is "
                f"{config.f}")
        unknown = [p for p in victims if p not in config.servers()]
        if unknown or len(set(victims)) != len(victims):
            raise ScheduleUnresolvable(
                f"crash plan must name distinct servers of the "
                f"configuration, got {[str(p) for p in victims]}")
    if max_crashes > config.f:
        raise FaultBudgetExceeded(
            f"requested up to {max_crashes} crashes, fault bound is {config.f}")

    # a string seed is hashed with a process-independent function, unlike
    # tuple seeds, so plans stay identical across interpreter runs
    plan_rng = random.Random(f"plan:{seed}")
    net = SimNet(protocol, config, seed=seed, x=x,
                 check_invariants=check_invariants)

    clients = list(net.clients)
    total_ops = plan_rng.randint(1, max_ops)
    label_idx = 0
    for _ in range(total_ops):
        pid = plan_rng.choice(clients)
        if pid.role == ROLE_WRITER:
            net.load_program(pid, [("write", _LABELS[label_idx % len(_LABELS)])])
            label_idx += 1
        else:
            net.load_program(pid, [("read", None)])

    if victims is not None:
        net.pending_crashes = list(victims)
    else:
        n_crashes = plan_rng.randint(0, max_crashes) if max_crashes > 0 else 0
        if n_crashes:
            net.pending_crashes = plan_rng.sample(list(net.servers), n_crashes)

    net.run_seeded()
    return net.result()


# -- scripted execution --

def parse_schedule(text: str) -> tuple[dict, list[dict]]:
    """Split a schedule file into its header and directive list.

    The format is line-delimited JSON. The first non-empty line is the
    header: {"protocol": ..., "config": {...}} plus an optional "x" and
    free-form "comment". Every further line is one directive:

      {"invoke": {"client": "w1", "kind": "write", "label": "A"}}
      {"invoke": {"client": "r1", "kind": "read"}}
      {"deliver": {"kind": "readRelay", "to": "s2", "origin": "s1", ...}}
      {"crash": {"server": "s3"}}
      {"drain": true}

    A deliver selector may constrain kind, to, from, origin, invoker and
    seq; it must match exactly one in-flight message. Remaining traffic
    is drained in send order after the last directive.
    """
    header = None
    directives = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ScheduleUnresolvable(f"line {lineno}: not JSON ({e})")
        if header is None:
            header = obj
        else:
            directives.append(obj)
    if header is None or "protocol" not in header or "config" not in header:
        raise ScheduleUnresolvable(
            "schedule header must name a protocol and a config")
    return header, directives


def _matches(msg: Message, sel: dict) -> bool:
    if "kind" in sel and msg.kind != sel["kind"]:
        return False
    if "to" in sel and str(msg.destination) != sel["to"]:
        return False
    if "from" in sel and str(msg.sender) != sel["from"]:
        return False
    if "origin" in sel:
        origin = None if msg.relay_origin is None else str(msg.relay_origin)
        if origin != sel["origin"]:
            return False
    if "invoker" in sel and str(msg.op.invoker) != sel["invoker"]:
        return False
    if "seq" in sel and msg.op.seq != sel["seq"]:
        return False
    return True


def run_script(text: str, *,
               check_invariants: Optional[bool] = None) -> RunResult:
    header, directives = parse_schedule(text)
    config = config_from_json(header["config"])
    net = SimNet(header["protocol"], config, x=header.get("x"),
                 check_invariants=check_invariants)
    for i, d in enumerate(directives, 1):
        if "invoke" in d:
            spec = d["invoke"]
            pid = parse_pid(spec["client"])
            if pid not in net.clients:
                raise ScheduleUnresolvable(
                    f"directive {i}: {spec['client']} is not a client")
            net.load_program(pid, [(spec["kind"], spec.get("label"))])
            net.invoke_next(pid)
        elif "deliver" in d:
            sel = d["deliver"]
            hits = [j for j, m in enumerate(net.inflight) if _matches(m, sel)]
            if len(hits) != 1:
                raise ScheduleUnresolvable(
                    f"directive {i}: selector {sel} matches "
                    f"{len(hits)} in-flight messages, need exactly 1")
            net.deliver(hits[0], fifo=True)
        elif "crash" in d:
            net.crash(parse_pid(d["crash"]["server"]))
        elif "drain" in d:
            net.drain()
        else:
            raise ScheduleUnresolvable(f"directive {i}: unknown form {d}")
    net.drain()
    net._finish()
    return net.result()


def replay_file(path: str, *,
                check_invariants: Optional[bool] = None) -> RunResult:
    with open(path, "r", encoding="utf-8") as fh:
        return run_script(fh.read(), check_invariants=check_invariants)


def history_from_json(obj) -> list[OpRecord]:
    """Inverse of RunResult.to_json for the history part.

    Accepts either a full run dump or a bare list of record objects.
    """
    if isinstance(obj, dict):
        obj = obj["history"]
    records = []
    for r in obj:
        op = opid_from_json(r["op"])
        records.append(OpRecord(
            op=op, kind=r["kind"],
            invoker=r.get("invoker") and parse_pid(r["invoker"]) or op.invoker,
            invoked=int(r["invoked"]),
            responded=None if r.get("responded") is None else int(r["responded"]),
            tag=tag_from_json(r.get("tag")),
            value=r.get("value"),
        ))
    return records
