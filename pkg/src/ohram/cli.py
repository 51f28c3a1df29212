"""Command-line front end.

Subcommands:

  simulate   seeded or sequential simulated run, checked for atomicity
  replay     replay a scripted schedule file and check the history
  check      check a previously dumped history file
  bench      failure-free message/exchange grid against the closed forms
  serve      run one live TCP server daemon
  client     run operations against live servers

Exit codes are script-friendly: 0 success/atomic, 2 non-atomic or a
failed benchmark, 3 liveness failure (stuck execution, unreachable
quorum), 4 unusable configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from typing import Optional

from . import __version__
from .checker import BRUTE_MAX_OPS, Verdict, check_bruteforce, check_witness
from .core import (
    Config,
    FaultBudgetExceeded,
    HistoryTooLarge,
    InvalidFaultBound,
    ModeMismatch,
    NotWellFormed,
    OpRecord,
    QuorumUnreachable,
    ScheduleUnresolvable,
    StuckExecution,
    UntaggedHistory,
    parse_pid,
    ROLE_READER,
    ROLE_WRITER,
)
from .protocols import PROTOCOL_NAMES, get_protocol
from .runner import Client, ServerDaemon, membership_from_json
from .simnet import (
    RunResult,
    SimNet,
    history_from_json,
    replay_file,
    simulate,
)

EXIT_OK = 0
EXIT_NON_ATOMIC = 2
EXIT_LIVENESS = 3
EXIT_CONFIG = 4

_CONFIG_ERRORS = (InvalidFaultBound, ModeMismatch, NotWellFormed,
                  ScheduleUnresolvable, FaultBudgetExceeded,
                  UntaggedHistory, HistoryTooLarge, ValueError, OSError)


def _config_from_args(args, protocol: str) -> Config:
    mode = get_protocol(protocol).mode
    return Config(n_servers=args.servers, n_readers=args.readers,
                  n_writers=args.writers, f=args.f, mode=mode)


def _print_history(result: RunResult) -> None:
    for rec in result.history:
        resp = "pending" if rec.responded is None else str(rec.responded)
        print(f"  {rec.op}  {rec.kind:5s}  invoked={rec.invoked} "
              f"responded={resp}  tag={rec.tag}  value={rec.value!r}")


def _print_metrics(result: RunResult) -> None:
    for op, m in sorted(result.metrics.items(), key=lambda kv: str(kv[0])):
        print(f"  {op}  {m.kind:5s}  messages={m.messages} "
              f"exchanges={m.exchanges} ({', '.join(sorted(m.exchange_kinds))})")


def _verdicts(history: list[OpRecord]) -> tuple[Verdict, Optional[Verdict]]:
    """Primary verdict plus the witness one when both apply.

    Small histories get the exhaustive verdict, which is meaningful for
    every protocol; larger ones fall back to the tag conditions.
    """
    countable = sum(1 for r in history
                    if r.responded is not None or r.kind == "write")
    if countable <= BRUTE_MAX_OPS:
        return check_bruteforce(history), None
    return check_witness(history), None


def _report(result: RunResult, dump_path: Optional[str]) -> int:
    print("history:")
    _print_history(result)
    print("metrics:")
    _print_metrics(result)
    if result.crashed:
        print("crashed:", ", ".join(str(p) for p in result.crashed))
    if dump_path:
        with open(dump_path, "w", encoding="utf-8") as fh:
            fh.write(result.dumps() + "\n")
        print(f"wrote {dump_path}")
    if result.invariant_failures:
        for line in result.invariant_failures:
            print("INVARIANT FAILURE:", line)
        return EXIT_NON_ATOMIC
    verdict, _ = _verdicts(result.history)
    return _verdict_exit(verdict)


def _verdict_exit(verdict: Verdict) -> int:
    if verdict.atomic:
        print(f"ATOMIC ({verdict.method})")
        return EXIT_OK
    pair = ""
    if verdict.witness:
        pair = " pair: " + " -> ".join(str(o) for o in verdict.witness)
    print(f"NON-ATOMIC ({verdict.method}): {verdict.reason}{pair}")
    return EXIT_NON_ATOMIC


# -- simulate --

def _parse_ops(spec: str) -> list[tuple]:
    """"w1,r1,w1=A" -> [(w1, write, auto), (r1, read), (w1, write, "A")]"""
    ops = []
    for i, token in enumerate(s.strip() for s in spec.split(",") if s.strip()):
        pid_text, _, label = token.partition("=")
        pid = parse_pid(pid_text)
        if pid.role == ROLE_WRITER:
            ops.append((pid, "write", label or chr(ord("A") + i % 26)))
        elif pid.role == ROLE_READER:
            if label:
                raise ValueError(f"read op {token!r} cannot carry a label")
            ops.append((pid, "read", None))
        else:
            raise ValueError(f"{pid} is not a client")
    return ops


def _parse_crash_plan(plan: Optional[str]):
    """Either a count ("2") or explicit victims ("s2,s3")."""
    if plan is None:
        return None, None
    if plan.isdigit():
        return int(plan), None
    return None, [parse_pid(t.strip()) for t in plan.split(",") if t.strip()]


def cmd_simulate(args) -> int:
    config = _config_from_args(args, args.protocol)
    max_crashes, victims = _parse_crash_plan(args.crash_plan)
    if args.ops:
        if args.crash_plan:
            raise ScheduleUnresolvable(
                "--crash-plan applies to seeded runs, not --ops")
        net = SimNet(args.protocol, config, seed=args.seed, x=args.x)
        for pid, kind, label in _parse_ops(args.ops):
            if pid not in net.clients:
                raise ModeMismatch(f"{pid} is outside the configuration")
            net.load_program(pid, [(kind, label)])
            net.invoke_next(pid)
            net.drain()
        net._finish()
        result = net.result()
    else:
        result = simulate(args.protocol, config, args.seed,
                          max_ops=args.max_ops, max_crashes=max_crashes,
                          victims=victims, x=args.x)
    print(f"protocol={result.protocol} seed={result.seed} "
          f"events={result.events}")
    return _report(result, args.out)


def cmd_replay(args) -> int:
    result = replay_file(args.schedule)
    print(f"protocol={result.protocol} events={result.events}")
    return _report(result, args.out)


def cmd_check(args) -> int:
    with open(args.history, "r", encoding="utf-8") as fh:
        history = history_from_json(json.load(fh))
    verdict, _ = _verdicts(history)
    return _verdict_exit(verdict)


# -- bench --

def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.servers.split(",")]
    names = [t.strip() for t in args.protocols.split(",") if t.strip()]
    failures = 0
    for name in names:
        bundle = get_protocol(name)
        n_writers = 1 if bundle.mode == "swmr" else 2
        for n in sizes:
            config = Config(n_servers=n, n_readers=1, n_writers=n_writers,
                            f=(n - 1) // 2, mode=bundle.mode)
            net = SimNet(name, config, seed=0)
            net.load_program(config.writers()[0], [("write", "A")])
            net.load_program(config.readers()[0], [("read", None)])
            net.run_seeded()
            result = net.result()
            got = {m.kind: m for m in result.metrics.values()}
            checks = [
                ("write msgs", got["write"].messages, bundle.write_messages(n)),
                ("write exch", got["write"].exchanges, bundle.write_exchanges),
                ("read msgs", got["read"].messages, bundle.read_messages(n)),
                ("read exch", got["read"].exchanges, bundle.read_exchanges),
            ]
            bad = [f"{label} {have} != {want}"
                   for label, have, want in checks if have != want]
            if bad:
                failures += 1
                print(f"FAIL  {name:9s} n={n}: " + "; ".join(bad))
            else:
                print(f"PASS  {name:9s} n={n}: "
                      f"write {got['write'].exchanges} exchanges "
                      f"/ {got['write'].messages} msgs, "
                      f"read {got['read'].exchanges} exchanges "
                      f"/ {got['read'].messages} msgs")
    return EXIT_NON_ATOMIC if failures else EXIT_OK


# -- live network --

def _load_membership(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return membership_from_json(json.load(fh))


def cmd_serve(args) -> int:
    config = _config_from_args(args, args.protocol)
    pid = parse_pid(args.pid)
    host, port = None, 0
    if args.listen:
        host, _, port_text = args.listen.rpartition(":")
        port = int(port_text)
        host = host or None
    daemon = ServerDaemon(pid, config, args.protocol, host=host, port=port)
    membership = _load_membership(args.membership)
    membership[pid] = daemon.address
    daemon.start(membership)
    print(f"{pid} listening on {daemon.address[0]}:{daemon.port}",
          flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        daemon.stop()
    return EXIT_OK


def _parse_client_ops(spec: str) -> list[tuple]:
    """"w:A,r,w" -> [("write", "A"), ("read", None), ("write", auto)]"""
    ops = []
    for i, token in enumerate(s.strip() for s in spec.split(",") if s.strip()):
        head, _, label = token.partition(":")
        if head == "w":
            ops.append(("write", label or chr(ord("A") + i % 26)))
        elif head == "r":
            ops.append(("read", None))
        else:
            raise ValueError(f"bad op token {token!r}, want w[:LABEL] or r")
    return ops


def cmd_client(args) -> int:
    config = _config_from_args(args, args.protocol)
    pid = parse_pid(args.pid)
    if pid.role not in (ROLE_READER, ROLE_WRITER):
        raise ModeMismatch(f"{pid} is not a client")
    client = Client(pid, config, args.protocol,
                    _load_membership(args.membership),
                    retry_interval=args.retry_interval,
                    retry_budget=args.retry_budget)
    try:
        for kind, label in _parse_client_ops(args.ops):
            if kind == "write":
                rec = client.write(label)
            else:
                rec = client.read()
            print(f"{rec.op}  {kind}  tag={rec.tag}  value={rec.value!r}")
    finally:
        client.close()
    if args.out:
        dump = [{
            "op": {"invoker": str(r.op.invoker), "seq": r.op.seq},
            "kind": r.kind, "invoked": r.invoked, "responded": r.responded,
            "tag": None if r.tag is None else {"ts": r.tag.ts,
                                               "wid": str(r.tag.wid)},
            "value": r.value,
        } for r in client.history]
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"history": dump}, fh)
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ohram",
        description="Quorum register emulations: simulate, check, serve.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, with_clients=True):
        p.add_argument("--protocol", default="ohsam", choices=PROTOCOL_NAMES)
        p.add_argument("--servers", type=int, default=3)
        p.add_argument("--f", type=int, default=1)
        if with_clients:
            p.add_argument("--readers", type=int, default=1)
            p.add_argument("--writers", type=int, default=1)

    p = sub.add_parser("simulate", help="run one simulated execution")
    add_config_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ops", help='sequential ops, e.g. "w1,r1,w1=A"')
    p.add_argument("--max-ops", type=int, default=10)
    p.add_argument("--crash-plan", default=None,
                   help='crash count ("2") or victims ("s2,s3") '
                        "for seeded runs")
    p.add_argument("--x", type=int, default=None,
                   help="decision threshold of the unsound protocol")
    p.add_argument("--out", help="dump the full run result to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="replay a scripted schedule file")
    p.add_argument("schedule")
    p.add_argument("--out", help="dump the full run result to this file")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("check", help="check a dumped history file")
    p.add_argument("history")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="verify the complexity grid")
    p.add_argument("--servers", default="3,5,7")
    p.add_argument("--protocols",
                   default="ohsam,ohmam,abd-swmr,abd-mwmr",
                   help="comma list; naive3x joins only when named")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run one live server daemon")
    add_config_flags(p)
    p.add_argument("--pid", required=True)
    p.add_argument("--membership", required=True,
                   help='JSON file {"s1": "host:port", ...}')
    p.add_argument("--listen", help="host:port to bind (port 0 = ephemeral)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("client", help="run live operations")
    add_config_flags(p)
    p.add_argument("--pid", required=True)
    p.add_argument("--membership", required=True)
    p.add_argument("--ops", required=True, help='e.g. "w:A,r"')
    p.add_argument("--retry-interval", type=float, default=0.05)
    p.add_argument("--retry-budget", type=int, default=100)
    p.add_argument("--out", help="dump the client history to this file")
    p.set_defaults(func=cmd_client)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StuckExecution as e:
        print(f"STUCK: {e}", file=sys.stderr)
        return EXIT_LIVENESS
    except QuorumUnreachable as e:
        print(f"NO QUORUM: {e}", file=sys.stderr)
        return EXIT_LIVENESS
    except _CONFIG_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
