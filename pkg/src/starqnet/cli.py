"""Command-line front end: presets or config in, result tables out."""

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import protocols
from .errors import ParseError, StarqnetError, TopologyError, ValidationError
from .netconfig import (
    LINK_KEYS,
    NODE_KEYS,
    PRESETS,
    PROTOCOLS,
    RunSpec,
    Topology,
    _set_node_key,
    parse_config,
)

CSV_HEADER = "protocol,participants,rate_per_s,throughput,qber_percent,runs,ci_halfwidth"


@dataclass
class OutputRow:
    protocol: str
    participants: str
    rate_per_s: float | None
    throughput: float | None
    qber_percent: float | None
    runs: int
    ci_halfwidth: float

    def as_dict(self):
        return {
            "protocol": self.protocol,
            "participants": self.participants,
            "rate_per_s": _num(self.rate_per_s),
            "throughput": _num(self.throughput),
            "qber_percent": _num(self.qber_percent),
            "runs": self.runs,
            "ci_halfwidth": _num(self.ci_halfwidth),
        }


def _num(x):
    if x is None:
        return None
    return float(f"{x:.6g}")


def _fmt(x):
    return "" if x is None else f"{x:.6g}"


def emit(rows: list[OutputRow], fmt: str = "csv") -> bytes:
    """Render rows deterministically; numbers carry 6 significant digits."""
    if fmt == "csv":
        lines = [CSV_HEADER]
        for row in rows:
            lines.append(
                ",".join(
                    [
                        row.protocol,
                        row.participants,
                        _fmt(row.rate_per_s),
                        _fmt(row.throughput),
                        _fmt(row.qber_percent),
                        str(row.runs),
                        _fmt(row.ci_halfwidth),
                    ]
                )
            )
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json-lines":
        return (
            "\n".join(json.dumps(row.as_dict(), sort_keys=True) for row in rows) + "\n"
        ).encode()
    raise ValidationError(f"unknown format {fmt!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starqnet",
        description="Simulate quantum network protocols on a star topology.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="configuration file path")
    source.add_argument("--preset", choices=sorted(PRESETS), help="bundled topology")
    parser.add_argument("--protocol", choices=PROTOCOLS)
    parser.add_argument("--from", dest="sender", help="sending node (pair protocols)")
    parser.add_argument("--to", dest="receiver", help="receiving node (pair protocols)")
    parser.add_argument(
        "--participants", help="comma-separated node list (multiparty protocols)"
    )
    parser.add_argument("--duration-ms", type=float, default=None)
    parser.add_argument("--runs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--rounds", type=int, default=None,
                        help="round count for ghz-verify / anon-entangle")
    parser.add_argument("--format", choices=["csv", "json-lines"], default="csv")
    parser.add_argument("--output", help="write results here instead of stdout")
    parser.add_argument("--sweep", help="KEY=START:STOP:STEP parameter sweep")
    parser.add_argument("--curve", help="write a (time_s, cumulative_bits) series here")
    parser.add_argument("--curve-points", type=int, default=20)
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel worker processes for --runs")
    parser.add_argument("--verbose", action="store_true")
    return parser


def _load(args) -> tuple[Topology, RunSpec]:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            topology, spec = parse_config(fh.read())
        if spec is None:
            spec = RunSpec("bb84", [])
    else:
        topology = PRESETS[args.preset or "paris"]()
        spec = RunSpec("bb84", [])

    if args.protocol:
        spec.protocol = args.protocol
    if args.sender or args.receiver:
        spec.participants = [args.sender or "qonnector", args.receiver or "alice"]
    elif args.participants:
        spec.participants = [p for p in args.participants.split(",") if p]
    elif not spec.participants:
        spec.participants = ["qonnector", "alice"]
    if args.duration_ms is not None:
        spec.duration_s = args.duration_ms * 1e-3
    if args.runs is not None:
        spec.runs = args.runs
    if args.seed is not None:
        spec.seed = args.seed
    if args.rounds is not None:
        spec.rounds = args.rounds
    spec.validate()
    return topology, spec


def _sweep_values(sweep: str) -> tuple[str, list[float]]:
    try:
        key, rng = sweep.split("=", 1)
        start, stop, step = (float(x) for x in rng.split(":"))
    except ValueError:
        raise ValidationError("--sweep expects KEY=START:STOP:STEP") from None
    if step <= 0 or stop < start:
        raise ValidationError("--sweep needs step > 0 and stop >= start")
    count = int((stop - start) / step + 1e-9) + 1
    return key, [start + i * step for i in range(count)]


def _apply_sweep(topology: Topology, key: str, value: float) -> Topology:
    out = topology.copy()
    if key in LINK_KEYS:
        for link in out.links:
            setattr(link.fiber, key, value)
    elif key in NODE_KEYS and key != "role":
        for node in out.nodes.values():
            _set_node_key(node.hardware, key, value)
    else:
        raise ValidationError(f"--sweep key {key!r} is not a hardware or fiber key")
    return Topology(list(out.nodes.values()), out.links)


def _participants_label(spec: RunSpec, topology: Topology) -> str:
    names = [topology.node(p).name for p in spec.participants]
    if spec.protocol in ("bb84", "bb84-transmitted", "bbm92", "mdi", "delegated"):
        return ">".join(names)
    return "+".join(names)


def execute(topology: Topology, spec: RunSpec, workers: int = 1, keep_records: bool = False):
    """Run one protocol configuration; returns (OutputRow, stats-or-None)."""
    label = _participants_label(spec, topology)
    pair = spec.participants[:2]
    if spec.protocol == "bb84":
        stats = protocols.repeat_runs(
            protocols.run_bb84, spec.runs, spec.seed, workers,
            topology=topology, sender=pair[0], receiver=pair[1],
            duration_s=spec.duration_s, keep_records=keep_records,
        )
    elif spec.protocol == "bb84-transmitted":
        stats = protocols.repeat_runs(
            protocols.run_bb84_transmitted, spec.runs, spec.seed, workers,
            topology=topology, sender=pair[0], receiver=pair[1],
            duration_s=spec.duration_s, keep_records=keep_records,
        )
    elif spec.protocol == "bbm92":
        stats = protocols.repeat_runs(
            protocols.run_bbm92, spec.runs, spec.seed, workers,
            topology=topology, qlient_a=pair[0], qlient_b=pair[1],
            duration_s=spec.duration_s, keep_records=keep_records,
        )
    elif spec.protocol == "mdi":
        stats = protocols.repeat_runs(
            protocols.run_mdi_qkd, spec.runs, spec.seed, workers,
            topology=topology, qlient_a=pair[0], qlient_b=pair[1],
            duration_s=spec.duration_s,
        )
    elif spec.protocol == "delegated":
        stats = protocols.repeat_runs(
            protocols.run_delegated_transmission, spec.runs, spec.seed, workers,
            topology=topology, qlient=pair[0], qomputer=pair[1],
            duration_s=spec.duration_s, keep_records=keep_records,
        )
    elif spec.protocol == "ghz-share":
        stats = protocols.repeat_runs(
            protocols.run_ghz_share, spec.runs, spec.seed, workers,
            topology=topology, qlients=spec.participants, duration_s=spec.duration_s,
        )
    elif spec.protocol == "ghz-verify":
        vstats = protocols.run_ghz_verification(
            topology, spec.participants, spec.participants[0],
            rounds=spec.rounds, seed=spec.seed,
        )
        row = OutputRow(
            spec.protocol, label,
            vstats.rounds / vstats.simulated_seconds if vstats.simulated_seconds else None,
            vstats.accept_fraction, None, spec.runs, 0.0,
        )
        return row, None
    elif spec.protocol == "anon-entangle":
        astats = protocols.run_anonymous_entanglement(
            topology, spec.participants, spec.participants[0], spec.participants[1],
            rounds=spec.rounds, seed=spec.seed,
        )
        row = OutputRow(
            spec.protocol, label, None, astats.mean_fidelity, None, spec.runs, 0.0
        )
        return row, None
    else:  # pragma: no cover - arity validated earlier
        raise ValidationError(f"unknown protocol {spec.protocol!r}")

    qber_percent = None if stats.qber is None else 100.0 * stats.qber
    row = OutputRow(
        spec.protocol, label, stats.sifted_rate_per_s, stats.throughput,
        qber_percent, spec.runs, stats.rate_ci_halfwidth(),
    )
    return row, stats


def _curve_bytes(topology: Topology, spec: RunSpec, points: int) -> bytes:
    """Average cumulative sifted/delivered bits over time across runs."""
    if spec.protocol in ("ghz-verify", "anon-entangle"):
        raise ValidationError(f"--curve is not defined for {spec.protocol}")
    edges = np.linspace(0.0, spec.duration_s, points + 1)[1:]
    totals = np.zeros(points)
    for i in range(spec.runs):
        one = RunSpec(spec.protocol, spec.participants, spec.duration_s, 1,
                      spec.seed + i, spec.rounds, spec.travel_ns)
        if spec.protocol == "ghz-share":
            _, rounds = protocols.run_ghz_share(
                topology, spec.participants, spec.duration_s, seed=spec.seed + i
            )
            step_times = rounds.steps / _ghz_frequency(topology)
        else:
            _, stats = execute(topology, one, keep_records=True)
            step_times = np.asarray(stats.records[-1].steps) / _pair_frequency(topology, one)
        totals += np.searchsorted(np.sort(step_times), edges, side="right")
    totals /= spec.runs
    lines = ["time_s,cumulative_bits"]
    lines += [f"{t:.6g},{v:.6g}" for t, v in zip(edges, totals)]
    return ("\n".join(lines) + "\n").encode()


def _ghz_frequency(topology):
    return topology.qonnector().hardware.source.f_GHZ


def _pair_frequency(topology, spec):
    if spec.protocol == "bbm92":
        return topology.qonnector().hardware.source.f_EPR
    return topology.node(spec.participants[0]).hardware.source.f_qubit


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        topology, spec = _load(args)
        rows = []
        if args.sweep:
            key, values = _sweep_values(args.sweep)
            for value in values:
                swept = _apply_sweep(topology, key, value)
                row, stats = execute(swept, spec, args.workers)
                row.participants += f"@{key}={value:g}"
                rows.append(row)
                _maybe_verbose(args, stats)
        else:
            row, stats = execute(topology, spec, args.workers)
            rows.append(row)
            _maybe_verbose(args, stats)
        payload = emit(rows, args.format)
        if args.output:
            with open(args.output, "wb") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload.decode())
        if args.curve:
            with open(args.curve, "wb") as fh:
                fh.write(_curve_bytes(topology, spec, args.curve_points))
        return 0
    except (ParseError, ValidationError, TopologyError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except StarqnetError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 2


def _maybe_verbose(args, stats):
    if args.verbose and stats is not None:
        for run in stats.per_run:
            print(
                f"# run seed={run.seed} sifted={run.sifted_bits} "
                f"uses={run.channel_uses} flips={run.flipped_bits}",
                file=sys.stderr,
            )


if __name__ == "__main__":
    sys.exit(main())
