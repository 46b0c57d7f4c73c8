"""Topology and run configuration.

A configuration is a flat, line-oriented text document::

    [node Alice] role=qlient p_det=0.95
    [node Qonnector] role=qonnector
    [link Qonnector Alice] length_km=0.001
    [run] protocol=bb84 participants=Qonnector,Alice duration_s=0.01 runs=200 seed=7

Key=value pairs may follow the section header on the same line or on
subsequent lines.  Unknown keys are rejected.  Hardware keys accepted on
node sections: role, f_qubit, p_qubit, p_flip, p_crosstalk, f_EPR, p_EPR,
p_EPR_multi, p_BSM, f_GHZ, p_transmit, t_gate, p_det, R_dark, dt_det,
p_fusion, eta_herald, p_depolar; fiber keys on link sections: length_km,
eta_fiber, p_coupling, p_dephase.
"""

import enum
import hashlib
from dataclasses import dataclass, field, replace

from .errors import ParseError, ValidationError
from .hardware import DetectorParams, FiberParams, HardwareParams, SourceParams


class Role(enum.Enum):
    QONNECTOR = "qonnector"
    QLIENT = "qlient"
    QOMPUTER = "qomputer"


PROTOCOLS = (
    "bb84",
    "bb84-transmitted",
    "bbm92",
    "mdi",
    "delegated",
    "ghz-share",
    "ghz-verify",
    "anon-entangle",
)

# participant count bounds per protocol
PROTOCOL_ARITY = {
    "bb84": (2, 2),
    "bb84-transmitted": (2, 2),
    "bbm92": (2, 2),
    "mdi": (2, 2),
    "delegated": (2, 2),
    "ghz-share": (3, 5),
    "ghz-verify": (3, 5),
    "anon-entangle": (3, 5),
}

_SOURCE_KEYS = {
    "f_qubit", "p_qubit", "p_flip", "f_EPR", "p_EPR", "p_EPR_multi",
    "f_GHZ", "p_fusion", "eta_herald",
}
_DETECTOR_KEYS = {"p_det", "p_crosstalk", "R_dark", "dt_det"}
_NODE_LEVEL_KEYS = {"p_transmit", "p_BSM", "t_gate", "p_depolar"}
NODE_KEYS = {"role"} | _SOURCE_KEYS | _DETECTOR_KEYS | _NODE_LEVEL_KEYS
LINK_KEYS = {"length_km", "eta_fiber", "p_coupling", "p_dephase"}
RUN_KEYS = {"protocol", "participants", "duration_s", "runs", "seed", "rounds", "travel_ns"}
_INT_RUN_KEYS = {"runs", "seed", "rounds", "travel_ns"}

_PROBABILITY_KEYS = {
    "p_qubit", "p_flip", "p_crosstalk", "p_EPR", "p_EPR_multi", "p_BSM",
    "p_transmit", "p_det", "p_fusion", "eta_herald", "p_coupling",
    "p_dephase", "p_depolar",
}


@dataclass
class NodeSpec:
    name: str
    role: Role
    hardware: HardwareParams = field(default_factory=HardwareParams)


@dataclass
class LinkSpec:
    a: str
    b: str
    fiber: FiberParams = field(default_factory=FiberParams)


@dataclass
class RunSpec:
    protocol: str
    participants: list[str]
    duration_s: float = 1e-3
    runs: int = 1
    seed: int = 0
    rounds: int = 100       # round-driven protocols (verify / anonymous)
    travel_ns: int = 1

    def validate(self):
        if self.protocol not in PROTOCOLS:
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        lo, hi = PROTOCOL_ARITY[self.protocol]
        if not lo <= len(self.participants) <= hi:
            raise ValidationError(
                f"{self.protocol} takes {lo}..{hi} participants, got {len(self.participants)}"
            )
        if self.duration_s <= 0:
            raise ValidationError("duration_s must be positive")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


class Topology:
    """Validated star network: one qonnector, leaf nodes linked to it."""

    def __init__(self, nodes: list[NodeSpec], links: list[LinkSpec]):
        self.nodes = {n.name: n for n in nodes}
        self.links = list(links)
        self._by_lower = {n.name.lower(): n.name for n in nodes}
        self._validate()

    def _validate(self):
        names = [n for n in self.nodes]
        if len(set(n.lower() for n in names)) != len(names):
            raise ValidationError("node names must be unique")
        qonnectors = [n for n in self.nodes.values() if n.role == Role.QONNECTOR]
        if len(qonnectors) != 1:
            raise ValidationError(
                f"a city needs exactly one qonnector, found {len(qonnectors)}"
            )
        hub = qonnectors[0].name
        link_count: dict[str, int] = {}
        for link in self.links:
            for end in (link.a, link.b):
                if end not in self.nodes:
                    raise ValidationError(f"link endpoint {end!r} is not a node")
            if hub not in (link.a, link.b):
                raise ValidationError(
                    f"link {link.a}-{link.b} does not terminate at the qonnector"
                )
            if link.a == link.b:
                raise ValidationError("link endpoints must differ")
            if link.fiber.length_km < 0:
                raise ValidationError("length_km must be non-negative")
            leaf = link.b if link.a == hub else link.a
            link_count[leaf] = link_count.get(leaf, 0) + 1
        for node in self.nodes.values():
            if node.role == Role.QONNECTOR:
                continue
            if link_count.get(node.name, 0) != 1:
                raise ValidationError(
                    f"{node.name} must have exactly one link to the qonnector"
                )
        for node in self.nodes.values():
            _validate_hardware(node.hardware, node.name)

    # -- lookups -----------------------------------------------------------

    def qonnector(self) -> NodeSpec:
        return next(n for n in self.nodes.values() if n.role == Role.QONNECTOR)

    def node(self, name: str) -> NodeSpec:
        canonical = self._by_lower.get(name.lower())
        if canonical is None:
            raise ValidationError(f"unknown node {name!r}")
        return self.nodes[canonical]

    def link_for(self, leaf_name: str) -> LinkSpec:
        leaf = self.node(leaf_name).name
        hub = self.qonnector().name
        for link in self.links:
            if {link.a, link.b} == {leaf, hub}:
                return link
        raise ValidationError(f"no link between {leaf} and the qonnector")

    def stream_id(self, name: str) -> int:
        """Stable per-node stream id; adding nodes never changes others."""
        digest = hashlib.blake2b(self.node(name).name.encode(), digest_size=8).digest()
        return int.from_bytes(digest, "little")

    def copy(self) -> "Topology":
        return Topology(
            [NodeSpec(n.name, n.role, n.hardware.copy()) for n in self.nodes.values()],
            [LinkSpec(l.a, l.b, replace(l.fiber)) for l in self.links],
        )

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            {n: (s.role, s.hardware) for n, s in self.nodes.items()}
            == {n: (s.role, s.hardware) for n, s in other.nodes.items()}
            and self.links == other.links
        )


def _validate_hardware(hw: HardwareParams, name: str):
    src, det = hw.source, hw.detector
    for key, value in [
        ("p_qubit", src.p_qubit), ("p_flip", src.p_flip), ("p_EPR", src.p_EPR),
        ("p_EPR_multi", src.p_EPR_multi), ("p_fusion", src.p_fusion),
        ("eta_herald", src.eta_herald), ("p_det", det.p_det),
        ("p_crosstalk", det.p_crosstalk), ("p_transmit", hw.p_transmit),
        ("p_BSM", hw.p_BSM), ("p_depolar", hw.p_depolar),
    ]:
        if not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name}: {key}={value} outside [0, 1]")
    for key, value in [("f_qubit", src.f_qubit), ("f_EPR", src.f_EPR), ("f_GHZ", src.f_GHZ)]:
        if value <= 0:
            raise ValidationError(f"{name}: {key} must be positive")
    det.p_dark  # range-checked in the property


def _set_node_key(hw: HardwareParams, key: str, value: float):
    if key in _SOURCE_KEYS:
        setattr(hw.source, key, value)
    elif key in _DETECTOR_KEYS:
        setattr(hw.detector, key, value)
    else:
        setattr(hw, key, value)


def _get_node_key(hw: HardwareParams, key: str) -> float:
    if key in _SOURCE_KEYS:
        return getattr(hw.source, key)
    if key in _DETECTOR_KEYS:
        return getattr(hw.detector, key)
    return getattr(hw, key)


def parse_config(text: str) -> tuple[Topology, RunSpec | None]:
    """Parse a configuration document into a validated topology and the
    optional run section."""
    nodes: list[NodeSpec] = []
    links: list[LinkSpec] = []
    run_kv: dict[str, str] | None = None
    section = None  # ("node", NodeSpec) | ("link", LinkSpec) | ("run", dict)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            end = line.find("]")
            if end < 0:
                raise ParseError("unterminated section header", lineno)
            header = line[1:end].split()
            rest = line[end + 1:].strip()
            if not header:
                raise ParseError("empty section header", lineno)
            kind = header[0]
            if kind == "node":
                if len(header) != 2:
                    raise ParseError("node section needs exactly one name", lineno)
                node = NodeSpec(header[1], Role.QLIENT)
                nodes.append(node)
                section = ("node", node)
            elif kind == "link":
                if len(header) != 3:
                    raise ParseError("link section needs two endpoint names", lineno)
                link = LinkSpec(header[1], header[2])
                links.append(link)
                section = ("link", link)
            elif kind == "run":
                if run_kv is not None:
                    raise ParseError("duplicate run section", lineno)
                run_kv = {}
                section = ("run", run_kv)
            else:
                raise ParseError(f"unknown section kind {kind!r}", lineno)
            pairs = rest.split() if rest else []
        else:
            if section is None:
                raise ParseError("key=value before any section header", lineno)
            pairs = line.split()

        for pair in pairs:
            if "=" not in pair:
                raise ParseError(f"expected key=value, got {pair!r}", lineno)
            key, value = pair.split("=", 1)
            _apply_pair(section, key, value, lineno)

    topology = Topology(nodes, links)
    runspec = _build_runspec(run_kv) if run_kv is not None else None
    return topology, runspec


def _apply_pair(section, key, value, lineno):
    kind, target = section
    if kind == "node":
        if key not in NODE_KEYS:
            raise ParseError(f"unknown node key {key!r}", lineno)
        if key == "role":
            try:
                target.role = Role(value)
            except ValueError:
                raise ParseError(f"unknown role {value!r}", lineno) from None
        else:
            _set_node_key(target.hardware, key, _number(key, value, lineno))
    elif kind == "link":
        if key not in LINK_KEYS:
            raise ParseError(f"unknown link key {key!r}", lineno)
        setattr(target.fiber, key, _number(key, value, lineno))
    else:
        if key not in RUN_KEYS:
            raise ParseError(f"unknown run key {key!r}", lineno)
        target[key] = value


def _number(key, value, lineno) -> float:
    try:
        number = float(value)
    except ValueError:
        raise ParseError(f"{key}: not a number: {value!r}", lineno) from None
    if key in _PROBABILITY_KEYS and not 0.0 <= number <= 1.0:
        raise ParseError(f"{key}={number} outside [0, 1]", lineno)
    return number


def _build_runspec(kv: dict[str, str]) -> RunSpec:
    if "protocol" not in kv or "participants" not in kv:
        raise ValidationError("run section needs protocol= and participants=")
    spec = RunSpec(
        protocol=kv["protocol"],
        participants=[p for p in kv["participants"].split(",") if p],
    )
    for key, value in kv.items():
        if key in ("protocol", "participants"):
            continue
        if key in _INT_RUN_KEYS:
            spec.__setattr__(key, int(value))
        else:
            spec.__setattr__(key, float(value))
    spec.validate()
    return spec


def serialize(topology: Topology, runspec: RunSpec | None = None) -> str:
    """Render a topology (and optional run) back to config text; the result
    parses to an equal topology."""
    defaults = HardwareParams()
    fiber_defaults = FiberParams()
    out = []
    for node in topology.nodes.values():
        parts = [f"[node {node.name}] role={node.role.value}"]
        for key in sorted(NODE_KEYS - {"role"}):
            value = _get_node_key(node.hardware, key)
            if value != _get_node_key(defaults, key):
                parts.append(f"{key}={value!r}")
        out.append(" ".join(parts))
    for link in topology.links:
        parts = [f"[link {link.a} {link.b}] length_km={link.fiber.length_km!r}"]
        for key in sorted(LINK_KEYS - {"length_km"}):
            value = getattr(link.fiber, key)
            if value != getattr(fiber_defaults, key):
                parts.append(f"{key}={value!r}")
        out.append(" ".join(parts))
    if runspec is not None:
        out.append(
            f"[run] protocol={runspec.protocol} "
            f"participants={','.join(runspec.participants)} "
            f"duration_s={runspec.duration_s!r} runs={runspec.runs} "
            f"seed={runspec.seed} rounds={runspec.rounds} travel_ns={runspec.travel_ns}"
        )
    return "\n".join(out) + "\n"


PARIS_DISTANCES_KM = {
    "Alice": 0.001,
    "Bob": 3.0,
    "Charlie": 6.0,
    "Dina": 18.0,
    "Erika": 31.0,
}


def paris_preset() -> Topology:
    """Five leaf nodes at line-of-sight fiber distances from a hub at the
    Alice site; baseline hardware everywhere.  Erika doubles as the compute
    node so delegated transmission has a target."""
    nodes = [NodeSpec("Qonnector", Role.QONNECTOR)]
    links = []
    for name, km in PARIS_DISTANCES_KM.items():
        role = Role.QOMPUTER if name == "Erika" else Role.QLIENT
        nodes.append(NodeSpec(name, role))
        links.append(LinkSpec("Qonnector", name, FiberParams(length_km=km)))
    return Topology(nodes, links)


def modified_preset() -> Topology:
    """Paris preset with heterogeneous hardware: Bob keeps the best detector
    but a weak transmitter, Dina the reverse, Charlie both degradations."""
    topology = paris_preset()
    weak_source = dict(p_qubit=5e-3, p_flip=0.01)
    weak_detector = dict(p_det=0.85, p_crosstalk=1e-2, R_dark=1e4, dt_det=500e-12)
    for name, values in [
        ("Bob", weak_source),
        ("Dina", weak_detector),
        ("Charlie", {**weak_source, **weak_detector}),
    ]:
        hw = topology.node(name).hardware
        for key, value in values.items():
            _set_node_key(hw, key, value)
    return topology


PRESETS = {"paris": paris_preset, "paris-modified": modified_preset}
