"""Deterministic simulated CAN bus with ECU nodes.

The bus is a single logical clock broadcasting frames to every node in a
fixed order; there is no arbitration or bit-level modeling. Identical
scenarios (including the seed) produce byte-identical traces, which the
test suite relies on.

Scenario files are JSON documents:

    {
      "seed": 42,
      "profile": "path/to.profile" | {"authInfoTruncLength": 24, ...},
      "keys": {"material": {...}, "channels": {...}},
      "nodes": [
        {"id": "engine", "role": "sender"},
        {"id": "dash", "role": "receiver", "subscribe": ["0x123"]},
        {"id": "gw", "role": "gateway", "forward": {"0x123": "0x223"},
         "fast_path": false}
      ],
      "traffic": [{"tick": 0, "node": "engine", "id": "0x123",
                   "payload": "AABBCCDDEE" | "random"}],
      "drops": [2],
      "attack": [{"tick": 3, "kind": "inject", "id": "0x123", "data": "..16 hex.."},
                 {"tick": 4, "kind": "replay", "event": 0},
                 {"tick": 5, "kind": "tamper", "event": 1, "bit": 17}]
    }

Frame loss is modeled by listing transmission sequence numbers in
``drops``; the frame is transmitted (and traced) but delivered to nobody.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from collections import Counter
from dataclasses import dataclass, field

from . import codec
from .codec import CanFrame
from .errors import CinnamonError, ScenarioInvalid
from .freshness import FreshnessState
from .keystore import KeyStore
from .profiles import SecurityProfile, load_profile

ROLES = ("sender", "receiver", "gateway")

ATTACKER = "attacker"


@dataclass(frozen=True)
class BusEvent:
    """One frame transmission, totally ordered by (tick, seq)."""

    tick: int
    seq: int
    origin: str
    frame: CanFrame


@dataclass(frozen=True)
class Decision:
    """Outcome of one receive-path verification (or a bus-level drop)."""

    tick: int
    seq: int
    node: str
    can_id: int
    accepted: bool
    reason: str | None = None
    payload_hex: str | None = None


class EcuNode:
    """One simulated ECU: a sender, a verifying receiver, or a
    re-authentication gateway bridging two CAN IDs."""

    def __init__(
        self,
        node_id: str,
        role: str,
        profile: SecurityProfile | None,
        keys: KeyStore | None,
        subscribe: tuple[int, ...] = (),
        forward: dict[int, int] | None = None,
        fast_path: bool = False,
        retry_window: int = 0,
    ):
        if role not in ROLES:
            raise ScenarioInvalid(f"node {node_id!r}: unknown role {role!r}")
        self.node_id = node_id
        self.role = role
        self.profile = profile
        self.keys = keys
        self.subscribe = tuple(subscribe)
        self.forward = dict(forward or {})
        self.fast_path = fast_path
        self.retry_window = retry_window
        self.accepted = 0
        self.rejected = 0
        self.reject_reasons: Counter = Counter()
        self.observed_payloads: list[bytes] = []
        self._send_states: dict[int, FreshnessState] = {}
        self._recv_states: dict[int, FreshnessState] = {}

    def __repr__(self):
        return f"EcuNode({self.node_id!r}, role={self.role!r})"

    def _state(self, states: dict, can_id: int) -> FreshnessState | None:
        if self.profile is None or not self.profile.uses_freshness:
            return None
        state = states.get(can_id)
        if state is None:
            state = FreshnessState.for_profile(
                can_id, self.profile, retry_window=self.retry_window
            )
            states[can_id] = state
        return state

    def secure(self, can_id: int, payload: bytes) -> CanFrame:
        """Sender path: build a secured frame, advancing freshness."""
        if self.profile is None:
            return CanFrame(can_id, len(payload), payload)
        return codec.secure_frame(
            can_id, payload, self.profile, self.keys,
            self._state(self._send_states, can_id),
        )

    def verify(self, frame: CanFrame) -> bytes:
        """Receive path: verify a subscribed frame, raising on rejection."""
        if self.profile is None:
            return frame.data
        return codec.verify_frame(
            frame, self.profile, self.keys, self._state(self._recv_states, frame.can_id)
        )

    def receive(self, frame: CanFrame, tick: int = 0, seq: int = 0):
        """Handle one delivered frame.

        Returns (decision, forwarded_frame) where either may be None.
        """
        if self.role == "receiver":
            if frame.can_id not in self.subscribe:
                return None, None
            try:
                payload = self.verify(frame)
            except CinnamonError as exc:
                self.rejected += 1
                reason = type(exc).__name__
                self.reject_reasons[reason] += 1
                return Decision(tick, seq, self.node_id, frame.can_id,
                                False, reason), None
            self.accepted += 1
            self.observed_payloads.append(payload)
            return Decision(tick, seq, self.node_id, frame.can_id,
                            True, None, payload.hex().upper()), None

        if self.role == "gateway":
            out_id = self.forward.get(frame.can_id)
            if out_id is None:
                return None, None
            if self.fast_path:
                # Unauthenticated extraction: low-latency mode, forwards
                # even MAC-invalid frames. Off by default for a reason.
                payload = codec.extract_payload_unauthenticated(
                    frame, self.profile, self.keys
                )
                self.accepted += 1
                decision = Decision(tick, seq, self.node_id, frame.can_id,
                                    True, "unauthenticated-fast-path",
                                    payload.hex().upper())
                return decision, self.secure(out_id, payload)
            try:
                payload = self.verify(frame)
            except CinnamonError as exc:
                self.rejected += 1
                reason = type(exc).__name__
                self.reject_reasons[reason] += 1
                return Decision(tick, seq, self.node_id, frame.can_id,
                                False, reason), None
            self.accepted += 1
            decision = Decision(tick, seq, self.node_id, frame.can_id,
                                True, None, payload.hex().upper())
            return decision, self.secure(out_id, payload)

        return None, None


class TraceLog:
    """Ordered record of every transmission and verification decision."""

    def __init__(self, iface: str = "vcan0"):
        self.iface = iface
        self.events: list[BusEvent] = []
        self.decisions: list[Decision] = []
        self.node_summary: dict[str, dict] = {}

    def candump_lines(self) -> list[str]:
        return [
            codec.format_candump_line(float(e.tick), self.iface, e.frame)
            for e in self.events
        ]

    def render(self) -> str:
        """Stable text form: candump lines interleaved with decision
        comments, then per-node counters."""
        by_seq: dict[int, list[Decision]] = {}
        for d in self.decisions:
            by_seq.setdefault(d.seq, []).append(d)
        lines = []
        for event in self.events:
            lines.append(
                codec.format_candump_line(float(event.tick), self.iface, event.frame)
                + f"  # seq={event.seq} origin={event.origin}"
            )
            for d in by_seq.get(event.seq, ()):
                if d.accepted:
                    lines.append(
                        f"# verdict seq={d.seq} node={d.node} id=0x{d.can_id:03X} "
                        f"accept payload={d.payload_hex}"
                        + (f" note={d.reason}" if d.reason else "")
                    )
                elif d.reason == "dropped":
                    lines.append(f"# drop seq={d.seq}")
                else:
                    lines.append(
                        f"# verdict seq={d.seq} node={d.node} id=0x{d.can_id:03X} "
                        f"reject reason={d.reason}"
                    )
        for name in sorted(self.node_summary):
            info = self.node_summary[name]
            reasons = ",".join(
                f"{k}:{v}" for k, v in sorted(info["reject_reasons"].items())
            )
            lines.append(
                f"# node {name} role={info['role']} accepted={info['accepted']} "
                f"rejected={info['rejected']} reasons=[{reasons}]"
            )
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.render().encode()).hexdigest()


class Bus:
    """Single-clock broadcast bus delivering every frame to every node."""

    def __init__(self, nodes: list[EcuNode], drops: set[int] | None = None,
                 trace: bool = True, iface: str = "vcan0"):
        self.nodes = nodes
        self.drops = set(drops or ())
        self.trace = TraceLog(iface) if trace else None
        self.seq = 0

    def transmit(self, tick: int, origin: str, frame: CanFrame):
        """Broadcast one frame; returns (node_id, frame) pairs emitted in
        response (gateway forwards), which the caller schedules for
        tick + 1."""
        event = BusEvent(tick, self.seq, origin, frame)
        self.seq += 1
        if self.trace:
            self.trace.events.append(event)
        if event.seq in self.drops:
            if self.trace:
                self.trace.decisions.append(
                    Decision(tick, event.seq, "bus", frame.can_id, False, "dropped")
                )
            return []
        forwards = []
        for node in self.nodes:
            decision, out_frame = node.receive(frame, tick, event.seq)
            if decision and self.trace:
                self.trace.decisions.append(decision)
            if out_frame is not None:
                forwards.append((node.node_id, out_frame))
        return forwards

    def finalize_trace(self) -> TraceLog:
        if not self.trace:
            raise ValueError("bus was created with trace=False")
        for node in self.nodes:
            self.trace.node_summary[node.node_id] = {
                "role": node.role,
                "accepted": node.accepted,
                "rejected": node.rejected,
                "reject_reasons": dict(node.reject_reasons),
            }
        return self.trace


@dataclass
class Scenario:
    """Validated scenario configuration ready to run."""

    seed: int
    profile: SecurityProfile
    keys_doc: dict
    nodes: list[dict] = field(default_factory=list)
    traffic: list[dict] = field(default_factory=list)
    drops: list[int] = field(default_factory=list)
    attack: list[dict] = field(default_factory=list)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "Scenario":
        try:
            seed = int(doc.get("seed", 0))
            profile_spec = doc["profile"]
            keys_doc = doc["keys"]
            nodes = list(doc["nodes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalid(f"malformed scenario document: {exc}") from None
        if isinstance(profile_spec, str):
            path = profile_spec
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    profile = load_profile(handle.read())
            except OSError as exc:
                raise ScenarioInvalid(f"cannot read profile: {exc}") from None
        elif isinstance(profile_spec, dict):
            text = "\n".join(f"{k} = {v}" for k, v in profile_spec.items())
            profile = load_profile(text)
        else:
            raise ScenarioInvalid("profile must be a path or a parameter object")
        return cls(
            seed=seed,
            profile=profile,
            keys_doc=keys_doc,
            nodes=nodes,
            traffic=list(doc.get("traffic", ())),
            drops=[int(x) for x in doc.get("drops", ())],
            attack=list(doc.get("attack", ())),
        )

    @classmethod
    def from_file(cls, path: str) -> "Scenario":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ScenarioInvalid(f"{path}: {exc}") from None
        return cls.from_dict(doc, base_dir=os.path.dirname(path) or ".")


def _parse_can_id(text) -> int:
    value = int(text, 0) if isinstance(text, str) else int(text)
    if not 0 <= value <= codec.CAN_MAX_ID:
        raise ScenarioInvalid(f"CAN ID {text!r} exceeds 11 bits")
    return value


def _build_nodes(scenario: Scenario, keys: KeyStore) -> dict[str, EcuNode]:
    nodes: dict[str, EcuNode] = {}
    for spec in scenario.nodes:
        try:
            node_id = spec["id"]
            role = spec["role"]
        except (KeyError, TypeError) as exc:
            raise ScenarioInvalid(f"malformed node spec: {exc}") from None
        if node_id in nodes:
            raise ScenarioInvalid(f"duplicate node id {node_id!r}")
        subscribe = tuple(_parse_can_id(x) for x in spec.get("subscribe", ()))
        forward = {
            _parse_can_id(k): _parse_can_id(v)
            for k, v in spec.get("forward", {}).items()
        }
        for can_id in list(subscribe) + list(forward) + list(forward.values()):
            if not keys.has_channel(can_id):
                raise ScenarioInvalid(
                    f"node {node_id!r} uses unprovisioned CAN ID 0x{can_id:03X}"
                )
        nodes[node_id] = EcuNode(
            node_id, role, scenario.profile, keys,
            subscribe=subscribe, forward=forward,
            fast_path=bool(spec.get("fast_path", False)),
            retry_window=int(spec.get("retry_window", 0)),
        )
    _reject_forward_cycles(nodes.values())
    return nodes


def _reject_forward_cycles(nodes) -> None:
    # A loop in the combined gateway forwarding graph would ping-pong
    # frames forever; refuse such scenarios up front.
    edges: dict[int, set[int]] = {}
    for node in nodes:
        for src, dst in node.forward.items():
            edges.setdefault(src, set()).add(dst)
    seen_done: set[int] = set()
    for start in edges:
        stack = [(start, iter(edges.get(start, ())))]
        on_path = {start}
        while stack:
            current, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt in on_path:
                    raise ScenarioInvalid(
                        f"gateway forwarding loops through CAN ID 0x{nxt:03X}"
                    )
                if nxt not in seen_done:
                    stack.append((nxt, iter(edges.get(nxt, ()))))
                    on_path.add(nxt)
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                on_path.discard(current)
                seen_done.add(current)


def run_scenario(scenario: Scenario) -> TraceLog:
    """Execute a scenario and return its full trace."""
    try:
        keys = KeyStore.from_provisioning(scenario.keys_doc)
    except CinnamonError as exc:
        raise ScenarioInvalid(f"key provisioning failed: {exc}") from None
    nodes = _build_nodes(scenario, keys)
    rng = random.Random(scenario.seed)
    layout = scenario.profile.layout()

    actions: list[tuple[int, int, dict]] = []
    order = 0
    for item in scenario.traffic:
        try:
            tick = int(item["tick"])
            node_id = item["node"]
            can_id = _parse_can_id(item["id"])
            payload_spec = item["payload"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalid(f"malformed traffic item: {exc}") from None
        node = nodes.get(node_id)
        if node is None:
            raise ScenarioInvalid(f"traffic references unknown node {node_id!r}")
        if node.role != "sender":
            raise ScenarioInvalid(f"traffic node {node_id!r} is not a sender")
        if not keys.has_channel(can_id):
            raise ScenarioInvalid(
                f"node {node_id!r} uses unprovisioned CAN ID 0x{can_id:03X}"
            )
        actions.append((tick, order, {"do": "send", "node": node_id,
                                      "id": can_id, "payload": payload_spec}))
        order += 1
    for item in scenario.attack:
        try:
            tick = int(item["tick"])
            kind = item["kind"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalid(f"malformed attack item: {exc}") from None
        if kind not in ("inject", "replay", "tamper"):
            raise ScenarioInvalid(f"unknown attack kind {kind!r}")
        actions.append((tick, order, {"do": kind, **item}))
        order += 1
    actions.sort(key=lambda entry: (entry[0], entry[1]))

    bus = Bus(list(nodes.values()), drops=set(scenario.drops), trace=True)
    pending_forwards: dict[int, list[tuple[str, CanFrame]]] = {}

    def do_action(tick: int, action: dict):
        if action["do"] == "send":
            node = nodes[action["node"]]
            spec = action["payload"]
            if spec == "random":
                payload = rng.randbytes(layout.payload_bytes)
            else:
                try:
                    payload = bytes.fromhex(spec)
                except ValueError:
                    raise ScenarioInvalid(f"bad payload hex {spec!r}") from None
                if len(payload) != layout.payload_bytes:
                    raise ScenarioInvalid(
                        f"payload {spec!r} is {len(payload)} bytes; profile "
                        f"{scenario.profile.name!r} carries {layout.payload_bytes}"
                    )
            return node.secure(action["id"], payload), node.node_id
        if action["do"] == "inject":
            try:
                data = bytes.fromhex(action["data"])
                can_id = _parse_can_id(action["id"])
            except (KeyError, ValueError) as exc:
                raise ScenarioInvalid(f"malformed inject: {exc}") from None
            return CanFrame(can_id, len(data), data), ATTACKER
        # replay / tamper reference an already-recorded event
        ref = int(action.get("event", -1))
        if not 0 <= ref < len(bus.trace.events):
            raise ScenarioInvalid(
                f"attack references event {ref}, but only {len(bus.trace.events)} "
                "transmissions happened so far"
            )
        frame = bus.trace.events[ref].frame
        if action["do"] == "tamper":
            bit = int(action.get("bit", rng.randrange(len(frame.data) * 8)))
            if not 0 <= bit < len(frame.data) * 8:
                raise ScenarioInvalid(f"tamper bit {bit} out of range")
            data = bytearray(frame.data)
            data[bit // 8] ^= 0x80 >> (bit % 8)
            frame = CanFrame(frame.can_id, frame.dlc, bytes(data))
        return frame, ATTACKER

    index = 0
    tick = 0
    while index < len(actions) or pending_forwards:
        for origin, out_frame in pending_forwards.pop(tick, ()):  # gateway re-emissions
            for fwd in bus.transmit(tick, origin, out_frame):
                pending_forwards.setdefault(tick + 1, []).append(fwd)
        while index < len(actions) and actions[index][0] == tick:
            frame, origin = do_action(tick, actions[index][2])
            for fwd in bus.transmit(tick, origin, frame):
                pending_forwards.setdefault(tick + 1, []).append(fwd)
            index += 1
        tick += 1

    return bus.finalize_trace()
