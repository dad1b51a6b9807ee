"""Erasure-channel dropout generation and the actuator-side packet buffer.

Traces are binary sequences d(k), 1 = packet lost. Every trace honors the
bounded-dropout contract: d(0) = 0 and no run of consecutive losses longer
than N - 1, so the buffer below never runs past the end of a packet.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ProtocolViolationError, TraceValidationError
from .controllers import ControlPacket

_KINDS = ("iid", "markov", "scripted")


@dataclass(frozen=True)
class DropoutModel:
    """Dropout process description. N is the packet length bounding runs.

    iid: each step drops with p_drop. markov: drop probability is p_dd
    after a drop and p_dg after a delivery. scripted: replay an explicit
    bit sequence.
    """

    kind: str
    N: int
    p_drop: float = 0.3
    p_dd: float = 0.8
    p_dg: float = 0.2
    script: tuple = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"dropout kind must be one of {_KINDS}, got {self.kind!r}")
        if self.N < 1:
            raise ConfigError(f"packet length N must be >= 1, got {self.N}")
        for name in ("p_drop", "p_dd", "p_dg"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.kind == "scripted":
            if self.script is None:
                raise ConfigError("scripted dropout model requires a script")
            object.__setattr__(self, "script", tuple(int(b) for b in self.script))


@dataclass(frozen=True)
class ChannelTrace:
    """A realized dropout sequence with its bookkeeping.

    Invariants are enforced at construction: d(0) = 0, bits binary, and
    every run of 1s no longer than N - 1. overrides counts losses that the
    generator forced into deliveries to keep the bound.
    """

    d: np.ndarray
    N: int
    overrides: int = 0

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.int8)
        if d.ndim != 1 or d.size < 1:
            raise TraceValidationError("trace must be a non-empty 1-D bit sequence")
        if not np.all((d == 0) | (d == 1)):
            raise TraceValidationError("trace bits must be 0 or 1")
        if d[0] != 0:
            raise TraceValidationError("first packet must be delivered: d(0) = 0")
        if _max_run(d) > self.N - 1:
            raise TraceValidationError(
                f"consecutive dropouts exceed the bound {self.N - 1}")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def T(self) -> int:
        return int(self.d.size)

    def delivery_instants(self) -> np.ndarray:
        """Instants k_i with d(k_i) = 0, in increasing order."""
        return np.flatnonzero(self.d == 0)

    def gaps(self) -> np.ndarray:
        """Dropout counts m_i = k_(i+1) - k_i - 1 between consecutive deliveries."""
        k = self.delivery_instants()
        return np.diff(k) - 1


def _max_run(d: np.ndarray) -> int:
    run = best = 0
    for b in d:
        run = run + 1 if b else 0
        best = max(best, run)
    return best


def generate_trace(model: DropoutModel, T: int, rng=None) -> ChannelTrace:
    """Realize a length-T trace, forcing deliveries to keep runs <= N - 1.

    A sampled loss that would make an N-th consecutive drop is emitted as a
    delivery and counted in overrides. Deterministic given (model, seed, T);
    passing rng overrides the model seed with a caller-managed stream.
    """
    if T < 1:
        raise ConfigError(f"trace length must be >= 1, got {T}")
    if model.kind == "scripted":
        if len(model.script) < T:
            raise TraceValidationError(
                f"script has {len(model.script)} bits but {T} are required")
        return ChannelTrace(d=np.array(model.script[:T], dtype=np.int8), N=model.N)

    if rng is None:
        rng = np.random.default_rng(model.seed)
    uniforms = rng.random(T)
    d = np.zeros(T, dtype=np.int8)
    overrides = 0
    run = 0
    cap = model.N - 1
    for k in range(1, T):
        if model.kind == "iid":
            p = model.p_drop
        else:
            p = model.p_dd if d[k - 1] else model.p_dg
        if uniforms[k] < p:
            if run == cap:
                overrides += 1
                run = 0
            else:
                d[k] = 1
                run += 1
        else:
            run = 0
    return ChannelTrace(d=d, N=model.N, overrides=overrides)


@dataclass(frozen=True)
class BufferState:
    """Last delivered packet plus how many of its elements were consumed."""

    packet: np.ndarray
    age: int

    def __post_init__(self):
        packet = np.asarray(self.packet, dtype=float)
        packet.setflags(write=False)
        object.__setattr__(self, "packet", packet)
        if not (0 <= self.age < packet.size):
            raise ProtocolViolationError(
                f"buffer age {self.age} outside [0, {packet.size - 1}]")


def actuate(buf, d_k: int, incoming: ControlPacket = None):
    """One actuator step: returns (applied input, next buffer state).

    Delivery (d_k = 0) overwrites the buffer with the incoming packet and
    applies its first element. A loss advances the read index and applies
    the next stored element; running past N - 1 consumed elements means the
    trace violated its bound.
    """
    if d_k == 0:
        if incoming is None:
            raise ConfigError("delivery step requires the incoming packet")
        new = BufferState(packet=incoming.u, age=0)
        return float(new.packet[0]), new
    if buf is None:
        raise ProtocolViolationError("dropout before any packet was delivered")
    age = buf.age + 1
    if age >= buf.packet.size:
        raise ProtocolViolationError(
            f"buffer exhausted: {age} consecutive losses with packet length {buf.packet.size}")
    return float(buf.packet[age]), BufferState(packet=buf.packet, age=age)
