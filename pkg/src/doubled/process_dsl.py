"""Text format for space-time processes (``.ddo`` files).

Line-oriented, ``#`` starts a comment::

    dim 2
    qudits 2
    state singlet
    step { measure 0, 1 }
    channel bitflip 0.25 on 1
    step { measure 1 }

``state`` is one of ``maximally_mixed``, ``pure FILE``, ``dm FILE``,
``bloch X Y Z`` (one qubit) or ``singlet`` (two qubits). ``channel``
lines sit between steps and compose in order; a builtin name, ``unitary
FILE`` or ``kraus FILE``, optionally followed by ``on`` and the target
qudits. A one-qudit channel without ``on`` acts on every qudit.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .numerics import DomainError, StructuralError, matrix_from_json
from .qobjects import (
    BUILTIN_CHANNELS,
    DensityOperator,
    KrausChannel,
    builtin_channel,
    channel_from_json,
    load_json,
    unitary_channel,
)

#: largest total Hilbert-space dimension d**n a process may declare
MAX_SPACE_DIM = 1024

_STATE_KINDS = ("maximally_mixed", "pure", "dm", "bloch", "singlet")
_FILE_CHANNELS = ("unitary", "kraus")
_INT = re.compile(r"[0-9]+\Z")
_STEP = re.compile(r"step\s*\{\s*(?:measure\s+(?P<body>[^{}]*?))?\s*\}\Z")


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class StateSpec:
    kind: str
    args: tuple = ()

    def text(self) -> str:
        return " ".join([self.kind] + [_fmt(a) for a in self.args])


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    params: tuple = ()
    path: str | None = None
    targets: tuple | None = None

    def text(self) -> str:
        parts = ["channel", self.name]
        if self.path is not None:
            parts.append(self.path)
        parts += [_fmt(p) for p in self.params]
        if self.targets is not None:
            parts += ["on"] + [str(t) for t in self.targets]
        return " ".join(parts)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


@dataclass(frozen=True, eq=False)
class Step:
    measured: tuple
    next_channel: KrausChannel | None = None
    channel_specs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "measured", tuple(int(q) for q in self.measured))
        object.__setattr__(self, "channel_specs", tuple(self.channel_specs))

    def __eq__(self, other):
        if not isinstance(other, Step):
            return NotImplemented
        if self.measured != other.measured or self.channel_specs != other.channel_specs:
            return False
        a, b = self.next_channel, other.next_channel
        if a is None or b is None:
            return a is b
        return np.array_equal(a.kraus, b.kraus)


@dataclass(frozen=True)
class EventIndex:
    step: int
    slot: int
    index: int
    qudit: int


@dataclass(frozen=True, eq=False)
class ProcessModel:
    local_dim: int
    num_qudits: int
    initial: DensityOperator
    steps: tuple
    state_spec: StateSpec | None = None
    base_dir: Path | None = field(default=None, repr=False)

    def __post_init__(self):
        d, n = self.local_dim, self.num_qudits
        if d < 2 or n < 1:
            raise StructuralError("need dim >= 2 and at least one qudit")
        dim = d**n
        if self.initial.dim != dim:
            raise StructuralError(f"initial state is {self.initial.dim}-dimensional, expected {dim}")
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise StructuralError("a process needs at least one step")
        for k, st in enumerate(steps):
            if len(set(st.measured)) != len(st.measured):
                raise StructuralError(f"step {k} measures a qudit twice")
            if any(q < 0 or q >= n for q in st.measured):
                raise StructuralError(f"step {k} measures a qudit outside 0..{n - 1}")
            last = k == len(steps) - 1
            if last and st.next_channel is not None:
                raise StructuralError("channel after the last step")
            if st.next_channel is not None and (st.next_channel.in_dim, st.next_channel.out_dim) != (dim, dim):
                raise StructuralError(f"channel after step {k} must map {dim} -> {dim}")
        if self.n_events < 1:
            raise StructuralError("a process needs at least one measured event")

    @classmethod
    def build(cls, d: int, n: int, rho, measured: Sequence[Sequence[int]],
              channels: Sequence[KrausChannel | None] = ()) -> "ProcessModel":
        """Programmatic constructor; ``channels[k]`` sits between steps ``k`` and ``k+1``."""
        if not isinstance(rho, DensityOperator):
            rho = DensityOperator(rho)
        channels = list(channels)
        if len(channels) > len(measured) - 1:
            raise StructuralError("more channels than gaps between steps")
        channels += [None] * (len(measured) - 1 - len(channels))
        ident = KrausChannel(np.eye(d**n, dtype=np.complex128)[None])
        channels = [ident if ch is None else ch for ch in channels]
        steps = [Step(tuple(m), ch) for m, ch in zip(measured, channels + [None])]
        return cls(d, n, rho, tuple(steps))

    @property
    def dim(self) -> int:
        return self.local_dim**self.num_qudits

    @property
    def n_events(self) -> int:
        return sum(len(s.measured) for s in self.steps)

    @property
    def information_complete(self) -> bool:
        full = set(range(self.num_qudits))
        return all(set(s.measured) == full for s in self.steps)

    @property
    def channels(self) -> list:
        return [s.next_channel for s in self.steps[:-1]]

    @property
    def is_temporal(self) -> bool:
        """One qudit, measured at every step."""
        return self.num_qudits == 1 and all(s.measured == (0,) for s in self.steps)

    def __eq__(self, other):
        if not isinstance(other, ProcessModel):
            return NotImplemented
        return (
            self.local_dim == other.local_dim
            and self.num_qudits == other.num_qudits
            and self.state_spec == other.state_spec
            and self.steps == other.steps
            and np.array_equal(self.initial.mat, other.initial.mat)
        )


def event_layout(model: ProcessModel) -> list[EventIndex]:
    """Events numbered in (step, slot) lexicographic order."""
    out = []
    for k, st in enumerate(model.steps):
        for j, q in enumerate(st.measured):
            out.append(EventIndex(k, j, len(out), q))
    return out


# ------------------------------------------------------------------ embedding

def embed_operator(op: np.ndarray, targets: Sequence[int], n: int, d: int) -> np.ndarray:
    """Act with ``op`` on qudits ``targets`` (in that order) of an ``n``-qudit register."""
    k = len(targets)
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(op, np.eye(d ** (n - k), dtype=np.complex128))
    order = list(targets) + rest  # qudit held by each axis of ``full``
    perm = [order.index(q) for q in range(n)]
    t = full.reshape((d,) * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(d**n, d**n)


def embed_channel(ch: KrausChannel, targets: Sequence[int], n: int, d: int) -> KrausChannel:
    ks = np.array([embed_operator(k, targets, n, d) for k in ch.kraus])
    return KrausChannel(ks, tol=ch.tol)


def _arity(ch: KrausChannel, d: int) -> int:
    k, p = 0, 1
    while p < ch.in_dim:
        p *= d
        k += 1
    if p != ch.in_dim or ch.in_dim != ch.out_dim:
        raise DomainError(f"channel dimension {ch.in_dim} is not a power of d={d}")
    return k


def _resolve_channel(spec: ChannelSpec, d: int, n: int, base: Path | None) -> KrausChannel:
    if spec.name in _FILE_CHANNELS:
        path = _resolve_path(spec.path, base)
        obj = load_json(path)
        if spec.name == "unitary":
            ch = unitary_channel(matrix_from_json(obj))
        else:
            ch = channel_from_json(obj)
    else:
        ch = builtin_channel(spec.name, spec.params, d)
    arity = _arity(ch, d)
    if spec.targets is not None:
        if len(spec.targets) != arity:
            raise DomainError(f"channel {spec.name!r} acts on {arity} qudit(s), got {len(spec.targets)} targets")
        return embed_channel(ch, spec.targets, n, d)
    if arity == n:
        return ch
    if arity == 1:
        out = embed_channel(ch, [0], n, d)
        for q in range(1, n):
            out = out.then(embed_channel(ch, [q], n, d))
        return out
    raise DomainError(f"channel {spec.name!r} acts on {arity} qudits; give targets with 'on'")


def _resolve_path(path: str, base: Path | None) -> Path:
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = Path(base) / p
    return p


def _resolve_state(spec: StateSpec, d: int, n: int, base: Path | None) -> DensityOperator:
    dim = d**n
    if spec.kind == "maximally_mixed":
        return DensityOperator.maximally_mixed(dim)
    if spec.kind == "singlet":
        if (d, n) != (2, 2):
            raise DomainError("singlet needs dim 2 and 2 qudits")
        return DensityOperator.singlet()
    if spec.kind == "bloch":
        if (d, n) != (2, 1):
            raise DomainError("bloch state needs dim 2 and 1 qudit")
        return DensityOperator.from_bloch(spec.args)
    m = matrix_from_json(load_json(_resolve_path(spec.args[0], base)))
    if spec.kind == "pure":
        if 1 not in m.shape or m.size != dim:
            raise DomainError(f"ket must have {dim} entries")
        return DensityOperator.from_ket(m.reshape(-1))
    if m.shape != (dim, dim):
        raise DomainError(f"density matrix must be {dim}x{dim}, got {m.shape}")
    return DensityOperator(m)


# --------------------------------------------------------------------- parser

def _int(tok: str, what: str) -> int:
    if not _INT.match(tok):
        raise ValueError(f"{what} must be a non-negative integer, got {tok!r}")
    return int(tok)


def _float(tok: str) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise ValueError(f"expected a number, got {tok!r}") from None
    if not math.isfinite(x):
        raise ValueError(f"number must be finite, got {tok!r}")
    return x


def _parse_state(toks: list[str]) -> StateSpec:
    if not toks:
        raise ValueError("state needs a kind")
    kind, args = toks[0], toks[1:]
    if kind not in _STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}")
    if kind in ("maximally_mixed", "singlet"):
        if args:
            raise ValueError(f"state {kind} takes no arguments")
        return StateSpec(kind)
    if kind == "bloch":
        if len(args) != 3:
            raise ValueError("bloch needs three components")
        return StateSpec(kind, tuple(_float(a) for a in args))
    if len(args) != 1:
        raise ValueError(f"state {kind} needs exactly one file")
    return StateSpec(kind, (args[0],))


def _parse_channel(toks: list[str]) -> ChannelSpec:
    if not toks:
        raise ValueError("channel needs a name")
    targets = None
    if "on" in toks:
        i = toks.index("on")
        tt = toks[i + 1:]
        toks = toks[:i]
        if not tt:
            raise ValueError("'on' needs at least one qudit")
        targets = tuple(_int(t, "qudit index") for t in tt)
        if len(set(targets)) != len(targets):
            raise ValueError("repeated target qudit")
    if not toks:
        raise ValueError("channel needs a name")
    name, args = toks[0], toks[1:]
    if name in _FILE_CHANNELS:
        if len(args) != 1:
            raise ValueError(f"channel {name} needs exactly one file")
        return ChannelSpec(name, (), args[0], targets)
    if name not in BUILTIN_CHANNELS:
        raise ValueError(f"unknown channel {name!r}")
    return ChannelSpec(name, tuple(_float(a) for a in args), None, targets)


def _parse_step(line: str) -> tuple:
    m = _STEP.match(line)
    if m is None:
        raise ValueError("malformed step, expected 'step { measure i, j }' or 'step { }'")
    body = m.group("body")
    if body is None:
        return ()
    parts = [p.strip() for p in body.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty entry in measure list")
    qs = tuple(_int(p, "qudit index") for p in parts)
    if len(set(qs)) != len(qs):
        raise ValueError("a qudit is measured twice in one step")
    return qs


def parse(text, base_dir=None) -> ProcessModel:
    """Parse process text into a validated :class:`ProcessModel`.

    File references are resolved against ``base_dir``. Every failure is
    reported as :class:`ParseError` carrying a 1-based line number.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text)[: exc.start].count(b"\n") + 1
            raise ParseError(line, "input is not valid UTF-8") from None
    base = Path(base_dir) if base_dir is not None else None

    d = n = None
    state_spec = None
    state = None
    steps: list[list] = []  # [measured, [ChannelSpec...], [(line, KrausChannel)...]]
    pending: list = []
    last_line = 1
    lines = text.splitlines() or [""]
    for lineno, raw in enumerate(lines, start=1):
        last_line = lineno
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0] if not toks[0].startswith("step") else "step"
        try:
            if head == "dim":
                if d is not None:
                    raise ValueError("dim given twice")
                if len(toks) != 2:
                    raise ValueError("usage: dim <int>")
                d = _int(toks[1], "dim")
                if d < 2:
                    raise ValueError("dim must be at least 2")
            elif head == "qudits":
                if n is not None:
                    raise ValueError("qudits given twice")
                if len(toks) != 2:
                    raise ValueError("usage: qudits <int>")
                n = _int(toks[1], "qudits")
                if n < 1:
                    raise ValueError("qudits must be at least 1")
            elif head == "state":
                if d is None or n is None:
                    raise ValueError("state must follow dim and qudits")
                if state is not None:
                    raise ValueError("state given twice")
                if n * math.log(d) > math.log(MAX_SPACE_DIM) + 1e-9:
                    raise ValueError(f"dimension {d}**{n} exceeds the limit {MAX_SPACE_DIM}")
                state_spec = _parse_state(toks[1:])
                state = _resolve_state(state_spec, d, n, base)
            elif head == "step":
                if state is None:
                    raise ValueError("step before state")
                measured = _parse_step(line)
                if any(q >= n for q in measured):
                    raise ValueError(f"qudit index out of range 0..{n - 1}")
                if steps:
                    steps[-1][1] = [s for s, _ in pending]
                    steps[-1][2] = [c for _, c in pending]
                pending = []
                steps.append([measured, [], []])
            elif head == "channel":
                if not steps:
                    raise ValueError("channel before the first step")
                spec = _parse_channel(toks[1:])
                if spec.targets is not None and any(q >= n for q in spec.targets):
                    raise ValueError(f"qudit index out of range 0..{n - 1}")
                pending.append((spec, _resolve_channel(spec, d, n, base)))
                pending_line = lineno
            else:
                raise ValueError(f"unknown directive {toks[0]!r}")
        except ParseError:
            raise
        except (ValueError, StructuralError, DomainError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(lineno, str(exc)) from None

    if pending:
        raise ParseError(pending_line, "channel after the last step")
    if d is None:
        raise ParseError(last_line, "missing 'dim'")
    if n is None:
        raise ParseError(last_line, "missing 'qudits'")
    if state is None:
        raise ParseError(last_line, "missing 'state'")
    if not steps:
        raise ParseError(last_line, "missing 'step'")

    built = []
    for k, (measured, specs, chans) in enumerate(steps):
        ch = None
        if chans:
            ch = chans[0]
            for c in chans[1:]:
                ch = ch.then(c)
        built.append(Step(measured, ch, tuple(specs)))
    # a gap without channel lines means identity dynamics
    dim = d**n
    built = [
        s if (s.next_channel is not None or k == len(built) - 1)
        else Step(s.measured, KrausChannel(np.eye(dim, dtype=np.complex128)[None]), ())
        for k, s in enumerate(built)
    ]
    try:
        return ProcessModel(d, n, state, tuple(built), state_spec, base)
    except (StructuralError, DomainError) as exc:
        raise ParseError(last_line, str(exc)) from None


def parse_file(path) -> ProcessModel:
    path = Path(path)
    return parse(path.read_bytes(), base_dir=path.parent)


def serialize(model: ProcessModel) -> str:
    """Canonical text form; ``parse(serialize(m)) == m``.

    Only models that came from text (or carry their source specs) have a
    textual form; programmatic models raise :class:`ValueError`.
    """
    if model.state_spec is None:
        raise ValueError("model was built programmatically and has no textual state description")
    lines = [f"dim {model.local_dim}", f"qudits {model.num_qudits}", f"state {model.state_spec.text()}"]
    for k, st in enumerate(model.steps):
        if st.measured:
            lines.append("step { measure " + ", ".join(str(q) for q in st.measured) + " }")
        else:
            lines.append("step { }")
        if k < len(model.steps) - 1 and st.next_channel is not None and not st.channel_specs:
            if not np.array_equal(st.next_channel.kraus, np.eye(model.dim)[None]):
                raise ValueError(f"channel after step {k} has no textual description")
        lines += [s.text() for s in st.channel_specs]
    return "\n".join(lines) + "\n"


def to_ast(model: ProcessModel) -> dict:
    return {
        "dim": model.local_dim,
        "qudits": model.num_qudits,
        "state": None if model.state_spec is None else {
            "kind": model.state_spec.kind, "args": list(model.state_spec.args)},
        "steps": [
            {
                "measure": list(st.measured),
                "channels": [
                    {"name": c.name, "params": list(c.params), "path": c.path,
                     "on": None if c.targets is None else list(c.targets)}
                    for c in st.channel_specs
                ],
            }
            for st in model.steps
        ],
        "n_events": model.n_events,
        "information_complete": model.information_complete,
        "events": [[e.step, e.slot, e.qudit] for e in event_layout(model)],
    }
