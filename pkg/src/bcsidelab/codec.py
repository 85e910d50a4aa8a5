"""Message combining and Gaussian random codebooks for the layered schemes.

Every scheme transmits ``u(M1) + v(composite)``: a private layer for M1 with
per-symbol variance ``alpha * P`` and a shared layer whose index combines
the remaining messages. The shared index is a big-endian concatenation of
*fields*; a field is either one message or the zero-padded XOR of two.

Message and receiver numbers are 1-based as in the usual notation
(M1..MK, receiver 1 strongest); message *values* are 0-based indices in
``range(2**k)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .caps import Caps, check
from .channel import STREAM_CODEBOOK, ChannelConfig, rng_for


class SchemeId(enum.Enum):
    TWO_RX_WU = "two-rx-wu"
    TWO_RX_MULTIPLEX = "two-rx-multiplex"
    THREE_RX_INDEX = "three-rx-index"
    THREE_RX_MULTIPLEX = "three-rx-multiplex"

    @classmethod
    def parse(cls, text) -> "SchemeId":
        if isinstance(text, cls):
            return text
        key = str(text).replace("-", "").replace("_", "").lower()
        for s in cls:
            if key in (s.value.replace("-", ""), s.name.replace("_", "").lower()):
                return s
        raise ValueError(f"unknown scheme {text!r}; choose from {[s.value for s in cls]}")

    @property
    def spec(self) -> "SchemeSpec":
        return _SCHEMES[self]

    @property
    def code(self) -> int:
        return list(SchemeId).index(self)


@dataclass(frozen=True)
class SchemeSpec:
    messages: int
    receivers: int
    wants: dict[int, frozenset[int]]
    knows: dict[int, frozenset[int]]
    # fields of the shared layer; a 2-tuple is the XOR of two messages
    fields: tuple[tuple[int, ...], ...]

    def field_widths(self, bits: Sequence[int]) -> tuple[int, ...]:
        return tuple(max(bits[m - 1] for m in f) for f in self.fields)


_TWO_RX_ROLES = dict(
    messages=5,
    receivers=2,
    wants={1: frozenset({1, 3, 5}), 2: frozenset({2, 3, 4})},
    knows={1: frozenset({4}), 2: frozenset({5})},
)
_THREE_RX_ROLES = dict(
    messages=3,
    receivers=3,
    wants={1: frozenset({1}), 2: frozenset({2}), 3: frozenset({3})},
    knows={1: frozenset(), 2: frozenset({3}), 3: frozenset({2})},
)

_SCHEMES = {
    SchemeId.TWO_RX_WU: SchemeSpec(fields=((2,), (3,), (4, 5)), **_TWO_RX_ROLES),
    SchemeId.TWO_RX_MULTIPLEX: SchemeSpec(fields=((2,), (3,), (4,), (5,)), **_TWO_RX_ROLES),
    SchemeId.THREE_RX_INDEX: SchemeSpec(fields=((2, 3),), **_THREE_RX_ROLES),
    SchemeId.THREE_RX_MULTIPLEX: SchemeSpec(fields=((2,), (3,)), **_THREE_RX_ROLES),
}


@dataclass(frozen=True)
class MessageConfig:
    """Per-message bit lengths and the blocklength; rates are ``k_j / n``."""

    bits: tuple[int, ...]
    n: int

    def __post_init__(self):
        bits = tuple(int(k) for k in self.bits)
        if any(k < 0 or k != kk for k, kk in zip(bits, self.bits)):
            raise ValueError(f"bit lengths must be non-negative integers, got {self.bits}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"blocklength must be a positive integer, got {self.n}")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "n", int(self.n))

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(k / self.n for k in self.bits)

    @classmethod
    def from_rates(cls, rates: Sequence[float], n: int, rounding: str = "floor") -> "MessageConfig":
        """Bit lengths realizing ``rates`` at blocklength ``n``.

        ``floor`` keeps every realized rate at or below its target (codebook
        size 2**floor(nR)); ``nearest`` rounds half up.
        """
        if rounding == "floor":
            # tolerate representation error such as 0.3 * 10 = 2.9999999999999996
            bits = tuple(int(math.floor(r * n + 1e-9)) for r in rates)
        elif rounding == "nearest":
            bits = tuple(int(math.floor(r * n + 0.5)) for r in rates)
        else:
            raise ValueError(f"rounding must be 'floor' or 'nearest', got {rounding!r}")
        return cls(bits, n)


def _check_index(value: int, width: int, what: str = "message index") -> int:
    value = int(value)
    if not 0 <= value < (1 << width):
        raise ValueError(f"{what} {value} out of range for {width} bits")
    return value


def index_xor(a: int, b: int, widths: tuple[int, int]) -> int:
    """Bitwise XOR of two message indices, the shorter one zero-padded."""
    ka, kb = widths
    return _check_index(a, ka) ^ _check_index(b, kb)


def multiplex(indices: Sequence[int], widths: Sequence[int]) -> int:
    """Bijective big-endian concatenation of ``indices`` (first index most significant)."""
    if len(indices) != len(widths):
        raise ValueError("one width per index is required")
    out = 0
    for value, k in zip(indices, widths):
        out = (out << k) | _check_index(value, k)
    return out


def demultiplex(composite: int, widths: Sequence[int]) -> tuple[int, ...]:
    total = sum(widths)
    composite = _check_index(composite, total, "composite index")
    out = []
    for k in reversed(widths):
        out.append(composite & ((1 << k) - 1))
        composite >>= k
    return tuple(reversed(out))


def shared_index(scheme: SchemeId, msgcfg: MessageConfig, messages: Sequence[int]) -> int:
    """Index of the shared-layer codeword carrying ``messages`` (M1..MK)."""
    spec = scheme.spec
    _check_roster(spec, msgcfg, messages)
    values = []
    for f in spec.fields:
        v = 0
        for m in f:
            v ^= _check_index(messages[m - 1], msgcfg.bits[m - 1])
        values.append(v)
    return multiplex(values, spec.field_widths(msgcfg.bits))


def shared_bits(scheme: SchemeId, msgcfg: MessageConfig) -> int:
    return sum(scheme.spec.field_widths(msgcfg.bits))


def _check_roster(spec: SchemeSpec, msgcfg: MessageConfig, messages=None):
    if len(msgcfg.bits) != spec.messages:
        raise ValueError(f"scheme carries {spec.messages} messages, got {len(msgcfg.bits)} bit lengths")
    if messages is not None and len(messages) != spec.messages:
        raise ValueError(f"scheme carries {spec.messages} messages, got {len(messages)}")


@dataclass(frozen=True)
class Codebook:
    """``2**k`` codewords of length ``n`` with i.i.d. N(0, variance) symbols."""

    entries: np.ndarray
    variance: float
    seed: int

    @property
    def bits(self) -> int:
        return int(self.entries.shape[0]).bit_length() - 1

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def __len__(self):
        return self.entries.shape[0]

    def __getitem__(self, index):
        return self.entries[index]


def gen_codebook(
    k: int,
    n: int,
    variance: float,
    seed: int,
    *,
    stream: tuple[int, ...] = (),
    normalize: bool = False,
    cap: int | None = None,
) -> Codebook:
    """Draw a Gaussian random codebook; ``stream`` selects an independent substream of ``seed``.

    With ``normalize`` every codeword is scaled to squared norm ``n * variance``
    (per-codeword power constraint) instead of meeting it on average.
    """
    if k < 0 or int(k) != k:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    if n < 1 or int(n) != n:
        raise ValueError(f"n must be a positive integer, got {n}")
    if variance < 0 or not math.isfinite(variance):
        raise ValueError(f"variance must be finite and >= 0, got {variance}")
    cap = Caps.resolve().codebook if cap is None else cap
    size = 1 << int(k)
    check(size, cap, f"codebook of 2**{k} words")
    rng = rng_for(seed, STREAM_CODEBOOK, *stream)
    entries = rng.standard_normal((size, int(n)))
    if normalize:
        norms = np.linalg.norm(entries, axis=1, keepdims=True)
        entries = entries / np.where(norms > 0, norms, 1.0) * math.sqrt(n)
    entries *= math.sqrt(variance)
    entries.setflags(write=False)
    return Codebook(entries, float(variance), int(seed))


@dataclass(frozen=True)
class LayerCodebooks:
    u: Codebook
    v: Codebook


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def build_codebooks(
    scheme: SchemeId,
    cfg: ChannelConfig,
    msgcfg: MessageConfig,
    alpha: float,
    seed: int,
    trial: int | None = None,
    *,
    normalize: bool = False,
    caps: Caps | None = None,
) -> LayerCodebooks:
    """Independent private (u) and shared (v) layer codebooks for ``scheme``.

    ``trial=None`` gives the fixed codebook pair of ``seed``; an integer
    trial draws the fresh pair used for that trial.
    """
    spec = scheme.spec
    _check_roster(spec, msgcfg)
    if cfg.receivers != spec.receivers:
        raise ValueError(f"{scheme.value} needs {spec.receivers} receivers, channel has {cfg.receivers}")
    alpha = check_alpha(alpha)
    caps = caps or Caps.resolve()
    tail = () if trial is None else (int(trial),)
    kw = dict(normalize=normalize, cap=caps.codebook)
    u = gen_codebook(msgcfg.bits[0], msgcfg.n, alpha * cfg.power, seed, stream=(scheme.code, 0, *tail), **kw)
    v = gen_codebook(
        shared_bits(scheme, msgcfg), msgcfg.n, (1 - alpha) * cfg.power, seed, stream=(scheme.code, 1, *tail), **kw
    )
    return LayerCodebooks(u, v)


def superpose(books: LayerCodebooks, scheme: SchemeId, msgcfg: MessageConfig, messages: Sequence[int]) -> np.ndarray:
    return books.u[_check_index(messages[0], msgcfg.bits[0])] + books.v[shared_index(scheme, msgcfg, messages)]


def encode(
    scheme: SchemeId,
    cfg: ChannelConfig,
    msgcfg: MessageConfig,
    alpha: float,
    messages: Sequence[int],
    seed: int,
    trial: int | None = None,
) -> np.ndarray:
    """Transmitted codeword ``u(M1) + v(composite)`` for one message tuple."""
    books = build_codebooks(scheme, cfg, msgcfg, alpha, seed, trial)
    return superpose(books, scheme, msgcfg, messages)
