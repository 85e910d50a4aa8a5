"""Side-information-aware nearest-codeword decoding of the layered schemes."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .caps import Caps, check
from .codec import Codebook, LayerCodebooks, MessageConfig, SchemeId, demultiplex

_CHUNK = 1 << 15


class DecodeStrategy(enum.Enum):
    """How receiver 1 handles the shared layer before decoding M1."""

    SUCCESSIVE_CANCEL = "sc"
    TREAT_AS_NOISE = "tin"
    SIMULTANEOUS = "sd"

    @classmethod
    def parse(cls, text) -> "DecodeStrategy":
        if isinstance(text, cls):
            return text
        key = str(text).replace("-", "").replace("_", "").lower()
        aliases = {
            "sc": cls.SUCCESSIVE_CANCEL,
            "successivecancel": cls.SUCCESSIVE_CANCEL,
            "successivecancellation": cls.SUCCESSIVE_CANCEL,
            "tin": cls.TREAT_AS_NOISE,
            "treatasnoise": cls.TREAT_AS_NOISE,
            "sd": cls.SIMULTANEOUS,
            "simultaneous": cls.SIMULTANEOUS,
            "simultaneousdecoding": cls.SIMULTANEOUS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown decode strategy {text!r}") from None


@dataclass(frozen=True)
class CandidateSet:
    """Composite indices a receiver must search, given what it already knows.

    ``u`` is None for receivers that never decode the private layer.
    """

    scheme: SchemeId
    receiver: int
    known: Mapping[int, int]
    v: np.ndarray
    u: np.ndarray | None = None


def decodes_private_layer(scheme: SchemeId, receiver: int) -> bool:
    return 1 in scheme.spec.wants[receiver]


def _check_known(scheme: SchemeId, receiver: int, msgcfg: MessageConfig, known: Mapping[int, int]) -> dict[int, int]:
    spec = scheme.spec
    if receiver not in spec.wants:
        raise ValueError(f"{scheme.value} has no receiver {receiver}")
    if len(msgcfg.bits) != spec.messages:
        raise ValueError(f"scheme carries {spec.messages} messages, got {len(msgcfg.bits)} bit lengths")
    known = {int(m): int(v) for m, v in dict(known).items()}
    if set(known) != set(spec.knows[receiver]):
        raise ValueError(
            f"receiver {receiver} of {scheme.value} knows {sorted(spec.knows[receiver])}, got side information for {sorted(known)}"
        )
    for m, v in known.items():
        if not 0 <= v < (1 << msgcfg.bits[m - 1]):
            raise ValueError(f"known M{m}={v} out of range for {msgcfg.bits[m - 1]} bits")
    return known


def fiber_size(scheme: SchemeId, receiver: int, msgcfg: MessageConfig, layer: str = "v") -> int:
    """Number of candidates the receiver searches in ``layer`` (closed form)."""
    spec = scheme.spec
    if layer == "u":
        return (1 << msgcfg.bits[0]) if decodes_private_layer(scheme, receiver) else 0
    knows = spec.knows[receiver]
    bits = 0
    for f in spec.fields:
        unknown = [m for m in f if m not in knows]
        bits += max((msgcfg.bits[m - 1] for m in unknown), default=0)
    return 1 << bits


def candidate_set(
    scheme: SchemeId,
    receiver: int,
    msgcfg: MessageConfig,
    known: Mapping[int, int],
    caps: Caps | None = None,
) -> CandidateSet:
    """Enumerate every shared-layer index consistent with the receiver's side information.

    The set is built by running all message values the receiver does not
    know through the scheme's combiner, so its size is an independent check
    on :func:`fiber_size`.
    """
    known = _check_known(scheme, receiver, msgcfg, known)
    caps = caps or Caps.resolve()
    spec = scheme.spec
    widths = spec.field_widths(msgcfg.bits)
    free = sorted({m for f in spec.fields for m in f} - set(known))
    combos = 1 << sum(msgcfg.bits[m - 1] for m in free)
    check(combos, caps.candidates, f"candidate enumeration for receiver {receiver}")
    if sum(widths) > 62:
        raise ValueError("composite index wider than 62 bits")

    grids = np.meshgrid(*[np.arange(1 << msgcfg.bits[m - 1], dtype=np.int64) for m in free], indexing="ij")
    value = {m: g.ravel() for m, g in zip(free, grids)}
    value.update({m: np.full(combos, v, dtype=np.int64) for m, v in known.items()})
    composite = np.zeros(combos, dtype=np.int64)
    for f, w in zip(spec.fields, widths):
        fv = np.zeros(combos, dtype=np.int64)
        for m in f:
            fv ^= value[m]
        composite = (composite << w) | fv
    v = np.unique(composite)
    u = np.arange(1 << msgcfg.bits[0], dtype=np.int64) if decodes_private_layer(scheme, receiver) else None
    return CandidateSet(scheme, receiver, known, v, u)


def resolve_messages(scheme: SchemeId, msgcfg: MessageConfig, composite: int, known: Mapping[int, int]) -> dict[int, int]:
    """Message values recoverable from a shared-layer index plus side information."""
    spec = scheme.spec
    out: dict[int, int] = {}
    values = demultiplex(int(composite), spec.field_widths(msgcfg.bits))
    for f, fv in zip(spec.fields, values):
        if len(f) == 1:
            out[f[0]] = fv
            continue
        a, b = f
        if a in known:
            out[b] = fv ^ known[a]
        elif b in known:
            out[a] = fv ^ known[b]
    return out


def _entries(book) -> np.ndarray:
    return book.entries if isinstance(book, Codebook) else np.asarray(book, dtype=float)


def ml_decode(y, codebook, candidates) -> int:
    """Candidate index whose codeword is nearest to ``y``; ties go to the lowest index."""
    entries = _entries(codebook)
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise ValueError("empty candidate set")
    y = np.asarray(y, dtype=float)
    best_d = np.inf
    best_idx = None
    for start in range(0, cand.size, _CHUNK):
        chunk = cand[start : start + _CHUNK]
        d = ((entries[chunk] - y) ** 2).sum(axis=1)
        m = d.min()
        if m < best_d:
            best_d, best_idx = m, int(chunk[d == m].min())
        elif m == best_d:
            best_idx = min(best_idx, int(chunk[d == m].min()))
    return best_idx


def ml_decode_pair(y, u_book, u_cand, v_book, v_cand) -> tuple[int, int]:
    """Jointly nearest ``u + v`` over the product of both candidate sets (lexicographic ties)."""
    U = _entries(u_book)[np.asarray(u_cand, dtype=np.int64)]
    V = _entries(v_book)[np.asarray(v_cand, dtype=np.int64)]
    if len(U) == 0 or len(V) == 0:
        raise ValueError("empty candidate set")
    y = np.asarray(y, dtype=float)
    vv = (V**2).sum(axis=1) - 2.0 * V @ y
    best = (np.inf, 0, 0)
    step = max(1, _CHUNK // max(1, len(V)))
    for start in range(0, len(U), step):
        Uc = U[start : start + step]
        uu = (Uc**2).sum(axis=1) - 2.0 * Uc @ y
        d = uu[:, None] + vv[None, :] + 2.0 * Uc @ V.T
        flat = int(np.argmin(d))
        i, j = divmod(flat, len(V))
        if d[i, j] < best[0]:
            best = (d[i, j], start + i, j)
    _, i, j = best
    return int(np.asarray(u_cand)[i]), int(np.asarray(v_cand)[j])


@dataclass(frozen=True)
class Decoded:
    """Wanted messages plus the per-layer decisions that produced them."""

    messages: dict[int, int]
    v_index: int | None = None
    u_index: int | None = None


def decode_receiver(
    scheme: SchemeId,
    receiver: int,
    y,
    books: LayerCodebooks,
    msgcfg: MessageConfig,
    known: Mapping[int, int],
    strategy: DecodeStrategy = DecodeStrategy.SUCCESSIVE_CANCEL,
    caps: Caps | None = None,
    candidates: CandidateSet | None = None,
) -> Decoded:
    """Decode the receiver's wanted messages from its channel output ``y``.

    Receivers that do not want M1 search their shared-layer fiber treating
    the private layer as noise. Receiver 1 follows ``strategy``:
    successive cancellation decodes its fiber, subtracts the codeword and
    then decodes M1; treat-as-noise decodes M1 directly; simultaneous
    decoding searches all (u, v) pairs.
    """
    caps = caps or Caps.resolve()
    strategy = DecodeStrategy.parse(strategy)
    known = _check_known(scheme, receiver, msgcfg, known)
    spec = scheme.spec
    wants = spec.wants[receiver]
    cs = candidates or candidate_set(scheme, receiver, msgcfg, known, caps)
    y = np.asarray(y, dtype=float)

    if not decodes_private_layer(scheme, receiver):
        v_hat = ml_decode(y, books.v, cs.v)
        got = resolve_messages(scheme, msgcfg, v_hat, known)
        return Decoded({m: got[m] for m in sorted(wants)}, v_index=v_hat)

    needs_shared = bool(wants - {1})
    if strategy is DecodeStrategy.TREAT_AS_NOISE:
        if needs_shared:
            raise ValueError(f"receiver {receiver} of {scheme.value} wants shared-layer messages; treat-as-noise cannot recover them")
        u_hat = ml_decode(y, books.u, cs.u)
        return Decoded({1: u_hat}, u_index=u_hat)

    if strategy is DecodeStrategy.SIMULTANEOUS:
        check(len(cs.u) * len(cs.v), caps.candidates, "simultaneous candidate pairs")
        u_hat, v_hat = ml_decode_pair(y, books.u, cs.u, books.v, cs.v)
    else:
        v_hat = ml_decode(y, books.v, cs.v)
        u_hat = ml_decode(y - books.v[v_hat], books.u, cs.u)
    got = resolve_messages(scheme, msgcfg, v_hat, known)
    got[1] = u_hat
    return Decoded({m: got[m] for m in sorted(wants)}, v_index=v_hat, u_index=u_hat)


def all_known_assignments(scheme: SchemeId, receiver: int, msgcfg: MessageConfig):
    """Every side-information assignment for ``receiver`` (small configurations only)."""
    knows = sorted(scheme.spec.knows[receiver])
    for values in itertools.product(*[range(1 << msgcfg.bits[m - 1]) for m in knows]):
        yield dict(zip(knows, values))
