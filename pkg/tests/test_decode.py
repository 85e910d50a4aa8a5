import itertools

import numpy as np
import pytest

from bcsidelab.caps import Caps, ResourceCapError
from bcsidelab.channel import ChannelConfig
from bcsidelab.codec import MessageConfig, SchemeId, build_codebooks, shared_index, superpose
from bcsidelab.decode import (
    DecodeStrategy,
    all_known_assignments,
    candidate_set,
    decode_receiver,
    fiber_size,
    ml_decode,
    ml_decode_pair,
    resolve_messages,
)

IDX, MUX = SchemeId.THREE_RX_INDEX, SchemeId.THREE_RX_MULTIPLEX
WU, TWO_MUX = SchemeId.TWO_RX_WU, SchemeId.TWO_RX_MULTIPLEX


@pytest.mark.parametrize("k2, k3", list(itertools.product(range(7), repeat=2)))
def test_three_receiver_candidate_counts(k2, k3):
    mc = MessageConfig((1, k2, k3), 8)
    assert len(candidate_set(IDX, 1, mc, {}).v) == 2 ** max(k2, k3)
    assert len(candidate_set(MUX, 1, mc, {}).v) == 2 ** (k2 + k3)
    m2, m3 = (1 << k2) - 1, (1 << k3) // 2
    for scheme in (IDX, MUX):
        assert len(candidate_set(scheme, 2, mc, {3: m3}).v) == 2**k2
        assert len(candidate_set(scheme, 3, mc, {2: m2}).v) == 2**k3
        assert fiber_size(scheme, 2, mc) == 2**k2 and fiber_size(scheme, 3, mc) == 2**k3
    assert fiber_size(IDX, 1, mc) == 2 ** max(k2, k3)
    assert fiber_size(MUX, 1, mc) == 2 ** (k2 + k3)


def test_index_fibre_contents():
    mc = MessageConfig((1, 4, 3), 8)
    cs = candidate_set(IDX, 2, mc, {3: 5})
    assert set(cs.v.tolist()) == {m2 ^ 5 for m2 in range(16)}
    assert cs.u is None
    cs1 = candidate_set(IDX, 1, mc, {})
    assert cs1.u.tolist() == [0, 1]


@pytest.mark.parametrize("bits", list(itertools.product(range(3), repeat=4)))
def test_two_receiver_fibres_match(bits):
    # identical uncertainty at each receiver under the XOR and multiplexed layouts
    mc = MessageConfig((1, *bits), 8)
    k2, k3, k4, k5 = bits
    for r, expected, knows in ((1, k2 + k3 + k5, 4), (2, k2 + k3 + k4, 5)):
        sizes = set()
        for scheme in (WU, TWO_MUX):
            assert fiber_size(scheme, r, mc) == 2**expected
            for known in all_known_assignments(scheme, r, mc):
                sizes.add(len(candidate_set(scheme, r, mc, known).v))
        assert sizes == {2**expected}


@pytest.mark.parametrize("k", range(1, 9))
def test_xor_recovery_identity(k):
    mc = MessageConfig((0, k, k), 8)
    for m2 in range(1 << k):
        m3 = np.arange(1 << k)
        # composite index of the XOR layer is m2 ^ m3; knowing M2 recovers M3
        for comp, want in zip((m2 ^ m3).tolist(), m3.tolist()):
            assert resolve_messages(IDX, mc, comp, {2: m2}) == {3: want}


def test_candidate_set_errors():
    mc = MessageConfig((1, 2, 2), 8)
    with pytest.raises(ValueError):
        candidate_set(IDX, 4, mc, {})
    with pytest.raises(ValueError):
        candidate_set(IDX, 2, mc, {})
    with pytest.raises(ValueError):
        candidate_set(IDX, 2, mc, {3: 0, 2: 0})
    with pytest.raises(ValueError):
        candidate_set(IDX, 2, mc, {3: 4})
    with pytest.raises(ResourceCapError):
        candidate_set(MUX, 1, MessageConfig((1, 6, 6), 8), {}, Caps(candidates=1000))


def test_ml_decode_rules():
    book = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert ml_decode([1.0, 1.0], book, [0, 1, 2, 3]) == 3
    assert ml_decode([50.0, -3.0], book, [2]) == 2
    # (0.5, 0.5) is equidistant from all four; lowest wins regardless of order
    assert ml_decode([0.5, 0.5], book, [3, 2, 1]) == 1
    assert ml_decode([0.5, 0.0], book, [1, 0]) == 0
    with pytest.raises(ValueError):
        ml_decode([0.0, 0.0], book, [])


def test_ml_decode_matches_bruteforce_in_chunks():
    rng = np.random.default_rng(0)
    book = rng.standard_normal((70_000, 4))
    y = rng.standard_normal(4)
    cand = np.arange(70_000)
    assert ml_decode(y, book, cand) == int(np.argmin(((book - y) ** 2).sum(axis=1)))


def test_ml_decode_pair_matches_bruteforce():
    rng = np.random.default_rng(1)
    U, V = rng.standard_normal((9, 6)), rng.standard_normal((40, 6))
    y = U[4] + V[17] + 0.05 * rng.standard_normal(6)
    d = ((U[:, None, :] + V[None, :, :] - y) ** 2).sum(axis=2)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    assert ml_decode_pair(y, U, range(9), V, range(40)) == (i, j) == (4, 17)
    assert ml_decode_pair(y, U, [2, 4], V, [17, 3]) == (4, 17)


def _messages(spec_bits, rng):
    return [int(rng.integers(0, 1 << k)) if k else 0 for k in spec_bits]


@pytest.mark.parametrize("scheme", list(SchemeId))
@pytest.mark.parametrize("strategy", ["sc", "sd", "tin"])
def test_noiseless_decoding_recovers_everything(scheme, strategy):
    spec = scheme.spec
    if strategy == "tin" and spec.receivers == 2:
        pytest.skip("receiver 1 of the two-receiver schemes wants shared-layer messages")
    bits = (3, 3, 2) if spec.receivers == 3 else (3, 1, 2, 2, 1)
    mc = MessageConfig(bits, 24)
    cfg = ChannelConfig(3.0, (1.0,) * spec.receivers)
    # treat-as-noise only sees the private layer cleanly when the shared layer is faint
    alpha = 0.999 if strategy == "tin" else 0.4
    rng = np.random.default_rng(5)
    for trial in range(25):
        msgs = _messages(bits, rng)
        books = build_codebooks(scheme, cfg, mc, alpha, seed=8, trial=trial)
        x = superpose(books, scheme, mc, msgs)
        # receivers 2 and 3 ignore the strategy and are covered by the other cases
        for r in (1,) if strategy == "tin" else range(1, spec.receivers + 1):
            known = {m: msgs[m - 1] for m in spec.knows[r]}
            dec = decode_receiver(scheme, r, x, books, mc, known, strategy)
            assert dec.messages == {m: msgs[m - 1] for m in spec.wants[r]}


def test_receiver_three_xor_inversion():
    mc = MessageConfig((2, 3, 3), 16)
    cfg = ChannelConfig(3.0, (1.0, 1.0, 1.0))
    books = build_codebooks(IDX, cfg, mc, 0.3, seed=1)
    msgs = (1, 6, 3)
    x = superpose(books, IDX, mc, msgs)
    dec = decode_receiver(IDX, 3, x, books, mc, {2: 6})
    assert dec.v_index == shared_index(IDX, mc, msgs) == 6 ^ 3
    assert dec.messages == {3: 3}


def test_decode_receiver_errors():
    mc = MessageConfig((1, 1, 1, 1, 1), 8)
    cfg = ChannelConfig(3.0, (1.0, 2.0))
    books = build_codebooks(WU, cfg, mc, 0.5, seed=0)
    y = np.zeros(8)
    with pytest.raises(ValueError):
        decode_receiver(WU, 1, y, books, mc, {4: 0}, "tin")
    with pytest.raises(ValueError):
        decode_receiver(WU, 1, y, books, mc, {5: 0})
    with pytest.raises(ValueError):
        decode_receiver(WU, 1, y, books, mc, {4: 0}, "bogus")
    mc3 = MessageConfig((4, 4, 4), 8)
    books3 = build_codebooks(MUX, ChannelConfig(3.0, (1, 1, 1)), mc3, 0.5, seed=0)
    with pytest.raises(ResourceCapError):
        decode_receiver(MUX, 1, np.zeros(8), books3, mc3, {}, "sd", Caps(candidates=1000))


def test_strategy_parse():
    assert DecodeStrategy.parse("SuccessiveCancel") is DecodeStrategy.SUCCESSIVE_CANCEL
    assert DecodeStrategy.parse("treat-as-noise") is DecodeStrategy.TREAT_AS_NOISE
    assert DecodeStrategy.parse("Simultaneous") is DecodeStrategy.SIMULTANEOUS
