import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from bcsidelab import regions
from bcsidelab.channel import ChannelConfig
from bcsidelab.regions import RateTriple, StrategyRegion

CFG = ChannelConfig(3.0, (1.0, 1.0, 1.0))
STRATS = {
    StrategyRegion.CAPACITY: "capacity",
    StrategyRegion.MULTIPLEX_SC: "sc",
    StrategyRegion.MULTIPLEX_TIN: "tin",
    StrategyRegion.MULTIPLEX_SD: "sd",
    StrategyRegion.MULTIPLEX_UNION: "union",
}


def random_cfg(rng):
    n = np.sort(rng.uniform(0.1, 10.0, 3))
    return ChannelConfig(float(rng.uniform(0.0, 20.0)), tuple(n))


def test_boundary_corners_and_centre():
    assert regions.boundary_point(CFG, 0.0).as_tuple() == pytest.approx((0.0, 1.0, 1.0), abs=1e-12)
    assert regions.boundary_point(CFG, 1.0).as_tuple() == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)
    assert regions.boundary_point(CFG, 1 / 3).as_tuple() == pytest.approx((0.5, 0.5, 0.5), abs=1e-12)


def test_boundary_point_general_corners():
    cfg = ChannelConfig(10.0, (1.0, 2.0, 4.0))
    assert regions.boundary_point(cfg, 0.0).as_tuple() == pytest.approx((0.0, oracles.c(5.0), oracles.c(2.5)))
    assert regions.boundary_point(cfg, 1.0).as_tuple() == pytest.approx((oracles.c(10.0), 0.0, 0.0))


def test_boundary_point_errors():
    with pytest.raises(ValueError):
        regions.boundary_point(ChannelConfig(3.0, (1.0, 2.0)), 0.5)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            regions.boundary_point(CFG, bad)


def test_rate_triple_validation():
    with pytest.raises(ValueError):
        RateTriple(-0.1, 0, 0)
    with pytest.raises(ValueError):
        RateTriple(0, float("inf"), 0)
    assert tuple(RateTriple(1, 2, 3)) == (1.0, 2.0, 3.0)


def test_capacity_membership_examples():
    assert regions.in_capacity_region(CFG, (0, 0, 0), eps=0.0)
    m = regions.in_capacity_region(CFG, (0.4, 0.4, 0.4), eps=1e-9)
    assert m.inside
    grid_alpha = oracles.feasible_alphas(3.0, (1, 1, 1), (0.4, 0.4, 0.4))[0]
    assert m.alpha == pytest.approx(grid_alpha, abs=1e-5)
    assert m.alpha == pytest.approx(0.247, abs=1e-3)
    assert not regions.in_capacity_region(CFG, (1.1, 0, 0))
    with pytest.raises(ValueError):
        regions.in_capacity_region(CFG, (0.1, 0.1, 0.1), eps=-1.0)


def test_witness_alpha_is_feasible():
    m = regions.in_capacity_region(CFG, (0.4, 0.4, 0.4))
    b1, b2, b3, _ = regions.layer_bounds(CFG, m.alpha)
    assert b1 - 0.4 >= 1e-9 * 0.999 and b2 > 0.4 and b3 > 0.4


def test_multiplex_membership_examples():
    for s in StrategyRegion:
        assert regions.in_multiplex_region(CFG, (0, 0, 0), s, eps=0.0)
    w = (0.4, 0.4, 0.4)
    for s in regions.MULTIPLEX_STRATEGIES + (StrategyRegion.MULTIPLEX_UNION,):
        assert not regions.in_multiplex_region(CFG, w, s)
        assert not oracles.inside(3.0, (1, 1, 1), w, STRATS[s])


def test_violated_constraint_messages():
    w = (0.4, 0.4, 0.4)
    sc = regions.violated_constraints(CFG, w, StrategyRegion.MULTIPLEX_SC)
    assert len(sc) == 1 and sc[0].startswith("R2+R3 0.8 >= 0.5999999")
    tin = regions.violated_constraints(CFG, w, StrategyRegion.MULTIPLEX_TIN)
    assert [t.split(" ")[0] for t in tin] == ["R2", "R3"]
    # the treat-as-noise split caps R2 near 0.282
    assert float(tin[0].split(" ")[3]) == pytest.approx(0.2828, abs=1e-3)
    assert regions.violated_constraints(CFG, w, StrategyRegion.MULTIPLEX_SD) == ["sum rate 1.2 >= 1.0"]
    assert regions.violated_constraints(CFG, (0.1, 0.1, 0.1), StrategyRegion.MULTIPLEX_SC) == []
    over = regions.violated_constraints(CFG, (1.5, 0, 0), StrategyRegion.CAPACITY)
    assert "every alpha" in over[0]
    with pytest.raises(ValueError):
        regions.violated_constraints(CFG, w, StrategyRegion.MULTIPLEX_UNION)


def test_analytic_membership_matches_grid_oracle():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(1000):
        cfg = random_cfg(rng)
        P, N = cfg.power, cfg.noise
        top = oracles.c(P / N[0]) if P > 0 else 0.1
        rates = tuple(rng.uniform(0, 0.6 * top + 1e-3, 3))
        for s, name in STRATS.items():
            if s is StrategyRegion.MULTIPLEX_UNION:
                continue
            want = oracles.inside(P, N, rates, name)
            got = bool(regions.multiplex_mask(cfg, rates, s))
            if got != want:
                # only splits thinner than the grid step may disagree
                feas = oracles.feasible_alphas(P, N, rates, name, eps=0.0, grid=np.linspace(0, 1, 2_000_001))
                assert feas.size == 0 or feas[-1] - feas[0] < 2e-5, (cfg, rates, s)
            checked += 1
    assert checked == 4000


def test_capacity_mask_grid_agrees_with_analytic():
    for rates in [(0.4, 0.4, 0.4), (0.1, 0.9, 0.0), (0.5, 0.5, 0.5), (0.9, 0.05, 0.05)]:
        assert bool(regions.capacity_mask_grid(CFG, rates)) == bool(regions.in_capacity_region(CFG, rates))


@settings(max_examples=300, deadline=None)
@given(
    st.floats(0, 20),
    st.lists(st.floats(0.05, 10), min_size=3, max_size=3),
    st.lists(st.floats(0, 2), min_size=3, max_size=3),
)
def test_strategy_regions_nest_inside_capacity(P, noise, rates):
    cfg = ChannelConfig(P, sorted(noise))
    cap = bool(regions.in_capacity_region(cfg, rates))
    for s in regions.MULTIPLEX_STRATEGIES:
        if regions.in_multiplex_region(cfg, rates, s):
            assert cap


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 20), st.lists(st.floats(0.05, 10), min_size=3, max_size=3))
def test_boundary_monotone_and_ordered(P, noise):
    cfg = ChannelConfig(P, sorted(noise))
    a = np.linspace(0, 1, 201)
    b1, b2, b3, _ = regions.layer_bounds(cfg, a)
    assert np.all(np.diff(b1) >= -1e-15)
    assert np.all(np.diff(b2) <= 1e-15) and np.all(np.diff(b3) <= 1e-15)
    assert np.all(b2 >= b3 - 1e-15)


def test_shared_bound_at_receiver_one_is_redundant():
    # whenever R2, R3 meet their own bounds, receiver 1 can decode the XOR layer
    rng = np.random.default_rng(7)
    held = 0
    for _ in range(1000):
        cfg = random_cfg(rng)
        alpha = float(rng.uniform())
        _, b2, b3, b9 = (float(v) for v in regions.layer_bounds(cfg, alpha))
        r2, r3 = rng.uniform(0, 1) * b2, rng.uniform(0, 1) * b3
        held += max(r2, r3) <= b9
    assert held == 1000


def test_gap_witness_examples():
    w = regions.gap_witness(CFG)
    assert w is not None and oracles.is_gap_witness(3.0, (1, 1, 1), tuple(w))
    assert oracles.is_gap_witness(3.0, (1, 1, 1), (0.4, 0.4, 0.4))
    assert regions.gap_witness(ChannelConfig(0.0, (1, 1, 1))) is None
    w = regions.gap_witness(ChannelConfig(3.0, (1, 2, 4)))
    assert w is not None and oracles.is_gap_witness(3.0, (1, 2, 4), tuple(w))


def _gap_condition(P, N):
    # a gap needs some split where the two fibres together exceed what receiver 1 can resolve
    b = oracles.bounds(P, N, np.linspace(0, 1, 10_001))
    return bool(np.any(b["r2"] + b["r3"] > b["sc"] + 1e-9))


@pytest.mark.parametrize(
    "P, N", [(1, (1, 1, 1)), (10, (1, 2, 4)), (3, (1, 10, 100)), (0.5, (1, 1.5, 2)), (100, (1, 50, 60))]
)
def test_gap_witness_exists_iff_fibres_overload_receiver_one(P, N):
    cfg = ChannelConfig(P, N)
    w = regions.gap_witness(cfg)
    assert (w is not None) == _gap_condition(P, N)
    if w is not None:
        assert oracles.is_gap_witness(P, N, tuple(w))


def test_boundary_sweep():
    rows = regions.boundary_sweep(CFG, [0.0, 1.0])
    assert rows[0][1].as_tuple() == pytest.approx((0, 1, 1)) and rows[1][1].as_tuple() == pytest.approx((1, 0, 0))
    rows = regions.boundary_sweep(CFG, np.linspace(0, 1, 101))
    r = np.array([p.as_tuple() for _, p in rows])
    assert len(rows) == 101
    assert np.all(np.diff(r[:, 0]) >= 0) and np.all(np.diff(r[:, 1]) <= 0) and np.all(np.diff(r[:, 2]) <= 0)
    assert regions.boundary_sweep(CFG, [0.5])[0][1] == regions.boundary_point(CFG, 0.5)
    with pytest.raises(ValueError):
        regions.boundary_sweep(CFG, [])
    with pytest.raises(ValueError):
        regions.boundary_sweep(CFG, [0.5, 0.2])


def test_boundary_csv_round_trip():
    cfg = ChannelConfig(7.0, (1.0, 2.5, 3.0))
    rows = regions.boundary_sweep(cfg, np.linspace(0, 1, 11))
    buf = io.StringIO()
    regions.write_boundary_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "alpha,R1,R2,R3" and len(lines) == 12
    for line, (a, p) in zip(lines[1:], rows):
        vals = [float(v) for v in line.split(",")]
        for got, want in zip(vals, (a, *p)):
            assert f"{got:.12g}" == f"{want:.12g}"


def test_gap_measure():
    assert regions.region_gap_measure(ChannelConfig(0.0, (1, 1, 1))) == 0.0
    m = regions.region_gap_measure(CFG, 50)
    assert m > 0
    assert regions.region_gap_measure(CFG, 20, eps=0.05) <= regions.region_gap_measure(CFG, 20, eps=1e-9)
    with pytest.raises(ValueError):
        regions.region_gap_measure(CFG, 1)


def test_feasible_interval():
    lo, hi = regions.feasible_alpha_interval(CFG, (0.4, 0.4, 0.4))
    feas = oracles.feasible_alphas(3.0, (1, 1, 1), (0.4, 0.4, 0.4))
    assert lo == pytest.approx(feas[0], abs=1e-5) and hi == pytest.approx(feas[-1], abs=1e-5)
    assert regions.feasible_alpha_interval(CFG, (1.1, 0, 0)) is None


def test_two_receiver_bounds():
    b = regions.two_receiver_superposition_bounds(ChannelConfig(3.0, (1.0, 2.0)), 0.5)
    assert b["u"] == pytest.approx(oracles.c(1.5))
    assert b["fiber1"] == pytest.approx(oracles.c(1.5 / 2.5))
    assert b["fiber2"] == pytest.approx(oracles.c(1.5 / 3.5))
    with pytest.raises(ValueError):
        regions.two_receiver_superposition_bounds(CFG, 0.5)
