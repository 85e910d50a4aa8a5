"""Rate regions of the three-receiver degraded AWGN broadcast channel.

Receiver 1 wants M1 and knows nothing, receiver 2 wants M2 and knows M3,
receiver 3 wants M3 and knows M2. The capacity region is the union over the
power split ``alpha`` of the rate triples bounded by::

    R1 < C(alpha P / N1)
    R2 < C((1 - alpha) P / (alpha P + N2))
    R3 < C((1 - alpha) P / (alpha P + N3))

Three non-index strategies (M2 and M3 merged into one composite message)
add one constraint each at receiver 1:

* successive cancellation: R2 + R3 < C((1 - alpha) P / (alpha P + N1))
* treat as noise: R1 < C(alpha P / ((1 - alpha) P + N1)) replaces the R1 bound
* simultaneous decoding: R1 + R2 + R3 < C(P / N1)

Membership is decided with a margin: every bound must exceed its rate (or
rate sum) by at least ``eps``. With ``eps > 0`` boundary points are excluded;
with ``eps = 0`` the closed region is tested.

All bounds that carry ``alpha`` are monotone in it, so membership reduces to
a single evaluation at the smallest admissible split (see
:func:`in_capacity_region`). The brute-force grid versions are kept alongside
for cross-checking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig
from .formatting import fmt_float

DEFAULT_EPS = 1e-9
WITNESS_ALPHA_STEP = 1e-4


@dataclass(frozen=True)
class RateTriple:
    r1: float
    r2: float
    r3: float

    def __post_init__(self):
        for name in ("r1", "r2", "r3"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
            object.__setattr__(self, name, v)

    def __iter__(self):
        return iter((self.r1, self.r2, self.r3))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)


class StrategyRegion(enum.Enum):
    CAPACITY = "capacity"
    MULTIPLEX_SC = "multiplex-sc"
    MULTIPLEX_TIN = "multiplex-tin"
    MULTIPLEX_SD = "multiplex-sd"
    MULTIPLEX_UNION = "multiplex-union"


MULTIPLEX_STRATEGIES = (
    StrategyRegion.MULTIPLEX_SC,
    StrategyRegion.MULTIPLEX_TIN,
    StrategyRegion.MULTIPLEX_SD,
)


@dataclass(frozen=True)
class Membership:
    """Outcome of a membership query; truthy when the point is inside."""

    inside: bool
    alpha: float | None = None
    strategy: StrategyRegion | None = None

    def __bool__(self):
        return self.inside


def _cap(x):
    return 0.5 * np.log2(1.0 + x)


def _inv_cap(r):
    # smallest snr with C(snr) >= r
    return np.expm1(2.0 * np.log(2.0) * np.asarray(r, dtype=float))


def _check3(cfg: ChannelConfig):
    if cfg.receivers != 3:
        raise ValueError(f"this region is defined for 3 receivers, got {cfg.receivers}")


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def layer_bounds(cfg: ChannelConfig, alpha):
    """Bounds on R1, R2, R3 and the composite bound at receiver 1 for split(s) ``alpha``.

    Returns four arrays broadcast against ``alpha``: C(aP/N1),
    C((1-a)P/(aP+N2)), C((1-a)P/(aP+N3)) and C((1-a)P/(aP+N1)).
    """
    _check3(cfg)
    a = np.asarray(alpha, dtype=float)
    P = cfg.power
    n1, n2, n3 = cfg.noise
    rest = (1.0 - a) * P
    return (
        _cap(a * P / n1),
        _cap(rest / (a * P + n2)),
        _cap(rest / (a * P + n3)),
        _cap(rest / (a * P + n1)),
    )


def boundary_point(cfg: ChannelConfig, alpha: float) -> RateTriple:
    """Supremum rates of the capacity region at power split ``alpha``."""
    alpha = _check_alpha(alpha)
    b1, b2, b3, _ = layer_bounds(cfg, alpha)
    return RateTriple(float(b1), float(b2), float(b3))


def boundary_sweep(cfg: ChannelConfig, alphas: Sequence[float]) -> list[tuple[float, RateTriple]]:
    alphas = [_check_alpha(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha grid is empty")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha grid must be sorted")
    return [(a, boundary_point(cfg, a)) for a in alphas]


def write_boundary_csv(rows: Iterable[tuple[float, RateTriple]], fh) -> None:
    fh.write("alpha,R1,R2,R3\n")
    for a, r in rows:
        fh.write(",".join(fmt_float(v) for v in (a, r.r1, r.r2, r.r3)) + "\n")


# -- vectorised membership -------------------------------------------------


def _rates(rates):
    r = np.asarray(tuple(rates) if isinstance(rates, RateTriple) else rates, dtype=float)
    if r.shape[0] != 3:
        raise ValueError("expected three rates")
    return r[0], r[1], r[2]


def _alpha_min_capacity(cfg, r1, eps):
    # smallest alpha meeting the R1 bound with margin; inf when P == 0 and r1 + eps > 0
    s = _inv_cap(r1 + eps)
    if cfg.power == 0:
        return np.where(s <= 0, 0.0, np.inf)
    with np.errstate(over="ignore"):
        return np.maximum(s * cfg.noise[0] / cfg.power, 0.0)


def _alpha_min_tin(cfg, r1, eps):
    s = _inv_cap(r1 + eps)
    if cfg.power == 0:
        return np.where(s <= 0, 0.0, np.inf)
    P, n1 = cfg.power, cfg.noise[0]
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.maximum(s * (P + n1) / (P * (1.0 + s)), 0.0)
    # s = inf means R1 is unreachable at any split
    return np.where(np.isinf(s), np.inf, out)


def _inside_at(cfg, alpha, r2, r3, eps, extra_sum=False):
    ok = alpha <= 1.0
    a = np.where(ok, alpha, 1.0)
    _, b2, b3, b9 = layer_bounds(cfg, a)
    ok = ok & (b2 - r2 >= eps) & (b3 - r3 >= eps)
    if extra_sum:
        ok = ok & (b9 - (r2 + r3) >= eps)
    return ok


def capacity_mask(cfg: ChannelConfig, rates, eps: float = DEFAULT_EPS):
    """Boolean array: rates (shape (3, ...)) inside the capacity region with margin ``eps``."""
    _check3(cfg)
    r1, r2, r3 = _rates(rates)
    return _inside_at(cfg, _alpha_min_capacity(cfg, r1, eps), r2, r3, eps)


def multiplex_mask(cfg: ChannelConfig, rates, strategy: StrategyRegion, eps: float = DEFAULT_EPS):
    _check3(cfg)
    r1, r2, r3 = _rates(rates)
    if strategy is StrategyRegion.CAPACITY:
        return capacity_mask(cfg, rates, eps)
    if strategy is StrategyRegion.MULTIPLEX_SC:
        return _inside_at(cfg, _alpha_min_capacity(cfg, r1, eps), r2, r3, eps, extra_sum=True)
    if strategy is StrategyRegion.MULTIPLEX_TIN:
        return _inside_at(cfg, _alpha_min_tin(cfg, r1, eps), r2, r3, eps)
    if strategy is StrategyRegion.MULTIPLEX_SD:
        total = _cap(cfg.power / cfg.noise[0])
        return capacity_mask(cfg, rates, eps) & (total - (r1 + r2 + r3) >= eps)
    if strategy is StrategyRegion.MULTIPLEX_UNION:
        out = np.zeros(np.broadcast(r1, r2, r3).shape, dtype=bool)
        for s in MULTIPLEX_STRATEGIES:
            out = out | multiplex_mask(cfg, rates, s, eps)
        return out
    raise ValueError(f"unknown strategy {strategy!r}")


def _witness_alpha(cfg, r1, strategy, eps) -> float:
    if strategy is StrategyRegion.MULTIPLEX_TIN:
        a = _alpha_min_tin(cfg, r1, eps)
    else:
        a = _alpha_min_capacity(cfg, r1, eps)
    return float(min(float(a), 1.0))


def in_capacity_region(cfg: ChannelConfig, rates, eps: float = DEFAULT_EPS) -> Membership:
    """Membership in the capacity region, with the smallest witnessing split."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    rates = RateTriple(*rates)
    if not bool(capacity_mask(cfg, rates.as_tuple(), eps)):
        return Membership(False, strategy=StrategyRegion.CAPACITY)
    return Membership(True, _witness_alpha(cfg, rates.r1, StrategyRegion.CAPACITY, eps), StrategyRegion.CAPACITY)


def in_multiplex_region(cfg: ChannelConfig, rates, strategy: StrategyRegion, eps: float = DEFAULT_EPS) -> Membership:
    """Membership in a non-index-coded region; the union reports the first strategy that works."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    rates = RateTriple(*rates)
    strategy = StrategyRegion(strategy)
    if strategy is StrategyRegion.MULTIPLEX_UNION:
        for s in MULTIPLEX_STRATEGIES:
            m = in_multiplex_region(cfg, rates, s, eps)
            if m:
                return m
        return Membership(False, strategy=strategy)
    if not bool(multiplex_mask(cfg, rates.as_tuple(), strategy, eps)):
        return Membership(False, strategy=strategy)
    return Membership(True, _witness_alpha(cfg, rates.r1, strategy, eps), strategy)


def feasible_alpha_interval(cfg: ChannelConfig, rates, eps: float = DEFAULT_EPS):
    """Closed interval of splits witnessing capacity membership, or None."""
    rates = RateTriple(*rates)
    if not in_capacity_region(cfg, rates, eps):
        return None
    lo = float(_alpha_min_capacity(cfg, rates.r1, eps))
    P = cfg.power
    hi = 1.0
    if P > 0:
        for r, noise in ((rates.r2, cfg.noise[1]), (rates.r3, cfg.noise[2])):
            s = float(_inv_cap(r + eps))
            hi = min(hi, (P - s * noise) / (P * (1.0 + s)))
    return (lo, max(lo, hi))


# -- grid search variants --------------------------------------------------


def capacity_mask_grid(cfg: ChannelConfig, rates, eps: float = DEFAULT_EPS, step: float = 1e-5):
    """Scalar membership decided by scanning alpha on a uniform grid."""
    r1, r2, r3 = (float(v) for v in RateTriple(*rates))
    alphas = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    b1, b2, b3, _ = layer_bounds(cfg, alphas)
    ok = (b1 - r1 >= eps) & (b2 - r2 >= eps) & (b3 - r3 >= eps)
    if not ok.any():
        return Membership(False, strategy=StrategyRegion.CAPACITY)
    return Membership(True, float(alphas[np.argmax(ok)]), StrategyRegion.CAPACITY)


# -- constraint diagnostics -------------------------------------------------


def violated_constraints(cfg: ChannelConfig, rates, strategy: StrategyRegion, eps: float = DEFAULT_EPS) -> list[str]:
    """Human-readable constraints that fail at the most favourable split; empty when inside."""
    rates = RateTriple(*rates)
    strategy = StrategyRegion(strategy)
    if strategy is StrategyRegion.MULTIPLEX_UNION:
        raise ValueError("ask each strategy separately")
    r1, r2, r3 = rates
    out: list[str] = []
    f = fmt_float
    if strategy is StrategyRegion.MULTIPLEX_SD:
        total = float(_cap(cfg.power / cfg.noise[0]))
        if total - (r1 + r2 + r3) < eps:
            out.append(f"sum rate {f(r1 + r2 + r3)} >= {f(total)}")
        out += violated_constraints(cfg, rates, StrategyRegion.CAPACITY, eps)
        return out

    if strategy is StrategyRegion.MULTIPLEX_TIN:
        a = float(_alpha_min_tin(cfg, r1, eps))
        limit = "treat-as-noise limit C(aP/((1-a)P+N1))"
    else:
        a = float(_alpha_min_capacity(cfg, r1, eps))
        limit = "C(aP/N1)"
    if a > 1.0:
        top = float(_cap(cfg.power / cfg.noise[0]))
        out.append(f"R1 {f(r1)} exceeds {limit} for every alpha (max {f(top)})")
        return out
    _, b2, b3, b9 = (float(v) for v in layer_bounds(cfg, a))
    where = f"at alpha={f(a)}"
    if b2 - r2 < eps:
        out.append(f"R2 {f(r2)} >= {f(b2)} {where}")
    if b3 - r3 < eps:
        out.append(f"R3 {f(r3)} >= {f(b3)} {where}")
    if strategy is StrategyRegion.MULTIPLEX_SC and b9 - (r2 + r3) < eps:
        out.append(f"R2+R3 {f(r2 + r3)} >= {f(b9)} {where}")
    return out


# -- gap between index coding and the non-index strategies -------------------


def _union_scale_threshold(cfg, b, eps, iters=60):
    # smallest lambda in [0, 1] such that lambda * b leaves the multiplex union;
    # the union is down-closed so a bisection on lambda is exact up to 2**-iters
    lo = np.zeros(b.shape[1])
    hi = np.ones(b.shape[1])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = multiplex_mask(cfg, b * mid, StrategyRegion.MULTIPLEX_UNION, eps)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return hi


def gap_witness(cfg: ChannelConfig, eps: float = DEFAULT_EPS, alpha_step: float = WITNESS_ALPHA_STEP):
    """A rate triple inside the capacity region but outside every non-index strategy.

    Scans boundary points on an ``alpha`` grid, finds for each the scale at
    which the scaled boundary point leaves the multiplex union, and returns
    the point halfway between that scale and the boundary for the split with
    the widest gap. Returns None when no split exhibits a gap (P = 0, or the
    weaker receivers are too noisy for the composite constraint to bind).
    """
    _check3(cfg)
    if cfg.power == 0:
        return None
    alphas = np.linspace(0.0, 1.0, int(round(1.0 / alpha_step)) + 1)
    b = np.vstack(layer_bounds(cfg, alphas)[:3])
    lam = _union_scale_threshold(cfg, b, eps)
    depth = 1.0 - lam
    for idx in np.argsort(-depth, kind="stable")[:50]:
        if depth[idx] < 1e-6:
            break
        scale = 0.5 * (1.0 + lam[idx])
        exact = b[:, idx] * scale
        for cand in (np.round(exact, 4), exact):
            if (cand < 0).any():
                continue
            r = RateTriple(*cand)
            if in_capacity_region(cfg, r, eps) and not in_multiplex_region(cfg, r, StrategyRegion.MULTIPLEX_UNION, eps):
                return r
    return None


def region_gap_measure(cfg: ChannelConfig, resolution: int = 50, eps: float = DEFAULT_EPS) -> float:
    """Fraction of a uniform rate grid lying in the capacity region but outside the multiplex union.

    The grid spans [0, C(P/N_i)] on axis i with ``resolution`` points per axis.
    """
    _check3(cfg)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if cfg.power == 0:
        return 0.0
    axes = [np.linspace(0.0, float(_cap(cfg.power / n)), resolution) for n in cfg.noise]
    grid = np.stack(np.meshgrid(*axes, indexing="ij")).reshape(3, -1)
    inside = capacity_mask(cfg, grid, eps)
    union = multiplex_mask(cfg, grid, StrategyRegion.MULTIPLEX_UNION, eps)
    return float(np.count_nonzero(inside & ~union)) / grid.shape[1]


def two_receiver_superposition_bounds(cfg: ChannelConfig, alpha: float) -> dict[str, float]:
    """Rate limits of the layered two-receiver schemes at split ``alpha``.

    ``u`` bounds receiver 1's private layer after cancellation, ``fiber1`` and
    ``fiber2`` bound the uncertainty each receiver resolves in the shared
    layer while treating the private layer as noise.
    """
    if cfg.receivers != 2:
        raise ValueError("two receivers expected")
    alpha = _check_alpha(alpha)
    P = cfg.power
    n1, n2 = cfg.noise
    return {
        "u": float(_cap(alpha * P / n1)),
        "fiber1": float(_cap((1 - alpha) * P / (alpha * P + n1))),
        "fiber2": float(_cap((1 - alpha) * P / (alpha * P + n2))),
    }
