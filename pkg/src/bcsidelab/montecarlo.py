"""Block-error Monte Carlo for the layered schemes.

Two decoders are available:

``exhaustive``
    Draws real codebooks (fresh per trial, or one fixed pair), encodes
    uniform messages, adds noise and runs the nearest-codeword decoders of
    :mod:`bcsidelab.decode` at every receiver. Bounded by the resource caps.

``ensemble``
    Samples the decision of a fresh random codebook without materialising
    it (see :mod:`bcsidelab.ensemble`). Exact for the single-layer searches
    (successive cancellation, treat-as-noise, receivers 2 and 3); the
    simultaneous decoder is approximate and flagged as such.

Every random draw is keyed by (master seed, stream, trial, ...) so a
scenario's statistics do not depend on how trials are split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .caps import Caps, check
from .channel import (
    SAMPLERS,
    STREAM_CODEBOOK,
    STREAM_DECISION,
    STREAM_MESSAGES,
    ChannelConfig,
    NoiseRealization,
    rng_for,
    transmit,
)
from .codec import MessageConfig, SchemeId, build_codebooks, check_alpha, shared_bits, shared_index, superpose
from .decode import DecodeStrategy, candidate_set, decode_receiver, decodes_private_layer, fiber_size
from .ensemble import sample_min_distance, search_error_probability, simultaneous_error_probability
from .formatting import fmt_float, round12

Z95 = 1.959963984540054
DECODERS = ("exhaustive", "ensemble")
CODEBOOK_MODES = ("fresh", "fixed")


@dataclass(frozen=True)
class Scenario:
    cfg: ChannelConfig
    scheme: SchemeId
    msgcfg: MessageConfig
    alpha: float
    strategy: DecodeStrategy = DecodeStrategy.SUCCESSIVE_CANCEL
    trials: int = 1000
    seed: int = 0
    target_rates: tuple[float, ...] | None = None
    codebooks: str = "fresh"
    decoder: str = "exhaustive"
    sampler: str = "independent"
    zero_noise: bool = False
    caps: Caps = field(default_factory=Caps.resolve)

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeId.parse(self.scheme))
        object.__setattr__(self, "strategy", DecodeStrategy.parse(self.strategy))
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        spec = self.scheme.spec
        if self.cfg.receivers != spec.receivers:
            raise ValueError(f"{self.scheme.value} needs {spec.receivers} receivers, channel has {self.cfg.receivers}")
        if len(self.msgcfg.bits) != spec.messages:
            raise ValueError(f"{self.scheme.value} carries {spec.messages} messages, got {len(self.msgcfg.bits)}")
        if self.target_rates is not None:
            if len(self.target_rates) != spec.messages:
                raise ValueError("one target rate per message is required")
            object.__setattr__(self, "target_rates", tuple(float(r) for r in self.target_rates))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")
        if self.codebooks not in CODEBOOK_MODES:
            raise ValueError(f"codebooks must be one of {CODEBOOK_MODES}")
        if self.decoder not in DECODERS:
            raise ValueError(f"decoder must be one of {DECODERS}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {tuple(SAMPLERS)}")
        if self.decoder == "ensemble" and self.codebooks != "fresh":
            raise ValueError("the ensemble decoder models fresh codebooks only")
        if spec.receivers == 2 and self.strategy is DecodeStrategy.TREAT_AS_NOISE:
            raise ValueError("receiver 1 of a two-receiver scheme wants shared-layer messages; treat-as-noise is not applicable")
        if spec.receivers == 2 and self.decoder == "ensemble" and self.strategy is DecodeStrategy.SIMULTANEOUS:
            raise ValueError("the ensemble decoder supports simultaneous decoding for three-receiver schemes only")

    @property
    def n(self) -> int:
        return self.msgcfg.n

    @property
    def approximate(self) -> bool:
        return self.decoder == "ensemble" and self.strategy is DecodeStrategy.SIMULTANEOUS

    def check_caps(self) -> None:
        """Raise :class:`ResourceCapError` before any work if the exhaustive decoder would exceed a cap."""
        if self.decoder != "exhaustive":
            return
        check(1 << self.msgcfg.bits[0], self.caps.codebook, "private-layer codebook")
        check(1 << shared_bits(self.scheme, self.msgcfg), self.caps.codebook, "shared-layer codebook")
        spec = self.scheme.spec
        for r in range(1, spec.receivers + 1):
            free = {m for f in spec.fields for m in f} - set(spec.knows[r])
            check(1 << sum(self.msgcfg.bits[m - 1] for m in free), self.caps.candidates, f"receiver {r} candidates")
            if decodes_private_layer(self.scheme, r):
                check(fiber_size(self.scheme, r, self.msgcfg, "u"), self.caps.candidates, f"receiver {r} private candidates")
                if self.strategy is DecodeStrategy.SIMULTANEOUS:
                    pairs = fiber_size(self.scheme, r, self.msgcfg, "u") * fiber_size(self.scheme, r, self.msgcfg)
                    check(pairs, self.caps.candidates, "simultaneous candidate pairs")


@dataclass(frozen=True)
class ReceiverStats:
    receiver: int
    errors: int
    trials: int
    estimate: float
    ci_lo: float
    ci_hi: float
    target_rate: float
    realized_rate: float


@dataclass(frozen=True)
class TrialStats:
    scheme: str
    strategy: str
    n: int
    alpha: float
    seed: int
    trials: int
    decoder: str
    codebooks: str
    approximate: bool
    receivers: tuple[ReceiverStats, ...]
    # receiver 1's shared-layer decision errors (successive cancellation and exhaustive simultaneous only)
    shared_layer_errors: int | None = None

    def receiver(self, r: int) -> ReceiverStats:
        return self.receivers[r - 1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["receivers"] = [asdict(r) for r in self.receivers]
        return d

    def csv_rows(self) -> list[list[str]]:
        return [
            [
                self.scheme,
                self.strategy,
                str(self.n),
                str(r.receiver),
                fmt_float(r.target_rate),
                fmt_float(r.realized_rate),
                str(r.errors),
                str(r.trials),
                fmt_float(r.estimate),
                fmt_float(r.ci_lo),
                fmt_float(r.ci_hi),
                str(self.seed),
            ]
            for r in self.receivers
        ]


CSV_HEADER = "scheme,strategy,n,receiver,target_rate,realized_rate,errors,trials,err_rate,ci_lo,ci_hi,seed"


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, min(p, center - half)), min(1.0, max(p, center + half))


# -- per-trial kernels -------------------------------------------------------


def _noise(s: Scenario, trial: int) -> NoiseRealization:
    if s.zero_noise:
        return NoiseRealization(np.zeros((s.cfg.receivers, s.n)))
    return SAMPLERS[s.sampler](s.cfg, s.n, s.seed, trial)


def _messages(s: Scenario, trial: int) -> list[int]:
    rng = rng_for(s.seed, STREAM_MESSAGES, trial)
    return [int(rng.integers(0, 1 << k)) if k else 0 for k in s.msgcfg.bits]


def _exhaustive_chunk(s: Scenario, trials: range):
    spec = s.scheme.spec
    R = spec.receivers
    errors = np.zeros((len(trials), R), dtype=bool)
    shared = np.zeros(len(trials), dtype=bool)
    fixed = build_codebooks(s.scheme, s.cfg, s.msgcfg, s.alpha, s.seed, None, caps=s.caps) if s.codebooks == "fixed" else None
    cand_cache: dict = {}
    for row, t in enumerate(trials):
        books = fixed or build_codebooks(s.scheme, s.cfg, s.msgcfg, s.alpha, s.seed, t, caps=s.caps)
        msgs = _messages(s, t)
        x = superpose(books, s.scheme, s.msgcfg, msgs)
        noise = _noise(s, t)
        true_v = shared_index(s.scheme, s.msgcfg, msgs)
        for r in range(1, R + 1):
            known = {m: msgs[m - 1] for m in sorted(spec.knows[r])}
            key = (r, tuple(known.items()))
            if key not in cand_cache:
                cand_cache = {k: v for k, v in cand_cache.items() if k[0] != r}
                cand_cache[key] = candidate_set(s.scheme, r, s.msgcfg, known, s.caps)
            dec = decode_receiver(s.scheme, r, transmit(x, noise, r), books, s.msgcfg, known, s.strategy, s.caps, cand_cache[key])
            wrong = any(dec.messages[m] != msgs[m - 1] for m in spec.wants[r])
            if decodes_private_layer(s.scheme, r) and dec.v_index is not None:
                shared[row] = dec.v_index != true_v
                if s.strategy is DecodeStrategy.SUCCESSIVE_CANCEL:
                    # M1 rides on the cancelled codeword, so a wrong shared decision counts
                    wrong = wrong or shared[row]
            errors[row, r - 1] = wrong
    return errors, shared


def _ensemble_chunk(s: Scenario, trials: range):
    spec = s.scheme.spec
    R, n = spec.receivers, s.n
    P, a = s.cfg.power, s.alpha
    var_u, var_v = a * P, (1 - a) * P
    T = len(trials)
    wrong_u = float(fiber_size(s.scheme, 1, s.msgcfg, "u") - 1)

    # per-trial squared norms; the codebook draws use their own streams
    own_v = np.zeros((T, R))  # |y_r - v|^2 = |u + z_r|^2
    tgt_v = np.zeros((T, R))  # |y_r|^2
    u_after = np.zeros(T)  # |z_1|^2, private search after cancellation
    tgt_u_after = np.zeros(T)  # |u + z_1|^2
    tin_true = np.zeros(T)  # |v + z_1|^2
    unif = np.zeros((T, R + 2))  # one column per receiver's shared search, then private, then joint
    for row, t in enumerate(trials):
        u = math.sqrt(var_u) * rng_for(s.seed, STREAM_CODEBOOK, s.scheme.code, 0, t).standard_normal(n)
        v = math.sqrt(var_v) * rng_for(s.seed, STREAM_CODEBOOK, s.scheme.code, 1, t).standard_normal(n)
        noise = _noise(s, t)
        for r in range(1, R + 1):
            z = noise[r]
            own_v[row, r - 1] = np.dot(u + z, u + z)
            y = u + v + z
            tgt_v[row, r - 1] = np.dot(y, y)
        z1 = noise[1]
        u_after[row] = np.dot(z1, z1)
        tgt_u_after[row] = own_v[row, 0]
        tin_true[row] = np.dot(v + z1, v + z1)
        unif[row] = rng_for(s.seed, STREAM_DECISION, t).random(R + 2)

    errors = np.zeros((T, R), dtype=bool)
    shared = np.zeros(T, dtype=bool)
    for r in range(1, R + 1):
        wrong_v = float(fiber_size(s.scheme, r, s.msgcfg) - 1)
        p_v = search_error_probability(own_v[:, r - 1], tgt_v[:, r - 1], var_v, n, wrong_v)
        v_err = unif[:, r - 1] < p_v
        if not decodes_private_layer(s.scheme, r):
            errors[:, r - 1] = v_err
            continue
        if s.strategy is DecodeStrategy.SUCCESSIVE_CANCEL:
            p_u = search_error_probability(u_after, tgt_u_after, var_u, n, wrong_u)
            shared[:] = v_err
            errors[:, r - 1] = v_err | (unif[:, R] < p_u)
        elif s.strategy is DecodeStrategy.TREAT_AS_NOISE:
            p_u = search_error_probability(tin_true, tgt_v[:, 0], var_u, n, wrong_u)
            errors[:, r - 1] = unif[:, R] < p_u
        else:
            # best wrong-v pair keeping the true u: target y - u = v + z
            min_v = sample_min_distance(unif[:, R + 1], tin_true, var_v, n, wrong_v)
            p = simultaneous_error_probability(
                u_after, min_v, tgt_u_after, tgt_v[:, 0], var_u, P, n, wrong_u, wrong_v
            )
            errors[:, r - 1] = unif[:, R] < p
    return errors, shared


def _run_chunk(args):
    s, start, stop = args
    kernel = _ensemble_chunk if s.decoder == "ensemble" else _exhaustive_chunk
    return kernel(s, range(start, stop))


def default_workers() -> int:
    return os.cpu_count() or 1


def run_trials(s: Scenario, workers: int = 1) -> TrialStats:
    """Estimate per-receiver block-error rates; deterministic in the scenario."""
    s.check_caps()
    T = int(s.trials)
    workers = max(1, min(int(workers), T))
    if workers == 1:
        errors, shared = _run_chunk((s, 0, T))
    else:
        bounds = np.linspace(0, T, min(T, workers * 4) + 1).astype(int)
        jobs = [(s, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
        errors = np.concatenate([p[0] for p in parts])
        shared = np.concatenate([p[1] for p in parts])
    return _summarize(s, errors, shared)


def _summarize(s: Scenario, errors: np.ndarray, shared: np.ndarray) -> TrialStats:
    spec = s.scheme.spec
    targets = s.target_rates or s.msgcfg.rates
    receivers = []
    for r in range(1, spec.receivers + 1):
        e = int(errors[:, r - 1].sum())
        lo, hi = wilson_interval(e, s.trials)
        wants = sorted(spec.wants[r])
        receivers.append(
            ReceiverStats(
                receiver=r,
                errors=e,
                trials=int(s.trials),
                estimate=e / s.trials,
                ci_lo=round12(lo),
                ci_hi=round12(hi),
                target_rate=round12(sum(targets[m - 1] for m in wants)),
                realized_rate=round12(sum(s.msgcfg.rates[m - 1] for m in wants)),
            )
        )
    tracks_shared = s.strategy is DecodeStrategy.SUCCESSIVE_CANCEL or (
        s.strategy is DecodeStrategy.SIMULTANEOUS and s.decoder == "exhaustive"
    )
    return TrialStats(
        scheme=s.scheme.value,
        strategy=s.strategy.value,
        n=s.n,
        alpha=s.alpha,
        seed=int(s.seed),
        trials=int(s.trials),
        decoder=s.decoder,
        codebooks=s.codebooks,
        approximate=s.approximate,
        receivers=tuple(receivers),
        shared_layer_errors=int(shared.sum()) if tracks_shared else None,
    )


def realize_bits(rates: Sequence[float], n: int, tolerance: float | None = None, rounding: str = "floor") -> MessageConfig:
    """Integer bit lengths for ``n * R_j``, optionally enforcing a rate tolerance."""
    mc = MessageConfig.from_rates(rates, n, rounding)
    if tolerance is not None:
        worst = max((abs(k / n - r) for k, r in zip(mc.bits, rates)), default=0.0)
        if worst > tolerance + 1e-12:
            raise ValueError(f"n={n} realizes rates {mc.rates}, off target by {worst:.4g} > {tolerance}")
    return mc


def sweep_blocklength(
    s: Scenario, n_list: Sequence[int], workers: int = 1, tolerance: float = 0.02, rounding: str = "floor"
):
    """Rerun ``s`` at each blocklength with bit lengths re-derived from its target rates."""
    targets = s.target_rates or s.msgcfg.rates
    out = []
    for n in n_list:
        mc = realize_bits(targets, int(n), tolerance, rounding)
        out.append((int(n), run_trials(replace(s, msgcfg=mc, target_rates=targets), workers)))
    return out


# -- paired comparison -------------------------------------------------------


@dataclass(frozen=True)
class ReceiverComparison:
    receiver: int
    p_a: float
    p_b: float
    pooled_se: float
    z: float
    distinguishable: bool


@dataclass(frozen=True)
class Comparison:
    verdict: str
    exact_equal: bool
    receivers: tuple[ReceiverComparison, ...]
    threshold_se: float = 3.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["receivers"] = [asdict(r) for r in self.receivers]
        return d


def _same_shape(a: Scenario, b: Scenario) -> None:
    if a.scheme.spec.receivers != b.scheme.spec.receivers or a.scheme.spec.messages != b.scheme.spec.messages:
        raise ValueError("schemes address different receiver/message rosters")
    for name in ("cfg", "msgcfg", "alpha", "strategy", "trials", "codebooks", "decoder", "sampler", "zero_noise"):
        if getattr(a, name) != getattr(b, name):
            raise ValueError(f"scenarios differ in {name}; only the scheme (and seed) may differ")


def compare_stats(a: TrialStats, b: TrialStats, threshold: float = 3.0) -> Comparison:
    rows = []
    for ra, rb in zip(a.receivers, b.receivers):
        pa, pb = ra.estimate, rb.estimate
        pooled = (ra.errors + rb.errors) / (ra.trials + rb.trials)
        se = math.sqrt(pooled * (1 - pooled) * (1 / ra.trials + 1 / rb.trials))
        diff = abs(pa - pb)
        z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
        rows.append(ReceiverComparison(ra.receiver, pa, pb, round12(se), round12(z), not diff < threshold * se and diff > 0))
    bad = [r.receiver for r in rows if r.distinguishable]
    exact = all(ra.errors == rb.errors for ra, rb in zip(a.receivers, b.receivers))
    verdict = "indistinguishable" if not bad else "distinguishable: " + ", ".join(f"receiver {r}" for r in bad)
    return Comparison(verdict, exact, tuple(rows), threshold)


def compare_schemes(a: Scenario, b: Scenario, workers: int = 1, threshold: float = 3.0) -> tuple[Comparison, TrialStats, TrialStats]:
    """Run both scenarios and test each receiver's error rates for equality (two-proportion z-test)."""
    _same_shape(a, b)
    sa = run_trials(a, workers)
    sb = run_trials(b, workers)
    return compare_stats(sa, sb, threshold), sa, sb
