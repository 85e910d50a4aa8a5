"""Command-line interface: region tables, gap witnesses, simulations and comparisons.

Exit codes: 0 success, 2 validation error, 3 resource cap exceeded, 4 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from pathlib import Path

from . import regions
from .caps import Caps, ResourceCapError
from .channel import ChannelConfig
from .codec import MessageConfig, SchemeId
from .decode import DecodeStrategy
from .formatting import round12
from .montecarlo import CSV_HEADER, Scenario, compare_stats, default_workers, realize_bits, run_trials, _same_shape

log = logging.getLogger("bcsidelab")

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_IO = 0, 2, 3, 4

SCENARIO_KEYS = {
    "power",
    "noise",
    "scheme",
    "rates",
    "bit_lengths",
    "n",
    "alpha",
    "strategy",
    "trials",
    "seed",
    "caps",
    "decoder",
    "codebooks",
    "sampler",
    "zero_noise",
    "rounding",
}
REQUIRED_KEYS = ("power", "noise", "scheme", "n", "alpha")


class ScenarioError(ValueError):
    def __init__(self, message: str, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


def _listify(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


def scenarios_from_doc(doc: dict, seed: int | None = None, n_list=None) -> list[Scenario]:
    """Validate a scenario document and expand list-valued scheme/strategy/n into runs."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario file must hold a JSON object")
    unknown = sorted(set(doc) - SCENARIO_KEYS)
    if unknown:
        raise ScenarioError(f"unknown keys: {', '.join(unknown)}", unknown)
    missing = [k for k in REQUIRED_KEYS if k not in doc and not (k == "n" and n_list)]
    if ("rates" in doc) == ("bit_lengths" in doc):
        missing.append("rates|bit_lengths")
    if missing:
        raise ScenarioError(f"missing keys: {', '.join(missing)}", missing)

    bad = []

    def field(key, fn):
        try:
            return fn(doc[key])
        except (TypeError, ValueError) as exc:
            bad.append(f"{key} ({exc})")

    cfg = None
    try:
        cfg = ChannelConfig(float(doc["power"]), tuple(float(v) for v in doc["noise"]))
    except (TypeError, ValueError) as exc:
        bad.append(f"power/noise ({exc})")
    schemes = field("scheme", lambda v: [SchemeId.parse(s) for s in _listify(v)])
    strategies = [DecodeStrategy.SUCCESSIVE_CANCEL]
    if "strategy" in doc:
        strategies = field("strategy", lambda v: [DecodeStrategy.parse(s) for s in _listify(v)])
    ns = n_list or field("n", lambda v: [int(x) for x in _listify(v)])
    caps_doc = doc.get("caps", {}) or {}
    if not isinstance(caps_doc, dict) or set(caps_doc) - {"codebook", "candidates"}:
        bad.append("caps (expected an object with codebook/candidates)")
        caps_doc = {}
    caps = Caps.resolve(caps_doc.get("codebook"), caps_doc.get("candidates"))
    if bad:
        raise ScenarioError("invalid values: " + "; ".join(bad), [b.split(" ")[0] for b in bad])

    common = dict(
        alpha=doc["alpha"],
        trials=doc.get("trials", 1000),
        seed=int(doc.get("seed", 0) if seed is None else seed),
        codebooks=doc.get("codebooks", "fresh"),
        decoder=doc.get("decoder", "exhaustive"),
        sampler=doc.get("sampler", "independent"),
        zero_noise=bool(doc.get("zero_noise", False)),
        caps=caps,
    )
    out = []
    for n in ns:
        if "rates" in doc:
            targets = tuple(float(r) for r in doc["rates"])
            msgcfg = realize_bits(targets, n, rounding=doc.get("rounding", "floor"))
        else:
            if len(ns) > 1 and not n_list:
                raise ScenarioError("bit_lengths needs a single n", ["bit_lengths", "n"])
            bits = tuple(doc["bit_lengths"])
            if n_list:
                base = int(doc["n"])
                targets = tuple(k / base for k in bits)
                msgcfg = realize_bits(targets, n, rounding=doc.get("rounding", "floor"))
            else:
                targets, msgcfg = None, MessageConfig(bits, n)
        for scheme in schemes:
            for strategy in strategies:
                try:
                    out.append(
                        Scenario(cfg, scheme, msgcfg, strategy=strategy, target_rates=targets, **common)
                    )
                except (TypeError, ValueError) as exc:
                    raise ScenarioError(f"{scheme.value}/{strategy.value} at n={n}: {exc}") from exc
    return out


def load_scenarios(path: str, seed: int | None = None, n_list=None) -> list[Scenario]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return scenarios_from_doc(doc, seed, n_list)


def parse_alpha_grid(text: str) -> list[float]:
    """``a,b,c`` lists values; ``start:stop:count`` is an inclusive uniform grid."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"alpha grid {text!r} must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("alpha grid needs at least one point")
        if count == 1:
            return [start]
        return [start + (stop - start) * i / (count - 1) for i in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).write_text(text, encoding="utf-8")


def _round_floats(obj):
    if isinstance(obj, float):
        return round12(obj) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _check_out(out: str | None) -> None:
    # fail before a long run rather than after it
    if out and out != "-":
        parent = Path(out).resolve().parent
        if not parent.is_dir():
            raise FileNotFoundError(f"output directory {parent} does not exist")


def _json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2, sort_keys=True) + "\n"


def cmd_region(args) -> int:
    cfg = ChannelConfig(args.power, tuple(args.noise))
    rows = regions.boundary_sweep(cfg, parse_alpha_grid(args.alpha_grid))
    buf = io.StringIO()
    regions.write_boundary_csv(rows, buf)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def witness_report(cfg: ChannelConfig, eps: float) -> dict:
    w = regions.gap_witness(cfg, eps)
    report = {"power": cfg.power, "noise": list(cfg.noise), "eps": eps}
    if w is None:
        report.update(rates=None, alpha_capacity=None, failed_constraints=None, message="no witness")
        return report
    cap = regions.in_capacity_region(cfg, w, eps)
    report.update(
        rates=[round12(v) for v in w],
        alpha_capacity=round12(cap.alpha),
        alpha_interval=[round12(v) for v in regions.feasible_alpha_interval(cfg, w, eps)],
        failed_constraints={s.value: regions.violated_constraints(cfg, w, s, eps) for s in regions.MULTIPLEX_STRATEGIES},
        message="witness found",
    )
    return report


def cmd_witness(args) -> int:
    cfg = ChannelConfig(args.power, tuple(args.noise))
    _emit(_json(witness_report(cfg, args.eps)), args.out)
    return EXIT_OK


def _write_stats(stats, out: str | None) -> None:
    if out and out.endswith(".json"):
        _emit(_json([s.to_dict() for s in stats]), out)
        return
    lines = [CSV_HEADER]
    for s in stats:
        lines += [",".join(row) for row in s.csv_rows()]
    _emit("\n".join(lines) + "\n", out)


def cmd_simulate(args) -> int:
    _check_out(args.out)
    scenarios = load_scenarios(args.scenario, args.seed)
    for s in scenarios:
        s.check_caps()
    stats = []
    for s in scenarios:
        log.info("running %s/%s n=%d trials=%d", s.scheme.value, s.strategy.value, s.n, s.trials)
        stats.append(run_trials(s, args.workers))
    _write_stats(stats, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    _check_out(args.out)
    n_list = [int(v) for v in args.n_list.split(",") if v.strip()]
    scenarios = load_scenarios(args.scenario, args.seed, n_list)
    for s in scenarios:
        targets = s.target_rates or s.msgcfg.rates
        realize_bits(targets, s.n, args.tolerance)
        s.check_caps()
    _write_stats([run_trials(s, args.workers) for s in scenarios], args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    _check_out(args.out)
    pair = []
    for path in (args.a, args.b):
        sc = load_scenarios(path, args.seed)
        if len(sc) != 1:
            raise ScenarioError(f"{path} expands to {len(sc)} runs; compare needs exactly one", ["scheme", "strategy", "n"])
        pair.append(sc[0])
    a, b = pair
    _same_shape(a, b)
    a.check_caps()
    b.check_caps()
    sa, sb = run_trials(a, args.workers), run_trials(b, args.workers)
    comparison = compare_stats(sa, sb)
    report = comparison.to_dict()
    report.update(a=sa.to_dict(), b=sb.to_dict())
    _emit(_json(report), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bcsidelab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def channel_args(sp):
        sp.add_argument("--power", type=float, required=True)
        sp.add_argument("--noise", type=float, nargs="+", required=True, help="noise variances, strongest receiver first")

    def run_args(sp):
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--workers", type=int, default=default_workers())
        sp.add_argument("--out", default=None, help="output path (.csv or .json); stdout when omitted")

    sp = sub.add_parser("region", help="tabulate capacity-region boundary points")
    channel_args(sp)
    sp.add_argument("--alpha-grid", default="0:1:101", help="a,b,c or start:stop:count")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("witness", help="find a rate triple only index coding achieves")
    channel_args(sp)
    sp.add_argument("--eps", type=float, default=regions.DEFAULT_EPS)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("simulate", help="run the Monte Carlo for a scenario file")
    sp.add_argument("scenario")
    run_args(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="rerun a scenario over several blocklengths")
    sp.add_argument("scenario")
    sp.add_argument("--n-list", required=True, help="comma-separated blocklengths")
    sp.add_argument("--tolerance", type=float, default=0.02, help="max |k/n - R| in bits")
    run_args(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="test two single-run scenarios for equal error rates")
    sp.add_argument("a")
    sp.add_argument("b")
    run_args(sp)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ScenarioError as exc:
        keys = f" [offending keys: {', '.join(exc.keys)}]" if exc.keys else ""
        print(f"error: {exc}{keys}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
