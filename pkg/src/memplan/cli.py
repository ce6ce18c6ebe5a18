"""Command line interface.

Subcommands:

  gen      synthesize a training-style allocation trace
  analyze  detect the repeating iteration and report its profile
  plan     static pool offsets for one iteration window
  swap     plan and simulate swapping under one or more byte limits
  full     swap, then re-plan the pool on the combined window

Option precedence: explicit flags > --config JSON entries > defaults.
The MEMPLAN_SEED environment variable, when set, overrides any --seed.
Exit status is 0 on success, 1 when planning or simulation fails, 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys

from .autoswap import selection_report
from .errors import MemplanError
from .estimators import IterationAnalyzer, PoolPlanner, SwapPlanner
from .iteration import profile_report
from .smartpool import build_conflict_graph, plan_pool
from .swapsim import LoadCurve, combine_with_pool, simulation_report
from .synth import generate_synthetic_trace, vgg_like
from .trace import load_trace, save_trace

_SUFFIX = {
    "": 1, "b": 1,
    "kb": 10 ** 3, "mb": 10 ** 6, "gb": 10 ** 9,
    "kib": 1 << 10, "mib": 1 << 20, "gib": 1 << 30,
}


def parse_bytes(text) -> int:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return int(text)
    m = re.fullmatch(r"(\d+(?:\.\d+)?)\s*([a-z]*)", str(text).strip().lower())
    if not m or m.group(2) not in _SUFFIX:
        raise ValueError(f"cannot parse byte size {text!r}")
    return int(float(m.group(1)) * _SUFFIX[m.group(2)])


def parse_limits(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        limits = [parse_bytes(x) for x in text]
    else:
        limits = [parse_bytes(part) for part in str(text).split(",") if part]
    if not limits:
        raise ValueError("no limits given")
    if any(b >= a for a, b in zip(limits, limits[1:])):
        raise ValueError("sweep limits must be strictly decreasing")
    return limits


# defaults applied when neither the flag nor the config file sets a value
_DEFAULTS = {
    "layers": 8,
    "iterations": 5,
    "scale": 1.0,
    "temp_ratio": 0.5,
    "seed": 0,
    "format": None,
    "policy": "best_fit",
    "score": "swdoa",
    "threshold": 1 << 20,
    "bandwidth": 12e9,
    "latency": 10.0,
    "bo_budget": 40,
    "out_dir": None,
}


class _Options:
    """Flag > config > default resolution for one subcommand run."""

    def __init__(self, ns: argparse.Namespace):
        self.ns = ns
        self.cfg = {}
        if getattr(ns, "config", None):
            with open(ns.config, encoding="utf-8") as fh:
                self.cfg = json.load(fh)
            if not isinstance(self.cfg, dict):
                raise ValueError("config must be a JSON object")

    def get(self, key: str, cast=None):
        value = getattr(self.ns, key, None)
        if value is None:
            value = self.cfg.get(key, _DEFAULTS.get(key))
        if value is not None and cast is not None:
            value = cast(value)
        return value

    def seed(self) -> int:
        env = os.environ.get("MEMPLAN_SEED")
        if env is not None:
            return int(env)
        return self.get("seed", int)


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_curve(path: str, curve: LoadCurve) -> None:
    _write_csv(path, ["t_us", "bytes"],
               [(f"{t:.3f}", b) for t, b in curve.points])


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(opts: _Options) -> str | None:
    d = opts.get("out_dir")
    if d:
        os.makedirs(d, exist_ok=True)
    return d


def cmd_gen(ns: argparse.Namespace) -> int:
    opts = _Options(ns)
    spec = vgg_like(
        depth=opts.get("layers", int),
        scale=opts.get("scale", float),
        iterations=opts.get("iterations", int),
        seed=opts.seed(),
        temp_ratio=opts.get("temp_ratio", float),
    )
    trace = generate_synthetic_trace(spec)
    save_trace(trace, ns.out, format=opts.get("format"))
    with open(ns.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(trace.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {ns.out}: {len(trace)} events, "
          f"period {trace.meta['period']} ops")
    return 0


def cmd_analyze(ns: argparse.Namespace) -> int:
    opts = _Options(ns)
    analyzer = IterationAnalyzer().fit(load_trace(ns.trace))
    pf = analyzer.profile_
    print(f"period: {pf.period} ops")
    print(f"window: [{pf.window[0]}, {pf.window[1]})")
    print(f"duration_us: {pf.period_duration_us:.3f}")
    print(f"variables: {len(pf.variables)}")
    print(f"peak_bytes: {pf.load.peak_bytes}")
    print(f"peak_index: {pf.load.peak_index}")
    d = _out_dir(opts)
    if d:
        rows = [(f"{pf.op_times_us[r]:.3f}", pf.load.loads[r])
                for r in range(pf.period)]
        _write_csv(os.path.join(d, "load.csv"), ["t_us", "bytes"], rows)
        _write_json(os.path.join(d, "profile.json"), profile_report(pf))
        print(f"wrote {os.path.join(d, 'load.csv')}")
        print(f"wrote {os.path.join(d, 'profile.json')}")
    return 0


def cmd_plan(ns: argparse.Namespace) -> int:
    opts = _Options(ns)
    planner = PoolPlanner(policy=opts.get("policy")).fit(load_trace(ns.trace))
    print(f"policy: {planner.policy}")
    print(f"peak_load_bytes: {planner.peak_load_bytes_}")
    print(f"footprint_bytes: {planner.footprint_bytes_}")
    print(f"alpha: {planner.alpha_:.4f}")
    d = _out_dir(opts)
    if d:
        plan = planner.plan_
        rows = sorted(
            (v, plan.offsets[v], plan.sizes[v]) for v in plan.offsets
        )
        _write_csv(os.path.join(d, "offsets.csv"),
                   ["var", "offset", "size"], rows)
        _write_json(os.path.join(d, "plan.json"), {
            "policy": plan.policy,
            "footprint_bytes": plan.footprint_bytes,
            "peak_load_bytes": plan.peak_load_bytes,
            "alpha": plan.competitive_ratio,
            "offsets": plan.offsets,
            "sizes": plan.sizes,
        })
        print(f"wrote {os.path.join(d, 'offsets.csv')}")
        print(f"wrote {os.path.join(d, 'plan.json')}")
    return 0


def _swap_once(profile, limit: int, opts: _Options) -> SwapPlanner:
    planner = SwapPlanner(
        limit_bytes=limit,
        score=opts.get("score"),
        threshold_bytes=opts.get("threshold", parse_bytes),
        bandwidth_bytes_per_s=opts.get("bandwidth", float),
        latency_us=opts.get("latency", float),
        bo_budget=opts.get("bo_budget", int),
        seed=opts.seed(),
    )
    return planner.fit(profile)


def _run_swap(ns: argparse.Namespace, with_pool: bool) -> int:
    opts = _Options(ns)
    limits = ns.limit
    trace = load_trace(ns.trace)
    analyzer = IterationAnalyzer().fit(trace)
    profile = analyzer.profile_
    policy = opts.get("policy")
    d = _out_dir(opts)

    base_pool = plan_pool(build_conflict_graph(profile), policy=policy)
    print(f"peak_bytes: {profile.load.peak_bytes}")
    if with_pool:
        print(f"baseline_footprint: {base_pool.footprint_bytes}")

    sweep_rows = []
    for limit in limits:
        planner = _swap_once(profile, limit, opts)
        res = planner.result_
        combined = combine_with_pool(profile, planner.schedule_)
        cpool = plan_pool(build_conflict_graph(combined), policy=policy)
        tag = f"limit {limit}: "
        print(tag + f"selected {len(planner.selection_)} "
              f"({', '.join(c.var for c in planner.selection_) or 'none'})")
        print(tag + f"load_min {planner.load_min_}")
        print(tag + f"achieved_peak {res.achieved_peak_bytes}")
        print(tag + f"overhead_us {res.overhead_us:.3f} "
              f"({res.overhead_pct:.2f}%)")
        print(tag + f"delayed_ops {len(res.delayed_ops)}")
        if with_pool:
            print(tag + f"combined_footprint {cpool.footprint_bytes}")
        sweep_rows.append((limit, res.achieved_peak_bytes,
                           cpool.footprint_bytes,
                           f"{res.overhead_pct:.4f}"))
        if d:
            suffix = f"_{limit}" if len(limits) > 1 else ""
            rows = [(e.var, f"{e.t_start_out:.3f}", f"{e.t_end_out:.3f}",
                     f"{e.t_start_in:.3f}", f"{e.t_end_in:.3f}")
                    for e in planner.schedule_.events]
            _write_csv(os.path.join(d, f"schedule{suffix}.csv"),
                       ["var", "t_so", "t_eo", "t_si", "t_ei"], rows)
            _write_curve(os.path.join(d, f"load_prime{suffix}.csv"),
                         res.load_prime)
            _write_curve(os.path.join(d, f"load_double_prime{suffix}.csv"),
                         res.load_double_prime)
            _write_json(os.path.join(d, f"selection{suffix}.json"),
                        selection_report(planner.selection_, limit,
                                         res.achieved_peak_bytes))
            _write_json(os.path.join(d, f"result{suffix}.json"),
                        simulation_report(res))
    if d:
        _write_csv(os.path.join(d, "sweep.csv"),
                   ["limit", "achieved_peak", "combined_footprint",
                    "overhead_pct"], sweep_rows)
        print(f"wrote {os.path.join(d, 'sweep.csv')}")
    return 0


def cmd_swap(ns: argparse.Namespace) -> int:
    return _run_swap(ns, with_pool=False)


def cmd_full(ns: argparse.Namespace) -> int:
    return _run_swap(ns, with_pool=True)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--out-dir", dest="out_dir", help="directory for CSV reports")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memplan",
        description="iteration-aware GPU memory planning from allocation traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="synthesize a trace")
    g.add_argument("--out", required=True, help="output trace path")
    g.add_argument("--layers", type=int)
    g.add_argument("--iterations", type=int)
    g.add_argument("--scale", type=float)
    g.add_argument("--temp-ratio", dest="temp_ratio", type=float)
    g.add_argument("--seed", type=int, help="overridden by MEMPLAN_SEED")
    g.add_argument("--format", choices=["jsonl", "csv"])
    g.add_argument("--config", help="JSON file with default option values")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="detect the iteration")
    a.add_argument("--trace", required=True)
    _add_common(a)
    a.set_defaults(func=cmd_analyze)

    p = sub.add_parser("plan", help="static pool offsets")
    p.add_argument("--trace", required=True)
    p.add_argument("--policy", choices=["first_fit", "best_fit"])
    _add_common(p)
    p.set_defaults(func=cmd_plan)

    def swap_args(s):
        s.add_argument("--trace", required=True)
        s.add_argument("--limit", required=True, type=parse_limits,
                       help="byte limit, or strictly decreasing comma list")
        s.add_argument("--score",
                       choices=["doa", "aoa", "wdoa", "swdoa", "combined", "bo"])
        s.add_argument("--threshold", help="candidate size floor in bytes")
        s.add_argument("--bandwidth", type=float, help="transfer bytes/s")
        s.add_argument("--latency", type=float, help="transfer latency us")
        s.add_argument("--bo-budget", dest="bo_budget", type=int)
        s.add_argument("--seed", type=int, help="overridden by MEMPLAN_SEED")
        s.add_argument("--policy", choices=["first_fit", "best_fit"])
        _add_common(s)

    s = sub.add_parser("swap", help="plan and simulate swapping")
    swap_args(s)
    s.set_defaults(func=cmd_swap)

    f = sub.add_parser("full", help="swap then re-plan the pool")
    swap_args(f)
    f.set_defaults(func=cmd_full)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (MemplanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
