"""Command line entry point: ``nrsim run``, ``nrsim figures`` and ``nrsim xapp``.

Precedence for every setting: command-line flag, then ``NRSIM_*`` environment
variable, then the YAML config file, then the built-in default.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, config_from_dict, load_yaml
from .experiments import (default_jobs, reproduce_figures, summary_table, sweep, write_outputs)
from .ric.a1 import A1Policy
from .ric.transport import E2_SOCKET_ENV, parse_address, serve_xapp
from .ric.xapp import Xapp
from .sched import POLICY_NAMES

log = logging.getLogger("nrsim")

# flag dest -> environment variable
ENV_VARS = {
    "config": "NRSIM_CONFIG",
    "policy": "NRSIM_POLICY",
    "ues": "NRSIM_UES",
    "seed": "NRSIM_SEED",
    "ttis": "NRSIM_TTIS",
    "out": "NRSIM_OUT",
    "jobs": "NRSIM_JOBS",
    "a1_policy": "NRSIM_A1_POLICY",
    "e2_socket": E2_SOCKET_ENV,
}


class UsageError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    """``"3"``, ``"1,2,5"`` or ``"1-10"`` (ranges inclusive, may be mixed)."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                a, b = int(lo), int(hi)
                if b < a:
                    raise UsageError(f"empty range {part!r}")
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
        except ValueError as e:
            if isinstance(e, UsageError):
                raise
            raise UsageError(f"expected integers like 3, 1,2,5 or 1-10, got {text!r}") from None
    if not out:
        raise UsageError(f"no values in {text!r}")
    return out


def parse_policies(text: str) -> list[str]:
    names = [p.strip().lower() for p in str(text).split(",") if p.strip()]
    bad = [p for p in names if p not in POLICY_NAMES]
    if bad or not names:
        raise UsageError(f"policies must be drawn from {', '.join(POLICY_NAMES)}, got {text!r}")
    return names


def _as_list(value, parse):
    if isinstance(value, list):
        return parse(",".join(str(v) for v in value))
    return parse(value)


def _setting(args, name):
    value = getattr(args, name, None)
    if value is None:
        value = os.environ.get(ENV_VARS[name]) or None
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nrsim", description="5G NR MAC scheduler simulator with a RIC control loop")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario or a sweep and write summary.csv / per_ue.csv")
    r.add_argument("--config", help="YAML scenario file")
    r.add_argument("--policy", help="rr, mt, pf or a comma list (a list implies a sweep)")
    r.add_argument("--ues", help="UE count, list or range such as 1-10")
    r.add_argument("--seed", help="seed, list or range")
    r.add_argument("--ttis", type=int, help="simulated TTIs per run")
    r.add_argument("--out", help="output directory (default: out)")
    r.add_argument("--sweep", action="store_true",
                   help="sweep policies x UE counts x seeds (defaults: all policies, 1-10 UEs)")
    r.add_argument("--a1-policy", help="YAML A1 policy for the in-process xApp")
    r.add_argument("--e2-socket", help="host:port of an external xApp (see 'nrsim xapp')")
    r.add_argument("--jobs", type=int, help="parallel sweep cells (default: CPU count)")
    r.add_argument("--engine", choices=("auto", "python", "compiled"), default="auto", help=argparse.SUPPRESS)
    r.add_argument("--quiet", action="store_true", help="do not print the summary table")

    f = sub.add_parser("figures", help="write fig5.csv, fig6.csv and fig7_8.csv")
    f.add_argument("--config", help="YAML scenario file used as the base configuration")
    f.add_argument("--out", help="output directory (default: figures)")
    f.add_argument("--seeds", type=int, default=5, help="seeds per sweep point (default 5)")
    f.add_argument("--ttis", type=int, help="simulated TTIs per run")
    f.add_argument("--jobs", type=int, help="parallel runs (default: CPU count)")

    x = sub.add_parser("xapp", help="serve the scheduling xApp over TCP for 'run --e2-socket'")
    x.add_argument("--listen", default="127.0.0.1:36421", help="host:port to bind (default 127.0.0.1:36421)")
    x.add_argument("--a1-policy", help="YAML A1 policy (default: keep the gNB's policy)")
    x.add_argument("--initial-policy", default="rr", choices=POLICY_NAMES,
                   help="policy the gNB starts with (default rr)")
    x.add_argument("--connections", type=int, default=None,
                   help="stop after this many gNB sessions (default: serve forever)")
    return p


def _load_base(args) -> tuple[dict, dict]:
    path = _setting(args, "config")
    data = load_yaml(path) if path else {}
    sweep_spec = data.pop("sweep", None) or {}
    if not isinstance(sweep_spec, dict):
        raise ConfigError(["sweep must be a mapping with policies / n_ues / seeds"])
    return data, sweep_spec


def _load_a1(path: str) -> dict:
    import yaml

    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    A1Policy.from_dict(doc)  # validate early
    return doc


def resolve_run(args) -> tuple[ScenarioConfig, list[str], list[int], list[int], Path, int]:
    data, sweep_spec = _load_base(args)
    policy = _setting(args, "policy")
    ues = _setting(args, "ues")
    seed = _setting(args, "seed")
    ttis = _setting(args, "ttis")
    a1 = _setting(args, "a1_policy")
    e2 = _setting(args, "e2_socket")

    policies = parse_policies(policy) if policy else None
    n_values = parse_int_list(ues) if ues else None
    seeds = parse_int_list(seed) if seed else None
    if ttis is not None:
        data["duration_ttis"] = int(ttis)
    ric = dict(data.get("ric") or {})
    if a1:
        ric["a1_policy"] = _load_a1(a1)
    if e2:
        parse_address(e2)
        ric["e2_socket"] = e2
    data["ric"] = ric

    is_sweep = args.sweep or any(v is not None and len(v) > 1 for v in (policies, n_values, seeds))
    if is_sweep:
        policies = policies or _as_list(sweep_spec.get("policies", list(POLICY_NAMES)), parse_policies)
        n_values = n_values or _as_list(sweep_spec.get("n_ues", "1-10"), parse_int_list)
        seeds = seeds or _as_list(sweep_spec.get("seeds", [data.get("seed", 1)]), parse_int_list)
    else:
        policies = policies or [data.get("policy", "rr")]
        n_values = n_values or [data.get("n_ues", 7)]
        seeds = seeds or [data.get("seed", 1)]
    data["policy"], data["n_ues"], data["seed"] = policies[0], n_values[0], seeds[0]
    config = config_from_dict(data)
    for n in n_values:  # validate every UE count up front
        config.replace(n_ues=n)

    out = Path(_setting(args, "out") or "out")
    jobs = _setting(args, "jobs")
    jobs = int(jobs) if jobs is not None else default_jobs()
    if jobs < 1:
        raise UsageError("--jobs must be >= 1")
    return config, policies, n_values, seeds, out, jobs


def cmd_run(args) -> int:
    config, policies, n_values, seeds, out, jobs = resolve_run(args)
    if args.engine != "auto":
        results = _run_with_engine(config, policies, n_values, seeds, args.engine)
    else:
        results = sweep(config, policies, n_values, seeds, jobs)
    summary, per_ue = write_outputs(out, results)
    if not args.quiet:
        print(summary_table(results))
        print(f"\nwrote {summary} and {per_ue}")
    failed = [r for r in results if not r.ok]
    for r in failed:
        reason = r.error or "; ".join(r.violations)
        print(f"cell policy={r.cell.policy} n_ues={r.cell.n_ues} seed={r.cell.seed} failed: {reason}",
              file=sys.stderr)
    return 0 if not failed else 1


def _run_with_engine(config, policies, n_values, seeds, engine_name):
    from .engine import run
    from .experiments import Cell, CellResult, check_invariants

    results = []
    for p in policies:
        for n in n_values:
            for s in seeds:
                cell = Cell(p, n, s)
                res = CellResult(cell)
                try:
                    cfg = config.replace(policy=p, n_ues=n, seed=s)
                    r = run(cfg, engine=engine_name)
                    res.summary, res.ue_stats = r.summary, r.ue_stats
                    res.violations = check_invariants(cfg, r.summary, r.ue_stats, r.window.duration_ms)
                except Exception as e:
                    res.error = f"{type(e).__name__}: {e}"
                results.append(res)
    return results


def cmd_figures(args) -> int:
    data, _ = _load_base(args)
    if args.ttis is not None:
        data["duration_ttis"] = args.ttis
    elif os.environ.get(ENV_VARS["ttis"]):
        data["duration_ttis"] = int(os.environ[ENV_VARS["ttis"]])
    base = config_from_dict(data)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    jobs = _setting(args, "jobs")
    jobs = int(jobs) if jobs is not None else default_jobs()
    out = Path(_setting(args, "out") or "figures")
    figs = reproduce_figures(out, seeds=args.seeds, jobs=jobs, base=base)
    for name, path in figs.paths.items():
        print(f"{name}: {path}")
    for r in figs.failures:
        reason = r.error or "; ".join(r.violations)
        print(f"cell policy={r.cell.policy} n_ues={r.cell.n_ues} seed={r.cell.seed} failed: {reason}",
              file=sys.stderr)
    return 0 if not figs.failures else 1


def cmd_xapp(args) -> int:
    host, port = parse_address(args.listen)
    a1_path = args.a1_policy or os.environ.get(ENV_VARS["a1_policy"])
    if a1_path:
        policy = A1Policy.from_dict(_load_a1(a1_path))
    else:
        policy = A1Policy.static(args.initial_policy)
    bound: list = []
    print(f"xApp listening on {host}:{port}", flush=True)
    serve_xapp(lambda: Xapp(policy, args.initial_policy), host, port, bound=bound,
               connections=args.connections)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "figures":
            return cmd_figures(args)
        return cmd_xapp(args)
    except ConfigError as e:
        print(str(e), file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
