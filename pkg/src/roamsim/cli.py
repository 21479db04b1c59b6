"""Command-line front end.

Subcommands:
  run         one simulation -> handoffs.csv, rates.csv, channel_load.csv, manifest.json
  compare     policy x seed (x station-count) grid -> summary.csv + per-run outputs
  calc        formula calculators (shannon | contention | scan-time), JSON to stdout
  contention  CSV sweep of the contention closed forms over (tau, k_sta)
  rerun       re-execute a run from its manifest.json

Exit code 0 on success, 2 on configuration/usage errors. ROAMSIM_LOG
selects the log level (error | info | debug); logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from . import csvio
from .compare import EVAL_EPISODE_BASE, EvalResult, evaluate_policy, summarize
from .config import (ConfigError, ScanAccounting, ScenarioConfig,
                     load_scenario_file, with_overrides)
from .contention import (UoraParams, collision_prob, contention_metrics,
                         params_for_load)
from .engine import Simulation, make_agents, run_episodes
from .policy import PolicyKind
from .scanning import ScanTiming

log = logging.getLogger("roamsim.cli")


def _setup_logging() -> None:
    level = os.environ.get("ROAMSIM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    overrides = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def _load_config(scenario_path: str | None, overrides: dict[str, str]) -> ScenarioConfig:
    cfg = load_scenario_file(scenario_path) if scenario_path else ScenarioConfig()
    if overrides:
        cfg = with_overrides(cfg, overrides)
    return cfg


def _policy(name: str) -> PolicyKind:
    try:
        return PolicyKind(name)
    except ValueError:
        raise ConfigError(
            f"--policy must be one of rssi, eps, madar; got {name!r}") from None


def _int_list(raw: str) -> list[int]:
    return [int(p) for p in raw.split(",") if p.strip()]


def _float_list(raw: str) -> list[float]:
    return [float(p) for p in raw.split(",") if p.strip()]


# -- run ------------------------------------------------------------------

def _execute_run(cfg: ScenarioConfig, policy: PolicyKind, seed: int,
                 duration: float, episodes: int, train_duration: float,
                 epsilon: float | None, out_dir: str) -> None:
    agents = None
    if policy is PolicyKind.MADAR:
        agents = make_agents(cfg, seed)
        if episodes > 0:
            run_episodes(cfg, policy, episodes, train_duration, seed, agents=agents)
    sim = Simulation(cfg, policy, seed, episode=EVAL_EPISODE_BASE,
                     agents=agents, epsilon=epsilon)
    sink = sim.run(duration)
    os.makedirs(out_dir, exist_ok=True)
    csvio.write_handoffs(os.path.join(out_dir, "handoffs.csv"), sink)
    csvio.write_rates(os.path.join(out_dir, "rates.csv"), sink)
    csvio.write_channel_load(os.path.join(out_dir, "channel_load.csv"), sink)
    log.info("run complete: %d handoffs, %d roam failures",
             len(sink.records), sink.roam_failures)


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.set)
    cfg = _load_config(args.scenario, overrides)
    policy = _policy(args.policy)
    duration = cfg.duration_s if args.duration is None else args.duration
    manifest = {
        "command": "run",
        "version": f"roamsim-{__version__}",
        "scenario_path": args.scenario,
        "scenario_text": cfg.to_text(),
        "policy": policy.value,
        "seed": args.seed,
        "duration_s": duration,
        "episodes": args.episodes,
        "train_duration_s": args.train_duration,
        "epsilon": args.epsilon,
        "outputs": ["handoffs.csv", "rates.csv", "channel_load.csv"],
    }
    _execute_run(cfg, policy, args.seed, duration, args.episodes,
                 args.train_duration, args.epsilon, args.out)
    csvio.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    return 0


def cmd_rerun(args: argparse.Namespace) -> int:
    manifest = csvio.read_manifest(args.manifest)
    from .config import load_scenario
    cfg = load_scenario(manifest["scenario_text"])
    out_dir = args.out or os.path.dirname(os.path.abspath(args.manifest))
    _execute_run(cfg, PolicyKind(manifest["policy"]), manifest["seed"],
                 manifest["duration_s"], manifest.get("episodes", 0),
                 manifest.get("train_duration_s", 20.0),
                 manifest.get("epsilon"), out_dir)
    csvio.write_manifest(os.path.join(out_dir, "manifest.json"),
                         {k: v for k, v in manifest.items() if k != "schema_version"})
    return 0


# -- compare ----------------------------------------------------------------

def cmd_compare(args: argparse.Namespace) -> int:
    overrides = _parse_overrides(args.set)
    base_cfg = _load_config(args.scenario, overrides)
    policies = [_policy(p) for p in args.policies.split(",") if p.strip()]
    seeds = _int_list(args.seeds)
    if not policies or not seeds:
        raise ConfigError("--policies and --seeds must be non-empty")
    sta_counts = _int_list(args.stas) if args.stas else [base_cfg.num_stas]
    duration = base_cfg.duration_s if args.duration is None else args.duration

    os.makedirs(args.out, exist_ok=True)
    results: list[EvalResult] = []
    for stas in sta_counts:
        cfg = with_overrides(base_cfg, {"num_stas": str(stas)})
        for policy in policies:
            for seed in seeds:
                res = evaluate_policy(
                    cfg, policy, seed,
                    episodes=args.episodes if policy is PolicyKind.MADAR else 0,
                    train_duration_s=args.train_duration,
                    eval_duration_s=duration,
                    eval_episodes=args.eval_episodes,
                    epsilon=args.epsilon,
                )
                results.append(res)
                for i, sink in enumerate(res.sinks):
                    sub = os.path.join(
                        args.out, f"{policy.value}_k{stas}_s{seed}_e{i}")
                    os.makedirs(sub, exist_ok=True)
                    csvio.write_handoffs(os.path.join(sub, "handoffs.csv"), sink)
                    csvio.write_rates(os.path.join(sub, "rates.csv"), sink)
                    csvio.write_channel_load(os.path.join(sub, "channel_load.csv"), sink)
        rows = summarize(cfg, [r for r in results if r.stas == stas])
        log.info("summarized %d rows for K=%d", len(rows), stas)
    all_rows = []
    for stas in sta_counts:
        cfg = with_overrides(base_cfg, {"num_stas": str(stas)})
        all_rows.extend(summarize(cfg, [r for r in results if r.stas == stas]))
    csvio.write_summary(os.path.join(args.out, "summary.csv"),
                        (row.as_tuple() for row in all_rows))
    csvio.write_manifest(os.path.join(args.out, "manifest.json"), {
        "command": "compare",
        "version": f"roamsim-{__version__}",
        "scenario_path": args.scenario,
        "scenario_text": base_cfg.to_text(),
        "policies": [p.value for p in policies],
        "seeds": seeds,
        "stas": sta_counts,
        "duration_s": duration,
        "episodes": args.episodes,
        "train_duration_s": args.train_duration,
        "eval_episodes": args.eval_episodes,
        "epsilon": args.epsilon,
        "outputs": ["summary.csv"],
    })
    return 0


# -- calculators -------------------------------------------------------------

def cmd_calc(args: argparse.Namespace) -> int:
    if args.formula == "shannon":
        if args.snr_db is not None:
            snr_linear = 10.0 ** (args.snr_db / 10.0)
        elif args.snr_linear is not None:
            snr_linear = args.snr_linear
        else:
            raise ConfigError("calc shannon needs --snr-db or --snr-linear")
        import math
        r_upp = args.bw * math.log2(1.0 + args.alpha * snr_linear)
        payload = {"r_upp_bps": r_upp, "bandwidth_hz": args.bw,
                   "snr_linear": snr_linear, "alpha": args.alpha}
    elif args.formula == "contention":
        p_c = args.pc if args.pc is not None else collision_prob(args.tau, args.ksta)
        params = UoraParams(tau=args.tau, p_c=p_c, k_sta=args.ksta, w0=args.w0,
                            max_stage=args.max_stage, t_ifs_s=args.t_ifs_us / 1e6,
                            slot_s=args.slot_us / 1e6)
        result = contention_metrics(params, channel_idle=args.idle)
        payload = {"tau": args.tau, "p_c": p_c, "k_sta": args.ksta,
                   "p_s": result.p_s, "e_stages": result.expected_stages,
                   "e_backoff_slots": result.expected_backoff_slots,
                   "t_cont_s": result.delay_s}
    elif args.formula == "scan-time":
        timing = ScanTiming(t_pb_s=args.t_pb_ms / 1e3, t_min_s=args.t_min_ms / 1e3,
                            t_max_s=args.t_max_ms / 1e3, t_sw_s=args.t_sw_ms / 1e3)
        occupied = set(_int_list(args.occupied)) if args.occupied else set()
        mode = ScanAccounting(args.mode)
        total = 0.0
        for channel in range(1, args.channels + 1):
            if mode is ScanAccounting.EQ3_LITERAL or channel in occupied:
                total += timing.t_pb_s + timing.t_min_s + timing.t_max_s + timing.t_sw_s
            else:
                total += timing.t_pb_s + timing.t_min_s + timing.t_sw_s
        payload = {"t_cs_s": total, "channels": args.channels, "mode": mode.value,
                   "occupied": sorted(occupied)}
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown calc formula {args.formula!r}")
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_contention_sweep(args: argparse.Namespace) -> int:
    taus = _float_list(args.taus)
    kstas = _int_list(args.kstas)
    sys.stdout.write("tau,k_sta,p_c,p_s,e_stages,e_backoff_slots,t_cont_s\n")
    for tau in taus:
        for k_sta in kstas:
            params = params_for_load(k_sta, tau=tau, w0=args.w0,
                                     max_stage=args.max_stage,
                                     t_ifs_s=args.t_ifs_us / 1e6,
                                     slot_s=args.slot_us / 1e6)
            result = contention_metrics(params)
            sys.stdout.write(
                f"{tau!r},{k_sta},{params.p_c!r},{result.p_s!r},"
                f"{result.expected_stages!r},{result.expected_backoff_slots!r},"
                f"{result.delay_s!r}\n")
    return 0


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roamsim",
        description="Wi-Fi 6 roaming simulator: scanning, contention, and AP selection policies.")
    parser.add_argument("--version", action="version", version=f"roamsim-{__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one simulation and write CSV outputs")
    run.add_argument("--scenario", help="scenario file (key=value); defaults when omitted")
    run.add_argument("--policy", required=True, help="rssi | eps | madar")
    run.add_argument("--seed", type=int, default=1)
    run.add_argument("--duration", type=float, default=None, help="seconds (default: scenario)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--epsilon", type=float, default=None,
                     help="override exploration rate for the recorded run")
    run.add_argument("--episodes", type=int, default=0,
                     help="training episodes before the recorded run (madar)")
    run.add_argument("--train-duration", type=float, default=20.0,
                     help="seconds per training episode")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a scenario key (repeatable)")
    run.set_defaults(func=cmd_run)

    rerun = sub.add_parser("rerun", help="re-execute a run from its manifest.json")
    rerun.add_argument("manifest")
    rerun.add_argument("--out", default=None, help="output directory (default: manifest's)")
    rerun.set_defaults(func=cmd_rerun)

    comp = sub.add_parser("compare", help="run a policy/seed grid and summarize")
    comp.add_argument("--scenario", default=None)
    comp.add_argument("--policies", default="rssi,eps,madar")
    comp.add_argument("--seeds", default="1,2,3,4,5")
    comp.add_argument("--stas", default=None,
                      help="comma list of station counts to sweep (default: scenario)")
    comp.add_argument("--duration", type=float, default=None, help="evaluation seconds")
    comp.add_argument("--episodes", type=int, default=0, help="madar training episodes")
    comp.add_argument("--train-duration", type=float, default=20.0)
    comp.add_argument("--eval-episodes", type=int, default=1)
    comp.add_argument("--epsilon", type=float, default=None)
    comp.add_argument("--out", required=True)
    comp.add_argument("--set", action="append", metavar="KEY=VALUE")
    comp.set_defaults(func=cmd_compare)

    calc = sub.add_parser("calc", help="evaluate one closed-form expression")
    calc_sub = calc.add_subparsers(dest="formula", required=True)
    shannon = calc_sub.add_parser("shannon")
    shannon.add_argument("--bw", type=float, required=True, help="bandwidth in Hz")
    shannon.add_argument("--snr-db", type=float, default=None)
    shannon.add_argument("--snr-linear", type=float, default=None)
    shannon.add_argument("--alpha", type=int, default=1, choices=(0, 1))
    shannon.set_defaults(func=cmd_calc)
    cont = calc_sub.add_parser("contention")
    cont.add_argument("--tau", type=float, required=True)
    cont.add_argument("--ksta", type=int, required=True)
    cont.add_argument("--pc", type=float, default=None, help="derived from tau when omitted")
    cont.add_argument("--w0", type=int, default=16)
    cont.add_argument("--max-stage", type=int, default=6)
    cont.add_argument("--t-ifs-us", type=float, default=16.0)
    cont.add_argument("--slot-us", type=float, default=9.0)
    cont.add_argument("--idle", action="store_true")
    cont.set_defaults(func=cmd_calc)
    scan = calc_sub.add_parser("scan-time")
    scan.add_argument("--channels", type=int, required=True)
    scan.add_argument("--mode", default="fsm", choices=("fsm", "eq3-literal"))
    scan.add_argument("--occupied", default=None, help="channels with a responding AP")
    scan.add_argument("--t-pb-ms", type=float, default=1.0)
    scan.add_argument("--t-min-ms", type=float, default=10.0)
    scan.add_argument("--t-max-ms", type=float, default=100.0)
    scan.add_argument("--t-sw-ms", type=float, default=5.0)
    scan.set_defaults(func=cmd_calc)

    sweep = sub.add_parser("contention", help="CSV sweep of the contention closed forms")
    sweep.add_argument("--taus", default="0.1,0.25,0.5")
    sweep.add_argument("--kstas", default="2,5,10,20")
    sweep.add_argument("--w0", type=int, default=16)
    sweep.add_argument("--max-stage", type=int, default=6)
    sweep.add_argument("--t-ifs-us", type=float, default=16.0)
    sweep.add_argument("--slot-us", type=float, default=9.0)
    sweep.set_defaults(func=cmd_contention_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
