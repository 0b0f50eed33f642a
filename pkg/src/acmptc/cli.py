"""Command-line entry point.

Exit status: 0 on success, 1 for usage or validation errors, 2 for failures
while running (divergence, I/O on output files, anything unexpected).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import __version__, checkpoint, export
from .config import explain_lines, load_config
from .drl.gradcheck import run_gradcheck
from .errors import AcmptcError, ConfigError, DivergenceError
from .sim import SCHEDULERS, run_comparison, run_episode, train_agents

SEED_ENV = "ACMPTC_SEED"
DEFAULT_TRAIN_SEED = 1_000_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_seeds(text: str) -> list[int]:
    """``A..B`` (inclusive), ``A,B,C`` or a single integer."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ConfigError(f"empty seed range {text!r}")
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}; use A..B or A,B,C") from None


def resolve_seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None


def _seeds(args) -> list[int]:
    seeds = parse_seeds(args.seeds) if args.seeds else [resolve_seed(None)]
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def _config(args):
    cfg, prov = load_config(args.config)
    if getattr(args, "horizon", None) is not None:
        cfg = replace(cfg, horizon=args.horizon)
    if getattr(args, "scheduler", None) is not None:
        cfg = replace(cfg, scheduler=args.scheduler)
    cfg.validate()
    if args.explain_config:
        print("\n".join(explain_lines(cfg, prov)))
    return cfg


def _load_agents(path: str, cfg):
    agents, _ = checkpoint.load(path)
    if len(agents) != len(cfg.streams):
        raise ConfigError(f"checkpoint has {len(agents)} agents, config has {len(cfg.streams)} streams")
    expected = 4 * cfg.dynamics.n_paths + 2
    if any(a.actor.sizes[0] != expected for a in agents):
        raise ConfigError("checkpoint was trained for a different number of paths")
    return agents


def cmd_simulate(args) -> int:
    cfg = _config(args)
    seed = resolve_seed(args.seed)
    agents = _load_agents(args.checkpoint, cfg) if args.checkpoint else None
    if cfg.scheduler == "acmptc_drl" and agents is None:
        raise ConfigError("scheduler acmptc_drl needs --checkpoint (see the train command)")
    result = run_episode(cfg, seed, agents=agents)
    csv_path, json_path = export.export_metrics(result, args.out)
    s = result.summary
    print(f"{cfg.scheduler} seed={seed}: mean throughput {s['mean_throughput_mbps']:.3f} Mbps, "
          f"p95 latency {s['p95_latency_ms']:.2f} ms, mean loss {s['mean_loss']:.4f}, "
          f"violations {result.violations}")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    os.makedirs(args.out, exist_ok=True)
    for seed in _seeds(args):
        def progress(ep, res, seed=seed):
            if args.verbose and (ep + 1) % 10 == 0:
                print(f"seed {seed} episode {ep + 1}: reward {res.episode_rewards[-1]:.4f}",
                      file=sys.stderr)

        res = train_agents(cfg, seed, episodes=args.episodes, horizon=args.train_horizon,
                           progress=progress)
        ck = os.path.join(args.out, f"checkpoint_seed{seed}.json")
        checkpoint.save(ck, res.agents, {"seed": seed, "n_paths": cfg.dynamics.n_paths,
                                         "episodes": len(res.episode_rewards)},
                        config=cfg.agent)
        with open(os.path.join(args.out, f"rewards_seed{seed}.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            export.write_reward_series(res.episode_rewards, fh)
        last = res.episode_rewards[-1] if res.episode_rewards else float("nan")
        print(f"seed {seed}: {len(res.episode_rewards)} episodes, final reward {last:.4f} -> {ck}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    names = [s.strip() for s in args.schedulers.split(",") if s.strip()]
    bad = [n for n in names if n not in SCHEDULERS]
    if not names or bad:
        raise ConfigError(f"unknown scheduler(s) {bad}; choose from {', '.join(SCHEDULERS)}")
    seeds = _seeds(args)
    agents = None
    if "acmptc_drl" in names:
        if args.checkpoint:
            agents = _load_agents(args.checkpoint, cfg)
        else:
            if args.train_seed in seeds:
                raise ConfigError("--train-seed must differ from the evaluation seeds")
            agents = train_agents(cfg, args.train_seed, episodes=args.episodes,
                                  horizon=args.train_horizon).agents
    report = run_comparison(cfg, names, seeds, agents=agents)
    export.export_comparison(report, args.out)
    for name in names:
        m = report.means[name]
        print(f"{name:>11}: throughput {m['mean_throughput_mbps']:.3f} Mbps, "
              f"utility {m['mean_utility']:.4f}, p95 latency {m['p95_latency_ms']:.2f} ms, "
              f"loss {m['mean_loss']:.4f}")
    print(f"wrote {os.path.join(args.out, 'comparison.json')}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.params < 2:
        raise ConfigError("--params must be at least 2")
    rep = run_gradcheck(n_nets=args.nets, max_params=args.params, seed=resolve_seed(args.seed))
    print(f"max relative error {rep.max_rel_error:.3e} over {rep.n_nets} nets "
          f"(largest {rep.max_params} params; worst: {rep.worst})")
    return 0 if rep.passed else 2


def cmd_export_plots(args) -> int:
    for path in export.export_plots(args.in_dir, args.out):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="acmptc", description="Multipath transport simulator and trainer.")
    p.add_argument("--version", action="version", version=f"acmptc {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seeds=False):
        sp.add_argument("--config", help="YAML scenario document (defaults when omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--explain-config", action="store_true",
                        help="print every config value with its source before running")
        if seeds:
            sp.add_argument("--seeds", help="A..B inclusive, or a comma list")

    sp = sub.add_parser("simulate", help="run one episode and export metrics")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--scheduler", choices=SCHEDULERS)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--checkpoint", help="trained agents for acmptc_drl")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("train", help="train per-stream agents")
    common(sp, seeds=True)
    sp.add_argument("--episodes", type=int)
    sp.add_argument("--train-horizon", type=int, help="steps per training episode")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("compare", help="paired multi-seed scheduler comparison")
    common(sp, seeds=True)
    sp.add_argument("--schedulers", default=",".join(SCHEDULERS))
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--checkpoint", help="trained agents for acmptc_drl")
    sp.add_argument("--train-seed", type=int, default=DEFAULT_TRAIN_SEED)
    sp.add_argument("--episodes", type=int, help="training episodes when no checkpoint is given")
    sp.add_argument("--train-horizon", type=int)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("gradcheck", help="finite-difference check of the policy/value gradients")
    sp.add_argument("--params", type=int, default=1000, help="largest network size")
    sp.add_argument("--nets", type=int, default=50)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("export-plots", help="long-format plot series from metrics CSVs")
    sp.add_argument("--in", dest="in_dir", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export_plots)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 2
    except (AcmptcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
