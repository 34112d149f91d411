"""Command line entry point.

Every subcommand writes its results into ``--out DIR`` together with a
``manifest.json`` describing the run. Exit codes: 0 success, 1 usage error,
2 data error, 3 numeric or training error.

Output columns:
  attack-curve  curve.csv   removed,fraction
  train         train_log.csv  update,mean_gain,policy_loss,value_loss,entropy,env_steps,eval_gain
  sweep-k       sweep_k.csv K,gain_percent,final_objective,env_steps
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attack import AttackStrategy, attack_curve
from .baselines import evolutionary, greedy, hill_climb, simulated_annealing
from .env import EnvConfig, RewiringAction, apply_rewiring
from .errors import (
    ContractError,
    FeasibilityError,
    GraphParseError,
    NumericError,
    ParameterError,
    SamplingError,
    TrainingError,
)
from .firegnn import EncoderBatch, FireGNN, build_filtration, default_order, embeddings_to_json
from .graph import ba_generate, gnp_graph, load_edge_list, random_walk_sample, save_edge_list
from .metrics import ObjectiveConfig, all_metrics
from .policy import PPOConfig, evaluate_policy, load_networks, save_networks, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _objective(args) -> ObjectiveConfig:
    return ObjectiveConfig(alpha=args.alpha, resilience=args.resilience, utility=args.utility,
                           attack=AttackStrategy(args.attack))


def _env(args) -> EnvConfig:
    return EnvConfig(_objective(args), max_rewiring_budget=args.budget)


def _ppo(args) -> PPOConfig:
    return PPOConfig(K=args.k, ent_coef=args.ent_coef, epochs=args.epochs, num_envs=args.envs)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args, out: Path) -> dict:
    if args.model == "ba":
        g = ba_generate(args.n, args.m, args.seed)
    elif args.model == "gnp":
        g = gnp_graph(args.n, args.p, args.seed)
    else:
        if not args.input:
            raise UsageError("--model sample needs --input")
        g = random_walk_sample(load_edge_list(args.input[0]), args.n, args.seed)
    save_edge_list(g, out / "graph.edgelist")
    return {"nodes": g.n, "edges": g.num_edges}


def cmd_metrics(args, out: Path) -> dict:
    g = load_edge_list(args.input[0])
    m = all_metrics(g, AttackStrategy(args.attack))
    _write_json(out / "metrics.json", m)
    return m


def cmd_attack_curve(args, out: Path) -> dict:
    g = load_edge_list(args.input[0])
    curve = attack_curve(g, AttackStrategy(args.attack))
    with open(out / "curve.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["removed", "fraction"])
        for q, s in enumerate(curve, start=1):
            w.writerow([q, repr(float(s))])
    return {"points": len(curve), "R": float(np.mean(curve))}


def cmd_rewire(args, out: Path) -> dict:
    g = load_edge_list(args.input[0])
    try:
        a, c, b, d = (int(x) for x in args.action.split(","))
    except ValueError:
        raise UsageError("--action expects four comma separated node ids A,C,B,D") from None
    new = apply_rewiring(g, RewiringAction.rewire(a, c, b, d))
    save_edge_list(new, out / "graph.edgelist")
    return {"removed": [[a, c], [b, d]], "added": [[a, b], [c, d]]}


def cmd_optimize(args, out: Path) -> dict:
    g = load_edge_list(args.input[0])
    cfg = _env(args)
    if args.algo == "hc":
        rep = hill_climb(g, cfg, args.seed)
    elif args.algo == "sa":
        rep = simulated_annealing(g, cfg, args.seed)
    elif args.algo == "greedy":
        rep = greedy(g, cfg)
    elif args.algo == "ea":
        rep = evolutionary(g, cfg, args.seed)
    else:
        if not args.checkpoint:
            raise UsageError("--algo policy needs --checkpoint")
        policy, _, _ = load_networks(args.checkpoint)
        rep = evaluate_policy(policy, g, cfg)
    save_edge_list(rep.best_graph, out / "graph.edgelist")
    with open(out / "actions.jsonl", "w") as fh:
        for a in rep.actions:
            fh.write(json.dumps(a.to_json()) + "\n")
    report = rep.to_json()
    _write_json(out / "report.json", report)
    return report


def _load_graphs(paths):
    return [load_edge_list(p) for p in paths]


def cmd_train(args, out: Path) -> dict:
    graphs = _load_graphs(args.input)
    cfg = _ppo(args)
    res = train(graphs, _env(args), cfg, args.seed, args.steps)
    (out / "train_log.csv").write_text(res.log_csv())
    save_networks(out / "checkpoint", res.policy, res.value, cfg,
                  {"seed": args.seed, "best_eval_gain": res.best_eval_gain, "env_steps": res.env_steps})
    return {"best_eval_gain": res.best_eval_gain, "env_steps": res.env_steps, "updates": len(res.log)}


def cmd_embed(args, out: Path) -> dict:
    g = load_edge_list(args.input[0])
    if args.checkpoint:
        policy, _, _ = load_networks(args.checkpoint)
        model = policy.encoder
    else:
        model = FireGNN(np.random.default_rng(args.seed))
    K = default_order(g, None) if args.k is None else args.k
    emb = model(EncoderBatch([build_filtration(g, K)]))
    _write_json(out / "embeddings.json", embeddings_to_json(emb))
    return {"K": K, "nodes": g.n, "directed_edges": 2 * g.num_edges}


def cmd_sweep_k(args, out: Path) -> dict:
    graphs = _load_graphs(args.input)
    env = _env(args)
    rows = []
    for K in range(args.k_min, args.k_max + 1):
        cfg = PPOConfig(K=K, ent_coef=args.ent_coef, epochs=args.epochs, num_envs=args.envs)
        res = train(graphs, env, cfg, args.seed, args.steps)
        reps = [evaluate_policy(res.policy, g, env) for g in graphs]
        rows.append({
            "K": K,
            "gain_percent": float(np.mean([r.gain_percent for r in reps])),
            "final_objective": float(np.mean([r.final_objective for r in reps])),
            "env_steps": res.env_steps,
        })
    with open(out / "sweep_k.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["K", "gain_percent", "final_objective", "env_steps"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return {"rows": len(rows)}


COMMANDS = {
    "generate": cmd_generate,
    "metrics": cmd_metrics,
    "attack-curve": cmd_attack_curve,
    "rewire": cmd_rewire,
    "optimize": cmd_optimize,
    "train": cmd_train,
    "embed": cmd_embed,
    "sweep-k": cmd_sweep_k,
}


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rewire-forge", description="Degree-preserving rewiring for network resilience.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, inputs: str | None = "?"):
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        if inputs:
            sp.add_argument("--input", nargs=inputs, required=inputs == "+", help="edge-list file(s)")

    def objective(sp):
        sp.add_argument("--alpha", type=float, default=1.0, help="weight of the resilience term")
        sp.add_argument("--resilience", choices=["R", "sr", "ac"], default="R")
        sp.add_argument("--utility", choices=["global", "local", "none"], default="global")
        sp.add_argument("--attack", choices=["degree", "betweenness"], default="degree")
        sp.add_argument("--budget", type=int, default=20)

    def learning(sp):
        sp.add_argument("--steps", type=int, default=20000, help="environment steps")
        sp.add_argument("--ent-coef", type=float, default=0.01)
        sp.add_argument("--epochs", type=int, default=4)
        sp.add_argument("--envs", type=int, default=8)

    sp = sub.add_parser("generate", help="write a synthetic or sampled graph")
    common(sp, inputs="*")
    sp.add_argument("--model", choices=["ba", "gnp", "sample"], default="ba")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--p", type=float, default=0.1)

    sp = sub.add_parser("metrics", help="resilience and utility metrics as JSON")
    common(sp, inputs=1)
    sp.add_argument("--attack", choices=["degree", "betweenness"], default="degree")

    sp = sub.add_parser("attack-curve", help="largest-component curve as CSV")
    common(sp, inputs=1)
    sp.add_argument("--attack", choices=["degree", "betweenness"], default="degree")

    sp = sub.add_parser("rewire", help="apply one explicit rewiring")
    common(sp, inputs=1)
    sp.add_argument("--action", required=True, help="A,C,B,D: remove AC and BD, add AB and CD")

    sp = sub.add_parser("optimize", help="run a search baseline or a trained policy")
    common(sp, inputs=1)
    objective(sp)
    sp.add_argument("--algo", choices=["hc", "sa", "greedy", "ea", "policy"], required=True)
    sp.add_argument("--checkpoint")

    sp = sub.add_parser("train", help="train the rewiring policy with PPO")
    common(sp, inputs="+")
    objective(sp)
    learning(sp)
    sp.add_argument("--k", type=int, default=5, help="filtration order")

    sp = sub.add_parser("embed", help="dump FireGNN embeddings as JSON")
    common(sp, inputs=1)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--checkpoint")

    sp = sub.add_parser("sweep-k", help="train once per filtration order and tabulate gains")
    common(sp, inputs="+")
    objective(sp)
    learning(sp)
    sp.add_argument("--k-min", type=int, default=0)
    sp.add_argument("--k-max", type=int, default=8)
    return p


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("out",)}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        inputs = [args.input] if isinstance(getattr(args, "input", None), str) else (getattr(args, "input", None) or [])
        hashes = {p: _sha256(p) for p in inputs}
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](args, out)
    except (UsageError, ParameterError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FeasibilityError as exc:
        print(f"infeasible rewiring, violated constraint {exc.constraint}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (GraphParseError, SamplingError, ContractError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, TrainingError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = {
        "command": args.command,
        "config": _config(args),
        "seed": args.seed,
        "version": __version__,
        "inputs": hashes,
        "wall_time": time.perf_counter() - t0,
        "summary": summary,
    }
    _write_json(out / "manifest.json", manifest)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
