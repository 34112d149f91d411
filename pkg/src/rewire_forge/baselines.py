"""Non-learning optimizers: hill climbing, simulated annealing, greedy, evolutionary.

All of them search over the same degree-preserving rewirings as the learned
policy and report gains on the unscaled objective. ``objective_evals`` counts
trial evaluations only; the initial evaluation of the input graph is free.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .env import EnvConfig, RewiringAction, apply_rewiring, enumerate_rewirings, sample_rewiring
from .errors import ParameterError
from .graph import Graph
from .metrics import combined_objective, gain_percent

PATIENCE = 1000


@dataclass
class OptimizerReport:
    best_graph: Graph
    initial_objective: float
    final_objective: float
    gain_percent: float
    rewirings_used: int
    objective_evals: int
    wall_time: float
    actions: list[RewiringAction] = field(default_factory=list)
    trace: list[float] = field(default_factory=list)  # best objective after each evaluation
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "initial_objective": self.initial_objective,
            "final_objective": self.final_objective,
            "gain_percent": self.gain_percent,
            "rewirings_used": self.rewirings_used,
            "objective_evals": self.objective_evals,
            "wall_time": self.wall_time,
            **self.extra,
        }


def _report(g0, best, obj0, best_obj, actions, evals, t0, trace, **extra) -> OptimizerReport:
    return OptimizerReport(
        best_graph=best,
        initial_objective=obj0,
        final_objective=best_obj,
        gain_percent=gain_percent(obj0, best_obj),
        rewirings_used=len(actions),
        objective_evals=evals,
        wall_time=time.perf_counter() - t0,
        actions=list(actions),
        trace=trace,
        extra=extra,
    )


def hill_climb(g: Graph, cfg: EnvConfig, seed: int, *, patience: int = PATIENCE, max_evals: int | None = None) -> OptimizerReport:
    """Random-restart-free hill climbing: accept a random rewiring iff it strictly improves."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    obj_cfg = cfg.objective
    cur = g
    cur_obj = obj0 = combined_objective(g, obj_cfg)
    actions: list[RewiringAction] = []
    trace: list[float] = []
    evals = stale = 0
    while len(actions) < cfg.max_rewiring_budget and stale < patience:
        if max_evals is not None and evals >= max_evals:
            break
        a = sample_rewiring(cur, rng)
        if a is None:
            break
        cand = apply_rewiring(cur, a)
        val = combined_objective(cand, obj_cfg)
        evals += 1
        if val > cur_obj:
            cur, cur_obj = cand, val
            actions.append(a)
            stale = 0
        else:
            stale += 1
        trace.append(cur_obj)
    return _report(g, cur, obj0, cur_obj, actions, evals, t0, trace)


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept non-negative moves outright, worse ones with probability exp(delta / T)."""
    if delta >= 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(delta / temperature))


def simulated_annealing(
    g: Graph,
    cfg: EnvConfig,
    seed: int,
    T0: float | None = None,
    decay: float = 0.995,
    *,
    patience: int = PATIENCE,
    max_evals: int | None = None,
) -> OptimizerReport:
    """Metropolis search with geometric cooling, tracking the best graph seen.

    The budget limits the length of the current rewiring path. Early stopping
    counts consecutive trials that fail to improve the best objective.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    obj_cfg = cfg.objective
    obj0 = combined_objective(g, obj_cfg)
    if T0 is None:
        T0 = 0.01 * abs(obj0) or 1e-3
    if T0 <= 0 or not 0 < decay < 1:
        raise ParameterError("need T0 > 0 and 0 < decay < 1")
    cur, cur_obj, path = g, obj0, []
    best, best_obj, best_path = g, obj0, []
    T = T0
    trace: list[float] = []
    evals = stale = 0
    while len(path) < cfg.max_rewiring_budget and stale < patience:
        if max_evals is not None and evals >= max_evals:
            break
        a = sample_rewiring(cur, rng)
        if a is None:
            break
        cand = apply_rewiring(cur, a)
        val = combined_objective(cand, obj_cfg)
        evals += 1
        if metropolis_accept(val - cur_obj, T, rng):
            cur, cur_obj = cand, val
            path = path + [a]
        if cur_obj > best_obj:
            best, best_obj, best_path = cur, cur_obj, path
            stale = 0
        else:
            stale += 1
        T *= decay
        trace.append(best_obj)
    return _report(g, best, obj0, best_obj, best_path, evals, t0, trace, final_temperature=T)


def worker_count() -> int:
    """Worker-pool cap taken from ``REWIRE_FORGE_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("REWIRE_FORGE_THREADS", "1")))
    except ValueError:
        return 1


def _score_candidates(args) -> list[float]:
    g, actions, obj_cfg = args
    return [combined_objective(apply_rewiring(g, a), obj_cfg) for a in actions]


def greedy_step(g: Graph, obj_cfg, workers: int = 1) -> tuple[RewiringAction | None, float | None, int]:
    """Best single rewiring of ``g`` as ``(action, objective, evaluations)``.

    Candidates are scanned in lexicographic canonical order and the first
    maximum wins, so ties resolve to the smallest ``(A, C, B, D)``.
    """
    cands = enumerate_rewirings(g)
    if not cands:
        return None, None, 0
    if workers > 1 and len(cands) > 64:
        chunks = [cands[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_score_candidates, [(g, c, obj_cfg) for c in chunks]))
        scores = [0.0] * len(cands)
        for i, part in enumerate(parts):
            scores[i::workers] = part
    else:
        scores = _score_candidates((g, cands, obj_cfg))
    k = int(np.argmax(scores))
    return cands[k], scores[k], len(cands)


def greedy(g: Graph, cfg: EnvConfig, *, workers: int | None = None) -> OptimizerReport:
    """Apply the best one-step rewiring while it strictly improves the objective."""
    t0 = time.perf_counter()
    workers = worker_count() if workers is None else workers
    obj_cfg = cfg.objective
    cur = g
    cur_obj = obj0 = combined_objective(g, obj_cfg)
    actions: list[RewiringAction] = []
    trace: list[float] = []
    evals = 0
    while len(actions) < cfg.max_rewiring_budget:
        a, val, n = greedy_step(cur, obj_cfg, workers)
        evals += n
        if a is None or val <= cur_obj:
            break
        cur = apply_rewiring(cur, a)
        cur_obj = val
        actions.append(a)
        trace.append(cur_obj)
    return _report(g, cur, obj0, cur_obj, actions, evals, t0, trace)


@dataclass
class _Individual:
    graph: Graph
    fitness: float
    actions: list[RewiringAction]


def evolutionary(
    g: Graph,
    cfg: EnvConfig,
    seed: int,
    pop_size: int = 20,
    generations: int = 100,
    *,
    patience: int = PATIENCE,
    on_generation=None,
) -> OptimizerReport:
    """Mutation-only evolutionary search with size-2 tournaments and one elite.

    Every generation breeds ``pop_size`` children, each one random feasible
    rewiring away from a tournament winner. The next population is the best
    of (elite, children), the elite winning ties, followed by the remaining
    children in birth order. With ``pop_size == 1`` this is hill climbing with
    one trial per generation. ``on_generation(population)`` is called with
    the initial population and after every generation.
    """
    if pop_size < 1:
        raise ParameterError("pop_size must be >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    obj_cfg = cfg.objective
    obj0 = combined_objective(g, obj_cfg)
    # the initial population is the input graph itself, repeated
    pop = [_Individual(g, obj0, [])] * pop_size
    elite = pop[0]
    if on_generation is not None:
        on_generation(pop)
    trace: list[float] = []
    evals = stale = ran = 0
    for _ in range(generations):
        children: list[_Individual] = []
        for _ in range(pop_size):
            parent = _tournament(pop, rng)
            if len(parent.actions) >= cfg.max_rewiring_budget:
                continue
            a = sample_rewiring(parent.graph, rng)
            if a is None:
                continue
            child_g = apply_rewiring(parent.graph, a)
            child = _Individual(child_g, combined_objective(child_g, obj_cfg), parent.actions + [a])
            evals += 1
            if child.fitness > elite.fitness:
                stale = 0
            else:
                stale += 1
            children.append(child)
            trace.append(max(elite.fitness, max(c.fitness for c in children)))
            if stale >= patience:
                break
        if not children:
            break
        top = max(range(len(children)), key=lambda i: (children[i].fitness, -i))
        if children[top].fitness > elite.fitness:
            elite = children[top]
            rest = children[:top] + children[top + 1:]
        else:
            rest = children
        pop = [elite] + rest[: pop_size - 1]
        ran += 1
        if on_generation is not None:
            on_generation(pop)
        if stale >= patience:
            break
    return _report(g, elite.graph, obj0, elite.fitness, elite.actions, evals, t0, trace, generations_run=ran)


def _tournament(pop: list[_Individual], rng: np.random.Generator) -> _Individual:
    if len(pop) == 1:
        return pop[0]
    i, j = rng.integers(len(pop), size=2)
    a, b = pop[i], pop[j]
    return a if a.fitness >= b.fitness else b
