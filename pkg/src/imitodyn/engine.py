"""Exact event-driven simulation of the imitation Markov chain.

Two engines share one law on the complete graph: simulate_complete runs the
population-type jump chain (rates n lambda x_i x_j f_ij), simulate_network
runs per-node activation, contact, and copy on an arbitrary graph.  Both
use inverse-CDF exponential waiting times from the run's own seeded stream,
so every run is reproducible bit for bit.
"""

from __future__ import annotations

import hashlib
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .games import Configuration, Game, PopulationType, rewards_grid
from .rules import ImitationRule
from .topology import Graph

__all__ = [
    "SimConfig",
    "Trajectory",
    "DriftRates",
    "RunSpec",
    "transition_rates",
    "simulate_complete",
    "simulate_network",
    "potential_drift_rates",
    "run_one",
    "ensemble",
    "derive_seed",
    "EVENT_RECORD_CAP",
]

# Beyond this many recorded jumps a run switches to stride recording.
EVENT_RECORD_CAP = 10_000_000

_RATE_SLACK = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Run parameters shared by both engines."""

    lam: float = 1.0
    horizon: float = 100.0
    seed: int = 0
    record_stride: float = 0.1
    stop_on_absorption: bool = True
    record_jumps: bool = False  # network engine: also record every type change

    def __post_init__(self) -> None:
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not (self.record_stride > 0.0):
            raise ValueError(f"record_stride must be positive, got {self.record_stride}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(eq=False)
class Trajectory:
    """Piecewise-constant sample path of the population type.

    The state holds on [times[k], times[k+1]); an absorbed run ends at its
    absorption time and the vertex state holds forever after.
    """

    times: np.ndarray
    counts: np.ndarray  # (T, m) int64, each row sums to n
    n: int
    absorbed_at: float | None
    absorbing_action: int | None
    event_count: int
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return int(self.counts.shape[1])

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.n

    def state(self, idx: int) -> PopulationType:
        return PopulationType(self.counts[idx].copy(), self.n)

    def final_type(self) -> PopulationType:
        return self.state(len(self.times) - 1)


@dataclass(frozen=True)
class DriftRates:
    """Total rates of potential-raising (q_plus) and potential-lowering
    (q_minus) jumps out of a state; reward ties contribute to neither."""

    q_plus: float
    q_minus: float


def derive_seed(*parts) -> int:
    """Deterministic 64-bit seed from arbitrary labeled parts (SHA-256)."""
    text = ":".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def transition_rates(game: Game, rule: ImitationRule, state: PopulationType, lam: float = 1.0) -> np.ndarray:
    """Jump-rate matrix: entry (i, j) is the rate of one player moving from
    action i to action j, n * lambda * x_i * x_j * f_ij(x)."""
    if state.m != game.m:
        raise ValueError(f"state has {state.m} actions, game has {game.m}")
    x = state.fractions
    r = game.rewards_at(x)
    F = rule.prob_matrix(r)
    rates = state.n * lam * np.outer(x, x) * F
    np.fill_diagonal(rates, 0.0)
    total = float(rates.sum())
    if total > state.n * lam * (1.0 + _RATE_SLACK):
        raise AssertionError(f"rate conservation violated: {total} > n*lambda = {state.n * lam}")
    return rates


def _meta(engine: str, game: Game, rule: ImitationRule, cfg: SimConfig, n: int, topology: str) -> dict:
    return {
        "engine": engine,
        "game": game.name,
        "rule": type(rule).__name__,
        "lambda": cfg.lam,
        "n": n,
        "seed": cfg.seed,
        "topology": topology,
    }


def _pair_tables_2action(game: Game, rule: ImitationRule, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Copy probabilities for every grid state of a 2-action population:
    returns (f01, f10) arrays indexed by k = count of action 0."""
    ks = np.arange(n + 1, dtype=float)
    X = np.vstack([ks / n, 1.0 - ks / n])
    R = rewards_grid(game, X)
    F = rule.prob_matrix(R)  # (2, 2, n+1)
    return np.ascontiguousarray(F[0, 1]), np.ascontiguousarray(F[1, 0])


def _absorbed_immediately(x0: PopulationType, cfg: SimConfig, meta: dict) -> Trajectory:
    return Trajectory(
        times=np.array([0.0]),
        counts=x0.counts.reshape(1, -1).copy(),
        n=x0.n,
        absorbed_at=0.0,
        absorbing_action=int(np.argmax(x0.counts)),
        event_count=0,
        meta=meta,
    )


def simulate_complete(game: Game, rule: ImitationRule, x0: PopulationType, cfg: SimConfig) -> Trajectory:
    """Exact jump-chain simulation on the complete graph (type space only).

    Every jump is recorded up to EVENT_RECORD_CAP, then recording falls back
    to the configured stride.  Unabsorbed runs get a final sample exactly at
    the horizon so the trajectory covers [0, horizon].
    """
    if x0.m != game.m:
        raise ValueError(f"initial state has {x0.m} actions, game has {game.m}")
    meta = _meta("complete", game, rule, cfg, x0.n, f"complete(n={x0.n})")
    if x0.is_pure():
        return _absorbed_immediately(x0, cfg, meta)
    if game.m == 2:
        return _simulate_complete_2action(game, rule, x0, cfg, meta)
    return _simulate_complete_generic(game, rule, x0, cfg, meta)


def _simulate_complete_2action(
    game: Game, rule: ImitationRule, x0: PopulationType, cfg: SimConfig, meta: dict
) -> Trajectory:
    n = x0.n
    lam = cfg.lam
    f01, f10 = _pair_tables_2action(game, rule, n)
    ks = np.arange(n + 1, dtype=float)
    base = lam * ks * (n - ks) / n
    up = base * f10  # a 1-player copies action 0: k -> k + 1
    dn = base * f01
    tot_arr = up + dn
    with np.errstate(invalid="ignore", divide="ignore"):
        pup_arr = np.where(tot_arr > 0.0, up / np.where(tot_arr > 0.0, tot_arr, 1.0), 0.0)
    tot = tot_arr.tolist()
    pup = pup_arr.tolist()

    rng = random.Random(cfg.seed)
    rr = rng.random
    log = math.log
    horizon = cfg.horizon
    t = 0.0
    k = int(x0.counts[0])
    times = [0.0]
    kk = [k]
    events = 0
    absorbed_at: float | None = None
    capped = False
    next_rec = 0.0

    while True:
        lam_k = tot[k]
        if lam_k <= 0.0:
            break  # defensive; absorption is handled at the jump below
        t_next = t - log(1.0 - rr()) / lam_k
        if t_next >= horizon:
            t = horizon
            break
        t = t_next
        k = k + 1 if rr() < pup[k] else k - 1
        events += 1
        if not capped:
            times.append(t)
            kk.append(k)
            if events >= EVENT_RECORD_CAP:
                capped = True
                next_rec = t + cfg.record_stride
        elif t >= next_rec:
            times.append(t)
            kk.append(k)
            next_rec = t + cfg.record_stride
        if k == 0 or k == n:
            absorbed_at = t
            break

    if absorbed_at is None:
        if times[-1] < horizon:
            times.append(horizon)
            kk.append(k)
    else:
        if capped and (not times or times[-1] != absorbed_at):
            times.append(absorbed_at)
            kk.append(k)
        if not cfg.stop_on_absorption and times[-1] < horizon:
            times.append(horizon)
            kk.append(k)

    karr = np.asarray(kk, dtype=np.int64)
    counts = np.column_stack([karr, n - karr])
    return Trajectory(
        times=np.asarray(times),
        counts=counts,
        n=n,
        absorbed_at=absorbed_at,
        absorbing_action=(0 if k == n else 1) if absorbed_at is not None else None,
        event_count=events,
        meta=meta,
    )


def _simulate_complete_generic(
    game: Game, rule: ImitationRule, x0: PopulationType, cfg: SimConfig, meta: dict
) -> Trajectory:
    n = x0.n
    m = game.m
    lam = cfg.lam
    rng = random.Random(cfg.seed)
    rr = rng.random
    log = math.log
    horizon = cfg.horizon
    counts = x0.counts.astype(np.int64).copy()
    t = 0.0
    times = [0.0]
    recorded = [counts.copy()]
    events = 0
    absorbed_at: float | None = None
    absorbing_action: int | None = None
    capped = False
    next_rec = 0.0

    while True:
        x = counts / n
        r = game.rewards_at(x)
        F = rule.prob_matrix(r)
        rates = n * lam * np.outer(x, x) * F
        np.fill_diagonal(rates, 0.0)
        total = float(rates.sum())
        if total > n * lam * (1.0 + _RATE_SLACK):
            raise AssertionError("rate conservation violated")
        if total <= 0.0:
            break
        t_next = t - log(1.0 - rr()) / total
        if t_next >= horizon:
            t = horizon
            break
        t = t_next
        flat = np.cumsum(rates.ravel())
        idx = int(np.searchsorted(flat, rr() * total, side="right"))
        idx = min(idx, m * m - 1)
        i, j = divmod(idx, m)
        counts[i] -= 1
        counts[j] += 1
        events += 1
        if not capped:
            times.append(t)
            recorded.append(counts.copy())
            if events >= EVENT_RECORD_CAP:
                capped = True
                next_rec = t + cfg.record_stride
        elif t >= next_rec:
            times.append(t)
            recorded.append(counts.copy())
            next_rec = t + cfg.record_stride
        if counts[j] == n:
            absorbed_at = t
            absorbing_action = j
            break

    if absorbed_at is None:
        if times[-1] < horizon:
            times.append(horizon)
            recorded.append(counts.copy())
    else:
        if capped and times[-1] != absorbed_at:
            times.append(absorbed_at)
            recorded.append(counts.copy())
        if not cfg.stop_on_absorption and times[-1] < horizon:
            times.append(horizon)
            recorded.append(counts.copy())

    return Trajectory(
        times=np.asarray(times),
        counts=np.asarray(recorded, dtype=np.int64),
        n=n,
        absorbed_at=absorbed_at,
        absorbing_action=absorbing_action,
        event_count=events,
        meta=meta,
    )


def simulate_network(graph: Graph, game: Game, rule: ImitationRule, y0: Configuration, cfg: SimConfig) -> Trajectory:
    """Node-level imitation dynamics on an arbitrary interaction graph.

    Activations arrive at total rate n * lambda; the active node contacts a
    uniform neighbor (uniform over all nodes, itself included, on the
    complete graph) and copies with probability f_ij evaluated at the global
    type.  The type is recorded every record_stride, at every change when
    cfg.record_jumps is set, and at absorption.
    """
    if y0.n != graph.n:
        raise ValueError(f"configuration has {y0.n} nodes, graph has {graph.n}")
    if y0.m != game.m:
        raise ValueError(f"configuration has {y0.m} actions, game has {game.m}")
    n = graph.n
    m = game.m
    lam = cfg.lam
    meta = _meta("network", game, rule, cfg, n, f"{graph.kind}(n={n})")
    counts = np.bincount(y0.actions, minlength=m).astype(np.int64)
    x0 = PopulationType(counts.copy(), n)
    if x0.is_pure():
        return _absorbed_immediately(x0, cfg, meta)

    use_tables = m == 2
    if use_tables:
        f01_arr, f10_arr = _pair_tables_2action(game, rule, n)
        f01 = f01_arr.tolist()
        f10 = f10_arr.tolist()
    else:
        F_cache = rule.prob_matrix(game.rewards_at(counts / n))

    y = y0.actions.astype(np.int64).tolist()
    adj = None if graph.is_complete else [a.tolist() for a in graph.neighbors]
    rng = random.Random(cfg.seed)
    rr = rng.random
    randrange = rng.randrange
    log = math.log
    horizon = cfg.horizon
    stride = cfg.record_stride
    record_jumps = cfg.record_jumps
    total_rate = n * lam

    t = 0.0
    k = int(counts[0])  # used only when m == 2
    times = [0.0]
    recorded = [counts.copy()]
    next_rec = stride
    events = 0
    flips = 0
    absorbed_at: float | None = None
    absorbing_action: int | None = None

    while True:
        t_next = t - log(1.0 - rr()) / total_rate
        while next_rec <= t_next and next_rec < horizon:
            times.append(next_rec)
            recorded.append(counts.copy())
            next_rec += stride
        if t_next >= horizon:
            t = horizon
            break
        t = t_next
        events += 1
        u = randrange(n)
        i = y[u]
        if adj is None:
            v = randrange(n)
        else:
            nb = adj[u]
            v = nb[randrange(len(nb))]
        j = y[v]
        if i == j:
            continue
        if use_tables:
            p = f01[k] if i == 0 else f10[k]
        else:
            p = float(F_cache[i, j])
        if rr() < p:
            y[u] = j
            counts[i] -= 1
            counts[j] += 1
            flips += 1
            if use_tables:
                k += 1 if j == 0 else -1
            else:
                F_cache = rule.prob_matrix(game.rewards_at(counts / n))
            if record_jumps:
                times.append(t)
                recorded.append(counts.copy())
            if counts[j] == n:
                absorbed_at = t
                absorbing_action = j
                if not record_jumps:
                    times.append(t)
                    recorded.append(counts.copy())
                break

    if absorbed_at is None:
        if times[-1] < horizon:
            times.append(horizon)
            recorded.append(counts.copy())
    elif not cfg.stop_on_absorption and times[-1] < horizon:
        times.append(horizon)
        recorded.append(counts.copy())

    meta["flip_count"] = flips
    return Trajectory(
        times=np.asarray(times),
        counts=np.asarray(recorded, dtype=np.int64),
        n=n,
        absorbed_at=absorbed_at,
        absorbing_action=absorbing_action,
        event_count=events,
        meta=meta,
    )


def potential_drift_rates(game: Game, rule: ImitationRule, state: PopulationType, lam: float = 1.0) -> DriftRates:
    """Split the total jump rate by the sign of the reward difference.

    Moving a player from i to j changes the potential in the direction of
    r_j - r_i, so q_plus collects strictly improving jumps and q_minus
    strictly worsening ones.  Requires a potential game.
    """
    if game.potential is None:
        raise ValueError("potential_drift_rates requires a game with a potential")
    if state.m != game.m:
        raise ValueError(f"state has {state.m} actions, game has {game.m}")
    x = state.fractions
    r = game.rewards_at(x)
    F = rule.prob_matrix(r)
    rates = state.n * lam * np.outer(x, x) * F
    np.fill_diagonal(rates, 0.0)
    up = r[None, :] > r[:, None]  # r_j > r_i
    down = r[None, :] < r[:, None]
    return DriftRates(q_plus=float(rates[up].sum()), q_minus=float(rates[down].sum()))


@dataclass(frozen=True, eq=False)
class RunSpec:
    """Everything an ensemble run needs except its seed.

    Provide x0 for the complete-graph type chain, or graph plus either a
    fixed y0 or target init_fractions (placed uniformly at random per run,
    from the run's own seed).
    """

    game: Game
    rule: ImitationRule
    cfg: SimConfig
    x0: PopulationType | None = None
    graph: Graph | None = None
    y0: Configuration | None = None
    init_fractions: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.x0 is not None:
            if self.graph is not None or self.y0 is not None or self.init_fractions is not None:
                raise ValueError("give either x0 (complete engine) or graph-based initial data, not both")
        else:
            if self.graph is None:
                raise ValueError("need x0 or a graph")
            if (self.y0 is None) == (self.init_fractions is None):
                raise ValueError("network runs need exactly one of y0 or init_fractions")


def _placement(n: int, m: int, fractions: Sequence[float], seed: int) -> Configuration:
    ptype = PopulationType.from_fractions(n, fractions)
    actions = np.repeat(np.arange(m, dtype=np.int64), ptype.counts).tolist()
    random.Random(seed).shuffle(actions)
    return Configuration(np.asarray(actions, dtype=np.int64), m)


def run_one(spec: RunSpec, seed: int) -> Trajectory:
    """Single run of a RunSpec under an explicit seed."""
    cfg = replace(spec.cfg, seed=seed)
    if spec.x0 is not None:
        return simulate_complete(spec.game, spec.rule, spec.x0, cfg)
    assert spec.graph is not None
    if spec.y0 is not None:
        y0 = spec.y0
    else:
        y0 = _placement(spec.graph.n, spec.game.m, spec.init_fractions, derive_seed(seed, "placement"))
    return simulate_network(spec.graph, spec.game, spec.rule, y0, cfg)


def _worker(args: tuple[RunSpec, int]) -> Trajectory:
    return run_one(*args)


def ensemble(run_spec: RunSpec, num_runs: int, base_seed: int, workers: int | None = None) -> list[Trajectory]:
    """Independent runs with per-run seeds hash(base_seed, run_index).

    Results are ordered by run index and do not depend on the worker count;
    IMITODYN_THREADS caps the pool (default: run sequentially).
    """
    if num_runs < 1:
        raise ValueError("need at least one run")
    seeds = [derive_seed(base_seed, i) for i in range(num_runs)]
    if workers is None:
        workers = int(os.environ.get("IMITODYN_THREADS", "1"))
    workers = max(1, min(workers, num_runs))
    if workers == 1:
        return [run_one(run_spec, s) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, [(run_spec, s) for s in seeds]))
