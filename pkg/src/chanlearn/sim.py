"""Seeded Monte Carlo harness: synchronous rounds, batches and CSV output.

Each round every agent acts, the environment draws one rate per channel
(shared by everyone on that channel), payoffs are resolved from the
occupancy, and each agent receives the feedback its information case
allows.  All randomness for a run flows from one integer seed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import RunTrace, exponent_fit, regret
from .game import GameSpec, check_case3, sample_rates, socially_optimal
from .learners import Feedback, make_agent

log = logging.getLogger(__name__)

CASES = ("C1", "C2", "C3")
NATIVE_AGENT = {"C1": "exp3", "C2": "rla", "C3": "rs"}

CURVE_HEADER = ["t", "regret_expected", "regret_realized", "frac_optimal"]
AGGREGATE_HEADER = [
    "t",
    "regret_expected", "regret_expected_std",
    "regret_realized", "regret_realized_std",
    "frac_optimal", "frac_optimal_std",
]


@dataclass
class ExperimentConfig:
    spec: GameSpec
    case: str = "C2"
    agent: str = "rla"
    params: dict = field(default_factory=dict)
    horizon: int = 10_000
    seeds: list = field(default_factory=lambda: [0])
    out: str | None = None
    dense_until: int = 10_000
    per_decade: int = 100
    allow_cross: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}, got {self.case!r}")
        if self.agent != NATIVE_AGENT[self.case] and not self.allow_cross:
            raise ValueError(
                f"agent {self.agent!r} does not match case {self.case} "
                f"(expected {NATIVE_AGENT[self.case]!r}); set allow_cross to override"
            )
        if self.case == "C3":
            check_case3(self.spec.means, self.spec.interference, self.spec.rate_kind)
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if not self.seeds:
            raise ValueError("need at least one seed")
        self.seeds = [int(s) for s in self.seeds]

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "case": self.case,
            "agent": {"kind": self.agent, **self.params},
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "out": self.out,
            "dense_until": self.dense_until,
            "per_decade": self.per_decade,
            "allow_cross": self.allow_cross,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        agent = dict(d.pop("agent", {"kind": "rla"}))
        kind = agent.pop("kind")
        spec = GameSpec.from_dict(d.pop("spec"))
        known = {"case", "horizon", "seeds", "out", "dense_until", "per_decade", "allow_cross", "workers"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(spec=spec, agent=kind, params=agent, **d)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return ExperimentConfig.from_dict(json.loads(text))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed config {path}: {exc}") from exc


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


def agent_info(spec: GameSpec, case: str) -> dict:
    if case == "C1":
        return {"num_channels": spec.num_channels}
    return {"num_channels": spec.num_channels, "num_users": spec.num_users}


def run_once(config: ExperimentConfig, seed: int) -> RunTrace:
    spec = config.spec
    m, n = spec.num_users, spec.num_channels
    horizon = config.horizon
    env_seq, *agent_seqs = np.random.SeedSequence(seed).spawn(m + 1)
    env_rng = np.random.default_rng(env_seq)
    info = agent_info(spec, config.case)
    agents = [make_agent(config.agent, config.params, info, np.random.default_rng(s))
              for s in agent_seqs]
    share_occupancy = config.case == "C2"

    occ = np.zeros((horizon, n), dtype=np.int32)
    realized = np.zeros(horizon)
    expected = np.zeros(horizon)
    explored = np.zeros((horizon, m), dtype=bool)
    g = spec.interference
    values = spec.values
    for step in range(horizon):
        t = step + 1
        actions = [a.act(t) for a in agents]
        for i, a in enumerate(agents):
            explored[step, i] = a.explored
        counts = np.bincount(actions, minlength=n)
        rates = sample_rates(spec, env_rng)
        total = 0.0
        for a, j in zip(agents, actions):
            c = int(counts[j])
            h = float(rates[j] * g[j, c - 1])
            total += h
            a.observe(Feedback(h, c if share_occupancy else None), t)
        occ[step] = counts
        realized[step] = total
        nz = counts > 0
        expected[step] = float(np.sum(counts[nz] * values[nz, counts[nz] - 1]))
    return RunTrace(occ, realized, expected, explored, seed=seed, spec_id=spec.name)


def sample_times(horizon: int, dense_until: int = 10_000, per_decade: int = 100) -> np.ndarray:
    """Every step up to ``dense_until``, then a geometric grid ending at ``horizon``."""
    if horizon <= 0:
        return np.zeros(0, dtype=np.int64)
    dense = np.arange(1, min(horizon, dense_until) + 1)
    if horizon <= dense_until:
        return dense
    decades = math.log10(horizon / dense_until)
    sparse = np.geomspace(dense_until, horizon, max(2, int(math.ceil(decades * per_decade)) + 1))
    sparse = np.unique(np.round(sparse).astype(np.int64))
    sparse = sparse[sparse > dense_until]
    out = np.concatenate([dense, sparse])
    if out[-1] != horizon:
        out = np.append(out, horizon)
    return out


def _fmt(x) -> str:
    return repr(float(x))


def write_curve(path, times, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER if len(rows) == 3 else AGGREGATE_HEADER)
        for k, t in enumerate(times):
            w.writerow([int(t)] + [_fmt(col[k]) for col in rows])


def write_jsonl(path, records: dict) -> None:
    with open(path, "w") as fh:
        for key, value in records.items():
            fh.write(json.dumps({"key": key, "value": value}) + "\n")


@dataclass
class BatchResult:
    times: np.ndarray
    mean: dict  # column -> array at `times`
    std: dict
    per_seed: dict  # seed -> RegretCurve (subsampled)
    summary: dict
    traces: list


def final_decade_fraction(trace: RunTrace, k_star) -> float:
    """Share of rounds in ``(n/10, n]`` spent at the optimal allocation."""
    n = len(trace)
    if n == 0:
        return math.nan
    mask = trace.optimal_mask(k_star)
    return float(mask[n // 10:].mean())


def _run(args):
    config, seed = args
    return run_once(config, seed)


def run_batch(config: ExperimentConfig, keep_traces: bool = False) -> BatchResult:
    """Run every seed, aggregate regret curves and write them under ``config.out``."""
    sol = socially_optimal(config.spec)
    if not sol.unique:
        log.warning("optimum is tied between %s; results are flagged", list(sol.ties))
    jobs = [(config, s) for s in config.seeds]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            traces = list(pool.map(_run, jobs))
    else:
        traces = [_run(j) for j in jobs]

    times = sample_times(config.horizon, config.dense_until, config.per_decade)
    per_seed = {}
    stacks = {"regret_expected": [], "regret_realized": [], "frac_optimal": []}
    final_frac = []
    for tr in traces:
        curve = regret(tr, sol.v_star, sol.k_star)
        sub = curve.at(times) if len(times) else curve
        per_seed[tr.seed] = sub
        for key in stacks:
            stacks[key].append(getattr(sub, key))
        final_frac.append(final_decade_fraction(tr, sol.k_star))
    mean = {k: np.mean(v, axis=0) for k, v in stacks.items()}
    std = {k: np.std(v, axis=0, ddof=1) if len(v) > 1 else np.zeros_like(v[0]) for k, v in stacks.items()}

    summary = {
        "spec": config.spec.name,
        "case": config.case,
        "agent": config.agent,
        "horizon": config.horizon,
        "num_seeds": len(config.seeds),
        "k_star": list(sol.k_star),
        "v_star": sol.v_star,
        "optimum_unique": sol.unique,
        "final_regret_expected": float(mean["regret_expected"][-1]) if len(times) else 0.0,
        "final_regret_realized": float(mean["regret_realized"][-1]) if len(times) else 0.0,
        "frac_optimal_final_decade": float(np.mean(final_frac)) if len(times) else math.nan,
    }
    try:
        summary["regret_exponent"] = exponent_fit(times, mean["regret_expected"])
    except ValueError:
        summary["regret_exponent"] = None

    result = BatchResult(times, mean, std, per_seed, summary, traces if keep_traces else [])
    if config.out:
        write_batch(result, config.out)
    return result


def write_batch(result: BatchResult, out) -> None:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for seed, curve in result.per_seed.items():
            write_curve(out / f"seed_{seed}.csv", result.times,
                        [curve.regret_expected, curve.regret_realized, curve.frac_optimal])
        rows = []
        for key in ("regret_expected", "regret_realized", "frac_optimal"):
            rows += [result.mean[key], result.std[key]]
        write_curve(out / "curves.csv", result.times, rows)
        write_jsonl(out / "summary.jsonl", result.summary)
    except OSError as exc:
        raise OSError(f"failed writing results to {out}: {exc}") from exc
