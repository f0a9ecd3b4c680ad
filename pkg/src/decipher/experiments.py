"""Experiment sweep harness: grids, runners, and deterministic CSV/JSON output.

Six experiment kinds cover the phase-transition sweeps (exact recovery vs
eigenvalue diversity, sampled recovery vs sigma_min), random reversible-chain
gap statistics, tangent-kernel convergence runs, and the two training
ablations (discriminator reset, generator averaging). Every runner is a pure
function of (config, seeds): cells are computed independently, optionally on
a process pool, then sorted by grid coordinates before writing, so the
results.csv bytes do not depend on worker scheduling. Wall-clock times stay
in the in-memory rows but are excluded from the CSV.

Cells that fail to construct (for example a subgraph larger than the state
space) produce an error-tagged row instead of aborting the sweep.
"""

from __future__ import annotations

import csv
import json
import math
import multiprocessing
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from time import perf_counter
from typing import Optional, Sequence

import numpy as np

from .adversarial import TrainConfig, erm_least_squares, train, write_loss_trace
from .graphs import (
    GraphSpec,
    TransitionMatrix,
    assemble,
    build_debruijn,
    build_hypercube,
    interpolate_with_hamiltonian,
)
from .hmm import (
    HmmLanguage,
    empirical_positional_unigrams,
    exact_positional_unigrams,
    random_initial_vector,
    random_permutation_emission,
    sample_corpus,
)
from .ntk import _spectral_radius_estimate, discriminator_ntk, integrate_dynamics, log_linear_tail_fit
from .random_chains import gap_statistics, random_reversible_chain
from .recovery import phoneme_error_rate, recover_pseudoinverse
from .spectral import sample_size_threshold, sigma_min, spectrum_of_chain

KINDS = (
    "asymptotic_phase",
    "finite_sample_phase",
    "smrm_gaps",
    "ntk_convergence",
    "reset_ablation",
    "averaging_ablation",
)

FAMILIES = ("circulant", "de_bruijn", "hypercube")

# independent child-seed streams so pi, O, and chain draws never collide
RELABEL_STREAM = 5
PI_STREAM = 7
EMISSION_STREAM = 11
CHAIN_STREAM = 13

CONFIDENCE_DELTA = 0.05

# convergence-run language recipe: random reversible chain blended with a
# Hamiltonian cycle (dense random chains mix in ~2 steps, which collapses the
# positional rows onto the stationary vector and stalls the kernel flow)
NTK_CYCLE_WEIGHT = 0.8
NTK_EMISSION_PEAK = 0.6
NTK_SIGMA_FLOOR = 0.05
NTK_MAX_ATTEMPTS = 50
NTK_NX_CYCLE = (3, 4, 5, 6)
# 10x the integrator's default step: kernels stay bounded along the flow and
# the overshoot guard still protects stability, so trade per-step accuracy
# for reach into the slow-decay regime
NTK_STEP_FACTOR = 0.1

FLOAT_FMT = "%.9g"

KIND_COLUMNS = {
    "asymptotic_phase": ["kind", "family", "nx", "knob", "seed", "distinct_nonzero",
                         "per", "residual", "rank_deficient", "error"],
    "finite_sample_phase": ["kind", "family", "nx", "knob", "seed", "sigma_min",
                            "threshold", "per", "residual", "error"],
    "smrm_gaps": ["kind", "size", "trial", "seed", "min_gap", "distinct_count",
                  "simple_at_1e12", "error"],
    "ntk_convergence": ["kind", "language_index", "nx", "seed", "attempts", "sigma_min",
                        "residual", "slope", "r_squared", "monotone", "t_stop", "error"],
    "reset_ablation": ["kind", "family", "nx", "knob", "variant", "seed", "sigma_min",
                       "threshold", "per", "residual", "error"],
    "averaging_ablation": ["kind", "family", "nx", "knob", "variant", "seed", "sigma_min",
                           "threshold", "per", "residual", "error"],
}


@dataclass
class ExperimentConfig:
    """One experiment run: kind, grid, training setup, seeds, output options.

    Grid semantics depend on the kind. For asymptotic_phase the knob is the
    requested distinct-eigenvalue count of the tiled subgraph; for
    finite_sample_phase and the ablations it is the circulant action-set size
    d or the Hamiltonian interpolation weight w. smrm_gaps uses sizes/trials,
    ntk_convergence uses n_languages plus the integration horizon.
    """

    kind: str
    family: str = "circulant"
    nx_values: tuple[int, ...] = ()
    knob_values: tuple = ()
    ngram: int = 2
    L: int = 20
    n_sequences: int = 2560
    matched: bool = False
    solver: str = "gan"
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    sizes: tuple[int, ...] = (16, 32, 64)
    trials: int = 500
    B_list: tuple[float, ...] = (1.0, 2.0, 3.0)
    n_languages: int = 20
    t_end: float = 600_000.0
    stop_residual: float = 1e-5
    write_traces: bool = False
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind: {self.kind!r}")
        self.nx_values = tuple(int(v) for v in self.nx_values)
        # plain python scalars so configs stay json-serializable
        self.knob_values = tuple(
            float(k) if isinstance(k, (float, np.floating)) else int(k)
            for k in self.knob_values
        )
        self.seeds = tuple(int(s) for s in self.seeds)
        self.sizes = tuple(int(s) for s in self.sizes)
        self.B_list = tuple(float(b) for b in self.B_list)
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed per cell")
        grid_kinds = ("asymptotic_phase", "finite_sample_phase", "reset_ablation",
                      "averaging_ablation")
        if self.kind in grid_kinds:
            if self.family not in FAMILIES:
                raise ValueError(f"unknown graph family: {self.family!r}")
            if not self.nx_values or not self.knob_values:
                raise ValueError("grid kinds need nonempty nx_values and knob_values")
            if self.ngram < 1 or self.L < 1:
                raise ValueError("ngram and L must be >= 1")
        if self.kind in ("finite_sample_phase", "reset_ablation", "averaging_ablation"):
            if self.n_sequences < 1:
                raise ValueError("n_sequences must be >= 1")
            if self.solver not in ("gan", "erm"):
                raise ValueError(f"solver must be 'gan' or 'erm', got {self.solver!r}")
        if self.kind == "smrm_gaps":
            if not self.sizes or self.trials < 1:
                raise ValueError("smrm_gaps needs nonempty sizes and trials >= 1")
        if self.kind == "ntk_convergence":
            if self.n_languages < 1 or self.t_end <= 0:
                raise ValueError("ntk_convergence needs n_languages >= 1 and t_end > 0")


def default_config(kind: str, family: str = "circulant") -> ExperimentConfig:
    """The published grids for each experiment kind."""
    if kind == "asymptotic_phase":
        grids = {
            "circulant": dict(nx_values=tuple(range(10, 15)), knob_values=tuple(range(2, 21)),
                              ngram=2, L=20),
            "de_bruijn": dict(nx_values=tuple(range(8, 12)), knob_values=tuple(range(2, 33, 2)),
                              ngram=3, L=10),
            "hypercube": dict(nx_values=tuple(range(5, 9)), knob_values=tuple(range(2, 10)),
                              ngram=4, L=10),
        }
        return ExperimentConfig(kind=kind, family=family, seeds=tuple(range(5)),
                                **grids[family])
    if kind == "finite_sample_phase":
        grids = {
            "circulant": dict(nx_values=(10,), knob_values=tuple(range(2, 82, 8)), L=80),
            "de_bruijn": dict(nx_values=(8,), knob_values=tuple(np.linspace(0.0, 1.0, 10)), L=40),
            "hypercube": dict(nx_values=(8,), knob_values=tuple(np.linspace(0.98, 1.0, 10)), L=80),
        }
        return ExperimentConfig(
            kind=kind, family=family, ngram=2, n_sequences=2560, seeds=tuple(range(10)),
            train=TrainConfig(objective="mmd", epochs=5000), **grids[family],
        )
    if kind == "smrm_gaps":
        return ExperimentConfig(kind=kind, seeds=(0,))
    if kind == "ntk_convergence":
        return ExperimentConfig(kind=kind, L=10, seeds=(0,))
    if kind in ("reset_ablation", "averaging_ablation"):
        # the three highest action-set sizes: the floor of the circulant
        # sigma_min sweep, where the reset effect is visible
        train_cfg = TrainConfig(objective="jsd", epochs=500)
        if kind == "averaging_ablation":
            train_cfg = TrainConfig(objective="mmd", epochs=500, discriminator="mlp")
        return ExperimentConfig(
            kind=kind, family="circulant", nx_values=(10,), knob_values=(58, 66, 74),
            ngram=2, L=80, n_sequences=2560, seeds=tuple(range(10)), train=train_cfg,
        )
    raise ValueError(f"unknown experiment kind: {kind!r}")


# ---------------------------------------------------------------------------
# language construction


def asymptotic_language(family: str, nx: int, knob: int, ngram: int, seed: int) -> tuple[HmmLanguage, GraphSpec]:
    """Tiled-subgraph language whose distinct-eigenvalue count tracks knob.

    circulant: copies of the undirected cycle C_{2*knob-1} (knob distinct
    nonzero cosine values). de_bruijn: copies of DB(2, m) with m chosen so the
    candidate spectrum has about knob values. hypercube: copies of Q_knob.
    """
    states = nx**ngram
    if family == "circulant":
        cycle = 2 * int(knob) - 1
        spec = GraphSpec(family="circulant", n=cycle, action_set=(1, cycle - 1))
    elif family == "de_bruijn":
        m = max(1, round(math.sqrt(2.0 * knob)) - 1)
        spec = GraphSpec(family="de_bruijn", k=2, m=m)
    elif family == "hypercube":
        spec = GraphSpec(family="hypercube", dim=int(knob))
    else:
        raise ValueError(f"unknown graph family: {family!r}")
    T = assemble(spec, states)
    # A consecutive copy layout can share a factor with the alphabet size, in
    # which case every copy projects identically through the final-unit
    # selector and the visible diversity collapses below the eigenvalue
    # count. A seeded relabeling puts the selector in generic position.
    relabel = np.random.default_rng([RELABEL_STREAM, seed]).permutation(states)
    T = TransitionMatrix(
        T.probs[np.ix_(relabel, relabel)],
        reversible=T.reversible,
        weights=None if T.weights is None else T.weights[np.ix_(relabel, relabel)],
        spec=T.spec,
    )
    pi = random_initial_vector(states, [PI_STREAM, seed])
    O = random_permutation_emission(nx, [EMISSION_STREAM, seed])
    return HmmLanguage(pi=pi, T=T, O=O, N=ngram, nx=nx, ny=nx), T.spec


def finite_language(family: str, nx: int, knob, ngram: int, seed: int) -> HmmLanguage:
    """Single-graph language for the sampled sweeps.

    circulant: one C_{nx^ngram} with action set {1..d}, d = knob. The other
    two families blend the full graph with its Hamiltonian cycle at weight
    w = knob, so larger knobs mean slower mixing and better conditioning.
    """
    states = nx**ngram
    if family == "circulant":
        spec = GraphSpec(family="circulant", n=states, action_set=tuple(range(1, int(knob) + 1)))
        T = assemble(spec, states)
    elif family in ("de_bruijn", "hypercube"):
        m = round(math.log2(states))
        if 2**m != states:
            raise ValueError(f"{family} interpolation needs a power-of-two state count, got {states}")
        base = build_debruijn(2, m) if family == "de_bruijn" else build_hypercube(m)
        T = interpolate_with_hamiltonian(base, w=float(knob))
    else:
        raise ValueError(f"unknown graph family: {family!r}")
    pi = random_initial_vector(states, [PI_STREAM, seed])
    O = random_permutation_emission(nx, [EMISSION_STREAM, seed])
    return HmmLanguage(pi=pi, T=T, O=O, N=ngram, nx=nx, ny=nx)


def ntk_language(index: int, L: int) -> tuple[HmmLanguage, int]:
    """Random decipherable language with an interior target emission.

    Resamples (chain, pi, permutation) until the exact positional matrix
    clears NTK_SIGMA_FLOOR; one-hot targets freeze the generator kernels
    quadratically, so the emission is a peaked mixture instead of the bare
    permutation. Returns the language and how many draws were rejected.
    """
    nx = NTK_NX_CYCLE[index % len(NTK_NX_CYCLE)]
    for attempt in range(NTK_MAX_ATTEMPTS + 1):
        base = random_reversible_chain(nx, [CHAIN_STREAM, index, attempt])
        T = interpolate_with_hamiltonian(base, w=NTK_CYCLE_WEIGHT)
        pi = random_initial_vector(nx, [PI_STREAM, index, attempt])
        perm = random_permutation_emission(nx, [EMISSION_STREAM, index, attempt])
        O = NTK_EMISSION_PEAK * perm + (1.0 - NTK_EMISSION_PEAK) / nx
        lang = HmmLanguage(pi=pi, T=T, O=O, N=1, nx=nx, ny=nx)
        pair = exact_positional_unigrams(lang, L=L)
        if sigma_min(pair.PX) > NTK_SIGMA_FLOOR:
            return lang, attempt
    raise RuntimeError(f"no decipherable language within {NTK_MAX_ATTEMPTS} draws at index {index}")


# ---------------------------------------------------------------------------
# cell workers (module level so a process pool can pickle them)


def _uniform_weights(nx: int) -> np.ndarray:
    return np.full(nx, 1.0 / nx)


def _asymptotic_cell(args) -> dict:
    cfg, nx, knob, seed = args
    t0 = perf_counter()
    row = {"kind": cfg.kind, "family": cfg.family, "nx": nx, "knob": knob, "seed": seed,
           "distinct_nonzero": -1, "per": float("nan"), "residual": float("nan"),
           "rank_deficient": 0, "error": ""}
    try:
        lang, spec = asymptotic_language(cfg.family, nx, knob, cfg.ngram, seed)
        report = spectrum_of_chain(lang.T, graph=spec)
        pair = exact_positional_unigrams(lang, L=cfg.L)
        rec = recover_pseudoinverse(pair)
        row["distinct_nonzero"] = report.nonzero_distinct_count
        row["per"] = phoneme_error_rate(rec.decoded, lang.O, _uniform_weights(nx))
        row["residual"] = rec.residual
        row["rank_deficient"] = int(rec.rank_deficient)
        row["_matrix"] = rec.O_hat
    except (ValueError, RuntimeError) as exc:
        row["error"] = str(exc)
    row["wall_time"] = perf_counter() - t0
    return row


def _finite_cell(args) -> dict:
    cfg, nx, knob, seed, variant = args
    t0 = perf_counter()
    row = {"kind": cfg.kind, "family": cfg.family, "nx": nx, "knob": knob, "seed": seed,
           "sigma_min": float("nan"), "threshold": float("nan"), "per": float("nan"),
           "residual": float("nan"), "error": ""}
    if variant is not None:
        row["variant"] = variant
    try:
        lang = finite_language(cfg.family, nx, knob, cfg.ngram, seed)
        corpus = sample_corpus(lang, n_sequences=cfg.n_sequences, L=cfg.L,
                               matched=cfg.matched, seed=seed)
        pair = empirical_positional_unigrams(corpus)
        row["sigma_min"] = sigma_min(pair.PX)
        row["threshold"] = sample_size_threshold(cfg.n_sequences, cfg.n_sequences, pair.L,
                                                 lang.nx, lang.ny, delta=CONFIDENCE_DELTA)
        weights = _uniform_weights(nx)
        train_cfg = replace(cfg.train, seed=seed)
        if variant == "no_reset":
            train_cfg = replace(train_cfg, reset_discriminator=False)
        elif variant == "reset":
            train_cfg = replace(train_cfg, reset_discriminator=True)
        elif variant in ("soft_input", "outside_cost"):
            train_cfg = replace(train_cfg, averaging=variant)
        if cfg.solver == "gan":
            res = train(pair, train_cfg, true_O=lang.O)
            O_hat = res.final_assignment()
            row["per"] = phoneme_error_rate(res.decoded(), lang.O, weights)
            row["residual"] = res.trace[-1]["frobenius_residual"] if res.trace else float(
                np.linalg.norm(pair.PX @ O_hat - pair.PY))
            if cfg.write_traces:
                row["_trace"] = res.trace
        else:
            sol = erm_least_squares(pair)
            O_hat = sol.O_projected
            row["per"] = phoneme_error_rate(sol.decoded(), lang.O, weights)
            row["residual"] = sol.residual_projected
        row["_matrix"] = O_hat
    except (ValueError, RuntimeError) as exc:
        row["error"] = str(exc)
    row["wall_time"] = perf_counter() - t0
    return row


def _ntk_cell(args) -> dict:
    cfg, index = args
    t0 = perf_counter()
    row = {"kind": cfg.kind, "language_index": index, "nx": -1, "seed": index, "attempts": -1,
           "sigma_min": float("nan"), "residual": float("nan"), "slope": float("nan"),
           "r_squared": float("nan"), "monotone": 0, "t_stop": float("nan"), "error": ""}
    try:
        lang, attempts = ntk_language(index, cfg.L)
        pair = exact_positional_unigrams(lang, L=cfg.L)
        rho = max(_spectral_radius_estimate(
            np.asarray(pair.PX), discriminator_ntk(lang.ny),
            np.full((lang.nx, lang.ny), 1.0 / lang.ny), 1.0), 1e-12)
        traj = integrate_dynamics(pair, step=min(NTK_STEP_FACTOR / rho, 1.0),
                                  t_end=cfg.t_end, stop_residual=cfg.stop_residual)
        slope, r2 = log_linear_tail_fit(traj)
        row.update(nx=lang.nx, attempts=attempts, sigma_min=sigma_min(pair.PX),
                   residual=float(traj.residuals[-1]), slope=slope, r_squared=r2,
                   monotone=int(bool(np.all(np.diff(traj.C) <= 1e-10))),
                   t_stop=float(traj.times[-1]))
        if cfg.write_traces:
            row["_ntk_traj"] = traj
    except (ValueError, RuntimeError) as exc:
        row["error"] = str(exc)
    row["wall_time"] = perf_counter() - t0
    return row


def _smrm_block(args) -> list[dict]:
    cfg, size = args
    t0 = perf_counter()
    try:
        stats = gap_statistics(size, cfg.trials, B_list=cfg.B_list, seed=cfg.seeds[0])
    except (ValueError, RuntimeError) as exc:
        return [{"kind": cfg.kind, "size": size, "trial": -1, "seed": cfg.seeds[0],
                 "min_gap": float("nan"), "distinct_count": -1, "simple_at_1e12": 0,
                 "error": str(exc), "wall_time": perf_counter() - t0}]
    elapsed = (perf_counter() - t0) / cfg.trials
    return [
        {"kind": cfg.kind, "size": size, "trial": t, "seed": cfg.seeds[0],
         "min_gap": float(stats.min_gaps[t]), "distinct_count": int(stats.distinct_counts[t]),
         "simple_at_1e12": int(stats.min_gaps[t] > 1e-12), "error": "", "wall_time": elapsed}
        for t in range(cfg.trials)
    ]


# ---------------------------------------------------------------------------
# runners


def _map_cells(worker, tasks, jobs: int) -> list:
    if jobs <= 1:
        return [worker(t) for t in tasks]
    with multiprocessing.Pool(jobs) as pool:
        return pool.map(worker, tasks)


def _sort_key(row: dict):
    return (
        str(row.get("family", "")),
        int(row.get("size", -1)),
        int(row.get("nx", -1)),
        float(row.get("knob", -1.0)),
        int(row.get("language_index", -1)),
        int(row.get("trial", -1)),
        str(row.get("variant", "")),
        int(row.get("seed", -1)),
    )


def run_asymptotic_phase(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, nx, knob, seed)
             for nx in cfg.nx_values for knob in cfg.knob_values for seed in cfg.seeds]
    return sorted(_map_cells(_asymptotic_cell, tasks, jobs), key=_sort_key)


def run_finite_sample_phase(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, nx, knob, seed, None)
             for nx in cfg.nx_values for knob in cfg.knob_values for seed in cfg.seeds]
    return sorted(_map_cells(_finite_cell, tasks, jobs), key=_sort_key)


def run_reset_ablation(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Paired rows per (cell, seed): identical data, reset flag flipped."""
    tasks = [(cfg, nx, knob, seed, variant)
             for nx in cfg.nx_values for knob in cfg.knob_values
             for seed in cfg.seeds for variant in ("reset", "no_reset")]
    return sorted(_map_cells(_finite_cell, tasks, jobs), key=_sort_key)


def run_averaging_ablation(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Paired rows per (cell, seed) for the two generator-averaging modes.

    Runs per-position MLP discriminators; with a linear discriminator the two
    modes coincide identically for MMD, so the comparison is vacuous there.
    """
    if cfg.train.discriminator != "mlp":
        raise ValueError("averaging ablation requires train.discriminator == 'mlp'")
    tasks = [(cfg, nx, knob, seed, variant)
             for nx in cfg.nx_values for knob in cfg.knob_values
             for seed in cfg.seeds for variant in ("soft_input", "outside_cost")]
    return sorted(_map_cells(_finite_cell, tasks, jobs), key=_sort_key)


def run_smrm_gaps(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    blocks = _map_cells(_smrm_block, [(cfg, size) for size in cfg.sizes], jobs)
    return sorted([row for block in blocks for row in block], key=_sort_key)


def run_ntk_convergence(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, index) for index in range(cfg.n_languages)]
    return sorted(_map_cells(_ntk_cell, tasks, jobs), key=_sort_key)


RUNNERS = {
    "asymptotic_phase": run_asymptotic_phase,
    "finite_sample_phase": run_finite_sample_phase,
    "smrm_gaps": run_smrm_gaps,
    "ntk_convergence": run_ntk_convergence,
    "reset_ablation": run_reset_ablation,
    "averaging_ablation": run_averaging_ablation,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    return RUNNERS[cfg.kind](cfg, jobs=jobs)


# ---------------------------------------------------------------------------
# output


def _format_cell(value) -> str:
    if isinstance(value, float):
        return FLOAT_FMT % value
    return str(value)


def write_results_csv(rows: Sequence[dict], path, columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col, "")) for col in columns])


def _cell_label(row: dict) -> str:
    parts = []
    for key in ("family", "size", "nx", "knob", "variant", "language_index"):
        if key in row:
            parts.append(f"{key}={_format_cell(row[key])}")
    return " ".join(parts)


def summarize(cfg: ExperimentConfig, rows: Sequence[dict]) -> dict:
    """Per-cell aggregates over seeds, plus the config echo."""
    cells: dict[str, list[dict]] = {}
    for row in rows:
        cells.setdefault(_cell_label(row), []).append(row)
    cell_stats = {}
    for label, group in sorted(cells.items()):
        good = [r for r in group if not r["error"]]
        stat = {"rows": len(group), "errors": len(group) - len(good)}
        for metric in ("per", "residual", "min_gap", "r_squared", "sigma_min"):
            values = [r[metric] for r in good if isinstance(r.get(metric), float)
                      and not math.isnan(r[metric])]
            if values:
                stat[f"mean_{metric}"] = float(np.mean(values))
                stat[f"min_{metric}"] = float(np.min(values))
                stat[f"max_{metric}"] = float(np.max(values))
        cell_stats[label] = stat
    config = asdict(cfg)
    return {"config": config, "cells": cell_stats,
            "total_rows": len(rows), "total_errors": sum(1 for r in rows if r["error"])}


def _artifact_stem(row: dict) -> str:
    parts = [str(row.get("kind", "run"))]
    for key in ("family", "size", "nx", "knob", "variant", "language_index", "trial", "seed"):
        if key in row:
            parts.append(f"{key}-{_format_cell(row[key]).replace('.', 'p')}")
    return "_".join(parts)


def _save_matrix(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([f"{v:.12g}" for v in row])


def write_outputs(cfg: ExperimentConfig, rows: Sequence[dict], out_dir) -> Path:
    """results.csv + summary.json (+ per-run traces and recovered matrices)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(rows, out / "results.csv", KIND_COLUMNS[cfg.kind])
    with open(out / "summary.json", "w") as fh:
        json.dump(summarize(cfg, rows), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.write_traces:
        for row in rows:
            stem = _artifact_stem(row)
            if "_trace" in row:
                write_loss_trace(row["_trace"], out / f"trace_{stem}.csv")
            if "_ntk_traj" in row:
                row["_ntk_traj"].write_csv(out / f"trace_{stem}.csv")
            if "_matrix" in row:
                _save_matrix(row["_matrix"], out / f"assign_{stem}.csv")
    return out
