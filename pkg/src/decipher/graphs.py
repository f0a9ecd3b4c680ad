"""Markov transition-graph constructions with controllable spectra.

Three families are supported: circulant graphs on n nodes with an arbitrary
offset action set, undirected De Bruijn graphs DB(k, m), and hypercube graphs
Q_n. Graphs can be tiled into block-diagonal disjoint unions padded with
self-loop filler nodes, and any row-stochastic matrix can be interpolated
toward a deterministic Hamiltonian cycle.

All constructors return a TransitionMatrix carrying the row-stochastic
probabilities plus enough provenance (undirected edge weights, originating
GraphSpec) for downstream spectral analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

# Hard cap on dense state counts; the largest grid in the experiment sweeps
# is 8^4 = 4096 states.
STATE_COUNT_CAP = 8192

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class GraphSpec:
    """Declarative description of a (possibly tiled) transition graph.

    family: "circulant" | "de_bruijn" | "hypercube"
    circulant: node count ``n`` and offset ``action_set`` (nonzero mod n)
    de_bruijn: arity ``k`` and word length ``m`` (k^m nodes)
    hypercube: dimension ``dim`` (2^dim nodes)
    copies / filler_self_loops: tiling bookkeeping filled in by assemble().
    """

    family: str
    n: Optional[int] = None
    action_set: Optional[tuple[int, ...]] = None
    k: Optional[int] = None
    m: Optional[int] = None
    dim: Optional[int] = None
    copies: Optional[int] = None
    filler_self_loops: Optional[int] = None

    def __post_init__(self):
        if self.family not in ("circulant", "de_bruijn", "hypercube"):
            raise ValueError(f"unknown graph family: {self.family!r}")
        if self.action_set is not None:
            object.__setattr__(self, "action_set", tuple(int(a) for a in self.action_set))

    @property
    def subgraph_size(self) -> int:
        if self.family == "circulant":
            return int(self.n)
        if self.family == "de_bruijn":
            return int(self.k) ** int(self.m)
        return 2 ** int(self.dim)

    def total_nodes(self) -> int:
        copies = 1 if self.copies is None else self.copies
        fillers = 0 if self.filler_self_loops is None else self.filler_self_loops
        return copies * self.subgraph_size + fillers


@dataclass
class TransitionMatrix:
    """Dense row-stochastic transition matrix with graph provenance.

    probs: (S, S) row-stochastic matrix.
    reversible: True when derived from an undirected weighted graph.
    weights: the symmetric edge-weight matrix when reversible, else None.
    spec: originating GraphSpec when built by this module, else None.
    """

    probs: np.ndarray
    reversible: bool
    weights: Optional[np.ndarray] = None
    spec: Optional[GraphSpec] = field(default=None)

    def __post_init__(self):
        P = np.asarray(self.probs, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"transition matrix must be square, got {P.shape}")
        if np.any(P < -ROW_SUM_TOL) or np.any(P > 1 + ROW_SUM_TOL):
            raise ValueError("transition probabilities must lie in [0, 1]")
        row_err = np.max(np.abs(P.sum(axis=1) - 1.0))
        if row_err > ROW_SUM_TOL:
            raise ValueError(f"rows must sum to 1 within {ROW_SUM_TOL}, max error {row_err:.3e}")
        if self.reversible and self.weights is not None:
            W = np.asarray(self.weights, dtype=float)
            if W.shape != P.shape:
                raise ValueError("weights shape must match probs")
            if np.max(np.abs(W - W.T)) > 1e-10:
                raise ValueError("edge weights must be symmetric")
        self.probs = P

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]


def _check_cap(n_nodes: int) -> None:
    if n_nodes > STATE_COUNT_CAP:
        raise ValueError(f"{n_nodes} nodes exceeds the state-count cap {STATE_COUNT_CAP}")


def build_circulant(n: int, action_set: Sequence[int]) -> TransitionMatrix:
    """Circulant graph: node i steps to (i + a) mod n with probability 1/|A|.

    Reversible exactly when the action set is symmetric (a in A => -a in A);
    in that case the uniform edge weights are attached for symmetrization.
    """
    if n < 3:
        raise ValueError("circulant graphs need n >= 3")
    _check_cap(n)
    if not action_set:
        raise ValueError("action set must be nonempty")
    offsets = sorted({int(a) % n for a in action_set})
    if 0 in offsets:
        raise ValueError("action set offsets must be nonzero mod n")
    if len(offsets) != len(action_set):
        raise ValueError("action set offsets must be distinct mod n")

    P = np.zeros((n, n))
    idx = np.arange(n)
    for a in offsets:
        P[idx, (idx + a) % n] = 1.0 / len(offsets)
    symmetric = all((n - a) % n in offsets for a in offsets)
    weights = P * len(offsets) if symmetric else None
    spec = GraphSpec("circulant", n=n, action_set=tuple(offsets))
    return TransitionMatrix(P, reversible=symmetric, weights=weights, spec=spec)


def build_debruijn(k: int, m: int) -> TransitionMatrix:
    """Undirected De Bruijn graph DB(k, m), row-normalized.

    Directed edges follow the numeral-shift rule: i -> j when the last m-1
    k-ary digits of i equal the first m-1 digits of j. The undirected weight
    matrix counts each directed edge once in each endpoint's row (W = B + B^T),
    so shift-rule self-loops and two-cycles keep their multiplicity and W
    stays symmetric.
    """
    if k < 2 or m < 1:
        raise ValueError("need arity k >= 2 and word length m >= 1")
    size = k**m
    _check_cap(size)
    B = np.zeros((size, size))
    idx = np.arange(size)
    shifted = (idx % (k ** (m - 1))) * k
    for d in range(k):
        B[idx, shifted + d] = 1.0
    W = B + B.T
    P = W / W.sum(axis=1, keepdims=True)
    spec = GraphSpec("de_bruijn", k=k, m=m)
    return TransitionMatrix(P, reversible=True, weights=W, spec=spec)


def build_hypercube(n: int) -> TransitionMatrix:
    """Hypercube graph Q_n: 2^n nodes, uniform steps across Hamming-1 neighbors."""
    if n < 1:
        raise ValueError("hypercube dimension must be >= 1")
    size = 2**n
    _check_cap(size)
    W = np.zeros((size, size))
    idx = np.arange(size)
    for bit in range(n):
        W[idx, idx ^ (1 << bit)] = 1.0
    P = W / n
    spec = GraphSpec("hypercube", dim=n)
    return TransitionMatrix(P, reversible=True, weights=W, spec=spec)


def build_subgraph(spec: GraphSpec) -> TransitionMatrix:
    """Build one copy of the subgraph a GraphSpec describes."""
    if spec.family == "circulant":
        return build_circulant(spec.n, spec.action_set)
    if spec.family == "de_bruijn":
        return build_debruijn(spec.k, spec.m)
    return build_hypercube(spec.dim)


def assemble(spec: GraphSpec, target_states: int) -> TransitionMatrix:
    """Tile identical subgraph copies block-diagonally up to target_states.

    Leftover nodes become probability-1 self-loops. The distinct-eigenvalue
    set of the union is the subgraph's, plus eigenvalue 1 for the fillers
    (already present for every family here).
    """
    sub = build_subgraph(spec)
    s = sub.n_states
    if target_states < s:
        raise ValueError(f"subgraph has {s} nodes but target_states is only {target_states}")
    _check_cap(target_states)
    copies = spec.copies if spec.copies is not None else target_states // s
    fillers = target_states - copies * s
    if fillers < 0:
        raise ValueError(f"{copies} copies of {s} nodes exceed target_states={target_states}")
    if spec.filler_self_loops is not None and spec.filler_self_loops != fillers:
        raise ValueError(
            f"spec declares {spec.filler_self_loops} fillers but geometry needs {fillers}"
        )

    P = np.eye(target_states)
    W = np.eye(target_states) if sub.reversible else None
    for c in range(copies):
        blk = slice(c * s, (c + 1) * s)
        P[blk, blk] = sub.probs
        if W is not None:
            W[blk, blk] = sub.weights
    full = replace(spec, copies=copies, filler_self_loops=fillers)
    return TransitionMatrix(P, reversible=sub.reversible, weights=W, spec=full)


def hamiltonian_cycle_matrix(order: Sequence[int]) -> np.ndarray:
    """Deterministic cycle transition matrix visiting nodes in the given order."""
    order = np.asarray(order, dtype=int)
    n = order.size
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("cycle order must be a permutation of range(n_states)")
    C = np.zeros((n, n))
    C[order, np.roll(order, -1)] = 1.0
    return C


def interpolate_with_hamiltonian(
    base: TransitionMatrix, cycle_order: Optional[Sequence[int]] = None, w: float = 0.0
) -> TransitionMatrix:
    """Convex combination (1-w)*base + w*cycle of a Hamiltonian cycle matrix.

    cycle_order defaults to plain node order 0 -> 1 -> ... -> S-1 -> 0.
    The result is non-reversible for every w > 0.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"interpolation weight must be in [0, 1], got {w}")
    if w == 0.0:
        return base
    n = base.n_states
    order = np.arange(n) if cycle_order is None else cycle_order
    C = hamiltonian_cycle_matrix(order)
    P = (1.0 - w) * base.probs + w * C
    # the blended matrix no longer has the base graph's spectrum: drop the
    # provenance so no closed-form route is taken downstream
    return TransitionMatrix(P, reversible=False, weights=None, spec=None)
