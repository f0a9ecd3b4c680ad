"""Spectral diagnostics: eigenvalue reports, decipherability checks, the least
singular value of the positional unigram matrix, its a-priori lower bound, and
the finite-sample recovery threshold.

Eigenvalue conventions. Distinct-value merging uses EPS_EIG relative to the
spectral radius (row-stochastic inputs have radius 1). Eigenspace projections
of the initial vector count as nonzero above EPS_PROJ. Numerical column rank
uses RANK_RTOL relative to the largest singular value. These constants are
shared by every consumer in the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import GraphSpec, TransitionMatrix, build_subgraph
from .hmm import HmmLanguage, exact_positional_unigrams, final_unit_selector

EPS_EIG = 1e-7
EPS_PROJ = 1e-9
RANK_RTOL = 1e-8
SYMMETRY_TOL = 1e-10


class NonReversibleNoClosedForm(ValueError):
    """Spectrum requested for a chain with neither symmetrizable weights nor a
    closed form."""


class NotApplicable(ValueError):
    """A bound's simplifying assumptions do not hold for this input."""


def symmetric_eigen(matrix: np.ndarray, tol: float = SYMMETRY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Dense symmetric eigendecomposition: ascending eigenvalues, orthonormal V.

    Thin wrapper over LAPACK's symmetric solver that enforces this package's
    contract (symmetry validation, ascending order, V columns orthonormal,
    M = V diag(w) V^T reconstruction).
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric: max |M - M^T| = {asym:.3e} > {tol}")
    w, V = np.linalg.eigh((M + M.T) / 2.0)
    return w, V


def cluster_eigenvalues(values: np.ndarray, tol: float) -> tuple[list[np.ndarray], np.ndarray]:
    """Group eigenvalues closer than tol; returns (index groups, representatives).

    Real inputs are clustered by sorted consecutive gaps. Complex inputs (the
    directed-circulant case) use transitive pairwise merging.
    """
    values = np.asarray(values)
    n = values.size
    if n == 0:
        return [], np.array([])
    if not np.iscomplexobj(values):
        order = np.argsort(values)
        sorted_vals = values[order]
        breaks = np.nonzero(np.diff(sorted_vals) > tol)[0]
        groups = [order[lo:hi] for lo, hi in zip(np.r_[0, breaks + 1], np.r_[breaks + 1, n])]
    else:
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(n):
            for j in range(i + 1, n):
                if abs(values[i] - values[j]) <= tol:
                    parent[find(i)] = find(j)
        roots: dict[int, list[int]] = {}
        for i in range(n):
            roots.setdefault(find(i), []).append(i)
        groups = [np.array(g) for g in roots.values()]
        groups.sort(key=lambda g: (values[g].mean().real, values[g].mean().imag))
    reps = np.array([values[g].mean() for g in groups])
    return groups, reps


@dataclass
class SpectrumReport:
    """Eigenvalues of a transition matrix plus distinctness statistics."""

    eigenvalues: np.ndarray  # sorted; real for reversible chains, complex for directed circulants
    distinct_count: int
    nonzero_distinct_count: int
    min_gap: float
    method: str  # "closed_form" | "symmetrized_numeric"


def _report_from_values(values: np.ndarray, method: str) -> SpectrumReport:
    radius = float(np.max(np.abs(values))) if values.size else 0.0
    tol = EPS_EIG * max(radius, 1.0)
    groups, reps = cluster_eigenvalues(values, tol)
    nonzero = int(np.sum(np.abs(reps) > tol))
    if len(reps) < 2:
        min_gap = float("inf")
    elif np.iscomplexobj(reps):
        diff = np.abs(reps[:, None] - reps[None, :])
        min_gap = float(np.min(diff[~np.eye(len(reps), dtype=bool)]))
    else:
        min_gap = float(np.min(np.diff(np.sort(reps))))
    if not np.iscomplexobj(values):
        values = np.sort(values.real)
    else:
        values = values[np.lexsort((values.imag, values.real))]
    return SpectrumReport(
        eigenvalues=values,
        distinct_count=len(reps),
        nonzero_distinct_count=nonzero,
        min_gap=min_gap,
        method=method,
    )


def circulant_eigenvalues(n: int, action_set) -> np.ndarray:
    """Fourier spectrum of the circulant step matrix: mean of roots of unity
    over the action set, one value per frequency."""
    offsets = np.asarray(sorted({int(a) % n for a in action_set}))
    freqs = np.arange(n)
    phases = np.exp(2j * np.pi * np.outer(freqs, offsets) / n)
    vals = phases.mean(axis=1)
    if np.max(np.abs(vals.imag)) < 1e-12:
        return vals.real.copy()
    return vals


def hypercube_eigenvalues(dim: int) -> np.ndarray:
    """1 - 2k/dim with multiplicity C(dim, k), k = 0..dim."""
    ks = np.arange(2**dim)
    popcount = np.array([bin(k).count("1") for k in ks])
    return 1.0 - 2.0 * popcount / dim


def debruijn_candidate_values(m: int) -> np.ndarray:
    """Superset of achievable normalized De Bruijn eigenvalues: cos(i*pi/j)
    over 0 <= i < j <= m+1. Only containment is guaranteed."""
    vals = {np.cos(np.pi * i / j) for j in range(1, m + 2) for i in range(j)}
    return np.sort(np.array(list(vals)))


def symmetrized_form(weights: np.ndarray) -> np.ndarray:
    """D^{-1/2} W D^{-1/2}: shares its spectrum with the chain D^{-1} W."""
    d = weights.sum(axis=1)
    if np.any(d <= 0):
        raise ValueError("row weights must be positive to symmetrize")
    inv_sqrt = 1.0 / np.sqrt(d)
    return weights * np.outer(inv_sqrt, inv_sqrt)


def _subgraph_eigenvalues(spec: GraphSpec) -> tuple[np.ndarray, str]:
    if spec.family == "circulant":
        return circulant_eigenvalues(spec.n, spec.action_set), "closed_form"
    if spec.family == "hypercube":
        return hypercube_eigenvalues(spec.dim), "closed_form"
    sub = build_subgraph(spec)
    w, _ = symmetric_eigen(symmetrized_form(sub.weights))
    return w, "symmetrized_numeric"


def spectrum_of_chain(T: TransitionMatrix, graph: Optional[GraphSpec] = None) -> SpectrumReport:
    """Spectrum of a transition matrix.

    Prefers the closed form its GraphSpec provides (circulant Fourier values,
    hypercube level values); De Bruijn subgraphs go through symmetrization.
    Tiled unions reuse the subgraph spectrum: copies repeat it, fillers add
    eigenvalue 1. Reversible chains without a spec are symmetrized from their
    edge weights. Anything else has no supported route.
    """
    spec = graph if graph is not None else T.spec
    if spec is not None:
        vals, method = _subgraph_eigenvalues(spec)
        copies = spec.copies if spec.copies is not None else 1
        fillers = spec.filler_self_loops if spec.filler_self_loops is not None else 0
        full = np.concatenate([np.tile(vals, copies), np.ones(fillers, dtype=vals.dtype)])
        return _report_from_values(full, method)
    if T.reversible and T.weights is not None:
        w, _ = symmetric_eigen(symmetrized_form(T.weights))
        return _report_from_values(w, "symmetrized_numeric")
    raise NonReversibleNoClosedForm(
        "no closed form and no symmetrizable weights; spectra of interpolated "
        "matrices are unsupported by design"
    )


def stationary_weights(T_probs: np.ndarray) -> Optional[np.ndarray]:
    """Recover symmetric edge weights diag(p) T of a reversible chain.

    Solves for the stationary distribution and checks detailed balance;
    returns None when the chain is not reversible (or not irreducible enough
    for a clean stationary solve).
    """
    n = T_probs.shape[0]
    A = np.vstack([T_probs.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        return None
    W = p[:, None] * T_probs
    if np.max(np.abs(W - W.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(W))):
        return None
    return (W + W.T) / 2.0


def right_eigensystem(T: TransitionMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues, right eigenvectors U (columns), and exact U^{-1} for a
    reversible chain, via the symmetrized form.

    With S = D^{-1/2} W D^{-1/2} = V diag(w) V^T, the chain D^{-1} W equals
    D^{-1/2} S D^{1/2}, so U = D^{-1/2} V and U^{-1} = V^T D^{1/2} without a
    linear solve.
    """
    W = T.weights if (T.reversible and T.weights is not None) else stationary_weights(T.probs)
    if W is None:
        raise NonReversibleNoClosedForm("eigenvector path requires a reversible chain")
    d = W.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    w, V = symmetric_eigen(W * np.outer(inv_sqrt, inv_sqrt))
    U = inv_sqrt[:, None] * V
    U_inv = V.T * np.sqrt(d)[None, :]
    return w, U, U_inv


def sigma_min(PX: np.ndarray) -> float:
    """Least singular value via the Gram matrix, clamped at 0 for roundoff."""
    PX = np.asarray(PX, dtype=float)
    gram = PX.T @ PX
    w, _ = symmetric_eigen(gram, tol=max(SYMMETRY_TOL, 1e-9 * max(1.0, np.max(np.abs(gram)))))
    return float(np.sqrt(max(w[0], 0.0)))


def numerical_rank(PX: np.ndarray) -> int:
    gram = np.asarray(PX, dtype=float).T @ np.asarray(PX, dtype=float)
    w, _ = symmetric_eigen(gram, tol=max(SYMMETRY_TOL, 1e-9 * max(1.0, np.max(np.abs(gram)))))
    svals = np.sqrt(np.clip(w, 0.0, None))
    if svals.size == 0 or svals[-1] == 0.0:
        return 0
    return int(np.sum(svals > RANK_RTOL * svals[-1]))


@dataclass
class DecipherabilityReport:
    """Assumption flags (None when the spectrum is unavailable), rank data,
    and the a-priori sigma_min lower bound when its preconditions hold."""

    assumption1_holds: Optional[bool]
    assumption2_holds: Optional[bool]
    rank_PX: int
    sigma_min: float
    sigma_min_bound: Optional[float]
    distinct_nonzero_eigenvalues: Optional[int]

    def to_record(self) -> dict:
        return {
            "assumption1_holds": self.assumption1_holds,
            "assumption2_holds": self.assumption2_holds,
            "rank_PX": self.rank_PX,
            "sigma_min": self.sigma_min,
            "sigma_min_bound": self.sigma_min_bound,
            "distinct_nonzero_eigenvalues": self.distinct_nonzero_eigenvalues,
        }


def _eigenspace_projections(lang: HmmLanguage) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Per-eigenvalue max |pi^T u| over unit right eigenvectors.

    Returns (eigenvalues, projections) aligned index-wise, or None when no
    eigenvector route exists. Tiled unions are handled blockwise so large
    assembled graphs never need a full dense decomposition.
    """
    T = lang.T
    spec = T.spec
    pi = lang.pi
    tiled = spec is not None and (
        (spec.copies is not None and spec.copies > 1)
        or (spec.filler_self_loops is not None and spec.filler_self_loops > 0)
    )
    if tiled:
        sub = build_subgraph(spec)
        if sub.reversible:
            vals, U_sub, _ = right_eigensystem(sub)
        elif spec.family == "circulant":
            vals = circulant_eigenvalues(spec.n, spec.action_set)
            freqs = np.arange(spec.n)
            U_sub = np.exp(2j * np.pi * np.outer(np.arange(spec.n), freqs) / spec.n)
        else:
            return None
        U_sub = U_sub / np.linalg.norm(U_sub, axis=0, keepdims=True)
        s = sub.n_states
        copies = spec.copies
        fillers = spec.filler_self_loops or 0
        blocks = pi[: copies * s].reshape(copies, s)
        proj = np.abs(blocks @ U_sub)  # (copies, s)
        all_vals = [np.tile(vals, copies), np.ones(fillers)]
        all_proj = [proj.reshape(-1), np.abs(pi[copies * s :])]
        return np.concatenate(all_vals), np.concatenate(all_proj)
    if T.reversible and T.weights is not None:
        vals, U, _ = right_eigensystem(T)
        U = U / np.linalg.norm(U, axis=0, keepdims=True)
        return vals, np.abs(pi @ U)
    if spec is not None and spec.family == "circulant":
        n = spec.n
        vals = circulant_eigenvalues(n, spec.action_set)
        U = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / np.sqrt(n)
        return vals, np.abs(pi @ U)
    weights = stationary_weights(T.probs)
    if weights is not None:
        vals, U, _ = right_eigensystem(
            TransitionMatrix(T.probs, reversible=True, weights=weights, spec=spec)
        )
        U = U / np.linalg.norm(U, axis=0, keepdims=True)
        return vals, np.abs(pi @ U)
    return None


def check_decipherability(lang: HmmLanguage, L: int) -> DecipherabilityReport:
    """Assumption checks plus rank/sigma_min of the exact unigram matrix.

    Assumption flags come back None (absent), not False, when the chain has
    no supported spectrum route. rank and sigma_min are always computed.
    """
    pair = exact_positional_unigrams(lang, L)
    rank = numerical_rank(pair.PX)
    smin = sigma_min(pair.PX)

    a1: Optional[bool] = None
    a2: Optional[bool] = None
    nonzero_count: Optional[int] = None
    try:
        report = spectrum_of_chain(lang.T)
        nonzero_count = report.nonzero_distinct_count
        a1 = bool(nonzero_count >= lang.nx)
    except NonReversibleNoClosedForm:
        pass

    proj = _eigenspace_projections(lang)
    if proj is not None:
        vals, projections = proj
        radius = float(np.max(np.abs(vals))) if vals.size else 0.0
        groups, _ = cluster_eigenvalues(vals, EPS_EIG * max(radius, 1.0))
        hit = sum(1 for g in groups if np.max(projections[g]) > EPS_PROJ)
        a2 = bool(hit >= lang.nx)

    try:
        bound = sigma_min_lower_bound(lang, L)
    except (NotApplicable, NonReversibleNoClosedForm):
        bound = None
    return DecipherabilityReport(
        assumption1_holds=a1,
        assumption2_holds=a2,
        rank_PX=rank,
        sigma_min=smin,
        sigma_min_bound=bound,
        distinct_nonzero_eigenvalues=nonzero_count,
    )


def sigma_min_lower_bound(lang: HmmLanguage, L: int) -> float:
    """A-priori lower bound on sigma_min of the exact unigram matrix.

    Decomposes P^X = Phi M: Phi is the L x K power matrix of the K distinct
    eigenvalues, M collapses each eigenspace block of the diagonalization to
    one selector row weighted by the initial vector. The bound is

        sqrt(sum_{l=0}^{L-K-1} lam_min^{2l} / K) * delta_min^{(K-1)/2}
            / kappa(V_K) * sigma_min(M)

    with V_K the square Vandermonde of the distinct eigenvalues, delta_min
    their smallest pairwise gap, and lam_min the smallest magnitude among
    them. Every factor is a genuine inequality step: sliding K-row windows
    of Phi (each row reused at most K times, hence the 1/K), the determinant
    bound sigma_min(V_K) >= delta_min^{(K-1)/2} / kappa, and submultiplying
    by sigma_min(M). Collapsing M further to its smallest row norm looks
    tempting but is not sound; see the repo notes for configurations where
    that shortcut (and the un-rooted power sum) exceed the true sigma_min.

    Applies only when the chain is reversible with exactly K = |X| distinct
    eigenvalues, all nonzero; raises NotApplicable otherwise. The returned
    value is checked against the directly computed sigma_min.
    """
    K = lang.nx
    vals, U, U_inv = right_eigensystem(lang.T)
    radius = float(np.max(np.abs(vals)))
    tol = EPS_EIG * max(radius, 1.0)
    groups, reps = cluster_eigenvalues(vals, tol)
    nonzero = int(np.sum(np.abs(reps) > tol))
    if len(reps) != K or nonzero != K:
        raise NotApplicable(
            f"bound needs exactly |X|={K} distinct nonzero eigenvalues, "
            f"found {len(reps)} distinct of which {nonzero} nonzero"
        )

    # One collapsed row per eigenspace: (pi^T U_j) (U^{-1}_j projected to units).
    M = np.zeros((K, lang.nx))
    for row, g in enumerate(groups):
        coeff = lang.pi @ U[:, g]
        selected = np.stack([final_unit_selector(r, lang.nx) for r in U_inv[g]])
        M[row] = coeff @ selected
    gm, _ = symmetric_eigen(M.T @ M, tol=max(SYMMETRY_TOL, 1e-9 * max(1.0, np.max(np.abs(M)) ** 2)))
    sigma_M = float(np.sqrt(max(gm[0], 0.0)))

    lam = reps
    vander = np.vander(lam[np.argsort(-lam)], N=K, increasing=True).T  # row l = lambda^l
    gw, _ = symmetric_eigen(vander.T @ vander, tol=1e-6 * max(1.0, np.max(np.abs(vander)) ** 2))
    svals = np.sqrt(np.clip(gw, 0.0, None))
    if svals[0] <= 0:
        raise NotApplicable("Vandermonde of the eigenvalues is numerically singular")
    kappa = svals[-1] / svals[0]

    diffs = np.abs(lam[:, None] - lam[None, :])
    delta_min = float(np.min(diffs[~np.eye(K, dtype=bool)])) if K > 1 else 1.0
    lam_min = float(np.min(np.abs(lam)))
    n_terms = L - K
    power_sum = float(np.sum(lam_min ** (2 * np.arange(n_terms)))) if n_terms > 0 else 0.0

    bound = np.sqrt(power_sum / K) * delta_min ** ((K - 1) / 2) / kappa * sigma_M

    actual = sigma_min(exact_positional_unigrams(lang, L).PX)
    if bound > actual + 1e-8:
        raise RuntimeError(
            f"computed lower bound {bound:.6e} exceeds sigma_min {actual:.6e}; "
            "bound evaluation is inconsistent"
        )
    return float(bound)


def sample_size_threshold(nX: int, nY: int, L: int, nx: int, ny: int, delta: float) -> float:
    """Sigma_min level above which empirical least-squares recovery of the
    assignment is guaranteed with probability >= 1 - 2*delta.

    sqrt((4L|Y|(nX+nY) + L|X|nX) / (nX nY)) + 10 sqrt(L log(1/delta) / min(nX, nY)).
    """
    if min(nX, nY, L, nx, ny) <= 0:
        raise ValueError("all counts must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    first = np.sqrt((4.0 * L * ny * (nX + nY) + L * nx * nX) / (nX * nY))
    second = 10.0 * np.sqrt(L * np.log(1.0 / delta) / min(nX, nY))
    return float(first + second)
