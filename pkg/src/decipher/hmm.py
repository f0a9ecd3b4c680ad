"""Hidden-Markov languages over non-overlapping N-gram states.

A language is (pi, T, O): an initial distribution and transition matrix over
|X|^N states, plus a row-stochastic emission matrix mapping each of the |X|
speech units to |Y| text units. States encode N-grams big-endian: state s of
the block (x_1, ..., x_N) is sum_i x_i * |X|^(N-i), so the block's final unit
is s mod |X|.

Positional unigram matrices stack, for block positions k = 0..L-1, the
marginal distribution of the unit the block-sum selector extracts. Under the
big-endian encoding that selector reads the FINAL unit of each block, i.e.
sequence index k*N + N - 1. This offset is fixed here, once; empirical and
exact unigrams must agree on it or nothing downstream lines up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .graphs import TransitionMatrix

PROB_TOL = 1e-12

# Child-seed offset for the independent text half of an unmatched corpus.
UNMATCHED_SEED_SPLIT = 2**31


@dataclass
class HmmLanguage:
    """(pi, T, O) with alphabet sizes; states are N-grams over X."""

    pi: np.ndarray
    T: TransitionMatrix
    O: np.ndarray
    N: int
    nx: int
    ny: int

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.O = np.asarray(self.O, dtype=float)
        states = self.nx**self.N
        if self.T.n_states != states:
            raise ValueError(f"T has {self.T.n_states} states, expected |X|^N = {states}")
        if self.pi.shape != (states,):
            raise ValueError(f"pi must have shape ({states},)")
        if np.any(self.pi < 0) or abs(self.pi.sum() - 1.0) > PROB_TOL:
            raise ValueError("pi must be a probability vector")
        if self.O.shape != (self.nx, self.ny):
            raise ValueError(f"O must be |X|x|Y| = ({self.nx}, {self.ny})")
        if np.any(self.O < 0) or np.max(np.abs(self.O.sum(axis=1) - 1.0)) > PROB_TOL:
            raise ValueError("O rows must be probability vectors")

    @property
    def n_states(self) -> int:
        return self.nx**self.N

    def is_permutation_emission(self) -> bool:
        if self.nx != self.ny:
            return False
        one_hot = np.all((self.O == 0) | (self.O == 1))
        return bool(one_hot and np.all(self.O.sum(axis=0) == 1))


@dataclass
class Corpus:
    """Sampled speech and text unit sequences, each of length L*N."""

    speech: np.ndarray  # (n_speech, L*N) ints in [0, |X|)
    text: np.ndarray  # (n_text, L*N) ints in [0, |Y|)
    matched: bool
    seed: int
    N: int
    L: int
    nx: int
    ny: int

    def __post_init__(self):
        self.speech = np.asarray(self.speech, dtype=np.int64)
        self.text = np.asarray(self.text, dtype=np.int64)
        for name, arr in (("speech", self.speech), ("text", self.text)):
            if arr.ndim != 2 or arr.shape[1] != self.L * self.N:
                raise ValueError(f"{name} sequences must all have length L*N = {self.L * self.N}")
        if self.matched and self.speech.shape[0] != self.text.shape[0]:
            raise ValueError("matched corpora need equally many speech and text sequences")


@dataclass
class PositionalUnigramPair:
    """L x |X| speech and L x |Y| text positional unigram matrices."""

    PX: np.ndarray
    PY: np.ndarray
    exact: bool
    n_speech: Optional[int] = None
    n_text: Optional[int] = None

    def __post_init__(self):
        self.PX = np.asarray(self.PX, dtype=float)
        self.PY = np.asarray(self.PY, dtype=float)
        if self.PX.ndim != 2 or self.PY.ndim != 2 or self.PX.shape[0] != self.PY.shape[0]:
            raise ValueError("PX and PY must be 2-D with a common number of block positions")
        tol = 1e-10
        for name, M in (("PX", self.PX), ("PY", self.PY)):
            if np.any(M < -tol) or np.max(np.abs(M.sum(axis=1) - 1.0)) > tol:
                raise ValueError(f"{name} rows must be probability vectors")

    @property
    def L(self) -> int:
        return self.PX.shape[0]


def random_initial_vector(states: int, seed) -> np.ndarray:
    """Uniform(0,1) coefficients, normalized to sum 1. Entries strictly positive."""
    if states < 1:
        raise ValueError("states must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.0, 1.0, size=states)
    # A literal 0.0 draw is possible in principle; nudge away so positivity holds.
    v = np.maximum(v, np.finfo(float).tiny)
    return v / v.sum()


def random_permutation_emission(size: int, seed) -> np.ndarray:
    """Random row permutation of the identity; requires |X| = |Y| = size."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(size)
    return np.eye(size)[perm]


def final_unit_selector(dist: np.ndarray, base: int) -> np.ndarray:
    """Marginalize a state distribution down to its final N-gram unit.

    With big-endian state encoding the map s -> s mod base groups states into
    contiguous blocks, so the selector is a reshape-and-sum.
    """
    return dist.reshape(-1, base).sum(axis=0)


def exact_positional_unigrams(lang: HmmLanguage, L: int) -> PositionalUnigramPair:
    """Analytic positional unigrams: row k of PX marginalizes pi T^k.

    Computed by iterated vector-matrix products (never matrix powers);
    PY = PX @ O holds identically by construction.
    """
    if L < 1:
        raise ValueError("need at least one block position")
    PX = np.empty((L, lang.nx))
    state_dist = lang.pi.copy()
    for k in range(L):
        PX[k] = final_unit_selector(state_dist, lang.nx)
        if k + 1 < L:
            state_dist = state_dist @ lang.T.probs
    PY = PX @ lang.O
    return PositionalUnigramPair(PX=PX, PY=PY, exact=True)


def _sample_unit_matrix(rows: np.ndarray, cum: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Categorical draws, one per row index, against precomputed row CDFs."""
    u = rng.random(rows.shape[0])
    return (cum[rows] < u[:, None]).sum(axis=1)


def _sample_state_paths(
    lang: HmmLanguage, n_sequences: int, L: int, rng: np.random.Generator
) -> np.ndarray:
    cum_pi = np.cumsum(lang.pi)
    cum_T = np.cumsum(lang.T.probs, axis=1)
    paths = np.empty((n_sequences, L), dtype=np.int64)
    u0 = rng.random(n_sequences)
    paths[:, 0] = (cum_pi[None, :] < u0[:, None]).sum(axis=1)
    for k in range(1, L):
        paths[:, k] = _sample_unit_matrix(paths[:, k - 1], cum_T, rng)
    return paths


def _expand_states(paths: np.ndarray, nx: int, N: int) -> np.ndarray:
    """Expand state indices into their N units, most significant digit first."""
    n, L = paths.shape
    units = np.empty((n, L, N), dtype=np.int64)
    rem = paths.copy()
    for d in range(N - 1, -1, -1):
        units[:, :, d] = rem % nx
        rem //= nx
    return units.reshape(n, L * N)


def _emit_text(speech: np.ndarray, O: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum_O = np.cumsum(O, axis=1)
    flat = speech.reshape(-1)
    u = rng.random(flat.shape[0])
    return ((cum_O[flat] < u[:, None]).sum(axis=1)).reshape(speech.shape)


def sample_corpus(
    lang: HmmLanguage, n_sequences: int, L: int, matched: bool, seed: int
) -> Corpus:
    """Ancestral sampling of n_sequences state paths, expanded to unit strings.

    Matched mode runs emission on the sampled speech. Unmatched mode draws two
    independent corpora from child seeds (seed, seed + 2^31) and keeps the
    speech side of the first and the text side of the second.
    """
    if n_sequences < 1:
        raise ValueError("need at least one sequence")

    def one_corpus(child_seed: int) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(child_seed)
        paths = _sample_state_paths(lang, n_sequences, L, rng)
        speech = _expand_states(paths, lang.nx, lang.N)
        text = _emit_text(speech, lang.O, rng)
        return speech, text

    if matched:
        speech, text = one_corpus(seed)
    else:
        speech, _ = one_corpus(seed)
        _, text = one_corpus(seed + UNMATCHED_SEED_SPLIT)
    return Corpus(
        speech=speech, text=text, matched=matched, seed=seed,
        N=lang.N, L=L, nx=lang.nx, ny=lang.ny,
    )


def _positional_counts(seqs: np.ndarray, alphabet: int, N: int, L: int, average_block: bool) -> np.ndarray:
    n = seqs.shape[0]
    out = np.empty((L, alphabet))
    for k in range(L):
        if average_block:
            block = seqs[:, k * N : (k + 1) * N].reshape(-1)
            out[k] = np.bincount(block, minlength=alphabet) / (n * N)
        else:
            col = seqs[:, k * N + N - 1]
            out[k] = np.bincount(col, minlength=alphabet) / n
    return out


def empirical_positional_unigrams(corpus: Corpus, average_block: bool = False) -> PositionalUnigramPair:
    """Relative frequencies of the selector unit (sequence index k*N + N - 1).

    average_block=True instead averages the unigram over all N units of each
    block; the default matches the analytic extraction and is what every
    experiment uses.
    """
    if corpus.speech.shape[0] == 0 or corpus.text.shape[0] == 0:
        raise ValueError("corpus must contain sequences on both sides")
    PX = _positional_counts(corpus.speech, corpus.nx, corpus.N, corpus.L, average_block)
    PY = _positional_counts(corpus.text, corpus.ny, corpus.N, corpus.L, average_block)
    return PositionalUnigramPair(
        PX=PX, PY=PY, exact=False,
        n_speech=corpus.speech.shape[0], n_text=corpus.text.shape[0],
    )


def save_corpus(corpus: Corpus, directory: str | Path, prefix: str = "corpus") -> None:
    """One sequence per line, space-separated unit ids; JSON sidecar metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for side, arr in (("speech", corpus.speech), ("text", corpus.text)):
        with open(directory / f"{prefix}.{side}.txt", "w") as fh:
            for row in arr:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
    meta = {
        "N": corpus.N, "L": corpus.L, "nx": corpus.nx, "ny": corpus.ny,
        "seed": corpus.seed, "matched": corpus.matched,
    }
    with open(directory / f"{prefix}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_corpus(directory: str | Path, prefix: str = "corpus") -> Corpus:
    directory = Path(directory)
    with open(directory / f"{prefix}.meta.json") as fh:
        meta = json.load(fh)
    sides = {}
    for side in ("speech", "text"):
        with open(directory / f"{prefix}.{side}.txt") as fh:
            sides[side] = np.array(
                [[int(v) for v in line.split()] for line in fh if line.strip()], dtype=np.int64
            )
    return Corpus(
        speech=sides["speech"], text=sides["text"], matched=meta["matched"],
        seed=meta["seed"], N=meta["N"], L=meta["L"], nx=meta["nx"], ny=meta["ny"],
    )
