"""Recover the unit assignment from positional unigram statistics.

The closed-form route: with full-column-rank PX the matrix equation
PX @ O = PY pins O uniquely, and the minimum-norm least-squares solution
recovers it. A factorial brute-force enumerator over permutations serves as
the independent ground-truth check for small alphabets, and the error rate
scores a decoded label map against the true assignment.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .hmm import PositionalUnigramPair
from .spectral import RANK_RTOL, symmetric_eigen

ORACLE_MAX_UNITS = 8


@dataclass
class RecoveredAssignment:
    O_hat: np.ndarray
    decoded: np.ndarray  # per speech unit, the argmax label
    residual: float
    rank_deficient: bool

    def decoded_labels(self) -> list[int]:
        return [int(x) for x in self.decoded]

    def save_matrix_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.O_hat:
                writer.writerow([f"{v:.12g}" for v in row])


def recover_pseudoinverse(pair: PositionalUnigramPair) -> RecoveredAssignment:
    """Minimum-norm least squares through the Gram eigendecomposition.

    Eigenvalues of PX^T PX below the shared rank tolerance are pseudo-inverted
    to 0, so rank-deficient inputs return the minimum-norm solution with the
    rank_deficient flag raised instead of an error.
    """
    PX = np.asarray(pair.PX, dtype=float)
    PY = np.asarray(pair.PY, dtype=float)
    gram = PX.T @ PX
    w, V = symmetric_eigen(gram, tol=max(1e-10, 1e-9 * max(1.0, float(np.max(np.abs(gram))))))
    svals = np.sqrt(np.clip(w, 0.0, None))
    smax = svals[-1] if svals.size else 0.0
    keep = svals > RANK_RTOL * smax if smax > 0 else np.zeros_like(svals, dtype=bool)
    inv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    O_hat = (V * inv) @ V.T @ PX.T @ PY
    decoded = np.argmax(O_hat, axis=1)  # ties resolve to the lowest index
    residual = float(np.linalg.norm(PX @ O_hat - PY))
    return RecoveredAssignment(
        O_hat=O_hat,
        decoded=decoded.astype(np.int64),
        residual=residual,
        rank_deficient=bool(np.count_nonzero(keep) < PX.shape[1]),
    )


def brute_force_oracle(pair: PositionalUnigramPair, tol: float = 1e-8) -> list[np.ndarray]:
    """Every permutation matrix G with ||PX G - PY||_F <= tol.

    Exactly one hit means the language pins the assignment; the factorial
    enumeration caps at 8 units.
    """
    PX = np.asarray(pair.PX, dtype=float)
    PY = np.asarray(pair.PY, dtype=float)
    nx = PX.shape[1]
    ny = PY.shape[1]
    if nx != ny:
        raise ValueError(f"oracle needs equal alphabets, got {nx} and {ny}")
    if nx > ORACLE_MAX_UNITS:
        raise ValueError(f"oracle capped at {ORACLE_MAX_UNITS} units, got {nx}")
    hits = []
    eye = np.eye(nx)
    for perm in permutations(range(nx)):
        G = eye[list(perm)]
        if np.linalg.norm(PX @ G - PY) <= tol:
            hits.append(G)
    return hits


def phoneme_error_rate(decoded: np.ndarray, true_O: np.ndarray, weights: np.ndarray) -> float:
    """Weighted fraction of speech units whose decoded label differs from the
    true assignment's argmax label."""
    decoded = np.asarray(decoded)
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
    if decoded.shape[0] != true_O.shape[0] or weights.shape[0] != true_O.shape[0]:
        raise ValueError("decoded, true_O and weights must agree on the unit count")
    truth = np.argmax(true_O, axis=1)
    return float(np.sum(weights * (decoded != truth)))
