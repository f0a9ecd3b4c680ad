"""Adversarial recovery of the unit assignment from positional unigrams.

Generator: one linear layer with no bias per speech unit, row-softmaxed into
an assignment matrix O. Discriminators are decomposable: the score of a
sequence distribution is a sum of per-position scores, either a linear
functional per position (one 1xL convolution with no bias, flattened here to
an L x |Y| weight array) or a per-position 2-layer ReLU perceptron.

Training alternates full-batch phases: the discriminator ascends the chosen
objective by plain gradient steps (rate 1.0), the generator then ascends its
fake-term payoff through the softmax Jacobian with an adaptive-moment step
(rate 0.005). Two generator averaging strategies are implemented: soft_input
feeds per-unit posterior rows straight into the discriminator; outside_cost
weights the per-symbol transform values by the generated distribution. All
gradients are hand-derived and checked against finite differences in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hmm import PositionalUnigramPair
from .recovery import RecoveredAssignment, recover_pseudoinverse

OBJECTIVES = ("mmd", "jsd", "wasserstein")
AVERAGING_MODES = ("soft_input", "outside_cost")
DISCRIMINATORS = ("linear", "mlp")


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def softmax_jacobian(prob_row: np.ndarray) -> np.ndarray:
    """H = diag(p) - p p^T: symmetric, PSD, annihilates the all-ones vector."""
    p = np.asarray(prob_row, dtype=float)
    return np.diag(p) - np.outer(p, p)


def _sigmoid(s: np.ndarray) -> np.ndarray:
    out = np.empty_like(s, dtype=float)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softplus(s: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, s)


def _transforms(objective: str):
    """a, a', b, b' for the chosen objective, vectorized over scores."""
    if objective == "jsd":
        return (
            lambda s: -_softplus(-np.asarray(s, dtype=float)),  # log sigmoid
            lambda s: _sigmoid(-np.asarray(s, dtype=float)),
            lambda s: _softplus(np.asarray(s, dtype=float)),  # -log(1 - sigmoid)
            lambda s: _sigmoid(np.asarray(s, dtype=float)),
        )
    if objective in ("mmd", "wasserstein"):
        ident = lambda s: np.asarray(s, dtype=float)
        one = lambda s: np.ones_like(np.asarray(s, dtype=float))
        return ident, one, ident, one
    raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def objective_terms(objective: str, scores_real: np.ndarray, scores_fake: np.ndarray):
    """Transform raw scores into the real-term and fake-term integrands."""
    a, _, b, _ = _transforms(objective)
    return a(np.asarray(scores_real, dtype=float)), b(np.asarray(scores_fake, dtype=float))


@dataclass
class Generator:
    U: np.ndarray  # |X| x |Y| logits

    @classmethod
    def initialize(cls, nx: int, ny: int, rng: np.random.Generator, scale: float = 0.01):
        return cls(U=rng.normal(0.0, scale, size=(nx, ny)))

    @property
    def O(self) -> np.ndarray:
        return softmax(self.U, axis=1)

    def save_matrix_csv(self, path) -> None:
        np.savetxt(path, self.O, delimiter=",", fmt="%.12g")


def generator_distribution(gen: Generator, PX: np.ndarray) -> np.ndarray:
    """Per-position generated text distribution PX @ O."""
    return np.asarray(PX, dtype=float) @ gen.O


class LinearPositionalDiscriminator:
    """Per-position linear functional; score(P) = sum_l <w_l, P_l>."""

    kind = "linear"
    decomposable = True

    def __init__(self, L: int, ny: int):
        self.w = np.zeros((L, ny))

    def symbol_scores(self) -> np.ndarray:
        # score of the one-hot symbol y at position l
        return self.w

    def soft_scores(self, P: np.ndarray) -> np.ndarray:
        return (self.w * P).sum(axis=1)

    def reset(self, rng: Optional[np.random.Generator] = None) -> None:
        self.w[:] = 0.0

    def params(self) -> list[np.ndarray]:
        return [self.w]

    def add_scaled(self, grads: list[np.ndarray], lr: float) -> None:
        self.w += lr * grads[0]

    def clip_params(self, c: float) -> None:
        np.clip(self.w, -c, c, out=self.w)


class PerStepMlpDiscriminator:
    """Per-position 2-layer ReLU perceptron |Y| -> hidden -> 1, no biases."""

    kind = "mlp"
    decomposable = True

    def __init__(self, L: int, ny: int, rng: np.random.Generator, hidden: int = 128):
        self.hidden = hidden
        self.ny = ny
        self.L = L
        self.W = np.empty((L, hidden, ny))
        self.v = np.empty((L, hidden))
        self.reset(rng)

    def reset(self, rng: Optional[np.random.Generator] = None) -> None:
        if rng is None:
            raise ValueError("mlp reset needs a generator for fresh weights")
        self.W[:] = rng.normal(0.0, np.sqrt(2.0 / (self.ny + self.hidden)),
                               size=self.W.shape)
        self.v[:] = rng.normal(0.0, np.sqrt(2.0 / (self.hidden + 1)), size=self.v.shape)

    def symbol_scores(self) -> np.ndarray:
        # one-hot input selects a column of W: t[l, y] = v_l . relu(W_l[:, y])
        return np.einsum("lh,lhy->ly", self.v, np.maximum(self.W, 0.0))

    def soft_scores(self, P: np.ndarray) -> np.ndarray:
        pre = np.einsum("lhy,ly->lh", self.W, P)
        return np.einsum("lh,lh->l", self.v, np.maximum(pre, 0.0))

    def params(self) -> list[np.ndarray]:
        return [self.W, self.v]

    def add_scaled(self, grads: list[np.ndarray], lr: float) -> None:
        self.W += lr * grads[0]
        self.v += lr * grads[1]

    def clip_params(self, c: float) -> None:
        np.clip(self.W, -c, c, out=self.W)
        np.clip(self.v, -c, c, out=self.v)


def _make_discriminator(kind: str, L: int, ny: int, rng: np.random.Generator, hidden: int):
    if kind == "linear":
        return LinearPositionalDiscriminator(L, ny)
    if kind == "mlp":
        return PerStepMlpDiscriminator(L, ny, rng, hidden=hidden)
    raise ValueError(f"unknown discriminator {kind!r}; expected one of {DISCRIMINATORS}")


def objective_value(disc, objective: str, PX: np.ndarray, PY: np.ndarray, O: np.ndarray,
                    averaging: str) -> float:
    """J = real term - fake term under the chosen averaging of the fake side."""
    a, _, b, _ = _transforms(objective)
    t = disc.symbol_scores()  # L x ny
    real = float(np.sum(PY * a(t)))
    if averaging == "outside_cost":
        fake = float(np.sum((PX @ O) * b(t)))
    elif averaging == "soft_input":
        m = _soft_unit_scores(disc, O)  # L x nx
        fake = float(np.sum(PX * b(m)))
    else:
        raise ValueError(f"unknown averaging {averaging!r}; expected one of {AVERAGING_MODES}")
    return real - fake


def _soft_unit_scores(disc, O: np.ndarray) -> np.ndarray:
    """m[l, x]: position-l score of the posterior row of unit x."""
    if disc.kind == "linear":
        return disc.w @ O.T
    pre = np.einsum("lhy,xy->lxh", disc.W, O)
    return np.einsum("lh,lxh->lx", disc.v, np.maximum(pre, 0.0))


def discriminator_gradient(disc, objective: str, PX: np.ndarray, PY: np.ndarray,
                           O: np.ndarray, averaging: str) -> list[np.ndarray]:
    """Ascent direction of J in the discriminator parameters."""
    _, ap, _, bp = _transforms(objective)
    t = disc.symbol_scores()
    real_coeff = PY * ap(t)  # L x ny, d real / d t[l,y]
    if averaging == "outside_cost":
        fake_coeff = (PX @ O) * bp(t)
    elif averaging != "soft_input":
        raise ValueError(f"unknown averaging {averaging!r}; expected one of {AVERAGING_MODES}")

    if disc.kind == "linear":
        if averaging == "outside_cost":
            return [real_coeff - fake_coeff]
        m = disc.w @ O.T  # L x nx
        fake_grad = (PX * bp(m)) @ O
        return [real_coeff - fake_grad]

    # mlp: route coefficients through the ReLU features
    relu_W = np.maximum(disc.W, 0.0)
    mask_W = (disc.W > 0.0).astype(float)
    if averaging == "outside_cost":
        coeff = real_coeff - fake_coeff  # L x ny on one-hot inputs
        gv = np.einsum("ly,lhy->lh", coeff, relu_W)
        gW = np.einsum("ly,lh,lhy->lhy", coeff, disc.v, mask_W)
        return [gW, gv]
    # soft_input: real side sees one-hots, fake side sees posterior rows
    gv = np.einsum("ly,lhy->lh", real_coeff, relu_W)
    gW = np.einsum("ly,lh,lhy->lhy", real_coeff, disc.v, mask_W)
    pre = np.einsum("lhy,xy->lxh", disc.W, O)
    relu_soft = np.maximum(pre, 0.0)
    mask_soft = (pre > 0.0).astype(float)
    m = np.einsum("lh,lxh->lx", disc.v, relu_soft)
    c = PX * bp(m)  # L x nx
    gv -= np.einsum("lx,lxh->lh", c, relu_soft)
    gW -= np.einsum("lx,lh,lxh,xy->lhy", c, disc.v, mask_soft, O)
    return [gW, gv]


def generator_gradient(gen: Generator, disc, PX: np.ndarray, objective: str,
                       averaging: str) -> np.ndarray:
    """Ascent direction, in the logits U, of the generator's fake-term payoff.

    outside_cost: dF/dO = PX^T b(t) with t the per-symbol scores; soft_input:
    dF/dO[x] = sum_l PX[l,x] b'(m[l,x]) dm/d(input row). Either way the O
    gradient is pushed through the softmax Jacobian row by row.
    """
    _, _, b, bp = _transforms(objective)
    O = gen.O
    if averaging == "outside_cost":
        if not getattr(disc, "decomposable", False):
            raise ValueError("outside_cost averaging needs a decomposable discriminator")
        dF_dO = PX.T @ b(disc.symbol_scores())
    elif averaging == "soft_input":
        if disc.kind == "linear":
            m = disc.w @ O.T
            dF_dO = (PX * bp(m)).T @ disc.w
        else:
            pre = np.einsum("lhy,xy->lxh", disc.W, O)
            m = np.einsum("lh,lxh->lx", disc.v, np.maximum(pre, 0.0))
            c = PX * bp(m)  # L x nx
            back = np.einsum("lh,lxh,lhy->lxy", disc.v, (pre > 0.0).astype(float), disc.W)
            dF_dO = np.einsum("lx,lxy->xy", c, back)
    else:
        raise ValueError(f"unknown averaging {averaging!r}; expected one of {AVERAGING_MODES}")

    dU = np.empty_like(gen.U)
    for x in range(O.shape[0]):
        dU[x] = dF_dO[x] @ softmax_jacobian(O[x])
    return dU


@dataclass
class _AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    def step(self, grad: np.ndarray, lr: float, beta1: float, beta2: float,
             eps: float) -> np.ndarray:
        self.t += 1
        self.m = beta1 * self.m + (1.0 - beta1) * grad
        self.v = beta2 * self.v + (1.0 - beta2) * grad * grad
        mhat = self.m / (1.0 - beta1**self.t)
        vhat = self.v / (1.0 - beta2**self.t)
        return lr * mhat / (np.sqrt(vhat) + eps)


@dataclass
class TrainConfig:
    objective: str = "mmd"
    epochs: int = 100
    disc_steps: int = 1
    gen_steps: int = 1
    reset_discriminator: bool = True
    averaging: str = "soft_input"
    discriminator: str = "linear"
    hidden: int = 128
    disc_lr: float = 1.0
    gen_lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_scale: float = 0.01
    weight_clip: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"unknown averaging {self.averaging!r}")
        if self.discriminator not in DISCRIMINATORS:
            raise ValueError(f"unknown discriminator {self.discriminator!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.disc_lr <= 0 or self.gen_lr <= 0:
            raise ValueError("learning rates must be positive")


@dataclass
class TrainResult:
    generator: Generator
    discriminator: object
    trace: list[dict] = field(default_factory=list)

    def final_assignment(self) -> np.ndarray:
        return self.generator.O

    def decoded(self) -> np.ndarray:
        return np.argmax(self.generator.O, axis=1)


def train(pair: PositionalUnigramPair, cfg: TrainConfig,
          true_O: Optional[np.ndarray] = None) -> TrainResult:
    """Alternating full-batch training on a positional unigram pair.

    One epoch = disc_steps discriminator ascent steps (after an optional
    reset) followed by gen_steps generator ascent steps. The trace records,
    per epoch, the averaging-consistent objective J and the Frobenius
    residual ||PX O - PY||_F, plus the decoded error rate when the true
    assignment is supplied.
    """
    PX = np.asarray(pair.PX, dtype=float)
    PY = np.asarray(pair.PY, dtype=float)
    L, nx = PX.shape
    ny = PY.shape[1]
    rng = np.random.default_rng(cfg.seed)
    gen = Generator.initialize(nx, ny, rng, scale=cfg.init_scale)
    disc = _make_discriminator(cfg.discriminator, L, ny, rng, cfg.hidden)
    adam = _AdamState(m=np.zeros_like(gen.U), v=np.zeros_like(gen.U))
    trace: list[dict] = []

    truth = np.argmax(true_O, axis=1) if true_O is not None else None

    for epoch in range(cfg.epochs):
        if cfg.reset_discriminator:
            disc.reset(rng)
        O = gen.O
        for _ in range(cfg.disc_steps):
            grads = discriminator_gradient(disc, cfg.objective, PX, PY, O, cfg.averaging)
            disc.add_scaled(grads, cfg.disc_lr)
            if cfg.weight_clip is not None:
                disc.clip_params(cfg.weight_clip)
        for _ in range(cfg.gen_steps):
            dU = generator_gradient(gen, disc, PX, cfg.objective, cfg.averaging)
            gen.U += adam.step(dU, cfg.gen_lr, cfg.beta1, cfg.beta2, cfg.eps)
        if not np.all(np.isfinite(gen.U)):
            raise RuntimeError(f"generator weights diverged at epoch {epoch}")
        for p in disc.params():
            if not np.all(np.isfinite(p)):
                raise RuntimeError(f"discriminator weights diverged at epoch {epoch}")
        O = gen.O
        row = {
            "step": epoch,
            "J": objective_value(disc, cfg.objective, PX, PY, O, cfg.averaging),
            "frobenius_residual": float(np.linalg.norm(PX @ O - PY)),
        }
        if truth is not None:
            decoded = np.argmax(O, axis=1)
            row["per"] = float(np.mean(decoded != truth))
        trace.append(row)
    return TrainResult(generator=gen, discriminator=disc, trace=trace)


def write_loss_trace(trace: list[dict], path) -> None:
    cols = ["step", "J", "frobenius_residual"] + (["per"] if trace and "per" in trace[0] else [])
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in trace:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def project_row_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sorted threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(v) + 1)
    cond = u - css / ks > 0
    rho = ks[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass
class ErmSolution:
    O_unprojected: np.ndarray
    O_projected: np.ndarray
    residual_unprojected: float
    residual_projected: float
    rank_deficient: bool

    def decoded(self) -> np.ndarray:
        return np.argmax(self.O_projected, axis=1)


def erm_least_squares(pair: PositionalUnigramPair) -> ErmSolution:
    """Least-squares fit of PX @ O ~ PY followed by row-wise simplex projection."""
    rec: RecoveredAssignment = recover_pseudoinverse(pair)
    projected = np.array([project_row_to_simplex(row) for row in rec.O_hat])
    PX = np.asarray(pair.PX, dtype=float)
    PY = np.asarray(pair.PY, dtype=float)
    return ErmSolution(
        O_unprojected=rec.O_hat,
        O_projected=projected,
        residual_unprojected=rec.residual,
        residual_projected=float(np.linalg.norm(PX @ projected - PY)),
        rank_deficient=rec.rank_deficient,
    )
