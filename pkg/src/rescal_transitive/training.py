"""Fitting RESCAL under the FullSet and SubSet regimes.

The model has two relation slices: r1 (edge present) and r0 (edge absent).
For labelled pairs (label 1 for pairs in E, 0 otherwise) the objective is::

    sum_pairs (s(v, r1, w) - y)^2 + (s(v, r0, w) - (1 - y))^2 + reg * |Theta|^2

FullSet observes every ordered pair, so the r1 slice is the adjacency X of E
and the r0 slice is J - X. SubSet keeps all of E but only a sample of E^c.
Its default optimizer is tensor RESCAL-ALS: the r0 slice holds ones on the
sampled pairs, and unobserved pairs are zero in both slices. The ``sgd``
optimizer instead fits the labelled pairs alone with mini-batch SGD.

ALS products with the V x V slices are done in low-rank form. Nothing
quadratic in V is ever allocated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, LinearOperator, eigsh

from . import kernels
from .graph import EdgePartitions
from .model import R0, R1, RescalModel, init_model, pair_scores

_logger = logging.getLogger(__name__)

__all__ = [
    "FULLSET",
    "SUBSET",
    "TrainConfig",
    "LabeledPair",
    "LabeledPairs",
    "Gradient",
    "TrainingDiverged",
    "loss",
    "pair_loss",
    "gradient",
    "full_loss",
    "zero_filled_loss",
    "sample_negatives",
    "subset_training_pairs",
    "train",
    "train_fullset",
    "train_subset",
]

FULLSET = "FullSet"
SUBSET = "SubSet"
_INITS = ("nvecs", "random")
_SUBSET_OPTIMIZERS = ("als", "sgd")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    d: int = 50
    mode: str = FULLSET
    init: str = "nvecs"
    subset_optimizer: str = "als"
    sweeps: int = 30
    epochs: int = 200
    learning_rate: float = 0.05
    lr_decay: float = 0.5
    plateau_tol: float = 0.0
    batch_size: int = 32
    regularization: float = 0.01
    seed: int = 0
    init_scale: float | None = None
    negatives_per_positive: int = 1
    resample_negatives: bool = False

    def __post_init__(self):
        if self.mode not in (FULLSET, SUBSET):
            raise ValueError(f"mode must be {FULLSET!r} or {SUBSET!r}, got {self.mode!r}")
        if self.init not in _INITS:
            raise ValueError(f"init must be one of {_INITS}, got {self.init!r}")
        if self.subset_optimizer not in _SUBSET_OPTIMIZERS:
            raise ValueError(f"subset_optimizer must be one of {_SUBSET_OPTIMIZERS}")
        for name in ("d", "sweeps", "epochs", "batch_size", "negatives_per_positive"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("learning_rate", "lr_decay", "plateau_tol", "regularization"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.learning_rate <= 0 or not 0 < self.lr_decay <= 1:
            raise ValueError("learning_rate must be > 0 and lr_decay in (0, 1]")
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")
        if self.init_scale is not None and (not math.isfinite(self.init_scale) or self.init_scale <= 0):
            raise ValueError("init_scale must be a positive finite number")

    def as_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class LabeledPair:
    sub: int
    obj: int
    label: float


@dataclass(frozen=True)
class LabeledPairs:
    """Aligned arrays of subjects, objects and 0/1 labels."""

    subs: np.ndarray
    objs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "subs", np.ascontiguousarray(self.subs, dtype=np.int64))
        object.__setattr__(self, "objs", np.ascontiguousarray(self.objs, dtype=np.int64))
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.float64))
        if not (len(self.subs) == len(self.objs) == len(self.labels)):
            raise ValueError("subs, objs and labels must have equal length")
        if not np.all((self.labels == 0.0) | (self.labels == 1.0)):
            raise ValueError("labels must be 0 or 1")

    def __len__(self):
        return len(self.subs)

    @classmethod
    def from_sets(cls, positives: np.ndarray, negatives: np.ndarray) -> "LabeledPairs":
        pairs = np.concatenate([positives, negatives]).reshape(-1, 2)
        labels = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
        return cls(pairs[:, 0], pairs[:, 1], labels)

    def negatives(self) -> np.ndarray:
        neg = self.labels == 0.0
        return np.column_stack([self.subs[neg], self.objs[neg]])


@dataclass
class Gradient:
    """Gradient with the shapes of the model parameters."""

    A: np.ndarray
    M: np.ndarray


def _regularizer(model: RescalModel) -> float:
    return float(np.sum(model.A**2) + np.sum(model.M**2))


def loss(model: RescalModel, pairs: LabeledPairs, regularization: float) -> float:
    s1 = pair_scores(model, pairs.subs, pairs.objs, R1)
    s0 = pair_scores(model, pairs.subs, pairs.objs, R0)
    resid = np.sum((s1 - pairs.labels) ** 2) + np.sum((s0 - (1.0 - pairs.labels)) ** 2)
    return float(resid + regularization * _regularizer(model))


def pair_loss(model: RescalModel, pair: LabeledPair, regularization: float) -> float:
    """One pair's squared residuals plus ``regularization * |Theta|^2``.

    With ``regularization = reg / N`` the pair losses of N pairs sum to
    ``loss(model, pairs, reg)``.
    """
    A, M = model.A, model.M
    a, b = A[pair.sub], A[pair.obj]
    total = (a @ M[R1] @ b - pair.label) ** 2 + (a @ M[R0] @ b - (1.0 - pair.label)) ** 2
    return float(total + regularization * _regularizer(model))


def gradient(model: RescalModel, pair: LabeledPair, regularization: float) -> Gradient:
    A, M = model.A, model.M
    v, w = pair.sub, pair.obj
    a, b = A[v], A[w]
    gA = 2.0 * regularization * A
    gM = 2.0 * regularization * M
    for r, target in ((R1, pair.label), (R0, 1.0 - pair.label)):
        res = a @ M[r] @ b - target
        gA[v] += 2.0 * res * (M[r] @ b)
        gA[w] += 2.0 * res * (M[r].T @ a)
        gM[r] += 2.0 * res * np.outer(a, b)
    return Gradient(gA, gM)


def sample_negatives(partitions: EdgePartitions, config: TrainConfig, epoch: int | None = None) -> np.ndarray:
    """``negatives_per_positive * |E|`` pairs of E^c, seeded by (seed, epoch)."""
    n_neg = min(config.negatives_per_positive * partitions.num_e, partitions.num_ec)
    key = [config.seed, 1] if epoch is None else [config.seed, 2, epoch]
    seed = int(np.random.SeedSequence(key).generate_state(1)[0])
    return partitions.sample_ec(n_neg, seed)


def subset_training_pairs(partitions: EdgePartitions, config: TrainConfig,
                          epoch: int | None = None) -> LabeledPairs:
    """All of E with label 1 plus the sampled negatives with label 0."""
    return LabeledPairs.from_sets(partitions.e_set, sample_negatives(partitions, config, epoch))


# ---------------------------------------------------------------------------
# Tensor RESCAL-ALS.


class _Slices:
    """The two observed V x V slices.

    ``negatives=None`` means the r0 slice is J - X (every non-edge is an
    observed absence); otherwise r0 is one on the given pairs and zero
    elsewhere.
    """

    def __init__(self, partitions: EdgePartitions, negatives: np.ndarray | None = None):
        V = partitions.num_vertices
        self.V = V
        self.X = _adjacency(partitions.e_set, V)
        self.XT = self.X.T.tocsr()
        self.complement = negatives is None
        if self.complement:
            self.N = self.NT = None
            self.sq_norms = {R1: float(partitions.num_e), R0: float(V * V - partitions.num_e)}
        else:
            self.N = _adjacency(negatives, V)
            self.NT = self.N.T.tocsr()
            self.sq_norms = {R1: float(partitions.num_e), R0: float(self.N.nnz)}

    def right(self, r: int, B: np.ndarray) -> np.ndarray:
        """X_r @ B."""
        if r == R1:
            return self.X @ B
        if self.complement:
            return B.sum(axis=0)[None, :] - self.X @ B
        return self.N @ B

    def left(self, r: int, B: np.ndarray) -> np.ndarray:
        """X_r^T @ B."""
        if r == R1:
            return self.XT @ B
        if self.complement:
            return B.sum(axis=0)[None, :] - self.XT @ B
        return self.NT @ B


def _adjacency(pairs: np.ndarray, V: int) -> sp.csr_matrix:
    pairs = np.asarray(pairs).reshape(-1, 2)
    return sp.csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(V, V))


def _tensor_loss(A, M, slices: _Slices, reg: float) -> float:
    G = A.T @ A
    total = 0.0
    for r in (R0, R1):
        fit = np.sum((G @ M[r] @ G) * M[r])
        cross = np.sum((A.T @ slices.right(r, A)) * M[r])
        total += fit - 2.0 * cross + slices.sq_norms[r]
    return float(total + reg * (np.sum(A * A) + np.sum(M * M)))


def full_loss(model: RescalModel, partitions: EdgePartitions, regularization: float) -> float:
    """FullSet objective over all V^2 ordered pairs, in O(|E| d + V d^2)."""
    return _tensor_loss(model.A, model.M, _Slices(partitions), regularization)


def zero_filled_loss(model: RescalModel, partitions: EdgePartitions, negatives: np.ndarray,
                     regularization: float) -> float:
    """SubSet-ALS objective: unobserved pairs have target 0 in both slices."""
    return _tensor_loss(model.A, model.M, _Slices(partitions, negatives), regularization)


def _update_embeddings(A, M, slices, reg):
    d = A.shape[1]
    G = A.T @ A
    F = np.zeros_like(A)
    E = reg * np.eye(d)
    for r in (R0, R1):
        F += slices.right(r, A @ M[r].T) + slices.left(r, A @ M[r])
        E += M[r] @ G @ M[r].T + M[r].T @ G @ M[r]
    return np.linalg.solve(E, F.T).T


def _line_search_poly(A, D, M, slices, reg):
    """Coefficients c0..c4 of t -> objective(A + t D, M), a quartic in t."""
    mats = {"A": A, "D": D}
    gram = {(p, q): mats[p].T @ mats[q] for p in mats for q in mats}

    def inner(t1, t2):
        # <L1 K1 R1^T, L2 K2 R2^T> = tr(K1^T (L1^T L2) K2 (R2^T R1))
        total = 0.0
        for L1, K1, Rt1 in t1:
            for L2, K2, Rt2 in t2:
                total += np.sum((gram[L1, L2] @ K2 @ gram[Rt2, Rt1]) * K1)
        return total

    c = np.zeros(5)
    for r in (R0, R1):
        Mr = M[r]
        P0 = [("A", Mr, "A")]
        P1 = [("A", Mr, "D"), ("D", Mr, "A")]
        P2 = [("D", Mr, "D")]
        XR = {q: slices.right(r, mats[q]) for q in mats}
        LXR = {(p, q): mats[p].T @ XR[q] for p in mats for q in mats}

        def with_x(terms):
            return sum(np.sum(LXR[L, Rt] * K) for L, K, Rt in terms)

        c[0] += inner(P0, P0) - 2.0 * with_x(P0) + slices.sq_norms[r]
        c[1] += 2.0 * (inner(P0, P1) - with_x(P1))
        c[2] += inner(P1, P1) + 2.0 * (inner(P0, P2) - with_x(P2))
        c[3] += 2.0 * inner(P1, P2)
        c[4] += inner(P2, P2)
    c[0] += reg * (np.sum(A * A) + np.sum(M * M))
    c[1] += 2.0 * reg * np.sum(A * D)
    c[2] += reg * np.sum(D * D)
    return c


def _best_step(c) -> float:
    """Global minimizer of the quartic among t in {0, 1} and its real critical points."""
    candidates = [0.0, 1.0]
    deriv = np.array([4.0 * c[4], 3.0 * c[3], 2.0 * c[2], c[1]])
    if np.any(deriv):
        for root in np.roots(np.trim_zeros(deriv, "f")):
            if abs(root.imag) <= 1e-12 * max(1.0, abs(root.real)):
                candidates.append(float(root.real))
    values = [np.polyval(c[::-1], t) for t in candidates]
    best = int(np.argmin(values))
    return candidates[best] if values[best] < values[0] else 0.0


def _update_relations(A, slices, reg):
    U, s, Wt = np.linalg.svd(A, full_matrices=False)
    scale = np.outer(s, s)
    shrink = scale / (scale**2 + reg)
    d = A.shape[1]
    out = np.empty((2, d, d))
    for r in (R0, R1):
        core = U.T @ slices.right(r, U)
        out[r] = Wt.T @ (shrink * core) @ Wt
    return out


_DENSE_EIG_MAX = 4096


def _leading_dense(S: np.ndarray, k: int, rng) -> np.ndarray:
    """k leading eigenvectors by magnitude; a degenerate group cut at k gets a seeded basis."""
    w, Q = np.linalg.eigh((S + S.T) / 2.0)
    order = np.argsort(-np.abs(w), kind="stable")
    mags = np.abs(w[order])
    if k == len(w):
        return Q[:, order]
    tol = 1e-8 * max(mags[0], 1.0)
    tied = np.abs(mags - mags[k - 1]) <= tol
    keep = order[:k][~tied[:k]]
    group = order[tied]
    m = k - len(keep)
    # any orthonormal basis of the tied eigenspace is a valid answer
    R, _ = np.linalg.qr(rng.standard_normal((len(group), m)))
    return np.hstack([Q[:, keep], Q[:, group] @ R])


def _nvecs(slices: _Slices, d: int, seed: int) -> np.ndarray:
    """Leading eigenvectors of sum_r X_r + X_r^T (largest magnitude first).

    With every pair labelled the operator is exactly 2J, so all but the
    first vector come from a degenerate eigenspace; the seed picks the basis.
    """
    V = slices.V
    rng = np.random.default_rng([seed, 4])

    def apply(B):
        return sum(slices.right(r, B) + slices.left(r, B) for r in (R0, R1))

    k = min(d, V)
    Q = None
    if V > _DENSE_EIG_MAX:
        op = LinearOperator((V, V), matvec=lambda x: apply(np.asarray(x).reshape(-1, 1)).ravel(),
                            dtype=np.float64)
        try:
            w, Q = eigsh(op, k=k, which="LM", v0=rng.uniform(-1.0, 1.0, V),
                         ncv=min(V, max(2 * k + 1, 3 * k)))
            Q = Q[:, np.argsort(-np.abs(w), kind="stable")]
        except ArpackError as exc:
            _logger.warning("eigsh failed (%s); using the dense eigensolver", exc)
            Q = None
    if Q is None:
        Q = _leading_dense(np.asarray(apply(np.eye(V))), k, rng)
    if k < d:
        # more latent dimensions than entities
        pad = rng.uniform(-1.0, 1.0, (V, d - k)) / math.sqrt(d)
        Q = np.hstack([Q, pad])
    return np.ascontiguousarray(Q)


def _initial_parameters(slices: _Slices, partitions: EdgePartitions, config: TrainConfig):
    if config.init == "nvecs":
        A = _nvecs(slices, config.d, config.seed)
        return A, _update_relations(A, slices, max(config.regularization, 1e-12))
    model = init_model(partitions.num_vertices, 2, config.d, config.seed, config.init_scale)
    return model.A.copy(), model.M.copy()


def _als(slices: _Slices, A, M, config: TrainConfig):
    """Alternating least squares with a monotone embedding step.

    Each sweep computes the closed-form RESCAL-ALS embedding update, accepts
    it through an exact line search on the quartic objective along the
    update direction, and then solves the ridge problem for both relation
    matrices exactly. The objective therefore never increases.
    """
    reg = config.regularization
    history = [_tensor_loss(A, M, slices, reg)]
    steps = []
    for sweep in range(config.sweeps):
        D = _update_embeddings(A, M, slices, reg) - A
        t = _best_step(_line_search_poly(A, D, M, slices, reg))
        A = A + t * D
        M = _update_relations(A, slices, reg)
        current = _tensor_loss(A, M, slices, reg)
        if not math.isfinite(current):
            raise TrainingDiverged(f"non-finite ALS objective at sweep {sweep}")
        history.append(current)
        steps.append(t)
        _logger.debug("sweep %d: objective %.6g (step %.3g)", sweep, current, t)
    return A, M, history, steps


def train_fullset(partitions: EdgePartitions, config: TrainConfig) -> RescalModel:
    """ALS over every ordered pair."""
    if config.mode != FULLSET:
        raise ValueError(f"train_fullset needs mode {FULLSET!r}, got {config.mode!r}")
    if config.regularization <= 0:
        raise ValueError("ALS requires regularization > 0")
    slices = _Slices(partitions)
    A, M = _initial_parameters(slices, partitions, config)
    A, M, history, steps = _als(slices, A, M, config)
    meta = dict(mode=FULLSET, optimizer="als", config=config.as_dict(),
                loss_history=history, line_search_steps=steps)
    return RescalModel(A, M, meta)


def train_subset(partitions: EdgePartitions, config: TrainConfig) -> RescalModel:
    """E plus a sample of E^c; every edge of E is always used."""
    if config.mode != SUBSET:
        raise ValueError(f"train_subset needs mode {SUBSET!r}, got {config.mode!r}")
    if config.subset_optimizer == "als":
        return _train_subset_als(partitions, config)
    return _train_subset_sgd(partitions, config)


def _train_subset_als(partitions, config):
    if config.regularization <= 0:
        raise ValueError("ALS requires regularization > 0")
    if config.resample_negatives:
        raise ValueError("resample_negatives applies to the sgd optimizer only")
    negatives = sample_negatives(partitions, config)
    slices = _Slices(partitions, negatives)
    A, M = _initial_parameters(slices, partitions, config)
    A, M, history, steps = _als(slices, A, M, config)
    meta = dict(mode=SUBSET, optimizer="als", config=config.as_dict(),
                loss_history=history, line_search_steps=steps,
                num_negatives=len(negatives))
    return RescalModel(A, M, meta)


def _train_subset_sgd(partitions, config):
    reg = config.regularization
    pairs = subset_training_pairs(partitions, config)
    A, M = _initial_parameters(_Slices(partitions, pairs.negatives()), partitions, config)
    rng = np.random.default_rng([config.seed, 3])

    initial = loss(RescalModel(A, M), pairs, reg)
    lr = config.learning_rate
    previous = math.inf
    epoch_losses = []
    for epoch in range(config.epochs):
        if config.resample_negatives and epoch > 0:
            pairs = subset_training_pairs(partitions, config, epoch)
        order = rng.permutation(len(pairs)).astype(np.int64)
        seen = kernels.sgd_epoch(A, M, pairs.subs, pairs.objs, pairs.labels,
                                 order, lr, reg / len(pairs), config.batch_size)
        if not (math.isfinite(seen) and np.all(np.isfinite(M)) and np.all(np.isfinite(A))):
            raise TrainingDiverged(
                f"SGD diverged at epoch {epoch} with learning rate {lr:g}; "
                "lower learning_rate or raise regularization")
        epoch_losses.append(seen)
        if seen > previous * (1.0 - config.plateau_tol):
            lr *= config.lr_decay
        previous = seen
    final = loss(RescalModel(A, M), pairs, reg)
    meta = dict(mode=SUBSET, optimizer="sgd", config=config.as_dict(), initial_loss=initial,
                final_loss=final, epoch_losses=epoch_losses, final_learning_rate=lr,
                kernel_backend=kernels.BACKEND)
    return RescalModel(A, M, meta)


def train(partitions: EdgePartitions, config: TrainConfig) -> RescalModel:
    if config.mode == FULLSET:
        return train_fullset(partitions, config)
    return train_subset(partitions, config)
