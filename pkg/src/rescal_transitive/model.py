"""RESCAL parameters and bilinear scoring."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "R0",
    "R1",
    "RescalModel",
    "init_model",
    "score",
    "predict_relation",
    "classify_pair",
    "difference_matrix",
    "save_model",
    "load_model",
]

# absence / presence of the relation
R0 = 0
R1 = 1


@dataclass(eq=False)
class RescalModel:
    """Entity embeddings ``A`` (row v is a_v) and one d x d matrix per relation."""

    entity_embeddings: np.ndarray
    relation_matrices: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.ascontiguousarray(self.entity_embeddings, dtype=np.float64)
        M = np.ascontiguousarray(self.relation_matrices, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("entity_embeddings must be a V x d matrix")
        if M.ndim != 3 or M.shape[1] != A.shape[1] or M.shape[2] != A.shape[1]:
            raise ValueError(f"relation_matrices must be R x {A.shape[1]} x {A.shape[1]}, got {M.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(M))):
            raise ValueError("model parameters must be finite")
        self.entity_embeddings = A
        self.relation_matrices = M

    @property
    def dim(self) -> int:
        return self.entity_embeddings.shape[1]

    @property
    def num_entities(self) -> int:
        return self.entity_embeddings.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_matrices.shape[0]

    # short aliases used throughout the training code
    @property
    def A(self) -> np.ndarray:
        return self.entity_embeddings

    @property
    def M(self) -> np.ndarray:
        return self.relation_matrices

    def copy(self) -> "RescalModel":
        return RescalModel(self.A.copy(), self.M.copy(), dict(self.meta))

    def _check_entity(self, v):
        if not 0 <= v < self.num_entities:
            raise ValueError(f"entity id {v} out of range [0, {self.num_entities})")

    def _check_relation(self, r):
        if not 0 <= r < self.num_relations:
            raise ValueError(f"relation id {r} out of range [0, {self.num_relations})")


def init_model(V: int, R: int, d: int, seed: int, scale: float | None = None) -> RescalModel:
    """Uniform(-scale, scale) initialization; ``scale`` defaults to 1/sqrt(d)."""
    if min(V, R, d) < 1:
        raise ValueError(f"V, R, d must be >= 1, got {(V, R, d)}")
    if scale is None:
        scale = 1.0 / math.sqrt(d)
    if not math.isfinite(scale) or scale < 0:
        raise ValueError(f"scale must be finite and non-negative, got {scale}")
    rng = np.random.default_rng(seed)
    A = rng.uniform(-scale, scale, size=(V, d))
    M = rng.uniform(-scale, scale, size=(R, d, d))
    return RescalModel(A, M, {"seed": seed, "init_scale": scale})


def score(model: RescalModel, v: int, r: int, w: int) -> float:
    model._check_entity(v)
    model._check_entity(w)
    model._check_relation(r)
    return float(model.A[v] @ model.M[r] @ model.A[w])


def predict_relation(model: RescalModel, v: int, w: int) -> int:
    """Highest-scoring relation; ties go to the lowest id, i.e. to absence."""
    scores = [score(model, v, r, w) for r in range(model.num_relations)]
    best = 0
    for r in range(1, len(scores)):
        if scores[r] > scores[best]:
            best = r
    return best


def classify_pair(model: RescalModel, v: int, w: int) -> bool:
    return score(model, v, R1, w) > score(model, v, R0, w)


def difference_matrix(model: RescalModel) -> np.ndarray:
    if model.num_relations < 2:
        raise ValueError("model needs both relations r0 and r1")
    return model.M[R1] - model.M[R0]


def pair_scores(model: RescalModel, subs: np.ndarray, objs: np.ndarray, r: int) -> np.ndarray:
    """Vectorized a_v^T M_r a_w over aligned index arrays."""
    A = model.A
    return np.einsum("ij,ij->i", A[subs] @ model.M[r], A[objs])


def save_model(model: RescalModel, path) -> None:
    """npz container; floats are stored raw so loading is bit-exact."""
    with open(path, "wb") as fh:
        np.savez(
            fh,
            dims=np.array([model.dim, model.num_entities, model.num_relations], dtype=np.int64),
            entity_embeddings=model.A,
            relation_matrices=model.M,
            meta=np.array(json.dumps(model.meta, sort_keys=True)),
        )


def load_model(path) -> RescalModel:
    with np.load(path, allow_pickle=False) as data:
        d, V, R = (int(x) for x in data["dims"])
        A = data["entity_embeddings"]
        M = data["relation_matrices"]
        meta = json.loads(str(data["meta"]))
    if A.shape != (V, d) or M.shape != (R, d, d):
        raise ValueError(f"{path}: stored shapes disagree with header (d={d}, V={V}, R={R})")
    return RescalModel(A, M, meta)
