"""Transitive matrices: checks, constructions and violation certificates.

A matrix M is transitive when ``a^T M b > 0`` and ``b^T M c > 0`` always
imply ``a^T M c > 0``. Every transitive matrix is symmetric, so any
asymmetric M has a violating triple (a, b, c); the functions here build one
explicitly and re-check it in floating point before returning it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

_logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_TOL",
    "WitnessTriple",
    "ChainReport",
    "NoSeparatorError",
    "UndefinedFactorError",
    "WitnessSearchError",
    "symmetry_defect",
    "sampled_transitivity_check",
    "separating_vector",
    "psd_chain_probe",
    "swap_sign_pair",
    "transitivity_violation_witness",
    "proportionality_factor",
    "read_matrix",
    "write_matrix",
    "format_witness",
]

DEFAULT_TOL = 1e-9


class NoSeparatorError(ValueError):
    """x and y are parallel, so no z has z.x = 1 and z.y = -1 by the construction."""


class UndefinedFactorError(ValueError):
    pass


class WitnessSearchError(RuntimeError):
    """Every construction and the sampling budget failed to certify a violation."""


def _bilinear(a, M, b) -> float:
    return float(a @ (M @ b))


@dataclass(frozen=True)
class WitnessTriple:
    """(a, b, c) with a^T M b > tol, b^T M c > tol and a^T M c <= 0."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    values: tuple[float, float, float]
    route: str = ""

    def verify(self, M, tol: float = DEFAULT_TOL) -> bool:
        ab, bc, ac = _bilinear(self.a, M, self.b), _bilinear(self.b, M, self.c), _bilinear(self.a, M, self.c)
        return ab > tol and bc > tol and ac <= 0.0


def _certify(M, a, b, c, tol, route) -> WitnessTriple | None:
    values = (_bilinear(a, M, b), _bilinear(b, M, c), _bilinear(a, M, c))
    if values[0] > tol and values[1] > tol and values[2] <= 0.0:
        return WitnessTriple(np.array(a, dtype=float), np.array(b, dtype=float),
                             np.array(c, dtype=float), values, route)
    return None


@dataclass(frozen=True)
class ChainReport:
    """The chain c = x, b = M x, a = M b and its bilinear values."""

    x: np.ndarray
    b: np.ndarray
    a: np.ndarray
    hypotheses: tuple[float, float]
    conclusion: float
    case: str
    witness: WitnessTriple | None = field(default=None)


def symmetry_defect(M) -> float:
    """Relative Frobenius norm of M - M^T; zero exactly for symmetric M."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return float(np.linalg.norm(M - M.T) / max(np.linalg.norm(M), 1e-12))


def _unit_rows(rng, n, d):
    X = rng.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sampled_transitivity_check(M, n_samples: int, tol: float = DEFAULT_TOL, seed: int = 0,
                               chunk: int = 8192) -> WitnessTriple | None:
    """First of ``n_samples`` random unit-vector triples that violates transitivity."""
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    rng = np.random.default_rng(seed)
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        A, B, C = _unit_rows(rng, n, d), _unit_rows(rng, n, d), _unit_rows(rng, n, d)
        ab = np.einsum("ij,ij->i", A @ M, B)
        bc = np.einsum("ij,ij->i", B @ M, C)
        ac = np.einsum("ij,ij->i", A @ M, C)
        hits = np.flatnonzero((ab > tol) & (bc > tol) & (ac <= 0.0))
        for k in hits:
            # recompute with the scalar path used by verify()
            found = _certify(M, A[k], B[k], C[k], tol, "sampling")
            if found is not None:
                return found
        done += n
    return None


def separating_vector(x, y) -> np.ndarray:
    """z = alpha x + beta y with z.x = 1 and z.y = -1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xx, yy, xy = x @ x, y @ y, x @ y
    if xx == 0.0 or yy == 0.0:
        raise NoSeparatorError("x and y must be nonzero")
    D = xy * xy - xx * yy
    if abs(D) <= 1e-12 * xx * yy:
        raise NoSeparatorError("x and y are parallel; Cauchy-Schwarz holds with equality")
    alpha = -(xy + yy) / D
    beta = (xy + xx) / D
    return alpha * x + beta * y


def psd_chain_probe(M, x, tol: float = DEFAULT_TOL) -> ChainReport:
    """Run the chain c = x, b = M c, a = M b.

    The hypotheses a^T M b = |M b|^2 and b^T M c = |b|^2 are non-negative
    by construction, and the conclusion a^T M c equals b^T M b, so a
    negative quadratic form along b yields a certified violation.
    """
    M = np.asarray(M, dtype=float)
    c = np.asarray(x, dtype=float)
    b = M @ c
    a = M @ b
    hyp = (_bilinear(a, M, b), _bilinear(b, M, c))
    conclusion = _bilinear(a, M, c)
    if not np.any(b):
        case = "b=0"
    elif not np.any(a):
        case = "Mb=0"
    else:
        case = "regular"
    witness = _certify(M, a, b, c, tol, "psd-chain") if case == "regular" else None
    return ChainReport(c, b, a, hyp, conclusion, case, witness)


def _swap_holds(M, x, y, tol) -> bool:
    return _bilinear(x, M, y) > tol and _bilinear(x, M.T, y) < -tol


def _cancel_symmetric(sym, x, y):
    q = x @ sym @ x
    if q != 0.0:
        return y - ((x @ sym @ y) / q) * x
    return y


def swap_sign_pair(M, tol: float = DEFAULT_TOL, seed: int = 0,
                   max_tries: int = 1000) -> tuple[np.ndarray, np.ndarray] | None:
    """(x, y) with x^T M y > tol and x^T M^T y < -tol, or None for symmetric M.

    Starts from the top singular pair of the skew part S (so x^T S y is
    maximal) and removes the symmetric contribution x^T Sym y by shifting y
    along x, which leaves x^T S y unchanged because x^T S x = 0. When a pair
    of standard basis vectors also attains the top singular value it is
    preferred, for readable certificates.
    """
    M = np.asarray(M, dtype=float)
    if symmetry_defect(M) < tol:
        return None
    sym = (M + M.T) / 2.0
    skew = (M - M.T) / 2.0
    U, s, Vt = np.linalg.svd(skew)
    x, y = U[:, 0], Vt[0]
    i, j = np.unravel_index(np.argmax(skew), skew.shape)
    if skew[i, j] >= s[0] * (1.0 - 1e-12):
        x = np.eye(len(M))[i]
        y = np.eye(len(M))[j]
    y = _cancel_symmetric(sym, x, y)
    if _swap_holds(M, x, y, tol):
        return x, y

    _logger.info("swap_sign_pair: singular-pair construction failed, sampling")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        x = rng.standard_normal(len(M))
        x /= np.linalg.norm(x)
        y = _cancel_symmetric(sym, x, skew.T @ x)
        if _swap_holds(M, x, y, tol):
            return x, y
    return None


def _negative_directions(sym):
    w, Q = np.linalg.eigh(sym)
    return [Q[:, k] for k in np.argsort(w) if w[k] < 0]


def transitivity_violation_witness(M, tol: float = DEFAULT_TOL, seed: int = 0,
                                   n_samples: int = 200_000) -> WitnessTriple:
    """Certified (a, b, c) showing that an asymmetric M is not transitive.

    Routes, in order:

    1. a swap-sign pair (x, y) gives (x, y, -x) when x^T M x >= 0, or
       (-y, x, y) when y^T M y >= 0;
    2. otherwise M has a direction w with w^T M w < 0: probe the chain from
       x = M^+ w (so that M x ~ w) and from w itself, then try (w, b, w)
       with b chosen so that w^T M b > 0 and b^T M w > 0;
    3. random unit triples.
    """
    M = np.asarray(M, dtype=float)
    if symmetry_defect(M) <= tol:
        raise ValueError("matrix is symmetric; transitivity cannot be refuted through asymmetry")

    pair = swap_sign_pair(M, tol, seed)
    if pair is not None:
        x, y = pair
        for a, b, c in ((x, y, -x), (-y, x, y)):
            found = _certify(M, a, b, c, tol, "swap-sign")
            if found is not None:
                return found

    sym = (M + M.T) / 2.0
    pinv = np.linalg.pinv(M)
    for w in _negative_directions(sym):
        for x in (pinv @ w, w):
            report = psd_chain_probe(M, x, tol)
            if report.witness is not None:
                return report.witness
        left, right = M.T @ w, M @ w
        nl, nr = np.linalg.norm(left), np.linalg.norm(right)
        if nl > 0 and nr > 0:
            found = _certify(M, w, left / nl + right / nr, w, tol, "negative-direction")
            if found is not None:
                return found

    _logger.info("transitivity_violation_witness: constructive routes failed, sampling")
    found = sampled_transitivity_check(M, n_samples, tol, seed)
    if found is None:
        raise WitnessSearchError(f"no violation certified after {n_samples} sampled triples")
    return found


def proportionality_factor(M1, M2, x) -> float:
    """lambda_x = x^T M1 M2 x / x^T M2 M2 x."""
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    x = np.asarray(x, dtype=float)
    den = x @ M2 @ M2 @ x
    if abs(den) <= 1e-12:
        raise UndefinedFactorError(f"denominator x^T M2 M2 x = {den:g} vanishes")
    return float((x @ M1 @ M2 @ x) / den)


def read_matrix(path) -> np.ndarray:
    """Square matrix from rows of whitespace-separated decimals."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError(f"{path}: expected a non-empty square matrix")
    M = np.array(rows)
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: matrix entries must be finite")
    return M


def write_matrix(M, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(M, dtype=float):
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _fmt_vec(v) -> str:
    return " ".join(f"{x + 0.0:.17g}" for x in v)


def format_witness(w: WitnessTriple) -> str:
    ab, bc, ac = w.values
    return "\n".join([
        f"route: {w.route}",
        f"a: {_fmt_vec(w.a)}",
        f"b: {_fmt_vec(w.b)}",
        f"c: {_fmt_vec(w.c)}",
        f"a^T M b: {ab:.17g}",
        f"b^T M c: {bc:.17g}",
        f"a^T M c: {ac:.17g}",
    ])
