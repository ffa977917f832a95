import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rescal_transitive.theory import (NoSeparatorError, UndefinedFactorError, WitnessTriple,
                                      format_witness, proportionality_factor, psd_chain_probe,
                                      read_matrix, sampled_transitivity_check, separating_vector,
                                      swap_sign_pair, symmetry_defect,
                                      transitivity_violation_witness, write_matrix)

SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])


def asymmetric(rng, d, min_defect=0.1):
    while True:
        M = rng.standard_normal((d, d))
        if symmetry_defect(M) > min_defect:
            return M


def test_defect_symmetric_is_zero():
    S = np.random.default_rng(0).standard_normal((5, 5))
    assert symmetry_defect(S + S.T) == 0.0


def test_defect_of_rotation_generator():
    assert symmetry_defect(SKEW) == pytest.approx(2.0)


@given(arrays(np.float64, (4, 4), elements=st.floats(-10, 10)), st.floats(1e-3, 1e3))
@settings(max_examples=100, deadline=None)
def test_defect_is_scale_invariant(M, lam):
    if np.linalg.norm(M) < 1e-3:
        return
    assert symmetry_defect(lam * M) == pytest.approx(symmetry_defect(M), rel=1e-9, abs=1e-12)


def test_defect_rejects_non_square():
    with pytest.raises(ValueError):
        symmetry_defect(np.zeros((2, 3)))


def test_rank_one_psd_has_no_violation():
    u = np.random.default_rng(1).standard_normal(5)
    assert sampled_transitivity_check(np.outer(u, u), 20_000, seed=3) is None


def test_zero_matrix_has_no_violation():
    assert sampled_transitivity_check(np.zeros((3, 3)), 5_000) is None


def test_identity_counterexample_by_hand():
    w = WitnessTriple(np.array([1.0, 0.0]), np.array([1.0, 1.0]), np.array([-0.5, 1.0]),
                      (1.0, 0.5, -0.5))
    assert w.verify(np.eye(2))


def test_identity_violation_found_by_sampling():
    found = sampled_transitivity_check(np.eye(2), 10_000, seed=0)
    assert found is not None and found.verify(np.eye(2))


def test_separating_vector_unit_pair():
    z = separating_vector([1.0, 0.0], [0.0, 1.0])
    assert np.allclose(z, [1.0, -1.0])


def test_separating_vector_parallel_raises():
    y = np.array([1.0, -2.0, 0.5])
    with pytest.raises(NoSeparatorError):
        separating_vector(2 * y, y)


@given(arrays(np.float64, 6, elements=st.floats(-5, 5)), arrays(np.float64, 6, elements=st.floats(-5, 5)))
@settings(max_examples=200, deadline=None)
def test_separating_vector_property(x, y):
    try:
        z = separating_vector(x, y)
    except NoSeparatorError:
        return
    # conditioning of the 2x2 system decides the attainable accuracy
    cond = np.linalg.cond(np.array([[x @ x, x @ y], [x @ y, y @ y]]))
    assert abs(z @ x - 1) <= 1e-12 * cond
    assert abs(z @ y + 1) <= 1e-12 * cond


def test_chain_probe_identity_never_witnesses():
    rng = np.random.default_rng(0)
    for _ in range(20):
        report = psd_chain_probe(np.eye(3), rng.standard_normal(3))
        assert report.conclusion >= 0 and report.witness is None


def test_chain_probe_zero_matrix():
    report = psd_chain_probe(np.zeros((3, 3)), np.ones(3))
    assert report.case == "b=0" and report.witness is None


def test_chain_probe_finds_witness_for_indefinite_symmetric_part():
    M = np.array([[1.0, 0.0], [0.0, -1.0]]) + 0.3 * SKEW
    rng = np.random.default_rng(0)
    witnesses = [psd_chain_probe(M, rng.standard_normal(2)).witness for _ in range(200)]
    found = [w for w in witnesses if w is not None]
    assert found and all(w.verify(M) for w in found)


def test_swap_sign_pair_skew():
    x, y = swap_sign_pair(SKEW)
    assert np.array_equal(x, [1.0, 0.0]) and np.array_equal(y, [0.0, 1.0])


def test_swap_sign_pair_symmetric_is_none():
    assert swap_sign_pair(np.eye(3)) is None


def test_swap_sign_pair_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        M = asymmetric(rng, int(rng.integers(2, 12)))
        x, y = swap_sign_pair(M)
        assert x @ M @ y > 1e-9 and x @ M.T @ y < -1e-9


def test_witness_for_skew_generator():
    w = transitivity_violation_witness(SKEW)
    assert np.array_equal(w.a, [1.0, 0.0])
    assert np.array_equal(w.b, [0.0, 1.0])
    assert np.array_equal(w.c, [-1.0, 0.0])
    assert w.values == (1.0, 1.0, 0.0)


def test_witness_rejects_symmetric():
    with pytest.raises(ValueError):
        transitivity_violation_witness(np.eye(3))


@given(st.integers(0, 2**32 - 1), st.integers(2, 20), st.floats(0.0, 3.0))
@settings(max_examples=150, deadline=None)
def test_witness_always_verifies(seed, d, shift):
    rng = np.random.default_rng(seed)
    M = asymmetric(rng, d) + shift * np.eye(d)
    if symmetry_defect(M) <= 1e-9:
        return
    w = transitivity_violation_witness(M, seed=seed)
    a, b, c = w.a, w.b, w.c
    assert a @ M @ b > 1e-9 and b @ M @ c > 1e-9 and a @ M @ c <= 0


def test_witness_for_nearly_symmetric_psd():
    # small skew part on top of a strongly positive definite symmetric part
    rng = np.random.default_rng(2)
    S = rng.standard_normal((6, 6))
    M = S @ S.T + 6 * np.eye(6) + 1e-3 * (S - S.T)
    assert transitivity_violation_witness(M).verify(M)


def test_proportionality_factor_cases():
    rng = np.random.default_rng(0)
    M2 = rng.standard_normal((4, 4))
    x = rng.standard_normal(4)
    assert proportionality_factor(2 * M2, M2, x) == pytest.approx(2.0)
    assert proportionality_factor(np.eye(4), np.eye(4), x) == pytest.approx(1.0)
    lam = 3.7
    for _ in range(100):
        x = rng.standard_normal(4)
        assert abs(proportionality_factor(lam * M2, M2, x) - lam) <= 1e-9


def test_proportionality_factor_undefined():
    with pytest.raises(UndefinedFactorError):
        proportionality_factor(np.eye(2), np.zeros((2, 2)), np.ones(2))


def test_matrix_file_round_trip(tmp_path):
    M = np.random.default_rng(0).standard_normal((3, 3))
    write_matrix(M, tmp_path / "m.txt")
    assert np.array_equal(read_matrix(tmp_path / "m.txt"), M)


def test_read_matrix_rejects_ragged(tmp_path):
    (tmp_path / "m.txt").write_text("1 2\n3\n")
    with pytest.raises(ValueError):
        read_matrix(tmp_path / "m.txt")


def test_format_witness_lists_vectors_and_values():
    text = format_witness(transitivity_violation_witness(SKEW))
    assert "a: 1 0" in text and "c: -1 0" in text and "a^T M c: 0" in text
