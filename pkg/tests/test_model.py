import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rescal_transitive.model import (R0, R1, RescalModel, classify_pair, difference_matrix,
                                     init_model, load_model, pair_scores, predict_relation,
                                     save_model, score)


def two_entity_model(M1, M0=None, a=(1.0, 0.0), b=(0.0, 1.0)):
    M1 = np.asarray(M1, dtype=float)
    M0 = np.zeros_like(M1) if M0 is None else np.asarray(M0, dtype=float)
    return RescalModel(np.array([a, b], dtype=float), np.stack([M0, M1]))


def naive_score(model, v, r, w):
    total = 0.0
    d = model.dim
    for i in range(d):
        for j in range(d):
            total += model.A[v, i] * model.M[r, i, j] * model.A[w, j]
    return total


def test_init_same_seed_is_bit_identical():
    a = init_model(20, 2, 5, seed=3)
    b = init_model(20, 2, 5, seed=3)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.M, b.M)


def test_init_zero_scale():
    m = init_model(4, 2, 3, seed=0, scale=0.0)
    assert not m.A.any() and not m.M.any()


def test_init_shapes_at_full_scale():
    m = init_model(2047, 2, 50, seed=0)
    assert m.A.shape == (2047, 50)
    assert m.M.shape == (2, 50, 50)


def test_model_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        RescalModel(np.zeros((3, 2)), np.zeros((2, 3, 3)))
    with pytest.raises(ValueError):
        RescalModel(np.full((3, 2), np.nan), np.zeros((2, 2, 2)))


def test_score_identity():
    m = two_entity_model(np.eye(2), a=(1.0, 0.0), b=(1.0, 0.0))
    assert score(m, 0, R1, 1) == 1.0


def test_score_asymmetric_matrix():
    m = two_entity_model([[0.0, 1.0], [0.0, 0.0]])
    assert score(m, 0, R1, 1) == 1.0
    assert score(m, 1, R1, 0) == 0.0


def test_score_rejects_bad_ids():
    m = init_model(3, 2, 2, seed=0)
    with pytest.raises(ValueError):
        score(m, 3, R1, 0)
    with pytest.raises(ValueError):
        score(m, 0, 2, 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=50, deadline=None)
def test_score_matches_double_loop(seed, d):
    m = init_model(6, 2, d, seed)
    rng = np.random.default_rng(seed)
    v, w = rng.integers(0, 6, size=2)
    for r in (R0, R1):
        assert score(m, v, r, w) == pytest.approx(naive_score(m, v, r, w), rel=1e-12, abs=1e-14)


def test_predict_relation_identity_vs_zero():
    m = two_entity_model(np.eye(2), a=(1.0, 0.0), b=(1.0, 0.0))
    assert predict_relation(m, 0, 1) == R1


def test_ties_go_to_absence():
    m = two_entity_model(np.eye(2), np.eye(2))
    assert predict_relation(m, 0, 0) == R0
    assert classify_pair(m, 0, 0) is False


def test_predict_and_classify_agree_with_oracle():
    m = init_model(15, 2, 4, seed=11)
    for v in range(15):
        for w in range(15):
            s0, s1 = naive_score(m, v, R0, w), naive_score(m, v, R1, w)
            expected = R1 if s1 > s0 else R0
            assert predict_relation(m, v, w) == expected
            assert classify_pair(m, v, w) == (expected == R1)


def test_symmetric_relations_give_symmetric_decisions():
    m = init_model(25, 2, 6, seed=2)
    M = (m.M + m.M.transpose(0, 2, 1)) / 2.0
    sym = RescalModel(m.A, M)
    for v in range(25):
        for w in range(25):
            assert classify_pair(sym, v, w) == classify_pair(sym, w, v)


def test_difference_matrix_cases():
    same = two_entity_model(np.eye(2), np.eye(2))
    assert not difference_matrix(same).any()
    assert np.array_equal(difference_matrix(two_entity_model(np.eye(2))), np.eye(2))


def test_difference_sign_agrees_with_classify():
    m = init_model(50, 2, 8, seed=4)
    D = difference_matrix(m)
    rng = np.random.default_rng(0)
    for v, w in rng.integers(0, 50, size=(1000, 2)):
        assert (m.A[v] @ D @ m.A[w] > 0) == classify_pair(m, v, w)


def test_pair_scores_vectorized():
    m = init_model(10, 2, 3, seed=1)
    subs = np.arange(10)
    objs = subs[::-1].copy()
    got = pair_scores(m, subs, objs, R1)
    assert np.allclose(got, [naive_score(m, v, R1, w) for v, w in zip(subs, objs)])


def test_save_load_is_bit_exact(tmp_path):
    m = init_model(30, 2, 7, seed=9)
    m.meta["config"] = {"d": 7, "mode": "FullSet"}
    path = tmp_path / "m.npz"
    save_model(m, path)
    back = load_model(path)
    assert back.A.tobytes() == m.A.tobytes()
    assert back.M.tobytes() == m.M.tobytes()
    assert back.meta == m.meta


def test_load_garbage_fails(tmp_path):
    path = tmp_path / "bad.npz"
    path.write_bytes(b"not a model")
    with pytest.raises(Exception):
        load_model(path)
