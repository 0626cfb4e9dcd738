import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beem.metrics import all_label_metrics, ari, contingency, homogeneity, nmi, purity_acc, roc_auroc

from oracles import auroc_pairwise, metrics_from_table

A = [0, 0, 1, 1]
B = [0, 1, 0, 1]


def test_contingency_hand_count():
    c = contingency(A, B)
    np.testing.assert_array_equal(c.table, np.ones((2, 2)))
    assert c.n == 4


def test_contingency_identical_is_diagonal():
    c = contingency([2, 2, 5, 7], [2, 2, 5, 7])
    np.testing.assert_array_equal(c.table, np.diag([2, 1, 1]))


def test_contingency_errors():
    with pytest.raises(ValueError):
        contingency([0, 1], [0])
    with pytest.raises(ValueError):
        contingency([], [])


def test_purity_examples():
    assert purity_acc([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert purity_acc([0, 0, 1, 1], [0, 0, 0, 0]) == 0.5
    assert purity_acc(A, B) == 0.5


def test_purity_unequal_k_unmatched_contribute_zero():
    # 3 clusters, 2 classes: only two clusters can be matched
    assert purity_acc([0, 0, 0, 1, 1, 1], [0, 0, 1, 2, 2, 2]) == pytest.approx(5 / 6)


def test_ari_examples():
    assert ari(A, A) == 1.0
    assert ari([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert ari(A, B) == pytest.approx(-0.5)
    assert ari([0, 0, 0], [1, 1, 1]) == 1.0
    with pytest.raises(ValueError):
        ari([0], [0])


def test_nmi_examples():
    assert nmi(A, A) == pytest.approx(1.0)
    assert nmi(A, B) == pytest.approx(0.0, abs=1e-15)
    assert nmi([0, 0], [0, 0]) == 1.0
    assert nmi([0, 1], [0, 0]) == 0.0


def test_homogeneity_examples():
    assert homogeneity([0, 0, 1, 1], [0, 0, 1, 2]) == pytest.approx(1.0)
    assert homogeneity([0, 0, 1, 1], [0, 0, 0, 0]) == pytest.approx(0.0)
    assert homogeneity([0, 0, 0], [0, 1, 2]) == 1.0


def test_homogeneity_is_asymmetric():
    t, p = [0, 0, 1, 1], [0, 1, 2, 3]
    assert homogeneity(t, p) == pytest.approx(1.0)
    assert homogeneity(p, t) == pytest.approx(0.5)


def test_all_label_metrics_keys():
    assert set(all_label_metrics(A, B)) == {"ACC", "Homo", "NMI", "ARI"}


def test_auroc_examples():
    _, auc = roc_auroc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert auc == 1.0
    _, auc = roc_auroc([0.3] * 6, [1, 0, 1, 0, 0, 1])
    assert auc == 0.5
    pts, auc = roc_auroc([0.1, 0.9], [1, 0])
    assert auc == 0.0
    np.testing.assert_array_equal(pts[0], [0, 0])
    np.testing.assert_array_equal(pts[-1], [1, 1])


def test_auroc_errors():
    with pytest.raises(ValueError):
        roc_auroc([1, 2], [1, 1])
    with pytest.raises(ValueError):
        roc_auroc([1, 2, 3], [1, 0])


def _random_table(rng):
    C, K = rng.integers(1, 5, size=2)
    T = rng.integers(0, 6, size=(C, K))
    if T.sum() < 2:
        T[0, 0] += 2
    return T


def _expand(T):
    true, pred = [], []
    for i in range(T.shape[0]):
        for j in range(T.shape[1]):
            true += [i] * int(T[i, j])
            pred += [j] * int(T[i, j])
    return np.array(true), np.array(pred)


def test_metrics_match_oracle_on_200_tables():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        T = _random_table(rng)
        t, p = _expand(T)
        got = (purity_acc(t, p), homogeneity(t, p), nmi(t, p), ari(t, p))
        want = metrics_from_table(T)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)


def test_auroc_matches_pairwise_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 21))
        y = rng.integers(0, 2, size=n)
        y[0], y[1] = 0, 1
        s = rng.integers(0, 5, size=n) / 4.0  # coarse grid forces ties
        assert roc_auroc(s, y)[1] == pytest.approx(auroc_pairwise(s, y), abs=1e-10)


labels = st.lists(st.integers(0, 3), min_size=2, max_size=30)


@settings(max_examples=200)
@given(st.data())
def test_property_relabel_invariance_and_ranges(data):
    t = np.array(data.draw(labels))
    p = np.array(data.draw(st.lists(st.integers(0, 3), min_size=len(t), max_size=len(t))))
    perm = np.array(data.draw(st.permutations(range(4))))
    base = all_label_metrics(t, p)
    for other in (all_label_metrics(t, perm[p]), all_label_metrics(perm[t], p)):
        for key in base:
            assert other[key] == pytest.approx(base[key], abs=1e-12)
    for key in ("ACC", "Homo", "NMI"):
        assert 0.0 <= base[key] <= 1.0
    assert -1.0 <= base["ARI"] <= 1.0
    assert ari(t, p) == pytest.approx(ari(p, t), abs=1e-12)
    assert nmi(t, p) == pytest.approx(nmi(p, t), abs=1e-12)
