import numpy as np
import pytest
from scipy import stats

from beem.datagen import (
    SQUARE_BALANCED, SQUARE_UNBALANCED, class_range, gen_rainbow, gen_random_hmms, gen_sinusoid_association,
    gen_square, load_labeled_csv, load_sequence_corpus, rainbow_means, square_corners,
)

from conftest import DATA_DIR


def test_square_sizes_and_counts():
    d = gen_square(SQUARE_UNBALANCED, seed=0)
    assert len(d) == 210 and d.points.shape == (210, 2)
    np.testing.assert_array_equal(np.bincount(d.labels), [100, 50, 50, 10])
    assert len(gen_square(SQUARE_BALANCED, seed=0)) == 200


def test_square_clockwise_from_top_left():
    np.testing.assert_array_equal(square_corners(10.0), [[-5, 5], [5, 5], [5, -5], [-5, -5]])


def test_square_zero_variance_limit():
    corners = square_corners(10.0)
    # var is a variance: var=1e-12 means sigma=1e-6, so bound at 6 sigma
    d = gen_square(var=1e-12, seed=3)
    assert np.max(np.abs(d.points - corners[d.labels])) < 6e-6
    d = gen_square(var=1e-14, seed=3)
    assert np.max(np.abs(d.points - corners[d.labels])) < 1e-6


def test_square_corner_means():
    n = 10_000
    d = gen_square((n, n, n, n), seed=11)
    sigma = np.sqrt(0.3)
    for c, corner in enumerate(square_corners(10.0)):
        m = d.points[d.labels == c].mean(axis=0)
        assert np.all(np.abs(m - corner) < 4 * sigma / np.sqrt(n))


def test_square_errors():
    with pytest.raises(ValueError):
        gen_square((1, 2, 3))
    with pytest.raises(ValueError):
        gen_square((1, 0, 1, 1))


def test_rainbow_means():
    m = rainbow_means(9.0, 8)
    np.testing.assert_allclose(m[0], [9, 0], atol=1e-12)
    np.testing.assert_allclose(m[-1], [-9, 0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(m, axis=1), 9.0)
    assert np.all(m[:, 1] >= -1e-12)
    ang = np.arctan2(m[:, 1], m[:, 0])
    np.testing.assert_allclose(np.diff(ang), np.pi / 7)


def test_rainbow_defaults_and_marginals():
    d = gen_rainbow(seed=0)
    assert len(d) == 1000 and d.n_classes == 8
    counts = np.bincount(d.labels, minlength=8)
    assert stats.chisquare(counts).pvalue > 0.001
    with pytest.raises(ValueError):
        gen_rainbow(n=4, k=8)


def test_random_hmm_defaults():
    d = gen_random_hmms(seed=0)
    assert len(d) == 60 and d.n_classes == 3
    np.testing.assert_array_equal(np.bincount(d.labels), [20, 20, 20])
    assert d.lengths.min() >= 20 and d.lengths.max() <= 50
    np.testing.assert_array_equal(d.lengths, [s.shape[0] for s in d.sequences])
    short = gen_random_hmms(len_lo=5, len_hi=10, seed=0)
    assert short.lengths.min() >= 5 and short.lengths.max() <= 10
    for h in d.generator_spec["hmms"]:
        np.testing.assert_allclose(np.sum(h["transition"], axis=1), 1.0)


def test_random_hmm_zero_std_emits_state_means():
    d = gen_random_hmms(state_std=1e-12, seed=1)
    x = np.concatenate([s.ravel() for s in d.sequences])
    dist = np.min(np.abs(x[:, None] - np.array([-2.0, -1.0, 0.0, 1.0])[None, :]), axis=1)
    assert dist.max() < 1e-6


def test_random_hmm_errors():
    with pytest.raises(ValueError):
        gen_random_hmms(len_lo=10, len_hi=5)
    with pytest.raises(ValueError):
        gen_random_hmms(n_states=3)


def test_sinusoid_sizes():
    s = gen_sinusoid_association("simple", seed=0)
    assert len(s) == 250 and s.points.shape[1] == 2
    c = gen_sinusoid_association("complex", seed=0)
    assert len(c) == 135
    np.testing.assert_array_equal(np.bincount(c.labels), [75, 60])
    assert "reconstruction" in s.generator_spec["note"]


def test_sinusoid_clean_curves():
    c = gen_sinusoid_association("complex", noise=False, subsample=False)
    x, y = c.points.T
    pos, neg = c.labels == 0, c.labels == 1
    np.testing.assert_allclose(y[pos], np.sin(x[pos]), atol=1e-12)
    np.testing.assert_allclose(y[neg], -np.sin(x[neg]), atol=1e-12)
    s = gen_sinusoid_association("simple", noise=False)
    x, y = s.points.T
    np.testing.assert_allclose(y[s.labels == 0], np.sin(2 * np.pi * x[s.labels == 0]), atol=1e-12)


@pytest.mark.parametrize("gen", [
    lambda s: gen_square(seed=s), lambda s: gen_rainbow(seed=s),
    lambda s: gen_sinusoid_association("complex", seed=s),
])
def test_generators_are_pure(gen):
    a, b = gen(5), gen(5)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.labels.tobytes() == b.labels.tobytes()
    assert gen(6).points.tobytes() != a.points.tobytes()


def test_random_hmm_is_pure():
    a, b = gen_random_hmms(seed=4), gen_random_hmms(seed=4)
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.sequences, b.sequences))


def test_iris_loader():
    d = load_labeled_csv(DATA_DIR / "iris.csv")
    assert d.points.shape == (150, 4)
    np.testing.assert_array_equal(np.bincount(d.labels), [50, 50, 50])
    by_name = load_labeled_csv(DATA_DIR / "iris.csv", "species")
    by_index = load_labeled_csv(DATA_DIR / "iris.csv", 4)
    assert np.array_equal(by_name.labels, d.labels) and np.array_equal(by_index.points, d.points)


def test_csv_single_row_and_errors(tmp_path):
    f = tmp_path / "one.csv"
    f.write_text("a,b,y\n1.5,2,cat\n")
    d = load_labeled_csv(f, "y")
    assert d.points.tolist() == [[1.5, 2.0]]
    with pytest.raises(ValueError, match="no label column"):
        load_labeled_csv(f, "z")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,y\n1,2,x\n3,x\n")
    with pytest.raises(ValueError, match=":3:"):
        load_labeled_csv(bad)
    with pytest.raises(ValueError, match=":2:"):
        (tmp_path / "nan.csv").write_text("a,y\nfoo,1\n")
        load_labeled_csv(tmp_path / "nan.csv")


def _corpus(tmp_path):
    rng = np.random.default_rng(0)
    for tag, n in (("A", 3), ("B", 2), ("C", 4)):
        for i in range(n):
            np.savetxt(tmp_path / f"{tag}_{i}.txt", rng.normal(size=(5 + i, 3)))
    return tmp_path


def test_sequence_corpus(tmp_path):
    root = _corpus(tmp_path)
    d = load_sequence_corpus(root, ["A", "B"])
    assert len(d) == 5 and d.n_classes == 2
    assert all(s.shape[1] == 3 for s in d.sequences)
    assert d.generator_spec["counts"] == {"A": 3, "B": 2}
    assert len(load_sequence_corpus(root)) == 9
    with pytest.raises(ValueError, match="available tags"):
        load_sequence_corpus(root, ["A", "Z"])
    with pytest.raises(ValueError):
        load_sequence_corpus(root, [])


def test_class_range():
    assert class_range("A-E") == list("ABCDE")
    assert class_range("A,C") == ["A", "C"]
