import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linear_sum_assignment

from tabweave.clustering import (LayoutParams, SimilarityMatrix, build_clusters, doc_similarity, layout,
                                 layout_energy, max_weight_matching, recommend, similarity_matrix)
from tabweave.matching import AttrId, Correspondence


def brute_force_total(w: np.ndarray) -> float:
    p, q = w.shape
    if p > q:
        w, p, q = w.T, q, p
    best = 0.0
    for cols in itertools.permutations(range(q), p):
        best = max(best, sum(w[i, c] for i, c in enumerate(cols)))
    return best


matrices = st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 2**32 - 1)).map(
    lambda t: np.round(np.random.default_rng(t[2]).random((t[0], t[1])), 3)
    * (np.random.default_rng(t[2] + 1).random((t[0], t[1])) < 0.7))


@given(matrices)
def test_matching_equals_brute_force_and_scipy(w):
    pairs, total = max_weight_matching(w)
    assert total == pytest.approx(brute_force_total(w), abs=1e-9)
    if w.size:
        rows, cols = linear_sum_assignment(w, maximize=True)
        assert total == pytest.approx(w[rows, cols].sum(), abs=1e-9)
    # a matching: distinct rows and columns, positive weights only
    assert len({a for a, _ in pairs}) == len(pairs) == len({b for _, b in pairs})
    assert all(w[a, b] > 0 for a, b in pairs)
    assert pairs == sorted(pairs)


def test_matching_examples():
    assert max_weight_matching([[1.0, 0.9], [0.9, 0.0]]) == ([(0, 1), (1, 0)], 1.8)
    assert max_weight_matching(np.zeros((0, 3))) == ([], 0.0)
    assert max_weight_matching([[0.0, 0.0]]) == ([], 0.0)
    with pytest.raises(ValueError):
        max_weight_matching([[-0.1]])
    with pytest.raises(ValueError):
        max_weight_matching([1.0, 2.0])


def attrs(doc, k):
    return [AttrId(doc, "s", 1, f"col{i}") for i in range(k)]


def link(a, b, conf):
    return Correspondence(a, b, conf, ("name",))


def test_doc_similarity_examples():
    a, b = attrs("a", 3), attrs("b", 2)
    corrs = [link(a[0], b[0], 1.0), link(b[1], a[2], 0.5), Correspondence(a[1], "time:year", 1.0, ("concept",))]
    # best matching 1.0 + 0.5 over min(3, 2)
    assert doc_similarity(corrs, a, b) == pytest.approx(0.75)
    assert doc_similarity([], a, b) == 0.0
    assert doc_similarity([link(x, x, 1.0) for x in a], a, a) == 1.0
    with pytest.raises(ValueError):
        doc_similarity([], [], b)


@given(st.integers(1, 5), st.integers(1, 5), st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4),
                                                                 st.floats(0.01, 1.0)), max_size=20))
def test_doc_similarity_bounds_and_symmetry(p, q, raw):
    a, b = attrs("a", p), attrs("b", q)
    corrs = [link(a[i % p], b[j % q], c) for i, j, c in raw]
    s = doc_similarity(corrs, a, b)
    assert 0.0 <= s <= 1.0
    assert s == doc_similarity(corrs, b, a)


def sim_from(values, docs):
    n = len(docs)
    it = iter(values)
    return similarity_matrix(docs, {(docs[i], docs[j]): next(it) for i in range(n) for j in range(i + 1, n)})


def test_similarity_matrix_validation():
    with pytest.raises(ValueError):
        SimilarityMatrix(("a", "b"), np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(ValueError):
        SimilarityMatrix(("a",), np.array([[0.5]]))
    S = sim_from([0.25], ["a", "b"])
    assert S["b", "a"] == 0.25
    assert S.to_csv() == "doc,a,b\na,1.000000,0.250000\nb,0.250000,1.000000\n"
    with pytest.raises(KeyError):
        S.index("zzz")


def test_clusters_are_thresholded_components():
    S = sim_from([0.8, 0.0, 0.0, 0.0, 0.3, 0.0], ["d", "c", "b", "a"])
    # pairs: d-c .8, d-b 0, d-a 0, c-b 0, c-a .3, b-a 0
    c = build_clusters(S)
    assert c.members(1) == ["a", "c", "d"] and c.members(2) == ["b"]
    assert c.representativeness["b"] == 1.0
    assert c.representativeness["d"] == pytest.approx(0.4)
    high = build_clusters(S, epsilon=0.5)
    assert [high.members(k) for k in high.cluster_ids] == [["a"], ["b"], ["c", "d"]]
    with pytest.raises(ValueError):
        build_clusters(S, -0.1)


@given(st.lists(st.floats(0, 1), min_size=10, max_size=10), st.floats(0, 0.99),
       st.permutations(["a", "b", "c", "d", "e"]))
def test_clusters_ignore_document_order(vals, eps, order):
    docs = ["a", "b", "c", "d", "e"]
    S = sim_from(vals, docs)
    idx = [docs.index(d) for d in order]
    S2 = SimilarityMatrix(tuple(order), S.sim[np.ix_(idx, idx)])
    assert build_clusters(S, eps) == build_clusters(S2, eps)
    # every cross-cluster pair is at most epsilon
    c = build_clusters(S, eps)
    for x, y in itertools.combinations(docs, 2):
        if c.cluster[x] != c.cluster[y]:
            assert S[x, y] <= eps


def test_recommend_orders_by_similarity_then_name():
    S = sim_from([0.5, 0.5, 0.0, 0.9, 0.0, 0.0], ["a", "b", "c", "d"])
    assert recommend(S, "a", 3) == ["b", "c"]
    assert recommend(S, "a", 3, include_zero=True) == ["b", "c", "d"]
    assert recommend(S, "a", 0) == []


def test_layout_pair_converges_to_unit_distance():
    S = sim_from([1.0], ["a", "b"])
    pos = layout(S, LayoutParams(iterations=2000)).positions
    assert math.dist(pos[0], pos[1]) == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.integers(0, 1000))
def test_layout_energy_never_increases(vals, seed):
    S = sim_from(vals, ["a", "b", "c", "d"])
    coords = layout(S, LayoutParams(iterations=200, seed=seed))
    e = coords.energies
    assert all(later <= earlier for earlier, later in zip(e, e[1:]))
    centred = coords.positions - coords.positions.mean(axis=0)
    # translation does not change the energy
    assert layout_energy(S.sim, centred) == pytest.approx(e[-1], rel=1e-9, abs=1e-9)


def test_layout_is_seeded_and_handles_tiny_inputs():
    S = sim_from([0.2, 0.7, 0.1], ["a", "b", "c"])
    a = layout(S, LayoutParams(seed=3))
    b = layout(S, LayoutParams(seed=3))
    assert np.array_equal(a.positions, b.positions)
    assert layout(sim_from([], []), LayoutParams()).positions.shape == (0, 2)
    one = layout(sim_from([], ["x"]))
    assert np.allclose(one.positions, 0.0)
    with pytest.raises(ValueError):
        layout(S, LayoutParams(iterations=0))


def test_layout_radius_follows_representativeness():
    S = sim_from([0.5, 0.0, 0.0], ["a", "b", "c"])
    c = build_clusters(S)
    coords = layout(S, assignment=c)
    assert coords.radii.tolist() == pytest.approx([0.2, 0.2, 0.4])
    assert coords.to_json(c)["docs"][2] == {"id": "c", "x": pytest.approx(coords.positions[2, 0], abs=1e-6),
                                            "y": pytest.approx(coords.positions[2, 1], abs=1e-6),
                                            "r": 0.4, "cluster": 2}


def test_similarity_normalizes_by_the_smaller_document():
    a, b = attrs("a", 4), attrs("b", 2)
    corrs = [link(a[0], b[0], 0.6), link(a[3], b[1], 0.7), link(a[1], b[1], 0.2)]
    assert doc_similarity(corrs, a, b) == pytest.approx(1.3 / 2)
    assert max_weight_matching([[0.7]]) == ([(0, 0)], 0.7)


def test_star_centre_is_most_representative():
    S = similarity_matrix(["a", "b", "c", "d"], {("a", "b"): 0.6, ("b", "c"): 0.6, ("b", "d"): 0.6})
    rep = build_clusters(S).representativeness
    assert max(rep, key=rep.get) == "b" and rep["b"] == pytest.approx(0.6)
    assert recommend(S, "b", 2) == ["a", "c"]
    assert recommend(S, "a", 10) == ["b"]
    with pytest.raises(KeyError):
        recommend(S, "zzz", 1)


def test_transitive_linkage_and_all_zero_corpus():
    S = similarity_matrix(["a", "b", "c"], {("a", "b"): 0.5, ("b", "c"): 0.4})
    assert build_clusters(S).cluster_ids == [1]
    zero = similarity_matrix(["a", "b", "c"], {})
    c = build_clusters(zero)
    assert c.cluster_ids == [1, 2, 3] and set(c.representativeness.values()) == {1.0}


def test_unrelated_pair_drifts_apart():
    S = sim_from([0.0], ["a", "b"])
    dists = [math.dist(*layout(S, LayoutParams(iterations=k)).positions) for k in (1, 10, 50, 200)]
    assert dists == sorted(dists) and dists[-1] > dists[0]
