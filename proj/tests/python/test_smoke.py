import json
from fractions import Fraction
from pathlib import Path

import pytest

import bfactory

DATA = Path(__file__).resolve().parent.parent / "data"


def cubic_tree():
    return (DATA / "cubic_tree.json").read_text()


def test_cubic_tree_closed_form():
    for p in (Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(1)):
        assert bfactory.exact_eval(cubic_tree(), [p]) == p * p * (1 - p)


def test_fbar_is_a_distribution_with_marginals_p():
    p = [Fraction(1, 2), Fraction(3, 4), Fraction(1, 4), Fraction(1, 2)]
    subsets = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    weights = {u: bfactory.fbar(p, u) for u in subsets}
    assert sum(weights.values()) == 1
    for i in range(4):
        assert sum(w for u, w in weights.items() if i in u) == p[i]


def test_fbar_off_the_domain_raises():
    with pytest.raises(bfactory.DomainError):
        bfactory.fbar(["1/2", "1/2", "1/2"], [0, 1])


def test_vertex_weights_reconstruct_the_point():
    domain = {"n": 3, "M": [[1, 1, 1]], "b": [2]}
    verts = bfactory.vertices(domain)
    assert len(verts) == 3
    p = [Fraction(2, 3)] * 3
    w = bfactory.f_v(domain, p)
    assert sum(w) == 1
    assert [sum(wv * v[i] for wv, v in zip(w, verts)) for i in range(3)] == p


def test_resource_limit_maps_to_runtime_error():
    with pytest.raises(RuntimeError):
        bfactory.vertices({"n": 14})


def test_simulation_is_reproducible_and_calibrated():
    a = bfactory.simulate_tree(cubic_tree(), ["1/2"], trials=20000, seed=4)
    b = bfactory.simulate_tree(json.loads(cubic_tree()), [Fraction(1, 2)], trials=20000, seed=4)
    assert a == b
    assert a["chi_square"]["pass"]


def test_classic_sampford_budget_exhaustion():
    report = bfactory.sample_classic_sampford([1, 1, 0], 2, trials=10, budget=50)
    assert report["exhausted"] == 10
