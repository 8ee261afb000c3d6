"""Reproducibility of the seeded symbol/vector generators and sanity of
the named test families."""

import numpy as np

from bergtoep.corpus import (audit_trials, random_point, random_symbol,
                             random_vector_poly, standard_pairs,
                             trace_corpus_pairs, zero_free_symbols)


def test_standard_pairs_named_and_sized():
    pairs = standard_pairs()
    names = [name for name, _, _ in pairs]
    assert len(names) == len(set(names))
    assert "identity-n2" in names
    for name, f, g in pairs:
        assert f.n == g.n


def test_zero_free_symbols_have_nonvanishing_determinant():
    rng = np.random.default_rng(99)
    zs = 0.95 * np.sqrt(rng.random(64)) * np.exp(
        2j * np.pi * rng.random(64))
    for name, f in zero_free_symbols():
        vals = f.eval_at(zs)
        dets = np.linalg.det(vals)
        assert np.min(np.abs(dets)) > 1e-6, name


def test_random_generators_are_seed_deterministic():
    a = random_symbol(2, 3, 1234)
    b = random_symbol(2, 3, 1234)
    c = random_symbol(2, 3, 1235)
    assert all(a.entries[i][j].coeffs == b.entries[i][j].coeffs
               for i in range(2) for j in range(2))
    assert any(a.entries[i][j].coeffs != c.entries[i][j].coeffs
               for i in range(2) for j in range(2))
    u = random_vector_poly(3, 2, 777)
    v = random_vector_poly(3, 2, 777)
    assert all(u.components[i].coeffs == v.components[i].coeffs
               for i in range(3))
    assert random_point(42) == random_point(42)
    assert abs(random_point(42, r_max=0.5)) <= 0.5


def test_trace_corpus_pairs_reproducible():
    a = trace_corpus_pairs(5)
    b = trace_corpus_pairs(5)
    assert len(a) == 5
    for (f1, g1), (f2, g2) in zip(a, b):
        assert f1.n == f2.n
        assert all(f1.entries[i][j].coeffs == f2.entries[i][j].coeffs
                   for i in range(f1.n) for j in range(f1.n))


def test_audit_trials_shapes_and_range():
    trials = audit_trials(8, seed0=123, r_max=0.7)
    assert len(trials) == 8
    for f, g, u, v, w in trials:
        assert f.n == g.n == u.n == v.n
        assert abs(w) <= 0.7
