"""Truncated Toeplitz operators, rank-one products, and norms."""

import numpy as np
import pytest

from bergtoep.core import (PolyMatrixSymbol, PowerSeries, VectorPoly,
                           series_inner, vector_inner)
from bergtoep.corpus import (random_symbol, random_vector_poly,
                             trace_corpus_pairs)
from bergtoep.errors import BufferTooSmall
from bergtoep.toeplitz import (TruncatedOperator, analytic_toeplitz,
                               coanalytic_toeplitz, coeff_vector,
                               operator_norm, park_residual,
                               product_restricted, rank_one,
                               rank_one_trace, vector_poly_from_coeffs)

Z = PowerSeries((0.0, 1.0))


def test_coeff_vector_roundtrip():
    u = random_vector_poly(2, 4, 900)
    vec = coeff_vector(u, 2, 6)
    back = vector_poly_from_coeffs(vec, 2)
    for z in (0.1, 0.4 - 0.2j, -0.7j):
        assert np.max(np.abs(back(complex(z)) - u(complex(z)))) < 1e-13


def test_analytic_entry_factor():
    # multiplication by z^s maps e_t to sqrt((t+1)/(t+s+1)) e_{t+s}
    s = 2
    f = PolyMatrixSymbol.scalar(PowerSeries((0.0, 0.0, 1.0)))
    op = analytic_toeplitz(f, 5)
    for t in range(6):
        col = op.matrix[:, t]
        want = np.sqrt((t + 1.0) / (t + s + 1.0))
        assert abs(col[t + s] - want) < 1e-14
        assert np.sum(np.abs(col)) - abs(col[t + s]) < 1e-14


def test_analytic_action_is_multiplication():
    f = random_symbol(2, 3, 901)
    u = random_vector_poly(2, 4, 902)
    out = analytic_toeplitz(f, 4).apply(u)
    for z in (0.2, -0.5j, 0.3 + 0.3j):
        want = f.eval_at(complex(z)) @ u(complex(z))
        assert np.max(np.abs(out(complex(z)) - want)) < 1e-12


def test_coanalytic_is_adjoint():
    f = random_symbol(2, 3, 903)
    k = 6
    a = analytic_toeplitz(f, k).compress(k, k)
    c = coanalytic_toeplitz(f, k)
    assert np.max(np.abs(c.matrix - a.matrix.conj().T)) < 1e-14
    # <T_{F*} u, v> = <u, F v> once everything fits the window
    u = random_vector_poly(2, 3, 904)
    v = random_vector_poly(2, 3, 905)
    lhs = vector_inner(c.apply(u), v)
    rhs = vector_inner(u, f.apply_to(v))
    assert abs(lhs - rhs) < 1e-13


def test_apply_window_guard():
    op = TruncatedOperator.identity(1, 2)
    with pytest.raises(BufferTooSmall):
        op.apply(VectorPoly([PowerSeries((0, 0, 0, 1.0))]))


def test_compose_and_compress():
    f = PolyMatrixSymbol.scalar(Z)
    a = analytic_toeplitz(f, 3)          # degrees 3 -> 4
    b = coanalytic_toeplitz(f, 4)        # degrees 4 -> 4
    prod = b.compose(a)
    assert prod.k_in == 3 and prod.k_out == 4
    # domain restricted to degrees <= 3, exact range window 3 + deg F
    direct = product_restricted(f, f, 3)
    assert direct.matrix.shape == (5, 4)


def test_product_restricted_identity():
    ident = PolyMatrixSymbol.identity(2)
    p = product_restricted(ident, ident, 5)
    assert np.max(np.abs(p.matrix - np.eye(12))) < 1e-14


def test_operator_norm_against_svd():
    rng = np.random.default_rng(906)
    for n in (3, 6, 9):
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        op = TruncatedOperator(1, n - 1, n - 1, m)
        want = np.linalg.svd(m, compute_uv=False)[0]
        assert abs(operator_norm(op) - want) < 1e-8 * want


def test_operator_norm_deterministic():
    f = random_symbol(2, 2, 907)
    g = random_symbol(2, 2, 908)
    op = product_restricted(f, g, 10)
    assert operator_norm(op) == operator_norm(op)


def test_norm_monotone_one_pair():
    f = random_symbol(2, 2, 909)
    g = random_symbol(2, 2, 910)
    norms = [operator_norm(product_restricted(f, g, k), tol=1e-13)
             for k in (4, 8, 16)]
    assert norms[0] <= norms[1] + 1e-12
    assert norms[1] <= norms[2] + 1e-12


def test_rank_one_scalar_action():
    # (f (x) g) u = <u, g> f on the window
    f = PolyMatrixSymbol.scalar(PowerSeries((1.0, 0.5)))
    g = PolyMatrixSymbol.scalar(PowerSeries((0.0, 1.0, -0.25)))
    op = rank_one(f, g, 5)
    u = random_vector_poly(1, 5, 911)
    got = op.apply(u)
    scale = series_inner(u.components[0], g.entries[0][0])
    for z in (0.3, -0.2 + 0.4j):
        want = scale * f.entries[0][0](complex(z))
        assert abs(got(complex(z))[0] - want) < 1e-12


def test_rank_one_trace_z_exact():
    z = PolyMatrixSymbol.scalar(Z)
    assert rank_one_trace(z, z) == 0.25


def test_rank_one_trace_vs_assembled():
    for f, g in trace_corpus_pairs(8):
        k = f.degree + g.degree + 2
        t1 = rank_one_trace(f, g)
        t2 = float(np.trace(rank_one(f, g, k).matrix
                            @ rank_one(g, f, k).matrix).real)
        assert abs(t1 - t2) <= 1e-10 * max(1.0, abs(t1))


def test_park_residual_small():
    for f, g in trace_corpus_pairs(6):
        res = park_residual(f, g, f.degree + g.degree + 6)
        assert res < 1e-11


def test_park_residual_window_guard():
    f = random_symbol(1, 2, 912)
    g = random_symbol(1, 2, 913)
    with pytest.raises(Exception):
        park_residual(f, g, f.degree + g.degree + 3)
