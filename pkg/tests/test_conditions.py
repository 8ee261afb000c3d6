"""Condition functionals: necessary, epsilon-sufficient, double
integral, invertibility floor, classification, and the bound audits."""

import math

import numpy as np
import pytest

from bergtoep.berezin import QuadratureRule, WGrid, berezin_gram
from bergtoep.conditions import (ConditionParams,
                                 calibrated_derivative_constant,
                                 classify, coanalytic_apply,
                                 derivative_term_audit,
                                 double_integral_values,
                                 holder_bound_audit,
                                 invertibility_floor, necessary_sup,
                                 necessary_values,
                                 sufficient_double_integral,
                                 sufficient_eps, sufficient_eps_values)
from bergtoep.core import (PolyMatrixSymbol, PowerSeries, VectorPoly,
                           inverse_gram_at, lambda_min)
from bergtoep.corpus import random_vector_poly, standard_pairs
from bergtoep.errors import ComputeBudget, RangeError
from bergtoep.toeplitz import operator_norm, product_restricted

Z = PowerSeries((0.0, 1.0))
ZSYM = PolyMatrixSymbol.scalar(Z)
GRID3 = WGrid(3)
SMALL = ConditionParams(epsilon=1.0, grid=GRID3,
                        rule=QuadratureRule(32, 128))


def _params(eps, rule=None):
    return ConditionParams(epsilon=eps, grid=GRID3,
                           rule=rule or QuadratureRule(32, 128))


# ---------------------------------------------------------------------------
# parameters


def test_params_validation():
    with pytest.raises(RangeError):
        ConditionParams(epsilon=0.0)
    with pytest.raises(RangeError):
        ConditionParams(epsilon=1.0, eta=0.0)
    p = ConditionParams(epsilon=2.0)
    assert p.delta == (2.0 + 2.0) / (1.0 + 2.0)
    assert p.power == 2.0


# ---------------------------------------------------------------------------
# necessary functional


def test_necessary_identity_is_dimension():
    for n in (1, 2, 3):
        ident = PolyMatrixSymbol.identity(n)
        vals = necessary_values(ident, ident, GRID3)
        assert np.max(np.abs(vals - n)) < 1e-12


def test_necessary_closed_forms_at_center():
    # B(|z|^2)(0)^2 = 1/4 for the coordinate symbol pair
    vals = necessary_values(ZSYM, ZSYM, WGrid(0))
    assert abs(vals[0] - 0.25) < 1e-14
    # F = 1 + z against G = 1: trace B(|1+z|^2)(0) = 1 + 1/2
    f = PolyMatrixSymbol.scalar(PowerSeries((1.0, 1.0)))
    one = PolyMatrixSymbol.identity(1)
    vals = necessary_values(f, one, WGrid(0))
    assert abs(vals[0] - 1.5) < 1e-14


def test_necessary_sup_profile():
    f = PolyMatrixSymbol.scalar(PowerSeries((1.0, 0.5)))
    sup, argmax, profile = necessary_sup(f, f, GRID3)
    vals = necessary_values(f, f, GRID3)
    assert abs(sup - np.max(vals)) < 1e-14
    assert len(profile) == len(GRID3.radii)
    assert any(abs(complex(argmax) - w) < 1e-15 for w in GRID3.points)


# ---------------------------------------------------------------------------
# epsilon-sufficient functional


def test_sufficient_identity_is_dimension():
    for n in (1, 2):
        ident = PolyMatrixSymbol.identity(n)
        sup, _ = sufficient_eps(ident, ident, _params(1.0))
        assert abs(sup - n) < 1e-12


def test_sufficient_coordinate_center():
    # eps = 2: B(|z|^4)(0)^2 = 1/9
    vals = sufficient_eps_values(
        ZSYM, ZSYM, ConditionParams(epsilon=2.0, grid=WGrid(0),
                                    rule=QuadratureRule(64, 96)))
    assert abs(vals[0] - 1.0 / 9.0) < 1e-10


def test_sufficient_approaches_necessary_for_small_eps():
    f = PolyMatrixSymbol.diagonal([PowerSeries((1.0,)), Z])
    g = PolyMatrixSymbol.identity(2)
    nec = necessary_values(f, g, GRID3)
    suf = sufficient_eps_values(f, g, _params(1e-3,
                                              QuadratureRule(48, 128)))
    assert np.max(np.abs(suf - nec)) < 1e-2


def test_eps_dominance_with_dimension_constant():
    # necessary <= n^{eps/(2+eps)} (sufficient)^{2/(2+eps)}; the
    # dimension factor is forced by the identity symbol, where the
    # necessary side is n and the sufficient side is also n
    eps = 1.0
    params = _params(eps, QuadratureRule(32, 256))
    worst = 0.0
    for name, f, g in standard_pairs():
        nec = necessary_values(f, g, GRID3)
        suf = sufficient_eps_values(f, g, params)
        bound = (f.n ** (eps / (2.0 + eps))
                 * np.maximum(suf, 0.0) ** (2.0 / (2.0 + eps)))
        ratio = np.max(nec / np.maximum(bound, 1e-300))
        worst = max(worst, float(ratio))
        assert np.all(nec <= bound * (1.0 + 1e-6) + 1e-15), name
    assert worst <= 1.0 + 1e-6


# ---------------------------------------------------------------------------
# double-integral functional


def test_double_integral_coordinate_center():
    params = ConditionParams(epsilon=2.0, grid=WGrid(0),
                             rule=QuadratureRule(48, 96))
    vals = double_integral_values(ZSYM, ZSYM, params)
    assert abs(vals[0] - (1.0 / 9.0) ** 0.25) < 1e-10


def test_double_integral_zero_symbol():
    zero = PolyMatrixSymbol.scalar(PowerSeries((0.0,)))
    params = ConditionParams(epsilon=1.0, grid=WGrid(0),
                             rule=QuadratureRule(32, 64))
    vals = double_integral_values(zero, ZSYM, params)
    assert abs(vals[0]) < 1e-15


def test_double_integral_budget_guard():
    params = _params(1.0, QuadratureRule(32, 128))
    with pytest.raises(ComputeBudget):
        double_integral_values(ZSYM, ZSYM, params, budget=10.0)


def test_sufficient_double_integral_wrapper():
    params = ConditionParams(epsilon=1.0, grid=WGrid(2),
                             rule=QuadratureRule(24, 64))
    sup, profile = sufficient_double_integral(ZSYM, ZSYM, params,
                                              budget=1e11)
    assert sup > 0.0
    assert len(profile) == len(WGrid(2).radii)


# ---------------------------------------------------------------------------
# invertibility floor


def test_floor_identity():
    ident = PolyMatrixSymbol.identity(2)
    floor, _ = invertibility_floor(ident, ident, GRID3)
    assert abs(floor - 1.0) < 1e-12


def test_floor_nonvanishing_pair():
    f = PolyMatrixSymbol.scalar(PowerSeries((2.0,)))
    g = PolyMatrixSymbol.scalar(PowerSeries((1.0, 0.5)))
    floor, argmin = invertibility_floor(f, g, GRID3)
    assert floor >= 1.0
    assert abs(argmin) < 1.0


def test_floor_degenerate_is_zero():
    f = PolyMatrixSymbol.diagonal([PowerSeries((1.0,)), Z])
    floor, argmin = invertibility_floor(f, PolyMatrixSymbol.identity(2),
                                        GRID3)
    assert floor < 1e-12
    assert abs(argmin) < 1e-15


def test_floor_implies_transform_domination():
    # lambda_min(F G* G F*) >= eta on the grid forces
    # B(G*G)(w) >= eta (F(w)*F(w))^{-1} there: the pointwise gram sits
    # below its transform, and G*G >= eta F^{-1}F^{-*} pointwise
    for name, f, g in standard_pairs()[:5]:
        floor, _ = invertibility_floor(f, g, GRID3)
        if floor <= 1e-6:
            continue
        eta = 0.99 * floor
        for w in GRID3.points[::7]:
            lhs = eta * inverse_gram_at(f, w).data
            rhs = berezin_gram(g, w).data
            assert lambda_min(rhs - lhs) >= -1e-8, (name, w)


# ---------------------------------------------------------------------------
# necessary bounded by truncated norms


def test_necessary_bounded_by_norm_square():
    # sup of the necessary functional stays under 16 N^2 whenever the
    # truncated norms have stabilized
    for name, f, g in standard_pairs():
        norms = [operator_norm(product_restricted(f, g, k), tol=1e-13)
                 for k in (16, 32)]
        if norms[1] > 1e-9 and (norms[1] - norms[0]) > 0.05 * norms[1]:
            continue
        sup, _, _ = necessary_sup(f, g, GRID3)
        assert sup <= 16.0 * norms[1] ** 2 + 1e-9, name


# ---------------------------------------------------------------------------
# classify


def test_classify_identity_report():
    ident = PolyMatrixSymbol.identity(2)
    rep = classify(ident, ident, SMALL)
    assert rep.flags == {"necessary_holds_on_grid": True,
                         "sufficient_holds_on_grid": True,
                         "floor_positive": True,
                         "invertible": True}
    assert not rep.errors
    assert abs(rep.necessary_sup - 2.0) < 1e-12
    assert abs(rep.floor - 1.0) < 1e-12
    assert [k for k, _ in rep.truncated_norms] == [8, 16, 32]
    assert all(abs(v - 1.0) < 1e-12 for _, v in rep.truncated_norms)


def test_classify_degenerate_floor():
    f = PolyMatrixSymbol.diagonal([PowerSeries((1.0,)), Z])
    rep = classify(f, PolyMatrixSymbol.identity(2), SMALL)
    assert rep.flags["necessary_holds_on_grid"]
    assert not rep.flags["floor_positive"]
    assert not rep.flags["invertible"]


def test_classify_deterministic():
    f = PolyMatrixSymbol.scalar(PowerSeries((1.0, 0.5)))
    g = PolyMatrixSymbol.scalar(PowerSeries((1.0, -0.25)))
    a = classify(f, g, SMALL).to_dict()
    b = classify(f, g, SMALL).to_dict()
    assert a == b


def test_classify_report_roundtrip_fields():
    rep = classify(ZSYM, ZSYM, SMALL)
    d = rep.to_dict()
    assert d["n"] == 1
    assert d["epsilon"] == 1.0
    assert isinstance(d["necessary_argmax"], list)
    assert len(d["necessary_profile"]) == len(GRID3.radii)


# ---------------------------------------------------------------------------
# audits


def test_coanalytic_apply_degree():
    f = PolyMatrixSymbol.scalar(PowerSeries((1.0, 1.0, 0.5)))
    u = VectorPoly([PowerSeries((0.0, 0.0, 0.0, 1.0))])
    out = coanalytic_apply(f, u)
    assert out.degree <= u.degree


def test_holder_audit_constant_field():
    # h = 1, v = 1 at the origin: lhs = int |x| dA = 2/3, and the
    # bound collapses to 2 (both P0 factors are 1 at w = 0)
    params = ConditionParams(epsilon=2.0, rule=QuadratureRule(96, 64))
    lhs, rhs = holder_bound_audit(
        lambda z: np.ones_like(z, dtype=float),
        PowerSeries((1.0,)), 0.0, params)
    assert abs(lhs - 2.0 / 3.0) < 2e-5
    assert abs(rhs - 2.0) < 1e-12


def test_derivative_audit_reports_constant():
    params = ConditionParams(epsilon=1.0, rule=QuadratureRule(48, 96))
    ident = PolyMatrixSymbol.identity(2)
    u = VectorPoly([Z, PowerSeries((0.0,))])
    lhs, rhs, c = derivative_term_audit(ident, ident, u, u, 0.0, params,
                                        constant=1.0)
    assert abs(lhs - 1.0) < 1e-12
    assert rhs > 0.0 and c == 1.0


def test_calibrated_constant_cached_and_bounding():
    params = ConditionParams(epsilon=1.0, rule=QuadratureRule(48, 96))
    c1 = calibrated_derivative_constant(params, trials=10)
    c2 = calibrated_derivative_constant(params, trials=10)
    assert c1 == c2 and c1 > 0.0
    # with the calibrated constant the calibration trials themselves
    # are covered with the full safety margin
    from bergtoep.corpus import audit_trials
    cache = {}
    for f, g, u, v, w in audit_trials(10, seed0=31_000):
        lhs, rhs, _ = derivative_term_audit(f, g, u, v, w, params,
                                            constant=c1, _cache=cache)
        assert lhs <= rhs * (1.0 + 1e-12) + 1e-300
