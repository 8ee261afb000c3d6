"""Dyadic decomposition of the disk and the matrix-weight toolkit:
geometry, averages, A2 constants, maximal function, stopping-time
selection, fair share, reverse Hoelder, conjugation stability."""

import math

import numpy as np
import pytest

from bergtoep.berezin import QuadratureRule, WGrid, berezin_quadrature
from bergtoep.core import (HermitianField, HermitianMatrix,
                           PolyMatrixSymbol, PowerSeries, VectorPoly)
from bergtoep.corpus import zero_free_symbols
from bergtoep.dyadic import (CZDecomposition, DyadicRectangle,
                             a2_constant, a2_expression, ancestor_at,
                             containing_rectangles, conjugation_a2_check,
                             cz_decompose, dyadic_maximal,
                             fairshare_check, level_rectangles,
                             pseudo_disk_cover, rect_average_scalar,
                             rect_nodes, reverse_holder,
                             reverse_holder_search, scalar_a2_constant,
                             weighted_projection_ratio)
from bergtoep.errors import (BadIndex, ComputeBudget, DepthExhausted,
                             DivergenceSuspected, NotPSD, NotSubset,
                             RangeError, ThresholdTooLow,
                             TouchesBoundary, ZeroDenominator)

RULE = QuadratureRule(32, 64)
Z = PowerSeries((0.0, 1.0))


def _abs_sq(z):
    return np.abs(np.asarray(z, dtype=complex)) ** 2


# ---------------------------------------------------------------------------
# geometry


def test_bad_index():
    for j, k, l in ((-1, 1, 1), (1, 0, 1), (1, 3, 1), (1, 1, 0),
                    (2, 1, 5)):
        with pytest.raises(BadIndex):
            DyadicRectangle(j, k, l)


def test_area_formula_and_partition():
    for j in range(6):
        areas = [q.area for q in level_rectangles(j)]
        assert len(areas) == 4 ** j
        # dyadic rationals with denominator 2^{3j}: the sum is exact
        assert sum(areas) == 1.0
    q = DyadicRectangle(3, 5, 2)
    assert q.area == 9.0 * 2.0 ** -9


def test_boundary_area_identity():
    # outermost band: |Q| = 8 r (1-r)^2 at the radial midpoint r,
    # float-exact because both sides are the same dyadic rational
    for j in range(1, 9):
        q = DyadicRectangle(j, 1 << j, 1)
        r0, r1 = q.radial_bounds
        r = (r0 + r1) / 2.0
        assert q.area == 8.0 * r * (1.0 - r) ** 2


def test_children_partition_parent():
    q = DyadicRectangle(2, 3, 2)
    kids = q.children()
    assert len(kids) == 4
    assert sum(c.area for c in kids) == q.area
    assert all(c.parent() == q for c in kids)
    r0, r1 = q.radial_bounds
    assert min(c.radial_bounds[0] for c in kids) == r0
    assert max(c.radial_bounds[1] for c in kids) == r1
    with pytest.raises(BadIndex):
        DyadicRectangle.root().parent()


def test_contains_and_seam():
    q = DyadicRectangle(2, 2, 1)
    assert q.contains(q.center)
    assert not q.contains(-q.center)
    # theta = 0 is shared between the extreme angular sectors
    assert DyadicRectangle(1, 2, 1).contains(0.6)
    assert DyadicRectangle(1, 2, 2).contains(0.6)
    found = containing_rectangles(0.6, 1)
    assert {(q.k, q.l) for q in found} == {(2, 1), (2, 2)}
    # the disk center belongs to every angular sector of the inner ring
    found = containing_rectangles(0.0, 2)
    assert len(found) == 4
    assert all(q.k == 1 for q in found)


def test_containing_rectangles_generic_point():
    z = 0.5237 * np.exp(1j * 1.1)
    for j in (1, 2, 3):
        found = containing_rectangles(z, j)
        assert len(found) == 1
        assert found[0].contains(z)
    with pytest.raises(RangeError):
        containing_rectangles(1.0, 2)


def test_ancestor_at():
    q = DyadicRectangle(3, 5, 2)
    assert ancestor_at(q, 3) == q
    assert ancestor_at(q, 0) == DyadicRectangle.root()
    assert ancestor_at(q, 2) == q.parent()
    with pytest.raises(BadIndex):
        ancestor_at(q, 4)


def test_pseudo_disk_cover():
    q = DyadicRectangle(2, 2, 1)
    w = q.center
    r0, r1 = q.radial_bounds
    a0, a1 = q.angular_bounds
    corners = [r * complex(math.cos(a), math.sin(a))
               for r in (r0, r1) for a in (a0, a1)]
    expect = max(abs((w - c) / (1.0 - c.conjugate() * w))
                 for c in corners)
    got = pseudo_disk_cover(q)
    assert abs(got - expect) < 1e-14
    assert abs(got - 0.4036543940119549) < 1e-12
    assert pseudo_disk_cover(DyadicRectangle.root()) < 1.0
    for q in (DyadicRectangle(1, 2, 1), DyadicRectangle(3, 8, 5)):
        with pytest.raises(TouchesBoundary):
            pseudo_disk_cover(q)


def test_rect_average_closed_form():
    # average of |z|^2 over a polar box is (r0^2 + r1^2)/2
    for q in (DyadicRectangle(1, 1, 2), DyadicRectangle(2, 3, 4),
              DyadicRectangle(3, 7, 1)):
        nodes, weights = rect_nodes(q, RULE)
        assert abs(np.sum(weights) - q.area) < 1e-14 * q.area
        r0, r1 = q.radial_bounds
        avg = rect_average_scalar(_abs_sq, q, RULE)
        assert abs(avg - (r0 * r0 + r1 * r1) / 2.0) < 1e-13


# ---------------------------------------------------------------------------
# matrix A2


def test_a2_expression_identity():
    ident = HermitianMatrix(np.eye(2, dtype=complex))
    assert a2_expression(ident, ident) == 1.0


def test_a2_constant_frozen_value():
    f = PolyMatrixSymbol.scalar(PowerSeries((2.0, 1.0)))
    c3, worst = a2_constant(f, 3, RULE)
    assert abs(c3 - 1.1730523857743789) < 1e-9
    assert (worst.j, worst.k, worst.l) == (1, 2, 1)
    c2, _ = a2_constant(f, 2, RULE)
    c4, _ = a2_constant(f, 4, RULE)
    assert c2 <= c3 <= c4
    assert c4 - c3 < 1e-6


def test_a2_matrix_scalar_consistency():
    # n = 1: the matrix expression is the square root of the scalar one
    f = PolyMatrixSymbol.scalar(PowerSeries((2.0, 1.0)))

    def weight(z):
        return np.abs(2.0 + np.asarray(z, dtype=complex)) ** 2

    cm, wm = a2_constant(f, 3, RULE)
    cs, ws = scalar_a2_constant(weight, 3, RULE)
    assert abs(cm * cm - cs) < 1e-10
    # the argmax boxes may differ by a conjugation-symmetric tie, but
    # score identically under the scalar expression
    from bergtoep.dyadic import scalar_a2_on
    assert abs(scalar_a2_on(weight, wm, RULE) - cs) < 1e-12


def test_a2_divergence_for_vanishing_symbol():
    with pytest.raises(DivergenceSuspected):
        a2_constant(PolyMatrixSymbol.scalar(Z), 6, RULE)


def test_a2_budget():
    f = PolyMatrixSymbol.scalar(PowerSeries((2.0, 1.0)))
    with pytest.raises(ComputeBudget):
        a2_constant(f, 3, RULE, budget=100.0)


def test_a2_bounded_by_transform_chain():
    # regression: the dyadic constant stays below the square of the
    # grid supremum of the transform-level expression (frozen margin)
    grid = WGrid(3)
    brule = QuadratureRule(32, 128)
    frozen = 0.9847319278346579
    for name, f in zero_free_symbols():
        gram = HermitianField.gram(f)
        inverse = HermitianField.inverse_gram(f)
        x = max(a2_expression(berezin_quadrature(gram, w, brule),
                              berezin_quadrature(inverse, w, brule))
                for w in grid.points)
        c, _ = a2_constant(f, 4, RULE)
        assert c <= frozen * 1.001 * x * x, name


def test_scalar_a2_inherited_from_matrix():
    # trace weight: scalar constant <= n * (matrix constant)^2
    for name, f in zero_free_symbols():
        if f.n < 2:
            continue

        def trace_field(z, f=f):
            m = f.eval_at(np.asarray(z, dtype=complex))
            return np.einsum("pki,pki->p", m.conj(), m).real

        cs, _ = scalar_a2_constant(trace_field, 3, RULE)
        cm, _ = a2_constant(f, 3, RULE)
        assert cs <= f.n * cm * cm + 1e-9, name


# ---------------------------------------------------------------------------
# maximal function


def test_maximal_frozen_value():
    # the winning box for |z|^2 at z = 0.9 is the outer band of level
    # 3, average (49/64 + 1)/2 = 113/128
    m = dyadic_maximal(_abs_sq, 0.9, 6, RULE)
    assert abs(m - 0.8828125) < 1e-12


def test_maximal_dominates_point_values():
    rule = QuadratureRule(16, 32)
    for z in (0.9, 0.3 + 0.4j, -0.77 + 0.1j):
        m = dyadic_maximal(_abs_sq, z, 48, rule)
        assert m >= abs(z) ** 2 - 1e-9


def test_maximal_range_error():
    with pytest.raises(RangeError):
        dyadic_maximal(_abs_sq, 1.0 + 0.0j, 4, RULE)


# ---------------------------------------------------------------------------
# stopping-time selection


def _sixth(z):
    return 16.0 * np.abs(np.asarray(z, dtype=complex)) ** 6


def test_cz_exact_selection():
    dec = cz_decompose(_sixth, 4.0, 4, RULE)
    assert isinstance(dec, CZDecomposition)
    assert [(q.j, q.k, q.l) for q in dec.selected] == [(1, 2, 1),
                                                       (1, 2, 2)]
    for avg in dec.averages:
        assert abs(avg - 5.3125) < 1e-12
        assert 4.0 < avg <= 32.0
    assert dec.total_area() == 0.75


def test_cz_exact_threshold_proceeds():
    # the global average is exactly the threshold; the relative
    # tolerance on the root test lets the decomposition proceed
    avg = rect_average_scalar(_sixth, DyadicRectangle.root(), RULE)
    assert abs(avg - 4.0) < 1e-13
    cz_decompose(_sixth, 4.0, 2, RULE)


def test_cz_threshold_too_low():
    with pytest.raises(ThresholdTooLow):
        cz_decompose(_sixth, 1.0, 3, RULE)
    with pytest.raises(RangeError):
        cz_decompose(_sixth, 0.0, 3, RULE)


def test_cz_depth_exhausted_carries_partial():
    # a spike concentrated at the rim: nothing selectable by level 2,
    # but every outer-band box still hides hot children
    rule = QuadratureRule(64, 64)

    def spike(z):
        return 101.0 * np.abs(np.asarray(z, dtype=complex)) ** 200

    with pytest.raises(DepthExhausted) as err:
        cz_decompose(spike, 2.3, 2, rule)
    e = err.value
    assert e.partial.selected == ()
    assert [(q.j, q.k, q.l) for q in e.unresolved] == [
        (2, 4, 1), (2, 4, 2), (2, 4, 3), (2, 4, 4)]


# ---------------------------------------------------------------------------
# fair share


def _positive(z):
    return 1.0 + np.abs(np.asarray(z, dtype=complex)) ** 2


def test_fairshare_bound_holds():
    q = DyadicRectangle(1, 2, 1)
    members = [DyadicRectangle(2, 3, 1)]
    lr, mr, lam = fairshare_check(_positive, q, members, 0.3, RULE)
    assert abs(lr - 5.0 / 24.0) < 1e-15
    assert 0.0 < mr <= lam < 1.0


def test_fairshare_validation():
    q = DyadicRectangle(1, 2, 1)
    with pytest.raises(RangeError):
        fairshare_check(_positive, q, [], 0.0, RULE)
    with pytest.raises(RangeError):
        fairshare_check(_positive, q, list(q.children()), 0.3, RULE)
    with pytest.raises(NotSubset):
        fairshare_check(_positive, q, [DyadicRectangle(2, 1, 1)], 0.3,
                        RULE)
    nested = [DyadicRectangle(2, 3, 1), DyadicRectangle(3, 5, 1)]
    with pytest.raises(NotSubset):
        fairshare_check(_positive, q, nested, 0.9, RULE)


# ---------------------------------------------------------------------------
# reverse Hoelder


def test_reverse_holder_coordinate_exact():
    f = PolyMatrixSymbol.scalar(Z)
    cert = reverse_holder(f, 1.0, RULE)
    assert abs(cert.lhs - 1.0 / 3.0) < 1e-12
    assert abs(cert.rhs_base - 0.5) < 1e-12
    assert abs(cert.constant - 4.0 / 3.0) < 1e-10
    assert abs(reverse_holder(f, 2.0, RULE).constant - 2.0) < 1e-10


def test_reverse_holder_search():
    f = PolyMatrixSymbol.scalar(Z)
    cert = reverse_holder_search(f, RULE)
    assert cert.epsilon == 0.5
    assert abs(cert.constant - 1.1313708434615142) < 1e-12
    # the constant never drops to 1 for a non-constant weight
    assert reverse_holder_search(f, RULE, c_max=1.0) is None


def test_reverse_holder_validation():
    f = PolyMatrixSymbol.scalar(Z)
    with pytest.raises(RangeError):
        reverse_holder(f, 0.0, RULE)
    zero = PolyMatrixSymbol.scalar(PowerSeries((0.0,)))
    with pytest.raises(ZeroDenominator):
        reverse_holder(zero, 1.0, RULE)


# ---------------------------------------------------------------------------
# conjugation stability


def test_conjugation_scalar_multiple_exact():
    f = PolyMatrixSymbol.diagonal([PowerSeries((2.0, 1.0)),
                                   PowerSeries((2.0, -1.0))])
    j = HermitianMatrix(2.0 * np.eye(2, dtype=complex))
    assert abs(conjugation_a2_check(f, j, 3, RULE) - 1.0) < 1e-12


def test_conjugation_diag_bounded():
    f = PolyMatrixSymbol.diagonal([PowerSeries((2.0, 1.0)),
                                   PowerSeries((2.0, -1.0))])
    j = HermitianMatrix(np.diag([1.0, 4.0]).astype(complex))
    ratio = conjugation_a2_check(f, j, 3, RULE)
    assert ratio <= f.n ** 2 + 1e-9


def test_conjugation_validation():
    f = PolyMatrixSymbol.diagonal([PowerSeries((2.0, 1.0)),
                                   PowerSeries((2.0, -1.0))])
    with pytest.raises(NotPSD):
        conjugation_a2_check(
            f, HermitianMatrix(np.diag([1.0, 0.0]).astype(complex)), 2,
            RULE)
    with pytest.raises(ValueError):
        conjugation_a2_check(
            f, HermitianMatrix(np.eye(3, dtype=complex)), 2, RULE)


# ---------------------------------------------------------------------------
# weighted averaging projection


def test_weighted_projection_identity_symbol():
    # identity weight, unit constant vector: the ratio is sqrt |Q|
    ident = PolyMatrixSymbol.identity(1)
    vec = VectorPoly([PowerSeries((1.0,))])
    for q in (DyadicRectangle(1, 1, 2), DyadicRectangle(2, 3, 1)):
        r = weighted_projection_ratio(ident, q, vec, RULE)
        assert abs(r - math.sqrt(q.area)) < 1e-12


def test_weighted_projection_contraction_on_constants():
    f = PolyMatrixSymbol.diagonal([PowerSeries((2.0, 1.0)),
                                   PowerSeries((2.0, -1.0))])
    vec = VectorPoly([PowerSeries((1.0,)), PowerSeries((0.5,))])
    for q in (DyadicRectangle(1, 2, 1), DyadicRectangle(2, 2, 3)):
        assert weighted_projection_ratio(f, q, vec, RULE) <= 1.0 + 1e-12


def test_weighted_projection_validation():
    ident = PolyMatrixSymbol.identity(1)
    zero = VectorPoly([PowerSeries((0.0,))])
    with pytest.raises(ZeroDenominator):
        weighted_projection_ratio(ident, DyadicRectangle(1, 1, 1), zero,
                                  RULE)
    with pytest.raises(ValueError):
        weighted_projection_ratio(PolyMatrixSymbol.identity(2),
                                  DyadicRectangle(1, 1, 1),
                                  VectorPoly([PowerSeries((1.0,))]),
                                  RULE)
