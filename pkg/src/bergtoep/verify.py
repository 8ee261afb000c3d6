"""End-to-end verification checklist.

Thirteen numbered checks exercise the identities and inequality chains
the library is built on, each at an explicit tolerance.  The acceptance
tests and the CLI ``verify`` command both call into this module, so
there is exactly one definition of what a healthy install means.

Every check is deterministic: randomness comes from fixed seeds, and
quadrature sizes are pinned per check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .berezin import (QuadratureRule, WGrid, berezin_gram,
                      berezin_gram_grid, kernel_weight,
                      mobius_invariance_residual, normalized_kernel)
from .conditions import (ConditionParams, calibrated_derivative_constant,
                         classify, coanalytic_apply, derivative_term_audit,
                         double_integral_values, holder_bound_audit,
                         necessary_values)
from .core import (HermitianField, HermitianMatrix, PolyMatrixSymbol,
                   PowerSeries, VectorPoly, gram_at,
                   ip_via_derivative_formula, jacobi_eigh,
                   trace_gram_field)
from .corpus import (audit_trials, random_point, random_symbol,
                     random_vector_poly, standard_pairs,
                     trace_corpus_pairs, zero_free_symbols)
from .dyadic import (DyadicRectangle, a2_constant, a2_expression,
                     conjugation_a2_check, cz_decompose, dyadic_maximal,
                     level_rectangles, rect_average, reverse_holder,
                     weighted_projection_ratio)
from .errors import DivergenceSuspected
from .toeplitz import (operator_norm, park_residual, product_restricted,
                       rank_one, rank_one_trace)


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str


def _result(number: int, name: str, passed: bool,
            detail: str) -> CheckResult:
    return CheckResult(number, name, bool(passed), detail)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-30)


# ---------------------------------------------------------------------------
# 1. inner-product formula


def check_inner_product() -> CheckResult:
    """Derivative-weighted inner-product identity: exact on monomials
    (value 1/(a+1)) and on random vector polynomials, residual 1e-12."""
    worst = 0.0
    for a in range(21):
        mono = VectorPoly([PowerSeries.monomial(a)])
        lhs, rhs, res = ip_via_derivative_formula(mono, mono)
        worst = max(worst, res, abs(lhs - 1.0 / (a + 1)))
    for i in range(100):
        n = 1 + i % 3
        f = random_vector_poly(n, 8, 11_000 + 2 * i)
        g = random_vector_poly(n, 8, 11_001 + 2 * i)
        _, _, res = ip_via_derivative_formula(f, g)
        worst = max(worst, res)
    return _result(1, "inner-product formula", worst <= 1e-12,
                   f"max residual {worst:.3e} (tol 1e-12)")


# ---------------------------------------------------------------------------
# 2. trace factorization


def check_trace_factorization() -> CheckResult:
    """rank_one_trace against the assembled matrix trace of
    (F x G)(G x F); scalar z gives exactly 1/4."""
    worst = 0.0
    for f, g in trace_corpus_pairs(50):
        k = f.degree + g.degree + 2
        t_sum = rank_one_trace(f, g)
        a = rank_one(f, g, k).matrix
        b = rank_one(g, f, k).matrix
        t_mat = float(np.trace(a @ b).real)
        worst = max(worst, _rel(t_sum, t_mat))
    z = PolyMatrixSymbol.scalar(PowerSeries((0.0, 1.0)))
    exact = rank_one_trace(z, z)
    ok = worst <= 1e-10 and exact == 0.25
    return _result(2, "trace factorization", ok,
                   f"max rel {worst:.3e} (tol 1e-10), z-symbol trace "
                   f"{exact!r}")


# ---------------------------------------------------------------------------
# 3. shift decomposition


def check_shift_identity() -> CheckResult:
    """Three-term shift decomposition of F x G, residual 1e-10 at
    window deg F + deg G + 6."""
    worst = 0.0
    for f, g in trace_corpus_pairs(50):
        worst = max(worst, park_residual(f, g, f.degree + g.degree + 6))
    return _result(3, "shift decomposition", worst <= 1e-10,
                   f"max residual {worst:.3e} (tol 1e-10)")


# ---------------------------------------------------------------------------
# 4. reproducing identity for the rank-one pairing


def check_reproducing_identity() -> CheckResult:
    """<(G k_w x F k_w) u, v> equals (1-|w|^2)^2
    <(T_{F*}u)(w), (T_{G*}v)(w)>, quadrature vs exact series."""
    rule = QuadratureRule(96, 256)
    z = rule.nodes
    worst = 0.0
    for f, g, u, v, w in audit_trials(20, seed0=41_000):
        ck = np.conj(normalized_kernel(w, z))
        fv = f.eval_at(z)
        gv = g.eval_at(z)
        cf = np.einsum("p,p,pji,pj->i", rule.weights, ck, fv.conj(), u(z))
        cg = np.einsum("p,p,pji,pj->i", rule.weights, ck, gv.conj(), v(z))
        lhs = complex(np.sum(cf * np.conj(cg)))
        tu = coanalytic_apply(f, u)(complex(w))
        tv = coanalytic_apply(g, v)(complex(w))
        rhs = (1.0 - abs(w) ** 2) ** 2 * complex(np.sum(tu * np.conj(tv)))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12))
    return _result(4, "reproducing identity", worst <= 1e-7,
                   f"max rel {worst:.3e} (tol 1e-7, N_r=96, N_theta=256)")


# ---------------------------------------------------------------------------
# 5. rank-one / transform link


def check_rank_one_link() -> CheckResult:
    """tr(B(G*G)(w) B(F*F)(w)) against the kernel-weighted quadruple
    sum of entry inner products."""
    rule = QuadratureRule(64, 256)
    z = rule.nodes
    pairs = [(f, g) for _, f, g in standard_pairs()]
    worst = 0.0
    for i in range(20):
        f, g = pairs[i % len(pairs)]
        w = random_point(51_000 + i, r_max=0.8)
        series = float(np.einsum(
            "ij,ji->", berezin_gram(g, w).data,
            berezin_gram(f, w).data).real)
        wts = kernel_weight(w, z) * rule.weights
        wts /= wts.sum()
        fv = f.eval_at(z)
        gv = g.eval_at(z)
        bf = np.einsum("p,pqr,pql->rl", wts, fv.conj(), fv)
        bg = np.einsum("p,pqr,pql->rl", wts, gv.conj(), gv)
        quad = float(np.einsum("ij,ji->", bg, bf).real)
        worst = max(worst, _rel(series, quad))
    return _result(5, "rank-one / transform link", worst <= 1e-8,
                   f"max rel {worst:.3e} (tol 1e-8)")


# ---------------------------------------------------------------------------
# 6. transform backends


def check_transform_backends() -> CheckResult:
    """Series vs quadrature transforms, constants mapping to one on the
    sampling grid, and the change-of-variables residual."""
    rule = QuadratureRule(64, 320)
    z = rule.nodes
    worst_ab = 0.0
    for idx, (_, f, _) in enumerate(standard_pairs()):
        for k in range(3):
            w = random_point(53_000 + 10 * idx + k, r_max=0.9)
            series = berezin_gram(f, w).data
            wts = kernel_weight(w, z) * rule.weights
            wts /= wts.sum()
            fv = f.eval_at(z)
            quad = np.einsum("p,pqr,pql->rl", wts, fv.conj(), fv)
            worst_ab = max(worst_ab, float(np.max(np.abs(series - quad))))

    grid = WGrid(6)
    one = PolyMatrixSymbol.identity(1)
    vals = berezin_gram_grid(one, grid)
    worst_const = float(np.max(np.abs(vals - 1.0)))

    mrule = QuadratureRule(96, 256)
    worst_mob = 0.0
    for idx, (_, f, _) in enumerate(standard_pairs()[:5]):
        for k in range(2):
            w = random_point(54_000 + 10 * idx + k, r_max=0.8)
            worst_mob = max(worst_mob,
                            mobius_invariance_residual(f, w, mrule))

    ok = worst_ab <= 1e-9 and worst_const <= 1e-12 and worst_mob <= 1e-7
    return _result(6, "transform backends", ok,
                   f"series-vs-quadrature {worst_ab:.3e} (tol 1e-9), "
                   f"constant drift {worst_const:.3e} (tol 1e-12), "
                   f"invariance residual {worst_mob:.3e} (tol 1e-7)")


# ---------------------------------------------------------------------------
# 7. pointwise domination


def check_pointwise_domination() -> CheckResult:
    """F(w)*F(w) below B(F*F)(w) in the semidefinite order, plus the
    local 1/(1-s^2)^2 comparison with the full-disk average, s = 1/2."""
    worst = math.inf
    for i in range(200):
        n = 1 + i % 3
        f = random_symbol(n, 1 + i % 4, 61_000 + i)
        w = random_point(62_000 + i, r_max=0.9)
        diff = berezin_gram(f, w).data - gram_at(f, w).data
        ev, _ = jacobi_eigh(diff)
        worst = min(worst, float(ev[0]))

    eta = 1.0 / (1.0 - 0.25) ** 2
    worst_local = math.inf
    for i in range(50):
        n = 1 + i % 3
        f = random_symbol(n, 1 + i % 4, 63_000 + i)
        w = random_point(64_000 + i, r_max=0.5)
        whole = berezin_gram(f, 0.0).data
        ev, _ = jacobi_eigh(eta * whole - gram_at(f, w).data)
        worst_local = min(worst_local, float(ev[0]))

    ok = worst >= -1e-9 and worst_local >= -1e-9
    return _result(7, "pointwise domination", ok,
                   f"min slack {worst:.3e}, local min slack "
                   f"{worst_local:.3e} (tol -1e-9)")


# ---------------------------------------------------------------------------
# 8. condition ordering


def check_condition_ordering() -> CheckResult:
    """Necessary functional below the squared double-integral functional
    pointwise on the sampling grid, eps = 1, whole corpus."""
    grid = WGrid(3)
    params = ConditionParams(epsilon=1.0, grid=grid,
                             rule=QuadratureRule(32, 256))
    worst = 0.0
    worst_name = ""
    ok = True
    for name, f, g in standard_pairs():
        nec = necessary_values(f, g, grid)
        dom = double_integral_values(f, g, params, budget=1e11)
        bound = dom * dom * (1.0 + 1e-6) + 1e-15
        if not np.all(nec <= bound):
            ok = False
        ratio = float(np.max(nec / np.maximum(dom * dom, 1e-300)))
        if ratio > worst:
            worst, worst_name = ratio, name
    return _result(8, "condition ordering", ok,
                   f"max ratio {worst:.12f} at {worst_name} "
                   f"(allowed 1+1e-6)")


# ---------------------------------------------------------------------------
# 9. dyadic geometry


def check_dyadic_geometry() -> CheckResult:
    """Level areas, the boundary-box area formula, the selection
    sandwich, and the two-sided maximal comparison at the origin."""
    worst_area = 0.0
    for j in range(9):
        total = math.fsum(q.area for q in level_rectangles(j))
        worst_area = max(worst_area, abs(total - 1.0))

    boundary_exact = True
    for j in range(7):
        k = 2 ** j
        for el in (1, max(1, 2 ** j // 2), 2 ** j):
            q = DyadicRectangle(j, k, el)
            r0, r1 = q.radial_bounds
            r = (r0 + r1) / 2.0
            if q.area != 8.0 * r * (1.0 - r) ** 2:
                boundary_exact = False

    rule = QuadratureRule(32, 64)
    cubic = PolyMatrixSymbol.scalar(PowerSeries((0, 0, 0, 4.0)))
    field = trace_gram_field(cubic)
    cz = cz_decompose(field, 4.0, 4, rule)
    sandwich = len(cz.selected) > 0 and all(
        4.0 < avg < 32.0 + 1e-9 for avg in cz.averages)

    two_sided = True
    margin = math.inf
    probes = [f for _, f, _ in standard_pairs()[:3]]
    for f in probes:
        tr_field = trace_gram_field(f)
        whole = float(berezin_gram(f, 0.0).trace().real)
        m = dyadic_maximal(tr_field, 0.0, 6, rule)
        lower = m - whole
        upper = (4.0 / 3.0) ** 2 * whole - m
        margin = min(margin, lower, upper)
        if lower < -1e-9 or upper < -1e-9:
            two_sided = False

    ok = (worst_area <= 1e-12 and boundary_exact and sandwich
          and two_sided)
    return _result(9, "dyadic geometry", ok,
                   f"area drift {worst_area:.3e}, boundary formula "
                   f"{'exact' if boundary_exact else 'BROKEN'}, "
                   f"sandwich {'ok' if sandwich else 'BROKEN'} "
                   f"({len(cz.selected)} boxes), maximal margin "
                   f"{margin:.3e}")


# ---------------------------------------------------------------------------
# 10. matrix A2 machinery


def check_a2_machinery() -> CheckResult:
    """Unit constant for the identity, divergence detection for a
    vanishing symbol, the projection bound, and conjugation ratios."""
    rule = QuadratureRule(24, 48)
    const, _ = a2_constant(PolyMatrixSymbol.identity(2), 4, rule)
    ident_ok = abs(const - 1.0) <= 1e-12

    z = PolyMatrixSymbol.scalar(PowerSeries((0.0, 1.0)))
    try:
        a2_constant(z, 6, rule)
        diverged = False
    except DivergenceSuspected:
        diverged = True

    pool = zero_free_symbols()
    rng = np.random.default_rng(55_000)
    min_slack = math.inf
    for i in range(200):
        _, f = pool[i % len(pool)]
        j = int(rng.integers(1, 4))
        q = DyadicRectangle(j, int(rng.integers(1, 2 ** j + 1)),
                            int(rng.integers(1, 2 ** j + 1)))
        vec = random_vector_poly(f.n, 0, 56_000 + i)
        ratio = weighted_projection_ratio(f, q, vec, rule)
        s = rect_average(HermitianField.gram(f), q, rule)
        t = rect_average(HermitianField.inverse_gram(f), q, rule)
        min_slack = min(min_slack, a2_expression(s, t) + 1e-6 - ratio)
    projection_ok = min_slack >= 0.0

    dsym = dict(pool)["diag-2pz-2mz"]
    scalar_j = HermitianMatrix(2.0 * np.eye(2))
    scalar_drift = abs(conjugation_a2_check(dsym, scalar_j, 3, rule) - 1.0)

    diag_ok = True
    worst_diag = 0.0
    for name, f in pool:
        if f.n < 2:
            continue
        diag = HermitianMatrix(np.diag(
            np.arange(1.0, f.n + 1.0) ** 2))
        ratio = conjugation_a2_check(f, diag, 3, rule)
        worst_diag = max(worst_diag, ratio)
        if ratio > f.n ** 2 + 1e-9:
            diag_ok = False

    ok = (ident_ok and diverged and projection_ok
          and scalar_drift <= 1e-12 and diag_ok)
    return _result(10, "matrix A2 machinery", ok,
                   f"identity constant drift {abs(const - 1.0):.3e}, "
                   f"divergence {'detected' if diverged else 'MISSED'}, "
                   f"projection slack {min_slack:.3e}, scalar-J drift "
                   f"{scalar_drift:.3e}, diag-J max ratio "
                   f"{worst_diag:.6f}")


# ---------------------------------------------------------------------------
# 11. reverse Hoelder certificates


def check_reverse_holder() -> CheckResult:
    """Closed-form certificate 4/3 for the coordinate symbol and
    refinement stability for an affine symbol."""
    z = PolyMatrixSymbol.scalar(PowerSeries((0.0, 1.0)))
    cert = reverse_holder(z, 1.0, QuadratureRule(32, 64))
    drift = abs(cert.constant - 4.0 / 3.0)

    affine = PolyMatrixSymbol.scalar(PowerSeries((2.0, 1.0)))
    consts = [reverse_holder(affine, 1.0, QuadratureRule(nr, 2 * nr)).constant
              for nr in (32, 64, 96)]
    stab = max(consts) - min(consts)
    ok = drift <= 1e-10 and stab <= 1e-8
    return _result(11, "reverse Hoelder certificates", ok,
                   f"coordinate-symbol drift {drift:.3e} (tol 1e-10), "
                   f"refinement drift {stab:.3e} (tol 1e-8)")


# ---------------------------------------------------------------------------
# 12. classify end to end


def check_classify_end_to_end() -> CheckResult:
    """Identity pair fully certified, a degenerate diagonal loses the
    floor flag, and truncated product norms grow with the window."""
    params = ConditionParams(epsilon=1.0, grid=WGrid(3),
                             rule=QuadratureRule(32, 128))
    ident = PolyMatrixSymbol.identity(2)
    rep = classify(ident, ident, params)
    ident_ok = (all(rep.flags.values()) and not rep.errors
                and all(abs(v - 1.0) <= 1e-12
                        for _, v in rep.truncated_norms))

    z = PowerSeries((0.0, 1.0))
    degen = PolyMatrixSymbol.diagonal([PowerSeries((1.0,)), z])
    rep2 = classify(degen, ident, params)
    degen_ok = (not rep2.flags["floor_positive"]
                and not rep2.flags["invertible"])

    min_step = math.inf
    for _, f, g in standard_pairs():
        norms = [operator_norm(product_restricted(f, g, k), tol=1e-13)
                 for k in (8, 16, 32)]
        min_step = min(min_step, norms[1] - norms[0],
                       norms[2] - norms[1])
    monotone_ok = min_step >= -1e-12

    ok = ident_ok and degen_ok and monotone_ok
    return _result(12, "classify end to end", ok,
                   f"identity flags {'ok' if ident_ok else 'BROKEN'}, "
                   f"degenerate floor flag "
                   f"{'ok' if degen_ok else 'BROKEN'}, min norm step "
                   f"{min_step:.3e} (slack 1e-12)")


# ---------------------------------------------------------------------------
# 13. integral bound audits


def check_bound_audits() -> CheckResult:
    """Hoelder-split and derivative-pairing audits hold on 100 fresh
    trials each, the latter with the calibrated constant."""
    params = ConditionParams(epsilon=1.0, rule=QuadratureRule(64, 128))
    constant = calibrated_derivative_constant(params)

    min_holder = math.inf
    for f, _, u, _, w in audit_trials(100, seed0=71_000):
        h = trace_gram_field(f)
        lhs, rhs = holder_bound_audit(h, u.components[0], w, params)
        min_holder = min(min_holder, rhs - lhs)

    cache: dict = {}
    min_deriv = math.inf
    for f, g, u, v, w in audit_trials(100, seed0=77_000):
        lhs, rhs, _ = derivative_term_audit(f, g, u, v, w, params,
                                            constant=constant,
                                            _cache=cache)
        min_deriv = min(min_deriv, rhs - lhs)

    ok = min_holder >= 0.0 and min_deriv >= 0.0
    return _result(13, "integral bound audits", ok,
                   f"Hoelder min margin {min_holder:.3e}, derivative "
                   f"min margin {min_deriv:.3e}, calibrated constant "
                   f"{constant:.12f}")


# ---------------------------------------------------------------------------

ALL_CHECKS = (
    check_inner_product,
    check_trace_factorization,
    check_shift_identity,
    check_reproducing_identity,
    check_rank_one_link,
    check_transform_backends,
    check_pointwise_domination,
    check_condition_ordering,
    check_dyadic_geometry,
    check_a2_machinery,
    check_reverse_holder,
    check_classify_end_to_end,
    check_bound_audits,
)


def run_check(fn) -> CheckResult:
    """Run one checklist entry, turning an escaped exception into a
    failed result rather than aborting the whole sweep."""
    try:
        return fn()
    except Exception as exc:  # noqa: BLE001 - report, don't crash
        number = len(ALL_CHECKS) + 1
        for i, candidate in enumerate(ALL_CHECKS, start=1):
            if candidate is fn:
                number = i
        return CheckResult(number, fn.__name__, False,
                           f"raised {type(exc).__name__}: {exc}")


def run_all() -> list[CheckResult]:
    return [run_check(fn) for fn in ALL_CHECKS]


def format_result(r: CheckResult) -> str:
    tag = "PASS" if r.passed else "FAIL"
    return f"[{tag}] {r.number:02d} {r.name}: {r.detail}"
