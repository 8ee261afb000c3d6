"""Dyadic decomposition of the unit disk and the matrix-weight toolkit
built on it: rectangle averages, matrix A2 constants, weighted averaging
projections, the dyadic maximal function, Calderon-Zygmund selection,
fair-share measure comparison, and reverse-Hoelder certification.

A level-j rectangle Q_{j,k,l} is the polar box

    r in [(k-1) 2^{-j}, k 2^{-j}],  theta in [(l-1) 2^{1-j} pi, l 2^{1-j} pi]

with 1 <= k, l <= 2^j; j = 0 is the whole disk.  Under normalized area
measure |Q| = (2k-1) 2^{-3j} exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (HermitianField, HermitianMatrix, PolyMatrixSymbol,
                   PowerSeries, VectorPoly, hermitian_power, jacobi_eigh,
                   lambda_min)
from .errors import (BadIndex, ComputeBudget, DepthExhausted,
                     DivergenceSuspected, NotPSD, NotSubset, RangeError,
                     ThresholdTooLow, TouchesBoundary, ZeroDenominator)

DEFAULT_MAX_LEVEL = 6
DIVERGENCE_RATIO = 10.0
CZ_UPPER_FACTOR = 8.0
CZ_TOL = 1e-9
REVHOLDER_CAP = 100.0
_ARC_ORDER_CAP = 64
_WHOLE_DISK_CLIP = 1.0 - 2.0 ** -10
_WHOLE_DISK_SAMPLES = 128
_MAXIMAL_RECT_CAP = 200_000


@dataclass(frozen=True)
class DyadicRectangle:
    """Polar dyadic box on the disk, addressed by (level, radial, angular)."""

    j: int
    k: int
    l: int

    def __post_init__(self):
        if self.j < 0:
            raise BadIndex(f"negative level {self.j}")
        top = 1 << self.j
        if not (1 <= self.k <= top):
            raise BadIndex(f"radial index {self.k} not in 1..{top}")
        if not (1 <= self.l <= top):
            raise BadIndex(f"angular index {self.l} not in 1..{top}")

    @property
    def area(self) -> float:
        return (2 * self.k - 1) * 2.0 ** (-3 * self.j)

    @property
    def radial_bounds(self) -> tuple[float, float]:
        h = 2.0 ** (-self.j)
        return ((self.k - 1) * h, self.k * h)

    @property
    def angular_bounds(self) -> tuple[float, float]:
        h = 2.0 ** (1 - self.j) * math.pi
        return ((self.l - 1) * h, self.l * h)

    @property
    def center(self) -> complex:
        r = (self.k - 0.5) * 2.0 ** (-self.j)
        th = (self.l - 0.5) * 2.0 ** (1 - self.j) * math.pi
        return complex(r * math.cos(th), r * math.sin(th))

    def children(self) -> tuple["DyadicRectangle", ...]:
        j, k, l = self.j + 1, self.k, self.l
        return (DyadicRectangle(j, 2 * k - 1, 2 * l - 1),
                DyadicRectangle(j, 2 * k - 1, 2 * l),
                DyadicRectangle(j, 2 * k, 2 * l - 1),
                DyadicRectangle(j, 2 * k, 2 * l))

    def parent(self) -> "DyadicRectangle":
        if self.j == 0:
            raise BadIndex("the whole disk has no parent")
        return DyadicRectangle(self.j - 1, (self.k + 1) // 2,
                               (self.l + 1) // 2)

    def contains(self, z: complex) -> bool:
        """Closed-region membership; shared edges belong to both boxes."""
        z = complex(z)
        r = abs(z)
        r0, r1 = self.radial_bounds
        if not (r0 <= r <= r1):
            return False
        if r == 0.0:
            return self.k == 1
        th = math.atan2(z.imag, z.real) % (2.0 * math.pi)
        t0, t1 = self.angular_bounds
        if t0 <= th <= t1:
            return True
        # the seam theta = 0 == 2 pi belongs to both extreme sectors
        return th == 0.0 and t1 >= 2.0 * math.pi

    @staticmethod
    def root() -> "DyadicRectangle":
        return DyadicRectangle(0, 1, 1)


def rect_geometry(q: DyadicRectangle):
    """(area, center, radial bounds, angular bounds)."""
    return q.area, q.center, q.radial_bounds, q.angular_bounds


def rect_children(q: DyadicRectangle) -> tuple[DyadicRectangle, ...]:
    return q.children()


def rect_contains(q: DyadicRectangle, z: complex) -> bool:
    return q.contains(z)


def level_rectangles(j: int):
    """All rectangles of one level, radial-major, fixed order."""
    top = 1 << j
    for k in range(1, top + 1):
        for l in range(1, top + 1):
            yield DyadicRectangle(j, k, l)


def ancestor_at(q: DyadicRectangle, level: int) -> DyadicRectangle:
    if level > q.j:
        raise BadIndex(f"no ancestor of level {level} above level {q.j}")
    out = q
    while out.j > level:
        out = out.parent()
    return out


def containing_rectangles(z: complex, j: int) -> list[DyadicRectangle]:
    """Level-j rectangles whose closed region contains z.

    Generic points give one box, edge points two or four; the disk
    center belongs to every angular sector of the k = 1 ring.
    """
    z = complex(z)
    r = abs(z)
    if r >= 1.0:
        raise RangeError(f"|z| = {r} is not inside the open disk")
    top = 1 << j
    if r == 0.0:
        return [DyadicRectangle(j, 1, l) for l in range(1, top + 1)]
    ks = {min(max(int(math.floor(r * top)) + d, 1), top) for d in (0, 1)}
    th = math.atan2(z.imag, z.real) % (2.0 * math.pi)
    step = 2.0 * math.pi / top
    ls = {min(max(int(math.floor(th / step)) + d, 1), top) for d in (0, 1)}
    # the theta = 0 seam is shared by the two extreme sectors
    if th < step:
        ls.add(top)
    elif th > 2.0 * math.pi - step:
        ls.add(1)
    out = [DyadicRectangle(j, k, l) for k in sorted(ks) for l in sorted(ls)]
    return [q for q in out if q.contains(z)]


# ---------------------------------------------------------------------------
# rectangle quadrature


_gauss_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    hit = _gauss_cache.get(order)
    if hit is None:
        hit = np.polynomial.legendre.leggauss(order)
        _gauss_cache[order] = hit
    return hit


def rect_nodes(q: DyadicRectangle, rule) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights over Q; weights sum to |Q|.

    Gauss nodes in t = r**2 keep the radial polynomial factors exact;
    the angular arc also gets a Gauss rule because uniform sampling of a
    sub-arc loses the trigonometric exactness it has on the full circle.
    """
    r0, r1 = q.radial_bounds
    t0, t1 = r0 * r0, r1 * r1
    a0, a1 = q.angular_bounds
    xt, wt = _gauss(rule.n_radial)
    t = t0 + 0.5 * (xt + 1.0) * (t1 - t0)
    tw = 0.5 * wt * (t1 - t0)
    order = min(rule.n_angular, _ARC_ORDER_CAP)
    xa, wa = _gauss(order)
    th = a0 + 0.5 * (xa + 1.0) * (a1 - a0)
    aw = 0.5 * wa * (a1 - a0) / (2.0 * math.pi)
    nodes = (np.sqrt(t)[:, None]
             * np.exp(1j * th)[None, :]).ravel()
    weights = (tw[:, None] * aw[None, :]).ravel()
    return nodes, weights


def rect_integral_scalar(field: Callable[[np.ndarray], np.ndarray],
                         q: DyadicRectangle, rule) -> float:
    nodes, weights = rect_nodes(q, rule)
    vals = np.asarray(field(nodes), dtype=float)
    return float(np.sum(vals * weights))


def rect_average_scalar(field: Callable[[np.ndarray], np.ndarray],
                        q: DyadicRectangle, rule) -> float:
    return rect_integral_scalar(field, q, rule) / q.area


def rect_average(field: HermitianField, q: DyadicRectangle,
                 rule) -> HermitianMatrix:
    """(1/|Q|) integral of a Hermitian field over Q."""
    nodes, weights = rect_nodes(q, rule)
    vals = field.sample(nodes)
    m = np.einsum("p,pij->ij", weights, vals) / q.area
    return HermitianMatrix(0.5 * (m + m.conj().T))


# ---------------------------------------------------------------------------
# pseudohyperbolic covering radius


def pseudo_disk_cover(q: DyadicRectangle) -> float:
    """Max pseudohyperbolic distance from the center to the corners —
    the radius of a Mobius disk around z_Q covering the corner set.

    Boundary-touching rectangles (k = 2^j, j > 0) have corners on the
    unit circle and no finite cover.  The whole disk is handled by
    sampling a circle clipped just inside the boundary.
    """
    from .berezin import mobius

    w = q.center
    if q.j == 0:
        th = 2.0 * math.pi * np.arange(_WHOLE_DISK_SAMPLES) \
            / _WHOLE_DISK_SAMPLES
        samples = _WHOLE_DISK_CLIP * np.exp(1j * th)
        return float(np.max(np.abs(mobius(w, samples))))
    if q.k == (1 << q.j):
        raise TouchesBoundary(
            f"rectangle ({q.j},{q.k},{q.l}) touches the unit circle")
    r0, r1 = q.radial_bounds
    a0, a1 = q.angular_bounds
    corners = np.array([r * np.exp(1j * a)
                        for r in (r0, r1) for a in (a0, a1)])
    return float(np.max(np.abs(mobius(w, corners))))


# ---------------------------------------------------------------------------
# matrix A2 machinery


def matrix_two_norm(m: np.ndarray) -> float:
    """Largest singular value via the Jacobi eigensolver on m m*."""
    m = np.asarray(m, dtype=complex)
    w, _ = jacobi_eigh(m @ m.conj().T)
    return math.sqrt(max(float(w[-1]), 0.0))


def a2_expression(avg_gram: HermitianMatrix,
                  avg_inverse: HermitianMatrix) -> float:
    """|| (avg F*F)^{1/2} (avg F^{-1}F^{-*})^{1/2} || for one rectangle."""
    s = hermitian_power(avg_gram, 0.5).data
    t = hermitian_power(avg_inverse, 0.5).data
    return matrix_two_norm(s @ t)


def _tree_cost(max_level: int, rule) -> float:
    rects = ((4 ** (max_level + 1)) - 1) / 3
    return rects * rule.n_radial * min(rule.n_angular, _ARC_ORDER_CAP)


def a2_constant(f: PolyMatrixSymbol, max_level: int, rule,
                budget: float = 1e9):
    """sup over dyadic rectangles (level <= max_level) of the matrix A2
    expression; returns (constant, worst rectangle).

    Raises DivergenceSuspected when the inverse-gram average grows more
    than DIVERGENCE_RATIO-fold between a rectangle and its grandparent
    (nested three-level window) — the signature of a symbol vanishing
    inside the disk, where the true supremum is infinite.
    """
    cost = _tree_cost(max_level, rule)
    if cost > budget:
        raise ComputeBudget(
            f"A2 scan needs {cost:.3e} node evaluations, budget "
            f"{budget:.3e}")
    gram = HermitianField.gram(f)
    inverse = HermitianField.inverse_gram(f)
    best = -1.0
    worst = DyadicRectangle.root()

    def visit(q: DyadicRectangle, chain: tuple[float, ...]):
        nonlocal best, worst
        s = rect_average(gram, q, rule)
        t = rect_average(inverse, q, rule)
        trace_t = t.trace()
        chain = chain + (trace_t,)
        if len(chain) >= 3 and chain[-1] > DIVERGENCE_RATIO * chain[-3]:
            raise DivergenceSuspected(
                f"inverse gram average grew {chain[-1] / chain[-3]:.2f}x "
                f"from level {q.j - 2} to level {q.j} on the nested chain "
                f"ending at ({q.j},{q.k},{q.l})")
        c = a2_expression(s, t)
        if c > best:
            best = c
            worst = q
        if q.j < max_level:
            for child in q.children():
                visit(child, chain)

    visit(DyadicRectangle.root(), ())
    return best, worst


def scalar_a2_on(field: Callable[[np.ndarray], np.ndarray],
                 q: DyadicRectangle, rule) -> float:
    """avg_Q(f) * avg_Q(1/f) for a positive scalar field."""
    nodes, weights = rect_nodes(q, rule)
    vals = np.asarray(field(nodes), dtype=float)
    if np.min(vals) <= 0.0:
        raise ZeroDenominator("scalar A2 needs a strictly positive field")
    a = float(np.sum(vals * weights)) / q.area
    b = float(np.sum(weights / vals)) / q.area
    return a * b


def scalar_a2_constant(field: Callable[[np.ndarray], np.ndarray],
                       max_level: int, rule,
                       budget: float = 1e9):
    """sup of the scalar A2 expression over the tree; (constant, worst)."""
    cost = _tree_cost(max_level, rule)
    if cost > budget:
        raise ComputeBudget(
            f"A2 scan needs {cost:.3e} node evaluations, budget "
            f"{budget:.3e}")
    best = -1.0
    worst = DyadicRectangle.root()
    for j in range(max_level + 1):
        for q in level_rectangles(j):
            c = scalar_a2_on(field, q, rule)
            if c > best:
                best, worst = c, q
    return best, worst


def weighted_projection_ratio(f: PolyMatrixSymbol, q: DyadicRectangle,
                              vec: VectorPoly, rule) -> float:
    """||P_Q vec|| / ||vec|| in L2(F*F), with P_Q the averaging
    projection chi_Q (1/|Q|) int_Q."""
    if vec.n != f.n:
        raise ValueError("vector dimension does not match the symbol")
    nodes, weights = rect_nodes(q, rule)
    m = f.eval_at(nodes)
    gram_q = np.einsum("pki,pkj->pij", m.conj(), m)
    fv = vec(nodes)
    c = np.einsum("p,pi->i", weights, fv) / q.area
    num = float(np.einsum("p,pij,j,i->", weights, gram_q, c,
                          c.conj()).real)
    mg = f.eval_at(rule.nodes)
    gram_full = np.einsum("pki,pkj->pij", mg.conj(), mg)
    gv = vec(rule.nodes)
    den = float(np.einsum("p,pij,pj,pi->", rule.weights, gram_full, gv,
                          gv.conj()).real)
    if den <= 0.0:
        raise ZeroDenominator("vector has zero weighted norm")
    return math.sqrt(max(num, 0.0) / den)


# ---------------------------------------------------------------------------
# maximal function and Calderon-Zygmund selection


def dyadic_maximal(field: Callable[[np.ndarray], np.ndarray], z: complex,
                   max_level: int, rule) -> float:
    """max over dyadic rectangles containing z with level <= max_level
    of the rectangle average."""
    z = complex(z)
    if abs(z) >= 1.0:
        raise RangeError("maximal function point must be inside the disk")
    best = -math.inf
    count = 0
    for j in range(max_level + 1):
        rects = containing_rectangles(z, j)
        count += len(rects)
        if count > _MAXIMAL_RECT_CAP:
            raise ComputeBudget(
                f"maximal function would average {count}+ rectangles")
        for q in rects:
            best = max(best, rect_average_scalar(field, q, rule))
    return best


@dataclass(frozen=True)
class CZDecomposition:
    """Stopping-time selection at threshold t: maximal dyadic rectangles
    whose average exceeds t; averages land in (t, 8t]."""

    threshold: float
    selected: tuple[DyadicRectangle, ...]
    averages: tuple[float, ...]

    def total_area(self) -> float:
        return float(sum(q.area for q in self.selected))


def cz_decompose(field: Callable[[np.ndarray], np.ndarray], t: float,
                 max_level: int, rule) -> CZDecomposition:
    """Select the maximal dyadic rectangles with average > t.

    The tree is descended from the whole disk; a child whose average
    exceeds t is selected and not refined further, so selected
    rectangles are pairwise disjoint and their parents all average <= t,
    which sandwiches every selected average in (t, 8t] via the <= 8
    parent/child area ratio.

    Unselected level-J leaves whose average exceeds t/8 could still hide
    selectable children; those are probed one level deeper and any hit
    raises DepthExhausted carrying the partial decomposition.
    """
    if t <= 0.0:
        raise RangeError("threshold must be positive")
    root = DyadicRectangle.root()
    global_avg = rect_average_scalar(field, root, rule)
    if global_avg > t * (1.0 + 1e-12):
        raise ThresholdTooLow(
            f"global average {global_avg:.6g} exceeds threshold {t:.6g}")
    selected: list[DyadicRectangle] = []
    averages: list[float] = []
    frontier: list[tuple[DyadicRectangle, float]] = []

    def visit(q: DyadicRectangle, avg: float):
        if q.j >= max_level:
            frontier.append((q, avg))
            return
        for child in q.children():
            child_avg = rect_average_scalar(field, child, rule)
            if child_avg > t:
                if child_avg >= CZ_UPPER_FACTOR * t + CZ_TOL:
                    raise RuntimeError(
                        f"selected average {child_avg:.6g} breaks the "
                        f"8t sandwich at ({child.j},{child.k},{child.l})")
                selected.append(child)
                averages.append(child_avg)
            else:
                visit(child, child_avg)

    visit(root, global_avg)
    unresolved = []
    for q, avg in frontier:
        if avg > t / CZ_UPPER_FACTOR:
            for child in q.children():
                if rect_average_scalar(field, child, rule) > t:
                    unresolved.append(q)
                    break
    partial = CZDecomposition(float(t), tuple(selected), tuple(averages))
    if unresolved:
        raise DepthExhausted(
            f"{len(unresolved)} level-{max_level} rectangles still hide "
            f"averages above the threshold", partial=partial,
            unresolved=tuple(unresolved))
    return partial


# ---------------------------------------------------------------------------
# fair-share comparison and reverse Hoelder


def _check_disjoint_members(qs: Sequence[DyadicRectangle]):
    seen = set()
    for q in qs:
        key = (q.j, q.k, q.l)
        if key in seen:
            raise NotSubset(f"duplicate member {key}")
        seen.add(key)
    for i, a in enumerate(qs):
        for b in qs[i + 1:]:
            lo, hi = (a, b) if a.j <= b.j else (b, a)
            if ancestor_at(hi, lo.j) == lo:
                raise NotSubset(
                    f"members ({lo.j},{lo.k},{lo.l}) and "
                    f"({hi.j},{hi.k},{hi.l}) overlap")


def fairshare_check(field: Callable[[np.ndarray], np.ndarray],
                    q: DyadicRectangle,
                    members: Sequence[DyadicRectangle], delta: float,
                    rule):
    """Fair-share comparison for dmu = field dA on E = union(members).

    Returns (lebesgue_ratio, mu_ratio, lambda_bound) with
    lambda_bound = 1 - (1-delta)^2 / C and C the scalar A2 expression of
    the field on Q itself; |E| <= delta |Q| forces
    mu(E) <= lambda_bound * mu(Q).
    """
    if not (0.0 < delta < 1.0):
        raise RangeError("delta must lie in (0, 1)")
    members = list(members)
    for e in members:
        if e.j < q.j or ancestor_at(e, q.j) != q:
            raise NotSubset(
                f"({e.j},{e.k},{e.l}) is not inside ({q.j},{q.k},{q.l})")
    _check_disjoint_members(members)
    area_e = sum(e.area for e in members)
    lebesgue_ratio = area_e / q.area
    if lebesgue_ratio > delta * (1.0 + 1e-12):
        raise RangeError(
            f"members cover {lebesgue_ratio:.6g} of Q, above delta = "
            f"{delta}")
    c = scalar_a2_on(field, q, rule)
    lam = 1.0 - (1.0 - delta) ** 2 / c
    mu_q = rect_integral_scalar(field, q, rule)
    mu_e = sum(rect_integral_scalar(field, e, rule) for e in members)
    mu_ratio = mu_e / mu_q if members else 0.0
    return float(lebesgue_ratio), float(mu_ratio), float(lam)


@dataclass(frozen=True)
class ReverseHolderCertificate:
    """Certifies int tr(F*F)^{1+eps} <= C (int tr(F*F))^{1+eps}."""

    epsilon: float
    lhs: float
    rhs_base: float
    constant: float


def reverse_holder(f: PolyMatrixSymbol, epsilon: float,
                   rule) -> ReverseHolderCertificate:
    """Both sides of the reverse-Hoelder inequality by quadrature, and
    the implied constant C = lhs / rhs_base^{1+eps}."""
    if epsilon <= 0.0:
        raise RangeError("epsilon must be positive")
    m = f.eval_at(rule.nodes)
    tr = np.einsum("pki,pki->p", m.conj(), m).real
    lhs = float(np.sum(tr ** (1.0 + epsilon) * rule.weights))
    rhs_base = float(np.sum(tr * rule.weights))
    if rhs_base <= 0.0:
        raise ZeroDenominator("zero symbol has no certificate")
    return ReverseHolderCertificate(float(epsilon), lhs, rhs_base,
                                    lhs / rhs_base ** (1.0 + epsilon))


def reverse_holder_search(f: PolyMatrixSymbol, rule,
                          c_max: float = REVHOLDER_CAP):
    """Largest dyadic epsilon in {2^-1 .. 2^-10} whose certificate
    constant stays below c_max; None if even 2^-10 blows the cap."""
    for m in range(1, 11):
        cert = reverse_holder(f, 2.0 ** -m, rule)
        if cert.constant <= c_max:
            return cert
    return None


# ---------------------------------------------------------------------------
# conjugation stability


def _right_multiply(f: PolyMatrixSymbol,
                    m: np.ndarray) -> PolyMatrixSymbol:
    """Symbol times a constant matrix, entrywise polynomial arithmetic."""
    n = f.n
    rows = []
    for i in range(n):
        row = []
        for jcol in range(n):
            acc = PowerSeries.zero()
            for k in range(n):
                acc = acc + f.entries[i][k].scale(complex(m[k, jcol]))
            row.append(acc)
        rows.append(row)
    return PolyMatrixSymbol(rows)


def conjugation_a2_check(f: PolyMatrixSymbol, j_matrix: HermitianMatrix,
                         max_level: int, rule,
                         budget: float = 1e9) -> float:
    """A2 constant of J F*F J over the A2 constant of F*F.

    J must be positive definite; the conjugated weight is the gram of
    the symbol F J.  Scalar multiples of the identity leave the ratio at
    exactly 1.
    """
    if j_matrix.n != f.n:
        raise ValueError("conjugator dimension mismatch")
    if lambda_min(j_matrix.data) <= 0.0:
        raise NotPSD("conjugator must be positive definite")
    base, _ = a2_constant(f, max_level, rule, budget=budget)
    conj, _ = a2_constant(_right_multiply(f, j_matrix.data), max_level,
                          rule, budget=budget)
    return conj / base
