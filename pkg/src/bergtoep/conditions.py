"""Boundedness and invertibility condition functionals for truncated
Toeplitz products T_F T_{G*}.

Three functionals are evaluated over a hyperbolic evaluation grid:

  necessary(w)   = tr( B(F*F)(w) B(G*G)(w) )                (exact series)
  sufficient(w)  = tr( B((F*F)^p)(w) B((G*G)^p)(w) ),       p = (2+eps)/2
  floor          = min_z lambda_min( (F G* G F*)(z) )

together with the double-integral variant of the sufficient condition
and two quantitative bound audits (a Hoelder-split bound and a
derivative-term bound with a calibrated constant).  Grid suprema are
reported as evidence on the grid; no limit extrapolation is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .berezin import QuadratureRule, WGrid, berezin_gram_grid, \
    berezin_power_gram, default_rule, kernel_weight, p0_transform
from .core import HermitianField, PolyMatrixSymbol, PowerSeries, VectorPoly, \
    jacobi_eigh
from .errors import ComputeBudget, NonRealTrace, RangeError
from .toeplitz import coanalytic_toeplitz, operator_norm, product_restricted

DEFAULT_BUDGET = 1_000_000_000
TRACE_IMAG_TOL = 1e-9
_NORM_TOL = 1e-13


@dataclass
class ConditionParams:
    """Shared knobs for the condition functionals.

    delta is the Hoelder conjugate exponent of 2 + epsilon over the
    audit split; it is always recomputed from epsilon.
    """

    epsilon: float = 1.0
    eta: float = 1e-9
    grid: WGrid = field(default_factory=WGrid)
    rule: QuadratureRule = field(default_factory=lambda: default_rule(4))

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise RangeError("epsilon must be positive")
        if not (self.eta > 0.0):
            raise RangeError("eta must be positive")

    @property
    def delta(self) -> float:
        return (2.0 + self.epsilon) / (1.0 + self.epsilon)

    @property
    def power(self) -> float:
        return (2.0 + self.epsilon) / 2.0


def _trace_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise tr(A B) for stacks of matrices; enforces realness."""
    tr = np.einsum("...ij,...ji->...", a, b)
    bad = np.max(np.abs(tr.imag)) if tr.size else 0.0
    if bad > TRACE_IMAG_TOL * max(1.0, float(np.max(np.abs(tr)))):
        raise NonRealTrace(f"trace imaginary part {bad:.3e}")
    return tr.real


def _ring_profile(grid: WGrid, values: np.ndarray):
    return [(grid.radii[j], float(np.max(values[grid.ring_slices[j]])))
            for j in range(grid.j_max + 1)]


def necessary_values(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                     grid: WGrid) -> np.ndarray:
    """tr(B(F*F) B(G*G)) at every grid point, exact-series route."""
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    bf = berezin_gram_grid(f, grid)
    bg = berezin_gram_grid(g, grid)
    return _trace_product(bf, bg)


def necessary_sup(f: PolyMatrixSymbol, g: PolyMatrixSymbol, grid: WGrid):
    """Grid supremum of tr(B(F*F) B(G*G)), exact-series route.

    Returns (sup, argmax point, per-ring profile).
    """
    vals = necessary_values(f, g, grid)
    i = int(np.argmax(vals))
    return float(vals[i]), complex(grid.points[i]), _ring_profile(grid, vals)


def _berezin_power_on_grid(f: PolyMatrixSymbol, p: float, grid: WGrid,
                           rule: QuadratureRule,
                           cache: dict | None) -> np.ndarray:
    """B((F*F)^p) at every grid point by quadrature, vectorized per ring."""
    if cache is not None:
        key = (id(f), float(p), id(rule))
        fld = cache.get(key)
        if fld is None:
            fld = HermitianField.gram_power(f, p)
            cache[key] = fld
    else:
        fld = HermitianField.gram_power(f, p)
    vals = fld.values_on_rule(rule)          # (P, n, n)
    out = np.empty((len(grid), f.n, f.n), dtype=complex)
    for j in range(grid.j_max + 1):
        ws = grid.ring_points(j)
        kw = np.stack([kernel_weight(w, rule.nodes) * rule.weights
                       for w in ws])
        kw /= kw.sum(axis=1)[:, None]
        block = np.einsum("wp,pij->wij", kw, vals)
        out[grid.ring_slices[j]] = 0.5 * (block
                                          + block.conj().transpose(0, 2, 1))
    return out


def sufficient_eps_values(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                          params: ConditionParams,
                          _cache: dict | None = None) -> np.ndarray:
    """tr(B((F*F)^p) B((G*G)^p)) at every grid point, p = (2+eps)/2.

    Matrix powers force the quadrature route.
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    p = params.power
    bf = _berezin_power_on_grid(f, p, params.grid, params.rule, _cache)
    bg = _berezin_power_on_grid(g, p, params.grid, params.rule, _cache)
    return _trace_product(bf, bg)


def sufficient_eps(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                   params: ConditionParams, _cache: dict | None = None):
    """Grid supremum of the power-transformed trace functional.

    Returns (sup, profile).
    """
    vals = sufficient_eps_values(f, g, params, _cache=_cache)
    return float(np.max(vals)), _ring_profile(params.grid, vals)


def _elementwise_power(m: np.ndarray, p: float) -> None:
    """In-place m **= p with fast paths for the common half-integer
    exponents (eps = 1 gives p = 3/2, eps = 2 gives p = 2)."""
    if p == 1.0:
        return
    if p == 2.0:
        np.multiply(m, m, out=m)
    elif p == 1.5:
        r = np.sqrt(m)
        np.multiply(m, r, out=m)
    else:
        np.power(m, p, out=m)


def double_integral_values(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                           params: ConditionParams,
                           budget: float = DEFAULT_BUDGET) -> np.ndarray:
    """The double-integral sufficient functional

        D(w) = [ iint (tr{ G(z) F(x)* F(x) G(z)* })^{(2+eps)/2}
                       dnu_w(x) dnu_w(z) ]^{1/(2+eps)}

    at every grid point, with dnu_w the mass-normalized discrete kernel
    measure and the multiplicative constant set to 1.  The integrand
    depends on (x, z) only through tr(A_x B_z) with A = F*F and
    B = G*G, so the pair matrix is formed once (in row blocks) and
    reused for every w.  Raises ComputeBudget when
    (N_r N_theta)^2 |grid| exceeds the budget.
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    rule, grid = params.rule, params.grid
    nodes = rule.nodes.size
    cost = float(nodes) ** 2 * len(grid)
    if cost > budget:
        raise ComputeBudget(
            f"double integral needs {cost:.3e} node-pair evaluations, "
            f"budget is {budget:.3e}")
    a = HermitianField.gram(f).values_on_rule(rule)
    b = HermitianField.gram(g).values_on_rule(rule)
    n = f.n
    # tr(A B) for Hermitian A, B is the Frobenius pairing <vec A, vec B>
    ta = a.reshape(nodes, n * n)
    tb = b.reshape(nodes, n * n).conj().T
    u = np.empty((len(grid), nodes))
    for j in range(grid.j_max + 1):
        ws = grid.ring_points(j)
        block = np.stack([kernel_weight(w, rule.nodes) * rule.weights
                          for w in ws])
        u[grid.ring_slices[j]] = block / block.sum(axis=1)[:, None]
    raw = np.zeros(len(grid))
    chunk = max(1, int(4e7) // nodes)
    for lo in range(0, nodes, chunk):
        hi = min(nodes, lo + chunk)
        pair = (ta[lo:hi] @ tb).real           # tr(A_x B_z) rows
        np.clip(pair, 0.0, None, out=pair)
        _elementwise_power(pair, params.power)
        raw += np.einsum("wx,xz,wz->w", u[:, lo:hi], pair, u,
                         optimize=True)
    return raw ** (1.0 / (2.0 + params.epsilon))


def sufficient_double_integral(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                               params: ConditionParams,
                               budget: float = DEFAULT_BUDGET):
    """Grid supremum of the double-integral sufficient functional.

    Returns (sup, profile).
    """
    vals = double_integral_values(f, g, params, budget=budget)
    return float(np.max(vals)), _ring_profile(params.grid, vals)


def invertibility_floor(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                        grid: WGrid):
    """min over grid points of lambda_min((F G* G F*)(z)).

    Returns (floor, argmin point).
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    fv = f.eval_at(grid.points)
    gv = g.eval_at(grid.points)
    m = np.einsum("pij,pkj->pik", fv, gv.conj())   # F G*
    w = np.einsum("pij,pkj->pik", m, m.conj())     # (F G*)(F G*)* = F G* G F*
    mins = np.empty(len(grid))
    for i in range(w.shape[0]):
        ev, _ = jacobi_eigh(w[i])
        mins[i] = ev[0]
    i = int(np.argmin(mins))
    return float(mins[i]), complex(grid.points[i])


@dataclass
class ConditionReport:
    """Aggregated classification output; errors are recorded per field
    instead of aborting the whole report."""

    n: int
    epsilon: float
    delta: float
    eta: float
    necessary_sup: float | None = None
    necessary_argmax: complex | None = None
    necessary_profile: list | None = None
    sufficient_sup: float | None = None
    sufficient_profile: list | None = None
    floor: float | None = None
    floor_argmin: complex | None = None
    truncated_norms: list | None = None
    flags: dict | None = None
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cx(z):
            return None if z is None else [z.real, z.imag]

        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "eta": self.eta,
            "necessary_sup": self.necessary_sup,
            "necessary_argmax": cx(self.necessary_argmax),
            "necessary_profile": self.necessary_profile,
            "sufficient_sup": self.sufficient_sup,
            "sufficient_profile": self.sufficient_profile,
            "floor": self.floor,
            "floor_argmin": cx(self.floor_argmin),
            "truncated_norms": self.truncated_norms,
            "flags": self.flags,
            "errors": self.errors,
        }


def classify(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
             params: ConditionParams,
             k_list: tuple[int, ...] = (8, 16, 32)) -> ConditionReport:
    """Run all grid functionals plus truncated product norms.

    Flags report grid evidence only: the two "holds" flags mean the
    functional evaluated to a finite number everywhere on the grid, and
    floor_positive means the measured floor clears params.eta.  The
    invertibility flag is the conjunction of the necessary flag and the
    floor flag.
    """
    report = ConditionReport(n=f.n, epsilon=params.epsilon,
                             delta=params.delta, eta=params.eta)
    cache: dict = {}
    try:
        sup, argmax, prof = necessary_sup(f, g, params.grid)
        report.necessary_sup = sup
        report.necessary_argmax = argmax
        report.necessary_profile = prof
    except Exception as e:                      # noqa: BLE001
        report.errors["necessary"] = f"{type(e).__name__}: {e}"
    try:
        sup, prof = sufficient_eps(f, g, params, _cache=cache)
        report.sufficient_sup = sup
        report.sufficient_profile = prof
    except Exception as e:                      # noqa: BLE001
        report.errors["sufficient"] = f"{type(e).__name__}: {e}"
    try:
        floor, argmin = invertibility_floor(f, g, params.grid)
        report.floor = floor
        report.floor_argmin = argmin
    except Exception as e:                      # noqa: BLE001
        report.errors["floor"] = f"{type(e).__name__}: {e}"
    norms = []
    for k in k_list:
        try:
            # tighter tolerance than the operator_norm default so the
            # monotonicity of the sequence is not drowned by iteration
            # error
            norms.append((int(k), operator_norm(
                product_restricted(f, g, int(k)), tol=_NORM_TOL)))
        except Exception as e:                  # noqa: BLE001
            report.errors[f"norm_k{k}"] = f"{type(e).__name__}: {e}"
    report.truncated_norms = norms

    nec_ok = (report.necessary_sup is not None
              and math.isfinite(report.necessary_sup))
    suf_ok = (report.sufficient_sup is not None
              and math.isfinite(report.sufficient_sup))
    floor_ok = report.floor is not None and report.floor > params.eta
    report.flags = {
        "necessary_holds_on_grid": bool(nec_ok),
        "sufficient_holds_on_grid": bool(suf_ok),
        "floor_positive": bool(floor_ok),
        "invertible": bool(nec_ok and floor_ok),
    }
    return report


# ---------------------------------------------------------------------------
# quantitative bound audits


def coanalytic_apply(f: PolyMatrixSymbol, u: VectorPoly) -> VectorPoly:
    """T_{F*} u, exact (the result degree never exceeds deg u)."""
    return coanalytic_toeplitz(f, max(u.degree, 0)).apply(u)


def holder_bound_audit(h, v: PowerSeries, w: complex,
                       params: ConditionParams):
    """Hoelder-split bound for the kernel-cubed pairing.

        lhs = int |x| h(x) |v(x)| / |1 - conj(x) w|^3 dA(x)
        rhs = 2 { int h^{2+eps} |k_w|^2 / (1-|w|^2) dA }^{1/(2+eps)}
                { P0(|v|^delta)(w) }^{1/delta}

    h is a nonnegative scalar field (callable on node arrays); returns
    (lhs, rhs).
    """
    rule = params.rule
    z = rule.nodes
    hv = np.asarray(h(z), dtype=float)
    if np.any(hv < -1e-12):
        raise ValueError("audit field must be nonnegative")
    vv = np.abs(v(z))
    denom = np.abs(1.0 - np.conj(z) * w) ** 3
    lhs = float(np.sum(np.abs(z) * hv * vv / denom * rule.weights))

    eps = params.epsilon
    t = abs(w) ** 2
    kw2 = kernel_weight(w, z)
    first = float(np.sum(hv ** (2.0 + eps) * kw2 / (1.0 - t)
                         * rule.weights)) ** (1.0 / (2.0 + eps))
    second = p0_transform(lambda x: np.abs(v(x)) ** params.delta, w,
                          rule) ** (1.0 / params.delta)
    return lhs, 2.0 * first * second


_calibration_cache: dict = {}


def derivative_term_audit(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                          u: VectorPoly, v: VectorPoly, w: complex,
                          params: ConditionParams,
                          constant: float | None = None,
                          _cache: dict | None = None):
    """Bound audit for the derivative pairing

        lhs = |<(T_{F*}u)'(w), (T_{G*}v)'(w)>|
        rhs = C {tr B((F*F)^p)(w) B((G*G)^p)(w)}^{1/(2+eps)} (1-|w|^2)^{-2}
                {P0 ||u||^delta (w)}^{1/delta} {P0 ||v||^delta (w)}^{1/delta}

    with p = (2+eps)/2.  When constant is None the calibrated module
    constant for (eps, rule) is used.  Returns (lhs, rhs, constant).
    """
    if constant is None:
        constant = calibrated_derivative_constant(params)
    rule = params.rule
    eps = params.epsilon
    du = coanalytic_apply(f, u).derivative()(complex(w))
    dv = coanalytic_apply(g, v).derivative()(complex(w))
    lhs = abs(np.sum(du * np.conj(dv)))

    p = params.power
    bf = berezin_power_gram(f, p, w, rule, _cache=_cache).data
    bg = berezin_power_gram(g, p, w, rule, _cache=_cache).data
    tr = float(np.einsum("ij,ji->", bf, bg).real)
    tr = max(tr, 0.0)

    def norm_pow(vec: VectorPoly):
        def fld(z):
            vals = vec(z)
            return (np.sqrt(np.einsum("...i,...i->...",
                                      vals, vals.conj()).real)
                    ** params.delta)
        return fld

    pu = p0_transform(norm_pow(u), w, rule) ** (1.0 / params.delta)
    pv = p0_transform(norm_pow(v), w, rule) ** (1.0 / params.delta)
    rhs = (constant * tr ** (1.0 / (2.0 + eps))
           * (1.0 - abs(w) ** 2) ** (-2.0) * pu * pv)
    return float(lhs), float(rhs), float(constant)


def calibrated_derivative_constant(params: ConditionParams,
                                   trials: int = 40,
                                   safety: float = 2.0) -> float:
    """Largest observed lhs over the uncalibrated rhs on the built-in
    corpus, times a safety factor.  Cached per (eps, rule geometry)."""
    from .corpus import audit_trials

    key = (params.epsilon, params.rule.n_radial, params.rule.n_angular,
           trials, safety)
    hit = _calibration_cache.get(key)
    if hit is not None:
        return hit
    cache: dict = {}
    worst = 0.0
    for fsym, gsym, u, v, w in audit_trials(trials, seed0=31_000):
        lhs, rhs, _ = derivative_term_audit(fsym, gsym, u, v, w, params,
                                            constant=1.0, _cache=cache)
        if rhs > 1e-300:
            worst = max(worst, lhs / rhs)
    value = safety * worst if worst > 0.0 else 1.0
    _calibration_cache[key] = value
    return value
