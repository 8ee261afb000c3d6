"""Truncated Toeplitz operators on the vector valued Bergman space.

Operators act on C^n valued polynomials of degree <= K, expanded in the
orthonormal basis e_{d,i} = sqrt(d+1) z**d (component i), ordered degree
major: index = d * n + i.  An analytic symbol multiplies (degree grows
by the symbol degree); the coanalytic operator T_{G*} is the compression
of the adjoint of T_G and never raises degree, so its truncation is
exact on its domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PolyMatrixSymbol, PowerSeries, VectorPoly, series_inner
from .errors import BufferTooSmall, NoConvergence, NonRealTrace

POWER_ITER_TOL = 1e-10
POWER_ITER_CAP = 10_000
POWER_ITER_FAIL = 1e-8
_POWER_ITER_SEED = 20240809


@dataclass(frozen=True)
class TruncatedOperator:
    """Matrix of an operator from degrees <= k_in to degrees <= k_out."""

    n: int
    k_in: int
    k_out: int
    matrix: np.ndarray

    def __post_init__(self):
        rows = self.n * (self.k_out + 1)
        cols = self.n * (self.k_in + 1)
        if self.matrix.shape != (rows, cols):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"(k_out={self.k_out}, k_in={self.k_in}, n={self.n})")

    def compress(self, k_in: int, k_out: int) -> "TruncatedOperator":
        """Restrict (or zero-pad) to new degree windows."""
        rows = self.n * (k_out + 1)
        cols = self.n * (k_in + 1)
        out = np.zeros((rows, cols), dtype=complex)
        r = min(rows, self.matrix.shape[0])
        c = min(cols, self.matrix.shape[1])
        out[:r, :c] = self.matrix[:r, :c]
        return TruncatedOperator(self.n, k_in, k_out, out)

    def compose(self, other: "TruncatedOperator") -> "TruncatedOperator":
        """self after other, zero-padding the degree interface."""
        if self.n != other.n:
            raise ValueError("dimension mismatch in composition")
        mid = max(self.k_in, other.k_out)
        left = self.compress(mid, self.k_out)
        right = other.compress(other.k_in, mid)
        return TruncatedOperator(self.n, other.k_in, self.k_out,
                                 left.matrix @ right.matrix)

    def apply(self, v: VectorPoly) -> VectorPoly:
        if v.n != self.n:
            raise ValueError("dimension mismatch in apply")
        if v.degree > self.k_in:
            raise BufferTooSmall(
                f"operator domain caps at degree {self.k_in}, "
                f"argument has degree {v.degree}")
        vec = coeff_vector(v, self.n, self.k_in)
        return vector_poly_from_coeffs(self.matrix @ vec, self.n)

    @staticmethod
    def identity(n: int, k: int) -> "TruncatedOperator":
        return TruncatedOperator(
            n, k, k, np.eye(n * (k + 1), dtype=complex))


def coeff_vector(v: VectorPoly, n: int, k: int) -> np.ndarray:
    """Orthonormal-basis coefficients of v, degree major."""
    out = np.zeros(n * (k + 1), dtype=complex)
    for i, comp in enumerate(v.components):
        for d, a in enumerate(comp.coeffs):
            if d > k:
                break
            out[d * n + i] = a / np.sqrt(d + 1.0)
    return out


def vector_poly_from_coeffs(vec: np.ndarray, n: int) -> VectorPoly:
    """Inverse of coeff_vector."""
    k = vec.size // n - 1
    comps = []
    for i in range(n):
        coeffs = [vec[d * n + i] * np.sqrt(d + 1.0) for d in range(k + 1)]
        comps.append(PowerSeries(coeffs))
    return VectorPoly(comps)


def analytic_toeplitz(f: PolyMatrixSymbol, k: int) -> TruncatedOperator:
    """Multiplication by the analytic symbol F on degrees <= k.

    Exact: the image of a degree <= k polynomial has degree at most
    k + deg F, so k_out = k + deg F and no projection is involved.  The
    basis normalization contributes sqrt((t+1)/(t+s+1)) for input degree
    t and coefficient power s.
    """
    n = f.n
    d = f.degree
    k_out = k + d
    m = np.zeros((n * (k_out + 1), n * (k + 1)), dtype=complex)
    t = np.arange(k + 1)
    for i in range(n):
        for c in range(n):
            for s, a in enumerate(f.entries[i][c].coeffs):
                if a == 0:
                    continue
                rows = (t + s) * n + i
                cols = t * n + c
                m[rows, cols] += a * np.sqrt((t + 1.0) / (t + s + 1.0))
    return TruncatedOperator(n, k, k_out, m)


def coanalytic_toeplitz(g: PolyMatrixSymbol, k: int) -> TruncatedOperator:
    """T_{G*} on degrees <= k: adjoint of T_G, compressed back to <= k.

    Degree never increases, so the compression is exact on its domain.
    """
    a = analytic_toeplitz(g, k)
    full = a.matrix.conj().T            # maps degrees <= k + deg G to <= k
    cols = g.n * (k + 1)
    return TruncatedOperator(g.n, k, k, full[:, :cols])


def product_restricted(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                       k: int) -> TruncatedOperator:
    """Exact matrix of T_F T_{G*} restricted to degrees <= k."""
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    return analytic_toeplitz(f, k).compose(coanalytic_toeplitz(g, k))


def operator_norm(t: TruncatedOperator, tol: float = POWER_ITER_TOL,
                  cap: int = POWER_ITER_CAP) -> float:
    """Largest singular value by power iteration on T* T.

    The start vector comes from a fixed seed so repeated runs agree to
    the bit.  Raises NoConvergence when the iteration cap is hit while
    the Rayleigh quotient still moves by more than POWER_ITER_FAIL
    relatively.
    """
    a = t.matrix
    if a.size == 0 or not np.any(a):
        return 0.0
    rng = np.random.default_rng(_POWER_ITER_SEED)
    v = rng.standard_normal(a.shape[1]) + 1j * rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    rel = np.inf
    for _ in range(cap):
        y = a.conj().T @ (a @ v)
        lam = float(np.vdot(v, y).real)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        v = y / ny
        rel = abs(lam - lam_prev) / max(lam, 1e-300)
        if rel < tol:
            lam_prev = lam
            break
        lam_prev = lam
    else:
        if rel > POWER_ITER_FAIL:
            raise NoConvergence(
                f"power iteration cap {cap} hit with relative change "
                f"{rel:.3e}")
    return float(np.sqrt(max(lam_prev, 0.0)))


def rank_one(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
             k: int) -> TruncatedOperator:
    """Block rank-one style operator F (x) G on degrees <= k.

    Block (i, j) is sum_l f_il (x) g_jl with (u (x) v) h = <h, v> u.  In
    the orthonormal basis the entry at (degree s, row i), (degree t,
    column j) is sum_l a_s^{(i,l)} conj(b_t^{(j,l)}) / sqrt((s+1)(t+1)).
    Exact for any k; output degrees cap at max(k, deg F).
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    n = f.n
    k_out = max(k, f.degree)
    m = np.zeros((n * (k_out + 1), n * (k + 1)), dtype=complex)
    for i in range(n):
        for j in range(n):
            for l in range(n):
                fp = f.entries[i][l]
                gp = g.entries[j][l]
                for s, a in enumerate(fp.coeffs):
                    if a == 0:
                        continue
                    for tdeg, b in enumerate(gp.coeffs):
                        if b == 0 or tdeg > k:
                            continue
                        m[s * n + i, tdeg * n + j] += (
                            a * b.conjugate()
                            / np.sqrt((s + 1.0) * (tdeg + 1.0)))
    return TruncatedOperator(n, k, k_out, m)


def rank_one_trace(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                   tol_imag: float = 1e-9) -> float:
    """Trace of (F (x) G)(G (x) F) through the quadruple sum

        sum_{q,m,r,l} <f_qr, f_ql> <g_ml, g_mr>,

    all inner products taken in the Bergman space.  Agrees with the
    matrix trace of the assembled product; raises NonRealTrace if the
    imaginary part survives beyond tol_imag.
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    n = f.n
    fip = np.empty((n, n, n), dtype=complex)   # fip[q, r, l] = <f_qr, f_ql>
    gip = np.empty((n, n, n), dtype=complex)   # gip[m, l, r] = <g_ml, g_mr>
    for q in range(n):
        for r in range(n):
            for l in range(n):
                fip[q, r, l] = series_inner(f.entries[q][r], f.entries[q][l])
                gip[q, r, l] = series_inner(g.entries[q][r], g.entries[q][l])
    total = 0j
    for q in range(n):
        for m in range(n):
            for r in range(n):
                for l in range(n):
                    total += fip[q, r, l] * gip[m, l, r]
    if abs(total.imag) > tol_imag:
        raise NonRealTrace(f"trace imaginary part {total.imag:.3e}")
    return float(total.real)


def _shift_symbol(n: int) -> PolyMatrixSymbol:
    return PolyMatrixSymbol.diagonal(
        [PowerSeries.monomial(1, 1.0)] * n)


def park_residual(f: PolyMatrixSymbol, g: PolyMatrixSymbol,
                  k: int) -> float:
    """Residual of the three-term shift decomposition

        F (x) G = P - 2 Tz P Tz* + Tz^2 P Tz*^2,   P = T_F T_{G*},

    with both sides compressed to degrees <= k - deg F - 2 before taking
    the operator norm of the difference.  Requires
    k >= deg F + deg G + 4 so the compressed window is meaningful.
    """
    if f.n != g.n:
        raise ValueError("symbol dimensions differ")
    df, dg = f.degree, g.degree
    if k < df + dg + 4:
        raise BufferTooSmall(
            f"need k >= deg F + deg G + 4 = {df + dg + 4}, got {k}")
    n = f.n
    zsym = _shift_symbol(n)
    p = product_restricted(f, g, k)
    tzbar = coanalytic_toeplitz(zsym, k)
    tz_once = analytic_toeplitz(zsym, k + df)
    tz_twice = analytic_toeplitz(zsym, k + df + 1)

    term1 = p
    term2 = tz_once.compose(p).compose(tzbar)
    term3 = tz_twice.compose(tz_once).compose(p) \
        .compose(tzbar).compose(tzbar)
    lhs = rank_one(f, g, k)

    kc = k - df - 2
    resid = (lhs.compress(kc, kc).matrix
             - term1.compress(kc, kc).matrix
             + 2.0 * term2.compress(kc, kc).matrix
             - term3.compress(kc, kc).matrix)
    return operator_norm(TruncatedOperator(n, kc, kc, resid))
