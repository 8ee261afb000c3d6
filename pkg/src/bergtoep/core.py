"""Polynomial arithmetic and Hermitian matrix helpers for the Bergman
space of the unit disk.

Conventions
-----------
The disk carries normalized area measure dA (total mass 1).  A scalar
polynomial is stored by its raw monomial coefficients ``a_s`` for
``z**s``; no basis normalization is baked into the storage, so

    <z**s, z**t> = delta_st / (s + 1),

and the orthonormal basis element of degree ``s`` is ``sqrt(s+1) z**s``.
Closed forms below follow from

    int z**a conj(z)**b (1 - |z|^2)**k dA = delta_ab a! k! / (a+k+1)!.

Matrix-valued objects are small (n <= 16), so the Hermitian
eigendecomposition is done with cyclic Jacobi rotations rather than a
LAPACK call; inversion and plain products go through numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NoConvergence, NotPSD, SingularSymbol

TOL_HERM = 1e-12
TOL_PSD = 1e-10
TOL_DET = 1e-12
JACOBI_TOL = 1e-13


def _as_coeffs(coeffs: Iterable[complex]) -> tuple[complex, ...]:
    out = tuple(complex(c) for c in coeffs)
    if not out:
        out = (0j,)
    # strip trailing zeros but keep at least the constant term
    last = len(out)
    while last > 1 and out[last - 1] == 0:
        last -= 1
    return out[:last]


@dataclass(frozen=True)
class PowerSeries:
    """Analytic polynomial sum_s a_s z**s with raw coefficient storage."""

    coeffs: tuple[complex, ...]

    def __init__(self, coeffs: Iterable[complex]):
        object.__setattr__(self, "coeffs", _as_coeffs(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        """Horner evaluation; accepts scalars or numpy arrays."""
        z = np.asarray(z, dtype=complex)
        acc = np.zeros_like(z)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def derivative(self) -> "PowerSeries":
        if self.degree == 0:
            return PowerSeries((0j,))
        return PowerSeries(tuple((s + 1) * c for s, c in
                                 enumerate(self.coeffs[1:])))

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        merged = list(a)
        for i, c in enumerate(b):
            merged[i] += c
        return PowerSeries(merged)

    def scale(self, c: complex) -> "PowerSeries":
        return PowerSeries(tuple(c * a for a in self.coeffs))

    @staticmethod
    def zero() -> "PowerSeries":
        return PowerSeries((0j,))

    @staticmethod
    def monomial(s: int, coeff: complex = 1.0) -> "PowerSeries":
        return PowerSeries((0j,) * s + (complex(coeff),))


@dataclass(frozen=True)
class VectorPoly:
    """Column vector of analytic polynomials (a C^n valued polynomial)."""

    components: tuple[PowerSeries, ...]

    def __init__(self, components: Iterable[PowerSeries]):
        comps = tuple(components)
        if not comps:
            raise ValueError("VectorPoly needs at least one component")
        object.__setattr__(self, "components", comps)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def __call__(self, z) -> np.ndarray:
        """Evaluate at points; returns shape (..., n)."""
        z = np.asarray(z, dtype=complex)
        return np.stack([c(z) for c in self.components], axis=-1)

    def derivative(self) -> "VectorPoly":
        return VectorPoly(tuple(c.derivative() for c in self.components))


@dataclass(frozen=True)
class PolyMatrixSymbol:
    """n x n matrix of analytic polynomials, stored row major."""

    entries: tuple[tuple[PowerSeries, ...], ...]

    def __init__(self, entries: Sequence[Sequence[PowerSeries]]):
        rows = tuple(tuple(row) for row in entries)
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise ValueError("symbol entries must form a square grid")
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def degree(self) -> int:
        return max(p.degree for row in self.entries for p in row)

    def entry(self, i: int, j: int) -> PowerSeries:
        return self.entries[i][j]

    def eval_at(self, z) -> np.ndarray:
        """Evaluate entrywise; returns shape (..., n, n)."""
        z = np.asarray(z, dtype=complex)
        n = self.n
        out = np.empty(z.shape + (n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                out[..., i, j] = self.entries[i][j](z)
        return out

    def apply_to(self, v: VectorPoly) -> VectorPoly:
        """Polynomial product F v (exact, degree adds)."""
        if v.n != self.n:
            raise ValueError("dimension mismatch in symbol application")
        rows = []
        for i in range(self.n):
            acc = PowerSeries.zero()
            for j in range(self.n):
                acc = acc + _poly_mul(self.entries[i][j], v.components[j])
            rows.append(acc)
        return VectorPoly(rows)

    def __add__(self, other: "PolyMatrixSymbol") -> "PolyMatrixSymbol":
        if other.n != self.n:
            raise ValueError("dimension mismatch in symbol sum")
        return PolyMatrixSymbol(
            [[self.entries[i][j] + other.entries[i][j]
              for j in range(self.n)] for i in range(self.n)])

    def scale(self, c: complex) -> "PolyMatrixSymbol":
        return PolyMatrixSymbol(
            [[p.scale(c) for p in row] for row in self.entries])

    @staticmethod
    def identity(n: int) -> "PolyMatrixSymbol":
        return PolyMatrixSymbol(
            [[PowerSeries.monomial(0, 1.0) if i == j else PowerSeries.zero()
              for j in range(n)] for i in range(n)])

    @staticmethod
    def diagonal(polys: Sequence[PowerSeries]) -> "PolyMatrixSymbol":
        n = len(polys)
        return PolyMatrixSymbol(
            [[polys[i] if i == j else PowerSeries.zero()
              for j in range(n)] for i in range(n)])

    @staticmethod
    def scalar(p: PowerSeries) -> "PolyMatrixSymbol":
        return PolyMatrixSymbol([[p]])


def _poly_mul(p: PowerSeries, q: PowerSeries) -> PowerSeries:
    out = [0j] * (p.degree + q.degree + 1)
    for s, a in enumerate(p.coeffs):
        if a == 0:
            continue
        for t, b in enumerate(q.coeffs):
            out[s + t] += a * b
    return PowerSeries(out)


# ---------------------------------------------------------------------------
# inner products


def monomial_inner(a: int, b: int, k: int = 0) -> float:
    """Weighted monomial inner product
    int z**a conj(z)**b (1 - |z|**2)**k dA, normalized measure.

    Vanishes off the diagonal; on it equals a! k! / (a+k+1)!, evaluated
    as an incremental product to avoid factorial overflow.
    """
    if a < 0 or b < 0 or k < 0:
        raise ValueError("monomial_inner needs nonnegative indices")
    if a != b:
        return 0.0
    value = 1.0
    for i in range(1, k + 1):
        value *= i / (a + i)
    return value / (a + k + 1)


def series_inner(f: PowerSeries, g: PowerSeries) -> complex:
    """Bergman inner product <f, g> = sum_s a_s conj(b_s) / (s+1)."""
    m = min(f.degree, g.degree)
    terms = [f.coeffs[s] * g.coeffs[s].conjugate() / (s + 1)
             for s in range(m + 1)]
    return complex(math.fsum(t.real for t in terms),
                   math.fsum(t.imag for t in terms))


def vector_inner(f: VectorPoly, g: VectorPoly) -> complex:
    if f.n != g.n:
        raise ValueError("dimension mismatch in vector inner product")
    return sum(series_inner(a, b)
               for a, b in zip(f.components, g.components))


def _weighted_pointwise_inner(f: VectorPoly, g: VectorPoly, k: int) -> complex:
    """int (1-|z|^2)**k <f(z), g(z)>_{C^n} dA via closed forms."""
    re, im = [], []
    for fc, gc in zip(f.components, g.components):
        for s, a in enumerate(fc.coeffs):
            if a == 0 or s > gc.degree:
                continue
            b = gc.coeffs[s]
            if b == 0:
                continue
            t = a * b.conjugate() * monomial_inner(s, s, k)
            re.append(t.real)
            im.append(t.imag)
    return complex(math.fsum(re), math.fsum(im))


def ip_via_derivative_formula(f: VectorPoly, g: VectorPoly):
    """Check the reproducing identity

        <f, g> = 3 I2(f, g) + 1/2 I2(f', g') + 1/3 I3(f', g'),

    where Ik(u, v) = int (1-|z|^2)**k <u(z), v(z)> dA.  Both sides use
    exact closed forms; returns (lhs, rhs, residual).
    """
    if f.n != g.n:
        raise ValueError("dimension mismatch")
    lhs = vector_inner(f, g)
    df, dg = f.derivative(), g.derivative()
    rhs = (3.0 * _weighted_pointwise_inner(f, g, 2)
           + 0.5 * _weighted_pointwise_inner(df, dg, 2)
           + (1.0 / 3.0) * _weighted_pointwise_inner(df, dg, 3))
    return lhs, rhs, abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Hermitian matrices


class HermitianMatrix:
    """Small Hermitian matrix; symmetrized on construction.

    Raises ValueError when the input deviates from Hermitian by more
    than TOL_HERM relative to its size.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        a = np.asarray(data, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("HermitianMatrix needs a square array")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        asym = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
        if asym > TOL_HERM * scale:
            raise ValueError(
                f"matrix is not Hermitian within tolerance ({asym:.3e})")
        self.data = 0.5 * (a + a.conj().T)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def eigenvalues(self) -> np.ndarray:
        w, _ = jacobi_eigh(self.data)
        return w

    def __repr__(self) -> str:
        return f"HermitianMatrix({self.data!r})"

    @staticmethod
    def identity(n: int) -> "HermitianMatrix":
        return HermitianMatrix(np.eye(n, dtype=complex))


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = 100):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi
    rotations.

    Each rotation zeroes one off-diagonal pair: the pair is first phased
    real, then rotated with the classical symmetric-Jacobi angle.
    Sweeps repeat until the off-diagonal Frobenius norm drops under
    ``tol`` relative to the matrix Frobenius norm.

    Returns (eigenvalues ascending, unitary V with eigenvector columns).
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    A = 0.5 * (a + a.conj().T)
    V = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([A[0, 0].real]), V
    scale = max(1.0, float(np.linalg.norm(A)))

    def _off(m):
        return float(np.linalg.norm(m - np.diag(np.diag(m))))

    for _ in range(max_sweeps):
        if _off(A) < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) == 0.0:
                    continue
                phase = apq / abs(apq)
                alpha = A[p, p].real
                beta = A[q, q].real
                r = abs(apq)
                tau = (beta - alpha) / (2.0 * r)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                elif tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                J = np.eye(n, dtype=complex)
                J[p, p] = c
                J[p, q] = s
                J[q, p] = -np.conj(phase) * s
                J[q, q] = np.conj(phase) * c
                A = J.conj().T @ A @ J
                V = V @ J
    else:
        raise NoConvergence(
            f"Jacobi sweeps exhausted (off={_off(A):.3e}, "
            f"target={tol * scale:.3e})")
    w = np.diag(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def lambda_min(a: np.ndarray) -> float:
    w, _ = jacobi_eigh(np.asarray(a, dtype=complex))
    return float(w[0])


def hermitian_power(a: HermitianMatrix, p: float,
                    tol_psd: float = TOL_PSD) -> HermitianMatrix:
    """Spectral power A**p of a PSD matrix.

    Eigenvalues in [-tol_psd, 0) are clamped to 0; anything lower raises
    NotPSD.  Non-integer p with a zero eigenvalue is fine (0**p = 0 for
    p > 0); p < 0 requires strictly positive spectrum.
    """
    w, v = jacobi_eigh(a.data)
    if w[0] < -tol_psd:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -{tol_psd:.1e}")
    w = np.where(w < 0.0, 0.0, w)
    if p < 0 and np.any(w == 0.0):
        raise NotPSD("negative power of a singular PSD matrix")
    wp = w.astype(float) ** p
    out = (v * wp[None, :]) @ v.conj().T
    return HermitianMatrix(out)


def hermitian_order(a: HermitianMatrix, b: HermitianMatrix,
                    tol: float = 0.0) -> bool:
    """Loewner order test: A <= B within slack, i.e.
    lambda_min(B - A) >= -tol."""
    if a.n != b.n:
        raise ValueError("dimension mismatch in order test")
    return lambda_min(b.data - a.data) >= -tol


def gram_at(f: PolyMatrixSymbol, z: complex) -> HermitianMatrix:
    """Pointwise gram F(z)* F(z)."""
    m = f.eval_at(complex(z))
    return HermitianMatrix(m.conj().T @ m)


def inverse_gram_at(f: PolyMatrixSymbol, z: complex) -> HermitianMatrix:
    """Pointwise inverse gram F(z)^{-1} F(z)^{-*}.

    Raises SingularSymbol when |det F(z)| < TOL_DET.
    """
    m = f.eval_at(complex(z))
    det = np.linalg.det(m)
    if abs(det) < TOL_DET:
        raise SingularSymbol(complex(z), complex(det))
    inv = np.linalg.inv(m)
    return HermitianMatrix(inv @ inv.conj().T)


# ---------------------------------------------------------------------------
# matrix valued fields on the disk


class HermitianField:
    """Pointwise Hermitian-matrix valued function on the disk.

    Wraps a vectorized sampler (points -> (m, n, n) array) with a role
    tag.  Disk-rule evaluations are cached per rule object because power
    fields pay an eigendecomposition per node.
    """

    def __init__(self, n: int, sampler: Callable[[np.ndarray], np.ndarray],
                 role: str = "explicit-sample-closure"):
        self.n = int(n)
        self.role = role
        self._sampler = sampler
        self._rule_cache: dict[int, tuple[object, np.ndarray]] = {}

    def sample(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex).ravel()
        vals = self._sampler(pts)
        vals = np.asarray(vals, dtype=complex)
        if vals.shape != (pts.size, self.n, self.n):
            raise ValueError("field sampler returned a bad shape")
        return vals

    def values_on_rule(self, rule) -> np.ndarray:
        key = id(rule)
        hit = self._rule_cache.get(key)
        if hit is not None and hit[0] is rule:
            return hit[1]
        vals = self.sample(rule.nodes)
        self._rule_cache[key] = (rule, vals)
        return vals

    # -- constructors -------------------------------------------------

    @staticmethod
    def gram(f: PolyMatrixSymbol) -> "HermitianField":
        def sampler(pts):
            m = f.eval_at(pts)
            return np.einsum("pki,pkj->pij", m.conj(), m)
        return HermitianField(f.n, sampler, role="gram-of-symbol")

    @staticmethod
    def inverse_gram(f: PolyMatrixSymbol) -> "HermitianField":
        def sampler(pts):
            m = f.eval_at(pts)
            det = np.linalg.det(m)
            bad = np.abs(det) < TOL_DET
            if np.any(bad):
                i = int(np.argmax(bad))
                raise SingularSymbol(complex(pts[i]), complex(det[i]))
            inv = np.linalg.inv(m)
            return np.einsum("pik,pjk->pij", inv, inv.conj())
        return HermitianField(f.n, sampler, role="inverse-gram-of-symbol")

    @staticmethod
    def gram_power(f: PolyMatrixSymbol, p: float) -> "HermitianField":
        n = f.n

        def sampler(pts):
            m = f.eval_at(pts)
            g = np.einsum("pki,pkj->pij", m.conj(), m)
            if n == 1:
                return (np.abs(g[:, 0, 0].real)[:, None, None]
                        .astype(complex) ** p)
            out = np.empty_like(g)
            for i in range(g.shape[0]):
                out[i] = hermitian_power(HermitianMatrix(g[i]), p).data
            return out
        return HermitianField(n, sampler, role="matrix-power-of-gram")

    @staticmethod
    def conjugated(base: "HermitianField", j: np.ndarray) -> "HermitianField":
        """Field z -> J W(z) J for a constant Hermitian J."""
        jm = np.asarray(j, dtype=complex)

        def sampler(pts):
            return np.einsum("ik,pkl,lj->pij", jm, base.sample(pts), jm)
        return HermitianField(base.n, sampler, role=base.role)


def trace_gram_field(f: PolyMatrixSymbol) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar field z -> tr(F(z)* F(z)) as a plain callable."""
    def field(pts):
        m = f.eval_at(np.asarray(pts, dtype=complex))
        return np.einsum("...ki,...ki->...", m.conj(), m).real
    return field
