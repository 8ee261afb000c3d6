"""Deterministic symbol corpus used by property checks and constant
calibration.

Everything here is seeded, so repeated runs see the same symbols in the
same order.  Coefficients decay with the degree to keep operator norms
within a sane range for power iteration.
"""

from __future__ import annotations

import numpy as np

from .core import PolyMatrixSymbol, PowerSeries, VectorPoly


def random_series(rng: np.random.Generator, degree: int,
                  scale: float = 1.0) -> PowerSeries:
    coeffs = []
    for s in range(degree + 1):
        c = (rng.standard_normal() + 1j * rng.standard_normal())
        coeffs.append(scale * c / (2.0 * (s + 1.0)))
    return PowerSeries(coeffs)


def random_symbol(n: int, degree: int, seed: int,
                  scale: float = 1.0) -> PolyMatrixSymbol:
    rng = np.random.default_rng(seed)
    return PolyMatrixSymbol(
        [[random_series(rng, degree, scale) for _ in range(n)]
         for _ in range(n)])


def random_vector_poly(n: int, degree: int, seed: int) -> VectorPoly:
    rng = np.random.default_rng(seed)
    return VectorPoly([random_series(rng, degree) for _ in range(n)])


def random_point(seed: int, r_max: float = 0.8) -> complex:
    rng = np.random.default_rng(seed)
    r = r_max * np.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * np.pi)
    return complex(r * np.cos(theta), r * np.sin(theta))


def _p(*coeffs) -> PowerSeries:
    return PowerSeries(coeffs)


def standard_pairs() -> list[tuple[str, PolyMatrixSymbol, PolyMatrixSymbol]]:
    """Fixed (F, G) pairs covering n = 1..3, plus seeded random ones."""
    z = _p(0, 1)
    pairs = [
        ("identity-n2", PolyMatrixSymbol.identity(2),
         PolyMatrixSymbol.identity(2)),
        ("scalar-affine", PolyMatrixSymbol.scalar(_p(1, 0.5)),
         PolyMatrixSymbol.scalar(_p(1, -0.25))),
        ("scalar-shift", PolyMatrixSymbol.scalar(z),
         PolyMatrixSymbol.scalar(z)),
        ("diag-degenerate", PolyMatrixSymbol.diagonal([_p(1), z]),
         PolyMatrixSymbol.identity(2)),
        ("upper-jordan", PolyMatrixSymbol([[_p(1), z], [_p(0), _p(1)]]),
         PolyMatrixSymbol([[_p(1), _p(0)], [_p(0, 0.5), _p(1)]])),
    ]
    shapes = [(1, 3, 101), (1, 4, 102), (2, 2, 201), (2, 4, 202),
              (3, 2, 301), (3, 3, 302)]
    for n, deg, seed in shapes:
        pairs.append((f"random-n{n}-d{deg}-s{seed}",
                      random_symbol(n, deg, seed),
                      random_symbol(n, deg, seed + 5000)))
    return pairs


def zero_free_symbols() -> list[tuple[str, PolyMatrixSymbol]]:
    """Symbols with det bounded away from zero on the closed disk, for
    the matrix weight tooling."""
    z = _p(0, 1)
    return [
        ("scalar-2pz", PolyMatrixSymbol.scalar(_p(2, 1))),
        ("diag-2pz-2mz", PolyMatrixSymbol.diagonal([_p(2, 1), _p(2, -1)])),
        ("upper-const-det", PolyMatrixSymbol([[_p(2), _p(0, 0.5)],
                                              [_p(0), _p(2)]])),
        ("triangular-n2", PolyMatrixSymbol([[_p(3, 1), _p(0, 0, 0.3)],
                                            [_p(0), _p(2, -0.5)]])),
        ("diag-n3", PolyMatrixSymbol.diagonal(
            [_p(2, 0.5), _p(3, 0, 0.5), _p(2, -0.7)])),
    ]


def trace_corpus_pairs(count: int = 50
                       ) -> list[tuple[PolyMatrixSymbol, PolyMatrixSymbol]]:
    """Random symbol pairs for trace and shift-identity checks:
    n <= 3, degree <= 4."""
    out = []
    for i in range(count):
        rng = np.random.default_rng(7000 + i)
        n = int(rng.integers(1, 4))
        df = int(rng.integers(0, 5))
        dg = int(rng.integers(0, 5))
        out.append((random_symbol(n, df, 7100 + 3 * i),
                    random_symbol(n, dg, 7200 + 3 * i)))
    return out


def audit_trials(count: int, seed0: int, r_max: float = 0.8,
                 pool: list | None = None):
    """Deterministic (F, G, u, v, w) tuples for the bound audits."""
    pairs = pool if pool is not None else [
        (f, g) for _, f, g in standard_pairs()]
    out = []
    for i in range(count):
        f, g = pairs[i % len(pairs)]
        u = random_vector_poly(f.n, 3, seed0 + 10 * i)
        v = random_vector_poly(f.n, 3, seed0 + 10 * i + 1)
        w = random_point(seed0 + 10 * i + 2, r_max)
        out.append((f, g, u, v, w))
    return out
