"""Independent brute-force references used only by the tests.

They build density matrices and partial traces explicitly, which the package
deliberately avoids, so agreement is a genuine cross-check.
"""
import decimal
import itertools
from decimal import Decimal
from fractions import Fraction

import numpy as np


def density_matrix(amplitudes):
    v = np.asarray(amplitudes, dtype=complex)
    return np.outer(v, v.conj())


def partial_trace(rho, n, keep):
    """Reduced density matrix on the 1-based labels in ``keep`` via explicit index sums."""
    keep = sorted(keep)
    d = len(keep)
    out = np.zeros((2**d, 2**d), dtype=complex)
    trace_out = [q for q in range(1, n + 1) if q not in keep]
    for i, j in itertools.product(range(2**d), repeat=2):
        bi = [(i >> (d - 1 - k)) & 1 for k in range(d)]
        bj = [(j >> (d - 1 - k)) & 1 for k in range(d)]
        acc = 0
        for env in itertools.product((0, 1), repeat=len(trace_out)):
            row = col = 0
            for q in range(1, n + 1):
                if q in keep:
                    a, b = bi[keep.index(q)], bj[keep.index(q)]
                else:
                    a = b = env[trace_out.index(q)]
                row = 2 * row + a
                col = 2 * col + b
            acc += rho[row, col]
        out[i, j] = acc
    return out


def ce_bruteforce(amplitudes, labels):
    v = np.asarray(amplitudes, dtype=complex)
    n = int(np.log2(len(v)))
    rho = density_matrix(v)
    total = 0.0
    for r in range(len(labels) + 1):
        for alpha in itertools.combinations(labels, r):
            red = partial_trace(rho, n, alpha) if alpha else np.ones((1, 1))
            total += float(np.real(np.trace(red @ red)))
    return 1 - total / 2 ** len(labels)


def k_opt_closed_form(s, eps):
    """Closed-form K_opt evaluated in 60-digit decimal arithmetic, then ceiled."""
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        e2 = Decimal(str(eps)) ** 2
        a = Decimal(16) / e2 * Decimal("1.5") ** s
        disc = (a - 1) ** 2 + Decimal(32) / e2 * Decimal(3) ** s
        return int(((a + 1) / 2 + disc.sqrt() / 2).to_integral_value(rounding=decimal.ROUND_CEILING))


def k_opt_scan(s, eps):
    """Smallest K >= 2 with 2/(K(K-1)) (3^s + 2(K-2)(3/2)^s) <= eps^2/4, by linear scan in exact rationals."""
    e = Fraction(str(eps))
    target = e * e / 4
    K = 2
    while Fraction(2, K * (K - 1)) * (3**s + 2 * (K - 2) * Fraction(3, 2) ** s) > target:
        K += 1
    return K


def ceil_fraction(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)
