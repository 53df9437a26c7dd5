"""Complete elliptic integrals and Jacobi elliptic functions.

Everything is written in terms of the modulus ``k`` (not the parameter
``m = k**2``).  The complementary modulus ``kc = sqrt(1 - k**2)`` travels with
``k`` so that moduli exponentially close to 1 remain representable: a ring
soliton at coupling 12 needs ``kc ~ 1e-8``, where ``1 - k**2`` has no
significant digits left.

K and E come from the arithmetic-geometric mean; sn, cn, dn come from the
descending Landen recursion seeded by the same AGM sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EllipticDomainError",
    "EllipticModulus",
    "complete_K",
    "complete_E",
    "jacobi_cn_sn_dn",
]

_EPS = np.finfo(float).eps
_AGM_MAX_ITER = 64
# below this kc the logarithmic expansions about k = 1 are used for K and E
_KC_SERIES = 1e-5


class EllipticDomainError(ValueError):
    """Modulus outside [0, 1], or K requested at k = 1."""


@dataclass(frozen=True)
class EllipticModulus:
    """A modulus ``k`` together with its complement ``kc``.

    Build through :meth:`from_k` or :meth:`from_kc`; pick whichever of the two
    is known to full relative precision.
    """

    k: float
    kc: float

    def __post_init__(self):
        if not (0.0 <= self.k <= 1.0 and 0.0 <= self.kc <= 1.0):
            raise EllipticDomainError(f"modulus out of range: k={self.k!r}, kc={self.kc!r}")
        if abs(self.k * self.k + self.kc * self.kc - 1.0) > 4 * _EPS:
            raise EllipticDomainError(
                f"inconsistent modulus pair: k^2 + kc^2 - 1 = {self.k**2 + self.kc**2 - 1.0:.3e}"
            )

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulus":
        k = float(k)
        if not 0.0 <= k <= 1.0:
            raise EllipticDomainError(f"modulus k must lie in [0, 1], got {k!r}")
        return cls(k, math.sqrt((1.0 - k) * (1.0 + k)))

    @classmethod
    def from_kc(cls, kc: float) -> "EllipticModulus":
        kc = float(kc)
        if not 0.0 <= kc <= 1.0:
            raise EllipticDomainError(f"complementary modulus must lie in [0, 1], got {kc!r}")
        return cls(math.sqrt((1.0 - kc) * (1.0 + kc)), kc)

    @property
    def complement(self) -> "EllipticModulus":
        """The modulus with k and kc swapped (argument of K' and E')."""
        return EllipticModulus(self.kc, self.k)


def _as_modulus(m) -> EllipticModulus:
    if isinstance(m, EllipticModulus):
        return m
    return EllipticModulus.from_k(m)


def _agm(a: float, b: float):
    """AGM sequences (a_n, c_n) starting from (a, b), c_0 = None."""
    a_seq = [a]
    c_seq = [None]
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 8 * _EPS * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    else:
        raise RuntimeError("AGM failed to converge")  # unreachable for b in (0, a]
    return a_seq, c_seq


def complete_K(m) -> float:
    """Complete elliptic integral of the first kind, K(k).

    Accepts an :class:`EllipticModulus` or a plain modulus ``k``.
    """
    m = _as_modulus(m)
    if m.kc == 0.0:
        raise EllipticDomainError("K(k) diverges at k = 1")
    if m.kc < _KC_SERIES:
        L = math.log(4.0 / m.kc)
        return L + 0.25 * m.kc**2 * (L - 1.0)
    a_seq, _ = _agm(1.0, m.kc)
    return math.pi / (2.0 * a_seq[-1])


def complete_E(m) -> float:
    """Complete elliptic integral of the second kind, E(k)."""
    m = _as_modulus(m)
    if m.kc == 0.0:
        return 1.0
    if m.kc < _KC_SERIES:
        L = math.log(4.0 / m.kc)
        return 1.0 + 0.5 * m.kc**2 * (L - 0.5)
    a_seq, c_seq = _agm(1.0, m.kc)
    # E/K = 1 - sum_n 2^(n-1) c_n^2 with c_0 = k
    s = 0.5 * m.k * m.k
    for n in range(1, len(c_seq)):
        s += 2.0 ** (n - 1) * c_seq[n] ** 2
    K = math.pi / (2.0 * a_seq[-1])
    return K * (1.0 - s)


def jacobi_cn_sn_dn(u, m):
    """Jacobi elliptic functions ``(cn, sn, dn)`` at real argument ``u``.

    ``u`` may be a scalar or an array; the three functions are returned with
    the shape of ``u``.
    """
    m = _as_modulus(m)
    u_arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u_arr)):
        raise ValueError("jacobi_cn_sn_dn requires finite arguments")

    if m.kc == 0.0:
        sech = 1.0 / np.cosh(u_arr)
        out = (sech, np.tanh(u_arr), sech.copy())
    elif m.k == 0.0:
        out = (np.cos(u_arr), np.sin(u_arr), np.ones_like(u_arr))
    else:
        a_seq, c_seq = _agm(1.0, m.kc)
        n_max = len(a_seq) - 1
        phi = (2.0**n_max) * a_seq[-1] * u_arr
        for n in range(n_max, 0, -1):
            phi = 0.5 * (phi + np.arcsin(c_seq[n] / a_seq[n] * np.sin(phi)))
        cn = np.cos(phi)
        sn = np.sin(phi)
        # dn > 0 on the real line; the sum of squares avoids the 0/0 at cn = 0
        dn = np.sqrt(m.kc * m.kc + (m.k * cn) ** 2)
        out = (cn, sn, dn)

    if np.ndim(u) == 0:
        return tuple(float(x) for x in out)
    return out
