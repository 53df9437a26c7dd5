"""Closed-form branches of the ring NLSE.

Units are hbar = m = R = 1.  The energy functional per particle is

    eps[psi] = integral  1/2 |(-i d/dphi - alpha) psi|^2 - lam/2 |psi|^4  dphi

with ``integral |psi|^2 dphi = 1``.  At half flux the twisted-frame ground
state is ``psi(phi) = k K / (pi sqrt(lam)) * cn(phi K / pi, k)``, with the
modulus fixed by ``[E - (1 - k^2) K] K = pi lam / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import EllipticModulus, complete_E, complete_K, jacobi_cn_sn_dn
from .fields import TWISTED, RingGrid, WaveField

__all__ = [
    "ModulusSolveError",
    "RingProblem",
    "HalfFluxAnalytic",
    "canonical_alpha",
    "solve_modulus",
    "modulus_residual",
    "half_flux_record",
    "half_flux_state",
    "half_flux_mu",
    "half_flux_energy",
    "uniform_branch_energy",
    "best_uniform_energy",
    "critical_coupling",
    "wilczek_rotating_energy",
    "asymptotic_delta_energy",
]

# solve in s = ln kc above this coupling; once kc << 1 the variable k leaves
# too few digits in 1 - k to resolve kc
_LOG_KC_SWITCH = 1.0
_MAX_ROOT_ITERS = 200
# the 0/0 in the energy formula is replaced by its limit below this modulus
_K_DEGENERATE = 1e-6


class ModulusSolveError(RuntimeError):
    pass


def canonical_alpha(alpha: float) -> float:
    """Reduce a flux to (-1/2, 1/2]; physics is 1-periodic in the flux."""
    return float(alpha - math.ceil(alpha - 0.5))


@dataclass(frozen=True)
class RingProblem:
    """Coupling ``lam`` > 0 and flux ``alpha`` for one ring.

    ``alpha`` is stored as given, so the solver can be run at ``alpha`` and
    ``alpha + 1`` independently; use :attr:`canonical_alpha` for the reduced
    value.
    """

    lam: float
    alpha: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"coupling must be positive, got {self.lam!r}")
        if not math.isfinite(self.alpha):
            raise ValueError("flux must be finite")

    @property
    def canonical_alpha(self) -> float:
        return canonical_alpha(self.alpha)


@dataclass(frozen=True)
class HalfFluxAnalytic:
    """Elliptic data of the half-flux cn state at coupling ``lam``."""

    lam: float
    modulus: EllipticModulus
    bigK: float
    bigE: float
    mu: float
    eps: float
    # k fell below the degeneracy cut and eps was replaced by its lam -> 0 limit
    degenerate: bool = False

    @property
    def amplitude(self) -> float:
        return self.modulus.k * self.bigK / (math.pi * math.sqrt(self.lam))


def _modulus_lhs(m: EllipticModulus) -> float:
    K = complete_K(m)
    return (complete_E(m) - m.kc * m.kc * K) * K


def modulus_residual(m: EllipticModulus, lam: float) -> float:
    """Relative residual of ``[E - kc^2 K] K = pi lam / 2``."""
    target = 0.5 * math.pi * lam
    return (_modulus_lhs(m) - target) / max(1.0, target)


def _bracketed_root(f, lo, hi, f_lo, f_hi, xtol):
    """Root of an increasing function on [lo, hi]; Illinois-safeguarded secant.

    Bisection is forced whenever the secant step would not shrink the bracket
    by at least half in two steps.
    """
    side = 0
    width = hi - lo
    for _ in range(_MAX_ROOT_ITERS):
        x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if fx == 0.0:
            return x
        if fx < 0:
            lo, f_lo = x, fx
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = x, fx
            if side == 1:
                f_lo *= 0.5
            side = 1
        if hi - lo > 0.5 * width:
            # secant stalled: bisect once
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm < 0:
                lo, f_lo = mid, fm
            else:
                hi, f_hi = mid, fm
            side = 0
        width = hi - lo
        if width <= xtol * max(1.0, abs(lo), abs(hi)):
            return lo if abs(f_lo) < abs(f_hi) else hi
    raise ModulusSolveError(f"no convergence: bracket [{lo!r}, {hi!r}], residuals ({f_lo:.3e}, {f_hi:.3e})")


def solve_modulus(lam: float) -> EllipticModulus:
    """Elliptic modulus of the half-flux state at coupling ``lam``.

    The left side ``[E - kc^2 K] K`` increases monotonically from 0 at k = 0
    to infinity at k = 1, so the root is unique.  Above coupling 1 the solve
    runs in ``ln kc``.
    """
    if not lam > 0:
        raise ValueError(f"coupling must be positive, got {lam!r}")
    target = 0.5 * math.pi * lam
    xtol = 4 * np.finfo(float).eps

    if lam <= _LOG_KC_SWITCH:

        def f(k):
            return _modulus_lhs(EllipticModulus.from_k(k)) - target

        lo, hi = 0.0, 1.0 - 1e-12
        f_lo, f_hi = -target, f(hi)
        if f_hi <= 0:
            raise ModulusSolveError(f"bracket [0, {hi}] misses the root for lam={lam}")
        k = _bracketed_root(f, lo, hi, f_lo, f_hi, xtol)
        m = EllipticModulus.from_k(k)
    else:

        def g(t):
            # t = -ln kc, so g increases with t
            return _modulus_lhs(EllipticModulus.from_kc(math.exp(-t))) - target

        lo, hi = 0.0, 700.0
        f_lo, f_hi = -target, g(hi)
        if f_hi <= 0:
            raise ModulusSolveError(f"coupling {lam} beyond the representable modulus range")
        t = _bracketed_root(g, lo, hi, f_lo, f_hi, xtol)
        m = EllipticModulus.from_kc(math.exp(-t))
    return m


def half_flux_mu(a: HalfFluxAnalytic) -> float:
    """Chemical potential ``(K^2 / pi^2) (1/2 - k^2)``."""
    k = a.modulus.k
    return a.bigK**2 / math.pi**2 * (0.5 - k * k)


def half_flux_energy(a: HalfFluxAnalytic) -> float:
    """Energy per particle of the cn state.

    Returns the lam -> 0 limit 1/8 when the modulus is below 1e-6, where the
    closed form is 0/0.
    """
    k, kc = a.modulus.k, a.modulus.kc
    if k < _K_DEGENERATE:
        return 0.125
    K, E = a.bigK, a.bigE
    k2, kc2 = k * k, kc * kc
    num = (2 * k2 - 1) * E - kc2 * (3 * k2 - 1) * K
    den = E - kc2 * K
    return -(K * K) * num / (6 * math.pi**2 * den)


def half_flux_record(lam: float) -> HalfFluxAnalytic:
    m = solve_modulus(lam)
    K, E = complete_K(m), complete_E(m)
    base = HalfFluxAnalytic(lam, m, K, E, math.nan, math.nan, m.k < _K_DEGENERATE)
    mu = half_flux_mu(base)
    eps = half_flux_energy(base)
    return HalfFluxAnalytic(lam, m, K, E, mu, eps, base.degenerate)


def half_flux_state(lam: float, n_grid: int = 256) -> tuple[HalfFluxAnalytic, WaveField]:
    """The analytic half-flux record and its twisted-frame field on ``n_grid`` nodes.

    The unit norm of the sampled field follows from the modulus equation; it
    is checked here and a violation raises.
    """
    rec = half_flux_record(lam)
    grid = RingGrid(n_grid)
    cn, _, _ = jacobi_cn_sn_dn(grid.nodes * rec.bigK / math.pi, rec.modulus)
    field = WaveField(grid, rec.amplitude * cn, TWISTED, 0.5)
    norm = field.norm()
    if abs(norm - 1.0) > 1e-10:
        raise ModulusSolveError(f"half-flux state at lam={lam} has norm {norm!r}")
    return rec, field


def uniform_branch_energy(lam: float, alpha: float, winding: int = 0) -> float:
    """Energy of the plane wave ``exp(i n phi) / sqrt(2 pi)``."""
    if lam < 0:
        raise ValueError("coupling must be non-negative")
    return 0.5 * (winding - alpha) ** 2 - lam / (4 * math.pi)


def best_uniform_energy(lam: float, alpha: float) -> float:
    """Lowest plane-wave energy over windings."""
    n = math.floor(alpha + 0.5)
    return min(uniform_branch_energy(lam, alpha, w) for w in (n - 1, n, n + 1))


def critical_coupling() -> float:
    """Coupling above which the zero-flux uniform state gives way to a lump."""
    return math.pi / 2


def wilczek_rotating_energy(eps_zero_flux: float, alpha: float) -> float:
    """Energy of the zero-flux lump set rotating so the flux is cancelled."""
    a = canonical_alpha(alpha)
    return eps_zero_flux + 0.5 * a * a


def asymptotic_delta_energy(lam: float, alpha: float) -> float:
    """Strong-coupling flux dependence ``-3 [1 - cos(2 pi alpha)] lam^2 exp(-pi lam)``."""
    return -3.0 * (1.0 - math.cos(2 * math.pi * alpha)) * lam**2 * math.exp(-math.pi * lam)
