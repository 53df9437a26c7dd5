"""Independent reference implementations used by the tests.

Nothing here imports the package: each oracle recomputes its quantity by a
different route (mpmath special functions, adaptive quadrature, a separate
minimizer) so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def mp_K(k):
    return mp.ellipk(mp.mpf(k) ** 2)


def mp_E(k):
    return mp.ellipe(mp.mpf(k) ** 2)


def mp_jacobi(u, k):
    m = mp.mpf(k) ** 2
    return (float(mp.ellipfun("cn", u, m=m)), float(mp.ellipfun("sn", u, m=m)), float(mp.ellipfun("dn", u, m=m)))


def _root_in_t(f):
    # t = -ln kc; kc = e^-30 already covers couplings up to about 18
    return mp.findroot(f, (mp.mpf("1e-8"), mp.mpf(30)), solver="illinois")


def cn_state(lam):
    """Half-flux cn state from mpmath: (k, K, E, mu, eps) at high precision.

    eps is assembled from mu and a quadrature of psi^4, not from the closed form
    under test.
    """
    lam = mp.mpf(lam)
    target = mp.pi * lam / 2

    def f(t):
        m = 1 - mp.exp(-2 * t)  # t = -ln kc
        return (mp.ellipe(m) - (1 - m) * mp.ellipk(m)) * mp.ellipk(m) - target

    t = _root_in_t(f)
    m = 1 - mp.exp(-2 * t)
    K, E = mp.ellipk(m), mp.ellipe(m)
    amp = mp.sqrt(m) * K / (mp.pi * mp.sqrt(lam))
    quartic = mp.quad(lambda p: (amp * mp.ellipfun("cn", p * K / mp.pi, m=m)) ** 4, [0, mp.pi / 2, mp.pi, 3 * mp.pi / 2, 2 * mp.pi])
    mu = K**2 / mp.pi**2 * (mp.mpf(1) / 2 - m)
    return {"k": mp.sqrt(m), "K": K, "E": E, "mu": mu, "eps": mu + lam / 2 * quartic, "quartic": quartic}


def dn_lump_energy(lam) -> float:
    """Zero-flux ground-state energy of the dn lump (valid for lam > pi/2).

    psi = K / (pi sqrt(lam)) dn(K phi / pi), with K E = pi lam / 2.
    """
    lam = mp.mpf(lam)
    target = mp.pi * lam / 2
    t = _root_in_t(lambda t: mp.ellipk(1 - mp.exp(-2 * t)) * mp.ellipe(1 - mp.exp(-2 * t)) - target)
    m = 1 - mp.exp(-2 * t)
    K, E = mp.ellipk(m), mp.ellipe(m)
    a = K / (mp.pi * mp.sqrt(lam))
    quartic = a**4 * (mp.pi / K) * 2 * (2 * (2 - m) * E - (1 - m) * K) / 3
    mu = -((K / mp.pi) ** 2) * (2 - m) / 2
    return float(mu + lam / 2 * quartic)


def dn_lump_antipode(lam) -> float:
    """|psi| at the antipode of the dn lump: K kc / (pi sqrt(lam))."""
    lam = mp.mpf(lam)
    target = mp.pi * lam / 2
    t = _root_in_t(lambda t: mp.ellipk(1 - mp.exp(-2 * t)) * mp.ellipe(1 - mp.exp(-2 * t)) - target)
    m = 1 - mp.exp(-2 * t)
    return float(mp.ellipk(m) * mp.exp(-t) / (mp.pi * mp.sqrt(lam)))


def uniform_energy(lam, alpha, winding=0):
    return 0.5 * (winding - alpha) ** 2 - lam / (4 * math.pi)


def _pgd_energy(u, kin, lam, dx):
    uh = np.fft.fft(u)
    kinetic = 0.5 * np.sum(kin * np.abs(uh) ** 2) * dx / u.size
    return kinetic - 0.5 * lam * np.sum(np.abs(u) ** 4) * dx


def projected_gradient_minimizer(lam, alpha=0.0, n_points=256, seed=7, tol=1e-14, max_iters=200_000):
    """Preconditioned projected gradient descent on the unit sphere.

    Works directly on the discretized energy functional with an Armijo line
    search; returns ``(eps, psi)``.  Starts from a Gaussian bump plus noise,
    unrelated to the package's initial condition.
    """
    rng = np.random.default_rng(seed)
    dx = 2 * np.pi / n_points
    phi = dx * np.arange(n_points)
    modes = np.fft.fftfreq(n_points, d=1.0 / n_points)
    kin = (modes - alpha) ** 2
    precond = 1.0 / (1.0 + 0.5 * kin + lam)

    def normalize(u):
        return u / math.sqrt(np.sum(np.abs(u) ** 2) * dx)

    u = np.exp(-2 * (phi - 2.0) ** 2) + 0.05 * (rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points))
    u = normalize(u.astype(complex))
    e = _pgd_energy(u, kin, lam, dx)
    step = 1.0
    for _ in range(max_iters):
        grad = np.fft.ifft(kin * np.fft.fft(u)) - 2 * lam * np.abs(u) ** 2 * u  # gradient of the energy, 2 H psi
        mu = np.real(np.vdot(u, grad)) * dx
        g = grad - mu * u
        d = np.fft.ifft(precond * np.fft.fft(g))
        d -= np.real(np.vdot(u, d)) * dx * u  # tangent to the sphere
        slope = -np.real(np.vdot(g, d)) * dx
        if slope > -1e-30:
            break
        while True:
            trial = normalize(u + step * (-d))
            et = _pgd_energy(trial, kin, lam, dx)
            if et <= e + 1e-4 * step * slope * 0.5:
                break
            step *= 0.5
            if step < 1e-12:
                return e, u
        if e - et < tol:
            u, e = trial, et
            break
        u, e = trial, et
        step = min(step * 1.5, 4.0)
    return float(e), u
