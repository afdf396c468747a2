"""Cylinder and associated Legendre functions on the real half-lines used by the solver.

Conventions follow the NIST handbook: ``P^{-mu}_nu(x)`` is the Ferrers-free
first kind function for ``x > 1`` and ``Q^{mu}_nu(x)`` is Olver's scaled
second kind function, ``Q^{mu}_nu = exp(-i mu pi) Q_hobson / Gamma(nu+mu+1)``.

Real-order Bessel values come from scipy (AMOS/Cephes). Purely imaginary
orders and every Legendre value are summed here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

SERIES_RTOL = 1e-16
SERIES_CAP = 1_000_000

BESSEL_NU_MAX = 50.0
BESSEL_Z_MAX = 1e4

# Largest interpolation step in mu around integer Legendre orders.
_INTEGER_ORDER_GAP = 2e-3
P_ORDER_MAX = 25.0


class DomainError(ValueError):
    """Argument outside the supported evaluation domain."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not reach its tolerance."""


@dataclass(frozen=True)
class CylinderEval:
    order: complex | np.ndarray
    argument: float | np.ndarray
    j: complex | np.ndarray
    y: complex | np.ndarray
    j_prime: complex | np.ndarray
    y_prime: complex | np.ndarray


@dataclass(frozen=True)
class LegendreEval:
    degree: float | np.ndarray
    order: complex | np.ndarray
    argument: float | np.ndarray
    p: complex | np.ndarray
    q: complex | np.ndarray
    p_prime: complex | np.ndarray
    q_prime: complex | np.ndarray


def _unwrap(x, scalar):
    if scalar:
        return x.reshape(()).item()
    return x


# ---------------------------------------------------------------- gamma


def gamma_complex(zc):
    """Gamma function for complex arguments; raises at the poles 0, -1, -2, ..."""
    z = np.asarray(zc, dtype=complex)
    on_axis = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(on_axis):
        raise DomainError(f"gamma pole at {z[on_axis].ravel()[0].real:g}")
    out = sp.gamma(z)
    return out.item() if out.ndim == 0 else out


def _rgamma(z):
    return sp.rgamma(np.asarray(z, dtype=complex))


# ---------------------------------------------------------------- Gauss series


def _gauss_series(a, b, c, z, *, cap=SERIES_CAP):
    """Regularized Gauss sum  sum_k (a)_k (b)_k z^k / (Gamma(c+k) k!)  for 0 <= z < 1.

    Returns (value, z * d/dz value, sum of absolute terms).  Vectorized over
    broadcast inputs; each lane stops once its tail bound drops below
    SERIES_RTOL of the running sum.
    """
    a, b, c, z = np.broadcast_arrays(
        np.asarray(a, complex), np.asarray(b, complex), np.asarray(c, complex), np.asarray(z, float)
    )
    shape = a.shape
    a, b, c, z = (v.ravel() for v in (a, b, c, z))
    n = a.size
    term = _rgamma(c)
    total = term.copy()
    zder = np.zeros(n, complex)
    mass = np.abs(term)
    idx = np.arange(n)
    k = 0
    while idx.size:
        if k >= cap:
            raise ConvergenceError(f"Gauss series did not converge in {cap} terms")
        ai, bi, ci, zi = a[idx], b[idx], c[idx], z[idx]
        ratio = (ai + k) * (bi + k) / ((ci + k) * (k + 1)) * zi
        t = term[idx] * ratio
        term[idx] = t
        total[idx] += t
        zder[idx] += (k + 1) * t
        mass[idx] += np.abs(t)
        k += 1
        r = np.abs(ratio)
        at = np.abs(t)
        # once the ratio has settled below one the tail is a geometric remainder
        with np.errstate(over="ignore"):
            tail = np.where(r < 1.0, at * r / np.maximum(1.0 - r, 1e-300), np.inf)
        big = np.maximum(np.abs(total[idx]), 1e-300)
        done = (tail <= SERIES_RTOL * big) & ((k > 2) | (at == 0))
        idx = idx[~done]
    return total.reshape(shape), zder.reshape(shape), mass.reshape(shape)


# ---------------------------------------------------------------- Legendre


def _p_minus(nu, mu, x, xm1):
    """P^{-mu}_nu(x) and d/dx via the series in w = (x-1)/(x+1)."""
    w = xm1 / (x + 1.0)
    f, wf, _ = _gauss_series(nu + 1.0, 1.0 + mu + nu, 1.0 + mu, w)
    pref = np.exp(0.5 * mu * np.log(w) - (nu + 1.0) * np.log(0.5 * (x + 1.0)))
    p = pref * f
    # d/dx = (dw/dx) d/dw with dw/dx = 2/(x+1)^2; the series returns w dF/dw
    dfdx = wf / w * 2.0 / (x + 1.0) ** 2
    dp = p * (mu / (xm1 * (x + 1.0)) - (nu + 1.0) / (x + 1.0)) + pref * dfdx
    return p, dp


def _q_inverse_square(nu, mu, x):
    """Olver Q^{mu}_nu(x) and d/dx via the series in 1/x^2; good away from x = 1."""
    q2 = 1.0 / (x * x)
    a = 0.5 * nu + 0.5 * mu + 1.0
    b = 0.5 * nu + 0.5 * mu + 0.5
    f, qf, mass = _gauss_series(a, b, nu + 1.5, q2)
    logpref = 0.5 * np.log(np.pi) + 0.5 * mu * np.log(x * x - 1.0) - (nu + 1.0) * np.log(2.0) - (nu + mu + 1.0) * np.log(x)
    pref = np.exp(logpref)
    q = pref * f
    dq = q * (mu * x / (x * x - 1.0) - (nu + mu + 1.0) / x) + pref * qf * (-2.0 / x)
    loss = mass / np.maximum(np.abs(f), 1e-300)
    return q, dq, loss


def _q_connection(nu, mu, x, xm1):
    """Olver Q from the two first kind solutions; requires sin(mu pi) != 0."""
    pm, dpm = _p_minus(nu, mu, x, xm1)
    pp, dpp = _p_minus(nu, -mu, x, xm1)
    g1 = _rgamma(nu + mu + 1.0)
    g2 = _rgamma(nu - mu + 1.0)
    s = np.pi / (2.0 * np.sin(mu * np.pi))
    t1, t2 = pp * g1, pm * g2
    q = s * (t1 - t2)
    dq = s * (dpp * g1 - dpm * g2)
    loss = np.maximum(np.abs(t1), np.abs(t2)) * np.abs(s) / np.maximum(np.abs(q), 1e-300)
    return q, dq, loss


def _q_connection_safe(nu, mu, x, xm1):
    """Connection formula, interpolated in mu across integer orders.

    The two terms carry poles at integer mu that cancel. Within a step h of an
    integer the value is rebuilt from six off-integer evaluations; h shrinks
    with |log(x-1)| because the terms vary like (x-1)^(-+mu/2).
    """
    mu = np.asarray(mu, complex)
    spread = np.maximum(1.0, 0.5 * np.abs(np.log(xm1)))
    h = np.minimum(_INTEGER_ORDER_GAP, 0.02 / spread)
    n0 = np.round(mu.real)
    near = (np.abs(mu.imag) < h) & (np.abs(mu.real - n0) < h)
    if not np.any(near):
        return _q_connection(nu, mu, x, xm1)
    q, dq = np.empty(mu.shape, complex), np.empty(mu.shape, complex)
    far = ~near
    if np.any(far):
        q[far], dq[far], _ = _q_connection(nu[far], mu[far], x[far], xm1[far])
    hn, n0n = h[near], n0[near]
    t = (mu[near] - n0n) / hn
    nodes = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
    qv = np.zeros(t.shape, complex)
    dqv = np.zeros(t.shape, complex)
    for i, di in enumerate(nodes):
        wgt = np.ones_like(t)
        for j, dj in enumerate(nodes):
            if i != j:
                wgt = wgt * (t - dj) / (di - dj)
        qi, dqi, _ = _q_connection(nu[near], n0n + di * hn, x[near], xm1[near])
        qv += wgt * qi
        dqv += wgt * dqi
    q[near], dq[near] = qv, dqv
    return q, dq, np.zeros(mu.shape)


def _q_taylor(nu, mu, x, x_start):
    """Continue Olver Q inward from x_start to x with local Taylor steps.

    Uses (1-x^2)^2 v'' - 2x(1-x^2) v' + (nu(nu+1)(1-x^2) - mu^2) v = 0.
    Q grows toward x = 1, so inward continuation is the stable direction.
    """
    v, dv, _ = _q_inverse_square(nu, mu, x_start)
    cur = x_start.copy()
    lam = nu * (nu + 1.0)
    mu2 = mu * mu
    span = np.maximum(np.abs(mu), 2.0)
    idx = np.arange(x.size)
    while idx.size:
        x0 = cur[idx]
        h = np.maximum(-(x0 - 1.0) / span[idx], x[idx] - x0)
        # polynomial coefficients in t = x - x0
        s0 = 1.0 - x0 * x0
        p = [s0 * s0, -4.0 * x0 * s0, 2.0 * (3.0 * x0 * x0 - 1.0), 4.0 * x0, 1.0]
        qc = [-2.0 * x0 * s0, -2.0 * (1.0 - 3.0 * x0 * x0), 6.0 * x0, 2.0]
        r = [lam[idx] * s0 - mu2[idx], -2.0 * lam[idx] * x0, -lam[idx]]
        coef = [v[idx], dv[idx]]
        val = coef[0] + coef[1] * h
        der = coef[1].copy()
        hp = h.copy()
        n = 0
        while True:
            acc = np.zeros(idx.size, complex)
            for i in range(1, 5):
                m = n - i + 2
                if 0 <= m < len(coef):
                    acc += p[i] * m * (m - 1) * coef[m]
            for i in range(4):
                m = n - i + 1
                if 0 <= m < len(coef):
                    acc += qc[i] * m * coef[m]
            for i in range(3):
                m = n - i
                if 0 <= m < len(coef):
                    acc += r[i] * coef[m]
            a_next = -acc / (p[0] * (n + 2) * (n + 1))
            coef.append(a_next)
            der += (n + 2) * a_next * hp
            hp = hp * h
            inc = a_next * hp
            val += inc
            n += 1
            if n > 8 and np.all(np.abs(inc) <= 1e-18 * np.abs(val)) and np.all(
                np.abs((n + 2) * coef[-1] * hp) <= 1e-18 * np.maximum(np.abs(der), 1e-300)
            ):
                break
            if n > 400:
                raise ConvergenceError("Taylor continuation of Q did not converge")
        v[idx] = val
        dv[idx] = der
        cur[idx] = x0 + h
        done = cur[idx] <= x[idx]
        idx = idx[~done]
    return v, dv


def _olver_q(nu, mu, x, xm1):
    """Pick a route for Olver Q per lane by the number of digits each would lose."""
    # the connection formula cancels the growth of P at large x
    grow = (2.0 * nu.real + 1.0) * np.log10(x + np.sqrt(x * x - 1.0))
    # the inverse-square series has peak terms near exp(|Im mu| / x) and stalls as x -> 1
    peak = np.abs(mu.imag) / x / np.log(10.0)
    slow = x < 1.05
    use_series = (~slow) & (peak < grow + 1.0) & (peak < 3.0)
    use_conn = ~use_series & ((grow < 3.0) | slow)
    use_taylor = ~(use_series | use_conn)
    q = np.empty(x.shape, complex)
    dq = np.empty(x.shape, complex)
    if np.any(use_series):
        q[use_series], dq[use_series], _ = _q_inverse_square(nu[use_series], mu[use_series], x[use_series])
    if np.any(use_conn):
        q[use_conn], dq[use_conn], _ = _q_connection_safe(nu[use_conn], mu[use_conn], x[use_conn], xm1[use_conn])
    if np.any(use_taylor):
        sel = use_taylor
        x_start = np.maximum(x[sel], np.abs(mu[sel].imag) / (3.0 * np.log(10.0)))
        q[sel], dq[sel] = _q_taylor(nu[sel], mu[sel], x[sel], x_start)
    return q, dq


def _check_legendre_domain(nu, mu, x, xm1, mu_max=4.0):
    if np.any(~np.isfinite(x)) or np.any(~(xm1 > 0.0)):
        raise DomainError("Legendre argument must satisfy x > 1")
    if np.any(x > 1e3):
        raise DomainError("Legendre argument above 1e3")
    if np.any(nu < -0.5) or np.any(nu > 10.0):
        raise DomainError("Legendre degree outside [-1/2, 10]")
    real_order = mu.imag == 0
    imag_order = mu.real == 0
    if np.any(~(real_order | imag_order)):
        raise DomainError("Legendre order must be real or purely imaginary")
    if np.any(real_order & ((mu.real < 0) | (mu.real > mu_max))):
        raise DomainError(f"real Legendre order outside [0, {mu_max:g}]")
    if np.any(imag_order & (np.abs(mu.imag) > 50.0)):
        raise DomainError("imaginary Legendre order with |s| > 50")


def _legendre_args(nu, mu, x, xm1):
    if xm1 is None:
        nu_a, mu_a, x_a = np.broadcast_arrays(np.asarray(nu, float), np.asarray(mu, complex), np.asarray(x, float))
        return nu_a, mu_a, x_a, x_a - 1.0
    nu_a, mu_a, d_a = np.broadcast_arrays(np.asarray(nu, float), np.asarray(mu, complex), np.asarray(xm1, float))
    return nu_a, mu_a, 1.0 + d_a, d_a


def legendre_eval(nu, mu, x=None, *, xm1=None) -> LegendreEval:
    """P^{-mu}_nu(x), Olver Q^{mu}_nu(x) and their x-derivatives for x > 1.

    ``mu`` is real or purely imaginary.  Passing ``xm1 = x - 1`` instead of x
    keeps full relative accuracy next to x = 1.  Inputs broadcast; scalar
    inputs give scalar fields.
    """
    arg = x if xm1 is None else xm1
    scalar = np.ndim(nu) == 0 and np.ndim(mu) == 0 and np.ndim(arg) == 0
    nu_a, mu_a, x_a, d_a = _legendre_args(nu, mu, x, xm1)
    _check_legendre_domain(nu_a, mu_a, x_a, d_a)
    shape = x_a.shape
    nu_f, mu_f, x_f, d_f = (v.ravel().copy() for v in (nu_a, mu_a, x_a, d_a))
    p, dp = _p_minus(nu_f, mu_f, x_f, d_f)
    q, dq = _olver_q(nu_f.astype(complex), mu_f, x_f, d_f)
    fields = [v.reshape(shape) for v in (p, q, dp, dq)]
    fields = [_unwrap(v, scalar) for v in fields]
    return LegendreEval(
        degree=_unwrap(nu_a, scalar) if scalar else nu_a,
        order=_unwrap(mu_a, scalar) if scalar else mu_a,
        argument=_unwrap(x_a, scalar) if scalar else x_a,
        p=fields[0],
        q=fields[1],
        p_prime=fields[2],
        q_prime=fields[3],
    )


def legendre_p(nu, mu, x=None, *, xm1=None):
    """P^{-mu}_nu(x) and its x-derivative only (skips the second kind work).

    The series for P converges for any order, so real orders up to
    ``P_ORDER_MAX`` are accepted here.
    """
    nu_a, mu_a, x_a, d_a = _legendre_args(nu, mu, x, xm1)
    _check_legendre_domain(nu_a, mu_a, x_a, d_a, mu_max=P_ORDER_MAX)
    shape = x_a.shape
    p, dp = _p_minus(nu_a.ravel(), mu_a.ravel(), x_a.ravel(), d_a.ravel())
    return p.reshape(shape), dp.reshape(shape)


def legendre_wronskian(nu, mu, x):
    """Closed form of P^{-mu} Q^{mu}' - P^{-mu}' Q^{mu}."""
    return _rgamma(np.asarray(mu) + np.asarray(nu) + 1.0) / (1.0 - np.asarray(x, float) ** 2)


# ---------------------------------------------------------------- Bessel

_EPS = np.finfo(float).eps
_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _jis_series(s, z):
    """exp(-pi s/2) J_{is}(z) and its z-derivative by the ascending series.

    Returns (value, derivative, estimated relative error).
    """
    nu = 1j * s
    lead = np.exp(nu * np.log(0.5 * z) - sp.loggamma(1.0 + nu) - 0.5 * np.pi * s)
    q = -0.25 * z * z
    term = np.ones(z.shape, complex)
    total = term.copy()
    dsum = nu * term
    mass = np.ones(z.shape)
    k = 0
    idx = np.arange(z.size)
    while idx.size:
        t = term[idx] * q[idx] / ((k + 1) * (nu[idx] + k + 1))
        term[idx] = t
        total[idx] += t
        dsum[idx] += (nu[idx] + 2 * (k + 1)) * t
        mass[idx] += np.abs(t)
        k += 1
        done = (np.abs(t) <= 1e-17 * np.abs(total[idx])) & (k > 0.5 * z[idx])
        idx = idx[~done]
        if k > 5000:
            raise ConvergenceError("Bessel ascending series did not converge")
    val = lead * total
    der = lead * dsum / z
    err = 8.0 * _EPS * mass / np.maximum(np.abs(total), 1e-300) * np.sqrt(k + 1.0)
    return val, der, err


def _jis_hankel(s, z):
    """exp(-pi s/2) J_{is}(z) and derivative from the Hankel expansions.

    The expansion is summed up to its smallest term, located at the larger
    root of (2k-1)^2 + 4s^2 = 8zk; lanes without such a root get err = inf.
    """
    nu2 = -4.0 * s * s
    disc = (4.0 + 8.0 * z) ** 2 - 16.0 * (1.0 - nu2)
    kstop = np.where(disc > 0, np.floor((4.0 + 8.0 * z + np.sqrt(np.maximum(disc, 0))) / 8.0), 0)
    kstop = np.minimum(kstop, 600)
    coef = np.ones(z.shape, complex)
    s1 = coef.copy()
    s2 = coef.copy()
    d1 = np.zeros(z.shape, complex)
    d2 = np.zeros(z.shape, complex)
    peak = np.ones(z.shape)
    last = np.ones(z.shape)
    kmax = int(kstop.max()) if kstop.size else 0
    for k in range(1, kmax + 1):
        coef = coef * (nu2 - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(coef)
        active = (k <= kstop) & (last > 1e-18)
        if not np.any(active):
            break
        ik = 1j**k
        s1 = np.where(active, s1 + ik * coef, s1)
        s2 = np.where(active, s2 + np.conj(ik) * coef, s2)
        d1 = np.where(active, d1 - k * ik * coef / z, d1)
        d2 = np.where(active, d2 - k * np.conj(ik) * coef / z, d2)
        peak = np.where(active, np.maximum(peak, mag), peak)
        last = np.where(active, mag, last)
    amp = np.sqrt(2.0 / (np.pi * z))
    ph = np.exp(1j * (z - 0.25 * np.pi))
    damp = np.exp(-np.pi * s)
    h1 = amp * ph * s1
    h2 = amp * damp * np.conj(ph) * s2
    h1p = amp * ph * ((1j - 0.5 / z) * s1 + d1)
    h2p = amp * damp * np.conj(ph) * ((-1j - 0.5 / z) * s2 + d2)
    err = (last + 8.0 * _EPS * peak) / np.maximum(np.abs(s1), 1e-300)
    err = np.where(kstop >= 1, err, np.inf)
    return 0.5 * (h1 + h2), 0.5 * (h1p + h2p), err


def _jis_schlafli(s, z, nodes=None):
    """exp(-pi s/2) J_{is}(z) and derivative from Schlafli's integral.

    Accurate for small s where cosh(pi s) does not swamp the result.
    """
    n = nodes or int(min(2000, 60 + 2 * np.max(z)))
    x, w = _gauss_legendre(n)
    nu = 1j * s[:, None]
    th = 0.5 * np.pi * (x + 1.0)
    arg = z[:, None] * np.sin(th) - nu * th
    i1 = 0.5 * np.sum(w * np.cos(arg), axis=1)
    d1 = -0.5 * np.sum(w * np.sin(th) * np.sin(arg), axis=1)
    tmax = np.arcsinh(45.0 / z)[:, None]
    m = 80
    xg, wg = _gauss_legendre(m)
    t = 0.5 * tmax * (xg + 1.0)
    e = np.exp(-z[:, None] * np.sinh(t) - nu * t)
    i2 = 0.5 * tmax[:, 0] * np.sum(wg * e, axis=1)
    d2 = 0.5 * tmax[:, 0] * np.sum(wg * np.sinh(t) * e, axis=1)
    sin_nu_pi = 1j * np.sinh(np.pi * s)
    scale = np.exp(-0.5 * np.pi * s)
    val = (i1 - sin_nu_pi * i2 / np.pi) * scale
    der = (d1 + sin_nu_pi * d2 / np.pi) * scale
    err = 16.0 * _EPS * np.cosh(np.pi * s) * scale / np.maximum(np.abs(val), 1e-300)
    return val, der, err


def _jis_taylor(s, z, z0, f0, d0):
    """Carry (f, f') of Bessel's equation with order i s from z0 out to z.

    Local Taylor steps of z^2 f'' + z f' + (z^2 + s^2) f = 0.  With an
    imaginary order there is no turning point, so the continuation is
    neutrally stable.
    """
    f, d = f0.astype(complex).copy(), d0.astype(complex).copy()
    cur = z0.astype(float).copy()
    s2 = s * s
    idx = np.flatnonzero(cur < z)
    while idx.size:
        c0 = cur[idx]
        freq = np.sqrt(1.0 + s2[idx] / (c0 * c0))
        h = np.minimum(np.minimum(0.5 * c0, 0.8 / freq), z[idx] - c0)
        a = [f[idx], d[idx]]
        val = a[0] + a[1] * h
        der = a[1].copy()
        hp = h.copy()
        n = 0
        zz = c0 * c0
        while True:
            acc = (2.0 * c0 * n + c0) * (n + 1) * a[n + 1] + (n * n + zz + s2[idx]) * a[n]
            if n >= 1:
                acc = acc + 2.0 * c0 * a[n - 1]
            if n >= 2:
                acc = acc + a[n - 2]
            nxt = -acc / (zz * (n + 2) * (n + 1))
            a.append(nxt)
            der = der + (n + 2) * nxt * hp
            hp = hp * h
            inc = nxt * hp
            val = val + inc
            n += 1
            if n > 6 and np.all(np.abs(inc) <= 1e-18 * np.abs(val)) and np.all(
                np.abs((n + 1) * nxt * hp / h) <= 1e-18 * np.maximum(np.abs(der), 1e-300)
            ):
                break
            if n > 300:
                raise ConvergenceError("Taylor continuation of J did not converge")
        f[idx], d[idx] = val, der
        cur[idx] = c0 + h
        idx = idx[cur[idx] < z[idx]]
    return f, d


def scaled_bessel_imag(s, z):
    """exp(-pi s/2) J_{is}(z) and its z-derivative for s > 0, z > 0.

    J_{-is}(z) is the complex conjugate for real z.
    """
    s, z = np.broadcast_arrays(np.asarray(s, float), np.asarray(z, float))
    shape = z.shape
    s, z = s.ravel().copy(), z.ravel().copy()
    val = np.zeros(z.shape, complex)
    der = np.zeros(z.shape, complex)
    err = np.full(z.shape, np.inf)
    # past this the ascending series cancels catastrophically anyway
    small = z <= 2.0 * np.maximum(20.0, s)
    if np.any(small):
        val[small], der[small], err[small] = _jis_series(s[small], z[small])
    bad = err > 1e-13
    if np.any(bad):
        hv, hd, he = _jis_hankel(s[bad], z[bad])
        take = he < err[bad]
        sub = np.flatnonzero(bad)[take]
        val[sub], der[sub], err[sub] = hv[take], hd[take], he[take]
    bad = (err > 1e-13) & (s < 6.0)
    if np.any(bad):
        qv, qd, qe = _jis_schlafli(s[bad], z[bad])
        take = qe < err[bad]
        sub = np.flatnonzero(bad)[take]
        val[sub], der[sub], err[sub] = qv[take], qd[take], qe[take]
    bad = err > 1e-13
    if np.any(bad):
        sb, zb = s[bad], z[bad]
        # start where the ascending series loses at most about two digits
        z0 = np.minimum(zb, 2.0 * np.sqrt(4.6 * np.maximum(sb, 1.0)))
        f0, d0, e0 = _jis_series(sb, z0)
        tv, td = _jis_taylor(sb, zb, z0, f0, d0)
        te = 10.0 * e0 + 1e-14
        take = te < err[bad]
        sub = np.flatnonzero(bad)[take]
        val[sub], der[sub], err[sub] = tv[take], td[take], te[take]
    return val.reshape(shape), der.reshape(shape), err.reshape(shape)


def _check_bessel_domain(nu, z):
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise DomainError("Bessel argument must be positive")
    if np.any(z > BESSEL_Z_MAX):
        raise DomainError("Bessel argument above 1e4")
    if np.any((nu.real != 0) & (nu.imag != 0)):
        raise DomainError("Bessel order must be real or purely imaginary")
    if np.any(np.abs(nu) > BESSEL_NU_MAX) or np.any(nu.real < 0):
        raise DomainError("Bessel order outside [0, 50] or |is| > 50")


def bessel_eval(nu, z) -> CylinderEval:
    """J_nu, Y_nu and derivatives at z > 0.

    Real orders in [0, 50] use scipy. A purely imaginary order ``nu = i s``
    returns the complex NIST functions, with
    Y = (J_nu cos(nu pi) - J_{-nu}) / sin(nu pi).  Y loses about
    log10(1/s) digits as s -> 0.
    """
    scalar = np.ndim(nu) == 0 and np.ndim(z) == 0
    nu_a, z_a = np.broadcast_arrays(np.asarray(nu, complex), np.asarray(z, float))
    _check_bessel_domain(nu_a, z_a)
    shape = z_a.shape
    nu_f, z_f = nu_a.ravel(), z_a.ravel()
    j = np.empty(z_f.shape, complex)
    y = np.empty_like(j)
    jp = np.empty_like(j)
    yp = np.empty_like(j)
    real = nu_f.imag == 0
    if np.any(real):
        n, x = nu_f[real].real, z_f[real]
        j[real], y[real] = sp.jv(n, x), sp.yv(n, x)
        jp[real], yp[real] = sp.jvp(n, x), sp.yvp(n, x)
    imag = ~real
    if np.any(imag):
        s, x = nu_f[imag].imag, z_f[imag]
        f, fp, _ = scaled_bessel_imag(s, x)
        up = np.exp(0.5 * np.pi * s)
        jj, jjp = f * up, fp * up
        jm, jmp = np.conj(jj), np.conj(jjp)
        cs, sn = np.cosh(np.pi * s), 1j * np.sinh(np.pi * s)
        j[imag], jp[imag] = jj, jjp
        y[imag] = (jj * cs - jm) / sn
        yp[imag] = (jjp * cs - jmp) / sn
    out = [v.reshape(shape) for v in (j, y, jp, yp)]
    if np.all(real):
        out = [v.real for v in out]
    out = [_unwrap(v, scalar) for v in out]
    order = _unwrap(nu_a, scalar) if scalar else nu_a
    if scalar and np.all(real):
        order = order.real
    return CylinderEval(order, _unwrap(z_a, scalar) if scalar else z_a, *out)


def cylinder_pair(nu, z):
    """A well-conditioned pair of cylinder solutions at z > 0.

    Returns (f1, f1', f2, f2', c) with f1 f2' - f1' f2 = c / z.  Real orders
    give (J, Y, 2/pi).  An imaginary order i s gives exp(-pi s/2) J_{+-is},
    whose Wronskian constant is -i (1 - exp(-2 pi s)) / pi.
    """
    nu = complex(nu)
    z = np.asarray(z, float)
    if nu.imag == 0:
        n = nu.real
        return sp.jv(n, z), sp.jvp(n, z), sp.yv(n, z), sp.yvp(n, z), 2.0 / np.pi
    s = nu.imag
    f, fp, _ = scaled_bessel_imag(np.full(z.shape, s), z)
    c = -1j * (-np.expm1(-2.0 * np.pi * s)) / np.pi
    return f, fp, np.conj(f), np.conj(fp), c
