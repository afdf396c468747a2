"""Brane geometry and the spectral theory of the transverse operator.

    L = -sinh^{-2}(rho) d/drho (sinh^4(rho) d/drho) + M^2 sinh^2(rho)   on (0, rho0]

acts in H = L^2(sinh^2 rho d rho) with a Robin condition u'(rho0) + c u(rho0) = 0
or a Dirichlet condition at the brane.  Its spectrum is a finite set of
eigenvalues below 9/4 plus the absolutely continuous band m^2 >= 9/4.

Integrals in rho are done in y = log coth(rho/2), where v = sinh^{3/2}(rho) u
turns H isometrically into L^2(y0, inf) and the rho = 0 end becomes y = inf.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import specialfn, tables

THRESHOLD = 2.25
# lowest lambda whose Legendre order sqrt(9/4 - lambda) the P series accepts
LAMBDA_MIN = THRESHOLD - specialfn.P_ORDER_MAX**2
GUARD_BAND = 1e-8
M_MAX_DEFAULT = 40.0


class Boundary(enum.Enum):
    DIRICHLET = "dirichlet"


DIRICHLET = Boundary.DIRICHLET


@dataclass(frozen=True)
class BraneGeometry:
    alpha: float
    rho0: float
    y0: float
    gamma: float
    scalar_curvature: float


def geometry_from_alpha(alpha: float) -> BraneGeometry:
    if not (-1.0 < alpha < 0.0):
        raise specialfn.DomainError("alpha must lie in (-1, 0)")
    root = np.sqrt(1.0 - alpha * alpha)
    rho0 = float(np.log((1.0 + root) / -alpha))
    y0 = float(np.log((1.0 - alpha + root) / (1.0 + alpha + root)))
    gamma = float(np.sqrt(2.0 / (np.sinh(rho0) * np.cosh(rho0) - rho0)))
    return BraneGeometry(alpha, rho0, y0, gamma, 12.0 * alpha**2 / (1.0 - alpha**2))


@dataclass(frozen=True)
class CoordMaps:
    """rho <-> y, rho <-> x = cosh rho, and bulk (t, z) <-> (tau, rho)."""

    geometry: BraneGeometry

    def _rho_ok(self, rho):
        rho = np.asarray(rho, float)
        if np.any(rho <= 0) or np.any(rho > self.geometry.rho0 * (1 + 1e-14)):
            raise specialfn.DomainError("rho outside (0, rho0]")
        return rho

    def rho_to_y(self, rho):
        rho = self._rho_ok(rho)
        return -np.log(np.tanh(0.5 * rho))

    def y_to_rho(self, y):
        y = np.asarray(y, float)
        if np.any(y < self.geometry.y0 * (1 - 1e-14)):
            raise specialfn.DomainError("y below y0")
        # the map is an involution
        return -np.log(np.tanh(0.5 * y))

    def rho_to_x(self, rho):
        return np.cosh(self._rho_ok(rho))

    def x_to_rho(self, x):
        x = np.asarray(x, float)
        if np.any(x <= 1.0) or np.any(x > -1.0 / self.geometry.alpha * (1 + 1e-14)):
            raise specialfn.DomainError("x outside (1, -1/alpha]")
        return np.arccosh(x)

    def tz_to_tau_rho(self, t, z):
        t, z = np.asarray(t, float), np.asarray(z, float)
        if np.any(z <= 0) or np.any(t >= -z):
            raise specialfn.DomainError("need t < -z < 0")
        # factored so that t^2 - z^2 does not cancel
        tau = -0.5 * (np.log(-t - z) + np.log(z - t))
        rho = np.arccosh(-t / z)
        if np.any(rho > self.geometry.rho0 * (1 + 1e-14)):
            raise specialfn.DomainError("point lies beyond the brane")
        return tau, rho

    def tau_rho_to_tz(self, tau, rho):
        rho = self._rho_ok(rho)
        e = np.exp(-np.asarray(tau, float))
        return -e / np.tanh(rho), e / np.sinh(rho)


def coord_maps(geometry: BraneGeometry) -> CoordMaps:
    return CoordMaps(geometry)


@dataclass(frozen=True)
class OperatorSpec:
    M: float
    c: float | Boundary
    geometry: BraneGeometry

    def __post_init__(self):
        if not (np.isfinite(self.M) and self.M >= 0):
            raise ValueError("bulk mass M must be finite and non-negative")
        if not isinstance(self.c, Boundary) and not np.isfinite(self.c):
            raise ValueError("Robin coefficient must be finite; use DIRICHLET for c = inf")
        if self.legendre_degree > 10.0:
            raise specialfn.DomainError("bulk mass too large for the Legendre range (M <= 10.48)")

    @property
    def legendre_degree(self) -> float:
        return -0.5 + float(np.sqrt(self.M**2 + 4.0))

    @property
    def dirichlet(self) -> bool:
        return self.c is DIRICHLET

    @property
    def brane_x(self) -> float:
        return -1.0 / self.geometry.alpha

    @property
    def x_slope(self) -> float:
        """k in the brane condition v'(x*) = k v(x*) for v = sinh^{3/2} u as a function of x."""
        a = self.geometry.alpha
        r = np.sqrt(1.0 - a * a)
        return a / r * (self.c - 1.5 / r)


# ---------------------------------------------------------------- quadrature in y


@dataclass(frozen=True)
class RhoGrid:
    """Gauss nodes in y on [y0, y_max] mapped to rho, with weights for H inner products."""

    y: np.ndarray
    y_weights: np.ndarray
    rho: np.ndarray
    h_weights: np.ndarray
    y0: float

    @property
    def size(self):
        return self.rho.size


def rho_quadrature(geometry: BraneGeometry, rho_min: float | None = None, y_span: float = 12.0,
                   n_panels: int = 32, order: int = 16) -> RhoGrid:
    """Composite Gauss-Legendre rule in y.

    Without ``rho_min`` the rule reaches y0 + y_span, far enough that data
    bounded near rho = 0 has sinh^{3/2}-weighted mass below 1e-15 beyond it.
    The weight grows like y^-3 towards small y0, so the first panel is halved
    until it is no wider than y0.
    """
    maps = CoordMaps(geometry)
    y0 = geometry.y0
    y_max = y0 + y_span if rho_min is None else float(maps.rho_to_y(rho_min))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(y0, y_max, n_panels + 1)
    inner = []
    width = edges[1] - y0
    while width > y0:
        width *= 0.5
        inner.append(y0 + width)
    edges = np.concatenate([[y0], inner[::-1], edges[1:]])
    half = 0.5 * np.diff(edges)
    y = (edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
    wy = (half[:, None] * w[None, :]).ravel()
    rho = maps.y_to_rho(y)
    return RhoGrid(y, wy, rho, wy * np.sinh(rho) ** 3, geometry.y0)


def cosh_minus_one(rho):
    return 2.0 * np.sinh(0.5 * np.asarray(rho, float)) ** 2


def coth_minus_one(y):
    return 2.0 / np.expm1(2.0 * np.asarray(y, float))


def h_inner(f, g, grid: RhoGrid):
    """<f, g>_H along the last axis (no conjugation; callers pass real basis functions)."""
    return np.sum(np.asarray(f) * np.asarray(g) * grid.h_weights, axis=-1)


# ---------------------------------------------------------------- point spectrum


def _order(lam):
    lam = np.asarray(lam, float)
    if np.any(lam >= THRESHOLD):
        raise ValueError("lambda must be below 9/4")
    return np.sqrt(THRESHOLD - lam)


def transcendental_residual(lam, spec: OperatorSpec):
    """Left side of the eigenvalue condition at lambda < 9/4 (array-valued)."""
    mu = _order(lam)
    nu = spec.legendre_degree
    x = spec.brane_x
    p, _ = specialfn.legendre_p(nu, mu, x)
    if spec.dirichlet:
        return np.real(p)
    a = spec.geometry.alpha
    root_m = np.sqrt(spec.M**2 + 4.0)
    p1, _ = specialfn.legendre_p(nu - 1.0, mu, x)
    res = (spec.c * np.sqrt(1.0 - a * a) - 2.0 + root_m) * p + a * (nu - mu) * p1
    return np.real(res)


def derivative_residual(lam, spec: OperatorSpec):
    """The same condition written as P'(x*) - k P(x*) (Dirichlet: P(x*))."""
    mu = _order(lam)
    p, dp = specialfn.legendre_p(spec.legendre_degree, mu, spec.brane_x)
    if spec.dirichlet:
        return np.real(p)
    return np.real(dp - spec.x_slope * p)


def form_lower_bound(spec: OperatorSpec) -> float:
    """Lower bound for the spectrum from the quadratic form in y.

    The potential is at least 9/4 and the brane condition reads
    v'(y0) = beta v(y0); a half-line Robin problem with beta < 0 has bottom -beta^2.
    For c >= 0 every term of the form in rho is nonnegative, so 0 is a bound too.
    """
    if spec.dirichlet:
        return THRESHOLD
    a = spec.geometry.alpha
    beta = (3.0 - 2.0 * spec.c * np.sqrt(1.0 - a * a)) / (2.0 * a)
    bound = THRESHOLD - beta * beta if beta < 0 else THRESHOLD
    return max(bound, 0.0) if spec.c >= 0 else bound


def default_floor(spec: OperatorSpec) -> float:
    """-max(10, 4M^2 + 10), lowered further when the form bound sits below it.

    The result never goes below LAMBDA_MIN; a warning reports when the form
    bound had to be cut off there.
    """
    floor = min(-max(10.0, 4.0 * spec.M**2 + 10.0), form_lower_bound(spec) - 1.0)
    if floor < LAMBDA_MIN:
        warnings.warn(f"form bound {floor:.6g} lies below the supported range; scanning from {LAMBDA_MIN:g}",
                      RuntimeWarning, stacklevel=3)
        return LAMBDA_MIN
    return floor


@dataclass
class PointSpectrum:
    eigenvalues: np.ndarray
    norms: np.ndarray
    floor: float
    floor_residual: float
    grid: RhoGrid | None = None
    eigenfunctions: np.ndarray | None = field(default=None)
    derivatives: np.ndarray | None = field(default=None)
    brane_values: np.ndarray | None = field(default=None)


def _scan(spec, lo, hi, step):
    lam = np.arange(lo, hi, step)
    lam = np.append(lam, hi)
    r = transcendental_residual(lam, spec)
    if not np.all(np.isfinite(r)):
        bad = lam[~np.isfinite(r)][0]
        raise specialfn.ConvergenceError(f"non-finite residual at lambda = {bad:.6g}")
    return lam, r


def _brackets(lam, r):
    out = []
    for i in np.nonzero(r[:-1] == 0)[0]:
        out.append((lam[i], lam[i]))
    s = np.sign(r)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        out.append((lam[i], lam[i + 1]))
    return sorted(set(out))


def _p_norm(spec: OperatorSpec, mu: float) -> float:
    """||P^{-mu}_nu||_{L^2((1, x*), dx/(x^2 - 1))} computed as an integral over y >= y0."""
    y0 = spec.geometry.y0
    # P(coth y) ~ e^{-mu y}; go out to e^{-40} in the square
    span = 20.0 / mu + 5.0
    x, w = np.polynomial.legendre.leggauss(32)
    edges = y0 + span * np.linspace(0.0, 1.0, 25) ** 2
    half = 0.5 * np.diff(edges)
    y = (edges[:-1, None] + half[:, None] * (x + 1.0)).ravel()
    wy = (half[:, None] * w).ravel()
    p, _ = specialfn.legendre_p(spec.legendre_degree, mu, xm1=coth_minus_one(y))
    return float(np.sqrt(np.sum(wy * np.real(p) ** 2)))


def _from_x(body, dbody, rho):
    """w = sinh^{-3/2} v(cosh rho) and dw/drho from v and dv/dx."""
    sh = np.sinh(rho)
    w = body * sh**-1.5
    dw = sh**-1.5 * (sh * dbody - 1.5 * body / np.tanh(rho))
    return w, dw


def eigenfunction(spec: OperatorSpec, lam: float, rho, norm: float | None = None, derivative: bool = False):
    """Unit-norm eigenfunction sinh^{-3/2}(rho) P^{-mu}_nu(cosh rho) / ||P||."""
    mu = float(_order(lam))
    if norm is None:
        norm = _p_norm(spec, mu)
    rho = np.asarray(rho, float)
    p, dp = specialfn.legendre_p(spec.legendre_degree, mu, xm1=cosh_minus_one(rho))
    w, dw = _from_x(np.real(p) / norm, np.real(dp) / norm, rho)
    return (w, dw) if derivative else w


def point_spectrum(spec: OperatorSpec, search_floor: float | None = None, step: float = 1e-3,
                   grid: RhoGrid | None = None) -> PointSpectrum:
    """All eigenvalues in [search_floor, 9/4) with unit-norm eigenfunctions.

    The scan halves its step until the bracket count repeats, then each
    bracket is refined to 1e-12 in lambda.
    """
    floor = default_floor(spec) if search_floor is None else float(search_floor)
    if floor >= THRESHOLD:
        raise ValueError("search floor must be below 9/4")
    if floor < LAMBDA_MIN:
        raise specialfn.DomainError(f"search floor {floor:.6g} is below the supported range (lambda >= {LAMBDA_MIN:g})")
    top = THRESHOLD - 1e-9
    lam, r = _scan(spec, floor, top, step)
    brackets = _brackets(lam, r)
    while True:
        step /= 2.0
        lam2, r2 = _scan(spec, floor, top, step)
        b2 = _brackets(lam2, r2)
        if len(b2) == len(brackets):
            brackets = b2
            break
        brackets = b2
        if step < 1e-6:
            break
    f = lambda x: float(transcendental_residual(x, spec))
    roots = []
    for a, b in brackets:
        roots.append(a if a == b else brentq(f, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200))
    roots = np.array(sorted(roots), float)
    norms = np.array([_p_norm(spec, float(_order(x))) for x in roots])
    ps = PointSpectrum(roots, norms, floor, float(r[0]), grid)
    if grid is not None:
        rho = np.append(grid.rho, spec.geometry.rho0)
        w = np.zeros((roots.size, rho.size))
        dw = np.zeros_like(w)
        for i, (x, n) in enumerate(zip(roots, norms)):
            w[i], dw[i] = eigenfunction(spec, x, rho, n, derivative=True)
        ps.eigenfunctions, ps.derivatives, ps.brane_values = w[:, :-1], dw[:, :-1], w[:, -1]
    return ps


# ---------------------------------------------------------------- continuous spectrum


def _asymptotic_coefficients(nu, mu, d_p, d_q):
    """Coefficients of e^{+isy} and e^{-isy} of d_p Q(coth y) - d_q P(coth y) as y -> inf."""
    g = specialfn.gamma_complex
    pis = np.pi / (2.0 * np.sin(mu * np.pi))
    a = -(d_p * pis / g(nu - mu + 1.0) + d_q) / g(1.0 + mu)
    b = d_p * pis / (g(1.0 - mu) * g(nu + mu + 1.0))
    return a, b


def generalized_eigenfunction(spec: OperatorSpec, m, rho, warn: bool = True, derivative: bool = False):
    """Real solution of L w = m^2 w obeying the brane condition, for m > 3/2.

    Built as sinh^{-3/2}(rho) [D_P Q(cosh rho) - D_Q P(cosh rho)] with
    P = P^{is}_nu, Q = Olver Q^{-is}_nu, s = sqrt(m^2 - 9/4) and D_F = F'(x*) - k F(x*)
    (Dirichlet: D_F = F(x*)).  The constant fixes the phase and the amplitude
    sqrt(2m / (pi s)) of the oscillation in y, which gives unit spectral
    density in dm.  Returns an array of shape (len(m), len(rho)).
    """
    m = np.atleast_1d(np.asarray(m, float))
    rho = np.atleast_1d(np.asarray(rho, float))
    if np.any(m <= 1.5):
        raise ValueError("continuous spectrum needs m > 3/2")
    if warn and np.any(m - 1.5 < GUARD_BAND):
        warnings.warn("m within the threshold guard band; normalization degenerates", RuntimeWarning, stacklevel=2)
    nu = spec.legendre_degree
    s = np.sqrt(m * m - THRESHOLD)
    mu = -1j * s
    d = np.concatenate([[spec.brane_x - 1.0], cosh_minus_one(rho)])
    e = specialfn.legendre_eval(nu, mu[:, None], xm1=d[None, :])
    p, q, dp, dq = e.p, e.q, e.p_prime, e.q_prime
    if spec.dirichlet:
        d_p, d_q = p[:, 0], q[:, 0]
    else:
        k = spec.x_slope
        d_p, d_q = dp[:, 0] - k * p[:, 0], dq[:, 0] - k * q[:, 0]
    a, b = _asymptotic_coefficients(nu, mu, d_p, d_q)
    phase = np.exp(-0.5j * np.angle(a * b))
    amp = np.sqrt(2.0 * m / (np.pi * s)) / (2.0 * np.abs(a))
    body = (d_p[:, None] * q[:, 1:] - d_q[:, None] * p[:, 1:]) * phase[:, None]
    dbody = (d_p[:, None] * dq[:, 1:] - d_q[:, None] * dp[:, 1:]) * phase[:, None]
    w, dw = _from_x(amp[:, None] * body.real, amp[:, None] * dbody.real, rho[None, :])
    return (w, dw) if derivative else w


def m_quadrature(m_max: float = M_MAX_DEFAULT, n_panels: int = 12, order: int = 24):
    """Composite Gauss in t = sqrt(m - 3/2) on [sqrt(guard), sqrt(m_max - 3/2)]: nodes and dm weights."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(np.sqrt(GUARD_BAND), np.sqrt(m_max - 1.5), n_panels + 1)
    half = 0.5 * np.diff(edges)
    t = (edges[:-1, None] + half[:, None] * (x + 1.0)).ravel()
    wt = (half[:, None] * w).ravel()
    return 1.5 + t * t, 2.0 * t * wt


@dataclass
class ContinuousBasis:
    m_grid: np.ndarray
    m_weights: np.ndarray
    w_samples: np.ndarray  # (n_m, n_rho)
    dw_samples: np.ndarray  # d/drho of the same
    brane_values: np.ndarray  # w(rho0; m^2)


@dataclass
class SpectralBasis:
    spec: OperatorSpec
    grid: RhoGrid
    point: PointSpectrum
    continuous: ContinuousBasis

    @property
    def eigenvalues(self):
        return self.point.eigenvalues


def build_basis(spec: OperatorSpec, grid: RhoGrid | None = None, m_max: float = M_MAX_DEFAULT,
                n_panels: int = 12, order: int = 24, search_floor: float | None = None) -> SpectralBasis:
    grid = rho_quadrature(spec.geometry) if grid is None else grid
    ps = point_spectrum(spec, search_floor, grid=grid)
    m, wm = m_quadrature(m_max, n_panels, order)
    w, dw = generalized_eigenfunction(spec, m, np.append(grid.rho, spec.geometry.rho0), warn=False, derivative=True)
    return SpectralBasis(spec, grid, ps, ContinuousBasis(m, wm, w[:, :-1], dw[:, :-1], w[:, -1]))


@dataclass
class SpectralCoefficients:
    """Point amplitudes C_j (..., n_p) and continuous density S(m) (..., n_m)."""

    point: np.ndarray
    continuous: np.ndarray


def spectral_forward(u, basis: SpectralBasis) -> SpectralCoefficients:
    """C_j = <u, w_j>_H and S(m) = <Pi_ac u, w(.; m^2)>_H; u is sampled on basis.grid along the last axis."""
    u = np.asarray(u)
    if u.shape[-1] != basis.grid.size:
        raise ValueError("field not sampled on the basis grid")
    ef = basis.point.eigenfunctions
    wts = basis.grid.h_weights
    c = np.tensordot(u * wts, ef, axes=([-1], [1])) if ef.size else np.zeros(u.shape[:-1] + (0,))
    ac = u - np.tensordot(c, ef, axes=([-1], [0])) if ef.size else u
    s = np.tensordot(ac * wts, basis.continuous.w_samples, axes=([-1], [1]))
    return SpectralCoefficients(c, s)


def spectral_inverse(coeffs: SpectralCoefficients, basis: SpectralBasis, what: str = "value"):
    """Sum_j C_j w_j + int S(m) w(.; m^2) dm on the basis grid.

    ``what`` selects the synthesized quantity: "value", "derivative" (d/drho)
    or "brane" (the value at rho0, one number per leading index).
    """
    cb, ps = basis.continuous, basis.point
    try:
        wc, wp = {"value": (cb.w_samples, ps.eigenfunctions), "derivative": (cb.dw_samples, ps.derivatives),
                  "brane": (cb.brane_values, ps.brane_values)}[what]
    except KeyError:
        raise ValueError(f"unknown quantity {what!r}") from None
    out = np.tensordot(coeffs.continuous * cb.m_weights, wc, axes=([-1], [0]))
    if wp.size:
        out = out + np.tensordot(coeffs.point, wp, axes=([-1], [0]))
    return out


def synthesize_at(coeffs: SpectralCoefficients, basis: SpectralBasis, rho):
    """spectral_inverse evaluated at arbitrary rho in (0, rho0] instead of the basis grid."""
    spec, cb, ps = basis.spec, basis.continuous, basis.point
    rho = np.atleast_1d(np.asarray(rho, float))
    w = generalized_eigenfunction(spec, cb.m_grid, rho, warn=False)
    out = np.tensordot(coeffs.continuous * cb.m_weights, w, axes=([-1], [0]))
    for j, (lam, n) in enumerate(zip(ps.eigenvalues, ps.norms)):
        out = out + coeffs.point[..., j, None] * eigenfunction(spec, lam, rho, n)
    return out


def parseval_sides(u, basis: SpectralBasis):
    """(||u||_H^2, sum |C_j|^2 + int |S|^2 dm)."""
    co = spectral_forward(u, basis)
    lhs = np.sum(np.abs(u) ** 2 * basis.grid.h_weights, axis=-1)
    rhs = np.sum(np.abs(co.point) ** 2, axis=-1) + np.sum(np.abs(co.continuous) ** 2 * basis.continuous.m_weights, axis=-1)
    return lhs, rhs


def equivalence_shift(basis: SpectralBasis) -> float:
    ev = basis.eigenvalues
    return 10.0 + (abs(float(ev.min())) if ev.size else 0.0)


@dataclass(frozen=True)
class H1Comparison:
    shift: float
    h1_side: float
    spectral_side: float
    form_side: float

    @property
    def ratio(self):
        return self.spectral_side / self.h1_side


def h1_equivalence_check(u, du, basis: SpectralBasis) -> H1Comparison:
    """Compare A||u||^2 + ||sinh(rho) u'||^2 with sum (A + lambda_j)|C_j|^2 + int (A + m^2)|S|^2 dm.

    ``form_side`` is the same spectral quantity computed directly as
    <L_c u, u> + A||u||^2 from the quadratic form, an independent route.
    """
    spec, grid = basis.spec, basis.grid
    a = equivalence_shift(basis)
    w = grid.h_weights
    sh = np.sinh(grid.rho)
    u, du = np.asarray(u, float), np.asarray(du, float)
    norm_h = float(np.sum(u * u * w))
    grad = float(np.sum((sh * du) ** 2 * w))
    co = spectral_forward(u, basis)
    cb = basis.continuous
    spec_side = float(np.sum((a + basis.eigenvalues) * co.point**2) + np.sum((a + cb.m_grid**2) * co.continuous**2 * cb.m_weights))
    form = grad + spec.M**2 * float(np.sum((sh * u) ** 2 * w)) + a * norm_h
    if not spec.dirichlet:
        # boundary term of the quadratic form needs u(rho0): extrapolate from the grid end
        form += spec.c * np.sinh(spec.geometry.rho0) ** 4 * _edge_value(u, grid) ** 2
    return H1Comparison(a, a * norm_h + grad, spec_side, form)


def _edge_value(u, grid: RhoGrid):
    """u at rho0 by polynomial extrapolation from the nodes nearest the brane."""
    n = min(10, grid.size)
    t = grid.y[:n] - grid.y0
    coef = np.polynomial.polynomial.polyfit(t / t[-1], u[:n], n - 1)
    return float(coef[0])


def liouville_norms(u_of_rho, geometry: BraneGeometry, rho_min: float, n: int = 400):
    """||u||_H by Gauss in rho and ||sinh^{3/2} u||_{L^2} by Gauss in y over the same region."""
    x, w = np.polynomial.legendre.leggauss(n)
    a, b = rho_min, geometry.rho0
    rho = a + 0.5 * (b - a) * (x + 1.0)
    nh = np.sum(0.5 * (b - a) * w * u_of_rho(rho) ** 2 * np.sinh(rho) ** 2)
    maps = CoordMaps(geometry)
    ya, yb = geometry.y0, float(maps.rho_to_y(rho_min))
    y = ya + 0.5 * (yb - ya) * (x + 1.0)
    r = maps.y_to_rho(y)
    nl = np.sum(0.5 * (yb - ya) * w * (np.sinh(r) ** 1.5 * u_of_rho(r)) ** 2)
    return float(np.sqrt(nh)), float(np.sqrt(nl))


# ---------------------------------------------------------------- portable basis tables


def spec_to_dict(spec: OperatorSpec) -> dict:
    c = "dirichlet" if spec.dirichlet else float(spec.c)
    return {"alpha": spec.geometry.alpha, "M": float(spec.M), "c": c}


def spec_from_dict(d: dict) -> OperatorSpec:
    c = DIRICHLET if d["c"] == "dirichlet" else float(d["c"])
    return OperatorSpec(float(d["M"]), c, geometry_from_alpha(float(d["alpha"])))


def export_basis(basis: SpectralBasis, path):
    """One row per basis function: kind (0 point, 1 continuous), lambda or m, norm or dm weight, samples."""
    g, ps, cb = basis.grid, basis.point, basis.continuous
    meta = {
        "table": "spectral_basis",
        "spec": spec_to_dict(basis.spec),
        "grid": {"y": g.y, "y_weights": g.y_weights, "rho": g.rho, "h_weights": g.h_weights, "y0": g.y0},
        "point": {"floor": ps.floor, "floor_residual": ps.floor_residual},
    }
    cols = ["kind", "param", "weight", "brane"] + [f"w{i}" for i in range(g.size)]
    n_p, n_m = ps.eigenvalues.size, cb.m_grid.size
    ef, de, be = ((ps.eigenfunctions, ps.derivatives, ps.brane_values) if n_p
                  else (np.zeros((0, g.size)), np.zeros((0, g.size)), np.zeros(0)))
    rows = np.vstack([
        np.column_stack([np.zeros(n_p), ps.eigenvalues, ps.norms, be, ef]),
        np.column_stack([np.full(n_p, 2.0), ps.eigenvalues, ps.norms, be, de]),
        np.column_stack([np.ones(n_m), cb.m_grid, cb.m_weights, cb.brane_values, cb.w_samples]),
        np.column_stack([np.full(n_m, 3.0), cb.m_grid, cb.m_weights, cb.brane_values, cb.dw_samples]),
    ])
    return tables.write_table(path, meta, cols, rows)


def load_basis(path) -> SpectralBasis:
    meta, _, rows = tables.read_table(path)
    if meta.get("table") != "spectral_basis":
        raise ValueError(f"{path}: not a spectral basis table")
    spec = spec_from_dict(meta["spec"])
    gm = meta["grid"]
    grid = RhoGrid(*(np.array(gm[k], float) for k in ("y", "y_weights", "rho", "h_weights")), float(gm["y0"]))
    pt, ct, pd, cd = (rows[rows[:, 0] == k] for k in (0, 1, 2, 3))
    ps = PointSpectrum(pt[:, 1].copy(), pt[:, 2].copy(), float(meta["point"]["floor"]),
                       float(meta["point"]["floor_residual"]), grid, pt[:, 4:].copy(), pd[:, 4:].copy(),
                       pt[:, 3].copy())
    cb = ContinuousBasis(ct[:, 1].copy(), ct[:, 2].copy(), ct[:, 4:].copy(), cd[:, 4:].copy(), ct[:, 3].copy())
    return SpectralBasis(spec, grid, ps, cb)
