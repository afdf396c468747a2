"""Bulk waves as towers of Klein-Gordon modes on the brane.

A field u(tau, xi, rho) sampled per radial frequency xi on the y-quadrature of
a spectral basis is split into eigenmode amplitudes C_j(tau, xi) and a
continuous density S(tau, xi, m).  Every amplitude then evolves on its own as
a steady-state Klein-Gordon mode of mass lambda_j or m^2.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import brane_spectrum as bs
from . import desitter_modes as dm
from . import tables

# relative size below which an extracted brane profile counts as zero
PHI_ZERO_TOL = 1e-10


@dataclass
class BulkState:
    """Fourier-in-x samples of a bulk field at one time.

    ``u`` and ``ut`` have shape (n_xi, n_rho).  ``ur`` (d/drho) and
    ``u_brane`` (values at rho0) are optional; the energy needs them.
    """

    xi_grid: np.ndarray
    rho_grid: bs.RhoGrid
    u: np.ndarray
    ut: np.ndarray
    tau: float
    xi_weights: np.ndarray | None = None
    ur: np.ndarray | None = None
    u_brane: np.ndarray | None = None
    truncation: float | None = None

    def __post_init__(self):
        self.xi_grid = np.asarray(self.xi_grid, float)
        if self.xi_grid.ndim != 1 or np.any(np.diff(self.xi_grid) <= 0) or np.any(self.xi_grid < 0):
            raise ValueError("xi_grid must be non-negative and strictly increasing")
        if np.any(np.diff(self.rho_grid.rho) >= 0):
            raise ValueError("rho nodes must decrease along the y-quadrature")
        shape = (self.xi_grid.size, self.rho_grid.size)
        self.u = np.asarray(self.u, complex)
        self.ut = np.asarray(self.ut, complex)
        for name in ("u", "ut", "ur"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, complex)
            setattr(self, name, arr)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
        if self.u_brane is not None:
            self.u_brane = np.asarray(self.u_brane, complex)
            if self.u_brane.shape != shape[:1]:
                raise ValueError("u_brane needs one value per xi")
        if self.xi_weights is None:
            self.xi_weights = dm.frequency_weights(dm.SpectralField(self.xi_grid, self.u[:, 0], self.ut[:, 0], self.tau))
        self.xi_weights = np.asarray(self.xi_weights, float)

    def x0_norm(self, which: str = "u") -> float:
        f = getattr(self, which)
        return float(np.sqrt(np.sum(self.xi_weights[:, None] * self.rho_grid.h_weights * np.abs(f) ** 2)))

    def x1_norm(self) -> float:
        """(||u||^2 + ||grad u||^2 + ||sinh(rho) u_rho||^2)^{1/2} in X^0."""
        if self.ur is None:
            raise ValueError("x1_norm needs ur")
        h = self.xi_weights[:, None] * self.rho_grid.h_weights
        sh = np.sinh(self.rho_grid.rho)
        dens = (1.0 + self.xi_grid[:, None] ** 2) * np.abs(self.u) ** 2 + (sh * np.abs(self.ur)) ** 2
        return float(np.sqrt(np.sum(h * dens)))


@dataclass
class TowerCoefficients:
    """Mode amplitudes: point parts (n_xi, n_p) and continuous densities (n_xi, n_m)."""

    xi_grid: np.ndarray
    xi_weights: np.ndarray
    tau: float
    eigenvalues: np.ndarray
    m_grid: np.ndarray
    m_weights: np.ndarray
    point_u: np.ndarray
    point_ut: np.ndarray
    cont_u: np.ndarray
    cont_ut: np.ndarray
    tail: float = 0.0  # X^0-squared mass missed by the truncated transform

    @property
    def kappas(self):
        return np.concatenate([self.eigenvalues, self.m_grid**2])

    def _field(self, u, ut):
        return dm.SpectralField(self.xi_grid, u, ut, self.tau, self.xi_weights)

    @property
    def point(self) -> list[dm.SpectralField]:
        return [self._field(self.point_u[:, j], self.point_ut[:, j]) for j in range(self.eigenvalues.size)]

    @property
    def continuous(self) -> list[dm.SpectralField]:
        return [self._field(self.cont_u[:, k], self.cont_ut[:, k]) for k in range(self.m_grid.size)]


@dataclass(frozen=True)
class EnergyReport:
    total: float
    per_mode: np.ndarray  # point energies, then continuous energies times their dm weights
    kappas: np.ndarray
    discrepancy: float

    @property
    def mode_sum(self):
        return float(np.sum(self.per_mode))


def _check_grid(state: BulkState, basis: bs.SpectralBasis):
    if state.rho_grid.size != basis.grid.size or not np.array_equal(state.rho_grid.rho, basis.grid.rho):
        raise ValueError("state is not sampled on the basis rho grid")


def decompose(state: BulkState, basis: bs.SpectralBasis) -> TowerCoefficients:
    _check_grid(state, basis)
    cu = bs.spectral_forward(state.u, basis)
    cut = bs.spectral_forward(state.ut, basis)
    lhs, rhs = bs.parseval_sides(state.u, basis)
    tail = float(np.sum(state.xi_weights * (lhs - rhs)))
    cb = basis.continuous
    return TowerCoefficients(state.xi_grid, state.xi_weights, state.tau, basis.eigenvalues.copy(), cb.m_grid,
                             cb.m_weights, cu.point, cut.point, cu.continuous, cut.continuous, max(tail, 0.0))


def _propagate(kappa, tau0, tau, xi, u, ut):
    p00, p01, p10, p11 = dm._propagator(dm.ModeParams(float(kappa)), tau0, tau, xi)
    return p00 * u + p01 * ut, p10 * u + p11 * ut


def evolve_tower(coeffs: TowerCoefficients, tau: float, workers: int = 1) -> TowerCoefficients:
    """Each amplitude evolves as a mode of mass lambda_j or m^2; modes never mix."""
    tau = float(tau)
    if tau == coeffs.tau:
        return replace(coeffs, point_u=coeffs.point_u.copy(), point_ut=coeffs.point_ut.copy(),
                       cont_u=coeffs.cont_u.copy(), cont_ut=coeffs.cont_ut.copy())
    u = np.concatenate([coeffs.point_u, coeffs.cont_u], axis=1)
    ut = np.concatenate([coeffs.point_ut, coeffs.cont_ut], axis=1)
    kap = coeffs.kappas

    def one(k):
        return _propagate(kap[k], coeffs.tau, tau, coeffs.xi_grid, u[:, k], ut[:, k])

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            cols = list(ex.map(one, range(kap.size)))
    else:
        cols = [one(k) for k in range(kap.size)]
    nu = np.stack([c[0] for c in cols], axis=1) if cols else u
    nut = np.stack([c[1] for c in cols], axis=1) if cols else ut
    n_p = coeffs.eigenvalues.size
    return replace(coeffs, tau=tau, point_u=nu[:, :n_p], point_ut=nut[:, :n_p], cont_u=nu[:, n_p:],
                   cont_ut=nut[:, n_p:])


def reconstruct(coeffs: TowerCoefficients, basis: bs.SpectralBasis) -> BulkState:
    """Inverse transform per xi row; the result carries ur, u_brane and the truncation budget."""
    cu = bs.SpectralCoefficients(coeffs.point_u, coeffs.cont_u)
    cut = bs.SpectralCoefficients(coeffs.point_ut, coeffs.cont_ut)
    return BulkState(coeffs.xi_grid, basis.grid, bs.spectral_inverse(cu, basis), bs.spectral_inverse(cut, basis),
                     coeffs.tau, coeffs.xi_weights, bs.spectral_inverse(cu, basis, "derivative"),
                     bs.spectral_inverse(cu, basis, "brane"), coeffs.tail)


def bulk_energy(state: BulkState, spec: bs.OperatorSpec) -> float:
    """The bulk energy by (xi, rho) quadrature, brane term included for Robin conditions."""
    if state.ur is None:
        raise ValueError("the bulk energy needs ur")
    g = state.rho_grid
    sh2 = np.sinh(g.rho) ** 2
    xi2 = state.xi_grid[:, None] ** 2
    dens = (np.abs(state.ut) ** 2 + (np.exp(-2.0 * state.tau) * xi2 + spec.M**2 * sh2) * np.abs(state.u) ** 2
            + sh2 * np.abs(state.ur) ** 2)
    per_xi = np.sum(g.h_weights * dens, axis=1)
    if not spec.dirichlet:
        ub = state.u_brane if state.u_brane is not None else np.array([bs._edge_value(r, g) for r in state.u])
        per_xi = per_xi + spec.c * np.sinh(spec.geometry.rho0) ** 4 * np.abs(ub) ** 2
    return float(np.sum(state.xi_weights * per_xi))


def mode_energies(coeffs: TowerCoefficients) -> np.ndarray:
    """Steady-state energies of every mode, continuous ones multiplied by their dm weights."""
    w = coeffs.xi_weights[:, None]
    xi2 = coeffs.xi_grid[:, None] ** 2
    u = np.concatenate([coeffs.point_u, coeffs.cont_u], axis=1)
    ut = np.concatenate([coeffs.point_ut, coeffs.cont_ut], axis=1)
    dens = np.abs(ut) ** 2 + (np.exp(-2.0 * coeffs.tau) * xi2 + coeffs.kappas) * np.abs(u) ** 2
    e = np.sum(w * dens, axis=0)
    e[coeffs.eigenvalues.size:] *= coeffs.m_weights
    return e


def energy_report(state: BulkState, coeffs: TowerCoefficients, spec: bs.OperatorSpec) -> EnergyReport:
    total = bulk_energy(state, spec)
    per = mode_energies(coeffs)
    return EnergyReport(total, per, coeffs.kappas, abs(total - float(np.sum(per))))


def mixed_norm_ratio(coeffs: TowerCoefficients, state: BulkState) -> float:
    """(sum + int of |u_t|^2 + |grad u|^2 + kappa_+ |u|^2 over modes) / (||u||_{X^1}^2 + ||u_t||_{X^0}^2)."""
    w = coeffs.xi_weights[:, None]
    xi2 = coeffs.xi_grid[:, None] ** 2
    u = np.concatenate([coeffs.point_u, coeffs.cont_u], axis=1)
    ut = np.concatenate([coeffs.point_ut, coeffs.cont_ut], axis=1)
    dens = np.abs(ut) ** 2 + (xi2 + np.maximum(coeffs.kappas, 0.0)) * np.abs(u) ** 2
    e = np.sum(w * dens, axis=0)
    e[coeffs.eigenvalues.size:] *= coeffs.m_weights
    return float(np.sum(e)) / (state.x1_norm() ** 2 + state.x0_norm("ut") ** 2)


def bulk_history(state: BulkState, basis: bs.SpectralBasis, taus, workers: int = 1) -> list[BulkState]:
    co = decompose(state, basis)
    return [reconstruct(evolve_tower(co, t, workers), basis) for t in taus]


def default_schedule(tau_star: float, span: float = 12.0, n: int = 17) -> np.ndarray:
    """tau* followed by n - 1 geometrically spaced times up to tau* + span."""
    return tau_star + np.concatenate([[0.0], np.geomspace(span / 2 ** (n - 2), span, n - 1)])


def default_rho_min(geometry: bs.BraneGeometry) -> float:
    return 1e-3 * geometry.rho0


# ---------------------------------------------------------------- the massless graviton


@dataclass(frozen=True)
class GravitonTrack:
    """Graviton data phi(tau*) and the decay of the bulk remainder.

    residual[i] = ||(u - u_phi)(tau_i)||_{X^1} + ||u_tau(tau_i)||_{X^0}
    shifted[i]  = ||(d_tau + 3/2)(u - u_phi)(tau_i)||_{X^0}
    """

    phi: dm.SpectralField
    taus: np.ndarray
    residual: np.ndarray
    shifted: np.ndarray

    @property
    def shifted_scaled(self):
        return self.shifted * np.exp(1.5 * self.taus)


def _graviton_only(spec: bs.OperatorSpec):
    if spec.dirichlet or spec.M != 0 or spec.c != 0:
        raise ValueError("the graviton reduction needs M = 0 and c = 0")


def graviton_data(state: BulkState, geometry: bs.BraneGeometry) -> dm.SpectralField:
    """phi(tau*) = gamma^2 int u0 sinh^2, d_tau phi(tau*) = gamma^2 int u1 sinh^2, per xi row."""
    g2 = geometry.gamma**2
    h = state.rho_grid.h_weights
    return dm.SpectralField(state.xi_grid, g2 * state.u @ h, g2 * state.ut @ h, state.tau, state.xi_weights)


def graviton_extract(state: BulkState, spec: bs.OperatorSpec, basis: bs.SpectralBasis | None = None,
                     taus=None) -> GravitonTrack:
    """Graviton initial data plus the remainder tracker over ``taus`` (default: 17 geometric points).

    The remainder lives in the continuous part, where for M = c = 0 the
    quadratic form gives ||sinh(rho) d_rho v||_H^2 = int m^2 |S|^2 dm, so the
    tracker is evaluated in spectral variables and does not suffer from
    the finite rho window.
    """
    _graviton_only(spec)
    basis = bs.build_basis(spec) if basis is None else basis
    if basis.spec != spec:
        raise ValueError("basis was built for a different operator")
    phi = graviton_data(state, spec.geometry)
    taus = default_schedule(state.tau) if taus is None else np.asarray(taus, float)
    co = decompose(state, basis)
    w = state.xi_weights[:, None]
    xi2 = state.xi_grid[:, None] ** 2
    res, shf = [], []
    for t in taus:
        c = evolve_tower(co, t)
        m2, dmw = c.m_grid**2, c.m_weights
        rem_x1 = np.sum(w * dmw * (1.0 + xi2 + m2) * np.abs(c.cont_u) ** 2)
        ut_x0 = np.sum(w * np.abs(c.point_ut) ** 2) + np.sum(w * dmw * np.abs(c.cont_ut) ** 2)
        sh = np.sum(w * dmw * np.abs(c.cont_ut + 1.5 * c.cont_u) ** 2)
        res.append(np.sqrt(rem_x1) + np.sqrt(ut_x0))
        shf.append(np.sqrt(sh))
    return GravitonTrack(phi, taus, np.array(res), np.array(shf))


def brane_trace_profile(phi_init: dm.SpectralField) -> dm.SpectralField:
    """The limit phi of the graviton on the brane as tau -> +inf (field at tau = inf)."""
    return dm.profile_phi(phi_init, dm.ModeParams(0.0))


@dataclass(frozen=True)
class HorizonLimits:
    """Four norms along the path rho = const, tau -> inf, that must vanish."""

    taus: np.ndarray
    h1: np.ndarray  # ||u_phi - phi||_{H^1}
    time: np.ndarray  # ||t^-1 d_t u_phi + Lap phi||
    space: np.ndarray  # ||z^-1 d_z u_phi - Lap phi||
    plus: np.ndarray  # ||(z - t)^-1 (d_t + d_z) u_phi - Lap phi||
    minus: np.ndarray  # ||(z + t)^-1 (d_t - d_z) u_phi + Lap phi||


def horizon_limits(phi_init: dm.SpectralField, geometry: bs.BraneGeometry, taus, rho: float | None = None) -> HorizonLimits:
    """Evaluate the approach of the graviton to its brane trace in (t, z) coordinates."""
    rho = 0.5 * geometry.rho0 if rho is None else float(rho)
    maps = bs.coord_maps(geometry)
    prof = brane_trace_profile(phi_init)
    w = dm.frequency_weights(phi_init)
    xi2 = phi_init.xi_grid**2
    lap = -xi2 * prof.u_hat
    out = {k: [] for k in ("h1", "time", "space", "plus", "minus")}
    norm = lambda f: float(np.sqrt(np.sum(w * np.abs(f) ** 2)))
    for tau in taus:
        s = dm.evolve(phi_init, dm.ModeParams(0.0), float(tau))
        t, z = maps.tau_rho_to_tz(tau, rho)
        # tau = -log(t^2 - z^2)/2, so d_t tau = -t e^{2tau} and d_z tau = z e^{2tau}
        e2 = np.exp(2.0 * tau)
        dt_u = -t * e2 * s.ut_hat
        dz_u = z * e2 * s.ut_hat
        diff = s.u_hat - prof.u_hat
        out["h1"].append(float(np.sqrt(np.sum(w * (1.0 + xi2) * np.abs(diff) ** 2))))
        out["time"].append(norm(dt_u / t + lap))
        out["space"].append(norm(dz_u / z - lap))
        out["plus"].append(norm((dt_u + dz_u) / (z - t) - lap))
        out["minus"].append(norm((dt_u - dz_u) / (z + t) + lap))
    return HorizonLimits(np.asarray(taus, float), *(np.array(out[k]) for k in ("h1", "time", "space", "plus", "minus")))


@dataclass(frozen=True)
class HorizonEnergy:
    taus: np.ndarray
    t: np.ndarray  # brane time -e^{-tau}/sqrt(1 - alpha^2)
    energy: np.ndarray  # E_p = e^{2tau} int |grad u|^2 sinh cosh
    exponent: float  # slope of log E_p against log |t| over the fit window
    phi_norm: float


def horizon_energy(history: list[BulkState], geometry: bs.BraneGeometry, fit_from: float | None = None) -> HorizonEnergy:
    """E_p along a history and the fitted power of 1/|t| (fit over tau >= fit_from, default the last half)."""
    first = history[0]
    phi = brane_trace_profile(graviton_data(first, geometry))
    data = np.sqrt(np.sum(first.xi_weights * (1.0 + first.xi_grid**2) * np.sum(np.abs(first.u) ** 2 * first.rho_grid.h_weights, axis=1)))
    phi_norm = float(np.sqrt(np.sum(first.xi_weights * first.xi_grid**2 * np.abs(phi.u_hat) ** 2)))
    if data > 0 and phi_norm <= PHI_ZERO_TOL * data:
        warnings.warn("brane profile phi vanishes: the 1/t^2 lower bound does not apply", RuntimeWarning, stacklevel=2)
    taus = np.array([s.tau for s in history])
    t = -np.exp(-taus) / np.sqrt(1.0 - geometry.alpha**2)
    ep = []
    for s in history:
        g = s.rho_grid
        wr = g.h_weights / np.tanh(g.rho)  # sinh cosh d rho = sinh^3 coth dy
        ep.append(np.exp(2.0 * s.tau) * np.sum(s.xi_weights * s.xi_grid**2 * (np.abs(s.u) ** 2 @ wr)))
    ep = np.array(ep)
    lo = 0.5 * (taus[0] + taus[-1]) if fit_from is None else fit_from
    sel = (taus >= lo) & (ep > 0)
    expo = float(np.polyfit(np.log(np.abs(t[sel])), np.log(ep[sel]), 1)[0]) if sel.sum() >= 2 else float("nan")
    return HorizonEnergy(taus, t, ep, expo, phi_norm)


def disappearing_data(xi, tau_star: float, amplitude) -> dm.SpectralField:
    """Massless mode data whose brane trace vanishes.

    The solution A(xi) e^{-3tau} g(xi e^{-tau}) with g(z) = z^{-3/2} J_{3/2}(z) is
    e^{-3tau/2} J_{3/2} up to a factor in xi, and it tends to zero as tau -> inf.
    """
    xi = np.asarray(xi, float)
    z = xi * np.exp(-tau_star)
    _, j1 = dm._sin_over(z)
    g = np.sqrt(2.0 / np.pi) * j1
    # g'(z) = -z^{-3/2} J_{5/2}(z)
    dg = -z * np.sqrt(2.0 / np.pi) * _j52_over(z)
    e = np.exp(-3.0 * tau_star)
    return dm.SpectralField(xi, amplitude * e * g, amplitude * e * (-3.0 * g - z * dg), tau_star)


def _j52_over(z):
    """((3 - z^2) sin z - 3 z cos z) / z^5 with its series at small z."""
    z = np.asarray(z, float)
    small = z < 2e-2
    zs = np.where(small, 1.0, z)
    big = ((3.0 - zs**2) * np.sin(zs) - 3.0 * zs * np.cos(zs)) / zs**5
    return np.where(small, 1.0 / 15.0 - z**2 / 210.0 + z**4 / 7560.0, big)


# ---------------------------------------------------------------- smooth test data


def y_bump(y, center: float, width: float):
    """exp(-(z/0.6)^2)(1 - z^2)^8 with z = (y - center)/width, and its y-derivative; C^7 with compact support."""
    z = (np.asarray(y, float) - center) / width
    inside = np.abs(z) < 1.0
    zc = np.where(inside, z, 0.0)
    g = np.exp(-((zc / 0.6) ** 2))
    val = np.where(inside, g * (1.0 - zc**2) ** 8, 0.0)
    der = np.where(inside, g * (-2.0 * zc / 0.36 * (1.0 - zc**2) ** 8 - 16.0 * zc * (1.0 - zc**2) ** 7), 0.0) / width
    return val, der


def random_smooth_state(basis: bs.SpectralBasis, xi, xi_weights, rng: np.random.Generator, n_bumps: int = 3,
                        tau: float = 0.0, reach: float = 5.0) -> BulkState:
    """Sums of y-bumps times Gaussian profiles in xi, supported in y0 < y < y0 + reach.

    Bumps vanish near the brane, so every boundary condition holds and
    u_brane = 0.  ur is exact.
    """
    g = basis.grid
    sh = np.sinh(g.rho)
    xi = np.asarray(xi, float)
    u = np.zeros((xi.size, g.size), complex)
    ut = np.zeros_like(u)
    ur = np.zeros_like(u)
    for target in ("u", "ut") * n_bumps:
        width = rng.uniform(0.6, 0.3 * reach)
        center = g.y0 + width + rng.uniform(0.05, reach - 2.0 * width)
        prof = np.exp(-(xi**2) / rng.uniform(1.0, 4.0)) * (rng.normal() + 1j * rng.normal())
        val, der = y_bump(g.y, center, width)
        if target == "u":
            u += prof[:, None] * val
            ur += prof[:, None] * (-der / sh)  # dy/drho = -1/sinh(rho)
        else:
            ut += prof[:, None] * val
    return BulkState(xi, g, u, ut, tau, xi_weights, ur, np.zeros(xi.size, complex))


# ---------------------------------------------------------------- export


def state_table(state: BulkState, spec: bs.OperatorSpec | None = None):
    xi = np.repeat(state.xi_grid, state.rho_grid.size)
    rho = np.tile(state.rho_grid.rho, state.xi_grid.size)
    cols = ["xi", "rho", "u_re", "u_im", "ut_re", "ut_im"]
    arrs = [xi, rho, state.u.real.ravel(), state.u.imag.ravel(), state.ut.real.ravel(), state.ut.imag.ravel()]
    if state.ur is not None:
        cols += ["ur_re", "ur_im"]
        arrs += [state.ur.real.ravel(), state.ur.imag.ravel()]
    meta = {"table": "bulk_state", "tau": state.tau, "xi_weights": state.xi_weights,
            "h_weights": state.rho_grid.h_weights, "y": state.rho_grid.y, "y0": state.rho_grid.y0}
    if spec is not None:
        meta["spec"] = bs.spec_to_dict(spec)
    return meta, cols, np.column_stack(arrs)


def export_state(state: BulkState, path, spec: bs.OperatorSpec | None = None) -> Path:
    """CSV with the metadata both as a header line and as a .json sidecar."""
    meta, cols, rows = state_table(state, spec)
    return _write_with_sidecar(path, meta, cols, rows)


def export_energy(report: EnergyReport, path, tau: float, spec: bs.OperatorSpec | None = None) -> Path:
    meta = {"table": "energy_report", "tau": tau, "total": report.total, "discrepancy": report.discrepancy}
    if spec is not None:
        meta["spec"] = bs.spec_to_dict(spec)
    rows = np.column_stack([report.kappas, report.per_mode])
    return _write_with_sidecar(path, meta, ["kappa", "energy"], rows)


def _write_with_sidecar(path, meta, cols, rows) -> Path:
    path = tables.write_table(path, meta, cols, rows)
    path.with_suffix(".json").write_text(tables.dump_meta(meta) + "\n", encoding="utf-8")
    return path
