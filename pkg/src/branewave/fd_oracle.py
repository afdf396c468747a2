"""Finite-difference time stepping of one frequency row of the bulk wave equation.

    u_tt + 3 u_t + e^{-2tau} xi^2 u + L u = 0,   u_rho + c u = 0 at rho0

on a grid of nodes in rho (uniform in y = log coth(rho/2) by default).  With v = e^{3tau/2} u the first-order term drops out,

    v_tt + (L + e^{-2tau} xi^2 - 9/4) v = 0,

and v is advanced by the three-level central (leapfrog) scheme.  L is
discretized in flux form with cell weights sinh^2(rho) drho (half a cell at
the brane), so the discrete operator is symmetric and the energy balance closes.
The flux form simply has no flux term at rho_min, which imposes nothing there;
the run is only meaningful while the wave, moving at unit speed in
y = log coth(rho/2), has not reached that end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import brane_spectrum as bs
from . import tables


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class FdConfig:
    """Grid and step settings; the boundary condition comes from the OperatorSpec.

    ``dt = None`` picks safety * (largest stable step).  A given dt above that
    limit is rejected.  ``spacing`` is "y" (uniform in y, which follows the
    wave into small rho) or "rho".
    """

    rho_min: float
    n_rho: int = 400
    dt: float | None = None
    scheme_order: int = 2
    safety: float = 0.5
    spacing: str = "y"

    def __post_init__(self):
        if self.scheme_order != 2:
            raise ValueError("only the second-order scheme is implemented")
        if not self.rho_min > 0:
            raise ValueError("rho_min must be positive")
        if self.n_rho < 8:
            raise ValueError("need at least 8 grid nodes")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        if self.spacing not in ("y", "rho"):
            raise ValueError("spacing must be 'y' or 'rho'")


@dataclass(frozen=True)
class FdGrid:
    rho: np.ndarray  # increasing nodes rho_min .. rho0
    weights: np.ndarray  # sinh^2(rho) times the dual cell length (half cells at both ends)
    stiffness: np.ndarray  # sinh^4(midpoint) / spacing, one per interval
    spec: bs.OperatorSpec

    @property
    def active(self):
        """Mask of nodes that carry unknowns (a Dirichlet brane node is pinned to 0)."""
        m = np.ones(self.rho.size, bool)
        if self.spec.dirichlet:
            m[-1] = False
        return m


def make_grid(spec: bs.OperatorSpec, config: FdConfig) -> FdGrid:
    geo = spec.geometry
    if config.rho_min >= geo.rho0:
        raise ValueError("rho_min must lie below rho0")
    if config.spacing == "rho":
        rho = np.linspace(config.rho_min, geo.rho0, config.n_rho)
    else:
        maps = bs.coord_maps(geo)
        y = np.linspace(float(maps.rho_to_y(config.rho_min)), geo.y0, config.n_rho)
        rho = maps.y_to_rho(y)
        rho[-1] = geo.rho0
    h = np.diff(rho)
    cell = np.zeros_like(rho)
    cell[:-1] += 0.5 * h
    cell[1:] += 0.5 * h
    mid = rho[:-1] + 0.5 * h
    return FdGrid(rho, np.sinh(rho) ** 2 * cell, np.sinh(mid) ** 4 / h, spec)


def apply_operator(grid: FdGrid, u):
    """Discrete L u along the last axis; pinned nodes return 0."""
    spec = grid.spec
    u = np.asarray(u)
    sh2 = np.sinh(grid.rho) ** 2
    f = grid.stiffness * np.diff(u, axis=-1)  # sinh^4 u_rho at midpoints
    div = np.zeros_like(u)
    div[..., 1:-1] = f[..., 1:] - f[..., :-1]
    div[..., 0] = f[..., 0]
    if not spec.dirichlet:
        # brane half cell, where sinh^4 u_rho = -c sinh^4 u
        div[..., -1] = -spec.c * np.sinh(grid.rho[-1]) ** 4 * u[..., -1] - f[..., -1]
    out = -div / grid.weights + spec.M**2 * sh2 * u
    return np.where(grid.active, out, 0.0)


def spectral_radius_bound(grid: FdGrid, xi: float, tau: float) -> float:
    """Gershgorin bound on the discrete L + e^{-2tau} xi^2 - 9/4."""
    spec = grid.spec
    k = grid.stiffness
    rows = np.zeros_like(grid.rho)
    rows[1:-1] = 2.0 * (k[1:] + k[:-1])
    rows[0] = 2.0 * k[0]
    c = 0.0 if spec.dirichlet else abs(spec.c)
    rows[-1] = 2.0 * (k[-1] + c * np.sinh(grid.rho[-1]) ** 4)
    rows = rows / grid.weights + spec.M**2 * np.sinh(grid.rho) ** 2
    return float(rows.max() + np.exp(-2.0 * tau) * xi * xi + 2.25)


def stable_dt(grid: FdGrid, xi: float, tau_star: float) -> float:
    """Largest leapfrog step 2 / sqrt(bound) for tau >= tau*; it scales like min(drho / sinh rho)."""
    return 2.0 / np.sqrt(spectral_radius_bound(grid, xi, tau_star))


@dataclass
class FdState:
    """Two time levels of v = e^{3tau/2} u on the grid."""

    tau: float
    dt: float
    v: np.ndarray
    v_prev: np.ndarray


def _accel(grid, v, xi, tau):
    return -(apply_operator(grid, v) + (np.exp(-2.0 * tau) * xi * xi - 2.25) * v) * grid.active


def initial_state(grid: FdGrid, u0, u1, xi: float, tau_star: float, dt: float) -> FdState:
    """Start the scheme with a second-order Taylor step backwards."""
    e = np.exp(1.5 * tau_star)
    v0 = e * np.asarray(u0, complex) * grid.active
    v1 = e * (np.asarray(u1, complex) + 1.5 * np.asarray(u0, complex)) * grid.active
    vm = v0 - dt * v1 + 0.5 * dt * dt * _accel(grid, v0, xi, tau_star)
    return FdState(float(tau_star), dt, v0, vm)


def step(state: FdState, xi: float, grid: FdGrid) -> FdState:
    """One leapfrog step of size state.dt."""
    a = _accel(grid, state.v, xi, state.tau)
    v_new = 2.0 * state.v - state.v_prev + state.dt**2 * a
    if not np.all(np.isfinite(v_new)):
        raise StabilityError(f"non-finite values at tau = {state.tau + state.dt:.6g}")
    return FdState(state.tau + state.dt, state.dt, v_new, state.v)


@dataclass(frozen=True)
class FdHistory:
    grid: FdGrid
    xi: float
    taus: np.ndarray
    u: np.ndarray  # (n_t, n_rho)
    ut: np.ndarray  # centered differences
    dissipated: np.ndarray  # int_{tau*}^{tau_k} (6K + 2G) dtau, trapezoid over every step

    def at(self, k: int):
        return self.u[k], self.ut[k]


def _dissipation(grid, u, ut, xi, tau):
    return float(np.sum(grid.weights * (6.0 * np.abs(ut) ** 2 + 2.0 * np.exp(-2.0 * tau) * xi * xi * np.abs(u) ** 2)))


def run(u0, u1, xi: float, spec: bs.OperatorSpec, config: FdConfig, tau_star: float, tau_end: float,
        n_records: int = 21) -> FdHistory:
    """Evolve (u0, u1) given on the config grid from tau* to tau_end, recording n_records equispaced times."""
    if tau_end <= tau_star:
        raise ValueError("tau_end must exceed tau*")
    grid = make_grid(spec, config)
    limit = stable_dt(grid, xi, tau_star)
    dt = config.safety * limit if config.dt is None else float(config.dt)
    if dt > limit:
        raise StabilityError(f"dt = {dt:.3g} exceeds the stability limit {limit:.3g}")
    n_rec = max(int(n_records), 2)
    span = tau_end - tau_star
    # whole number of steps between records so the record times are hit exactly
    per = max(int(np.ceil(span / (n_rec - 1) / dt)), 1)
    dt = span / ((n_rec - 1) * per)
    st = initial_state(grid, u0, u1, xi, tau_star, dt)
    us, uts, dis = [], [], []
    acc, last = 0.0, None
    for j in range((n_rec - 1) * per + 1):
        nxt = step(st, xi, grid)
        tau = tau_star + j * dt
        e = np.exp(-1.5 * tau)
        u = e * st.v
        ut = e * (nxt.v - st.v_prev) / (2.0 * dt) - 1.5 * u
        d = _dissipation(grid, u, ut, xi, tau)
        if last is not None:
            acc += 0.5 * dt * (last + d)
        last = d
        if j % per == 0:
            us.append(u)
            uts.append(ut)
            dis.append(acc)
        st = nxt
    taus = tau_star + per * dt * np.arange(n_rec)
    return FdHistory(grid, float(xi), taus, np.array(us), np.array(uts), np.array(dis))


def inner_margin(history: FdHistory, depth: float = 1.0) -> float:
    """max |u| within ``depth`` (in y) of the inner end, relative to max |u|; it must stay tiny."""
    y = -np.log(np.tanh(0.5 * history.grid.rho))
    near = y > y[0] - depth
    peak = np.max(np.abs(history.u))
    return float(np.max(np.abs(history.u[:, near])) / peak) if peak > 0 else 0.0


def energy(grid: FdGrid, u, ut, xi: float, tau: float) -> float:
    """Discrete bulk energy for one frequency row, brane term included."""
    spec = grid.spec
    sh2 = np.sinh(grid.rho) ** 2
    dens = np.abs(ut) ** 2 + (np.exp(-2.0 * tau) * xi * xi + spec.M**2 * sh2) * np.abs(u) ** 2
    e = np.sum(grid.weights * dens) + np.sum(grid.stiffness * np.abs(np.diff(u)) ** 2)
    if not spec.dirichlet:
        e += spec.c * np.sinh(grid.rho[-1]) ** 4 * abs(u[-1]) ** 2
    return float(e)


@dataclass(frozen=True)
class EnergyAudit:
    """E(tau) - E(tau*) + int (6K + 2G) ~ 0 with K = int sinh^2 |u_t|^2, G = e^{-2tau} int sinh^2 |grad u|^2."""

    taus: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray  # -(6K + 2G) at the records, never positive
    residual: np.ndarray

    @property
    def scale(self):
        return float(np.max(np.abs(self.energy)))


def energy_audit(history: FdHistory) -> EnergyAudit:
    g, xi = history.grid, history.xi
    en = np.array([energy(g, u, ut, xi, t) for t, u, ut in zip(history.taus, history.u, history.ut)])
    diss = -np.array([_dissipation(g, u, ut, xi, t) for t, u, ut in zip(history.taus, history.u, history.ut)])
    return EnergyAudit(history.taus, en, diss, en - en[0] + history.dissipated)


def resample(values, rho_from, rho_to):
    """Cubic interpolation between grids (used to compare runs at different resolutions)."""
    from scipy.interpolate import CubicSpline

    order = np.argsort(rho_from)
    return CubicSpline(rho_from[order], np.asarray(values)[..., order], axis=-1)(rho_to)


def export_history(history: FdHistory, path, spec: bs.OperatorSpec | None = None):
    n_t, n_r = history.u.shape
    cols = ["tau", "rho", "u_re", "u_im", "ut_re", "ut_im"]
    rows = np.column_stack([np.repeat(history.taus, n_r), np.tile(history.grid.rho, n_t), history.u.real.ravel(),
                            history.u.imag.ravel(), history.ut.real.ravel(), history.ut.imag.ravel()])
    meta = {"table": "fd_history", "xi": history.xi, "rho_min": float(history.grid.rho[0]), "n_rho": n_r}
    if spec is not None:
        meta["spec"] = bs.spec_to_dict(spec)
    path = tables.write_table(path, meta, cols, rows)
    path.with_suffix(".json").write_text(tables.dump_meta(meta) + "\n", encoding="utf-8")
    return path
