"""Batch front end: ``branewave <command> [flags]``.

Commands write CSV tables (``#``-prefixed JSON header with the resolved
configuration, %.17g numbers) into ``--out``.  Exit status 1 means the
configuration was rejected before anything was written; exit status 2 means a
numerical failure, described in ``diagnostic.json``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, specialfn, tables

COMMANDS = ("modes", "spectrum", "tower", "graviton", "oracle-check")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class Scenario:
    command: str
    alpha: float = -0.5
    M: float = 0.0
    c: float | str = 0.0
    kappa: float = 0.0
    tau_star: float = 0.0
    tau_end: float = 12.0
    out: str = "out"
    seed: int = 0
    xi_max: float = 20.0
    n_xi: int = 256
    m_max: float = 40.0
    n_states: int = 5
    profile: bool = False
    export_basis: bool = False

    def resolved(self) -> dict:
        d = asdict(self)
        # the output directory does not change any number, so reruns elsewhere stay byte-identical
        d.pop("out")
        d["version"] = __version__
        return d


_FLOATS = {"alpha", "M", "kappa", "tau_star", "tau_end", "xi_max", "m_max"}
_INTS = {"seed", "n_xi", "n_states"}
_BOOLS = {"profile", "export_basis"}


def _coerce(key: str, value):
    try:
        if key in _FLOATS:
            v = float(value)
            if not math.isfinite(v):
                raise ConfigError(key, "must be finite")
            return v
        if key in _INTS:
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(key, "must be an integer")
            return int(value)
        if key in _BOOLS:
            if isinstance(value, bool):
                return value
            s = str(value).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ConfigError(key, f"not a boolean: {value!r}")
        if key == "c":
            if isinstance(value, str) and value.strip().lower() in ("dirichlet", "inf", "infinity"):
                return "dirichlet"
            v = float(value)
            if math.isinf(v) and v > 0:
                return "dirichlet"
            if not math.isfinite(v):
                raise ConfigError(key, "must be finite or 'dirichlet'")
            return v
        if key in ("out", "command"):
            return str(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(key, f"cannot parse {value!r}") from None
    raise ConfigError(key, "unknown key")


def parse_config_text(text: str) -> dict:
    """JSON object, or ``key = value`` lines with ``#`` comments."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "JSON config must be an object")
        return {str(k).replace("-", "_"): v for k, v in data.items()}
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config:{n}", "expected key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def validate(sc: Scenario) -> Scenario:
    if sc.command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    if not -1.0 < sc.alpha < 0.0:
        raise ConfigError("alpha", "must lie in (-1, 0)")
    if sc.M < 0:
        raise ConfigError("M", "must be non-negative")
    if math.sqrt(sc.M**2 + 4.0) - 0.5 > 10.0:
        raise ConfigError("M", "must not exceed 10.48")
    if sc.tau_end <= sc.tau_star:
        raise ConfigError("tau_end", "must exceed tau_star")
    if sc.seed < 0:
        raise ConfigError("seed", "must be non-negative")
    if sc.xi_max <= 0:
        raise ConfigError("xi_max", "must be positive")
    if not 8 <= sc.n_xi <= 4096:
        raise ConfigError("n_xi", "must lie in [8, 4096]")
    if not 2.0 < sc.m_max <= 50.0:
        raise ConfigError("m_max", "must lie in (2, 50]")
    if not 1 <= sc.n_states <= 100:
        raise ConfigError("n_states", "must lie in [1, 100]")
    if sc.command == "graviton" and (sc.M != 0 or sc.c != 0.0):
        raise ConfigError("c" if sc.M == 0 else "M", "graviton needs M = 0 and c = 0")
    if sc.command == "modes" and sc.profile and sc.kappa != 0:
        raise ConfigError("kappa", "--profile needs kappa = 0")
    return sc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="branewave", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON or key = value file; flags override it")
    for name in ("alpha", "M", "c", "kappa", "tau-star", "tau-end", "out", "seed", "xi-max", "n-xi", "m-max",
                 "n-states"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), default=None)
    p.add_argument("--profile", action="store_const", const=True, default=None)
    p.add_argument("--export-basis", dest="export_basis", action="store_const", const=True, default=None)
    return p


def scenario_from_args(argv) -> Scenario:
    p = build_parser()
    try:
        ns = p.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            raise
        raise ConfigError("argv", "could not parse the command line") from None
    values = {}
    if ns.config:
        try:
            text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", f"cannot read {ns.config}: {exc.strerror}") from None
        values.update(parse_config_text(text))
    values.update({k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "command")})
    known = {f.name for f in fields(Scenario)} - {"command"}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    kw = {k: _coerce(k, v) for k, v in values.items()}
    return validate(Scenario(command=ns.command, **kw))


def thread_count() -> int:
    raw = os.environ.get("BRANEWAVE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("BRANEWAVE_THREADS", f"not an integer: {raw!r}") from None
    if n < 1:
        raise ConfigError("BRANEWAVE_THREADS", "must be at least 1")
    return min(n, os.cpu_count() or 1)


# ---------------------------------------------------------------- commands


def _spec(sc: Scenario):
    from . import brane_spectrum as bs

    c = bs.DIRICHLET if sc.c == "dirichlet" else float(sc.c)
    return bs.OperatorSpec(sc.M, c, bs.geometry_from_alpha(sc.alpha))


def _meta(sc: Scenario, table: str, **more) -> dict:
    return {"table": table, "config": sc.resolved(), **more}


def run_modes(sc: Scenario, out: Path, workers: int):
    from . import desitter_modes as dm
    from . import kk_tower as kk

    xi = np.linspace(0.0, sc.xi_max, sc.n_xi)
    init = dm.SpectralField(xi, np.ones(xi.size), np.zeros(xi.size), sc.tau_star)
    mode = dm.ModeParams(sc.kappa)
    taus = kk.default_schedule(sc.tau_star, sc.tau_end - sc.tau_star)
    rows = []
    for t in taus:
        s = dm.evolve(init, mode, float(t))
        rows.append(np.column_stack([np.full(xi.size, t), xi, s.u_hat.real, s.u_hat.imag, s.ut_hat.real, s.ut_hat.imag]))
    files = [tables.write_table(out / "modes.csv", _meta(sc, "mode_evolution", data="unit u0, zero u1"),
                                ["tau", "xi", "u_re", "u_im", "ut_re", "ut_im"], np.vstack(rows))]
    if sc.profile:
        phi = dm.profile_phi(init, mode)
        files.append(tables.write_table(out / "profile.csv", _meta(sc, "limit_profile"), ["xi", "phi_re", "phi_im"],
                                        np.column_stack([xi, phi.u_hat.real, phi.u_hat.imag])))
    return files


def run_spectrum(sc: Scenario, out: Path, workers: int):
    from . import brane_spectrum as bs

    spec = _spec(sc)
    lo = bs.form_lower_bound(spec) - 1.0
    if lo < bs.LAMBDA_MIN:
        # a clamped scan could miss eigenvalues, so refuse rather than write a partial table
        raise specialfn.DomainError(f"eigenvalues may lie below {bs.LAMBDA_MIN:g} (form bound {lo:.6g})")
    ps = bs.point_spectrum(spec)
    res = np.array([float(bs.transcendental_residual(x, spec)) for x in ps.eigenvalues])
    dres = np.array([float(bs.derivative_residual(x, spec)) for x in ps.eigenvalues])
    meta = _meta(sc, "point_spectrum", search_floor=ps.floor, floor_residual=ps.floor_residual)
    files = [tables.write_table(out / "eigenvalues.csv", meta, ["lambda", "residual", "derivative_residual", "norm"],
                                np.column_stack([ps.eigenvalues, res, dres, ps.norms]) if ps.eigenvalues.size else [])]
    if sc.export_basis:
        files.append(bs.export_basis(bs.build_basis(spec, m_max=sc.m_max), out / "basis.csv"))
    return files


def _tower_inputs(sc: Scenario):
    from . import brane_spectrum as bs
    from . import desitter_modes as dm

    spec = _spec(sc)
    basis = bs.build_basis(spec, m_max=sc.m_max)
    xi, wx = dm.radial_quadrature(min(sc.xi_max, 8.0), 8, 12)
    return spec, basis, xi, wx


def run_tower(sc: Scenario, out: Path, workers: int):
    from . import kk_tower as kk

    spec, basis, xi, wx = _tower_inputs(sc)
    rng = np.random.default_rng(sc.seed)
    taus = kk.default_schedule(sc.tau_star, sc.tau_end - sc.tau_star)
    rows = []
    for k in range(sc.n_states):
        st = kk.random_smooth_state(basis, xi, wx, rng, tau=sc.tau_star)
        co = kk.decompose(st, basis)
        back = kk.reconstruct(co, basis)
        rt = float(np.sqrt(np.sum(wx[:, None] * basis.grid.h_weights * np.abs(back.u - st.u) ** 2))) / st.x0_norm()
        for t in taus:
            ct = kk.evolve_tower(co, float(t), workers)
            rep = kk.energy_report(kk.reconstruct(ct, basis), ct, spec)
            rows.append([k, t, rep.total, rep.mode_sum, rep.discrepancy, rt, co.tail])
    return [tables.write_table(out / "tower_energy.csv", _meta(sc, "tower_energy"),
                               ["state", "tau", "bulk_energy", "mode_sum", "discrepancy", "roundtrip_x0", "tail_x0sq"],
                               rows)]


def run_graviton(sc: Scenario, out: Path, workers: int):
    from . import kk_tower as kk

    spec, basis, xi, wx = _tower_inputs(sc)
    rng = np.random.default_rng(sc.seed)
    st = kk.random_smooth_state(basis, xi, wx, rng, tau=sc.tau_star)
    taus = kk.default_schedule(sc.tau_star, sc.tau_end - sc.tau_star)
    track = kk.graviton_extract(st, spec, basis, taus)
    hist = kk.bulk_history(st, basis, np.linspace(sc.tau_star, sc.tau_end, 25), workers)
    he = kk.horizon_energy(hist, spec.geometry)
    f1 = tables.write_table(out / "graviton_residual.csv", _meta(sc, "graviton_residual"),
                            ["tau", "residual", "residual_ratio", "shifted", "shifted_scaled"],
                            np.column_stack([track.taus, track.residual, track.residual / track.residual[0],
                                             track.shifted, track.shifted_scaled]))
    f2 = tables.write_table(out / "horizon_energy.csv",
                            _meta(sc, "horizon_energy", exponent=he.exponent, phi_norm=he.phi_norm),
                            ["tau", "t", "energy"], np.column_stack([he.taus, he.t, he.energy]))
    return [f1, f2]


def run_oracle(sc: Scenario, out: Path, workers: int):
    from . import brane_spectrum as bs
    from . import fd_oracle as fd
    from . import kk_tower as kk

    spec = _spec(sc)
    basis = bs.build_basis(spec, m_max=sc.m_max)
    maps = bs.coord_maps(spec.geometry)
    y0 = spec.geometry.y0
    rho_min = float(maps.y_to_rho(y0 + 6.0))
    rng = np.random.default_rng(sc.seed)
    t_end = sc.tau_star + 2.0
    rows = []
    for k in range(sc.n_states):
        pars = []
        for _ in range(2):
            w = rng.uniform(0.8, 1.2)
            pars.append((y0 + w + rng.uniform(0.05, 0.5), w, rng.uniform(-1.0, 1.0)))
        f = lambda y, p: p[2] * kk.y_bump(y, p[0], p[1])[0]
        for xi in (0.0, 1.0):
            st = kk.BulkState(np.array([xi]), basis.grid, f(basis.grid.y, pars[0])[None], f(basis.grid.y, pars[1])[None],
                              sc.tau_star, np.array([1.0]))
            ct = kk.evolve_tower(kk.decompose(st, basis), t_end)
            for n in (200, 400, 800):
                cfg = fd.FdConfig(rho_min, n)
                g = fd.make_grid(spec, cfg)
                y = maps.rho_to_y(g.rho)
                h = fd.run(f(y, pars[0]), f(y, pars[1]), xi, spec, cfg, sc.tau_star, t_end, 3)
                ref = bs.synthesize_at(bs.SpectralCoefficients(ct.point_u[0], ct.cont_u[0]), basis, g.rho)
                err = np.sqrt(np.sum(g.weights * np.abs(h.u[-1] - ref) ** 2) / np.sum(g.weights * np.abs(ref) ** 2))
                rows.append([k, xi, n, err, fd.inner_margin(h)])
    return [tables.write_table(out / "oracle_check.csv", _meta(sc, "oracle_check", tau=t_end),
                               ["state", "xi", "n_rho", "rel_x0_error", "inner_margin"], rows)]


RUNNERS = {"modes": run_modes, "spectrum": run_spectrum, "tower": run_tower, "graviton": run_graviton,
           "oracle-check": run_oracle}

NUMERICAL_ERRORS = (specialfn.DomainError, specialfn.ConvergenceError, FloatingPointError, ArithmeticError,
                    np.linalg.LinAlgError, RuntimeError)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        sc = scenario_from_args(argv)
        workers = thread_count()
    except ConfigError as exc:
        print(json.dumps({"error": "config", "field": exc.path, "message": exc.message}), file=sys.stderr)
        return 1
    out = Path(sc.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = RUNNERS[sc.command](sc, out, workers)
    except NUMERICAL_ERRORS as exc:
        diag = {"error": "numerical", "type": type(exc).__name__, "message": str(exc), "config": sc.resolved()}
        out.mkdir(parents=True, exist_ok=True)
        (out / "diagnostic.json").write_text(tables.dump_meta(diag) + "\n", encoding="utf-8")
        print(json.dumps({"error": "numerical", "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
