"""Compare finite-difference runs at 200/400/800 nodes with the spectral tower."""

import argparse

import numpy as np

from branewave import brane_spectrum as bs
from branewave import fd_oracle as fd
from branewave import kk_tower as kk


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alpha", type=float, default=-0.5)
    p.add_argument("--M", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--tau-end", type=float, default=2.0)
    args = p.parse_args()
    spec = bs.OperatorSpec(args.M, args.c, bs.geometry_from_alpha(args.alpha))
    basis = bs.build_basis(spec)
    maps, y0 = bs.coord_maps(spec.geometry), spec.geometry.y0
    f0 = lambda y: kk.y_bump(y, y0 + 1.3, 1.0)[0]
    f1 = lambda y: -0.6 * kk.y_bump(y, y0 + 1.1, 0.9)[0]
    g = basis.grid
    st = kk.BulkState(np.array([args.xi]), g, f0(g.y)[None], f1(g.y)[None], 0.0, np.ones(1))
    ct = kk.evolve_tower(kk.decompose(st, basis), args.tau_end)
    coeffs = bs.SpectralCoefficients(ct.point_u[0], ct.cont_u[0])
    prev = None
    for n in (200, 400, 800):
        cfg = fd.FdConfig(float(maps.y_to_rho(y0 + 6.0)), n)
        grid = fd.make_grid(spec, cfg)
        y = maps.rho_to_y(grid.rho)
        h = fd.run(f0(y), f1(y), args.xi, spec, cfg, 0.0, args.tau_end, 11)
        ref = bs.synthesize_at(coeffs, basis, grid.rho)
        err = np.sqrt(np.sum(grid.weights * np.abs(h.u[-1] - ref) ** 2) / np.sum(grid.weights * np.abs(ref) ** 2))
        audit = fd.energy_audit(h)
        order = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
        print(f"n={n:4d}  rel error {err:.3e}  audit {np.max(np.abs(audit.residual)) / audit.scale:.1e}{order}")
        prev = err


if __name__ == "__main__":
    main()
