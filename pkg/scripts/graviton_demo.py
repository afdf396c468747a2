"""Bulk data on the graviton operator (M = c = 0): print how fast the bulk
settles onto its brane mode, and the growth rate of the energy near the horizon."""

import argparse

import numpy as np

from branewave import brane_spectrum as bs
from branewave import desitter_modes as dm
from branewave import kk_tower as kk


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--alpha", type=float, default=-0.5)
    args = p.parse_args()
    spec = bs.OperatorSpec(0.0, 0.0, bs.geometry_from_alpha(args.alpha))
    basis = bs.build_basis(spec)
    xi, wx = dm.radial_quadrature(6.0, 8, 12)
    g = basis.grid
    f = np.exp(-(xi**2) / 2)
    state = kk.BulkState(xi, g, f[:, None] * kk.y_bump(g.y, g.y0 + 2.0, 1.5)[0],
                         0.3 * f[:, None] * kk.y_bump(g.y, g.y0 + 3.0, 2.0)[0], 0.0, wx)
    track = kk.graviton_extract(state, spec, basis)
    print(f"{'tau':>8} {'residual/initial':>17} {'e^(3tau/2) shifted':>19}")
    for t, r, s in zip(track.taus, track.residual / track.residual[0], track.shifted_scaled):
        print(f"{t:8.3f} {r:17.3e} {s:19.4e}")
    he = kk.horizon_energy(kk.bulk_history(state, basis, np.linspace(0.0, 10.0, 21)), spec.geometry)
    print(f"horizon energy exponent {he.exponent:.4f} (phi norm {he.phi_norm:.3e})")


if __name__ == "__main__":
    main()
