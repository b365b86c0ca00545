"""One-time generation of the FCIDUMP fixtures shipped in ``asvqe/data/fixtures``.

Requires pyscf, which is not a runtime dependency of the package::

    pip install pyscf
    python tools/generate_fixtures.py

Geometries: H2 at several bond lengths, a lone H atom, and CO2-Mg2+ with the
Mg ion bound to one oxygen at a C-O-Mg angle of 120 degrees (planar, Cs).
CO2-Mg2+ scan points are written with the 11 lowest occupied orbitals folded
into the core constant and the top virtuals dropped (10 orbitals kept), which
leaves every window up to 5h5l and the RHF energy unchanged.  One full
24-orbital file is written for resource counting.
"""

from __future__ import annotations

import gzip
import io
import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "asvqe" / "data" / "fixtures"
BOHR = 0.52917721092
CO_BOND = 1.16


def co2mg_atoms(dist: float, angle: float) -> str:
    # angle is the C-O-Mg angle in degrees; 180 is the linear end-on complex
    a = np.radians(angle)
    v = np.array([np.sin(np.pi - a), 0.0, np.cos(np.pi - a)])
    mg = np.array([0.0, 0.0, CO_BOND]) + dist * v
    return f"O 0 0 {-CO_BOND}; C 0 0 0; O 0 0 {CO_BOND}; Mg {mg[0]:.10f} {mg[1]:.10f} {mg[2]:.10f}"


def mo_integrals(mol, mf):
    c = mf.mo_coeff
    n = c.shape[1]
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), n)
    return h1, eri


def fold_core(h1, eri, ecore, frozen, active):
    h = h1[np.ix_(active, active)].copy()
    e = ecore
    for i in frozen:
        e += 2.0 * h1[i, i]
        h += 2.0 * eri[np.ix_(active, active, [i], [i])][:, :, 0, 0]
        h -= eri[np.ix_(active, [i], [i], active)][:, 0, 0, :]
    for i in frozen:
        for j in frozen:
            e += 2.0 * eri[i, i, j, j] - eri[i, j, j, i]
    g = eri[np.ix_(active, active, active, active)]
    return h, g, e


def write(name, h1, eri, nelec, ecore, ms2=0, gz=False):
    n = h1.shape[0]
    buf = io.StringIO()
    fcidump.write_head(buf, n, nelec, ms2)
    fcidump.write_eri(buf, ao2mo.restore(8, eri, n), n, tol=1e-14, float_format=" %.16e")
    fcidump.write_hcore(buf, h1, n, tol=1e-14, float_format=" %.16e")
    buf.write(" %.16e    0    0    0    0\n" % ecore)
    path = OUT / (name + (".fcidump.gz" if gz else ".fcidump"))
    if gz:
        with gzip.open(path, "wt") as f:
            f.write(buf.getvalue())
    else:
        path.write_text(buf.getvalue())
    return path.name


def rhf(atom, charge=0, spin=0):
    mol = gto.M(atom=atom, basis="sto-3g", charge=charge, spin=spin, verbose=0)
    mf = scf.RHF(mol) if spin == 0 else scf.ROHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    assert mf.converged
    return mol, mf


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    meta = {}

    h2_lengths = [0.5, 0.6, 0.7, 0.735, 0.8, 0.9, 1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 5.0]
    for r in h2_lengths:
        mol, mf = rhf(f"H 0 0 0; H 0 0 {r}")
        h1, eri = mo_integrals(mol, mf)
        name = write(f"h2_{r:.3f}", h1, eri, 2, mol.energy_nuc())
        meta[name] = {"scf_energy": mf.e_tot, "nuclear_repulsion": mol.energy_nuc(), "r": r}

    mol, mf = rhf("H 0 0 0", spin=1)
    h1, eri = mo_integrals(mol, mf)
    name = write("h_atom", h1, eri, 1, 0.0, ms2=1)
    meta[name] = {"scf_energy": mf.e_tot}

    def co2mg(dist, angle, label, full=False):
        mol, mf = rhf(co2mg_atoms(dist, angle), charge=2)
        h1, eri = mo_integrals(mol, mf)
        nocc = mol.nelectron // 2
        info = {"scf_energy": mf.e_tot, "distance": dist, "angle": angle,
                "mo_energies": mf.mo_energy.tolist(), "n_occupied": nocc}
        if full:
            name = write(label, h1, eri, mol.nelectron, mol.energy_nuc(), gz=True)
        else:
            frozen = list(range(nocc - 5))
            active = list(range(nocc - 5, nocc + 5))
            h, g, e = fold_core(h1, eri, mol.energy_nuc(), frozen, active)
            name = write(label, h, g, 10, e)
            info["frozen_orbitals"] = len(frozen)
        meta[name] = info

    for d in [1.7, 1.8, 1.85, 1.9, 2.0, 2.1, 2.3, 2.6, 3.0]:
        co2mg(d, 120.0, f"co2mg_d{d:.2f}")
    co2mg(1.85, 120.0, "co2mg_full_d1.85", full=True)
    for d in [1.8, 2.0, 2.2]:
        for dev in [-30, 0, 30]:
            co2mg(d, 180.0 + dev, f"co2mg_grid_d{d:.2f}_a{dev:+d}")

    mol, mf = rhf(f"O 0 0 {-CO_BOND}; C 0 0 0; O 0 0 {CO_BOND}")
    h1, eri = mo_integrals(mol, mf)
    meta[write("co2", h1, eri, mol.nelectron, mol.energy_nuc())] = {"scf_energy": mf.e_tot}
    mol, mf = rhf("Mg 0 0 0", charge=2)
    h1, eri = mo_integrals(mol, mf)
    meta[write("mg2plus", h1, eri, mol.nelectron, mol.energy_nuc())] = {"scf_energy": mf.e_tot}

    (OUT / "fixtures.json").write_text(json.dumps(meta, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()
