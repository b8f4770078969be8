"""Regenerate the bundled FCIDUMP fixtures and their reference energies.

This is the external oracle for the molecular fixtures. It needs pyscf,
which is *not* a runtime dependency of the package:

    pip install pyscf
    python scripts/make_fixtures.py

Each fixture is an RHF/ROHF STO-3G calculation on a linear hydrogen chain.
Integrals are written in the molecular-orbital basis (chemist notation) and
the full-CI energy of the declared electron count is stored in
``references.json`` next to the fixtures.
"""

import json
from pathlib import Path

from pyscf import fci, gto, scf
from pyscf.tools import fcidump

DATA = Path(__file__).resolve().parents[1] / "src" / "physdrift" / "data"

# name -> (number of atoms, spacing in Angstrom)
CHAINS = {
    "h2_sto3g": (2, 0.7414),
    "h3_chain": (3, 1.0),
    "h4_chain": (4, 1.0),
}


def chain_molecule(n_atoms, spacing):
    atoms = [("H", (0.0, 0.0, i * spacing)) for i in range(n_atoms)]
    return gto.M(atom=atoms, basis="sto-3g", spin=n_atoms % 2, unit="Angstrom", verbose=0)


def main():
    references = {}
    for name, (n_atoms, spacing) in CHAINS.items():
        mol = chain_molecule(n_atoms, spacing)
        mf = scf.ROHF(mol) if mol.spin else scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        path = DATA / f"{name}.fcidump"
        fcidump.from_scf(mf, str(path), tol=1e-15)

        solver = fci.FCI(mf)
        solver.conv_tol = 1e-12
        e_fci, _ = solver.kernel()
        references[name] = {
            "n_atoms": n_atoms,
            "spacing_angstrom": spacing,
            "basis": "sto-3g",
            "n_electrons": int(mol.nelectron),
            "ms2": int(mol.spin),
            "scf_energy": float(mf.e_tot),
            "fci_energy": float(e_fci),
            "generator": "pyscf " + __import__("pyscf").__version__,
        }
        print(f"{name}: E_scf={mf.e_tot:.10f} E_fci={e_fci:.10f}")

    with open(DATA / "references.json", "w") as fh:
        json.dump(references, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
