#!/usr/bin/env python3
#
# HBGSA - hydrogen-bond graph affinity toolkit
# SPDX-License-Identifier: Apache-2.0
#
"""Regenerates the synthetic complexes, manifest and index files in this
directory. Output is deterministic; run from any working directory."""

import math
import pathlib
import random

HERE = pathlib.Path(__file__).resolve().parent

# (id, ligand SMILES, affinity, number of ligand polar atoms placed near the
# protein backbone)
FIXTURES = [
    ("fx01", "CC(=O)Nc1nnc(s1)S(=O)(=O)N", 5.20, 1),
    ("fx02", "CC(=O)Oc1ccccc1C(=O)O", 6.10, 2),
    ("fx03", "NCCc1ccc(O)c(O)c1", 6.80, 3),
    ("fx04", "OC1C(O)C(O)C(CO)OC1O", 7.90, 4),
    ("fx05", "CCN(CC)CCNC(=O)c1ccc(N)cc1", 4.60, 0),
]

RESIDUES = ["SER", "GLY", "ASN", "THR", "ALA", "GLU", "LYS", "TYR", "ASP", "LEU"]
ONE_LETTER = {"SER": "S", "GLY": "G", "ASN": "N", "THR": "T", "ALA": "A",
              "GLU": "E", "LYS": "K", "TYR": "Y", "ASP": "D", "LEU": "L"}


def atom_line(record, serial, name, resname, chain, resseq, xyz, element):
    # Four-character names start in column 13, shorter ones in column 14.
    padded = name if len(name) == 4 else " " + name.ljust(3)
    return (f"{record:<6}{serial:5d} {padded:4s} {resname:3s} {chain}{resseq:4d}    "
            f"{xyz[0]:8.3f}{xyz[1]:8.3f}{xyz[2]:8.3f}{1.0:6.2f}{20.0:6.2f}"
            f"          {element:>2s}")


def make_complex(code, n_contacts, rng):
    lines = [f"HEADER    SYNTHETIC TEST COMPLEX                  01-JAN-00   {code.upper()}",
             "REMARK   1 HBGSA - hydrogen-bond graph affinity toolkit",
             "REMARK   1 SPDX-License-Identifier: Apache-2.0"]
    serial = 1
    sequence = []
    polar = []
    # A straight strand along x, 3.8 A per residue.
    for i in range(12):
        res = RESIDUES[(i + len(code) + n_contacts) % len(RESIDUES)]
        sequence.append(ONE_LETTER[res])
        x = 3.8 * i
        atoms = [("N", (x, 0.0, 0.0), "N"), ("CA", (x + 1.2, 0.6, 0.0), "C"),
                 ("C", (x + 2.4, 0.0, 0.0), "C"), ("O", (x + 2.4, -1.2, 0.0), "O")]
        for name, xyz, el in atoms:
            lines.append(atom_line("ATOM", serial, name, res, "A", i + 1, xyz, el))
            if el in "NO":
                polar.append(xyz)
            serial += 1
    lines.append("TER")
    # Ligand atoms 10 A above the strand, except the contact atoms that sit
    # 2.6-3.3 A straight above a backbone polar atom.
    contacts = rng.sample(range(0, len(polar), 2), n_contacts)
    lig_serial = 1
    for k, idx in enumerate(contacts):
        px, py, pz = polar[idx]
        d = rng.uniform(2.6, 3.3)
        el = "O" if k % 2 == 0 else "N"
        lines.append(atom_line("HETATM", serial, f"{el}{lig_serial}", "LIG", "B", 1,
                               (px, py, pz + d), el))
        serial += 1
        lig_serial += 1
    for k in range(6):
        ang = 2 * math.pi * k / 6
        xyz = (20.0 + 1.4 * math.cos(ang), 1.4 * math.sin(ang), 10.0)
        lines.append(atom_line("HETATM", serial, f"C{lig_serial}", "LIG", "B", 1, xyz, "C"))
        serial += 1
        lig_serial += 1
    # A crystal water close to the strand must not count as ligand.
    lines.append(atom_line("HETATM", serial, "O", "HOH", "W", 1,
                           (polar[1][0], polar[1][1], polar[1][2] + 2.8), "O"))
    lines.append("END")
    return "\n".join(lines) + "\n", "".join(sequence)


def main():
    rng = random.Random(20240601)
    rows = ["id,pdb_path,ligand_resname,smiles,protein_seq,pocket_seq,affinity"]
    header = ["# HBGSA - hydrogen-bond graph affinity toolkit",
              "# SPDX-License-Identifier: Apache-2.0",
              "# synthetic PDBbind-style index", "# code  resolution  year  -logKd/Ki  Kd/Ki"]
    index = []
    for code, smiles, affinity, contacts in FIXTURES:
        text, seq = make_complex(code, contacts, rng)
        (HERE / f"{code}.pdb").write_text(text)
        rows.append(f"{code},{code}.pdb,LIG,{smiles},{seq},{seq[2:9]},{affinity:.2f}")
        index.append(f"{code}  2.00  2000  {affinity:.2f}  Kd=1uM")
    (HERE / "manifest.csv").write_text("\n".join(rows) + "\n")
    (HERE / "index_general.txt").write_text("\n".join(header + index[0:2]) + "\n")
    (HERE / "index_refined.txt").write_text("\n".join(header + index[2:5]) + "\n")
    (HERE / "index_core.txt").write_text("\n".join(header + index[3:5]) + "\n")

    # Prediction-only manifest: labels left empty.
    unlabeled = [rows[0]] + [",".join(r.split(",")[:-1]) + "," for r in rows[1:4]]
    (HERE / "manifest_unlabeled.csv").write_text("\n".join(unlabeled) + "\n")


if __name__ == "__main__":
    main()
