"""Generate the bundled two-qubit H2 Hamiltonian (STO-3G, 0.72 A).

The full four-spin-orbital Hamiltonian is built from pyscf integrals, checked
against FCI, then restricted to the two-electron S_z = 0 sector. Qubit 0 is
set when the spin-up electron occupies the antibonding orbital, qubit 1 when
the spin-down one does. The 4x4 block is expanded in Pauli strings.
"""

import itertools
import sys

import numpy as np
from pyscf import ao2mo, fci, gto, scf

BOND_ANGSTROM = 0.72

mol = gto.M(atom=f"H 0 0 0; H 0 0 {BOND_ANGSTROM}", basis="sto-3g", unit="Angstrom", verbose=0)
mf = scf.RHF(mol).run()
h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
eri = ao2mo.restore(1, ao2mo.kernel(mol, mf.mo_coeff), 2)
e_nuc = mol.energy_nuc()
e_fci = fci.FCI(mf).kernel()[0]

# spin orbitals 0=g_up 1=g_dn 2=u_up 3=u_dn
n_so = 4
I2, Z = np.eye(2), np.diag([1.0, -1.0])
lower = np.array([[0.0, 1.0], [0.0, 0.0]])


def annihilate(p):
    ops = [Z] * p + [lower] + [I2] * (n_so - p - 1)
    out = np.array([[1.0]])
    for o in ops:
        out = np.kron(out, o)
    return out


a = [annihilate(p) for p in range(n_so)]
spatial = lambda p: p // 2
spin = lambda p: p % 2
H = e_nuc * np.eye(2**n_so)
for p, q in itertools.product(range(n_so), repeat=2):
    if spin(p) == spin(q):
        H += h1[spatial(p), spatial(q)] * a[p].T @ a[q]
for p, q, r, s in itertools.product(range(n_so), repeat=4):
    if spin(p) == spin(q) and spin(r) == spin(s):
        g = eri[spatial(p), spatial(q), spatial(r), spatial(s)]
        H += 0.5 * g * a[p].T @ a[r].T @ a[s] @ a[q]

assert abs(np.linalg.eigvalsh(H)[0] - e_fci) < 1e-9, "full Hamiltonian disagrees with FCI"


def det_index(occupied):
    idx = 0
    for p in occupied:
        idx |= 1 << (n_so - 1 - p)
    return idx


basis = [det_index(occ) for occ in [(0, 1), (0, 3), (2, 1), (2, 3)]]
# sign so that each column is a†_up a†_dn |vac>
vac = np.zeros(2**n_so)
vac[0] = 1.0
cols = []
for up, dn in [(0, 1), (0, 3), (2, 1), (2, 3)]:
    v = a[up].T @ a[dn].T @ vac
    cols.append(v)
P = np.array(cols).T
block = P.T @ H @ P
assert abs(np.linalg.eigvalsh(block)[0] - e_fci) < 1e-9, "sector block disagrees with FCI"

paulis = {"I": I2, "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]), "Z": Z}
lines = [
    f"# H2, STO-3G, bond length {BOND_ANGSTROM} A, two-electron S_z=0 sector (2 qubits)",
    f"# exact ground energy {e_fci:.12f} Ha (FCI, includes nuclear repulsion)",
]
for s in ("".join(t) for t in itertools.product("IXYZ", repeat=2)):
    m = np.kron(paulis[s[0]], paulis[s[1]])
    c = np.trace(m @ block).real / 4
    if abs(c) > 1e-12:
        lines.append(f"{c:.15f} {s}")
sys.stdout.write("\n".join(lines) + "\n")
