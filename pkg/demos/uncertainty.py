"""Uncertainty products of the quantum coordinates.

Prints the two left-hand sides for the vacuum, for equally squeezed
states, and for states squeezed in one oscillator only.  The last family
shows the second product falling below one for strong squeezing.
"""
import numpy as np

from qstkernel import localisation as loc
from qstkernel.rep import build_coordinates

coords = build_coordinates(N=16)
vac = loc.stur_check(loc.coherent_state(0.0, 16), coords)
print(f"vacuum: lhs1={vac['lhs1']:.6f} lhs2={vac['lhs2']:.6f}")

fam = loc.squeezed_stur_family(rs=np.linspace(0.0, 1.0, 6))
print("\nboth modes squeezed")
for row in fam["rows"]:
    print(f"  r={row['r']:.2f}  lhs1={row['lhs1']:.4f}  lhs2={row['lhs2']:.4f}")

print("\none mode squeezed")
for row in loc.single_mode_squeeze_probe(rs=np.linspace(0.0, 2.0, 9)):
    flag = "  < 1" if row["lhs2"] < 1 else ""
    print(f"  r={row['r']:.2f}  lhs1={row['lhs1']:.4f}  lhs2={row['lhs2']:.4f}{flag}")

scan = loc.stur_scan(n_states=2000, seed=0, N=8)
print(f"\nrandom safe-subspace states: {scan['samples']} sampled, violations={scan['violations']}, "
      f"worst margin={scan['worst_margin']:.4f}")
