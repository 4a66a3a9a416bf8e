"""Exact polynomial algebra and the spatial commutator classifier."""
from fractions import Fraction

from qstkernel import rep
from qstkernel import weylalg as wa
from qstkernel.core import S

th = wa.theta_exact(S)
print("x0 @ x2           =", wa.parse_polynomial("x0@x2", theta=th).to_text())
print("[x0, x2]          =", wa.parse_polynomial("x0@x2 - x2@x0", theta=th).to_text())
print("[x0, x1, x2, x3]  =", wa.parse_polynomial("[x0,x1,x2,x3]", theta=th).to_text())
lam2 = Fraction(9, 4)
th2 = wa.theta_exact([[lam2 * int(v) for v in row] for row in S])
print("same, lambda=3/2  =", wa.parse_polynomial("[x0,x1,x2,x3]", theta=th2).to_text())

print()
for abc in [(1, 1, -1), (1, 1, 0), (0, 0, 0)]:
    r = rep.timespace_classify(*abc, N=16)
    print(f"theta{abc}: {r['verdict']}, residual {r['max_residual']:.1e}, discrepancy={r['discrepancy']}")
