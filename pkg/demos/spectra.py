"""Bottom of the distance and separation spectra."""
from qstkernel import localisation as loc
from qstkernel.rep import build_coordinates

for lam in (1.0, 2.0):
    _, w = loc.distance_sq_operator(build_coordinates(lam=lam, N=16))
    print(f"lambda={lam}: sum of squared spatial coordinates")
    for value, mult in loc.spectrum_levels(w)[:5]:
        print(f"  {value:10.6f}  x{mult}")

ws = loc.separation_distance_spectrum(build_coordinates(N=12), N=12, truncation="total")
print("\nseparation of two independent events (lambda=1)")
for value, mult in loc.spectrum_levels(ws)[:4]:
    print(f"  {value:10.6f}  x{mult}")

ev = loc.independent_events(build_coordinates(N=4), 2)
sb = loc.separation_and_barycenter(ev)
print(f"\nseparation commutator residual {sb['separation_residual']:.2e}, "
      f"barycenter commutator {sb['barycenter_commutator']:.2e}")
