"""The Bessel integral identities and the multi-frequency structure
function.

    python3 demos/oracle_identities.py

Prints the identity table (the same one `mtdimaging validate` prints), then
the half-width of the multi-frequency peak as the top wavenumber doubles.
"""
import numpy as np

from mtdimaging import oracle

for name, num, ref, err, tol, ok in oracle.identity_suite():
    print(f"{'PASS' if ok else 'FAIL'}  {name:<28} {num: .9f} {ref: .9f}  err {err:.1e}")

k1 = 2 * np.pi / 0.7
kF = 2 * np.pi / 0.4
prev = None
for scale in (1, 2, 4):
    w = oracle.structure_many_hwhm(k1, scale * kF)
    ratio = "" if prev is None else f"  ratio {w / prev:.3f}"
    print(f"k_F = {scale} x 2pi/0.4: half width {w:.4f}{ratio}")
    prev = w
