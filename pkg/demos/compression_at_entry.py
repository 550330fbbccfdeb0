"""
Compression at the entrance of a slow-light medium
==================================================

A pulse that is 30 time units long in free space enters a medium where the
group velocity is one hundredth of c. Inside, it is a hundred times shorter
and its polariton amplitude is ten times larger; the number of excitations
is unchanged.
"""

import math

import numpy as np

from darkpolariton import ControlSchedule, MediumParams, extract_boundary, inject_boundary, polariton_norm

params = MediumParams(g_root_N=1.0)
schedule = ControlSchedule.constant(math.sqrt(0.01 / 0.99))

t = np.linspace(0.0, 200.0, 4001)
E_in = np.exp(-((t - 100.0) / 15.0) ** 2)
inside = inject_boundary(t, E_in, schedule, params)

outside_len = np.ptp(t[E_in > 0.5])
inside_len = np.ptp(inside.z[np.abs(inside.psi) > 0.5 * np.abs(inside.psi).max()])
print(f"half-maximum length: {outside_len:.2f} outside, {inside_len:.4f} inside "
      f"(ratio {inside_len / outside_len:.4f})")
print(f"peak amplitude gain {np.abs(inside.psi).max():.4f}")
print(f"excitations {np.trapezoid(np.abs(E_in) ** 2, t):.6f} outside, {polariton_norm(inside):.6f} inside")

times, E_back = extract_boundary(inside, schedule, params)
print(f"round trip through the boundary: max error {np.max(np.abs(E_back - E_in)):.1e}")
