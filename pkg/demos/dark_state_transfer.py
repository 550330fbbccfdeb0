"""
Mapping a photon onto an atomic ensemble, exactly
=================================================

A handful of three-level atoms share one cavity-like photon mode. The dark
state of the coupled system is built directly on the full Hilbert space and
carried through a slow ramp of the control field. A single photon ends up
as one collective spin excitation; a fast ramp fails. With two excitations
and very few atoms the transfer is visibly imperfect: the bosonic picture
of the polariton only holds when the excitations are rare compared with
the atoms.
"""

import math

from darkpolariton.oracle import (
    SystemSpec,
    collective_matter_state,
    dark_residual,
    dark_state,
    evolve_transfer,
    ramp_schedule,
    round_trip_schedule,
)

g = 1.0
print(f"{'N':>2} {'n':>2} {'residual':>9} {'slow':>9} {'fast':>9} {'there and back':>15}")
for N in (2, 3, 4, 5):
    G = g * math.sqrt(N)
    T = 200 / G
    for n in (1, 2):
        spec = SystemSpec(N, n, g, ramp_schedule(10 * G, 0.0, T))
        psi0 = dark_state(spec, float(spec.theta(0.0)), n)
        target = collective_matter_state(spec, n)
        residual = dark_residual(spec, math.pi / 4, n, G)
        slow = evolve_transfer(spec, psi0, T, 10).final.fidelity(target)
        fast_spec = SystemSpec(N, n, g, ramp_schedule(10 * G, 0.0, 0.2 / G))
        fast = evolve_transfer(fast_spec, psi0, 0.2 / G, 10).final.fidelity(target)
        back_spec = SystemSpec(N, n, g, round_trip_schedule(10 * G, T))
        back = evolve_transfer(back_spec, psi0, 2 * T, 10).final.fidelity(psi0)
        print(f"{N:2d} {n:2d} {residual:9.1e} {slow:9.6f} {fast:9.6f} {back:15.9f}")
