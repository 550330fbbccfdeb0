"""
Storage and retrieval with the full equations
=============================================

The adiabatic picture assumes the excited-state coherence follows the
control instantly. Here the linearised Maxwell-Bloch equations are
integrated directly, including spontaneous decay of the excited state, and
the retrieved pulse is compared with the input for a range of collective
couplings. The loss shrinks about a hundredfold per decade of g^2 N L_p /
(c gamma_ab).
"""

import math

import numpy as np

from darkpolariton import ControlSchedule, Grid, MediumParams, PolaritonProfile, Scenario, integrate
from darkpolariton import displacement, storage_retrieval_fidelity
from darkpolariton.bloch import adiabatic_initial_state
from darkpolariton.validity import adiabaticity_figure

schedule = ControlSchedule.tanh_pair(1 / math.tan(0.1), 0.2, t_off=30.0, t_on=130.0)
grid = Grid(-80.0, 176.0, 257, 0.0, 170.0, 1700)
width = 10.0

print(f"{'g_root_N':>9} {'figure':>8} {'1 - F':>10} {'energy':>8} {'shift':>8} {'predicted':>9}")
for G in (3.16, 10.0, 31.6, 100.0):
    params = MediumParams(g_root_N=G, gamma_ab=1.0)
    psi = 0.01 * np.exp(-(grid.z / width) ** 2) / math.cos(0.1)
    state = adiabatic_initial_state(PolaritonProfile(0.0, grid.z, psi), schedule, params)
    traj = integrate(Scenario(params, schedule, grid, state, record_every=1700))
    report = storage_retrieval_fidelity(traj.initial.E, traj.final.E, grid.z)
    figure = adiabaticity_figure(params, width).value
    predicted = displacement(schedule, params, grid.t_min, grid.t_max)
    print(f"{G:9.2f} {figure:8.0f} {1 - report.fidelity:10.2e} {report.energy_ratio:8.5f} "
          f"{report.shift:8.3f} {predicted:9.3f}")
