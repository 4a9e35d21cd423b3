"""Hardware parameters for the ten validation states.

States 1-5 belong to class A and 6-10 to class B.
"""

import numpy as np

from .compile import PulseSequence
from .core import AxisAngle

# (tau1, T, tau2) in microseconds
ATOMIC_PULSE_TABLE = (
    (19, 36, 8),
    (45, 51, 7),
    (20, 37, 1),
    (20, 38, 3),
    (19, 28, 3),
    (30, 47, 38),
    (32, 20, 8),
    (4, 7, 35),
    (4, 25, 12),
    (7, 10, 6),
)

# (phi, n_x, n_y, n_z)
PHOTONIC_AXIS_TABLE = (
    (0.668, 0.667, 0.143, 0.731),
    (1.986, -0.423, 0.460, -0.781),
    (2.111, -0.510, 0.379, -0.772),
    (2.408, 0.619, 0.240, 0.748),
    (1.301, -0.405, 0.914, 0.034),
    (4.258, 0.418, 0.908, -0.006),
    (4.367, 0.247, 0.969, 0.026),
    (3.549, -0.475, 0.847, 0.239),
    (4.379, 0.197, 0.980, 0.036),
    (3.762, -0.433, 0.877, 0.208),
)

TABLE_LABELS = ("A",) * 5 + ("B",) * 5


def atomic_sequences():
    return [PulseSequence.from_us(*row) for row in ATOMIC_PULSE_TABLE]


def photonic_axes():
    return [AxisAngle(phi, (nx, ny, nz)) for phi, nx, ny, nz in PHOTONIC_AXIS_TABLE]


def photonic_axis_norms():
    return np.array([np.linalg.norm(row[1:]) for row in PHOTONIC_AXIS_TABLE])
