"""Single-qubit linear algebra.

States are complex numpy arrays of shape ``(2,)`` and unitaries are ``(2, 2)``
arrays. Bloch vectors are real ``(3,)`` arrays ordered ``(x, y, z)``.

Conventions (fixed globally):

* ``|0>`` sits at the north pole ``+z``.
* ``rot_z(t) = exp(-i t sz / 2)`` turns Bloch vectors by ``+t`` about ``+z``
  (right-hand rule); likewise for ``rot_x``.
* States are only compared through :func:`fidelity` and unitaries through
  :func:`distance_up_to_phase`, so global phases never matter.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

I2 = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)

KET0 = np.array([1, 0], dtype=np.complex128)
KET1 = np.array([0, 1], dtype=np.complex128)

STATE_TOL = 1e-9
AXIS_TOL = 1e-6


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite, got {value!r}")


def as_state(s, tol=STATE_TOL):
    """Validate and return ``s`` as a normalized complex 2-vector."""
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (2,):
        raise ValueError(f"qubit state must have shape (2,), got {s.shape}")
    _check_finite("state", s)
    norm2 = float(np.vdot(s, s).real)
    if abs(norm2 - 1.0) > tol:
        raise ValueError(f"state is not normalized (|psi|^2 = {norm2:.12g})")
    return s


def is_unitary(u, tol=1e-12):
    u = np.asarray(u)
    return (
        u.shape == (2, 2)
        and np.allclose(u.conj().T @ u, I2, rtol=0, atol=tol)
        and abs(abs(np.linalg.det(u)) - 1.0) <= tol
    )


def state_from_bloch(vec):
    """Pure state whose Bloch vector points along ``vec`` (normalized internally)."""
    v = np.asarray(vec, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot build a pure state from the zero Bloch vector")
    x, y, z = v / n
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=np.complex128)


def rot_x(angle):
    """``exp(-i angle sx / 2)``."""
    _check_finite("angle", angle)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rot_y(angle):
    _check_finite("angle", angle)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rot_z(angle):
    """``diag(exp(-i angle/2), exp(+i angle/2))``."""
    _check_finite("angle", angle)
    ph = np.exp(-0.5j * angle)
    return np.array([[ph, 0], [0, np.conj(ph)]], dtype=np.complex128)


@dataclass(frozen=True)
class AxisAngle:
    """Rotation by ``angle`` (radians) about a unit ``axis``.

    The axis is renormalized on construction; ``norm_error`` keeps the
    original ``|axis| - 1`` so callers can audit tabulated data. A zero axis
    is only accepted together with a zero angle.
    """

    angle: float
    axis: tuple
    norm_error: float = field(default=0.0, compare=False)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=np.float64)
        if axis.shape != (3,):
            raise ValueError(f"axis must have 3 components, got shape {axis.shape}")
        _check_finite("angle", self.angle)
        _check_finite("axis", axis)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            if self.angle != 0.0:
                raise ValueError("zero rotation axis with nonzero angle")
            axis, err = np.array([0.0, 0.0, 1.0]), -1.0
        else:
            axis, err = axis / n, n - 1.0
        object.__setattr__(self, "angle", float(self.angle))
        object.__setattr__(self, "axis", tuple(float(a) for a in axis))
        object.__setattr__(self, "norm_error", float(err))

    @property
    def nx(self):
        return self.axis[0]

    @property
    def ny(self):
        return self.axis[1]

    @property
    def nz(self):
        return self.axis[2]


def axis_rotation(aa):
    """``cos(phi/2) I - i sin(phi/2) (n . sigma)``."""
    nx, ny, nz = aa.axis
    c, s = np.cos(aa.angle / 2), np.sin(aa.angle / 2)
    return np.array(
        [[c - 1j * s * nz, -1j * s * (nx - 1j * ny)], [-1j * s * (nx + 1j * ny), c + 1j * s * nz]],
        dtype=np.complex128,
    )


def unitary_to_axis_angle(u):
    """Split ``u`` as ``exp(i phase) * axis_rotation(aa)``.

    Returns ``(aa, phase)`` with ``aa.angle`` in ``[0, 2 pi)`` and ``phase`` in
    ``(-pi, pi]``. Multiples of the identity come back with angle 0 and the
    conventional axis ``(0, 0, 1)``; in particular ``-I`` is angle 0, phase pi.
    """
    u = np.asarray(u, dtype=np.complex128)
    phase = 0.5 * np.angle(np.linalg.det(u))
    w = u * np.exp(-1j * phase)
    c = 0.5 * np.trace(w).real
    # n_k sin(phi/2) = (i/2) tr(w sigma_k)
    ns = np.array([(0.5j * np.trace(w @ p)).real for p in PAULIS])
    s = float(np.linalg.norm(ns))
    if s < 1e-15:
        axis = np.array([0.0, 0.0, 1.0])
        if c < 0:
            phase += np.pi
        angle = 0.0
    else:
        axis = ns / s
        angle = 2.0 * np.arctan2(s, c)
        if angle >= 2.0 * np.pi:  # pragma: no cover - arctan2 is capped at pi
            angle -= 2.0 * np.pi
    phase = float(np.angle(np.exp(1j * phase)))
    return AxisAngle(angle, tuple(axis)), phase


def distance_up_to_phase(u, v):
    """``min_alpha max_ij |u - exp(i alpha) v|``."""
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)

    def dist(alpha):
        return float(np.max(np.abs(u - np.exp(1j * alpha) * v)))

    # Frobenius-optimal phase is exact whenever u and v agree up to phase
    alpha0 = float(np.angle(np.trace(v.conj().T @ u)))
    best_alpha, best = alpha0, dist(alpha0)
    grid = alpha0 + np.linspace(-np.pi, np.pi, 181)[:-1]
    for a in grid:
        d = dist(a)
        if d < best:
            best_alpha, best = a, d
    step = 2 * np.pi / 180
    res = minimize_scalar(
        dist, bounds=(best_alpha - step, best_alpha + step), method="bounded", options={"xatol": 1e-12}
    )
    return min(best, float(res.fun))


def init_state():
    """``S H |0> = (|0> + i|1>) / sqrt(2)``."""
    return PHASE_S @ HADAMARD @ KET0


def state_to_bloch(s):
    s = as_state(s)
    return np.array([np.vdot(s, p @ s).real for p in PAULIS])


def fidelity(a, b):
    """``|<a|b>|^2`` for normalized states."""
    a, b = as_state(a), as_state(b)
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def bloch_fidelity(s, target):
    """Fidelity of the (possibly mixed) Bloch vector ``s`` with a pure ``target``."""
    t = state_to_bloch(target)
    return float(0.5 * (1.0 + np.dot(np.asarray(s, dtype=np.float64), t)))


def random_state(rng):
    """Haar-random pure state."""
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    return z / np.linalg.norm(z)


def random_unitary(rng):
    """Haar-random 2x2 unitary (QR with phase fix)."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
