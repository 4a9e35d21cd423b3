"""Hot numeric kernels.

Every kernel has two implementations with identical signatures: a numba
``@njit`` loop version and a vectorised numpy version. The active one is
picked at import time; set ``QEMBED_DISABLE_NUMBA=1`` to force numpy (useful
for debugging and for platforms without numba). Both are always importable
through ``NUMBA_KERNELS`` / ``NUMPY_KERNELS`` so tests and the benchmark can
compare them directly.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _env_disabled():
    return os.environ.get("QEMBED_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def _np_apply_rx(angle, v0, v1):
    c = np.cos(0.5 * angle)
    s = np.sin(0.5 * angle)
    return c * v0 - 1j * s * v1, -1j * s * v0 + c * v1


def _np_apply_rz(angle, v0, v1):
    ph = np.exp(-0.5j * angle)
    return ph * v0, np.conj(ph) * v1


def np_feature_states(xs, thetas):
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    v0 = np.full(xs.shape, _INV_SQRT2, dtype=np.complex128)
    v1 = np.full(xs.shape, 1j * _INV_SQRT2, dtype=np.complex128)
    v0, v1 = _np_apply_rx(xs, v0, v1)
    for k in range(3):
        v0, v1 = _np_apply_rz(thetas[k], v0, v1)
        v0, v1 = _np_apply_rx(xs, v0, v1)
    return np.stack([v0, v1], axis=-1)


def np_fidelity_matrix(states):
    ov = np.conj(states) @ states.T
    return (ov.real**2 + ov.imag**2).T


def np_class_overlap_sums(states, is_a):
    f = np_fidelity_matrix(states)
    a = np.asarray(is_a, dtype=bool)
    b = ~a
    return f[np.ix_(a, a)].sum(), f[np.ix_(b, b)].sum(), f[np.ix_(a, b)].sum()


def _broadcast_atomic(tau1, gap, tau2, rabi, detuning, init):
    init = np.asarray(init, dtype=np.complex128)
    arrs = [np.atleast_1d(np.asarray(a, dtype=np.float64)).ravel() for a in (tau1, gap, tau2, rabi, detuning)]
    if init.ndim == 2:
        arrs.append(np.empty(init.shape[0]))
    arrs = np.broadcast_arrays(*arrs)[:5]
    n = arrs[0].shape[0]
    init = np.broadcast_to(init, (n, 2))
    return tuple(np.ascontiguousarray(a) for a in arrs) + (np.ascontiguousarray(init),)


def np_atomic_states(tau1, gap, tau2, rabi, detuning, init):
    """Evolve ``init`` through on(tau1), off(gap), on(tau2) for arrays of parameters.

    ``init`` is one state ``(2,)`` shared by all samples or ``(n, 2)``.
    """
    tau1, gap, tau2, rabi, detuning, init = _broadcast_atomic(tau1, gap, tau2, rabi, detuning, init)
    v0 = init[:, 0].copy()
    v1 = init[:, 1].copy()
    gen = np.hypot(rabi, detuning)
    safe = np.where(gen > 0, gen, 1.0)
    nx = np.where(gen > 0, rabi / safe, 0.0)
    nz = np.where(gen > 0, -detuning / safe, 1.0)
    for t, on in ((tau1, True), (gap, False), (tau2, True)):
        if on:
            c = np.cos(0.5 * gen * t)
            s = np.sin(0.5 * gen * t)
            a00 = c - 1j * s * nz
            a01 = -1j * s * nx
            a11 = c + 1j * s * nz
            v0, v1 = a00 * v0 + a01 * v1, a01 * v0 + a11 * v1
        else:
            # off segment: rotation about (0, 0, -1) at |detuning|, i.e. Rz(-detuning * t)
            ph = np.exp(0.5j * detuning * t)
            v0, v1 = ph * v0, np.conj(ph) * v1
    return np.stack([v0, v1], axis=-1)


NUMPY_KERNELS = {
    "feature_states": np_feature_states,
    "fidelity_matrix": np_fidelity_matrix,
    "class_overlap_sums": np_class_overlap_sums,
    "atomic_states": np_atomic_states,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_feature_states(xs, thetas):
        n = xs.shape[0]
        out = np.empty((n, 2), dtype=np.complex128)
        for i in range(n):
            c = np.cos(0.5 * xs[i])
            s = np.sin(0.5 * xs[i])
            v0 = complex(_INV_SQRT2, 0.0)
            v1 = complex(0.0, _INV_SQRT2)
            v0, v1 = c * v0 - 1j * s * v1, -1j * s * v0 + c * v1
            for k in range(3):
                ph = np.exp(-0.5j * thetas[k])
                v0 = ph * v0
                v1 = np.conj(ph) * v1
                v0, v1 = c * v0 - 1j * s * v1, -1j * s * v0 + c * v1
            out[i, 0] = v0
            out[i, 1] = v1
        return out

    @njit(cache=True)
    def _nb_fidelity_matrix(states):
        n = states.shape[0]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                ov = np.conj(states[i, 0]) * states[j, 0] + np.conj(states[i, 1]) * states[j, 1]
                out[i, j] = ov.real * ov.real + ov.imag * ov.imag
        return out

    @njit(cache=True)
    def _nb_class_overlap_sums(states, is_a):
        n = states.shape[0]
        saa = 0.0
        sbb = 0.0
        sab = 0.0
        for i in range(n):
            for j in range(n):
                ov = np.conj(states[i, 0]) * states[j, 0] + np.conj(states[i, 1]) * states[j, 1]
                f = ov.real * ov.real + ov.imag * ov.imag
                if is_a[i] and is_a[j]:
                    saa += f
                elif not is_a[i] and not is_a[j]:
                    sbb += f
                elif is_a[i]:
                    sab += f
        return saa, sbb, sab

    @njit(cache=True)
    def _nb_atomic_states(tau1, gap, tau2, rabi, detuning, init):
        n = tau1.shape[0]
        out = np.empty((n, 2), dtype=np.complex128)
        for i in range(n):
            gen = np.hypot(rabi[i], detuning[i])
            if gen > 0.0:
                nx = rabi[i] / gen
                nz = -detuning[i] / gen
            else:
                nx = 0.0
                nz = 1.0
            v0 = init[i, 0]
            v1 = init[i, 1]
            for seg in range(3):
                if seg == 1:
                    ph = np.exp(0.5j * detuning[i] * gap[i])
                    v0 = ph * v0
                    v1 = np.conj(ph) * v1
                else:
                    t = tau1[i] if seg == 0 else tau2[i]
                    c = np.cos(0.5 * gen * t)
                    s = np.sin(0.5 * gen * t)
                    a00 = c - 1j * s * nz
                    a01 = -1j * s * nx
                    a11 = c + 1j * s * nz
                    v0, v1 = a00 * v0 + a01 * v1, a01 * v0 + a11 * v1
            out[i, 0] = v0
            out[i, 1] = v1
        return out

    def nb_feature_states(xs, thetas):
        xs = np.ascontiguousarray(np.atleast_1d(np.asarray(xs, dtype=np.float64)))
        return _nb_feature_states(xs, np.asarray(thetas, dtype=np.float64))

    def nb_fidelity_matrix(states):
        return _nb_fidelity_matrix(np.ascontiguousarray(states, dtype=np.complex128))

    def nb_class_overlap_sums(states, is_a):
        return _nb_class_overlap_sums(
            np.ascontiguousarray(states, dtype=np.complex128), np.asarray(is_a, dtype=np.bool_)
        )

    def nb_atomic_states(tau1, gap, tau2, rabi, detuning, init):
        return _nb_atomic_states(*_broadcast_atomic(tau1, gap, tau2, rabi, detuning, init))

    NUMBA_KERNELS = {
        "feature_states": nb_feature_states,
        "fidelity_matrix": nb_fidelity_matrix,
        "class_overlap_sums": nb_class_overlap_sums,
        "atomic_states": nb_atomic_states,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}


_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

feature_states = _ACTIVE["feature_states"]
fidelity_matrix = _ACTIVE["fidelity_matrix"]
class_overlap_sums = _ACTIVE["class_overlap_sums"]
atomic_states = _ACTIVE["atomic_states"]


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
