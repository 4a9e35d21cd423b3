"""Hardware compilation: microwave pulse timings and waveplate angles.

Atomic platform: the drive is on for ``tau1``, off for ``T``, on for
``tau2``. While on, the qubit turns at the generalized Rabi frequency about
``(rabi, 0, -detuning) / |Omega|``; while off it precesses about ``-z`` at the
detuning.

Photonic platform (Jones convention): ``|H> = |0>``; a plate with fast axis
at ``angle`` and retardance ``rho`` acts as ``R(angle) diag(1, e^{i rho})
R(-angle)`` with ``R`` the real 2D rotation. Light meets Q1 first, so the
stack realises ``Q(q3) H(h2) Q(q1)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from . import _kernels
from .core import (
    KET0,
    AxisAngle,
    as_state,
    axis_rotation,
    distance_up_to_phase,
    fidelity,
)

TWO_PI = 2.0 * np.pi
US = 1e-6

# ---------------------------------------------------------------------------
# atomic platform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomicPlatformSpec:
    rabi: float = TWO_PI * 38e3
    detuning: float = TWO_PI * 6.57e3
    max_duration: float = 100e-6
    time_resolution: float = 1e-6

    def __post_init__(self):
        if not self.rabi > 0:
            raise ValueError("rabi must be > 0")
        if self.detuning == 0 or not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite and nonzero")
        if not self.max_duration > 0:
            raise ValueError("max_duration must be > 0")
        if self.time_resolution < 0:
            raise ValueError("time_resolution must be >= 0")

    @property
    def generalized_rabi(self):
        return float(np.hypot(self.rabi, self.detuning))

    def with_frequencies(self, rabi, detuning):
        return AtomicPlatformSpec(rabi, detuning, self.max_duration, self.time_resolution)


@dataclass(frozen=True)
class PulseSequence:
    """Durations in seconds; ``flagged`` marks a solve that missed its tolerance."""

    tau1: float
    T: float
    tau2: float
    infidelity: float = 0.0
    flagged: bool = False

    def __post_init__(self):
        for name in ("tau1", "T", "tau2"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a finite non-negative duration, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "infidelity", float(self.infidelity))
        object.__setattr__(self, "flagged", bool(self.flagged))

    @classmethod
    def from_us(cls, tau1_us, T_us, tau2_us, **kw):
        return cls(tau1_us * US, T_us * US, tau2_us * US, **kw)

    def durations(self):
        return np.array([self.tau1, self.T, self.tau2])

    def to_json(self):
        return {
            "tau1_us": self.tau1 / US,
            "T_us": self.T / US,
            "tau2_us": self.tau2 / US,
            "infidelity": float(self.infidelity),
            "flagged": bool(self.flagged),
        }

    @classmethod
    def from_json(cls, d):
        return cls.from_us(
            d["tau1_us"], d["T_us"], d["tau2_us"], infidelity=d.get("infidelity", 0.0), flagged=d.get("flagged", False)
        )


def atomic_segment(on, duration, spec):
    """Unitary of one rectangular segment (drive ``on`` or off) of length ``duration``."""
    if not np.isfinite(duration) or duration < 0:
        raise ValueError(f"duration must be finite and >= 0, got {duration}")
    rabi = spec.rabi if on else 0.0
    gen = float(np.hypot(rabi, spec.detuning))
    return axis_rotation(AxisAngle(gen * duration, (rabi / gen, 0.0, -spec.detuning / gen)))


def sequence_unitary(seq, spec):
    return (
        atomic_segment(True, seq.tau2, spec)
        @ atomic_segment(False, seq.T, spec)
        @ atomic_segment(True, seq.tau1, spec)
    )


def atomic_evolution(seq, spec, initial=KET0):
    """State after on(tau1), off(T), on(tau2) starting from ``initial``."""
    init = as_state(initial)
    out = _kernels.atomic_states(seq.tau1, seq.T, seq.tau2, spec.rabi, spec.detuning, init)
    return out[0]


def _atomic_infidelity_us(x_us, spec, init, target):
    psi = _kernels.atomic_states(x_us[0] * US, x_us[1] * US, x_us[2] * US, spec.rabi, spec.detuning, init)[0]
    return 1.0 - abs(np.vdot(target, psi)) ** 2


def _atomic_bloch_residual_us(x_us, spec, init, target_bloch):
    psi = _kernels.atomic_states(x_us[0] * US, x_us[1] * US, x_us[2] * US, spec.rabi, spec.detuning, init)[0]
    return _bloch(psi) - target_bloch


def _bloch(psi):
    a, b = psi
    ab = np.conj(a) * b
    return np.array([2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2])


def quantize_sequence(seq, spec, target, initial=KET0):
    """Round durations to ``spec.time_resolution`` and restate the infidelity."""
    res = spec.time_resolution
    if res <= 0:
        return seq
    d = np.clip(np.round(seq.durations() / res) * res, 0.0, spec.max_duration)
    q = PulseSequence(*d)
    inf = 1.0 - fidelity(atomic_evolution(q, spec, initial), target)
    return PulseSequence(*d, infidelity=max(0.0, inf), flagged=seq.flagged)


def compile_atomic(
    target, spec=AtomicPlatformSpec(), initial=KET0, tol=1e-6, starts=16, seed=0, quantize=False, prefer="best"
):
    """Find on/off/on durations steering ``initial`` to ``target``.

    Multistart bounded Nelder-Mead over ``[0, max_duration]^3`` followed by a
    least-squares polish on the Bloch-vector residual. The best start wins
    (lowest index on ties). ``prefer='shortest'`` instead keeps, among the
    starts that reach ``tol``, the one with the smallest total duration (all
    starts are then run). A result above ``tol`` is returned with
    ``flagged=True`` rather than raising. With ``quantize=True`` the durations
    are rounded to ``spec.time_resolution`` and the infidelity restated; the
    rounding typically costs far more than ``tol``.
    """
    if prefer not in ("best", "shortest"):
        raise ValueError(f"prefer must be 'best' or 'shortest', got {prefer!r}")
    target = as_state(target)
    init = as_state(initial)
    if fidelity(init, target) >= 1.0 - 1e-15:
        seq = PulseSequence(0.0, 0.0, 0.0, infidelity=0.0)
        return quantize_sequence(seq, spec, target, init) if quantize else seq

    tb = _bloch(target)
    hi = spec.max_duration / US
    bounds = [(0.0, hi)] * 3
    rng = np.random.default_rng(seed)
    x0s = rng.random((starts, 3)) * hi
    best_x, best_f = None, np.inf
    short_x, short_len = None, np.inf
    for x0 in x0s:
        nm = minimize(
            _atomic_infidelity_us,
            x0,
            args=(spec, init, target),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000},
        )
        x = nm.x
        if nm.fun < 1e-3:
            ls = least_squares(
                _atomic_bloch_residual_us,
                x,
                args=(spec, init, tb),
                bounds=([0.0] * 3, [hi] * 3),
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                method="trf",
            )
            x = ls.x
        f = _atomic_infidelity_us(x, spec, init, target)
        if f < best_f:
            best_x, best_f = x, f
        if prefer == "shortest":
            if f <= tol and x.sum() < short_len:
                short_x, short_len = x, x.sum()
        elif best_f <= 1e-14:
            break
    if short_x is not None:
        best_x, best_f = short_x, _atomic_infidelity_us(short_x, spec, init, target)
    seq = PulseSequence(*(best_x * US), infidelity=max(0.0, float(best_f)), flagged=bool(best_f > tol))
    return quantize_sequence(seq, spec, target, init) if quantize else seq


# ---------------------------------------------------------------------------
# photonic platform
# ---------------------------------------------------------------------------

QUARTER = np.pi / 2
HALF = np.pi


@dataclass(frozen=True)
class WaveplateSetting:
    """Fast-axis angles (radians) of the Q1-H2-Q3 encoding stack."""

    q1: float
    h2: float
    q3: float
    residual: float = 0.0
    method: str = "closed-form"

    def __post_init__(self):
        vals = (self.q1, self.h2, self.q3)
        if not np.all(np.isfinite(vals)):
            raise ValueError("waveplate angles must be finite")
        for name, v in zip(("q1", "h2", "q3"), vals):
            object.__setattr__(self, name, wrap_plate_angle(v))

    def angles(self):
        return np.array([self.q1, self.h2, self.q3])

    def to_json(self):
        return {
            "q1_deg": float(np.degrees(self.q1)),
            "h2_deg": float(np.degrees(self.h2)),
            "q3_deg": float(np.degrees(self.q3)),
            "residual": float(self.residual),
            "method": self.method,
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            np.radians(d["q1_deg"]),
            np.radians(d["h2_deg"]),
            np.radians(d["q3_deg"]),
            residual=d.get("residual", 0.0),
            method=d.get("method", "closed-form"),
        )


def wrap_plate_angle(a):
    """Plates are symmetric under a half turn; report angles in ``(-pi/2, pi/2]``."""
    if -np.pi / 2 < a <= np.pi / 2:
        return float(a)
    return float(np.pi / 2 - np.mod(np.pi / 2 - a, np.pi))


def _plate(retardance, angle):
    c, s = np.cos(angle), np.sin(angle)
    r = np.array([[c, -s], [s, c]])
    return r @ np.diag([1.0, np.exp(1j * retardance)]) @ r.T


def waveplate_jones(kind, angle, retardance_error=0.0):
    """Jones matrix of a quarter- or half-wave plate with fast axis at ``angle``."""
    if not np.isfinite(angle):
        raise ValueError("waveplate angle must be finite")
    if kind == "quarter":
        rho = QUARTER
    elif kind == "half":
        rho = HALF
    else:
        raise ValueError(f"unknown waveplate kind {kind!r}")
    return _plate(rho + retardance_error, angle)


def qhq_unitary(q1, h2, q3, retardance_errors=(0.0, 0.0, 0.0)):
    e1, e2, e3 = retardance_errors
    return waveplate_jones("quarter", q3, e3) @ waveplate_jones("half", h2, e2) @ waveplate_jones("quarter", q1, e1)


def setting_unitary(ws, retardance_errors=(0.0, 0.0, 0.0)):
    return qhq_unitary(ws.q1, ws.h2, ws.q3, retardance_errors)


def compile_waveplates_closed_form(aa):
    """Closed-form plate angles from an axis-angle target, evaluated literally.

    Q1 and Q3 share one expression, so this family has two free angles and
    cannot reach every target; ``residual`` says how far off it lands.
    Raises ``ValueError`` when ``n_x == 0`` since the expressions divide by
    it; use :func:`compile_waveplates_numeric` there.
    """
    phi = aa.angle
    nx, ny, nz = aa.axis
    if nx == 0.0:
        raise ValueError("closed-form waveplate angles need n_x != 0; use compile_waveplates_numeric")
    tilt = np.arctan(nz / nx)
    q = 0.5 * (-tilt - np.arctan(ny * np.tan(phi / 2)))
    arg = np.clip(nx * np.sqrt(nz**2 / nx**2 + 1) * np.sin(phi / 2), -1.0, 1.0)
    h = 0.5 * (-np.arcsin(arg) - tilt)
    ws = WaveplateSetting(q, h, q, method="closed-form")
    res = distance_up_to_phase(setting_unitary(ws), axis_rotation(aa))
    return WaveplateSetting(q, h, q, residual=res, method="closed-form")


def _unitary_residual(angles, target):
    u = qhq_unitary(*angles)
    t = np.trace(target.conj().T @ u)
    ph = t / abs(t) if abs(t) > 1e-300 else 1.0
    diff = (u - ph * target).ravel()
    return np.concatenate([diff.real, diff.imag])


def compile_waveplates_numeric(target, starts=16, seed=0, tol=1e-6):
    """General Q-H-Q synthesis by seeded multistart least squares.

    The residual reported is :func:`distance_up_to_phase` between the stack
    and ``target``; above ``tol`` the setting comes back with
    ``method='numeric-flagged'``.
    """
    target = np.asarray(target, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    x0s = (rng.random((starts, 3)) - 0.5) * np.pi
    best, best_res = None, np.inf
    for x0 in x0s:
        sol = least_squares(_unitary_residual, x0, args=(target,), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        res = distance_up_to_phase(qhq_unitary(*sol.x), target)
        if res < best_res:
            best, best_res = sol.x, res
        if best_res <= 1e-13:
            break
    method = "numeric" if best_res <= tol else "numeric-flagged"
    return WaveplateSetting(*best, residual=float(best_res), method=method)


def compile_photonic(aa, state_tol=1e-9, **numeric_kw):
    """Plate angles realising ``axis_rotation(aa)`` on ``|H>``.

    The closed form is tried first; when ``n_x == 0`` or the state it
    prepares from ``|H>`` misses the target by more than ``state_tol`` in
    infidelity, the numeric synthesis is used instead (``method`` records
    which path produced the result).
    """
    target_u = axis_rotation(aa)
    try:
        ws = compile_waveplates_closed_form(aa)
    except ValueError:
        ws = None
    if ws is not None:
        miss = 1.0 - fidelity(setting_unitary(ws) @ KET0, target_u @ KET0)
        if miss <= state_tol:
            return ws
    num = compile_waveplates_numeric(target_u, **numeric_kw)
    return WaveplateSetting(num.q1, num.h2, num.q3, residual=num.residual, method=f"{num.method}-fallback")


def verify_compilation(target, realized):
    """``1 - fidelity`` for states, :func:`distance_up_to_phase` for unitaries."""
    t = np.asarray(target, dtype=np.complex128)
    r = np.asarray(realized, dtype=np.complex128)
    if t.shape != r.shape:
        raise ValueError(f"kind mismatch: target {t.shape} vs realized {r.shape}")
    if t.shape == (2,):
        return max(0.0, 1.0 - fidelity(t, r))
    if t.shape == (2, 2):
        return distance_up_to_phase(t, r)
    raise ValueError(f"unsupported shape {t.shape}")
