"""Simulated experiments: SWAP-test sampling, tomography and their noise.

Randomness: every randomized routine takes an integer ``seed``. Independent
sub-tasks (Gram entries, tomography runs over a table) use
``numpy.random.default_rng([seed, *task_index])`` so any schedule gives the
same numbers as the sequential loop.
"""

import json
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .compile import (
    AtomicPlatformSpec,
    compile_atomic,
    compile_photonic,
    qhq_unitary,
    waveplate_jones,
)
from .core import KET0, KET1, as_state, axis_rotation, state_from_bloch, state_to_bloch
from .embedding import GramMatrix

# ---------------------------------------------------------------------------
# SWAP test
# ---------------------------------------------------------------------------


def swap_test_prob(a, b):
    """Probability of reading the ancilla in ``|0>``: ``(1 + |<a|b>|^2) / 2``."""
    a, b = as_state(a), as_state(b)
    f = min(1.0, abs(np.vdot(a, b)) ** 2)
    return 0.5 * (1.0 + f)


_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_H_ANCILLA = np.kron(_H, np.eye(4))
_CSWAP = np.eye(8)
_CSWAP[[5, 6]] = _CSWAP[[6, 5]]  # |1,0,1> <-> |1,1,0>


def swap_test_statevector_oracle(a, b):
    """Brute-force 3-qubit simulation of H - controlled-SWAP - H on the ancilla."""
    psi = np.kron(KET0, np.kron(as_state(a), as_state(b)))
    psi = _H_ANCILLA @ (_CSWAP @ (_H_ANCILLA @ psi))
    return float(np.sum(np.abs(psi[:4]) ** 2))


@dataclass(frozen=True)
class ShotModel:
    shots: int = 2000
    seed: int = 0

    def __post_init__(self):
        if int(self.shots) < 1:
            raise ValueError("shots must be >= 1")


def _overlap_estimate(p, shots, rng, clamp=True):
    k = rng.binomial(shots, min(1.0, max(0.0, p)))
    est = 2.0 * k / shots - 1.0
    return min(1.0, max(0.0, est)) if clamp else est


def sample_swap_test(a, b, shots=ShotModel(), clamp=True):
    """Overlap estimate ``2 k / shots - 1`` from ``shots`` ancilla readouts."""
    rng = np.random.default_rng(shots.seed)
    return _overlap_estimate(swap_test_prob(a, b), shots.shots, rng, clamp)


def gram_from_shots(states, shots=ShotModel(), ids=(), clamp=True):
    """Every entry (diagonal included) estimated by its own SWAP-test run.

    No symmetrization: ``G[i, j]`` and ``G[j, i]`` are independent samples.
    With ``clamp=False`` the raw estimates in ``[-1, 1]`` are kept.
    Entry ``(i, j)`` uses the generator ``default_rng([seed, i, j])``.
    """
    s = np.asarray(states, dtype=np.complex128)
    if s.ndim != 2 or s.shape[0] == 0:
        raise ValueError("gram_from_shots needs a non-empty list of states")
    n = s.shape[0]
    probs = 0.5 * (1.0 + np.clip(_kernels.fidelity_matrix(s), 0.0, 1.0))
    g = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            rng = np.random.default_rng([shots.seed, i, j])
            g[i, j] = _overlap_estimate(probs[i, j], shots.shots, rng, clamp)
    return GramMatrix(g, ids)


def swap_sigma(f, shots):
    """Binomial standard deviation of the overlap estimate at true overlap ``f``."""
    p = 0.5 * (1.0 + np.asarray(f))
    return 2.0 * np.sqrt(p * (1.0 - p) / shots)


# ---------------------------------------------------------------------------
# tomography records
# ---------------------------------------------------------------------------


def reconstruct_bloch(measured):
    """Radially project a measured Bloch vector into the unit ball."""
    v = np.asarray(measured, dtype=np.float64)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError("measured Bloch vector must be 3 finite numbers")
    n = np.linalg.norm(v)
    return v / n if n > 1.0 else v.copy()


def _project_rows(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 1.0, v / np.where(n > 0, n, 1.0), v)


@dataclass
class TomographyRecord:
    platform: str
    raw: dict
    bloch: np.ndarray
    uncertainty: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_json(self):
        def clean(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, np.generic):
                return x.item()
            return x

        return {
            "platform": self.platform,
            "raw": clean(self.raw),
            "bloch": clean(self.bloch),
            "uncertainty": clean(self.uncertainty),
            "meta": clean(self.meta),
        }

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def gram_from_bloch(vectors, ids=()):
    """Gram matrix ``tr(rho_i rho_j) = (1 + s_i . s_j) / 2`` of Bloch-ball states."""
    v = np.asarray(vectors, dtype=np.float64)
    return GramMatrix(np.clip(0.5 * (1.0 + v @ v.T), 0.0, 1.0), ids)


# ---------------------------------------------------------------------------
# atomic platform
# ---------------------------------------------------------------------------

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AtomicNoiseModel:
    """Relative session drift plus per-measurement Gaussian jitter (rad/s)."""

    rel_rabi_drift: float = 0.01
    rabi_jitter: float = TWO_PI * 1.5e3
    detuning_jitter: float = TWO_PI * 71.0
    repetitions: int = 5

    def __post_init__(self):
        if min(self.rel_rabi_drift, self.rabi_jitter, self.detuning_jitter) < 0:
            raise ValueError("noise magnitudes must be >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @classmethod
    def noiseless(cls, repetitions=1):
        return cls(0.0, 0.0, 0.0, repetitions)


_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0)}


ANALYSIS_WINDOWS_US = (10.0, 20.0, 40.0, 80.0)


@lru_cache(maxsize=32)
def analysis_pulses(spec=AtomicPlatformSpec(), seed=0):
    """Short pulses turning the x / y measurement axis onto the z axis.

    Durations are searched in growing windows (``ANALYSIS_WINDOWS_US`` and
    finally ``spec.max_duration``) and the first window with a solution wins.
    Within a window both ``+axis -> +z`` and ``+axis -> -z`` are solved and
    the shorter sequence kept; the returned sign undoes a flip onto ``-z``.
    Returns ``{"x": (seq, sign), "y": (seq, sign)}``.
    """
    windows = [w * 1e-6 for w in ANALYSIS_WINDOWS_US if w * 1e-6 < spec.max_duration] + [spec.max_duration]
    out = {}
    for k, (name, axis) in enumerate(_AXES.items()):
        start = state_from_bloch(axis)
        best = None
        for window in windows:
            wspec = replace(spec, max_duration=window)
            for sign, tgt in ((1.0, KET0), (-1.0, KET1)):
                seq = compile_atomic(tgt, wspec, initial=start, starts=32, seed=seed + k, prefer="shortest")
                if seq.flagged:
                    continue
                if best is None or seq.durations().sum() < best[0].durations().sum():
                    best = (seq, sign)
            if best is not None:
                break
        if best is None:  # pragma: no cover - reachable for all sane specs
            raise RuntimeError(f"could not compile the {name}-analysis pulse")
        out[name] = best
    return out


def _evolve(seqs_tau, rabi, detuning, init):
    tau1, gap, tau2 = seqs_tau
    return _kernels.atomic_states(tau1, gap, tau2, rabi, detuning, init)


def simulate_atomic_tomography(seq, spec=AtomicPlatformSpec(), noise=AtomicNoiseModel(), seed=0):
    """Repeated three-component tomography of an on/off/on sequence.

    Per record, a session offset ``N(0, rel_rabi_drift)`` scales both the Rabi
    frequency and the detuning; every single measurement then adds its own
    Gaussian jitter. ``S_z`` is read directly; ``S_x`` and ``S_y`` after an
    analysis pulse from :func:`analysis_pulses`. Each reading is
    ``(P0 - P1) / (P0 + P1)``.
    """
    rng = np.random.default_rng(seed)
    reps = noise.repetitions
    drift_r, drift_d = rng.normal(0.0, noise.rel_rabi_drift, 2) if noise.rel_rabi_drift > 0 else (0.0, 0.0)
    rabi0 = spec.rabi * (1.0 + drift_r)
    det0 = spec.detuning * (1.0 + drift_d)
    pulses = analysis_pulses(spec)
    comps = ("x", "y", "z")
    readings = np.empty((reps, 3))
    rel_pop = np.empty((reps, 3))
    for c, comp in enumerate(comps):
        rabi = rabi0 + noise.rabi_jitter * rng.standard_normal(reps)
        det = det0 + noise.detuning_jitter * rng.standard_normal(reps)
        psi = _evolve((seq.tau1, seq.T, seq.tau2), rabi, det, KET0)
        sign = 1.0
        if comp != "z":
            ana, sign = pulses[comp]
            psi = _evolve((ana.tau1, ana.T, ana.tau2), rabi, det, psi)
        p0 = np.abs(psi[:, 0]) ** 2
        p1 = np.abs(psi[:, 1]) ** 2
        rel_pop[:, c] = p1 / (p0 + p1)
        readings[:, c] = sign * (p0 - p1) / (p0 + p1)
    mean = readings.mean(axis=0)
    std = readings.std(axis=0, ddof=1) if reps > 1 else np.zeros(3)
    return TomographyRecord(
        platform="atomic",
        raw={"relative_population": rel_pop, "components": readings},
        bloch=reconstruct_bloch(mean),
        uncertainty=std,
        meta={
            "sequence": seq.to_json(),
            "noise": asdict(noise),
            "seed": seed,
            "analysis": {k: {"sequence": v[0].to_json(), "sign": v[1]} for k, v in pulses.items()},
        },
    )


# ---------------------------------------------------------------------------
# photonic platform
# ---------------------------------------------------------------------------

# (quarter angle, half angle) in degrees; light meets the quarter plate first,
# then the half plate, then a PBS that transmits |H>.
PROJECTORS = {
    "H": (0.0, 0.0),
    "V": (0.0, -45.0),
    "D": (-45.0, 22.5),
    "A": (-45.0, -22.5),
    "R": (0.0, -22.5),
    "L": (0.0, 22.5),
}
PROJECTOR_ORDER = ("H", "V", "D", "A", "R", "L")


@dataclass(frozen=True)
class PhotonicNoiseModel:
    """Uniform error bounds (radians) and the total coincidence budget."""

    encoding_plate_error: float = float(np.radians(1.0))
    tomo_plate_error: float = float(np.radians(0.25))
    retardance_error: float = float(np.radians(2.0))
    total_counts: int = 20000

    def __post_init__(self):
        if min(self.encoding_plate_error, self.tomo_plate_error, self.retardance_error) < 0:
            raise ValueError("error bounds must be >= 0")
        if self.total_counts < 0:
            raise ValueError("total_counts must be >= 0")

    @classmethod
    def noiseless(cls, total_counts=20000):
        return cls(0.0, 0.0, 0.0, total_counts)


def projector_probability(psi, name, quarter_err=0.0, half_err=0.0):
    q, h = PROJECTORS[name]
    w = waveplate_jones("half", np.radians(h) + half_err) @ waveplate_jones("quarter", np.radians(q) + quarter_err)
    return float(abs((w @ psi)[0]) ** 2)


def invert_counts(counts):
    """Linear inversion of ``(..., 6)`` counts ordered H, V, D, A, R, L."""
    c = np.asarray(counts, dtype=np.float64)
    h, v, d, a, r, l = np.moveaxis(c, -1, 0)

    def ratio(p, m):
        s = p + m
        return np.divide(p - m, s, out=np.zeros_like(s), where=s > 0)

    return np.stack([ratio(d, a), ratio(r, l), ratio(h, v)], axis=-1)


def _ratio_sigma(p, m):
    s = p + m
    return 2.0 * np.sqrt(p * m / s**3) if s > 0 else 0.0


def ideal_photonic_state(aa):
    """The embedding unitary applied to ``|H>``."""
    return axis_rotation(aa) @ KET0


def simulate_photonic_tomography(target, noise=PhotonicNoiseModel(), seed=0, expected_counts=False, setting=None):
    """Encode with imperfect plates, then six-projector tomography with Poisson counts.

    Each basis setting receives ``total_counts / 3`` photons on average, so a
    projector collects ``total_counts / 3 * p`` expected events (about
    ``total_counts / 6``). With ``expected_counts=True`` the expected values
    are used directly (infinite-statistics limit).
    """
    rng = np.random.default_rng(seed)
    ws = setting if setting is not None else compile_photonic(target)
    e = noise.encoding_plate_error
    r = noise.retardance_error
    angle_err = rng.uniform(-e, e, 3) if e > 0 else np.zeros(3)
    ret_err = rng.uniform(-r, r, 3) if r > 0 else np.zeros(3)
    u = qhq_unitary(*(ws.angles() + angle_err), retardance_errors=tuple(ret_err))
    psi = u @ KET0
    per_basis = noise.total_counts / 3.0
    t = noise.tomo_plate_error
    expected = np.empty(6)
    for k, name in enumerate(PROJECTOR_ORDER):
        qe, he = rng.uniform(-t, t, 2) if t > 0 else (0.0, 0.0)
        expected[k] = per_basis * projector_probability(psi, name, qe, he)
    counts = expected if expected_counts else rng.poisson(expected).astype(np.float64)
    raw_bloch = invert_counts(counts)
    pairs = ((2, 3), (4, 5), (0, 1))
    sigma = np.array([_ratio_sigma(counts[i], counts[j]) for i, j in pairs])
    return TomographyRecord(
        platform="photonic",
        raw={"counts": dict(zip(PROJECTOR_ORDER, counts.tolist())), "raw_bloch": raw_bloch},
        bloch=reconstruct_bloch(raw_bloch),
        uncertainty=sigma,
        meta={
            "target": {"angle": target.angle, "axis": list(target.axis)},
            "setting": ws.to_json(),
            "encoding_angle_error_rad": angle_err,
            "retardance_error_rad": ret_err,
            "noise": asdict(noise),
            "seed": seed,
            "expected_counts": bool(expected_counts),
        },
    )


def record_counts(record):
    return np.array([record.raw["counts"][k] for k in PROJECTOR_ORDER], dtype=np.float64)


def mc_fidelity_uncertainty(record, target_state, replicas=300, seed=0):
    """Poisson bootstrap of the fidelity with ``target_state``.

    Each replica redraws every projector count from ``Poisson(observed)``,
    re-inverts and projects into the Bloch ball. Returns ``(mean, std)``.
    """
    if replicas < 2:
        raise ValueError("replicas must be >= 2")
    counts = record_counts(record)
    if not np.any(counts > 0):
        raise ValueError("record has no counts")
    rng = np.random.default_rng(seed)
    draws = rng.poisson(counts, size=(replicas, 6))
    vecs = _project_rows(invert_counts(draws))
    t = state_to_bloch(target_state)
    fids = 0.5 * (1.0 + vecs @ t)
    return float(fids.mean()), float(fids.std(ddof=1))
