"""Command-line driver: ``qembed [--config PATH] [--seed N] [--out DIR] <command> ...``.

Precedence: built-in defaults < config file < command-line flags.

Exit codes: 0 success, 2 invalid input/config, 1 runtime failure.

Seeds: every stage draws from ``stage_seed(master, name)``, which hashes the
stage name into a ``numpy.random.SeedSequence`` together with the master seed.
"""

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .analysis import capacity_report, cluster_metrics, same_partition, spectral_split
from .compile import (
    AtomicPlatformSpec,
    PulseSequence,
    atomic_evolution,
    compile_atomic,
    compile_photonic,
    quantize_sequence,
    setting_unitary,
    verify_compilation,
)
from .core import KET0, axis_rotation, bloch_fidelity, state_to_bloch, unitary_to_axis_angle
from .embedding import (
    BandLayout,
    EmbeddingParams,
    embedding_unitary,
    feature_states,
    generate_dataset,
    generate_validation_set,
    gram_matrix,
    read_dataset_csv,
    write_dataset_csv,
)
from .hwsim import (
    AtomicNoiseModel,
    PhotonicNoiseModel,
    ShotModel,
    gram_from_bloch,
    gram_from_shots,
    ideal_photonic_state,
    mc_fidelity_uncertainty,
    simulate_atomic_tomography,
    simulate_photonic_tomography,
)
from .io import dump_json, load_json, sha256_file, write_gram_csv, write_pgm
from .tables import TABLE_LABELS, atomic_sequences, photonic_axes
from .training import TrainConfig, evaluate, train

TWO_PI = 2.0 * np.pi


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class DatasetSection:
    n_bands: int = 4
    edges: list | None = None
    n_points: int = 1000
    n_validation_per_class: int = 5

    def layout(self):
        return BandLayout(tuple(self.edges)) if self.edges else BandLayout.equal(self.n_bands)


@dataclass
class TrainSection:
    learning_rate: float = 0.1
    iterations: int = 200
    batch_size: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    eval_size: int = 200
    fd_step: float = 1e-5


@dataclass
class AtomicSection:
    rabi_hz: float = 38e3
    detuning_hz: float = 6.57e3
    max_duration_us: float = 100.0
    time_resolution_us: float = 1.0

    def spec(self):
        return AtomicPlatformSpec(
            TWO_PI * self.rabi_hz, TWO_PI * self.detuning_hz, self.max_duration_us * 1e-6, self.time_resolution_us * 1e-6
        )


@dataclass
class AtomicNoiseSection:
    rel_rabi_drift: float = 0.01
    rabi_jitter_hz: float = 1.5e3
    detuning_jitter_hz: float = 71.0
    repetitions: int = 5

    def model(self):
        return AtomicNoiseModel(
            self.rel_rabi_drift, TWO_PI * self.rabi_jitter_hz, TWO_PI * self.detuning_jitter_hz, self.repetitions
        )


@dataclass
class PhotonicNoiseSection:
    encoding_plate_error_deg: float = 1.0
    tomo_plate_error_deg: float = 0.25
    retardance_error_deg: float = 2.0
    total_counts: int = 20000
    bootstrap_replicas: int = 300

    def model(self):
        return PhotonicNoiseModel(
            float(np.radians(self.encoding_plate_error_deg)),
            float(np.radians(self.tomo_plate_error_deg)),
            float(np.radians(self.retardance_error_deg)),
            self.total_counts,
        )


@dataclass
class ShotSection:
    shots: int = 2000


_SECTIONS = {
    "dataset": DatasetSection,
    "train": TrainSection,
    "atomic": AtomicSection,
    "atomic_noise": AtomicNoiseSection,
    "photonic_noise": PhotonicNoiseSection,
    "shots": ShotSection,
}


@dataclass
class ExperimentConfig:
    seed: int = 0
    out: str = "runs/default"
    dataset: DatasetSection = field(default_factory=DatasetSection)
    train: TrainSection = field(default_factory=TrainSection)
    atomic: AtomicSection = field(default_factory=AtomicSection)
    atomic_noise: AtomicNoiseSection = field(default_factory=AtomicNoiseSection)
    photonic_noise: PhotonicNoiseSection = field(default_factory=PhotonicNoiseSection)
    shots: ShotSection = field(default_factory=ShotSection)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config root must be an object")
        cfg = cls()
        for key, value in d.items():
            if key in ("seed", "out"):
                if key == "out" and not isinstance(value, str):
                    raise ConfigError(f"config field 'out' must be a string, got {value!r}")
                setattr(cfg, key, value)
            elif key in _SECTIONS:
                section_cls = _SECTIONS[key]
                if not isinstance(value, dict):
                    raise ConfigError(f"config field '{key}' must be an object")
                defaults = section_cls()
                known = {f.name for f in fields(section_cls)}
                for sub, v in value.items():
                    if sub not in known:
                        raise ConfigError(f"unknown config field '{key}.{sub}'")
                    _check_type(f"{key}.{sub}", v, getattr(defaults, sub))
                setattr(cfg, key, section_cls(**value))
            else:
                raise ConfigError(f"unknown config field '{key}'")
        cfg.validate()
        return cfg

    def to_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def train_config(self):
        return TrainConfig(seed=stage_seed(self.seed, "train"), **asdict(self.train))

    def validate(self):
        """Build every derived object once so bad values surface as ConfigError naming the field."""
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"config field 'seed' must be a non-negative integer, got {self.seed!r}")
        checks = {
            "dataset": lambda: (
                self.dataset.layout(),
                _require(self.dataset.n_points >= 2, "dataset.n_points", ">= 2"),
                _require(self.dataset.n_validation_per_class >= 1, "dataset.n_validation_per_class", ">= 1"),
            ),
            "train": lambda: TrainConfig(seed=0, **asdict(self.train)),
            "atomic": self.atomic.spec,
            "atomic_noise": self.atomic_noise.model,
            "photonic_noise": lambda: (
                self.photonic_noise.model(),
                _require(self.photonic_noise.bootstrap_replicas >= 2, "photonic_noise.bootstrap_replicas", ">= 2"),
            ),
            "shots": lambda: ShotModel(self.shots.shots),
        }
        for name, check in checks.items():
            try:
                check()
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"config field '{name}': {exc}") from exc


def _check_type(name, value, default):
    if isinstance(value, bool) or (value is None and default is not None):
        raise ConfigError(f"config field '{name}' has invalid value {value!r}")
    if isinstance(default, int) and not isinstance(value, int):
        raise ConfigError(f"config field '{name}' must be an integer, got {value!r}")
    if isinstance(default, float) and not isinstance(value, (int, float)):
        raise ConfigError(f"config field '{name}' must be a number, got {value!r}")
    if default is None and value is not None and not isinstance(value, list):
        raise ConfigError(f"config field '{name}' must be a list, got {value!r}")


def _require(ok, name, what):
    if not ok:
        raise ConfigError(f"config field '{name}' must be {what}")


def stage_seed(master, stage):
    """Per-stage seed: ``SeedSequence([master, crc32(stage)])``, first 32-bit word."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(stage.encode())])
    return int(ss.generate_state(1)[0])


def load_config(path=None, seed=None, out=None):
    d = {}
    if path is not None:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    cfg = ExperimentConfig.from_dict(d)
    if seed is not None:
        cfg.seed = seed
    if out is not None:
        cfg.out = str(out)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


class Run:
    """Output directory bookkeeping: written files, timings and the manifest."""

    def __init__(self, cfg, command):
        self.cfg = cfg
        self.command = command
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.timings = {}
        self._t0 = time.perf_counter()

    def path(self, name):
        p = self.out / name
        self.files.append(name)
        return p

    def stage(self, name, t0):
        self.timings[name] = round(time.perf_counter() - t0, 6)

    def finish(self):
        self.timings["total"] = round(time.perf_counter() - self._t0, 6)
        mpath = self.out / "manifest.json"
        manifest = load_json(mpath) if mpath.exists() else {"files": {}, "commands": {}}
        for name in self.files:
            manifest["files"][name] = sha256_file(self.out / name)
        manifest["files"] = {k: v for k, v in manifest["files"].items() if (self.out / k).exists()}
        manifest["commands"][self.command] = {"config_hash": self.cfg.digest(), "timings": self.timings}
        manifest["config_hash"] = self.cfg.digest()
        manifest["versions"] = {
            "qembed": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "kernel_backend": _kernels.backend(),
        }
        dump_json(manifest, mpath)
        return manifest


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def experiment_datasets(cfg):
    """Training and validation sets exactly as the ``train`` command builds them."""
    layout = cfg.dataset.layout()
    ds = generate_dataset(layout, cfg.dataset.n_points, stage_seed(cfg.seed, "dataset"))
    val = generate_validation_set(layout, cfg.dataset.n_validation_per_class, stage_seed(cfg.seed, "validation"))
    return ds, val


def _load_params(path):
    if path is None:
        raise ConfigError("this command needs --params (run 'qembed train' first)")
    d = load_json(path)
    try:
        return EmbeddingParams(float(d["theta1"]), float(d["theta2"]), float(d["theta3"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: expected keys theta1, theta2, theta3") from exc


def _params_json(params):
    return {"theta1": params.theta1, "theta2": params.theta2, "theta3": params.theta3}


def _metrics_json(gram, labels):
    m = cluster_metrics(gram, labels).to_json()
    split = spectral_split(gram)
    m["spectral_split"] = [int(v) for v in split]
    m["split_matches_labels"] = same_partition(split, np.asarray(labels) == labels[0])
    return m


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_dataset(cfg, args):
    run = Run(cfg, "dataset")
    t0 = time.perf_counter()
    ds, val = experiment_datasets(cfg)
    write_dataset_csv(ds, run.path("dataset.csv"))
    write_dataset_csv(val, run.path("validation.csv"))
    run.stage("generate", t0)
    run.finish()
    print(f"wrote {len(ds)} training and {len(val)} validation points to {run.out}")


def cmd_train(cfg, args):
    run = Run(cfg, "train")
    t0 = time.perf_counter()
    ds, val = experiment_datasets(cfg)
    if args.dataset:
        ds = read_dataset_csv(args.dataset)
    run.stage("data", t0)
    t0 = time.perf_counter()
    trace = train(ds, cfg.train_config())
    run.stage("train", t0)
    params = trace.final_params
    dump_json(trace.to_json(), run.path("trace.json"))
    dump_json(_params_json(params), run.path("params.json"))
    with open(run.path("cost_curve.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "cost"])
        for k, c in enumerate(trace.cost_trace):
            w.writerow([k, repr(float(c))])
    write_dataset_csv(val, run.path("validation.csv"))
    acc = evaluate(val, params, ds)
    dump_json(
        {
            "initial_cost": trace.cost_trace[0],
            "final_cost": trace.cost_trace[-1],
            "validation_accuracy": acc,
            "canonical_params": _params_json(params.canonical()),
        },
        run.path("train_summary.json"),
    )
    run.finish()
    print(
        f"cost {trace.cost_trace[0]:.4f} -> {trace.cost_trace[-1]:.4f}; "
        f"validation accuracy {acc:.3f}; params in {run.out / 'params.json'}"
    )


def _trained_targets(cfg, args):
    params = _load_params(args.params)
    _, val = experiment_datasets(cfg)
    return params, val


def _table_states(platform_name, cfg, noisy, seed):
    spec = cfg.atomic.spec()
    if platform_name == "atomic":
        seqs = atomic_sequences()
        if not noisy:
            return np.array([atomic_evolution(s, spec) for s in seqs]), None
        noise = cfg.atomic_noise.model()
        recs = [simulate_atomic_tomography(s, spec, noise, seed=[seed, k]) for k, s in enumerate(seqs)]
        return None, np.array([r.bloch for r in recs])
    axes = photonic_axes()
    if not noisy:
        return np.array([ideal_photonic_state(a) for a in axes]), None
    noise = cfg.photonic_noise.model()
    recs = [simulate_photonic_tomography(a, noise, seed=[seed, k]) for k, a in enumerate(axes)]
    return None, np.array([r.bloch for r in recs])


def cmd_gram(cfg, args):
    run = Run(cfg, f"gram-{args.mode}")
    t0 = time.perf_counter()
    mode = args.mode
    if mode in ("exact", "shots"):
        if args.source == "table":
            states, _ = _table_states("atomic", cfg, False, 0)
            labels = list(TABLE_LABELS)
        else:
            params, val = _trained_targets(cfg, args)
            states = feature_states(val.values, params)
            labels = list(val.labels)
        if mode == "exact":
            gram = gram_matrix(states)
        else:
            gram = gram_from_shots(states, ShotModel(cfg.shots.shots, stage_seed(cfg.seed, "shots")))
    else:
        if args.source == "trained":
            raise ConfigError("atomic/photonic Gram modes replay the built-in hardware tables; use --source table")
        seed = stage_seed(cfg.seed, mode)
        states, blochs = _table_states(mode, cfg, args.noisy, seed)
        gram = gram_matrix(states) if blochs is None else gram_from_bloch(blochs)
        labels = list(TABLE_LABELS)
    run.stage("gram", t0)
    write_gram_csv(gram, run.path("gram.csv"))
    write_pgm(gram, run.path("gram.pgm"))
    metrics = _metrics_json(gram, labels)
    metrics.update({"mode": mode, "source": args.source, "noisy": bool(args.noisy), "labels": labels})
    dump_json(metrics, run.path("metrics.json"))
    run.finish()
    print(
        f"{mode} Gram: intra {metrics['intra_mean']:.3f}, inter {metrics['inter_mean']:.3f}, "
        f"gap {metrics['separation_gap']:.3f}"
    )


def cmd_compile(cfg, args):
    run = Run(cfg, f"compile-{args.backend}")
    t0 = time.perf_counter()
    spec = cfg.atomic.spec()
    records = []
    if args.source == "trained":
        params, val = _trained_targets(cfg, args)
        unitaries = [embedding_unitary(x, params) for x in val.values]
    elif args.backend == "photonic":
        unitaries = [axis_rotation(a) for a in photonic_axes()]
    else:
        unitaries = [None] * len(atomic_sequences())
    if args.backend == "atomic":
        table = atomic_sequences()
        for k, u in enumerate(unitaries):
            target = u @ KET0 if u is not None else atomic_evolution(table[k], spec)
            seq = compile_atomic(target, spec, seed=k)
            q = quantize_sequence(seq, spec, target)
            realized = atomic_evolution(seq, spec)
            records.append(
                {
                    "index": k + 1,
                    "target_bloch": state_to_bloch(target).tolist(),
                    "sequence": seq.to_json(),
                    "quantized": q.to_json(),
                    "verification": verify_compilation(target, realized),
                }
            )
    else:
        for k, u in enumerate(unitaries):
            aa, phase = unitary_to_axis_angle(u)
            ws = compile_photonic(aa, seed=k)
            rec = {
                "index": k + 1,
                "target": {"angle": aa.angle, "axis": list(aa.axis), "global_phase": phase},
                "setting": ws.to_json(),
                "verification": verify_compilation(axis_rotation(aa) @ KET0, setting_unitary(ws) @ KET0),
            }
            if ws.method.endswith("fallback"):
                rec["note"] = (
                    "closed-form angles unavailable (n_x = 0)"
                    if aa.nx == 0
                    else "closed-form angles miss the target; numeric synthesis used"
                )
            records.append(rec)
    run.stage("compile", t0)
    dump_json(records, run.path(f"compile_{args.backend}.json"))
    run.finish()
    worst = max(r["verification"] for r in records)
    print(f"compiled {len(records)} targets for the {args.backend} backend; worst verification {worst:.3e}")


def cmd_simulate(cfg, args):
    run = Run(cfg, f"simulate-{args.platform}")
    t0 = time.perf_counter()
    seed = stage_seed(cfg.seed, args.platform)
    out = []
    if args.platform == "atomic":
        spec, noise = cfg.atomic.spec(), cfg.atomic_noise.model()
        for k, seq in enumerate(atomic_sequences()):
            rec = simulate_atomic_tomography(seq, spec, noise, seed=[seed, k])
            ideal = atomic_evolution(seq, spec)
            d = rec.to_json()
            d["fidelity"] = bloch_fidelity(rec.bloch, ideal)
            out.append(d)
    else:
        noise = cfg.photonic_noise.model()
        for k, aa in enumerate(photonic_axes()):
            rec = simulate_photonic_tomography(aa, noise, seed=[seed, k])
            ideal = ideal_photonic_state(aa)
            mean, std = mc_fidelity_uncertainty(rec, ideal, cfg.photonic_noise.bootstrap_replicas, seed=[seed, k, 1])
            d = rec.to_json()
            d.update({"fidelity": bloch_fidelity(rec.bloch, ideal), "bootstrap_mean": mean, "bootstrap_std": std})
            out.append(d)
    run.stage("simulate", t0)
    dump_json(out, run.path(f"tomography_{args.platform}.json"))
    run.finish()
    fids = [d["fidelity"] for d in out]
    print(f"{args.platform} tomography: mean fidelity {np.mean(fids):.4f} (min {np.min(fids):.4f})")


def cmd_capacity(cfg, args):
    if args.fidelity is None and args.classes is None:
        raise ConfigError("capacity needs --fidelity and/or --classes")
    report = capacity_report(args.fidelity, args.classes)
    run = Run(cfg, "capacity")
    dump_json(report.to_json(), run.path("capacity.json"))
    run.finish()
    print(json.dumps(report.to_json(), sort_keys=True))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _global_flags(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", type=Path, default=default, help="JSON config file")
    p.add_argument("--seed", type=int, default=default, help="master seed (overrides config)")
    p.add_argument("--out", type=Path, default=default, help="output directory (overrides config)")


def build_parser():
    parser = argparse.ArgumentParser(prog="qembed", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    add("dataset", cmd_dataset, "generate the training and validation sets")
    p = add("train", cmd_train, "train the embedding angles")
    p.add_argument("--dataset", type=Path, help="training CSV (value,label); default: generate from config")

    p = add("gram", cmd_gram, "Gram matrix, heatmap and cluster metrics")
    p.add_argument("--mode", choices=("exact", "shots", "atomic", "photonic"), default="exact")
    p.add_argument("--source", choices=("trained", "table"), default=None)
    p.add_argument("--params", type=Path, help="params.json from 'qembed train'")
    p.add_argument("--noisy", action="store_true", help="atomic/photonic: use simulated tomography")

    p = add("compile", cmd_compile, "compile targets to pulse timings or waveplate angles")
    p.add_argument("--backend", choices=("atomic", "photonic"), required=True)
    p.add_argument("--source", choices=("trained", "table"), default=None)
    p.add_argument("--params", type=Path)

    p = add("simulate", cmd_simulate, "noisy tomography of the tabulated states")
    p.add_argument("--platform", choices=("atomic", "photonic"), required=True)

    p = add("capacity", cmd_capacity, "capacity bounds")
    p.add_argument("--fidelity", type=float)
    p.add_argument("--classes", type=int)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "source", "unset") is None:
        args.source = "trained" if getattr(args, "params", None) else "table"
    try:
        cfg = load_config(args.config, args.seed, args.out)
        args.func(cfg, args)
    except ConfigError as exc:
        print(f"qembed: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"qembed: invalid input: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qembed: I/O error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"qembed: runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
