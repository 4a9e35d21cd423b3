import json
import subprocess
import sys

import numpy as np
import pytest

from qembed.cli import ExperimentConfig, load_config, main, stage_seed
from qembed.compile import AtomicPlatformSpec, PulseSequence, atomic_evolution
from qembed.core import state_to_bloch
from qembed.io import read_gram_csv, read_pgm, sha256_file


def run(tmp_path, *args):
    return main(["--out", str(tmp_path), *args])


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    assert main(["--out", str(out), "train"]) == 0
    return out


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.seed == 0 and cfg.shots.shots == 2000
        assert np.isclose(cfg.atomic.spec().rabi, 2 * np.pi * 38e3)

    def test_precedence(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"seed": 5, "out": "from_file", "train": {"iterations": 7}}))
        cfg = load_config(path)
        assert (cfg.seed, cfg.out, cfg.train.iterations) == (5, "from_file", 7)
        cfg = load_config(path, seed=9, out=tmp_path / "flag")
        assert cfg.seed == 9 and cfg.out == str(tmp_path / "flag") and cfg.train.iterations == 7

    @pytest.mark.parametrize(
        "doc, field",
        [
            ({"train": {"learning_rate": "fast"}}, "train.learning_rate"),
            ({"train": {"iterations": 0}}, "train"),
            ({"trian": {}}, "trian"),
            ({"atomic": {"rabi_hz": 1, "bogus": 2}}, "atomic.bogus"),
            ({"seed": -1}, "seed"),
            ({"shots": {"shots": 1.5}}, "shots.shots"),
        ],
    )
    def test_invalid_names_field(self, tmp_path, capsys, doc, field):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert main(["--config", str(path), "--out", str(tmp_path), "capacity", "--fidelity", "0.9"]) == 2
        assert f"'{field}'" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["--config", str(path), "capacity", "--fidelity", "0.5"]) == 2

    def test_stage_seeds(self):
        assert stage_seed(0, "train") == stage_seed(0, "train")
        assert stage_seed(0, "train") != stage_seed(0, "dataset")
        assert stage_seed(0, "train") != stage_seed(1, "train")

    def test_digest_changes_with_config(self):
        a, b = ExperimentConfig(), ExperimentConfig(seed=1)
        assert a.digest() != b.digest() and a.digest() == ExperimentConfig().digest()


class TestCommands:
    def test_train_outputs(self, trained_dir):
        for name in ("trace.json", "params.json", "cost_curve.csv", "manifest.json"):
            assert (trained_dir / name).exists()
        trace = json.loads((trained_dir / "trace.json").read_text())
        assert trace["cost_trace"][-1] < trace["cost_trace"][0]
        lines = (trained_dir / "cost_curve.csv").read_text().splitlines()
        assert lines[0] == "iteration,cost" and len(lines) == 202

    def test_train_byte_identical(self, tmp_path, trained_dir):
        assert run(tmp_path, "train") == 0
        assert (tmp_path / "params.json").read_bytes() == (trained_dir / "params.json").read_bytes()

    def test_flag_after_subcommand(self, tmp_path):
        assert main(["capacity", "--fidelity", "0.9", "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "capacity.json").read_text())["max_points"] == 20

    def test_capacity(self, tmp_path, capsys):
        assert run(tmp_path, "capacity", "--classes", "2") == 0
        d = json.loads((tmp_path / "capacity.json").read_text())
        assert abs(d["max_sector_angle"] - np.pi) < 1e-12
        assert run(tmp_path, "capacity", "--fidelity", "1.0") == 2
        assert "unbounded" in capsys.readouterr().err
        assert run(tmp_path, "capacity") == 2

    def test_dataset(self, tmp_path):
        assert run(tmp_path, "dataset") == 0
        assert (tmp_path / "dataset.csv").read_text().startswith("value,label\n")
        assert len((tmp_path / "validation.csv").read_text().splitlines()) == 11

    @pytest.mark.parametrize("mode", ["exact", "shots"])
    def test_gram_trained(self, tmp_path, trained_dir, mode):
        assert run(tmp_path, "gram", "--mode", mode, "--params", str(trained_dir / "params.json")) == 0
        g = read_gram_csv(tmp_path / "gram.csv")
        assert g.shape == (10, 10)
        assert read_pgm(tmp_path / "gram.pgm").shape == (10, 10)
        m = json.loads((tmp_path / "metrics.json").read_text())
        assert m["separation_gap"] > 0
        if mode == "exact":
            assert np.allclose(g, g.T)

    @pytest.mark.parametrize("mode", ["atomic", "photonic"])
    def test_gram_tables(self, tmp_path, mode):
        assert run(tmp_path, "gram", "--mode", mode) == 0
        m = json.loads((tmp_path / "metrics.json").read_text())
        assert m["split_matches_labels"] and m["separation_gap"] >= 0.3

    def test_gram_missing_params(self, tmp_path):
        assert run(tmp_path, "gram", "--source", "trained") == 2

    def test_compile_atomic_trained(self, tmp_path, trained_dir):
        assert run(tmp_path, "compile", "--backend", "atomic", "--params", str(trained_dir / "params.json")) == 0
        recs = json.loads((tmp_path / "compile_atomic.json").read_text())
        assert len(recs) == 10
        spec = AtomicPlatformSpec()
        for r in recs:
            assert r["sequence"]["infidelity"] <= 1e-6 and r["verification"] <= 1e-6
            # round trip: re-simulating the stored sequence reproduces the stored residual
            seq = PulseSequence.from_json(r["sequence"])
            b = np.array(r["target_bloch"])
            realized = state_to_bloch(atomic_evolution(seq, spec))
            assert abs(0.5 * (1 - realized @ b) - r["verification"]) < 1e-9
            assert set(r["quantized"]) >= {"tau1_us", "T_us", "tau2_us", "infidelity"}

    def test_compile_photonic_table(self, tmp_path):
        assert run(tmp_path, "compile", "--backend", "photonic") == 0
        recs = json.loads((tmp_path / "compile_photonic.json").read_text())
        assert len(recs) == 10
        assert all(r["verification"] < 1e-9 for r in recs)
        assert all("note" in r for r in recs if r["setting"]["method"].endswith("fallback"))

    @pytest.mark.parametrize("platform", ["atomic", "photonic"])
    def test_simulate(self, tmp_path, platform):
        assert run(tmp_path, "simulate", "--platform", platform) == 0
        recs = json.loads((tmp_path / f"tomography_{platform}.json").read_text())
        assert len(recs) == 10 and all(0 <= r["fidelity"] <= 1 for r in recs)

    def test_manifest_checksums(self, tmp_path):
        assert run(tmp_path, "dataset") == 0
        assert run(tmp_path, "capacity", "--fidelity", "0.9") == 0
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert set(man["files"]) == {"dataset.csv", "validation.csv", "capacity.json"}
        for name, digest in man["files"].items():
            assert sha256_file(tmp_path / name) == digest
        assert {"config_hash", "versions", "commands"} <= set(man)
        assert "total" in man["commands"]["dataset"]["timings"]

    def test_io_error_exit_code(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["--out", str(blocker / "sub"), "capacity", "--fidelity", "0.5"]) == 1


def test_console_entry_point(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "qembed.cli", "--out", str(tmp_path), "capacity", "--fidelity", "0.9"],
        capture_output=True,
        text=True,
    )
    assert out.returncode == 0 and '"max_points": 20' in out.stdout
