import json
import subprocess
import sys

import numpy as np
import pytest

from tetot.cli import run
from tetot.data_model import TetotConfig
from tetot.evaluation import Candidate, correlate_with_accuracy, rank_candidates
from tetot.formats import load_classifier_head, load_embedding_set
from tetot.metric import compute_tetot


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fix")
    code = run([
        "gen-fixtures", "--out-dir", str(out), "--dim", "6",
        "--num-classes", "3", "--shifts", "0.0,1.0,2.0",
        "--n-per-domain", "80", "--seed", "5",
    ])
    assert code == 0
    return out


def run_json(capsys, argv):
    code = run(argv)
    doc = json.loads(capsys.readouterr().out)
    return code, doc


class TestGenFixtures:
    def test_files_exist_and_load(self, fixture_dir):
        src = load_embedding_set(fixture_dir / "source.emb")
        head = load_classifier_head(fixture_dir / "head.hed")
        assert src.n_samples == 80 and src.dim == 6
        assert head.num_classes == 3
        manifest = json.loads((fixture_dir / "manifest.json").read_text())
        assert [row["candidate_id"] for row in manifest] == [
            "shift_00", "shift_01", "shift_02",
        ]
        assert all("accuracy" in row for row in manifest)

    def test_deterministic_across_runs(self, fixture_dir, tmp_path):
        again = tmp_path / "again"
        assert run([
            "gen-fixtures", "--out-dir", str(again), "--dim", "6",
            "--num-classes", "3", "--shifts", "0.0,1.0,2.0",
            "--n-per-domain", "80", "--seed", "5",
        ]) == 0
        a = (fixture_dir / "source.emb").read_bytes()
        b = (again / "source.emb").read_bytes()
        assert a == b


class TestCompute:
    def test_self_distance_zero_at_lambda_zero(self, fixture_dir, capsys):
        code, doc = run_json(capsys, [
            "compute", "--source", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "source.emb"), "--lambda", "0",
        ])
        assert code == 0
        assert doc["command"] == "compute"
        assert doc["reports"][0]["value"] <= 1e-9

    def test_matches_library_call(self, fixture_dir, capsys):
        code, doc = run_json(capsys, [
            "compute", "--source", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "target_02.emb"),
            "--head", str(fixture_dir / "head.hed"),
        ])
        assert code == 0
        src = load_embedding_set(fixture_dir / "source.emb")
        tgt = load_embedding_set(fixture_dir / "target_02.emb")
        head = load_classifier_head(fixture_dir / "head.hed")
        rep = compute_tetot(src, tgt, head=head, config=TetotConfig())
        assert doc["reports"][0]["value"] == rep.value

    def test_output_idempotent_modulo_timestamp(self, fixture_dir, capsys):
        argv = [
            "compute", "--source", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "target_01.emb"), "--lambda", "0",
        ]
        _, doc_a = run_json(capsys, argv)
        _, doc_b = run_json(capsys, argv)
        doc_a.pop("timestamp")
        doc_b.pop("timestamp")
        assert json.dumps(doc_a, sort_keys=True) == json.dumps(doc_b, sort_keys=True)

    def test_out_flag_writes_file(self, fixture_dir, tmp_path):
        out = tmp_path / "report.json"
        code = run([
            "compute", "--source", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "target_00.emb"), "--lambda", "0",
            "--out", str(out),
        ])
        assert code == 0
        assert json.loads(out.read_text())["command"] == "compute"


class TestApprox:
    def test_emb_and_sta_sources_agree(self, fixture_dir, tmp_path, capsys):
        stats_path = tmp_path / "src.sta"
        assert run([
            "stats", "--source", str(fixture_dir / "source.emb"),
            "--stats-out", str(stats_path),
        ]) == 0
        capsys.readouterr()
        _, via_emb = run_json(capsys, [
            "approx", "--source-emb", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "target_01.emb"),
        ])
        _, via_sta = run_json(capsys, [
            "approx", "--source-stats", str(stats_path),
            "--target", str(fixture_dir / "target_01.emb"),
        ])
        assert via_emb["reports"][0]["value"] == via_sta["reports"][0]["value"]

    def test_source_flags_mutually_exclusive(self, fixture_dir):
        code = run([
            "approx", "--source-emb", str(fixture_dir / "source.emb"),
            "--source-stats", str(fixture_dir / "source.emb"),
            "--target", str(fixture_dir / "target_00.emb"),
        ])
        assert code == 1


class TestEntropyAndAccuracy:
    def test_entropy_value(self, fixture_dir, capsys):
        from tetot.baselines import prediction_entropy

        code, doc = run_json(capsys, [
            "entropy", "--target", str(fixture_dir / "target_00.emb"),
            "--head", str(fixture_dir / "head.hed"),
        ])
        assert code == 0
        tgt = load_embedding_set(fixture_dir / "target_00.emb")
        head = load_classifier_head(fixture_dir / "head.hed")
        assert doc["reports"][0]["value"] == prediction_entropy(head, tgt).value

    def test_accuracy_matches_manifest(self, fixture_dir, capsys):
        manifest = json.loads((fixture_dir / "manifest.json").read_text())
        for row in manifest:
            code, doc = run_json(capsys, [
                "accuracy", "--target", str(fixture_dir / row["target"]),
                "--head", str(fixture_dir / row["head"]),
            ])
            assert code == 0
            assert doc["reports"][0]["value"] == row["accuracy"]


class TestRankAndCorrelate:
    def test_rank_matches_library(self, fixture_dir, capsys):
        code, doc = run_json(capsys, [
            "rank", "--manifest", str(fixture_dir / "manifest.json"),
            "--lambda", "0",
        ])
        assert code == 0
        src = load_embedding_set(fixture_dir / "source.emb")
        head = load_classifier_head(fixture_dir / "head.hed")
        cfg = TetotConfig(label_weight=0.0)
        batch = []
        manifest = json.loads((fixture_dir / "manifest.json").read_text())
        for row in manifest:
            tgt = load_embedding_set(fixture_dir / row["target"])
            rep = compute_tetot(src, tgt, head=head, config=cfg)
            batch.append(Candidate(row["candidate_id"], rep, row["accuracy"]))
        assert doc["ranking"] == rank_candidates(batch)

    def test_correlate_matches_library(self, fixture_dir, capsys):
        code, doc = run_json(capsys, [
            "correlate", "--manifest", str(fixture_dir / "manifest.json"),
            "--lambda", "0",
        ])
        assert code == 0
        src = load_embedding_set(fixture_dir / "source.emb")
        head = load_classifier_head(fixture_dir / "head.hed")
        cfg = TetotConfig(label_weight=0.0)
        batch = []
        for row in json.loads((fixture_dir / "manifest.json").read_text()):
            tgt = load_embedding_set(fixture_dir / row["target"])
            rep = compute_tetot(src, tgt, head=head, config=cfg)
            batch.append(Candidate(row["candidate_id"], rep, row["accuracy"]))
        expected = correlate_with_accuracy(batch, "tetot")
        assert doc["correlation"]["rho"] == expected.rho

    def test_entropy_metric_flag(self, fixture_dir, capsys):
        code, doc = run_json(capsys, [
            "rank", "--manifest", str(fixture_dir / "manifest.json"),
            "--metric", "entropy",
        ])
        assert code == 0
        assert len(doc["ranking"]) == 3


class TestExitCodes:
    def test_missing_file_is_input_error(self, tmp_path):
        assert run(["compute", "--source", str(tmp_path / "no.emb"),
                    "--target", str(tmp_path / "no.emb"), "--lambda", "0"]) == 1

    def test_bad_magic_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.emb"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 40)
        assert run(["compute", "--source", str(bad), "--target", str(bad),
                    "--lambda", "0"]) == 2

    def test_usage_error(self):
        assert run(["compute"]) == 1
        assert run(["no-such-command"]) == 1

    def test_unlabeled_source_with_label_weight(self, fixture_dir, tmp_path):
        from tetot.data_model import EmbeddingSet
        from tetot.formats import save_embedding_set

        unlabeled = tmp_path / "u.emb"
        save_embedding_set(
            EmbeddingSet(features=np.ones((4, 6)), labels=None), unlabeled
        )
        code = run([
            "compute", "--source", str(unlabeled),
            "--target", str(fixture_dir / "target_00.emb"),
            "--head", str(fixture_dir / "head.hed"), "--lambda", "1",
        ])
        assert code == 1

    def test_help_and_version_exit_zero(self, capsys):
        assert run(["--help"]) == 0
        assert run(["--version"]) == 0
        capsys.readouterr()


class TestSubprocessEntry:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "tetot", "--version"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert "0.1.0" in proc.stdout
