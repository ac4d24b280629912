"""End-to-end command-line checks, run in process through cli.run."""

import json
from pathlib import Path

import pytest

from mgw.cli import EXIT_ACCEPTANCE, EXIT_BUDGET, EXIT_OK, EXIT_VALIDATION, run
from mgw.trees import TypedForest

SPECS = Path(__file__).resolve().parent.parent / "specs"
ALT = str(SPECS / "alternating_geometric.json")
MONO = str(SPECS / "monotype_geometric.json")
TABLE = str(SPECS / "finite_table_critical.json")


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv("MGW_SEED", raising=False)


class TestSpec:
    def test_check_output(self, capsys):
        assert run(["spec", "check", "--spec", ALT]) == EXIT_OK
        out = capsys.readouterr().out
        assert "rho = 1" in out
        assert "a = (0.5, 0.5)" in out
        assert "classification = critical, irreducible" in out
        assert "B_n = 1 * n^0.5" in out

    def test_missing_file(self, capsys):
        assert run(["spec", "check", "--spec", "/nope.json"]) == EXIT_VALIDATION

    def test_invalid_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run(["spec", "check", "--spec", str(bad)]) == EXIT_VALIDATION


class TestSample:
    def test_tree_deterministic(self, capsys):
        assert run(["sample", "--spec", ALT, "--seed", "5"]) == EXIT_OK
        first = capsys.readouterr().out
        assert run(["sample", "--spec", ALT, "--seed", "5"]) == EXIT_OK
        assert capsys.readouterr().out == first
        t = TypedForest.from_text(first, d=2)
        assert t.kind == "tree"

    def test_env_seed(self, capsys, monkeypatch):
        assert run(["sample", "--spec", ALT, "--seed", "5"]) == EXIT_OK
        explicit = capsys.readouterr().out
        monkeypatch.setenv("MGW_SEED", "5")
        assert run(["sample", "--spec", ALT]) == EXIT_OK
        assert capsys.readouterr().out == explicit
        # explicit flag wins over the environment
        monkeypatch.setenv("MGW_SEED", "6")
        assert run(["sample", "--spec", ALT, "--seed", "5"]) == EXIT_OK
        assert capsys.readouterr().out == explicit

    def test_forest_to_file(self, tmp_path, capsys):
        out = tmp_path / "f.txt"
        code = run(
            ["sample", "--spec", ALT, "--n-min", "30", "--seed", "1", "--out", str(out)]
        )
        assert code == EXIT_OK
        f = TypedForest.from_text(out.read_text(), d=2)
        assert f.kind == "forest"
        assert len(f) >= 30

    def test_out_creates_parent_dirs(self, tmp_path):
        out = tmp_path / "a" / "b" / "t.txt"
        code = run(["sample", "--spec", ALT, "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        assert out.exists()

    def test_conditioned(self, capsys):
        code = run(
            ["sample", "--spec", ALT, "--condition-n", "5", "--condition-type", "1", "--seed", "2"]
        )
        assert code == EXIT_OK
        t = TypedForest.from_text(capsys.readouterr().out, d=2)
        assert t.type_count(1) == 5

    def test_truncation_exit(self, capsys):
        code = run(["sample", "--spec", ALT, "--max-vertices", "0", "--seed", "1"])
        assert code == EXIT_BUDGET
        assert "budget exhausted" in capsys.readouterr().err

    def test_exhausted_exit(self, capsys):
        code = run(
            ["sample", "--spec", TABLE, "--condition-n", "60", "--condition-type", "1",
             "--max-tries", "2", "--seed", "1"]
        )
        assert code == EXIT_BUDGET

    def test_unreachable_target_is_validation_error(self, capsys):
        code = run(
            ["sample", "--spec", ALT, "--condition-n", "0", "--condition-type", "1", "--seed", "1"]
        )
        assert code == EXIT_VALIDATION
        assert "unreachable" in capsys.readouterr().err


class TestProjectDumpLoad:
    FOREST = ":1\n1:2\n1.1:1\n2:2\n"

    def test_project_with_counters(self, tmp_path, capsys):
        src = tmp_path / "t.txt"
        src.write_text(self.FOREST)
        counters = tmp_path / "n.csv"
        nhat = tmp_path / "nhat.csv"
        code = run(
            ["project", "--in", str(src), "--type", "1",
             "--counters", str(counters), "--nhat", str(nhat)]
        )
        assert code == EXIT_OK
        reduced = TypedForest.from_text(capsys.readouterr().out, d=2)
        assert len(reduced) == 2

        rows = counters.read_text().strip().split("\n")
        assert rows[0] == "vertex_index,j,N_ij"
        deleted = sum(int(r.split(",")[2]) for r in rows[1:])
        nrows = nhat.read_text().strip().split("\n")
        assert nrows[0] == "component,j,Nhat_ij"
        unattributed = sum(int(r.split(",")[2]) for r in nrows[1:])
        assert len(reduced) + deleted + unattributed == 4

    def test_dump_canonicalizes(self, tmp_path, capsys):
        scrambled = tmp_path / "s.txt"
        scrambled.write_text("2:2\n1.1:1\n:1\n1:2\n")
        assert run(["dump", "--in", str(scrambled)]) == EXIT_OK
        assert capsys.readouterr().out == self.FOREST

    def test_load_summary(self, tmp_path, capsys):
        src = tmp_path / "t.txt"
        src.write_text(self.FOREST)
        assert run(["load", "--in", str(src)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "kind = tree" in out
        assert "vertices = 4" in out
        assert "type counts = (2, 2)" in out

    def test_structure_error(self, tmp_path, capsys):
        src = tmp_path / "t.txt"
        src.write_text(":1\n2:1\n")
        assert run(["load", "--in", str(src)]) == EXIT_VALIDATION


class TestOracle:
    def test_single_vertex(self, capsys):
        code = run(["oracle", "enumerate", "--spec", ALT, "--max-size", "1"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "tree,probability"
        assert lines[1] == ":1,0.5"

    def test_probabilities_sum_below_one(self, tmp_path):
        import csv

        out = tmp_path / "law.csv"
        code = run(
            ["oracle", "enumerate", "--spec", ALT, "--max-size", "5", "--out", str(out)]
        )
        assert code == EXIT_OK
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        total = sum(float(r["probability"]) for r in rows)
        assert 0.7 < total < 1.0
        # tree texts parse back to valid trees
        for r in rows:
            t = TypedForest.from_text(r["tree"] + "\n", d=2)
            assert t.kind == "tree"


class TestExperiment:
    def test_run_writes_everything(self, tmp_path, capsys):
        report = tmp_path / "nij.json"
        csv_path = tmp_path / "nij.csv"
        code = run(
            ["experiment", "nij_moments", "--spec", ALT, "--n", "800",
             "--seed", "1", "--out", str(report), "--csv", str(csv_path)]
        )
        assert code == EXIT_OK
        doc = json.loads(report.read_text())
        assert doc["name"] == "nij_moments"
        assert doc["parameters"]["sample_size"] == 800
        assert csv_path.read_text().startswith("label,estimate")
        assert (tmp_path / "nij_rows.png").exists()

    def test_no_figures(self, tmp_path):
        report = tmp_path / "r.json"
        code = run(
            ["experiment", "nij_moments", "--spec", ALT, "--n", "500",
             "--seed", "1", "--out", str(report), "--no-figures"]
        )
        assert code == EXIT_OK
        assert not list(tmp_path.glob("*.png"))

    def test_worker_invariance_bytes(self, tmp_path):
        docs = []
        for w in ("1", "2"):
            p = tmp_path / f"r{w}.json"
            code = run(
                ["experiment", "types_convergence", "--spec", ALT, "--n", "300",
                 "--replicas", "6", "--seed", "2", "--workers", w,
                 "--set", "p90_tolerance=1.0", "--out", str(p), "--no-figures"]
            )
            assert code == EXIT_OK
            doc = json.loads(p.read_text())
            doc["runtime_seconds"] = 0.0
            docs.append(json.dumps(doc, sort_keys=True))
        assert docs[0] == docs[1]

    def test_acceptance_failure_exit(self, tmp_path):
        code = run(
            ["experiment", "size_tail_exponent", "--spec", ALT, "--grid", "8,16",
             "--replicas", "4000", "--seed", "1",
             "--set", "slope_tolerance=1e-12", "--no-figures", "--out",
             str(tmp_path / "slope.json")]
        )
        assert code == EXIT_ACCEPTANCE

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "spec": ALT,
            "n": 400,
            "replicas": 500,
            "set": {"p90_tolerance": 1.0},
        }))
        code = run(
            ["experiment", "types_convergence", "--config", str(cfg),
             "--replicas", "5", "--seed", "1", "--no-figures"]
        )
        assert code == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert doc["parameters"]["replicas"] == 5
        assert doc["parameters"]["n"] == 400

    def test_strict_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"spec": ALT, "bogus": 1}))
        code = run(["experiment", "nij_moments", "--config", str(cfg)])
        assert code == EXIT_VALIDATION
        assert "unknown config keys" in capsys.readouterr().err

    def test_bad_override(self, capsys):
        code = run(
            ["experiment", "nij_moments", "--spec", ALT, "--set", "nope=1"]
        )
        assert code == EXIT_VALIDATION

    def test_unknown_experiment(self, capsys):
        assert run(["experiment", "frobnicate", "--spec", ALT]) == EXIT_VALIDATION

    def test_spec_required(self, capsys):
        assert run(["experiment", "nij_moments"]) == EXIT_VALIDATION


class TestUsage:
    def test_unknown_flag(self, capsys):
        assert run(["sample", "--spec", ALT, "--bogus"]) == EXIT_VALIDATION

    def test_help_exits_ok(self, capsys):
        assert run(["--help"]) == EXIT_OK

    def test_no_command(self, capsys):
        assert run([]) == EXIT_VALIDATION
