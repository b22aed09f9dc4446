"""
End-to-end tests for the dtrecon command line.

Run with: pytest tests/e2e/test_cli.py -v

Every test drives main() exactly as the console script does and checks the
CSV report, the tree artifacts and the exit code.
"""

import csv
import io

import pytest
from pathlib import Path

from dtrecon.cli.main import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_OK,
    EXIT_SCALE,
    MAIN_HEADER,
    SCORES_HEADER,
    main,
)
from dtrecon.core.trees import read_tree, tree_size

ROOT = Path(__file__).parent.parent.parent

SMALL = [
    "--const", "c_d=0.0005", "--const", "c_p=10", "--const", "c_tau=400",
    "--const", "c_q=0.2", "--const", "c_leaf=0.05",
]


def read_rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@pytest.mark.e2e
class TestScores:
    """`dtrecon scores`"""

    def test_dictator_scores_on_stdout(self, capsys):
        code = main(["scores", "--n", "8", "--fn", "dictator", "--p", "0.5", "--seed", "3"])
        assert code == EXIT_OK
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == SCORES_HEADER
        body = rows[1:]
        assert len(body) == 8
        first = body[0]
        assert first[1] == "1"
        assert abs(float(first[2]) - 0.25) <= 0.1
        assert float(first[3]) == pytest.approx(0.25)
        assert all(float(row[3]) == pytest.approx(0.0, abs=1e-12) for row in body[1:])


@pytest.mark.e2e
class TestPipelines:
    """reconstruct / test / learn / verify / calibrate"""

    def test_reconstruct_writes_tree(self, tmp_path):
        out = tmp_path / "recon.csv"
        code = main(["reconstruct", "--n", "8", "--s", "4", "--out", str(out), *SMALL])
        assert code == EXIT_OK
        rows = read_rows(out)
        assert list(rows[0]) == MAIN_HEADER
        assert int(rows[0]["queries_total"]) > 0
        assert (tmp_path / "recon.csv.trial0.tree").exists()

    def test_realizable_instance_accepted(self, tmp_path):
        out = tmp_path / "test.csv"
        code = main(["test", "--n", "8", "--s", "4", "--out", str(out), *SMALL])
        assert code == EXIT_OK
        assert read_rows(out)[0]["verdict"] == "accept"

    def test_learn(self, tmp_path):
        out = tmp_path / "learn.csv"
        code = main(["learn", "--n", "6", "--s", "3", "--eps", "0.2", "--out", str(out)])
        assert code == EXIT_OK
        row = read_rows(out)[0]
        assert float(row["distance"]) <= 0.2
        assert row["verdict"] == "calls=0"
        tree = read_tree(tmp_path / "learn.csv.trial0.tree")
        assert tree_size(tree) <= 3

    def test_verify_passes(self, tmp_path):
        out = tmp_path / "verify.csv"
        code = main(["verify", "--n", "8", "--s", "4", "--rho", "0.05", "--trials", "3", "--out", str(out)])
        assert code == EXIT_OK
        assert [row["verdict"] for row in read_rows(out)] == ["pass"] * 3

    def test_calibrate_rows(self, tmp_path):
        out = tmp_path / "cal.csv"
        code = main(["calibrate", "--n", "8", "--s", "4", "--trials", "2", "--out", str(out), *SMALL])
        assert code == EXIT_OK
        verdicts = [row["verdict"] for row in read_rows(out)]
        assert len(verdicts) == 4
        assert verdicts[0].startswith("realizable:")
        assert verdicts[1] == "parity:reject"

    def test_same_seed_same_bytes(self, tmp_path):
        args = ["reconstruct", "--n", "8", "--s", "4", "--rho", "0.02", "--trials", "2", "--seed", "5", *SMALL]
        assert main([*args, "--out", str(tmp_path / "a.csv")]) == EXIT_OK
        assert main([*args, "--out", str(tmp_path / "b.csv")]) == EXIT_OK
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_seed_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DTRECON_SEED", "5")
        out = tmp_path / "env.csv"
        assert main(["verify", "--n", "6", "--s", "3", "--out", str(out)]) == EXIT_OK
        rows = read_rows(out)
        assert main(["verify", "--n", "6", "--s", "3", "--seed", "5", "--out", str(out)]) == EXIT_OK
        assert read_rows(out) == rows


@pytest.mark.e2e
class TestExitCodes:
    """Error families map to exit codes."""

    def test_unknown_constant(self, capsys):
        assert main(["test", "--const", "bogus=1"]) == EXIT_INVALID
        assert "bogus" in capsys.readouterr().err

    def test_eps_out_of_range(self):
        assert main(["learn", "--eps", "1.5"]) == EXIT_INVALID

    def test_unknown_flag(self):
        assert main(["learn", "--frobnicate"]) == EXIT_INVALID

    def test_unknown_function(self):
        assert main(["scores", "--fn", "tribes", "--n", "4"]) == EXIT_INVALID

    def test_verify_beyond_exact_scale(self):
        assert main(["verify", "--n", "30", "--s", "4"]) == EXIT_SCALE

    @pytest.mark.parametrize("command", ["reconstruct", "test", "calibrate"])
    def test_default_ledger_refused_above_query_ceiling(self, command, tmp_path, capsys):
        out = tmp_path / "refused.csv"
        assert main([command, "--n", "16", "--s", "8", "--eps", "0.1", "--out", str(out)]) == EXIT_SCALE
        assert "--const" in capsys.readouterr().err
        assert out.read_text(encoding="utf-8") == ""

    def test_ceiling_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DTRECON_MAX_QUERIES_PER_ANSWER", "100")
        out = tmp_path / "small.csv"
        assert main(["reconstruct", "--n", "8", "--s", "4", "--out", str(out), *SMALL]) == EXIT_SCALE

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["verify", "--n", "4", "--s", "2", "--out", str(blocker / "out.csv")]) == EXIT_IO
