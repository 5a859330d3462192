import csv
import os

import numpy as np
import pytest

from andeig import read_matrix_market
from andeig.cli import BENCH_COLUMNS, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenerate:
    def test_counts_and_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "a.mtx"
        code, text, _ = run(capsys, "generate", "--m", "4", "--w", "16.5",
                            "--seed", "1", "--out", str(out))
        assert code == 0
        assert "n 64" in text
        assert "nnz 256" in text  # 64 diagonals + 3*64 periodic edges
        assert "seed 1" in text
        a = read_matrix_market(out)
        assert a.n == 64 and a.nnz_lower == 256

    def test_invalid_m_rejected(self, tmp_path, capsys):
        code, _, err = run(capsys, "generate", "--m", "2", "--out",
                           str(tmp_path / "x.mtx"))
        assert code == 1
        assert "m >= 3" in err

    def test_same_seed_identical_files(self, tmp_path, capsys):
        f1, f2 = tmp_path / "a1.mtx", tmp_path / "a2.mtx"
        assert run(capsys, "generate", "--m", "4", "--seed", "9", "--out", str(f1))[0] == 0
        assert run(capsys, "generate", "--m", "4", "--seed", "9", "--out", str(f2))[0] == 0
        assert f1.read_bytes() == f2.read_bytes()

    def test_output_dir_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("ANDEIG_OUTPUT_DIR", str(tmp_path / "outputs"))
        code, text, _ = run(capsys, "generate", "--m", "3", "--w", "0", "--out", "m3.mtx")
        assert code == 0
        assert (tmp_path / "outputs" / "m3.mtx").exists()


class TestSolve:
    def test_solve_with_verify(self, capsys):
        code, text, _ = run(capsys, "solve", "--m", "4", "--solver", "jd",
                            "--n-wanted", "3", "--verify")
        assert code == 0
        assert "PASS" in text
        assert text.count("lambda") == 3

    def test_unknown_solver_usage_error(self, capsys):
        code, _, err = run(capsys, "solve", "--m", "4", "--solver", "bogus")
        assert code == 1

    def test_missing_matrix_file_io_error(self, capsys):
        code, _, err = run(capsys, "solve", "--matrix", "/nonexistent/x.mtx",
                           "--solver", "jd")
        assert code == 3

    def test_loosened_tolerance_fails_verification(self, capsys):
        code, text, _ = run(capsys, "solve", "--m", "4", "--solver", "jd",
                            "--outer-tol", "1.0", "--verify")
        assert code == 2
        assert "FAIL" in text

    def test_probability_dump(self, tmp_path, capsys):
        dump = tmp_path / "p.tsv"
        code, _, _ = run(capsys, "solve", "--m", "4", "--solver", "cwi",
                         "--n-wanted", "2", "--dump-probabilities", str(dump))
        assert code == 0
        lines = dump.read_text().splitlines()
        assert lines[0].split("\t") == ["i", "j", "k", "p0", "p1"]
        assert len(lines) == 65
        total = sum(float(line.split("\t")[3]) for line in lines[1:])
        assert abs(total - 1.0) <= 1e-10

    def test_config_file_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[matrix]\nm = 4\nw = 16.5\nseed = 2\n"
                       "[solver]\nname = jd\nn_wanted = 2\n")
        code, text, _ = run(capsys, "--config", str(cfg), "solve")
        assert code == 0
        assert text.count("lambda") == 2


class TestMatch:
    def test_dump_structure(self, capsys):
        code, text, _ = run(capsys, "match", "--m", "3", "--w", "0.5")
        assert code == 0
        assert "block" in text and "order" in text and "scale" in text

    def test_singular_matrix_reported(self, tmp_path, capsys):
        path = tmp_path / "s.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                        "2 2 2\n1 1 1.0\n2 2 0.0\n")
        code, _, err = run(capsys, "match", "--matrix", str(path))
        assert code == 2


class TestBench:
    def test_rows_and_schema(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        # cutoff below n so the multilevel path (where kappa matters) runs
        code, _, _ = run(capsys, "bench", "--m-list", "4", "--w-list", "16.5",
                         "--kappa-list", "5,10", "--solvers", "jd",
                         "--cutoff", "16", "--out", str(out))
        assert code == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2
        assert list(rows[0].keys()) == BENCH_COLUMNS
        assert all(r["status"] == "ok" for r in rows)
        fills = [float(r["fill_ratio"]) for r in rows]
        assert fills[0] < fills[1]  # kappa 5 vs 10

    def test_empty_grid_header_only(self, tmp_path, capsys):
        out = tmp_path / "empty.csv"
        code, _, _ = run(capsys, "bench", "--m-list", "", "--out", str(out))
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].split(",") == BENCH_COLUMNS

    def test_rerun_identical_nontiming_columns(self, tmp_path, capsys):
        out1, out2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
        args = ["bench", "--m-list", "4", "--w-list", "12.0", "--solvers",
                "silanczos", "--seeds", "1"]
        assert run(capsys, *args, "--out", str(out1))[0] == 0
        assert run(capsys, *args, "--out", str(out2))[0] == 0
        with open(out1) as f:
            rows1 = list(csv.DictReader(f))
        with open(out2) as f:
            rows2 = list(csv.DictReader(f))
        for r1, r2 in zip(rows1, rows2):
            for key in BENCH_COLUMNS:
                if key != "time_s":
                    assert r1[key] == r2[key]


class TestVerify:
    def test_all_solvers_pass(self, capsys):
        code, text, _ = run(capsys, "verify", "--m", "4", "--tol", "1e-7")
        assert code == 0
        assert text.count("PASS") == 3

    def test_matrix_from_file(self, tmp_path, capsys):
        out = tmp_path / "a.mtx"
        assert run(capsys, "generate", "--m", "4", "--seed", "3",
                   "--out", str(out))[0] == 0
        code, text, _ = run(capsys, "verify", "--matrix", str(out),
                            "--solvers", "jd")
        assert code == 0 and "PASS" in text

    def test_perm_file_override(self, tmp_path, capsys):
        perm = tmp_path / "perm.txt"
        perm.write_text("".join(f"{i}\n" for i in range(64, 0, -1)))
        code, text, _ = run(capsys, "verify", "--m", "4", "--solvers", "jd",
                            "--perm-file", str(perm), "--cutoff", "16")
        assert code == 0 and "PASS" in text
