import csv

import numpy as np
import pytest

from pairlabel.cli import main
from pairlabel.problems import read_pgm, write_pgm, write_ppm

from conftest import blocks_image, shifted_square_pair
from test_modelio import FIG1A

ZERO_MODEL = """mrf 3 2 2
g 1 0 0
g 2 0 0
g 3 0 0
hp 1 2 0
hp 2 3 0
"""


@pytest.fixture
def fig1a_path(tmp_path):
    path = tmp_path / "fig1a.mrf"
    path.write_text(FIG1A)
    return path


class TestSolve:
    def test_preference_cycle_model(self, fig1a_path, capsys):
        rc = main(["solve", str(fig1a_path), "--map", "T", "--p", "0.1", "--tol", "1e-12"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = dict(
            line.split(" ", 1) for line in out.strip().splitlines()
        )
        assert lines["labeling"] == "2 2 2 2 2"
        assert float(lines["upper"]) == 0.0
        assert float(lines["lower"]) <= 1e-9
        assert lines["converged"] == "true"

    def test_zero_cost_model(self, tmp_path, capsys):
        path = tmp_path / "zero.mrf"
        path.write_text(ZERO_MODEL)
        rc = main(["solve", str(path), "--p", "0.5"])
        out = dict(l.split(" ", 1) for l in capsys.readouterr().out.strip().splitlines())
        assert rc == 0
        assert out["iterations"] == "1"
        assert float(out["residual"]) == 0.0
        assert float(out["energy"]) == 0.0
        assert float(out["lower"]) == 0.0 and float(out["upper"]) == 0.0

    def test_labels_file(self, fig1a_path, tmp_path, capsys):
        out_path = tmp_path / "labels.txt"
        rc = main(["solve", str(fig1a_path), "--labels-out", str(out_path)])
        capsys.readouterr()
        assert rc == 0
        assert out_path.read_text().split() == ["1", "1", "1", "1", "1"]

    def test_malformed_file_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.mrf"
        path.write_text("mrf 2 2 1\ng 1 0 0\ng 2 0 oops\nhp 1 2 1\n")
        rc = main(["solve", str(path)])
        err = capsys.readouterr().err
        assert rc == 1
        assert "line 3" in err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        rc = main(["solve", str(tmp_path / "nope.mrf")])
        capsys.readouterr()
        assert rc == 1

    def test_non_convergence_exit_code(self, fig1a_path, capsys):
        rc = main(["solve", str(fig1a_path), "--max-iter", "2", "--tol", "1e-14"])
        capsys.readouterr()
        assert rc == 3


class TestBench:
    def test_decoupled_grid_everyone_is_exact(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        rc = main([
            "bench", "--size", "4", "--coupling", "0", "--seeds", "3",
            "--iterations", "200", "--output", str(out),
        ])
        capsys.readouterr()
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        per_seed = [r for r in rows if r["seed"] not in ("mean", "sigma")]
        assert per_seed and all(r["hamming"] == "0" for r in per_seed)

    def test_dp_rows_have_zero_distance(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        rc = main([
            "bench", "--size", "4", "--coupling", "5", "--seeds", "5",
            "--iterations", "100", "--output", str(out), "--algorithms", "dp,icm",
        ])
        capsys.readouterr()
        assert rc == 0
        rows = list(csv.DictReader(out.open()))
        dp = [r for r in rows if r["algorithm"] == "dp" and r["seed"] not in ("mean", "sigma")]
        assert len(dp) == 5 and all(r["hamming"] == "0" for r in dp)
        means = {r["algorithm"]: r for r in rows if r["seed"] == "mean"}
        assert float(means["icm"]["energy"]) >= float(means["dp"]["energy"])

    def test_rejects_unknown_algorithm(self, capsys):
        rc = main(["bench", "--algorithms", "dp,magic", "--seeds", "1"])
        capsys.readouterr()
        assert rc == 1

    def test_oversized_exact_reference_exits_two(self, capsys):
        rc = main(["bench", "--size", "17", "--seeds", "1", "--iterations", "1"])
        capsys.readouterr()
        assert rc == 2

    def test_runs_are_deterministic(self, tmp_path, capsys):
        args = [
            "bench", "--size", "5", "--coupling", "3", "--seeds", "3",
            "--iterations", "150",
        ]
        outs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            assert main(args + ["--output", str(path)]) == 0
            outs.append(path.read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1]


class TestRestore:
    def test_clean_constant_image_is_fixed(self, tmp_path, capsys):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        img = np.full((6, 7), 99, dtype=np.uint8)
        write_pgm(src, img)
        rc = main(["restore", str(src), str(dst), "--iterations", "60", "--clean", str(src)])
        out = dict(l.split(" ", 1) for l in capsys.readouterr().out.strip().splitlines())
        assert rc == 0
        assert np.array_equal(read_pgm(dst), img)
        assert float(out["energy"]) == 0.0
        assert float(out["rmse"]) == 0.0

    def test_noisy_image_improves(self, tmp_path, capsys):
        from pairlabel.problems import add_gaussian_noise, rmse

        clean_img = blocks_image(32)
        noisy_img = add_gaussian_noise(clean_img, 20.0, seed=8)
        clean = tmp_path / "clean.pgm"
        noisy = tmp_path / "noisy.pgm"
        out = tmp_path / "out.pgm"
        write_pgm(clean, clean_img)
        write_pgm(noisy, noisy_img)
        rc = main(["restore", str(noisy), str(out), "--clean", str(clean)])
        lines = dict(
            l.split(" ", 1) for l in capsys.readouterr().out.strip().splitlines()
        )
        assert rc == 0
        assert float(lines["rmse"]) < rmse(noisy_img, clean_img)

    def test_zero_smoothing_returns_input(self, tmp_path, capsys):
        src = tmp_path / "in.pgm"
        dst = tmp_path / "out.pgm"
        img = blocks_image(12)
        write_pgm(src, img)
        rc = main(["restore", str(src), str(dst), "--smoothing", "0", "--iterations", "30"])
        capsys.readouterr()
        assert rc == 0
        assert np.array_equal(read_pgm(dst), img)


class TestStereo:
    def test_identical_pair_zero_disparity(self, tmp_path, capsys):
        left = tmp_path / "l.ppm"
        right = tmp_path / "r.ppm"
        dst = tmp_path / "d.pgm"
        img = np.full((5, 6, 3), 120, dtype=np.uint8)
        write_ppm(left, img)
        write_ppm(right, img)
        rc = main([
            "stereo", str(left), str(right), str(dst),
            "--max-disparity", "0", "--iterations", "20",
        ])
        capsys.readouterr()
        assert rc == 0
        assert np.array_equal(read_pgm(dst), np.zeros((5, 6), dtype=np.uint8))

    def test_shifted_square(self, tmp_path, capsys):
        left_img, right_img = shifted_square_pair(size=8, shift=2)
        left = tmp_path / "l.ppm"
        right = tmp_path / "r.ppm"
        dst = tmp_path / "d.pgm"
        labels = tmp_path / "labels.txt"
        write_ppm(left, left_img)
        write_ppm(right, right_img)
        rc = main([
            "stereo", str(left), str(right), str(dst),
            "--max-disparity", "3", "--iterations", "1500",
            "--labels-out", str(labels),
        ])
        capsys.readouterr()
        assert rc == 0
        raw = np.array([int(v) for v in labels.read_text().split()]).reshape(8, 8)
        assert np.all(raw[2:6, 3:7] == 2)
        scaled = read_pgm(dst)
        assert np.array_equal(scaled, (raw * (255 // 3)).astype(np.uint8))

    def test_dimension_mismatch(self, tmp_path, capsys):
        left = tmp_path / "l.ppm"
        right = tmp_path / "r.ppm"
        write_ppm(left, np.zeros((4, 4, 3), dtype=np.uint8))
        write_ppm(right, np.zeros((4, 5, 3), dtype=np.uint8))
        rc = main(["stereo", str(left), str(right), str(tmp_path / "d.pgm")])
        capsys.readouterr()
        assert rc == 1


class TestVerify:
    def test_quick_passes(self, capsys):
        rc = main(["verify", "--scale", "quick", "--seed", "0"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "FAIL" not in out
        assert out.count("PASS") >= 25

    def test_detects_injected_fault(self):
        # a weight table whose rows do not sum to one must be flagged
        from pairlabel.model import build_graph
        from pairlabel.verify import weight_rows_sum_to_one

        graph = build_graph(3, [(0, 1), (1, 2)])
        assert not weight_rows_sum_to_one(graph, np.array([0.9, 0.5, 0.5, 1.0]))
        assert weight_rows_sum_to_one(graph, np.array([1.0, 0.5, 0.5, 1.0]))


class TestUsage:
    def test_unknown_subcommand_exits_one(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        capsys.readouterr()
        assert info.value.code == 1

    def test_threads_flag_accepted(self, fig1a_path, capsys):
        rc = main(["--threads", "1", "solve", str(fig1a_path)])
        capsys.readouterr()
        assert rc == 0
