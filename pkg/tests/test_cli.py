import json

import numpy as np
import pytest

from devsplit.cli import main
from devsplit.records import Trace
from devsplit.report import export_svg


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def unsolved_problem(tmp_path):
    cfg = {"A": {"type": "linear", "G": [[0.0, -1.0, 0.0],
                                         [1.0, 0.0, 0.0],
                                         [0.0, 0.0, 1.0]]},
           "C": {"type": "zero", "dim": 3}}
    path = tmp_path / "p3.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestRun:
    def test_tunable_prints_count(self, capsys):
        assert run_cli("run", "--algo", "tunable", "--e", "0.4") == 0
        out = capsys.readouterr().out
        assert "170 iterations" in out and "converged" in out

    def test_not_converged_exit_code(self, capsys):
        code = run_cli("run", "--algo", "fb", "--max-iter", "10")
        assert code == 3
        assert "not converged" in capsys.readouterr().out

    def test_dist_stop_without_solution_is_config_error(self, unsolved_problem, capsys):
        code = run_cli("run", "--problem", "@" + unsolved_problem,
                       "--x0", "1,1,1", "--max-iter", "100")
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_fpres_stop_without_solution(self, unsolved_problem):
        assert run_cli("run", "--problem", "@" + unsolved_problem,
                       "--x0", "1,1,1", "--tol-kind", "fpres", "--tol", "1e-4",
                       "--max-iter", "100000") == 0

    def test_trace_csv_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        assert run_cli("run", "--algo", "tunable", "--e", "0.4",
                       "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,p_0,p_1,y_0,y_1,dist,fp_res"
        assert len(lines) == 1 + 170
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(3.3 / 1.01)

    def test_csv_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("run", "--algo", "constant-kappa", "--kappa", "0.82", "--out", str(a))
        run_cli("run", "--algo", "constant-kappa", "--kappa", "0.82", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_diagnostics_columns(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run_cli("run", "--algo", "fb", "--diagnostics", "on",
                       "--max-iter", "4000", "--out", str(out)) == 0
        header = out.read_text().splitlines()[0]
        assert header.endswith("V,ell,delta")

    def test_general_engine_algo(self, capsys):
        assert run_cli("run", "--algo", "general", "--max-iter", "4000") == 0
        assert "3068 iterations" in capsys.readouterr().out


class TestSweep:
    def test_kappa_fine_grid(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        assert run_cli("sweep", "--param", "kappa", "--algo", "constant-kappa",
                       "--values", "0.80,0.82,0.84,0.86,0.88,0.90",
                       "--out", str(out)) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "kappa,iterations,converged"
        counts = [int(r.split(",")[1]) for r in rows[1:]]
        assert counts == [258, 179, 180, 213, 238, 288]

    def test_rows_sorted_by_value(self, tmp_path):
        out = tmp_path / "s.csv"
        run_cli("sweep", "--param", "kappa", "--algo", "constant-kappa",
                "--values", "0.9,0.8", "--out", str(out))
        vals = [float(r.split(",")[0]) for r in out.read_text().splitlines()[1:]]
        assert vals == sorted(vals)

    def test_sweep_svg(self, tmp_path):
        fig = tmp_path / "fig.svg"
        assert run_cli("sweep", "--param", "e", "--algo", "tunable",
                       "--values", "0.3,0.4", "--svg", str(fig)) == 0
        body = fig.read_text()
        assert body.lstrip().startswith("<?xml")
        assert "e=0.3" in body and "e=0.4" in body


class TestVerifyCommand:
    def test_identity_suite_passes(self, capsys):
        assert run_cli("verify", "--suite", "identities", "--trials", "50") == 0
        assert "PASS" in capsys.readouterr().out


class TestSvgExport:
    def test_empty_trace_gives_empty_axes(self, tmp_path):
        path = tmp_path / "empty.svg"
        export_svg([("nothing", Trace(stride=0))], "distance", path)
        assert path.exists() and path.stat().st_size > 0

    def test_trajectory_needs_2d(self, tmp_path):
        tr = Trace(stride=1)
        tr.append(0, np.zeros(3), np.zeros(3), 1.0, 1.0)
        from devsplit import ConfigurationError
        with pytest.raises(ConfigurationError):
            export_svg([("bad", tr)], "trajectory", tmp_path / "x.svg")

    def test_svg_determinism(self, tmp_path):
        tr = Trace(stride=1)
        rng = np.random.default_rng(0)
        for n in range(20):
            p = rng.standard_normal(2)
            tr.append(n, p, p, float(np.linalg.norm(p)), 0.1)
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        export_svg([("t", tr)], "trajectory", a)
        export_svg([("t", tr)], "trajectory", b)
        assert a.read_bytes() == b.read_bytes()
