import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bsfv import cli, harness
from bsfv.harness import ConfigError, RunConfig, StudySpec
from bsfv.stepper import SingularPivotError


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_defaults(self):
        c = RunConfig().validate()
        assert (c.r, c.sigma, c.strike, c.x_max, c.maturity, c.theta, c.mesh) == (0.1, 0.5, 100.0, 300.0, 1.0, 0.5,
                                                                                   "uniform")

    def test_parse_with_comments(self):
        c = RunConfig.from_text("# study\nscheme = tpfa\n\nn_interior=250  # finer\nnorms=l2,max\n")
        assert c.scheme == "tpfa" and c.n_interior == 250 and c.norms == ("l2", "max")

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_text("speed=3\n")
        assert info.value.fields == ("speed",)

    def test_bad_value_names_field(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_text("n_interior=many\n")
        assert "n_interior" in info.value.fields

    @pytest.mark.parametrize("changes, field", [
        (dict(theta=1.5), "theta"), (dict(sigma=0.0), "sigma"), (dict(n_interior=1), "n_interior"),
        (dict(scheme="weno"), "scheme"), (dict(mesh="random"), "mesh"), (dict(norms=("l3",)), "norms"),
        (dict(m_steps=0), "m_steps"), (dict(x_max=float("nan")), "x_max"),
    ])
    def test_validation(self, changes, field):
        with pytest.raises(ConfigError) as info:
            RunConfig().replace(**changes).validate()
        assert field in info.value.fields

    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(2, 10_000), theta=st.floats(0, 1), r=st.floats(0, 1), sigma=st.floats(1e-3, 2),
           scheme=st.sampled_from(["tpfa", "fitted"]), ratio=st.floats(0.5, 2.0),
           norms=st.lists(st.sampled_from(["l2", "rel", "max", "semi", "combined"]), min_size=1, max_size=5))
    def test_round_trip(self, n, theta, r, sigma, scheme, ratio, norms):
        c = RunConfig(scheme=scheme, n_interior=n, theta=theta, r=r, sigma=sigma, ratio=ratio, norms=tuple(norms))
        text = c.to_text()
        again = RunConfig.from_text(text)
        assert again == c
        assert again.to_text() == text

    def test_load_file(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("m_steps=40\nmesh=geometric\nratio=1.05\n")
        c = RunConfig.load(p)
        assert (c.m_steps, c.mesh, c.ratio) == (40, "geometric", 1.05)


class TestStudySpec:
    def test_single_point_rejected(self):
        with pytest.raises(ConfigError):
            StudySpec("space", (100,))

    @pytest.mark.parametrize("values", [(100, 100), (200, 100), (0, 10)])
    def test_not_increasing(self, values):
        with pytest.raises(ConfigError):
            StudySpec("time", values)

    def test_bad_sweep(self):
        with pytest.raises(ConfigError):
            StudySpec("energy", (1, 2))

    def test_fixed_step_counts(self):
        assert harness.interior_count_for_step(300.0, 0.25) == 1199
        assert harness.steps_for_dt(1.0, 0.01) == 100


class TestRunSingle:
    def test_solution_file(self, tmp_path):
        res = harness.run_single(RunConfig(out=str(tmp_path)))
        rows = read_rows(res.path)
        assert rows[0] == ["x", "V_numeric", "V_exact", "abs_error"]
        assert len(rows) - 1 == 102
        assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == 300.0
        assert set(res.errors) == {harness.NormKind.DISCRETE_L2, harness.NormKind.RELATIVE_L2,
                                   harness.NormKind.MAX_ABS}
        assert "runtime=" in res.summary()

    def test_oracle_self_test(self, tmp_path):
        res = harness.run_single(RunConfig(out=str(tmp_path), n_interior=30, m_steps=5), self_test=True)
        rows = read_rows(res.path)[1:]
        assert all(float(r[3]) == 0.0 for r in rows)
        assert all(v <= 1e-12 for v in res.errors.values())

    def test_csv_format(self, tmp_path):
        res = harness.run_single(RunConfig(out=str(tmp_path), n_interior=10, m_steps=5))
        raw = res.path.read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        x = float(read_rows(res.path)[2][0])
        assert read_rows(res.path)[2][0] == format(x, ".17g")

    def test_deterministic(self, tmp_path):
        a = harness.run_single(RunConfig(out=str(tmp_path / "a"), mesh="geometric", n_interior=50))
        b = harness.run_single(RunConfig(out=str(tmp_path / "b"), mesh="geometric", n_interior=50))
        assert a.path.read_bytes() == b.path.read_bytes()

    def test_fmt(self):
        assert harness.fmt(0.1) == "0.10000000000000001"
        assert harness.fmt(np.int64(7)) == "7"
        assert harness.fmt(None) == ""


class TestStudies:
    def test_space_table(self, tmp_path):
        res = harness.run_space_study(StudySpec("space", (50, 100), 0.02), RunConfig(out=str(tmp_path)))
        rows = read_rows(res.path)
        assert rows[0] == ["scheme", "n", "h", "err_l2", "err_rel", "err_max", "order_vs_prev"]
        assert [r[:2] for r in rows[1:]] == [["tpfa", "50"], ["tpfa", "100"], ["fitted", "50"], ["fitted", "100"]]
        assert rows[1][-1] == "" and 0.8 < float(rows[2][-1]) < 1.2

    def test_time_table(self, tmp_path):
        res = harness.run_time_study(StudySpec("time", (10, 20), 3.0, ("fitted",)), RunConfig(out=str(tmp_path)))
        rows = read_rows(res.path)
        assert rows[0] == ["scheme", "m", "dt", "err_l2", "err_rel", "err_max", "order_vs_prev"]
        assert float(rows[2][2]) == 0.05
        assert res.plateau_spread("fitted") >= 0

    def test_wrong_sweep_kind(self):
        with pytest.raises(ConfigError):
            harness.run_space_study(StudySpec("time", (10, 20)))

    def test_thread_count_does_not_change_results(self, tmp_path, monkeypatch):
        spec = StudySpec("space", (20, 40, 80), 0.05)
        monkeypatch.setenv(harness.THREADS_ENV, "1")
        a = harness.run_space_study(spec, RunConfig(out=str(tmp_path / "a")))
        monkeypatch.setenv(harness.THREADS_ENV, "4")
        b = harness.run_space_study(spec, RunConfig(out=str(tmp_path / "b")))
        assert a.path.read_bytes() == b.path.read_bytes()

    @pytest.mark.parametrize("value, expected", [("1", 1), ("3", 3), ("64", 6)])
    def test_thread_cap(self, monkeypatch, value, expected):
        monkeypatch.setenv(harness.THREADS_ENV, value)
        assert harness.thread_count(6) == expected

    @pytest.mark.parametrize("value", ["0", "lots"])
    def test_thread_cap_invalid(self, monkeypatch, value):
        monkeypatch.setenv(harness.THREADS_ENV, value)
        with pytest.raises(ConfigError):
            harness.thread_count(4)


class TestPrice:
    def test_values(self):
        assert harness.run_price(100.0) == pytest.approx(23.9266, abs=1e-3)
        assert harness.run_price(0.0) == 0.0
        deep = harness.run_price(300.0)
        forward = 300 - 100 * np.exp(-0.1)
        assert forward == pytest.approx(209.5163, abs=1e-4)
        # put-call parity: the excess over the forward is the put value
        cdf = lambda z: 0.5 * math.erfc(-z / math.sqrt(2))
        d1 = (math.log(3.0) + 0.225) / 0.5
        put = 100 * math.exp(-0.1) * cdf(-(d1 - 0.5)) - 300 * cdf(-d1)
        assert deep - forward == pytest.approx(put, abs=1e-10)
        assert 0.2 < put < 0.25


class TestCli:
    def run(self, capsys, *argv):
        code = cli.main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_price(self, capsys):
        code, out, _ = self.run(capsys, "price", "--spot", "100")
        assert code == 0 and float(out) == pytest.approx(23.9266, abs=1e-3)

    def test_solve_flags(self, capsys, tmp_path):
        code, out, _ = self.run(capsys, "solve", "--scheme", "tpfa", "--n", "40", "--m", "20", "--theta", "1",
                                "--mesh", "geometric", "--ratio", "1.02", "--out", str(tmp_path))
        assert code == 0 and "scheme=tpfa n=40 m=20" in out
        assert len(read_rows(tmp_path / "solution.csv")) == 43

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_interior=30\nm_steps=10\nscheme=tpfa\n")
        code, out, _ = self.run(capsys, "solve", "--config", str(cfg), "--n", "20", "--out", str(tmp_path))
        assert code == 0 and "scheme=tpfa n=20 m=10" in out

    @pytest.mark.parametrize("argv", [
        ["solve", "--theta", "2"], ["solve", "--n", "x"], ["solve", "--scheme", "weno"],
        ["converge-space", "--values", "100"], ["converge-time", "--values", "200,100"], ["nonsense"],
    ])
    def test_validation_exit_code(self, capsys, argv, tmp_path):
        code, _, err = self.run(capsys, *argv, *(["--out", str(tmp_path)] if argv[0] != "nonsense" else []))
        assert code == 1 and err

    def test_solver_failure_exit_code(self, capsys, monkeypatch, tmp_path):
        def boom(*a, **k):
            raise SingularPivotError("singular pivot", step=7)

        monkeypatch.setattr(harness, "run_single", boom)
        code, _, err = self.run(capsys, "solve", "--out", str(tmp_path))
        assert code == 2 and "step 7" in err

    def test_converge_space(self, capsys, tmp_path):
        code, out, _ = self.run(capsys, "converge-space", "--values", "30,60", "--dt", "0.05", "--out", str(tmp_path))
        assert code == 0 and (tmp_path / "space_errors.csv").exists()
        assert out.splitlines()[0] == "scheme,n,h,err_l2,err_rel,err_max,order_vs_prev"

    def test_converge_time(self, capsys, tmp_path):
        code, out, _ = self.run(capsys, "converge-time", "--values", "5,10", "--h", "5", "--schemes", "tpfa",
                                "--out", str(tmp_path))
        assert code == 0 and "plateau spread (tpfa" in out

    def test_self_test(self, capsys):
        code, out, _ = self.run(capsys, "self-test")
        assert code == 0 and out.count("[PASS]") == 5
