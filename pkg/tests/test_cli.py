import subprocess
import sys

import pytest

from verti import cli
from verti import evalbench as eb
from verti.config import RunConfig, load_config, parse_config_text
from verti.plotting import curve_svg, read_plot_range

TINY = """\
# keep the smoke runs short
terrain_count = 3
test_count = 2
rollout_episodes = 2
min_rollout_steps = 0
eval_trials = 2
time_limit = 2.0
epochs = 1
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.setenv("VERTI_OUT", str(tmp_path / "default_out"))
    (tmp_path / "tiny.cfg").write_text(TINY)
    return tmp_path


def verti(*args):
    return cli.main([str(a) for a in args])


class TestConfig:
    def test_paper_defaults(self):
        c = RunConfig()
        assert (c.w1, c.w2, c.w3, c.w4) == (50, 10, 20, 10)
        assert (c.rollover_alpha_deg, c.timeout_c, c.time_limit) == (30, 100, 20)
        assert (c.alpha, c.beta) == (0.1, 0.1)
        assert c.terrain_count == 100
        assert c.weights().T == c.episode().time_limit == 20

    def test_precedence(self, tmp_path):
        f = tmp_path / "c.cfg"
        f.write_text("seed = 5\nsteps = 1_000\nsampler = mc  # baseline\n")
        c = load_config(f, {"steps": 42, "seed": None})
        assert (c.seed, c.steps, c.sampler) == (5, 42, "mc")
        assert load_config(None, {}).seed == RunConfig().seed

    def test_bad_file(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config_text("seed = 1\nnope = 3\n")
        with pytest.raises(ValueError, match="line 1"):
            parse_config_text("seed 1\n")

    def test_env_default_out(self, monkeypatch):
        monkeypatch.setenv("VERTI_OUT", "/somewhere")
        assert RunConfig().out == "/somewhere"


class TestGen:
    def test_defaults(self, workdir):
        assert verti("gen", "--seed", 1) == 0
        out = workdir / "default_out"
        assert len(list(out.glob("terrain_*.vwmap"))) == 100
        assert len(list(out.glob("test_*.vwmap"))) == 5

    def test_rerun_identical(self, workdir):
        verti("gen", "--count", 4, "--seed", 2, "--out", workdir / "a")
        verti("gen", "--count", 4, "--seed", 2, "--out", workdir / "b")
        for f in (workdir / "a").iterdir():
            assert f.read_bytes() == (workdir / "b" / f.name).read_bytes()

    def test_test_only(self, workdir):
        verti("gen", "--count", 4, "--seed", 2, "--test", "--out", workdir / "t")
        assert sorted(p.name for p in (workdir / "t").iterdir()) == ["test_000.vwmap", "test_001.vwmap",
                                                                   "test_002.vwmap", "test_003.vwmap",
                                                                   "test_004.vwmap"]

    def test_unwritable(self, workdir, capsys):
        blocker = workdir / "file"
        blocker.write_text("x")
        assert verti("gen", "--count", 2, "--out", blocker / "sub") != 0
        err = capsys.readouterr().err.strip()
        assert err.startswith("verti: error:") and "\n" not in err


class TestTrainEval:
    def test_pipeline(self, workdir, capsys):
        terr, run = workdir / "terr", workdir / "run"
        assert verti("gen", "--count", 3, "--seed", 1, "--test-count", 2, "--out", terr) == 0
        args = ("train", "--terrain", terr, "--out", run, "--steps", 300, "--eval-every", 100,
                "--seed", 1, "--config", workdir / "tiny.cfg")
        assert verti(*args) == 0
        for name in ("checkpoint.json", "curve.csv", "trace.csv"):
            assert (run / name).exists()
        assert len(eb.read_curve_csv(run / "curve.csv")) == 3

        ev = workdir / "ev"
        assert verti("eval", "--terrain", terr, "--planner", "np", "--trials", 2, "--out", ev) == 0
        assert verti("eval", "--terrain", terr, "--checkpoint", run / "checkpoint.json",
                     "--trials", 2, "--out", ev, "--method", "VS") == 0
        first = (ev / "summary.csv").read_bytes()
        assert [r[0] for r in eb.read_summary_csv(ev / "summary.csv")] == ["NP", "VS"]
        assert verti("eval", "--terrain", terr, "--checkpoint", run / "checkpoint.json",
                     "--trials", 2, "--out", ev, "--method", "VS") == 0
        assert (ev / "summary.csv").read_bytes() == first
        assert len((ev / "report.csv").read_text().splitlines()) == 3

        assert verti(*args, "--resume", "--steps", 400) == 0
        assert len(eb.read_curve_csv(run / "curve.csv")) == 4

    def test_op_flat(self, workdir):
        from verti import elevation as el
        terr = workdir / "flat"
        terr.mkdir()
        el.write_map(el.flat_map(), terr / "test_000.vwmap")
        assert verti("eval", "--terrain", terr, "--planner", "op", "--trials", 10, "--out", workdir / "o") == 0
        row = eb.read_summary_csv(workdir / "o" / "summary.csv")[0]
        assert row[:3] == ["OP", "10", "10"]

    def test_missing_inputs(self, workdir, capsys):
        assert verti("train", "--terrain", workdir / "nope", "--out", workdir / "r") != 0
        assert verti("gen", "--count", 2, "--out", workdir / "t") == 0
        assert verti("eval", "--terrain", workdir / "t", "--checkpoint", workdir / "missing.json") != 0
        assert verti("eval", "--terrain", workdir / "t") != 0
        (workdir / "bad.json").write_text("[]")
        assert verti("eval", "--terrain", workdir / "t", "--checkpoint", workdir / "bad.json") != 0
        errs = capsys.readouterr().err.strip().splitlines()
        assert len(errs) == 4 and all(e.startswith("verti: error:") for e in errs)

    def test_console_entry(self, workdir):
        r = subprocess.run([sys.executable, "-m", "verti.cli", "eval", "--terrain", workdir / "none",
                            "--planner", "op"], capture_output=True, text=True)
        assert r.returncode == 1
        assert r.stderr.count("\n") == 1 and "verti: error:" in r.stderr


class TestPlot:
    def write_curve(self, path, rows):
        path.write_text("env_steps,success_rate\n" + "".join(f"{s},{r}\n" for s, r in rows))
        return path

    def test_empty_curve_no_output(self, workdir):
        bad = workdir / "empty.csv"
        bad.write_text("")
        good = self.write_curve(workdir / "good.csv", [(100, 0.5)])
        out = workdir / "plots"
        assert verti("plot", "--curve", good, "--curve", bad, "--out", out) != 0
        assert not out.exists()

    def test_identical_inputs(self, workdir):
        a = self.write_curve(workdir / "a.csv", [(100, 0.1), (200, 0.4), (300, 0.35)])
        b = self.write_curve(workdir / "b.csv", [(100, 0.1), (200, 0.4), (300, 0.35)])
        assert verti("plot", "--curve", f"m={a}", "--smooth", 3, "--out", workdir / "pa") == 0
        assert verti("plot", "--curve", f"m={b}", "--smooth", 3, "--out", workdir / "pb") == 0
        assert (workdir / "pa" / "curve.svg").read_bytes() == (workdir / "pb" / "curve.svg").read_bytes()

    def test_axis_covers_data(self, workdir):
        rows = [(5000, 0.2), (10000, 0.75), (15000, 0.6)]
        f = self.write_curve(workdir / "c.csv", rows)
        assert verti("plot", "--curve", f, "--out", workdir / "p") == 0
        rng = read_plot_range((workdir / "p" / "curve.svg").read_text())
        pts = eb.read_curve_csv(f)
        assert rng["xmin"] <= min(p.env_steps for p in pts)
        assert rng["xmax"] >= max(p.env_steps for p in pts)
        assert rng["ymin"] <= min(p.eval_success_rate for p in pts)
        assert rng["ymax"] >= max(p.eval_success_rate for p in pts)

    def test_summary_plot(self, workdir):
        s = workdir / "s.csv"
        eb.write_summary_csv([["OP", "30", "50", "1.0", "0.1", "2", "3", "4", "5"],
                              ["NP", "0", "50", "N/A", "N/A", "2", "3", "4", "5"]], s)
        assert verti("plot", "--summary", s, "--out", workdir / "p") == 0
        svg = (workdir / "p" / "summary.svg").read_text()
        assert 'data-method="OP"' in svg and 'data-method="NP"' in svg

    def test_single_point_range(self):
        svg = curve_svg({"x": [eb.TrainingCurvePoint(100, 0.5)]})
        rng = read_plot_range(svg)
        assert rng["xmin"] < 100 < rng["xmax"] and rng["ymin"] <= 0.5 <= rng["ymax"]
