import csv
import math

import pytest

from dtedge import cli, schedulers
from dtedge.config import ConfigError, RunConfig, dumps, load, loads, save
from dtedge.model import InfeasibleError
from dtedge.simulator import read_trace


def small_config(**kw):
    base = dict(
        num_servers=3, num_devices=12, horizon_slots=10, max_aoi_slots=5,
        realizations=2, betas=(0.0, 1.0, math.inf), bits_per_mb=1e6,
    )
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture
def conf_path(tmp_path):
    path = tmp_path / "run.cfg"
    save(small_config(output=str(tmp_path / "out.csv")), path)
    return path


class TestConfig:
    def test_round_trip(self, tmp_path):
        conf = small_config(static_optimal=True, max_power_w=2.5)
        assert loads(dumps(conf)) == conf
        save(conf, tmp_path / "c.cfg")
        assert load(tmp_path / "c.cfg") == conf

    def test_comments_and_blank_lines(self):
        conf = loads("# header\n\nnum_servers = 7  # trailing\nbetas = 0, inf\n")
        assert conf.num_servers == 7
        assert conf.betas == (0.0, math.inf)

    @pytest.mark.parametrize(
        "text", ["nonsense_key = 1\n", "num_servers = 3\nnum_servers = 4\n", "num_servers = three\n", "no equals sign\n"]
    )
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            loads(text)

    def test_validate_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            small_config(xi=2.0).validate()
        with pytest.raises(ConfigError):
            small_config(betas=()).validate()
        with pytest.raises(ConfigError):
            small_config(twin_size_mb_min=60.0).validate()

    def test_validate_rejects_infeasible(self):
        with pytest.raises(InfeasibleError, match=r"K <= M\*Gamma"):
            small_config(num_devices=16).validate()

    def test_policies(self):
        kinds = [p.kind for p in small_config(static_optimal=True).policies()]
        assert kinds == ["benchmark", "online", "boundary", "static_optimal"]


class TestSimulate:
    def test_writes_one_record_per_slot(self, conf_path, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        assert cli.main(["simulate", "--config", str(conf_path), "--trace", str(trace), "--beta", "1"]) == 0
        assert len(read_trace(trace)) == 10
        assert "avg_aoi=" in capsys.readouterr().out

    def test_static_optimal(self, tmp_path):
        path, trace = tmp_path / "full.cfg", tmp_path / "trace.csv"
        save(small_config(num_devices=15), path)
        assert cli.main(["simulate", "--config", str(path), "--trace", str(trace), "--static-optimal"]) == 0
        assert read_trace(trace).migration.sum() == 0

    def test_infeasible_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        save(small_config(num_devices=16), path)
        assert cli.main(["simulate", "--config", str(path)]) == 2
        assert "K <= M*Gamma" in capsys.readouterr().err

    def test_unwritable_trace_exits_1(self, conf_path, tmp_path):
        target = tmp_path / "missing_dir" / "trace.csv"
        assert cli.main(["simulate", "--config", str(conf_path), "--trace", str(target)]) == 1

    def test_missing_config_exits_1(self, tmp_path):
        assert cli.main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_malformed_config_exits_2(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("bogus = 1\n")
        assert cli.main(["simulate", "--config", str(path)]) == 2


class TestSweep:
    def run(self, conf_path, out, *extra):
        return cli.main(["sweep", "--config", str(conf_path), "--axis", "servers", "--values", "3,4",
                         "--out", str(out), *extra])

    def test_header_and_rows(self, conf_path, tmp_path):
        out = tmp_path / "s.csv"
        assert self.run(conf_path, out) == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == cli.CSV_HEADER
        assert len(rows) == 1 + 2 * 3
        assert {r[1] for r in rows[1:]} == {"benchmark", "online", "boundary"}
        assert all(r[9] == "2" and r[10] == "0" for r in rows[1:])

    def test_byte_identical_rerun(self, conf_path, tmp_path):
        a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
        assert self.run(conf_path, a) == 0
        assert self.run(conf_path, b) == 0
        assert self.run(conf_path, c, "--workers", "2") == 0
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_empty_values_exits_2(self, conf_path, tmp_path):
        assert cli.main(["sweep", "--config", str(conf_path), "--axis", "servers", "--values", "",
                         "--out", str(tmp_path / "x.csv")]) == 2

    def test_infeasible_point_exits_2(self, conf_path, tmp_path, capsys):
        code = cli.main(["sweep", "--config", str(conf_path), "--axis", "servers", "--values", "3,2",
                         "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "servers=2" in capsys.readouterr().err

    def test_figures(self, conf_path, tmp_path):
        out = tmp_path / "s.csv"
        assert self.run(conf_path, out, "--figures") == 0
        for suffix in ("energy", "cost"):
            png = tmp_path / f"s_{suffix}.png"
            assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"

    def test_plot_subcommand(self, conf_path, tmp_path):
        out = tmp_path / "s.csv"
        assert self.run(conf_path, out) == 0
        figs = tmp_path / "figs"
        figs.mkdir()
        assert cli.main(["plot", str(out), "--axis", "servers", "--out-dir", str(figs)]) == 0
        assert sorted(p.name for p in figs.iterdir()) == ["s_cost.png", "s_energy.png"]


class TestValidate:
    def test_passes(self, tmp_path, capsys):
        report = tmp_path / "r.json"
        assert cli.main(["validate", "--size-limit", "5", "--report", str(report)]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "PASS" in out
        assert report.exists()

    def test_broken_closed_form_exits_3(self, monkeypatch, capsys):
        real = schedulers.sum_aoi_closed_form
        monkeypatch.setattr(schedulers, "sum_aoi_closed_form", lambda M, G: real(M, G) + 1)
        assert cli.main(["validate", "--size-limit", "4"]) == 3
        out = capsys.readouterr().out
        assert "FAIL" in out and "replay:" in out

    @pytest.mark.parametrize("limit", ["0", "8"])
    def test_size_limit_bounds(self, limit):
        assert cli.main(["validate", "--size-limit", limit]) == 2


def test_config_subcommand_prints_loadable_defaults(capsys):
    assert cli.main(["config"]) == 0
    assert loads(capsys.readouterr().out) == RunConfig()
