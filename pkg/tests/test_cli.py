"""Command-line interface: exit codes, artifacts, reproducibility."""

import json

import numpy as np
import pytest

from risopt.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_USAGE, main
from risopt.network import random_passive_network
from risopt.touchstone import touchstone_export
from risopt.zcache import load_zmatrix

SMALL_GEOMETRY = {"grid_nx": 2, "grid_ny": 2, "distance": 8.0}


def small_scenario(tmp_path):
    doc = {
        "geometry": SMALL_GEOMETRY,
        "config_kinds": ["full", "reference-open"],
        "alphas": [0.0, 30.0],
        "cache_dir": str(tmp_path / "cache"),
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


class TestExitCodes:
    def test_usage_error_is_1(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == EXIT_USAGE
        with pytest.raises(SystemExit) as err:
            main(["sweep"])  # missing --out
        assert err.value.code == EXIT_USAGE

    def test_parse_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["zmat", "--config", str(bad), "--out", str(tmp_path / "z.json")])
        assert code == EXIT_PARSE
        code = main(
            ["zmat", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "z.json")]
        )
        assert code == EXIT_PARSE

    def test_numerical_error_is_3(self, tmp_path):
        # A geometry whose passivity regularization fails is a model error.
        geo = tmp_path / "geo.json"
        geo.write_text(json.dumps({"grid_nx": 2, "grid_ny": 1}))
        code = main(["zmat", "--config", str(geo), "--out", str(tmp_path / "z.json")])
        assert code == EXIT_NUMERICAL


class TestZmat:
    def test_synthetic_rerun_byte_identical(self, tmp_path):
        geo = tmp_path / "geo.json"
        geo.write_text(json.dumps(SMALL_GEOMETRY))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["zmat", "--config", str(geo), "--out", str(a)]) == EXIT_OK
        assert main(["zmat", "--config", str(geo), "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        z = load_zmatrix(a)
        assert z.n_ports == 6
        assert z.roles == ("tx", "s0", "s1", "s2", "s3", "rx")

    def test_touchstone_import(self, tmp_path):
        z = random_passive_network(3, seed=5)
        snp = tmp_path / "link.s5p"
        touchstone_export(z, snp)
        out = tmp_path / "z.json"
        code = main(
            ["zmat", "--import-touchstone", str(snp), "--roles", "tx=1,rx=5", "--out", str(out)]
        )
        assert code == EXIT_OK
        back = load_zmatrix(out)
        assert back.roles == z.roles
        assert np.allclose(back.entries, z.entries, rtol=1e-9, atol=1e-9)

    def test_bad_touchstone_is_parse_error(self, tmp_path):
        snp = tmp_path / "bad.s1p"
        snp.write_text("# HZ S RI R 50\n1e9 0.1 oops\n")
        code = main(["zmat", "--import-touchstone", str(snp), "--out", str(tmp_path / "z.json")])
        assert code == EXIT_PARSE


class TestSweep:
    def test_artifacts_and_determinism(self, tmp_path, capsys):
        scenario = small_scenario(tmp_path)
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep",
                "--config",
                str(scenario),
                "--out",
                str(out),
                "--svg",
                str(tmp_path / "sweep"),
                "--verbose",
            ]
        )
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        assert "wrote 4 records" in stdout
        assert stdout.count("alpha") >= 4
        assert (tmp_path / "sweep-brcs.svg").exists()
        assert (tmp_path / "sweep-tightness.svg").exists()
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert manifest["record_count"] == 4

        first = out.read_bytes()
        assert main(["sweep", "--config", str(scenario), "--out", str(out)]) == EXIT_OK
        assert out.read_bytes() == first

    def test_threads_do_not_change_output(self, tmp_path):
        scenario = small_scenario(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", str(scenario), "--out", str(a)]) == EXIT_OK
        code = main(["sweep", "--config", str(scenario), "--out", str(b), "--threads", "3"])
        assert code == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestVerify:
    def test_small_scenario_passes(self, tmp_path, capsys):
        code = main(["verify", "--config", str(small_scenario(tmp_path))])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        for name in ("passivity", "tightness", "round-trip", "dominance", "oracle"):
            assert f"PASS  {name}" in out
        assert "FAIL" not in out


class TestVersion:
    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == EXIT_OK
        assert capsys.readouterr().out.startswith("risopt ")
