import io
import json
import math
import subprocess
import sys

import pytest

from onebit_hbf.cli import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_GUARD,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    RunSpec,
    main,
    parse_config,
    run,
)

SMALL = {"nt": 8, "nr": 4, "n_rf": 2, "ns": 2, "snr_grid_db": [0, 10]}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run_quiet(spec):
    out, err = io.StringIO(), io.StringIO()
    code = run(spec, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


class TestParseConfig:
    def test_empty_gives_defaults(self):
        for text in ("", "{}", "  \n"):
            system, channel, design, sweep = parse_config(text)
            assert (system.nt, system.nr, system.n_rf, system.ns) == (64, 16, 4, 4)
            assert sweep.spacing_ratio == 0.5
            assert (channel.num_clusters, channel.rays_per_cluster) == (10, 10)
            assert channel.angle_spread_rad == pytest.approx(math.radians(2.5))
            assert channel.power_decay_base == 0.7
            assert channel.aoa_mean_sector_width == pytest.approx(math.pi / 3)
            assert channel.aod_mean_range == pytest.approx((0, 2 * math.pi))
            assert design.alpha_rel == 1e-6 and design.q1_raw

    def test_overrides(self):
        system, channel, design, sweep = parse_config('{"ns": 2, "n_rf": 2}')
        assert system.ns == system.n_rf == 2
        assert system.nt == 64 and channel.num_clusters == 10

    def test_ns_nrf_mismatch(self):
        with pytest.raises(ConfigError, match="ns"):
            parse_config('{"ns": 3, "n_rf": 4}')

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config('{"bogus": 1}')

    @pytest.mark.parametrize(
        "doc,key",
        [
            ({"nt": 0}, "nt"),
            ({"nt": 2.5}, "nt"),
            ({"noise_var": -1}, "noise_var"),
            ({"angle_spread_deg": 0}, "angle_spread_deg"),
            ({"power_decay_base": 1.5}, "power_decay_base"),
            ({"alpha_rel": 2}, "alpha_rel"),
            ({"q1_raw": 1}, "q1_raw"),
            ({"snr_grid_db": []}, "snr_grid_db"),
            ({"ns_grid": [1, "x"]}, "ns_grid"),
            ({"aod_range_deg": [10]}, "aod_range_deg"),
            ({"spacing_ratio": 0}, "spacing_ratio"),
        ],
    )
    def test_bad_values_name_the_key(self, doc, key):
        with pytest.raises(ConfigError, match=key):
            parse_config(json.dumps(doc))

    def test_not_json(self):
        with pytest.raises(ConfigError):
            parse_config("nt = 4")
        with pytest.raises(ConfigError):
            parse_config("[1, 2]")

    def test_snr_sets_power(self):
        system, *_ = parse_config('{"snr_db": 10, "noise_var": 2}')
        assert system.power == pytest.approx(20.0)


class TestRun:
    def test_csv_output(self, tmp_path):
        out = tmp_path / "r.csv"
        code, stdout, _ = run_quiet(
            RunSpec("snr-sweep", write_config(tmp_path, SMALL), trials=3, seed=7, output_path=str(out))
        )
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + 2 * 3
        assert lines[1].startswith("snr-sweep,snr_db,0,opt,")
        # one summary line per grid point
        assert len(stdout.strip().splitlines()) == 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_quiet(RunSpec("snr-sweep", cfg, trials=10, seed=7, output_path=str(a)))[0] == 0
        assert run_quiet(RunSpec("snr-sweep", cfg, trials=10, seed=7, output_path=str(b), workers=2))[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_single_has_all_algorithms(self, tmp_path):
        cfg = write_config(tmp_path, {"nt": 8, "nr": 8, "n_rf": 1, "ns": 1, "snr_db": 0})
        code, stdout, _ = run_quiet(RunSpec("single", cfg, trials=4, seed=1, output_path=str(tmp_path / "s.csv")))
        assert code == 0
        rows = (tmp_path / "s.csv").read_text().splitlines()[1:]
        assert [r.split(",")[3] for r in rows] == ["opt", "proposed", "naive-quant", "exhaustive"]
        assert all(float(r.split(",")[4]) > 0 for r in rows)

    def test_json_output(self, tmp_path):
        out = tmp_path / "r.json"
        code, _, _ = run_quiet(
            RunSpec("ns-sweep", write_config(tmp_path, {**SMALL, "ns_grid": [1, 2]}), trials=2, format="json", output_path=str(out))
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert "SNR = P / noise_var" in doc["metadata"]["snr_definition"]
        assert {r["sweep_value"] for r in doc["results"]} == {1, 2}

    def test_guard_exit(self, tmp_path):
        code, _, err = run_quiet(RunSpec("es-compare", write_config(tmp_path, {"nt": 64}), trials=1))
        assert code == EXIT_GUARD
        assert "exhaustive guard exceeded" in err

    def test_config_error_exit(self, tmp_path):
        code, _, err = run_quiet(RunSpec("single", write_config(tmp_path, {"ns": 3, "n_rf": 4})))
        assert code == EXIT_CONFIG
        assert "ns" in err

    def test_bad_grid_exit(self, tmp_path):
        code, _, err = run_quiet(RunSpec("ns-sweep", write_config(tmp_path, {**SMALL, "ns_grid": [1, 8]})))
        assert code == EXIT_CONFIG
        assert "ns_grid" in err

    def test_missing_config_is_io_error(self, tmp_path):
        assert run_quiet(RunSpec("single", str(tmp_path / "nope.json")))[0] == EXIT_IO

    def test_unwritable_output_is_io_error(self, tmp_path):
        out = tmp_path / "missing_dir" / "r.csv"
        code, _, _ = run_quiet(RunSpec("single", write_config(tmp_path, SMALL), trials=1, output_path=str(out)))
        assert code == EXIT_IO

    def test_no_temp_files_left(self, tmp_path):
        out = tmp_path / "r.csv"
        run_quiet(RunSpec("single", write_config(tmp_path, SMALL), trials=1, output_path=str(out)))
        assert sorted(p.name for p in tmp_path.iterdir()) == ["cfg.json", "r.csv"]

    def test_overrides(self, tmp_path):
        cfg = write_config(tmp_path, SMALL)
        a = run_quiet(RunSpec("single", cfg, trials=2, q1_raw=False))[1]
        b = run_quiet(RunSpec("single", cfg, trials=2, q1_raw=True))[1]
        assert a.startswith(CSV_HEADER[0]) and b.startswith(CSV_HEADER[0])
        assert run_quiet(RunSpec("single", cfg, alpha_rel=5.0))[0] == EXIT_CONFIG


class TestMain:
    def test_flags(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HBF_THREADS", "1")
        out = tmp_path / "o.csv"
        args = ["--experiment", "single", "--config", write_config(tmp_path, SMALL), "--trials", "2",
                "--seed", "3", "--out", str(out), "--format", "csv", "--alpha-rel", "1e-5", "--q1-truncated"]
        assert main(args) == 0
        assert out.read_text().startswith(",".join(CSV_HEADER))

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("HBF_THREADS", "many")
        assert main(["--experiment", "single", "--trials", "1"]) == EXIT_CONFIG

    def test_argparse_errors_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["--experiment", "nope"])
        assert exc.value.code == 2

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "onebit_hbf.cli", "--experiment", "es-compare", "--trials", "1"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_GUARD
        assert "exhaustive guard exceeded" in proc.stderr
