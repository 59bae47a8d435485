import json
import logging
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from heterour.cli import main
from heterour.io import CsvFormatError, parse_series, read_series, volatility_svg, write_series


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def null_csv(tmp_path, capsys):
    path = tmp_path / "null.csv"
    code, _, _ = run(
        ["simulate", "--c", 0, "--vol", "one-shift", "--sigma1", 5, "--T", 100, "--seed", 1, "--out", path],
        capsys,
    )
    assert code == 0
    return path


class TestIo:
    def test_headerless(self):
        ts = parse_series("1.5\n2.5\n-3\n")
        np.testing.assert_array_equal(ts.values, [1.5, 2.5, -3.0])
        assert ts.labels is None

    def test_header_with_date(self):
        ts = parse_series("date,value\n2020-01,1\n2020-02,2\n")
        assert ts.labels == ("2020-01", "2020-02")
        np.testing.assert_array_equal(ts.values, [1.0, 2.0])

    def test_value_column_by_name(self):
        ts = parse_series("value,other\n1,9\n2,8\n")
        np.testing.assert_array_equal(ts.values, [1.0, 2.0])

    @pytest.mark.parametrize("text", ["", "a,b\n1,2\n", "value\n1\nfoo\n", "value\n1\nnan\n"])
    def test_malformed(self, text):
        with pytest.raises(CsvFormatError):
            parse_series(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CsvFormatError):
            read_series(tmp_path / "absent.csv")

    def test_round_trip(self, tmp_path):
        x = np.random.default_rng(0).standard_normal(50) * 1e3
        write_series(tmp_path / "x.csv", x)
        np.testing.assert_array_equal(read_series(tmp_path / "x.csv").values, x)

    def test_svg_well_formed(self):
        svg = volatility_svg(np.linspace(1, 5, 99), offset=2)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert svg == volatility_svg(np.linspace(1, 5, 99), offset=2)
        ET.fromstring(volatility_svg(np.ones(20)))


class TestSimulate:
    def test_byte_identical(self, tmp_path, capsys):
        args = ["simulate", "--c", 0, "--vol", "constant", "--innov", "normal", "--T", 100, "--seed", 1]
        run(args + ["--out", tmp_path / "a.csv"], capsys)
        run(args + ["--out", tmp_path / "b.csv"], capsys)
        a = (tmp_path / "a.csv").read_bytes()
        assert a == (tmp_path / "b.csv").read_bytes()
        lines = a.decode().splitlines()
        assert lines[0] == "t,value" and len(lines) == 101

    def test_short_series_exit_2(self, tmp_path, capsys):
        code, _, err = run(["simulate", "--T", 10, "--out", tmp_path / "x.csv"], capsys)
        assert code == 2
        assert "error" in json.loads(err)

    def test_preset_and_override(self, tmp_path, capsys):
        from heterour.dgp import DgpSpec, simulate_series

        run(["simulate", "--preset", "paper-ar1", "--theta", 0.2, "--seed", 4, "--out", tmp_path / "p.csv"], capsys)
        expect = simulate_series(DgpSpec(theta=0.2, phi=0.5), 4).values
        np.testing.assert_array_equal(read_series(tmp_path / "p.csv").values, expect)


class TestTest:
    def test_json_and_determinism(self, null_csv, tmp_path, capsys):
        args = ["test", "--input", null_csv, "--B", 99, "--seed", 3]
        code, out1, _ = run(args, capsys)
        assert code == 0
        _, out2, _ = run(args, capsys)
        assert out1 == out2
        d = json.loads(out1)
        assert d["schema"] == 1 and d["B"] == 99 and set(d["statistic"]) == {"lt", "tt", "mz"}

    def test_round_trip_values(self, null_csv):
        from heterour.dgp import DgpSpec, simulate_series

        expect = simulate_series(DgpSpec(vol_case="one-shift", sigma1=5), 1).values
        got = read_series(null_csv).values
        np.testing.assert_allclose(got, expect, rtol=1e-15, atol=0)

    def test_mean_sets_c_bar(self, null_csv, capsys):
        _, out, _ = run(["test", "--input", null_csv, "--deterministic", "mean", "--B", 19], capsys)
        assert json.loads(out)["c_bar"] == 7.0

    def test_output_and_emit(self, null_csv, tmp_path, capsys):
        o, v, s = tmp_path / "r.json", tmp_path / "v.csv", tmp_path / "v.svg"
        code, out, _ = run(
            ["test", "--input", null_csv, "--stat", "tt", "--B", 19, "--output", o,
             "--emit-volatility", v, "--emit-svg", s],
            capsys,
        )
        assert code == 0 and out == ""
        assert list(json.loads(o.read_text())["statistic"]) == ["tt"]
        rows = v.read_text().splitlines()
        assert rows[0] == "t,sigma_hat" and len(rows) == 101 and rows[1].startswith("1,")
        ET.fromstring(s.read_text())

    def test_malformed_csv_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("value\n1\nabc\n")
        code, out, err = run(["test", "--input", bad], capsys)
        assert code == 2 and out == ""
        assert json.loads(err)["error"] == "parse"

    def test_bad_flag_exit_2(self, null_csv, capsys):
        code, _, err = run(["test", "--input", null_csv, "--B", 5], capsys)
        assert code == 2
        code, _, err = run(["test", "--input", null_csv, "--kernel", "cosine"], capsys)
        assert code == 2 and json.loads(err)["error"] == "usage"

    def test_statistical_failure_exit_3(self, tmp_path, capsys):
        short = tmp_path / "short.csv"
        short.write_text("value\n" + "\n".join(["1", "2", "3", "4", "5"]) + "\n")
        code, _, err = run(["test", "--input", short], capsys)
        assert code == 3
        assert json.loads(err)["error"] == "InsufficientLength"
        flat = tmp_path / "flat.csv"
        flat.write_text("value\n" + "\n".join(["0"] * 30) + "\n")
        code, _, _ = run(["test", "--input", flat], capsys)
        assert code == 3

    def test_thread_invariance(self, null_csv, capsys, monkeypatch):
        outs = []
        for n in ("1", "4"):
            monkeypatch.setenv("HETEROUR_THREADS", n)
            outs.append(run(["test", "--input", null_csv, "--B", 299, "--seed", 2], capsys)[1])
        assert outs[0] == outs[1]


class TestVolatility:
    def test_export(self, null_csv, tmp_path, capsys):
        out, svg = tmp_path / "s.csv", tmp_path / "s.svg"
        code, _, _ = run(["volatility", "--input", null_csv, "--deterministic", "mean",
                          "--bandwidth", 0.2, "--out", out, "--svg", svg], capsys)
        assert code == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 100 and rows[1].startswith("2,")
        ET.fromstring(svg.read_text())


EXP = """
seed = 5
n_reps = 10
[grid]
vol_case = ["one-shift"]
sigma1 = [5.0]
innovation = ["normal"]
T = [60]
c = [0.0, 10.0]
[test]
B = 19
block = 1
"""


class TestMc:
    def test_rows_and_cache(self, tmp_path, capsys, caplog):
        spec = tmp_path / "exp.toml"
        spec.write_text(EXP)
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        with caplog.at_level(logging.INFO, logger="heterour"):
            assert run(["mc", "--spec", spec, "--out", out1], capsys)[0] == 0
            assert "cache hit" not in caplog.text
            caplog.clear()
            assert run(["mc", "--spec", spec, "--out", out2], capsys)[0] == 0
        assert caplog.text.count("cache hit") == 2
        assert "simulating" not in caplog.text
        assert out1.read_bytes() == out2.read_bytes()
        rows = out1.read_text().splitlines()
        assert rows[0] == "vol_case,sigma1,innovation,T,c,stat,rate"
        assert len(rows) == 1 + 2 * 2
        assert {r.split(",")[5] for r in rows[1:]} == {"lt", "tt"}

    def test_empty_grid(self, tmp_path, capsys):
        spec = tmp_path / "e.json"
        spec.write_text(json.dumps({"grid": {"c": []}}))
        out = tmp_path / "e.csv"
        assert run(["mc", "--spec", spec, "--out", out], capsys)[0] == 0
        assert out.read_text() == "vol_case,sigma1,innovation,T,c,stat,rate\n"

    def test_bad_spec_exit_2(self, tmp_path, capsys):
        spec = tmp_path / "bad.toml"
        spec.write_text("not = [valid")
        assert run(["mc", "--spec", spec, "--out", tmp_path / "o.csv"], capsys)[0] == 2
        spec.write_text('[test]\nB = 3\n')
        assert run(["mc", "--spec", spec, "--out", tmp_path / "o.csv"], capsys)[0] == 2
