import numpy as np
import pytest

from beltrami_kp.io import (
    ConfigError,
    RunManifest,
    fmt,
    parse_config,
    read_field,
    read_field_binary,
    read_table_csv,
    write_field,
    write_table_csv,
)
from beltrami_kp.spectral import make_grid

from .conftest import band_limited


@pytest.fixture
def field(rng):
    return band_limited(make_grid(16, 8, 3.5, 1.25), rng)


class TestFields:
    @pytest.mark.parametrize("binary", [False, True])
    def test_round_trip_exact(self, tmp_path, field, binary):
        path = write_field(tmp_path / "f.dat", field, binary=binary)
        back = read_field(path)
        assert back.grid == field.grid
        assert np.array_equal(back.values, field.values)

    def test_bad_magic(self, tmp_path, field):
        path = write_field(tmp_path / "f.bin", field, binary=True)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(ConfigError, match="magic"):
            read_field_binary(path)

    def test_truncated_binary(self, tmp_path, field):
        path = write_field(tmp_path / "f.bin", field, binary=True)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ConfigError):
            read_field(path)

    def test_csv_not_a_grid(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,y,value\n0,0,1\n1,0,2\n0,1,3\n")
        with pytest.raises(ConfigError):
            read_field(p)


class TestTables:
    def test_round_trip(self, tmp_path):
        path = write_table_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1], [2, np.float64(1 / 3)]])
        header, rows = read_table_csv(path)
        assert header == ["a", "b"]
        assert float(rows[1][1]) == 1 / 3

    @pytest.mark.parametrize("v,s", [(True, "True"), (3, "3"), (0.1, "0.10000000000000001"), ("x", "x")])
    def test_fmt(self, v, s):
        assert fmt(v) == s


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = RunManifest(
            command="solve",
            params={"alpha": 0.5, "beta": 1.25, "eps": [0.2, 0.1]},
            grid={"nx": 64, "ny": 64, "Lx": 12.5, "Ly": 3.0},
            version="0.1.0",
            outputs=["a.csv"],
            wall_time=1.5,
            seed=7,
            status="ok",
        )
        back = RunManifest.read(m.write(tmp_path / "manifest.txt"))
        assert back == m

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunManifest.from_text('command = "x"\nbogus = 1\n')

    def test_missing_command(self):
        with pytest.raises(ConfigError):
            RunManifest.from_text("seed = 1\n")


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# comment\nalpha = 0.5\nmax-iter = 10\n\n")
        assert cfg == {"alpha": "0.5", "max_iter": "10"}

    @pytest.mark.parametrize("text", ["alpha 0.5", "alpha =", "= 3", "a = 1\na = 2", "bad key = 1"])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)
