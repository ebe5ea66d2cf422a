import json

import numpy as np
import pytest

from strongfield.analysis import MomentumMap
from strongfield.config import (
    ConfigError,
    PRESETS,
    RunConfig,
    parse_config,
    preset_config,
    write_config,
)
from strongfield.output import Manifest, render_heatmap, write_csv


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        cfg.validate()
        assert cfg.grid.n == 800 and cfg.grid.l_max == 60
        assert cfg.propagation.dt == 0.05

    def test_round_trip_lossless(self):
        cfg = RunConfig()
        cfg.F0 = 0.075300000000001
        cfg.tau = 1005.0
        cfg.analysis.cut_k = 0.19
        cfg.propagation.mask = True
        text = write_config(cfg)
        back = parse_config(text=text)
        assert back.F0 == cfg.F0
        assert back.tau == cfg.tau
        assert back.analysis.cut_k == cfg.analysis.cut_k
        assert back.propagation.mask is True
        assert write_config(back) == text

    def test_k_grid_spec(self):
        cfg = RunConfig()
        k = cfg.k_grid()
        assert k[0] == pytest.approx(0.01)
        assert k[-1] == pytest.approx(1.6)
        assert len(k) == 319
        assert np.allclose(np.diff(k), 0.005)

    def test_cycles_consistency_enforced(self):
        cfg = RunConfig()
        cfg.omega = 0.05
        cfg.cycles = 8
        cfg.tau = 1005.0  # 8 cycles is 1005.31...
        with pytest.raises(ConfigError, match="cycles"):
            cfg.validate()
        cfg.tau = 8 * 2 * np.pi / 0.05
        cfg.validate()

    def test_overrides(self):
        cfg = parse_config(text="", overrides={"pulse.F0": "0.0377",
                                               "grid.n": "100"})
        assert cfg.F0 == 0.0377
        assert cfg.grid.n == 100

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(text="[pulse]\nF0 = banana\n")
        with pytest.raises(ConfigError):
            parse_config(text="[grid]\nn = 4\n")
        with pytest.raises(ConfigError):
            parse_config(text="[outputs]\nformats = csv,gif\n")

    def test_file_round_trip(self, tmp_path):
        cfg = RunConfig()
        cfg.F0 = 0.0533
        path = tmp_path / "run.cfg"
        write_config(cfg, path)
        back = parse_config(path=path)
        assert back.F0 == 0.0533

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            parse_config(path="/nonexistent/run.cfg")


class TestPresets:
    def test_all_presets_materialize(self):
        for name in PRESETS:
            cfg, actions = preset_config(name)
            assert cfg.omega == 0.05 and cfg.tau == 1005.0 and cfg.phi == 0.0
            assert actions

    def test_field_amplitudes(self):
        assert preset_config("fig1a")[0].F0 == 0.0377
        assert preset_config("fig1b")[0].F0 == 0.0533
        for name in ("fig1c", "fig2b", "fig3b", "fig4a"):
            assert preset_config(name)[0].F0 == 0.075

    def test_cut_momenta(self):
        assert preset_config("fig2a")[0].analysis.cut_k == 0.34
        assert preset_config("fig2b")[0].analysis.cut_k == 0.19

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_config("fig9z")


class TestCsv:
    def test_round_trip_precision(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(50) * 10.0**rng.integers(-12, 12, 50)
        path = tmp_path / "t.csv"
        write_csv(path, ["x", "i"], [x, np.arange(50)])
        lines = path.read_text().splitlines()
        assert lines[0] == "x,i"
        back = np.array([float(l.split(",")[0]) for l in lines[1:]])
        assert np.array_equal(back, x)

    def test_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv(tmp_path / "t.csv", ["a", "b"],
                      [np.zeros(3), np.zeros(4)])


def _tiny_map(density):
    d = np.asarray(density, dtype=float)
    nz = d.shape[1]
    return MomentumMap(k_z=np.linspace(-1, 1, nz),
                       k_rho=np.linspace(0, 1, d.shape[0]), density=d)


def _read_ppm(path):
    data = path.read_bytes()
    assert data.startswith(b"P6\n")
    header, rest = data.split(b"255\n", 1)
    dims = header.split(b"\n")[1].split()
    w, h = int(dims[0]), int(dims[1])
    img = np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
    return img


class TestHeatmap:
    def test_zero_map_uniform_lowest_color(self, tmp_path):
        path = tmp_path / "z.ppm"
        render_heatmap(_tiny_map(np.zeros((2, 2))), "linear", path)
        img = _read_ppm(path)
        assert img.shape == (2, 2, 3)
        assert (img == img[0, 0]).all()
        assert tuple(img[0, 0]) == (0, 0, 4)

    def test_single_hot_pixel(self, tmp_path):
        d = np.zeros((3, 4))
        d[1, 2] = 5.0
        path = tmp_path / "h.ppm"
        render_heatmap(_tiny_map(d), "linear", path)
        img = _read_ppm(path)
        top = (252, 255, 164)
        hits = [(i, j) for i in range(3) for j in range(4)
                if tuple(img[i, j]) == top]
        assert len(hits) == 1
        # row order: top row is the largest k_rho, so d[1, 2] -> img[1, 2]
        assert hits[0] == (1, 2)

    def test_linear_and_log_differ_unless_constant(self, tmp_path):
        rng = np.random.default_rng(8)
        d = rng.random((5, 5)) + 0.1
        p1, p2 = tmp_path / "lin.ppm", tmp_path / "log.ppm"
        render_heatmap(_tiny_map(d), "linear", p1)
        render_heatmap(_tiny_map(d), "log", p2)
        assert p1.read_bytes() != p2.read_bytes()
        c = np.full((4, 4), 3.3)
        render_heatmap(_tiny_map(c), "linear", p1)
        render_heatmap(_tiny_map(c), "log", p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_scale(self, tmp_path):
        with pytest.raises(ValueError):
            render_heatmap(_tiny_map(np.ones((2, 2))), "sqrt",
                           tmp_path / "x.ppm")

    def test_io_error_has_path_context(self):
        with pytest.raises(OSError, match="no/such"):
            render_heatmap(_tiny_map(np.ones((2, 2))), "linear",
                           "/no/such/dir/x.ppm")


class TestManifest:
    def test_outputs_hashed_and_json_valid(self, tmp_path):
        m = Manifest("[pulse]\nF0 = 0.075\n")
        f = tmp_path / "data.csv"
        f.write_text("k,v\n1,2\n")
        m.add_output(f)
        m.record("gamma", 0.667)
        m.write(tmp_path / "run_manifest.json")
        data = json.loads((tmp_path / "run_manifest.json").read_text())
        assert data["results"]["gamma"] == 0.667
        assert data["outputs"][0]["path"] == "data.csv"
        assert len(data["outputs"][0]["sha256"]) == 64
        assert "total" in data["timings"]
