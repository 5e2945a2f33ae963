"""File formats, experiment runners and the command-line interface."""

import csv
import json

import numpy as np
import pytest
from PIL import Image

from oamturb.capacity import capacity_sweep
from oamturb.channel import ERASURE, POSTSELECTED, ModeSet, analytic_matrix, normalize
from oamturb.cli import main
from oamturb.experiments import ConfigError, resolve_config
from oamturb.field import ComplexField
from oamturb.grid import GridSpec
from oamturb.io import (
    fmt,
    load_curve_csv,
    load_matrix_csv,
    write_curve,
    write_field_csv,
    write_field_png,
    write_matrix,
    write_screen_csv,
    write_screen_png,
)
from oamturb.turbulence import generate_screen


class TestFormats:
    def test_fmt_significant_digits(self):
        assert fmt(np.pi) == "3.14159265359"
        assert fmt(1.0) == "1"
        assert fmt(1e-12) == "1e-12"

    def test_matrix_roundtrip(self, tmp_path):
        m = normalize(analytic_matrix(ModeSet(3, 0, 2), 2.0), POSTSELECTED)
        path = tmp_path / "m.csv"
        write_matrix(m, path)
        entries, sent, has_loss = load_matrix_csv(path)
        assert sent == [-2, 0, 2]
        assert not has_loss
        assert np.abs(entries - m.entries).max() < 1e-11
        sidecar = json.loads(path.with_suffix(".json").read_text())
        assert sidecar["normalization"] == POSTSELECTED
        assert sidecar["mode_set"] == {"dimension": 3, "center": 0, "spacing": 2}
        assert sidecar["provenance"] == {"method": "analytic"}

    def test_matrix_loss_row(self, tmp_path):
        m = normalize(analytic_matrix(ModeSet(3), 3.0), ERASURE)
        path = tmp_path / "m.csv"
        write_matrix(m, path)
        entries, _, has_loss = load_matrix_csv(path)
        assert has_loss
        assert entries.shape == (4, 3)

    def test_curve_roundtrip(self, tmp_path):
        curve = capacity_sweep(ModeSet(3), [0.5, 1.0, 2.0])
        path = tmp_path / "c.csv"
        write_curve(curve, path)
        s, c, lo, hi = load_curve_csv(path)
        assert np.allclose(s, [0.5, 1.0, 2.0])
        assert np.abs(c - curve.capacities).max() < 1e-11
        config = json.loads(path.with_suffix(".json").read_text())
        assert config["config"]["dimension"] == 3

    def test_field_csv(self, tmp_path):
        g = GridSpec(64, 1.0, 0.5)
        samples = np.zeros((64, 64), dtype=complex)
        samples[1, 2] = 1.5 - 0.25j
        f = ComplexField(g, samples)
        path = tmp_path / "f.csv"
        write_field_csv(f, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x_index", "y_index", "real", "imag"]
        assert len(rows) == 1 + 64 * 64
        hit = [r for r in rows[1:] if r[2] != "0"]
        assert hit == [["2", "1", "1.5", "-0.25"]]

    def test_png_orientation_and_depth(self, tmp_path):
        # intensity concentrated at +y must land in the top PNG row
        g = GridSpec(64, 1.0, 0.5)
        samples = np.zeros((64, 64), dtype=complex)
        samples[-1, :] = 1.0  # largest y coordinate
        f = ComplexField(g, samples)
        path = tmp_path / "f.png"
        write_field_png(f, path, "intensity")
        img = Image.open(path)
        assert img.mode == "L"
        assert img.size == (64, 64)
        arr = np.asarray(img)
        assert arr[0].max() == 255
        assert arr[1:].max() == 0

    def test_screen_png_wraps(self, tmp_path):
        g = GridSpec(64, 1.0, 0.5)
        screen = generate_screen(g, 5.0, 4)
        write_screen_png(screen, tmp_path / "s.png")
        img = np.asarray(Image.open(tmp_path / "s.png"))
        assert img.shape == (64, 64)
        write_screen_csv(screen, tmp_path / "s.csv")
        with open(tmp_path / "s.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x_index", "y_index", "phase_rad"]
        assert float(rows[1][2]) == pytest.approx(screen.phase[0, 0], rel=1e-11)


class TestConfigResolution:
    def test_defaults_filled(self):
        cfg = resolve_config({"experiment": "fig4_sweep"})
        assert cfg["parameters"]["dimensions"] == [3, 5, 7, 9, 11]
        assert cfg["parameters"]["sorter"] == "sinc"
        assert cfg["seed"] == 12345

    def test_unknown_top_key_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config({"experiment": "fig4_sweep", "bogus": 1})

    def test_unknown_parameter_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config(
                {"experiment": "fig4_sweep", "parameters": {"dims": [3]}}
            )

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigError):
            resolve_config({"experiment": "fig6"})

    def test_fig5_defaults(self):
        cfg = resolve_config({"experiment": "fig5_spacing"})
        assert cfg["parameters"]["spacings"] == [1, 2, 4]
        assert cfg["parameters"]["dimension"] == 3
        assert cfg["parameters"]["sorter"] == "ideal"


SMALL_STRENGTHS = "0.2:8:6:log"


class TestCli:
    def test_screen_command(self, tmp_path):
        out = tmp_path / "scr"
        code = main(
            ["screen", "--d-over-r0", "5.12", "--resolution", "128",
             "--seed", "7", "--subharmonics", "3", "--out", str(out)]
        )
        assert code == 0
        assert (out / "screen_d_over_r0_5.12.png").exists()
        assert (out / "screen_d_over_r0_5.12.csv").exists()
        snap = json.loads((out / "config.json").read_text())
        assert snap["parameters"]["strengths"] == [5.12]
        assert snap["seed"] == 7

    def test_mode_command(self, tmp_path):
        out = tmp_path / "modes"
        code = main(
            ["mode", "--kind", "ang", "--index", "2", "--dimension", "5",
             "--resolution", "128", "--out", str(out)]
        )
        assert code == 0
        assert (out / "ang_n2_intensity.png").exists()
        assert (out / "ang_n2_phase.png").exists()

    def test_crosstalk_command_analytic(self, tmp_path):
        out = tmp_path / "xt"
        code = main(
            ["crosstalk", "--method", "analytic", "--n", "5", "--spacing", "1",
             "--d-over-r0", "2.5", "--sorter", "ideal",
             "--normalize", "postselect", "--out", str(out)]
        )
        assert code == 0
        entries, sent, _ = load_matrix_csv(out / "crosstalk.csv")
        assert sent == [-2, -1, 0, 1, 2]
        assert np.allclose(entries.sum(axis=0), 1.0, atol=1e-9)

    def test_crosstalk_command_mc_with_measured_sorter(self, tmp_path):
        sorter_src = normalize(analytic_matrix(ModeSet(3), 0.5), POSTSELECTED)
        sorter_csv = tmp_path / "sorter.csv"
        write_matrix(sorter_src, sorter_csv)
        out = tmp_path / "xt"
        code = main(
            ["crosstalk", "--method", "mc", "--n", "3", "--d-over-r0", "1.0",
             "--screens", "6", "--seed", "3", "--resolution", "128",
             "--sorter", f"file:{sorter_csv}", "--normalize", "erasure",
             "--out", str(out)]
        )
        assert code == 0
        entries, _, has_loss = load_matrix_csv(out / "crosstalk.csv")
        assert has_loss
        assert np.allclose(entries.sum(axis=0), 1.0, atol=1e-9)
        sidecar = json.loads((out / "crosstalk.json").read_text())
        assert sidecar["provenance"]["method"] == "montecarlo"
        assert sidecar["standard_errors"] is not None

    def test_capacity_command(self, tmp_path):
        out = tmp_path / "cap"
        code = main(
            ["capacity", "--n", "3", "--method", "analytic", "--sorter", "ideal",
             "--strengths", SMALL_STRENGTHS, "--out", str(out)]
        )
        assert code == 0
        s, c, _, _ = load_curve_csv(out / "capacity_N3.csv")
        assert len(s) == 6
        assert c[0] > c[-1]

    def test_fig4_reduced_and_deterministic(self, tmp_path):
        cfg = {
            "experiment": "fig4_sweep",
            "seed": 99,
            "parameters": {
                "dimensions": [3, 5],
                "strengths": {"lo": 0.2, "hi": 8.0, "count": 5, "log": True},
            },
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        outs = []
        for name, workers in (("a", None), ("b", 3)):
            out = tmp_path / name
            args = ["fig4", "--config", str(cfg_path), "--out", str(out)]
            if workers:
                args += ["--workers", str(workers)]
            assert main(args) == 0
            outs.append(out)
        for fname in ("capacity_N3.csv", "capacity_N5.csv", "baseline.csv",
                      "crossings.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()
        assert (outs[0] / "capacity_vs_turbulence.svg").exists()
        snap = json.loads((outs[0] / "config.json").read_text())
        assert snap["parameters"]["dimensions"] == [3, 5]

    def test_fig5_reduced(self, tmp_path):
        out = tmp_path / "f5"
        code = main(
            ["fig5", "--strengths", "0.2:10:6:log", "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "ordering_report.json").read_text())
        assert report["pointwise_ordering_by_spacing"] is True
        assert (out / "capacity_MS4.csv").exists()
        assert (out / "capacity_vs_spacing.svg").exists()

    def test_validate_reduced_passes(self, tmp_path):
        out = tmp_path / "val"
        code = main(
            ["validate", "--screens", "50", "--resolution", "256",
             "--out", str(out)]
        )
        assert code == 0
        report = json.loads((out / "validation.json").read_text())
        assert report["all_pass"] is True

    def test_validate_without_subharmonics_fails(self, tmp_path):
        out = tmp_path / "val0"
        code = main(
            ["validate", "--screens", "30", "--resolution", "128",
             "--subharmonics", "0", "--out", str(out)]
        )
        assert code == 2
        report = json.loads((out / "validation.json").read_text())
        assert report["checks"]["structure_function_fit"]["pass"] is False

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"experiment": "fig4_sweep",
                                        "parameters": {"nope": True}}))
        code = main(["fig4", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
        assert code == 3

    def test_wrong_experiment_in_config(self, tmp_path):
        cfg_path = tmp_path / "wrong.json"
        cfg_path.write_text(json.dumps({"experiment": "fig5_spacing"}))
        code = main(["fig4", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
        assert code == 3

    def test_bad_strengths_spec(self, tmp_path):
        code = main(
            ["capacity", "--n", "3", "--strengths", "10:1:5:log",
             "--out", str(tmp_path / "x")]
        )
        assert code == 3

    def test_bad_flag_exit_code(self):
        assert main(["capacity", "--n"]) == 3

    def test_missing_config_file(self, tmp_path):
        code = main(["fig4", "--config", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "x")])
        assert code == 3


class TestSvgFromCsv:
    def test_replot_is_pure_function_of_csv(self, tmp_path):
        out = tmp_path / "cap"
        main(["capacity", "--n", "3", "--sorter", "ideal",
              "--strengths", SMALL_STRENGTHS, "--out", str(out)])
        from oamturb.svgplot import plot_curve_csvs

        first = (out / "capacity_vs_turbulence.svg").read_text()
        plot_curve_csvs(
            [out / "capacity_N3.csv", out / "baseline.csv"],
            ["N=3", "polarization"],
            out / "replot.svg",
            title="Channel capacity vs turbulence strength",
            dashed_labels=("polarization",),
        )
        assert (out / "replot.svg").read_text() == first
