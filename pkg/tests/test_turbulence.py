"""Phase screen synthesis and structure-function validation."""

import numpy as np
import pytest

from oamturb.grid import GridSpec
from oamturb.turbulence import (
    PhaseScreen,
    ScreenSynthesisOptions,
    fried_parameter,
    generate_screen,
    screen_ensemble,
    structure_function,
    structure_function_map,
    theoretical_structure_function,
    zero_screen,
)


class TestOptionsAndTypes:
    def test_levels_bounds(self):
        ScreenSynthesisOptions(0)
        ScreenSynthesisOptions(8)
        with pytest.raises(ValueError):
            ScreenSynthesisOptions(9)
        with pytest.raises(ValueError):
            ScreenSynthesisOptions(-1)

    def test_spectrum_enum(self):
        with pytest.raises(ValueError):
            ScreenSynthesisOptions(3, "von_karman")

    def test_screen_shape_checked(self, grid128):
        with pytest.raises(ValueError):
            PhaseScreen(grid128, np.zeros((64, 64)), 1.0, 0)

    def test_phase_immutable(self, grid128):
        s = zero_screen(grid128)
        with pytest.raises(ValueError):
            s.phase[0, 0] = 1.0

    def test_fried_parameter(self, grid128):
        assert fried_parameter(grid128, 4.0) == pytest.approx(
            grid128.aperture_diameter / 4.0
        )
        with pytest.raises(ValueError):
            fried_parameter(grid128, 0.0)


class TestGeneration:
    def test_rejects_zero_strength(self, grid128):
        with pytest.raises(ValueError):
            generate_screen(grid128, 0.0, 1)

    def test_seeded_determinism(self, grid128):
        a = generate_screen(grid128, 5.12, 42)
        b = generate_screen(grid128, 5.12, 42)
        assert np.array_equal(a.phase, b.phase)

    def test_stream_index_splits(self, grid128):
        a = generate_screen(grid128, 5.12, 42, stream_index=0)
        b = generate_screen(grid128, 5.12, 42, stream_index=1)
        assert not np.array_equal(a.phase, b.phase)

    def test_ensemble_matches_indexed_calls(self, grid128):
        ens = list(screen_ensemble(grid128, 5.12, 3, 42))
        for k, s in enumerate(ens):
            direct = generate_screen(grid128, 5.12, 42, stream_index=k)
            assert np.array_equal(s.phase, direct.phase)

    def test_piston_removed(self, grid128):
        s = generate_screen(grid128, 10.25, 7)
        assert abs(s.phase.mean()) < 1e-12

    def test_underresolved_r0_warns(self, grid128):
        with pytest.warns(UserWarning):
            generate_screen(grid128, 100.0, 1)

    def test_zero_screen(self, grid128):
        s = zero_screen(grid128)
        assert s.d_over_r0 == 0.0
        assert np.all(s.phase == 0.0)


class TestStructureFunction:
    def test_empty_ensemble_rejected(self):
        with pytest.raises(ValueError):
            structure_function([], [0.1])

    def test_mixed_grids_rejected(self, grid128):
        other = GridSpec(128, physical_width=2.0, aperture_radius=1.0)
        screens = [zero_screen(grid128), zero_screen(other)]
        with pytest.raises(ValueError):
            structure_function(screens, [0.1])

    def test_separation_range_checked(self, grid128):
        screens = [zero_screen(grid128)] * 2
        with pytest.raises(ValueError):
            structure_function(screens, [0.9])
        with pytest.raises(ValueError):
            structure_function(screens, [0.0])

    def test_zero_screens_give_zero(self, grid128):
        screens = [zero_screen(grid128)] * 3
        for _, v in structure_function(screens, [0.05, 0.2, 0.45]):
            assert v == 0.0

    def test_ramp_axis_displacements_exact(self, grid128):
        # phi = a*x: squared increment over displacement (dx, 0) is (a dx h)^2
        slope = 3.0
        x = grid128.axis_coords()[None, :] * np.ones((128, 128))
        screen = PhaseScreen(grid128, slope * x, 0.0, 0)
        dmap, counts = structure_function_map([screen])
        c = dmap.shape[0] // 2
        h = grid128.pixel_size
        for dx in (1, 7, 30):
            assert dmap[c, c + dx] == pytest.approx((slope * dx * h) ** 2, rel=1e-12)
            assert dmap[c + dx, c] == pytest.approx(0.0, abs=1e-12)
            assert counts[c, c + dx] == 128 * (128 - dx)

    def test_kolmogorov_fit(self, grid256):
        # 10% criterion at reduced scale (80 screens, 256^2); the full-scale
        # 200-screen 512^2 version runs in the acceptance suite
        strength = 10.25
        screens = list(screen_ensemble(grid256, strength, 80, 90210))
        seps = np.linspace(0.05, 0.5, 6) * grid256.aperture_diameter
        est = np.array([v for _, v in structure_function(screens, seps)])
        theo = theoretical_structure_function(grid256, strength, seps)
        rel = np.abs(est / theo - 1.0)
        assert rel.max() < 0.10

    def test_no_subharmonics_underrepresents_large_separations(self, grid256):
        screens = list(
            screen_ensemble(grid256, 10.25, 30, 4242, ScreenSynthesisOptions(0))
        )
        sep = 0.4 * grid256.aperture_diameter
        (_, est), = structure_function(screens, [sep])
        theo = theoretical_structure_function(grid256, 10.25, [sep])[0]
        assert est < 0.7 * theo

    def test_strength_scaling_with_paired_seeds(self, grid256):
        # identical draws isolate the r0^(-5/3) scaling from ensemble noise
        s1, s2 = 5.12, 10.25
        e1 = list(screen_ensemble(grid256, s1, 30, 11))
        e2 = list(screen_ensemble(grid256, s2, 30, 11))
        seps = np.array([0.1, 0.3, 0.5]) * grid256.aperture_diameter
        d1 = np.array([v for _, v in structure_function(e1, seps)])
        d2 = np.array([v for _, v in structure_function(e2, seps)])
        ratio = d2 / d1
        assert np.allclose(ratio, (s2 / s1) ** (5.0 / 3.0), rtol=1e-10)

    def test_stationarity(self, grid128):
        # pixelwise ensemble mean within 3 sigma / sqrt(M); checked as a
        # violation rate because 128^2 correlated pixels guarantee outliers
        screens = list(screen_ensemble(grid128, 5.12, 100, 31337))
        stack = np.stack([s.phase for s in screens])
        mean = stack.mean(axis=0)
        bound = 3.0 * stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])
        frac = np.mean(np.abs(mean) > bound)
        assert frac <= 0.01
