import math

import numpy as np
import pytest
from PIL import Image

from activescan.worldgen import (
    BACKGROUND,
    CROP,
    WEED,
    ColorModel,
    DimensionMismatchError,
    FieldReadError,
    FieldSpec,
    FieldSpecError,
    LabelValueError,
    Region,
    generate_field,
    load_field,
    plant_positions,
    region_vegetation,
    save_field,
)


def tiny(**kw):
    base = dict(width_m=10.0, height_m=8.0, seed=5)
    base.update(kw)
    return FieldSpec(**base)


class TestSpecValidation:
    @pytest.mark.parametrize("kw", [
        {"width_m": 0.0}, {"gsd": -0.02}, {"row_spacing_m": 0.0}, {"plant_radius_m": 0.0},
        {"weed_density": -1.0}, {"plant_jitter": 1.0}, {"seed": -1},
    ])
    def test_invalid(self, kw):
        with pytest.raises(FieldSpecError):
            tiny(**kw)

    def test_region_outside_field(self):
        with pytest.raises(FieldSpecError, match="within the field"):
            tiny(regions=(Region("r", 0, 0, 11, 8),))

    def test_duplicate_region_names(self):
        with pytest.raises(FieldSpecError, match="duplicate"):
            tiny(regions=(Region("r", 0, 0, 5, 8), Region("r", 5, 0, 10, 8)))


class TestGenerate:
    def test_empty_field(self):
        w = generate_field(tiny(regions=(Region("soil", 0, 0, 10, 8, False, 0.0),)))
        assert np.all(w.labels == BACKGROUND)

    def test_deterministic(self):
        a, b = generate_field(tiny()), generate_field(tiny())
        assert np.array_equal(a.orthophoto, b.orthophoto)
        assert np.array_equal(a.labels, b.labels)
        assert a.content_hash() == b.content_hash()

    def test_seed_changes_output(self):
        assert generate_field(tiny(seed=1)).content_hash() != generate_field(tiny(seed=2)).content_hash()

    def test_dims_and_values(self):
        w = generate_field(tiny())
        assert w.orthophoto.shape == (400, 500, 3) and w.orthophoto.dtype == np.uint8
        assert w.labels.shape == (400, 500)
        assert set(np.unique(w.labels)) <= {BACKGROUND, CROP, WEED}

    def test_immutable(self):
        w = generate_field(tiny())
        with pytest.raises(ValueError):
            w.labels[0, 0] = 1

    def test_crop_area_matches_disc_estimate(self):
        # rows 1 m apart over a 10 m square, plants every 0.5 m, no jitter or weeds
        spec = FieldSpec(width_m=10.0, height_m=10.0, row_spacing_m=1.0, plant_spacing_m=0.5,
                         plant_radius_m=0.1, plant_jitter=0.0, weed_density=0.0, seed=0)
        w = generate_field(spec)
        n_plants = 10 * 20
        analytic = n_plants * math.pi * 0.1**2 / 100.0
        frac = float(np.mean(w.labels == CROP))
        assert abs(frac - analytic) <= 0.2 * analytic

    def test_weeds_overwrite_crops(self):
        spec = tiny(weed_density=5.0, plant_radius_m=0.15)
        w = generate_field(spec)
        rng = np.random.default_rng(spec.seed)
        crop = np.zeros(w.labels.shape, bool)
        from activescan.worldgen import _stamp_disc
        for x, y, r in plant_positions(spec, rng):
            _stamp_disc(crop, x * 50, y * 50, r * 50)
        # every crop disc pixel is crop or weed, never soil
        assert np.all(w.labels[crop] != BACKGROUND)
        assert np.any(w.labels[crop] == WEED)

    def test_class_colors_near_means(self):
        colors = ColorModel()
        w = generate_field(tiny(weed_density=2.0, plant_radius_m=0.12))
        for label in (BACKGROUND, CROP, WEED):
            mean = w.orthophoto[w.labels == label].reshape(-1, 3).mean(axis=0)
            assert np.all(np.abs(mean - np.array(colors.mean(label))) < colors.noise_sigma)

    def test_regions_control_content(self, small_world, small_spec):
        veg, bare = small_spec.regions
        assert region_vegetation(small_world, veg) > 0.3
        # plant discs centered just left of the border may spill a few pixels across
        assert region_vegetation(small_world, bare) < 1e-3

    def test_region_draws_do_not_shift_others(self):
        a = tiny(regions=(Region("l", 0, 0, 5, 8, True, 0.0), Region("r", 5, 0, 10, 8, True, 0.0)))
        b = tiny(regions=(Region("l", 0, 0, 5, 8, True, 0.0), Region("r", 5, 0, 10, 8, False, 0.0)))
        la, lb = generate_field(a).labels, generate_field(b).labels
        assert np.array_equal(la[:, :240] == CROP, lb[:, :240] == CROP)

    def test_soil_texture_is_brightness_only(self):
        w = generate_field(tiny(soil_texture=0.2, regions=(Region("s", 0, 0, 10, 8, False, 0.0),)))
        mean = w.orthophoto.reshape(-1, 3).mean(axis=0)
        assert np.all(np.abs(mean - np.array(ColorModel().soil)) < 12)


class TestLoad:
    def write_pair(self, tmp_path, ortho, labels):
        op, lp = tmp_path / "o.png", tmp_path / "l.png"
        Image.fromarray(ortho, "RGB").save(op)
        Image.fromarray(labels, "L").save(lp)
        return op, lp

    def test_happy_path(self, tmp_path, rng):
        ortho = rng.integers(0, 256, (100, 100, 3), dtype=np.uint8)
        labels = rng.integers(0, 3, (100, 100), dtype=np.uint8)
        w = load_field(*self.write_pair(tmp_path, ortho, labels), gsd=0.02)
        assert np.array_equal(w.orthophoto, ortho) and np.array_equal(w.labels, labels)
        assert w.frame.raster_width == 100

    def test_bad_label_value(self, tmp_path):
        labels = np.zeros((10, 10), np.uint8)
        labels[3, 3] = 3
        with pytest.raises(LabelValueError, match=r"\[3\]"):
            load_field(*self.write_pair(tmp_path, np.zeros((10, 10, 3), np.uint8), labels), gsd=0.02)

    def test_dimension_mismatch_names_shapes(self, tmp_path):
        with pytest.raises(DimensionMismatchError, match=r"\(10, 12\).*\(10, 10\)"):
            load_field(*self.write_pair(tmp_path, np.zeros((10, 12, 3), np.uint8), np.zeros((10, 10), np.uint8)), gsd=0.02)

    def test_unreadable(self, tmp_path):
        bad = tmp_path / "x.png"
        bad.write_text("not a png")
        with pytest.raises(FieldReadError):
            load_field(bad, bad, gsd=0.02)

    def test_save_load_round_trip(self, tmp_path):
        w = generate_field(tiny())
        save_field(w, tmp_path / "o.png", tmp_path / "l.png")
        back = load_field(tmp_path / "o.png", tmp_path / "l.png", gsd=w.frame.gsd)
        assert back.content_hash() == w.content_hash()
