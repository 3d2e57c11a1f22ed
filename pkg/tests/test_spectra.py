import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ir2mol.spectra import (
    ABSORBANCE,
    TRANSMITTANCE,
    RawSpectrum,
    Spectrum,
    SpectrumError,
    TransmittanceClampWarning,
    WavenumberGrid,
    default_grid,
    from_absorbance,
    interpolate,
    l2_normalize,
    load_spectra_jsonl,
    read_raw_csv,
    save_spectra_jsonl,
    to_absorbance,
)


def tspec(values, grid=None, mode=TRANSMITTANCE):
    values = np.asarray(values, dtype=float)
    grid = grid or WavenumberGrid(500.0, 4000.0, len(values))
    return Spectrum(grid=grid, values=values, mode=mode, id="t")


class TestGrid:
    def test_points_are_uniform(self):
        g = WavenumberGrid(500.0, 4000.0, 8)
        pts = g.points()
        assert pts[0] == 500.0 and pts[-1] == 4000.0
        assert np.allclose(np.diff(pts), g.step)
        assert g.point(3) == pts[3]

    def test_default_grid(self):
        g = default_grid()
        assert (g.start, g.end, g.count) == (500.0, 4000.0, 3501)
        assert g.step == 1.0

    @pytest.mark.parametrize("start,end,count", [(4000, 500, 10), (500, 500, 10), (500, 4000, 1)])
    def test_invalid_grid(self, start, end, count):
        with pytest.raises(SpectrumError):
            WavenumberGrid(start, end, count)


class TestToAbsorbance:
    def test_unit_transmittance_is_zero(self):
        out = to_absorbance(tspec([1.0, 1.0]))
        assert out.mode == ABSORBANCE
        assert list(out.values) == [0.0, 0.0]

    def test_one_percent_is_two(self):
        out = to_absorbance(tspec([0.01, 0.01]))
        assert out.values[0] == pytest.approx(2.0, abs=1e-12)

    def test_zero_clamps_to_ten(self):
        # the 1e-10 floor makes T=0 land exactly on A=10
        out = to_absorbance(tspec([0.0, 0.5]))
        assert out.values[0] == 10.0

    def test_bitwise_matches_scalar_reference(self):
        rng = np.random.RandomState(3)
        t = rng.uniform(0.0, 1.0, 2000)
        t[0] = 0.0
        out = to_absorbance(tspec(t))
        ref = np.array([-math.log10(max(x, 1e-10)) for x in t])
        assert np.array_equal(out.values, ref)

    def test_monotone_decreasing_in_t(self):
        t = np.linspace(1e-9, 1.0, 100)
        out = to_absorbance(tspec(t)).values
        assert np.all(np.diff(out) <= 0)

    def test_round_trip_above_floor(self):
        rng = np.random.RandomState(5)
        t = rng.uniform(1e-9, 1.0, 300)
        back = from_absorbance(to_absorbance(tspec(t)))
        assert np.allclose(back.values, t, rtol=1e-12)

    def test_clamp_above_one_warns(self):
        with pytest.warns(TransmittanceClampWarning, match="2 transmittance"):
            out = to_absorbance(tspec([1.2, 0.5, 1.01]))
        assert out.values[0] == 0.0 and out.values[2] == 0.0

    def test_rejects_negative_with_index(self):
        with pytest.raises(SpectrumError, match="index 2"):
            tspec([0.5, 0.4, -0.1])

    def test_rejects_nan_with_index(self):
        with pytest.raises(SpectrumError, match="index 1"):
            tspec([0.5, float("nan")])

    def test_rejects_wrong_mode(self):
        with pytest.raises(SpectrumError, match="transmittance"):
            to_absorbance(tspec([0.5, 0.5], mode=ABSORBANCE))

    def test_grid_preserved_exactly(self):
        g = WavenumberGrid(500.25, 3999.75, 7)
        out = to_absorbance(tspec([0.5] * 7, grid=g))
        assert out.grid is g or out.grid == g


class TestInterpolate:
    def test_constant_data(self):
        r = RawSpectrum(points=((500.0, 1.0), (4000.0, 1.0)), mode=TRANSMITTANCE)
        out = interpolate(r, WavenumberGrid(500.0, 4000.0, 11))
        assert np.allclose(out.values, 1.0)

    def test_two_points_force_a_line(self):
        r = RawSpectrum(points=((500.0, 0.0), (4000.0, 1.0)), mode=ABSORBANCE)
        out = interpolate(r, WavenumberGrid(500.0, 4000.0, 8))
        assert np.allclose(out.values, np.arange(8) / 7.0, atol=1e-15)

    def test_cubic_kind_reproduces_a_cubic(self):
        # evaluate the generating cubic directly as the oracle
        rng = np.random.RandomState(11)
        coeffs = [2.0, 1.5e-3, -4e-7, 5e-11]

        def cubic(w):
            return coeffs[0] + coeffs[1] * w + coeffs[2] * w**2 + coeffs[3] * w**3

        knots = np.sort(rng.uniform(500.0, 4000.0, 8))
        knots = np.concatenate([[500.0], knots, [4000.0]])
        r = RawSpectrum(points=tuple((w, cubic(w)) for w in knots), mode=ABSORBANCE)
        g = WavenumberGrid(500.0, 4000.0, 1001)
        out = interpolate(r, g, kind="cubic")
        assert np.max(np.abs(out.values - cubic(g.points()))) <= 1e-9

    @pytest.mark.parametrize("kind", ["pchip", "cubic", "linear"])
    def test_idempotent_on_grid(self, kind):
        rng = np.random.RandomState(7)
        g = WavenumberGrid(500.0, 4000.0, 64)
        values = np.abs(rng.randn(64))
        r = RawSpectrum(points=tuple(zip(g.points(), values)), mode=ABSORBANCE)
        out = interpolate(r, g, kind=kind)
        assert np.allclose(out.values, values, atol=1e-12)

    def test_knots_reproduced(self):
        rng = np.random.RandomState(13)
        xs = np.linspace(500.0, 4000.0, 36)
        ys = np.abs(rng.randn(36))
        r = RawSpectrum(points=tuple(zip(xs, ys)), mode=ABSORBANCE)
        g = WavenumberGrid(500.0, 4000.0, 36)
        out = interpolate(r, g, kind="pchip")
        assert np.allclose(out.values, ys, atol=1e-12)

    def test_edge_clamped_outside_support(self):
        r = RawSpectrum(points=((1000.0, 0.3), (2000.0, 0.8)), mode=ABSORBANCE)
        out = interpolate(r, WavenumberGrid(500.0, 4000.0, 8))
        assert out.values[0] == 0.3 and out.values[-1] == 0.8

    def test_negative_artifacts_floored(self):
        # a steep pchip-unfriendly shape evaluated with the cubic spline
        xs = [500.0, 1000.0, 1010.0, 1500.0, 4000.0]
        ys = [0.0, 0.0, 1.0, 0.0, 0.0]
        r = RawSpectrum(points=tuple(zip(xs, ys)), mode=ABSORBANCE)
        out = interpolate(r, WavenumberGrid(500.0, 4000.0, 701), kind="cubic")
        assert np.min(out.values) >= 0.0

    def test_rejects_disjoint_support(self):
        r = RawSpectrum(points=((100.0, 1.0), (200.0, 1.0)), mode=ABSORBANCE)
        with pytest.raises(SpectrumError, match="does not overlap"):
            interpolate(r, WavenumberGrid(500.0, 4000.0, 10))

    def test_rejects_fewer_than_two_points(self):
        with pytest.raises(SpectrumError, match="at least 2"):
            RawSpectrum(points=((500.0, 1.0),), mode=ABSORBANCE)

    def test_raw_points_sorted_and_deduped(self):
        r = RawSpectrum(points=((4000.0, 1.0), (500.0, 0.5)), mode=ABSORBANCE)
        assert r.wavenumbers[0] == 500.0
        with pytest.raises(SpectrumError, match="duplicate wavenumber"):
            RawSpectrum(points=((500.0, 1.0), (500.0, 0.5)), mode=ABSORBANCE)


class TestNormalize:
    def test_three_four_five(self):
        out = l2_normalize(tspec([3.0, 4.0], mode=ABSORBANCE))
        assert np.allclose(out.values, [0.6, 0.8], atol=1e-15)

    def test_already_unit(self):
        out = l2_normalize(tspec([1.0, 0.0, 0.0], mode=ABSORBANCE))
        assert list(out.values) == [1.0, 0.0, 0.0]

    @given(st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=30, deadline=None)
    def test_unit_norm_property(self, seed):
        rng = np.random.RandomState(seed)
        values = np.abs(rng.randn(64)) + 1e-6
        out = l2_normalize(tspec(values, mode=ABSORBANCE))
        assert abs(np.linalg.norm(out.values) - 1.0) <= 1e-12

    def test_zero_rejected(self):
        with pytest.raises(SpectrumError, match="all-zero"):
            l2_normalize(tspec([0.0, 0.0], mode=ABSORBANCE))


class TestIO:
    def test_jsonl_round_trip(self, tmp_path, toy_db_entries):
        path = tmp_path / "db.jsonl"
        save_spectra_jsonl(toy_db_entries, path)
        loaded = load_spectra_jsonl(path)
        assert len(loaded) == len(toy_db_entries)
        for a, b in zip(loaded, toy_db_entries):
            assert a.id == b.id and a.smiles == b.smiles and a.grid == b.grid
            assert np.array_equal(a.values, b.values)

    def test_jsonl_length_mismatch_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = {"id": "a", "smiles": None, "mode": "absorbance",
                "grid": {"start": 500, "end": 4000, "count": 3}, "values": [1, 2, 3]}
        bad = dict(good, values=[1, 2])
        path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(SpectrumError, match=":2:"):
            load_spectra_jsonl(path)

    def test_raw_csv_with_sidecar_mode(self, tmp_path):
        csv_path = tmp_path / "raw.csv"
        csv_path.write_text("wavenumber,intensity\n500,0.5\n1000,0.7\n")
        (tmp_path / "raw.csv.mode").write_text("transmittance\n")
        raw = read_raw_csv(csv_path)
        assert raw.mode == TRANSMITTANCE and len(raw.points) == 2

    def test_raw_csv_malformed_row_names_row(self, tmp_path):
        csv_path = tmp_path / "raw.csv"
        csv_path.write_text("wavenumber,intensity\n500,0.5\nxx,0.7\n")
        with pytest.raises(SpectrumError, match=":3:"):
            read_raw_csv(csv_path, mode=TRANSMITTANCE)

    def test_raw_csv_requires_header(self, tmp_path):
        csv_path = tmp_path / "raw.csv"
        csv_path.write_text("500,0.5\n1000,0.7\n")
        with pytest.raises(SpectrumError, match="header"):
            read_raw_csv(csv_path, mode=TRANSMITTANCE)
