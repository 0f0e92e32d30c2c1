import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sounderfeit import dataset as ds

finite_floats = st.floats(min_value=-100.0, max_value=100.0,
                          allow_nan=False, allow_infinity=False)


class TestRoundTrips:
    @given(arrays(np.float64, st.integers(2, 64), elements=finite_floats))
    def test_differentiate_integrate(self, x):
        d = ds.differentiate(x)
        y = ds.integrate_diffs(d, x0=x[0])
        assert np.max(np.abs(y - x)) < 1e-9

    @given(arrays(np.float64, st.integers(1, 16),
                  elements=st.floats(0.0, 128.0)))
    def test_scale_unscale(self, raw):
        s = ds.scale_params(raw)
        assert np.all(s >= -1.0) and np.all(s <= 1.0)
        assert np.max(np.abs(ds.unscale_params(s) - raw)) < 1e-12

    def test_scale_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ds.scale_params([129.0])
        with pytest.raises(ValueError):
            ds.scale_params([-0.1])

    @given(arrays(np.float64, (8, 16), elements=finite_floats))
    def test_norm_apply_unapply(self, mat):
        stats = ds.fit_norm_stats(mat)
        n = ds.apply_norm(mat, stats)
        back = ds.unapply_norm(n, stats)
        assert np.max(np.abs(back - mat)) < 1e-9

    def test_norm_std_floor(self):
        mat = np.zeros((4, 5))
        stats = ds.fit_norm_stats(mat)
        assert np.all(stats.std >= ds.STD_FLOOR)

    def test_fit_norm_stats_needs_windows(self):
        with pytest.raises(ds.CorpusError):
            ds.fit_norm_stats(np.zeros((1, 5)))


class TestWindowing:
    def test_extract_length(self):
        sig = np.arange(1000.0)
        w = ds.extract_last_two_periods(sig)
        assert w.shape == (201,)
        assert w[0] == 799.0

    def test_extract_too_short(self):
        with pytest.raises(ValueError):
            ds.extract_last_two_periods(np.zeros(200))

    def test_window_rms_demeaned(self):
        assert ds.window_rms(np.full(201, 5.0)) == 0.0

    def test_phase_align_recovers_shift(self):
        t = np.arange(600)
        tail = np.sin(2 * np.pi * t / 100.0)
        ref = tail[-201 - 17:-17] - np.mean(tail[-201 - 17:-17])
        cand = tail[-201:] - tail[-201:].mean()
        aligned, lag = ds.phase_align(cand, ref, tail)
        assert lag == 17
        assert np.max(np.abs(aligned - ref)) < 1e-9

    def test_phase_align_needs_context(self):
        with pytest.raises(ValueError):
            ds.phase_align(np.zeros(201), np.zeros(201), np.zeros(250))


class TestBowed1:
    def test_step16_counts(self, bowed1_small):
        assert 1 <= len(bowed1_small) <= 81
        assert len(bowed1_small) == 78

    def test_fields_consistent(self, bowed1_small):
        c = bowed1_small
        n = len(c)
        assert c.raw.shape == (n, 201)
        assert c.diffed.shape == (n, 200)
        assert c.normalized.shape == (n, 200)
        assert c.params.shape == (n, 4)
        assert c.reference_window.shape == (201,)

    def test_normalization_identity(self, bowed1_small):
        c = bowed1_small
        norm = ds.apply_norm(c.diffed.astype(np.float64), c.stats)
        assert np.max(np.abs(norm - c.normalized)) < 1e-5
        assert np.max(np.abs(norm.mean(axis=0))) < 1e-6

    def test_no_silent_windows(self, bowed1_small):
        for w in bowed1_small.raw:
            assert ds.window_rms(w) > ds.RMS_SILENCE

    def test_cond_labels_scaled(self, bowed1_small):
        y = bowed1_small.cond_labels(2)
        assert y.shape == (len(bowed1_small), 2)
        assert np.all(np.abs(y) <= 1.0)
        back = ds.unscale_params(y)
        assert np.max(np.abs(back[:, 0] - bowed1_small.params[:, 0])) < 1e-4

    def test_window_accessor(self, bowed1_small):
        w = bowed1_small.window(0)
        assert w.raw.shape == (201,)
        assert w.diffed.shape == (200,)
        assert w.params_scaled.shape == (2,)

    def test_deterministic(self, bowed1_small):
        again = ds.build_bowed1(grid_step=16)
        assert again.content_hash() == bowed1_small.content_hash()

    def test_subset_keeps_stats(self, bowed1_small):
        half = bowed1_small.subset(bowed1_small.params[:, 2] < 64)
        assert len(half) < len(bowed1_small)
        assert np.all(half.params[:, 2] < 64)
        assert half.stats == bowed1_small.stats


@pytest.fixture(scope="module")
def small2():
    return ds.build_bowed2(50, seed=3)


class TestBowed2:
    def test_count(self, small2):
        assert len(small2) == 50

    def test_labels_in_range(self, small2):
        assert np.all(small2.params[:, 0] >= 0)
        assert np.all(small2.params[:, 0] <= 128)
        assert np.all(small2.params[:, 2] >= 0)
        assert np.all(small2.params[:, 2] <= 128)

    def test_deterministic(self, small2):
        again = ds.build_bowed2(50, seed=3)
        assert again.content_hash() == small2.content_hash()

    def test_seed_changes_content(self, small2):
        other = ds.build_bowed2(50, seed=4)
        assert other.content_hash() != small2.content_hash()


class TestFileFormat:
    def test_roundtrip_bit_exact(self, bowed1_small, tmp_path):
        p = tmp_path / "c.snd"
        ds.save_corpus(bowed1_small, p)
        expect = ds._HEADER.size + 4 * (200 + 200 + 201) \
            + 4 * len(bowed1_small) * (201 + 200 + 200 + 4)
        assert p.stat().st_size == expect
        loaded = ds.load_corpus(p)
        assert loaded.kind == bowed1_small.kind
        assert loaded.seed == bowed1_small.seed
        assert np.array_equal(loaded.raw, bowed1_small.raw)
        assert np.array_equal(loaded.diffed, bowed1_small.diffed)
        assert np.array_equal(loaded.normalized, bowed1_small.normalized)
        assert np.array_equal(loaded.params, bowed1_small.params)
        assert np.array_equal(loaded.reference_window,
                              bowed1_small.reference_window)

    def test_save_load_save_identical(self, bowed1_small, tmp_path):
        p1, p2 = tmp_path / "a.snd", tmp_path / "b.snd"
        ds.save_corpus(bowed1_small, p1)
        ds.save_corpus(ds.load_corpus(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, bowed1_small, tmp_path):
        p = tmp_path / "c.snd"
        ds.save_corpus(bowed1_small, p)
        b = bytearray(p.read_bytes())
        b[:4] = b"XXXX"
        p.write_bytes(bytes(b))
        with pytest.raises(ds.FormatError):
            ds.load_corpus(p)

    def test_truncated(self, bowed1_small, tmp_path):
        p = tmp_path / "c.snd"
        ds.save_corpus(bowed1_small, p)
        p.write_bytes(p.read_bytes()[:-5])
        with pytest.raises(ds.FormatError):
            ds.load_corpus(p)

    def test_trailing_bytes(self, bowed1_small, tmp_path):
        p = tmp_path / "c.snd"
        ds.save_corpus(bowed1_small, p)
        p.write_bytes(p.read_bytes() + b"\x00")
        with pytest.raises(ds.FormatError):
            ds.load_corpus(p)


@pytest.mark.slow
@settings(deadline=None, max_examples=5)
@given(st.integers(0, 2**32 - 1))
def test_bowed2_any_seed_succeeds(seed):
    c = ds.build_bowed2(5, seed=seed)
    assert len(c) == 5
