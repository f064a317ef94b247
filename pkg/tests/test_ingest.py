import numpy as np
import pytest

from pdhw.ingest import (IN_AIR, ON_SURFACE, PRESSURE, PenRecording,
                         RecordingError, parse_recording, project_modality,
                         segment_strokes, synthesize_cohort, write_recording,
                         recording_filename)


def make_rec(pen_state, subject="s1", task=1, pressure=None):
    n = len(pen_state)
    b = np.asarray(pen_state)
    if pressure is None:
        pressure = np.where(b == 1, 500, 0)
    return PenRecording(subject, task, np.arange(n) * 3, np.arange(n) * 2,
                        np.arange(n) * 10, b, pressure)


class TestParse:
    def test_direct_parse(self, tmp_path):
        f = tmp_path / "s1__2.svc"
        f.write_text("3\n10 20 0 1 0 0 500\n11 21 10 1 0 0 510\n12 22 20 0 0 0 0\n")
        rec = parse_recording(f)
        assert len(rec) == 3
        assert rec.subject_id == "s1" and rec.task_id == 2
        assert list(rec.pressure) == [500, 510, 0]

    def test_count_mismatch(self, tmp_path):
        f = tmp_path / "s1__1.svc"
        f.write_text("2\n0 0 0 1 0 0 5\n1 0 10 1 0 0 5\n2 0 20 1 0 0 5\n")
        with pytest.raises(RecordingError, match="declared 2"):
            parse_recording(f)

    def test_in_air_pressure_clamped(self, tmp_path):
        f = tmp_path / "s1__1.svc"
        f.write_text("3\n0 0 0 1 0 0 5\n1 0 10 0 0 0 12\n2 0 20 1 0 0 5\n")
        with pytest.warns(UserWarning, match="clamped"):
            rec = parse_recording(f)
        assert rec.pressure[1] == 0

    def test_malformed_line_reports_number(self, tmp_path):
        f = tmp_path / "s1__1.svc"
        f.write_text("2\n0 0 0 1 0 0 5\n1 0 10 1 0 0\n")
        with pytest.raises(RecordingError, match="line 3"):
            parse_recording(f)

    def test_duplicate_timestamps_keep_last(self, tmp_path):
        f = tmp_path / "s1__1.svc"
        f.write_text("4\n0 0 0 1 0 0 5\n7 7 10 1 0 0 9\n8 8 10 1 0 0 11\n9 9 20 1 0 0 5\n")
        rec = parse_recording(f)
        assert len(rec) == 3
        assert rec.x[1] == 8 and rec.pressure[1] == 11

    def test_round_trip(self, tmp_path):
        f = tmp_path / "s1__3.svc"
        orig = "3\n10 20 0 1 0 0 500\n11 21 10 0 0 0 0\n12 22 20 1 0 0 510\n"
        f.write_text(orig)
        rec = parse_recording(f)
        g = tmp_path / "copy__3.svc"
        write_recording(rec, g)
        norm = lambda s: [ln.split() for ln in s.strip().splitlines()]
        assert norm(g.read_text()) == norm(orig)


class TestSegment:
    def test_basic_partition(self):
        rec = make_rec([1, 1, 0, 0, 1])
        segs = segment_strokes(rec)
        assert [(s.kind, s.start_index, s.end_index) for s in segs] == [
            (ON_SURFACE, 0, 1), (IN_AIR, 2, 3), (ON_SURFACE, 4, 4)]

    def test_all_down_single_segment(self):
        segs = segment_strokes(make_rec([1, 1, 1, 1]))
        assert len(segs) == 1 and segs[0].kind == ON_SURFACE

    def test_leading_air(self):
        segs = segment_strokes(make_rec([0, 1, 1, 0]))
        assert [(s.kind, s.start_index, s.end_index) for s in segs] == [
            (IN_AIR, 0, 0), (ON_SURFACE, 1, 2), (IN_AIR, 3, 3)]

    def test_partition_covers_everything(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            b = rng.integers(0, 2, size=30)
            b[:2] = 1
            rec = make_rec(b)
            segs = segment_strokes(rec)
            total = sum(s.end_index - s.start_index + 1 for s in segs)
            assert total == len(rec)
            for a, z in zip(segs, segs[1:]):
                assert a.kind != z.kind


class TestModality:
    def test_pen_always_down_empty_air(self):
        view = project_modality(make_rec([1, 1, 1]), IN_AIR)
        assert len(view) == 0 and view.strokes == []

    def test_pressure_view_is_on_surface_samples(self):
        rec = make_rec([1, 1, 0, 1])
        view = project_modality(rec, PRESSURE)
        assert len(view) == 3
        assert np.allclose(view.p, 500 / 1024)

    def test_on_surface_channels(self):
        rec = make_rec([1, 0, 1, 1])
        view = project_modality(rec, ON_SURFACE)
        assert np.array_equal(view.x, rec.x[rec.pen_state == 1].astype(float))
        assert view.strokes == [(0, 0), (1, 2)]

    def test_disjoint_union(self):
        rec = make_rec([1, 1, 0, 1, 0, 0, 1, 1])
        surf = project_modality(rec, ON_SURFACE)
        air = project_modality(rec, IN_AIR)
        assert len(surf) + len(air) == len(rec)


class TestSynthesis:
    def test_deterministic(self):
        a = synthesize_cohort(2, 2, seed=9)
        b = synthesize_cohort(2, 2, seed=9)
        assert len(a) == len(b) == 28
        for ra, rb in zip(a, b):
            assert ra.subject_id == rb.subject_id
            assert np.array_equal(ra.x, rb.x)
            assert np.array_equal(ra.pressure, rb.pressure)

    def test_cohort_shape(self):
        recs = synthesize_cohort(20, 20, seed=1)
        assert len(recs) == 280
        subjects = {r.subject_id for r in recs}
        assert len(subjects) == 40

    def test_pd_tremor_spectral_peak(self):
        # periodogram oracle on detrended x-velocity of PD recordings
        recs = [r for r in synthesize_cohort(5, 1, seed=3) if r.label == "PD"]
        for rec in recs[:10]:
            v = np.diff(rec.x.astype(float)) / np.diff(rec.t / 1000.0)
            v = v - np.polyval(np.polyfit(np.arange(len(v)), v, 1), np.arange(len(v)))
            freqs = np.fft.rfftfreq(len(v), d=0.01)
            power = np.abs(np.fft.rfft(v)) ** 2
            peak = freqs[np.argmax(power[1:]) + 1]
            assert 4.5 <= peak <= 7.5, peak

    def test_pd_slower_on_surface(self):
        recs = synthesize_cohort(6, 6, seed=11)
        speeds = {"PD": [], "H": []}
        for rec in recs:
            mask = rec.pen_state == 1
            x, y, t = rec.x[mask], rec.y[mask], rec.t[mask] / 1000.0
            v = np.hypot(np.diff(x), np.diff(y)) / np.diff(t)
            speeds[rec.label].append(np.mean(v[np.isfinite(v)]))
        assert np.mean(speeds["PD"]) < np.mean(speeds["H"])

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            synthesize_cohort(0, 5, seed=1)

    def test_filename_convention(self):
        assert recording_filename("pd001", 7) == "pd001__7.svc"
