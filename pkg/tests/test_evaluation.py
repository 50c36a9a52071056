import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import constant_record, sine_record, write_csv
from ecg_imagegen.core.config import DistortionConfig
from ecg_imagegen.models import STANDARD_LEADS, ArtifactBox, EcgRecord, GroundTruthMeta, LeadLayout, RasterImage
from ecg_imagegen.services.evaluation import (
    EmptyTraceError,
    EvalReport,
    EvaluationError,
    LeadScore,
    SeriesSizeError,
    UndefinedReferenceError,
    evaluate_directory,
    evaluate_record,
    extract_trace,
    mse,
    occluded_columns,
    remove_grid,
    snr_db,
)
from ecg_imagegen.services.grid_renderer import plot_record, render_blank_paper
from ecg_imagegen.services.pipeline import generate_batch


def sine_mix_record(seed: int, fs: float = 500.0, duration_s: float = 10.0) -> EcgRecord:
    """Every lead a sum of one to three sinusoids up to 40 Hz, peak at most 2 mV"""
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(fs * duration_s))) / fs
    rows = []
    for _ in STANDARD_LEADS:
        k = int(rng.integers(1, 4))
        freqs = rng.uniform(0.5, 40.0, k)
        amps = rng.uniform(0.1, 1.0, k)
        phases = rng.uniform(0.0, 2 * np.pi, k)
        wave = sum(a * np.sin(2 * np.pi * f * t + p) for a, f, p in zip(amps, freqs, phases))
        rows.append(wave * rng.uniform(0.2, 2.0) / np.abs(wave).max())
    return EcgRecord(STANDARD_LEADS, np.vstack(rows), fs, f"mix{seed}")


def lead_snrs(page, polylines, rec, spec):
    mask = remove_grid(page, spec)
    out = {}
    for poly in polylines:
        if poly.kind == 'pulse':
            continue
        region = (*poly.x_range_px, *poly.band_px)
        est = extract_trace(mask, region, poly.baseline_px, spec, poly.fs, poly.duration_s)
        first = int(round(poly.t0_s * poly.fs))
        out[(poly.lead_name, poly.kind)] = snr_db(rec.lead(poly.lead_name)[first:first + len(est)], est)
    return out


class TestMetrics:
    def test_exact_estimate(self):
        assert snr_db([1.0, -2.0, 3.0], [1.0, -2.0, 3.0]) == math.inf

    def test_known_values(self):
        assert snr_db([1.0, 1.0], [0.0, 0.0]) == pytest.approx(0.0)
        assert snr_db(np.ones(100), np.full(100, 0.9)) == pytest.approx(20.0)

    def test_mse(self):
        value, root = mse([1.0, 2.0, 3.0], [1.0, 2.0, 5.0])
        assert value == pytest.approx(4.0 / 3.0)
        assert root == pytest.approx(math.sqrt(4.0 / 3.0))

    @pytest.mark.parametrize("ref, est", [([1.0, 2.0], [1.0]), ([], [])])
    def test_size_errors(self, ref, est):
        with pytest.raises(SeriesSizeError):
            snr_db(ref, est)
        with pytest.raises(SeriesSizeError):
            mse(ref, est)

    def test_zero_reference(self):
        with pytest.raises(UndefinedReferenceError):
            snr_db([0.0, 0.0], [0.1, 0.0])


class TestDigitizer:
    def test_blank_paper_has_no_trace(self, small_paper):
        assert not remove_grid(render_blank_paper(small_paper), small_paper).any()

    def test_trace_pixels_are_found(self, small_paper, record):
        page, polylines = plot_record(render_blank_paper(small_paper), record, LeadLayout(), small_paper)
        mask = remove_grid(page, small_paper)
        pts = np.rint(polylines[0].points).astype(int)
        assert mask[pts[:, 1], pts[:, 0]].all()

    def test_flat_line(self, small_paper):
        mask = np.zeros((100, 200), dtype=bool)
        mask[39:42, :] = True
        out = extract_trace(mask, (10.0, 110.0, 0.0, 99.0), 50.0, small_paper, 10.0, 1.0)
        assert out.shape == (10,)
        assert np.allclose(out, 10.0 / small_paper.px_per_mv)

    def test_even_stroke_bias(self, small_paper):
        spec = replace(small_paper, trace_width_px=2)
        mask = np.zeros((100, 200), dtype=bool)
        mask[49:51, :] = True
        out = extract_trace(mask, (10.0, 110.0, 0.0, 99.0), 49.0, spec, 10.0, 1.0)
        assert np.allclose(out, 0.0)

    def test_occluded_columns_are_interpolated(self, small_paper):
        mask = np.zeros((100, 200), dtype=bool)
        mask[40, :] = True
        mask[40, 30:51] = False
        mask[10, 30:51] = True
        occluded = np.zeros(200, dtype=bool)
        occluded[30:51] = True
        out = extract_trace(mask, (10.0, 110.0, 0.0, 99.0), 40.0, small_paper, 10.0, 1.0, occluded)
        assert np.allclose(out, 0.0)

    def test_empty_region(self, small_paper):
        with pytest.raises(EmptyTraceError):
            extract_trace(np.zeros((100, 200), dtype=bool), (10.0, 110.0, 0.0, 99.0), 50.0, small_paper, 10.0, 1.0)

    def test_rendered_sine_is_recovered(self, small_paper, record):
        page, polylines = plot_record(render_blank_paper(small_paper), record, LeadLayout(), small_paper)
        mask = remove_grid(page, small_paper)
        for poly in polylines:
            if poly.kind == 'pulse':
                continue
            region = (*poly.x_range_px, *poly.band_px)
            est = extract_trace(mask, region, poly.baseline_px, small_paper, poly.fs, poly.duration_s)
            first = int(round(poly.t0_s * poly.fs))
            ref = record.lead(poly.lead_name)[first:first + len(est)]
            assert np.corrcoef(ref, est)[0, 1] > 0.99

    def test_constant_millivolt(self, paper_200):
        rec = constant_record(1.0)
        page, polylines = plot_record(render_blank_paper(paper_200), rec, LeadLayout(), paper_200)
        mask = remove_grid(page, paper_200)
        for poly in (p for p in polylines if p.kind != 'pulse'):
            region = (*poly.x_range_px, *poly.band_px)
            est = extract_trace(mask, region, poly.baseline_px, paper_200, poly.fs, poly.duration_s)
            assert abs(float(est.mean()) - 1.0) < 0.01

    @pytest.mark.parametrize("freq_hz, amp_mv", [(5.0, 0.5), (20.0, 0.5), (40.0, 0.5), (10.0, 2.0), (40.0, 2.0)])
    def test_steep_strokes(self, paper_200, freq_hz, amp_mv):
        rec = sine_record(freq_hz=freq_hz, amp_mv=amp_mv)
        page, polylines = plot_record(render_blank_paper(paper_200), rec, LeadLayout(), paper_200)
        snrs = lead_snrs(page, polylines, rec, paper_200)
        assert len(snrs) == 13
        assert min(snrs.values()) >= 20.0, snrs

    def test_neighbouring_rows_stay_out(self, paper_200):
        # rows alternate between plateaus near +2 mV and -2 mV, so strokes meet at the band borders
        t = np.arange(5000) / 500.0
        plateau = 1.8 + 0.2 * np.cos(2 * np.pi * 0.7 * t)
        rows = [plateau if name in ('I', 'aVR', 'V1', 'V4', 'III', 'aVF', 'V3', 'V6') else -plateau
                for name in STANDARD_LEADS]
        rec = EcgRecord(STANDARD_LEADS, np.vstack(rows), 500.0, "plateaus")
        page, polylines = plot_record(render_blank_paper(paper_200), rec, LeadLayout(rhythm_lead=None), paper_200)
        assert min(lead_snrs(page, polylines, rec, paper_200).values()) >= 20.0

    def test_occluded_columns_from_boxes(self):
        box = ArtifactBox('printed', (10.0, 5.0, 20.0, 15.0), 'x')
        cols = occluded_columns([box], (0.0, 10.0), 30)
        assert np.flatnonzero(cols).tolist() == list(range(10, 20))
        assert not occluded_columns([box], (16.0, 30.0), 30).any()


class TestEvalReport:
    @pytest.fixture
    def report(self):
        scores = [LeadScore("r", f"L{i}", 'lead', 10, snr, 0.01, 0.1)
                  for i, snr in enumerate([10.2, 10.7, 12.1, math.inf, None])]
        scores.append(LeadScore("r", "L5", 'lead', 0, None, None, None, "no trace"))
        return EvalReport(leads=scores)

    def test_statistics(self, report):
        summary = report.summary()
        assert report.mean_snr_db == pytest.approx(11.0)
        assert summary['snr_db_exact'] == 1
        assert summary['snr_db_undefined'] == 2
        assert summary['lead_failures'] == 1
        assert summary['leads'] == 6
        assert summary['mse_mv2_mean'] == pytest.approx(0.01)

    def test_histogram(self, report):
        assert report.histogram() == [(10.0, 11.0, 2), (11.0, 12.0, 0), (12.0, 13.0, 2), (None, None, 2)]
        assert sum(c for _, _, c in report.histogram(0.5)) == len(report.leads)

    def test_only_undefined(self):
        report = EvalReport(leads=[LeadScore("r", "I", 'lead', 10, None, 0.0, 0.0)])
        assert report.histogram() == [(None, None, 1)]

    def test_empty(self):
        report = EvalReport()
        assert report.histogram() == []
        assert report.mean_snr_db is None

    def test_save(self, report, tmp_path):
        path = report.save(tmp_path / "eval.json")
        with open(path, encoding='utf-8') as f:
            data = json.load(f)
        assert data['summary']['records'] == 1
        assert data['histogram'][-1] == {'bin_low': None, 'bin_high': None, 'count': 2}
        with open(tmp_path / "eval_snr_hist.csv", encoding='utf-8') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['bin_low', 'bin_high', 'count']
        assert rows[1] == ['10', '11', '2']
        assert rows[-1] == ['undefined', 'undefined', '2']


class TestRoundTrip:
    def test_fifty_sine_mix_pages(self, tmp_path, paper_200):
        records = tmp_path / "records"
        records.mkdir()
        for seed in range(50):
            write_csv(records / f"mix{seed:02d}.csv", sine_mix_record(seed))
        cfg = DistortionConfig(master_seed=1, paper=paper_200).without_distortions()
        out = tmp_path / "out"
        manifest = generate_batch(records, out, cfg, workers=4)
        assert manifest['summary']['failed'] == 0

        report = evaluate_directory(out, workers=4)
        assert report.failures == []
        assert len(report.leads) == 50 * 13
        worst = min(report.leads, key=lambda s: s.snr_db)
        assert worst.snr_db >= 20.0, worst
        assert report.mean_snr_db >= 25.0
        assert sum(c for _, _, c in report.histogram()) == 50 * 13

    def test_flat_page(self, tmp_path, paper_200):
        records = tmp_path / "records"
        records.mkdir()
        write_csv(records / "flat.csv", constant_record(0.0))
        out = tmp_path / "out"
        generate_batch(records, out, DistortionConfig(master_seed=1, paper=paper_200).without_distortions())
        report = evaluate_directory(out)
        assert len(report.leads) == 13
        for score in report.leads:
            assert score.snr_db is None and score.error is None
            assert score.mse_mv2 == pytest.approx(0.0, abs=1e-12)
        assert report.histogram() == [(None, None, 13)]

    def test_blank_lead_is_scored_alone(self, tmp_path, clean_config):
        records = tmp_path / "records"
        records.mkdir()
        write_csv(records / "sine.csv", sine_record())
        out = tmp_path / "out"
        generate_batch(records, out, clean_config)
        image_path = out / "00000_sine.png"
        sidecar = GroundTruthMeta.load(out / "00000_sine.json")
        v1 = next(p for p in sidecar.polylines if p.lead_name == 'V1')
        page = RasterImage.load(image_path)
        x0, x1 = int(math.floor(v1.x_range_px[0])) - 2, int(math.ceil(v1.x_range_px[1])) + 2
        y0, y1 = int(math.floor(v1.band_px[0])) - 2, int(math.ceil(v1.band_px[1])) + 2
        page.pixels[y0:y1 + 1, x0:x1 + 1] = clean_config.paper.bg_color
        page.save(image_path)

        scores = evaluate_record(image_path, out / "00000_sine.json", out / "00000_sine_gt.csv")
        blank = [s for s in scores if s.lead == 'V1']
        assert len(blank) == 1
        assert blank[0].snr_db is None and blank[0].error
        others = [s for s in scores if s.lead != 'V1']
        assert len(others) == 12
        assert all(s.error is None and s.snr_db > 15.0 for s in others)

        report = evaluate_directory(out)
        assert report.failures == []
        assert report.summary()['lead_failures'] == 1

    def test_sine_page_with_two_workers(self, tmp_path, clean_config):
        records = tmp_path / "records"
        records.mkdir()
        for i in range(2):
            write_csv(records / f"s{i}.csv", sine_record(amp_mv=0.4 + 0.2 * i))
        generate_batch(records, tmp_path / "out", clean_config)
        report = evaluate_directory(tmp_path / "out", workers=2)
        assert report.summary()['records'] == 2
        assert report.mean_snr_db > 15.0

    def test_missing_image_is_a_failure(self, tmp_path, record_dir, clean_config):
        out = tmp_path / "out"
        generate_batch(record_dir, out, clean_config)
        (out / "00001_rec1.png").unlink()
        report = evaluate_directory(out)
        assert [f['sidecar'] for f in report.failures] == ["00001_rec1.json"]
        assert report.summary()['records'] == 2

    def test_directory_without_sidecars(self, tmp_path):
        with pytest.raises(EvaluationError):
            evaluate_directory(tmp_path)
