from dataclasses import replace

import numpy as np
import pytest

from conftest import sine_record
from ecg_imagegen.models import (
    ArtifactKind,
    LeadLayout,
    ParameterError,
    PrintedTemplate,
    RasterImage,
    TemplateField,
    TemplateFont,
)
from ecg_imagegen.services.grid_renderer import plot_record, render_blank_paper
from ecg_imagegen.services.handwriting import HandwritingStencil, get_style, synthesize_handwriting
from ecg_imagegen.services.text_artifacts import (
    StencilSizeError,
    TemplateError,
    lead_name_fields,
    load_lexicon,
    load_template,
    overlay_handwriting,
    overlay_printed_text,
    render_text_mask,
    select_keywords,
    template_context,
)


@pytest.fixture
def plotted(small_paper):
    return plot_record(render_blank_paper(small_paper), sine_record(), LeadLayout(), small_paper)


class TestPrintedText:
    def test_empty_template(self, plotted, small_paper):
        img, polylines = plotted
        out, boxes, warnings = overlay_printed_text(img, PrintedTemplate(), polylines, small_paper)
        assert out == img
        assert boxes == [] and warnings == []

    def test_free_field_is_drawn_in_its_box(self, small_paper):
        page = render_blank_paper(small_paper)
        tpl = PrintedTemplate(fields=(TemplateField('lead', 'II', (30.0, 10.0), 4.0),))
        out, boxes, _ = overlay_printed_text(page, tpl, [], small_paper)
        assert len(boxes) == 1
        box = boxes[0]
        assert box.kind is ArtifactKind.PRINTED and box.text == 'II'
        assert box.bbox_px[:2] == (118.0, 39.0)
        x0, y0, x1, y1 = (int(v) for v in box.bbox_px)
        changed = np.any(out.pixels != page.pixels, axis=2)
        assert changed[y0:y1, x0:x1].any()
        changed[y0:y1, x0:x1] = False
        assert not changed.any()

    def test_field_moves_off_traces(self, plotted, small_paper):
        img, polylines = plotted
        lead = next(p for p in polylines if p.lead_name == 'V1')
        x_mm = lead.points[10, 0] / small_paper.px_per_mm
        y_mm = lead.points[10, 1] / small_paper.px_per_mm - 1.0
        tpl = PrintedTemplate(fields=(TemplateField('note', 'X', (x_mm, y_mm), 3.0),))
        _, boxes, warnings = overlay_printed_text(img, tpl, polylines, small_paper)
        for box in boxes:
            assert not any(box.intersects(p.bbox) for p in polylines)
        assert len(boxes) == 1 or warnings

    def test_field_dropped_when_no_room(self, plotted, small_paper):
        img, polylines = plotted
        lead = next(p for p in polylines if p.lead_name == 'V1')
        x_mm = lead.points[10, 0] / small_paper.px_per_mm
        y_mm = lead.baseline_px / small_paper.px_per_mm
        bounds = (x_mm - 1.0, y_mm - 3.0, x_mm + 10.0, y_mm + 3.0)
        tpl = PrintedTemplate(fields=(TemplateField('note', 'X', (x_mm, y_mm - 2.0), 3.0, bounds),))
        out, boxes, warnings = overlay_printed_text(img, tpl, polylines, small_paper)
        assert boxes == []
        assert len(warnings) == 1 and "'note'" in warnings[0]
        assert out == img

    def test_overlap_allowed(self, plotted, small_paper):
        img, polylines = plotted
        lead = next(p for p in polylines if p.lead_name == 'V1')
        pos = (lead.points[10, 0] / small_paper.px_per_mm, lead.baseline_px / small_paper.px_per_mm - 1.0)
        tpl = PrintedTemplate(fields=(TemplateField('note', 'X', pos, 3.0),), allow_overlap=True)
        _, boxes, _ = overlay_printed_text(img, tpl, polylines, small_paper)
        assert len(boxes) == 1
        assert boxes[0].intersects(lead.bbox)

    def test_polyline_without_vertices_is_no_obstacle(self, plotted, small_paper):
        img, polylines = plotted
        empty = replace(polylines[0], points=np.zeros((0, 2)))
        assert empty.bbox is None
        tpl = PrintedTemplate(fields=(TemplateField('note', 'X', (5.0, 5.0), 3.0),))
        _, boxes, warnings = overlay_printed_text(img, tpl, [empty] + polylines[1:], small_paper)
        assert len(boxes) == 1 and warnings == []

    @pytest.mark.parametrize("font", list(TemplateFont))
    def test_text_mask_is_binary(self, font):
        mask = render_text_mask("HR 72", 20, font)
        assert mask.dtype == bool
        assert mask.any()

    def test_lead_name_fields(self, plotted, small_paper):
        _, polylines = plotted
        fields = lead_name_fields(polylines, small_paper, 3.5)
        assert len(fields) == 13
        assert {f.text for f in fields} == set(LeadLayout().leads)
        for f in fields:
            x0, y0, x1, y1 = f.bounds_mm
            assert x0 <= f.pos_mm[0] <= x1 and y0 <= f.pos_mm[1] <= y1


class TestTemplates:
    def test_bundled_template(self, small_paper):
        context = template_context("rec7", 500.0, 10.0, small_paper, seed=1)
        tpl = load_template('standard', context)
        texts = {f.key: f.text for f in tpl.fields}
        assert texts['record_id'] == "ID: rec7"
        assert texts['sampling'] == "500 Hz  10 s"
        assert texts['scale'] == "25 mm/s  10 mm/mV"
        assert tpl.allow_overlap is False

    def test_overrides(self, small_paper):
        context = template_context("r", 500.0, 10.0, small_paper, seed=1)
        tpl = load_template('standard', context, allow_overlap=True, font=TemplateFont.PIXEL)
        assert tpl.allow_overlap is True
        assert tpl.font is TemplateFont.PIXEL

    def test_unknown_placeholder(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("fields:\n  - key: x\n    text: '{patient_name}'\n    pos_mm: [1, 1]\n")
        with pytest.raises(TemplateError, match="patient_name"):
            load_template(path, {'record_id': 'r'})

    def test_missing_template(self):
        with pytest.raises(TemplateError):
            load_template('does_not_exist')

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("fields: [unclosed\n")
        with pytest.raises(TemplateError):
            load_template(path)

    def test_context_is_seeded(self, small_paper):
        a = template_context("r", 500.0, 10.0, small_paper, seed=3)
        assert a == template_context("r", 500.0, 10.0, small_paper, seed=3)
        assert a['date'].startswith('20')
        assert a != template_context("r", 500.0, 10.0, small_paper, seed=4)


class TestKeywords:
    def test_matching_phrases_only(self):
        words = select_keywords("Sinus rhythm with ST elevation.", ["sinus rhythm", "ST elevation", "AV block"], 2, 0)
        assert sorted(words) == ["ST elevation", "sinus rhythm"]

    def test_single_match_with_replacement(self):
        assert select_keywords("sinus rhythm", ["sinus rhythm", "AV block"], 3, 4) == ["sinus rhythm"] * 3

    def test_zero_requested(self):
        assert select_keywords("sinus rhythm", ["sinus rhythm"], 0, 0) == []

    def test_token_boundaries(self):
        # "st" must not match inside "first"
        words = select_keywords("first degree block", ["st", "degree block"], 1, 0)
        assert words == ["degree block"]

    def test_empty_corpus_falls_back(self):
        warnings = []
        words = select_keywords("", ["sinus rhythm", "AV block"], 2, 0, warnings)
        assert sorted(words) == ["AV block", "sinus rhythm"]
        assert len(warnings) == 1 and "empty" in warnings[0]

    def test_no_match_falls_back(self):
        warnings = []
        assert select_keywords("nothing here", ["AV block"], 1, 0, warnings) == ["AV block"]
        assert warnings

    def test_empty_lexicon(self):
        with pytest.raises(ParameterError):
            select_keywords("text", [], 1, 0)

    def test_deterministic(self):
        lexicon = ["a b", "c d", "e f", "g h"]
        corpus = "a b c d e f g h"
        assert select_keywords(corpus, lexicon, 2, 9) == select_keywords(corpus, lexicon, 2, 9)

    def test_bundled_lexicon_occurs_in_corpus(self):
        from ecg_imagegen.core.config import Config
        lexicon = load_lexicon(Config.data_dir() / 'ecg_lexicon.txt')
        corpus = (Config.data_dir() / 'ecg_corpus.txt').read_text(encoding='utf-8')
        warnings = []
        select_keywords(corpus, lexicon, 3, 0, warnings)
        assert lexicon and not warnings


class TestHandwritingOverlay:
    def test_transparent_stencil(self, small_paper):
        page = render_blank_paper(small_paper)
        stencil = HandwritingStencil("x", np.zeros((20, 30), dtype=np.uint8), (30.0,))
        out, box = overlay_handwriting(page, stencil, (10, 10))
        assert out == page
        assert box.bbox_px == (10.0, 10.0, 40.0, 30.0)

    def test_position_and_ink(self):
        page = RasterImage.blank(100, 80)
        alpha = np.zeros((10, 20), dtype=np.uint8)
        alpha[5, 5] = 255
        stencil = HandwritingStencil("x", alpha, (20.0,))
        out, box = overlay_handwriting(page, stencil, (30, 40), ink_color=(0, 0, 0), opacity=1.0)
        assert box.kind is ArtifactKind.HANDWRITTEN
        assert box.bbox_px[:2] == (30.0, 40.0)
        assert out.pixels[45, 35].tolist() == [0, 0, 0]
        assert int(np.sum(np.any(out.pixels != page.pixels, axis=2))) == 1

    def test_random_position_is_seeded(self, small_paper):
        page = render_blank_paper(small_paper)
        stencil = synthesize_handwriting("sinus rhythm", get_style(1), 30.0, seed=0)
        a, box_a = overlay_handwriting(page, stencil, seed=5)
        b, box_b = overlay_handwriting(page, stencil, seed=5)
        assert a == b and box_a.bbox_px == box_b.bbox_px
        x0, y0, x1, y1 = box_a.bbox_px
        assert 0 <= x0 and x1 <= page.width and 0 <= y0 and y1 <= page.height

    def test_stencil_too_large(self):
        page = RasterImage.blank(50, 50)
        stencil = HandwritingStencil("x", np.full((60, 10), 255, dtype=np.uint8), (10.0,))
        with pytest.raises(StencilSizeError):
            overlay_handwriting(page, stencil)

    def test_stencil_leaves_page(self):
        page = RasterImage.blank(50, 50)
        stencil = HandwritingStencil("x", np.full((10, 10), 255, dtype=np.uint8), (10.0,))
        with pytest.raises(StencilSizeError):
            overlay_handwriting(page, stencil, (45, 0))
