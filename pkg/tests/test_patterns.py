import math
import xml.etree.ElementTree as ET

import pytest

from didsens.patterns import CASES, SCALES, pattern_panels, render_svg, write_pattern_svgs


def test_eight_panels_cover_cases_and_scales():
    panels = pattern_panels()
    assert len(panels) == 8
    assert {(p.case, p.scale) for p in panels} == {(c, s) for c in CASES for s in SCALES}


def _panel(case, scale):
    return next(p for p in pattern_panels() if p.case == case and p.scale == scale)


def test_case_a_starts_level_and_case_d_log_did_is_zero():
    a = _panel("A", "raw")
    assert a.treated[0] == a.control[0]
    assert a.did > 0
    d_log = _panel("D", "log")
    assert d_log.did == 0.0
    d_raw = _panel("D", "raw")
    assert d_raw.did > 0


def test_log_panels_hold_logs_of_raw_panels():
    for case in CASES:
        raw = _panel(case, "raw")
        log = _panel(case, "log")
        for grp in ("treated", "control"):
            for t in (0, 1):
                assert getattr(log, grp)[t] == pytest.approx(
                    math.log(getattr(raw, grp)[t]), abs=1e-12
                )


def test_svg_parses_and_declares_itself_schematic():
    for panel in pattern_panels():
        svg = render_svg(panel)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert "illustrative" in svg
        assert f"DID of medians = {panel.did:.2f}" in svg


def test_writes_are_deterministic(tmp_path):
    first = write_pattern_svgs(tmp_path / "one")
    second = write_pattern_svgs(tmp_path / "two")
    assert [p.name for p in first] == [p.name for p in second]
    assert len(first) == 8
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
