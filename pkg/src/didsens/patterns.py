"""Schematic before/after response patterns on raw and log scales.

Four stylized cases of treated/control group medians, each rendered as a
small SVG panel twice: on the raw outcome scale and after a log
transform.  The medians are illustrative constants, not data.  Case D is
built multiplicatively, with log medians chosen on a dyadic grid so that
the difference-in-differences of the plotted log medians is exactly zero:
the apparent effect on the raw scale is an artifact of the scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

CASES = ("A", "B", "C", "D")
SCALES = ("raw", "log")

# (pre, post) medians per group.  Cases A-C are raw-scale constants; case
# D is defined by its log medians (dyadic, so the log DID is exactly 0).
_RAW_MEDIANS = {
    "A": {"treated": (2.0, 5.0), "control": (2.0, 2.0)},
    "B": {"treated": (2.0, 8.0), "control": (2.0, 4.0)},
    "C": {"treated": (5.0, 8.0), "control": (2.0, 2.0)},
}
_LOG_MEDIANS_D = {"treated": (1.5, 2.25), "control": (1.0, 1.75)}

_DESCRIPTIONS = {
    "A": "equal levels before; treated group jumps after",
    "B": "both groups rise; treated rises by more",
    "C": "level offset before; only the treated group moves",
    "D": "offset levels, both move; log scale removes most of the gap growth",
}


@dataclass(frozen=True)
class PatternPanel:
    """One schematic panel: group medians at the two periods."""

    case: str
    scale: str
    description: str
    treated: tuple[float, float]
    control: tuple[float, float]

    @property
    def did(self) -> float:
        """Difference-in-differences of the plotted medians."""
        return (self.treated[1] - self.control[1]) - (self.treated[0] - self.control[0])


def pattern_panels() -> list[PatternPanel]:
    """The eight built-in panels (cases A-D, raw and log scales)."""
    panels = []
    for case in CASES:
        if case == "D":
            log = _LOG_MEDIANS_D
            raw = {g: tuple(math.exp(v) for v in vals) for g, vals in log.items()}
        else:
            raw = _RAW_MEDIANS[case]
            log = {g: tuple(math.log(v) for v in vals) for g, vals in raw.items()}
        for scale, medians in (("raw", raw), ("log", log)):
            panels.append(
                PatternPanel(
                    case=case,
                    scale=scale,
                    description=_DESCRIPTIONS[case],
                    treated=tuple(medians["treated"]),
                    control=tuple(medians["control"]),
                )
            )
    return panels


_WIDTH, _HEIGHT = 360.0, 260.0
_X_PRE, _X_POST = 120.0, 260.0
_Y_TOP, _Y_BOTTOM = 60.0, 190.0


def _y_mapper(panel: PatternPanel):
    values = [*panel.treated, *panel.control]
    lo, hi = min(values), max(values)
    pad = 0.15 * (hi - lo) if hi > lo else 1.0
    lo, hi = lo - pad, hi + pad

    def to_y(v: float) -> float:
        return _Y_BOTTOM - (v - lo) / (hi - lo) * (_Y_BOTTOM - _Y_TOP)

    return to_y, lo, hi


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(panel: PatternPanel) -> str:
    """Render one panel as a standalone SVG document string."""
    to_y, lo, hi = _y_mapper(panel)
    xs = (_X_PRE, _X_POST)
    t_pts = [(x, to_y(v)) for x, v in zip(xs, panel.treated)]
    c_pts = [(x, to_y(v)) for x, v in zip(xs, panel.control)]
    scale_label = "log scale" if panel.scale == "log" else "raw scale"
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
        f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
        f"  <title>Case {panel.case} ({scale_label})</title>",
        f"  <desc>{panel.description}</desc>",
        "  <metadata>illustrative medians; schematic, not derived from data</metadata>",
        f'  <rect x="0" y="0" width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>',
        f'  <text x="180.00" y="28.00" font-family="sans-serif" font-size="15" '
        f'text-anchor="middle">Case {panel.case} ({scale_label})</text>',
        f'  <text x="180.00" y="44.00" font-family="sans-serif" font-size="10" '
        f'fill="#555555" text-anchor="middle">{panel.description}</text>',
        # axes
        f'  <line x1="70.00" y1="{_fmt(_Y_BOTTOM + 14)}" x2="310.00" '
        f'y2="{_fmt(_Y_BOTTOM + 14)}" stroke="#333333" stroke-width="1"/>',
        f'  <line x1="70.00" y1="{_fmt(_Y_TOP - 8)}" x2="70.00" '
        f'y2="{_fmt(_Y_BOTTOM + 14)}" stroke="#333333" stroke-width="1"/>',
        f'  <text x="{_fmt(_X_PRE)}" y="{_fmt(_Y_BOTTOM + 30)}" font-family="sans-serif" '
        f'font-size="11" text-anchor="middle">before</text>',
        f'  <text x="{_fmt(_X_POST)}" y="{_fmt(_Y_BOTTOM + 30)}" font-family="sans-serif" '
        f'font-size="11" text-anchor="middle">after</text>',
        f'  <text x="64.00" y="{_fmt(to_y(lo) + 4)}" font-family="sans-serif" font-size="9" '
        f'text-anchor="end">{_fmt(lo)}</text>',
        f'  <text x="64.00" y="{_fmt(to_y(hi) + 4)}" font-family="sans-serif" font-size="9" '
        f'text-anchor="end">{_fmt(hi)}</text>',
    ]
    t_path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in t_pts)
    c_path = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in c_pts)
    lines.append(
        f'  <polyline points="{c_path}" fill="none" stroke="#777777" '
        f'stroke-width="2" stroke-dasharray="6 3"/>'
    )
    lines.append(f'  <polyline points="{t_path}" fill="none" stroke="#1a1a1a" stroke-width="2"/>')
    for x, y in c_pts:
        lines.append(
            f'  <circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="white" '
            f'stroke="#777777" stroke-width="1.5"/>'
        )
    for x, y in t_pts:
        lines.append(f'  <circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="#1a1a1a"/>')
    lines.append(
        f'  <text x="{_fmt(_X_POST + 10)}" y="{_fmt(t_pts[1][1] + 4)}" '
        f'font-family="sans-serif" font-size="10">treated</text>'
    )
    lines.append(
        f'  <text x="{_fmt(_X_POST + 10)}" y="{_fmt(c_pts[1][1] + 4)}" '
        f'font-family="sans-serif" font-size="10">control</text>'
    )
    lines.append(
        f'  <text x="180.00" y="{_fmt(_HEIGHT - 8)}" font-family="sans-serif" font-size="11" '
        f'text-anchor="middle">DID of medians = {_fmt(panel.did)}</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_pattern_svgs(outdir: str | Path) -> list[Path]:
    """Write the eight panels to outdir; returns paths in a fixed order."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for panel in pattern_panels():
        path = outdir / f"pattern_{panel.case}_{panel.scale}.svg"
        path.write_text(render_svg(panel), encoding="utf-8")
        paths.append(path)
    return paths
