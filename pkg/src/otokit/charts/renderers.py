"""Deterministic vector charts for the full hearing test battery.

Five chart kinds: pure-tone audiogram, speech audiogram, tympanogram,
calorigram, and the ABLB laddergram. Every renderer returns a
:class:`ChartDocument` carrying the SVG, the scene it was built from, and a
machine-readable symbol inventory whose per-series counts equal the number
of data points drawn.

Audiogram symbols and colors follow the conventional audiometric symbol
set: right ear in red, left ear in blue; unmasked AC circle/X, masked AC
triangle/square, unmasked BC angle brackets, masked BC square brackets,
aided "A", sound field "S", loudness level "L"/"U". AC curves are solid,
BC curves dashed. This table is the single source of truth; the symbol
inventory keys off it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import EmptyChartError, IncompleteDataError, RecordInvalidError
from ..model import (
    CATEGORIES,
    LEVEL_MAX,
    LEVEL_MIN,
    STANDARD_FREQUENCIES,
    AblbPair,
    CaloricMeasurement,
    SpeechAudiometryRecord,
    ThresholdSeries,
    TympanogramTrace,
)
from .scene import Circle, Line, Polygon, Polyline, Rect, Text, svg_document

DEFAULT_WIDTH = 800
DEFAULT_HEIGHT = 600

RIGHT_COLOR = "red"
LEFT_COLOR = "blue"
GRID_COLOR = "#cccccc"
AXIS_COLOR = "black"

# (category, ear) -> (symbol kind, color)
SYMBOL_TABLE = {
    ("ac_unmasked", "right"): ("circle", RIGHT_COLOR),
    ("ac_unmasked", "left"): ("x", LEFT_COLOR),
    ("ac_masked", "right"): ("triangle", RIGHT_COLOR),
    ("ac_masked", "left"): ("square", LEFT_COLOR),
    ("bc_unmasked", "right"): ("angle_left", RIGHT_COLOR),
    ("bc_unmasked", "left"): ("angle_right", LEFT_COLOR),
    ("bc_masked", "right"): ("bracket_left", RIGHT_COLOR),
    ("bc_masked", "left"): ("bracket_right", LEFT_COLOR),
    ("ac_aided", "right"): ("A", RIGHT_COLOR),
    ("ac_aided", "left"): ("A", LEFT_COLOR),
    ("sound_field", "right"): ("S", RIGHT_COLOR),
    ("sound_field", "left"): ("S", LEFT_COLOR),
    ("loudness_level", "right"): ("L", RIGHT_COLOR),
    ("loudness_level", "left"): ("U", LEFT_COLOR),
}

_GLYPH_SYMBOLS = {
    "x": "X",
    "angle_left": "<",
    "angle_right": ">",
    "bracket_left": "[",
    "bracket_right": "]",
    "A": "A",
    "S": "S",
    "L": "L",
    "U": "U",
}


@dataclass(frozen=True)
class SymbolEntry:
    series_id: str
    symbol: str
    color: str
    count: int

    def to_dict(self) -> dict:
        return {
            "series_id": self.series_id,
            "symbol": self.symbol,
            "color": self.color,
            "count": self.count,
        }


@dataclass(frozen=True)
class ChartDocument:
    """Standalone SVG plus the inventory of marks it contains."""

    svg: str
    symbol_inventory: tuple[SymbolEntry, ...]
    width: int
    height: int
    scene: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "svg": self.svg,
            "symbol_inventory": [e.to_dict() for e in self.symbol_inventory],
            "width": self.width,
            "height": self.height,
        }


@dataclass(frozen=True)
class AudiogramSelection:
    """Which ears and threshold categories an audiogram should show."""

    ear_filter: str = "both"  # right | left | both
    categories: tuple[str, ...] = CATEGORIES

    def matches(self, series: ThresholdSeries) -> bool:
        if self.ear_filter != "both" and series.ear != self.ear_filter:
            return False
        return series.category in self.categories


def _mark(scene, sid: str, kind: str, color: str, x: float, y: float, size: float = 6.0):
    cls = f"mark {sid}"
    if kind == "circle":
        scene.append(Circle(cx=x, cy=y, r=size, color=color, width=1.8, css_class=cls))
    elif kind == "triangle":
        pts = ((x, y - size), (x - size, y + size * 0.8), (x + size, y + size * 0.8))
        scene.append(Polygon(points=pts, color=color, width=1.8, css_class=cls))
    elif kind == "square":
        pts = (
            (x - size, y - size),
            (x + size, y - size),
            (x + size, y + size),
            (x - size, y + size),
        )
        scene.append(Polygon(points=pts, color=color, width=1.8, css_class=cls))
    elif kind in _GLYPH_SYMBOLS:
        scene.append(
            Text(
                x=x,
                y=y + size * 0.7,
                text=_GLYPH_SYMBOLS[kind],
                color=color,
                size=size * 2.2,
                anchor="middle",
                bold=True,
                css_class=cls,
            )
        )
    else:
        raise ValueError(f"unknown symbol kind {kind!r}")


# ---------------------------------------------------------------------------
# Pure-tone audiogram
# ---------------------------------------------------------------------------

_MARGIN_LEFT = 70
_MARGIN_RIGHT = 30
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 55

_FREQ_LO = 125
_FREQ_OCTAVES = 6  # 125 Hz .. 8 kHz


def audiogram_x(freq: float, width: int = DEFAULT_WIDTH) -> float:
    """Log-octave x position: equal spacing per frequency doubling."""
    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    return _MARGIN_LEFT + math.log2(freq / _FREQ_LO) / _FREQ_OCTAVES * plot_w


def audiogram_y(level: float, height: int = DEFAULT_HEIGHT) -> float:
    """Inverted level axis: -10 dB HL at the top, 120 dB HL at the bottom."""
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM
    return _MARGIN_TOP + (level - LEVEL_MIN) / (LEVEL_MAX - LEVEL_MIN) * plot_h


def _freq_label(freq: int) -> str:
    if freq >= 1000:
        k = freq / 1000
        return f"{k:g}k"
    return str(freq)


def render_audiogram(
    series: list[ThresholdSeries],
    sel: AudiogramSelection,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> ChartDocument:
    """Pure-tone audiogram for the selected ears and categories."""
    if not sel.categories:
        raise EmptyChartError("audiogram selection has no categories")

    scene: list = []
    x_right = width - _MARGIN_RIGHT
    y_bottom = height - _MARGIN_BOTTOM

    # Grid: standard frequencies and 10 dB steps.
    for freq in STANDARD_FREQUENCIES:
        x = audiogram_x(freq, width)
        scene.append(Line(x, _MARGIN_TOP, x, y_bottom, color=GRID_COLOR))
        scene.append(Text(x, y_bottom + 18, _freq_label(freq), size=11, anchor="middle"))
    for level in range(LEVEL_MIN, LEVEL_MAX + 1, 10):
        y = audiogram_y(level, height)
        scene.append(Line(_MARGIN_LEFT, y, x_right, y, color=GRID_COLOR))
        scene.append(Text(_MARGIN_LEFT - 8, y + 4, str(level), size=11, anchor="end"))
    scene.append(Rect(_MARGIN_LEFT, _MARGIN_TOP, x_right - _MARGIN_LEFT, y_bottom - _MARGIN_TOP))
    scene.append(Text(width / 2, y_bottom + 38, "Frequency (Hz)", size=12, anchor="middle"))
    scene.append(Text(16, _MARGIN_TOP - 14, "dB HL", size=12))

    inventory: list[SymbolEntry] = []
    for s in series:
        if not sel.matches(s):
            continue
        sid = f"{s.category}_{s.ear}"
        symbol, color = SYMBOL_TABLE[(s.category, s.ear)]
        freqs = sorted(s.points)
        pts = tuple((audiogram_x(f, width), audiogram_y(s.points[f], height)) for f in freqs)
        if len(pts) >= 2:
            dash = "7,5" if s.category.startswith("bc_") else None
            scene.append(Polyline(points=pts, color=color, width=1.5, dash=dash))
        for x, y in pts:
            _mark(scene, sid, symbol, color, x, y)
        inventory.append(SymbolEntry(sid, symbol, color, len(pts)))

    svg = svg_document(scene, width, height)
    return ChartDocument(svg, tuple(inventory), width, height, tuple(scene))


# ---------------------------------------------------------------------------
# Speech audiogram
# ---------------------------------------------------------------------------


def render_speech_audiogram(
    recs: list[SpeechAudiometryRecord],
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> ChartDocument:
    """Percent-correct vs intensity, one polyline per ear, 50% guide line."""
    populated = [r for r in recs if r.trials]
    if not populated:
        raise EmptyChartError("no speech trials to plot")

    intensities = [t.intensity for r in populated for t in r.trials]
    lo = min(intensities) - 10
    hi = max(intensities) + 10
    if hi == lo:
        hi = lo + 10

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM
    y_bottom = height - _MARGIN_BOTTOM

    def x_pos(i: float) -> float:
        return _MARGIN_LEFT + (i - lo) / (hi - lo) * plot_w

    def y_pos(pct: float) -> float:
        return y_bottom - pct / 100 * plot_h

    scene: list = []
    for pct in range(0, 101, 10):
        y = y_pos(pct)
        scene.append(Line(_MARGIN_LEFT, y, width - _MARGIN_RIGHT, y, color=GRID_COLOR))
        scene.append(Text(_MARGIN_LEFT - 8, y + 4, str(pct), size=11, anchor="end"))
    step = 10 if hi - lo <= 120 else 20
    i = lo + (-lo) % step
    while i <= hi:
        x = x_pos(i)
        scene.append(Line(x, _MARGIN_TOP, x, y_bottom, color=GRID_COLOR))
        scene.append(Text(x, y_bottom + 18, str(i), size=11, anchor="middle"))
        i += step
    scene.append(Rect(_MARGIN_LEFT, _MARGIN_TOP, plot_w, plot_h))
    scene.append(Text(width / 2, y_bottom + 38, "Intensity (dB HL)", size=12, anchor="middle"))
    scene.append(Text(16, _MARGIN_TOP - 14, "% correct", size=12))
    # 50% guide line marks where the reception threshold is read off.
    scene.append(
        Line(_MARGIN_LEFT, y_pos(50), width - _MARGIN_RIGHT, y_pos(50), color="gray", dash="4,4")
    )

    inventory: list[SymbolEntry] = []
    for rec in populated:
        color = RIGHT_COLOR if rec.ear == "right" else LEFT_COLOR
        sid = f"speech_{rec.ear}"
        trials = sorted(rec.trials, key=lambda t: (t.intensity, t.percent_correct))
        pts = tuple((x_pos(t.intensity), y_pos(t.percent_correct)) for t in trials)
        scene.append(
            Polyline(points=pts, color=color, width=1.8, css_class=f"mark {sid}")
        )
        inventory.append(SymbolEntry(sid, "polyline", color, len(pts)))

    svg = svg_document(scene, width, height)
    return ChartDocument(svg, tuple(inventory), width, height, tuple(scene))


# ---------------------------------------------------------------------------
# Tympanogram
# ---------------------------------------------------------------------------


def render_tympanogram(
    traces: list[TympanogramTrace],
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> ChartDocument:
    """Compliance vs pressure per ear, annotated with the peak pressure."""
    populated = [t for t in traces if t.samples]
    if not populated:
        raise EmptyChartError("no tympanometry samples to plot")
    for t in populated:
        pressures = [p for p, _ in t.samples]
        if any(b <= a for a, b in zip(pressures, pressures[1:])):
            raise RecordInvalidError(
                [f"{t.ear} ear tympanogram samples not strictly increasing in pressure"]
            )

    p_lo = min(-400.0, min(p for t in populated for p, _ in t.samples))
    p_hi = max(200.0, max(p for t in populated for p, _ in t.samples))
    c_hi = max(1.0, max(c for t in populated for _, c in t.samples) * 1.1)

    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM
    y_bottom = height - _MARGIN_BOTTOM

    def x_pos(p: float) -> float:
        return _MARGIN_LEFT + (p - p_lo) / (p_hi - p_lo) * plot_w

    def y_pos(c: float) -> float:
        return y_bottom - c / c_hi * plot_h

    scene: list = []
    p_step = 100
    p = math.ceil(p_lo / p_step) * p_step
    while p <= p_hi:
        x = x_pos(p)
        scene.append(Line(x, _MARGIN_TOP, x, y_bottom, color=GRID_COLOR))
        scene.append(Text(x, y_bottom + 18, f"{p:g}", size=11, anchor="middle"))
        p += p_step
    scene.append(Rect(_MARGIN_LEFT, _MARGIN_TOP, plot_w, plot_h))
    scene.append(Text(width / 2, y_bottom + 38, "Pressure (daPa)", size=12, anchor="middle"))
    scene.append(Text(16, _MARGIN_TOP - 14, "Compliance", size=12))

    inventory: list[SymbolEntry] = []
    for idx, trace in enumerate(populated):
        color = RIGHT_COLOR if trace.ear == "right" else LEFT_COLOR
        sid = f"tympanogram_{trace.ear}"
        pts = tuple((x_pos(p), y_pos(c)) for p, c in trace.samples)
        scene.append(Polyline(points=pts, color=color, width=1.8, css_class=f"mark {sid}"))
        # First maximum wins on compliance ties.
        peak_pressure, peak_compliance = max(trace.samples, key=lambda s: s[1])
        for p, c in trace.samples:
            if c == peak_compliance:
                peak_pressure = p
                break
        scene.append(
            Text(
                width - _MARGIN_RIGHT - 8,
                _MARGIN_TOP + 18 + idx * 18,
                f"{trace.ear}: peak {peak_pressure:g} daPa",
                color=color,
                size=12,
                anchor="end",
            )
        )
        inventory.append(SymbolEntry(sid, "polyline", color, len(pts)))

    svg = svg_document(scene, width, height)
    return ChartDocument(svg, tuple(inventory), width, height, tuple(scene))


# ---------------------------------------------------------------------------
# Calorigram
# ---------------------------------------------------------------------------

_CALORIC_ROWS = (
    ("right", "30C"),
    ("right", "44C"),
    ("left", "30C"),
    ("left", "44C"),
)


def render_calorigram(
    m: CaloricMeasurement,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> ChartDocument:
    """Four horizontal nystagmus-duration bars on a common seconds axis."""
    durations = {}
    for ear, temp in _CALORIC_ROWS:
        d = m.duration(ear, temp)
        if d is None:
            raise IncompleteDataError(f"missing caloric entry for ({ear}, {temp})")
        durations[(ear, temp)] = d

    d_hi = max(max(durations.values()), 1.0) * 1.1
    label_w = 120
    plot_w = width - label_w - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM
    y_bottom = height - _MARGIN_BOTTOM
    bar_h = plot_h / 8

    def x_len(seconds: float) -> float:
        return seconds / d_hi * plot_w

    scene: list = []
    step = max(10, int(d_hi // 6 // 10 * 10) or 10)
    s = 0
    while s <= d_hi:
        x = label_w + x_len(s)
        scene.append(Line(x, _MARGIN_TOP, x, y_bottom, color=GRID_COLOR))
        scene.append(Text(x, y_bottom + 18, str(s), size=11, anchor="middle"))
        s += step
    scene.append(Text(width / 2, y_bottom + 38, "Nystagmus duration (s)", size=12, anchor="middle"))

    inventory: list[SymbolEntry] = []
    for row, (ear, temp) in enumerate(_CALORIC_ROWS):
        color = RIGHT_COLOR if ear == "right" else LEFT_COLOR
        sid = f"caloric_{ear}_{temp.lower()}"
        y = _MARGIN_TOP + plot_h * (row * 2 + 0.5) / 8
        scene.append(
            Rect(
                x=label_w,
                y=y,
                w=x_len(durations[(ear, temp)]),
                h=bar_h,
                color=color,
                fill=color,
                css_class=f"mark {sid}",
            )
        )
        scene.append(
            Text(label_w - 8, y + bar_h / 2 + 4, f"{ear} {temp}", size=12, anchor="end")
        )
        inventory.append(SymbolEntry(sid, "bar", color, 1))

    svg = svg_document(scene, width, height)
    return ChartDocument(svg, tuple(inventory), width, height, tuple(scene))


# ---------------------------------------------------------------------------
# ABLB laddergram
# ---------------------------------------------------------------------------


def render_laddergram(
    pairs: list[AblbPair],
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
) -> ChartDocument:
    """Two dB scales with one rung per matched-loudness pair."""
    if not pairs:
        raise EmptyChartError("no loudness balance pairs to plot")

    x_normal = width * 0.3
    x_impaired = width * 0.7
    y_bottom = height - _MARGIN_BOTTOM

    def y_pos(level: float) -> float:
        return audiogram_y(level, height)

    scene: list = [
        Line(x_normal, _MARGIN_TOP, x_normal, y_bottom, width=1.5),
        Line(x_impaired, _MARGIN_TOP, x_impaired, y_bottom, width=1.5),
        Text(x_normal, _MARGIN_TOP - 14, "Normal ear (dB HL)", size=12, anchor="middle"),
        Text(x_impaired, _MARGIN_TOP - 14, "Impaired ear (dB HL)", size=12, anchor="middle"),
    ]
    for level in range(LEVEL_MIN, LEVEL_MAX + 1, 10):
        y = y_pos(level)
        for x in (x_normal, x_impaired):
            scene.append(Line(x - 5, y, x + 5, y, width=1.0))
        scene.append(Text(x_normal - 12, y + 4, str(level), size=10, anchor="end"))
        scene.append(Text(x_impaired + 12, y + 4, str(level), size=10, anchor="start"))

    for pair in pairs:
        y1 = y_pos(pair.normal_ear_level)
        y2 = y_pos(pair.impaired_ear_level)
        scene.append(
            Line(x_normal, y1, x_impaired, y2, color="black", width=1.5, css_class="mark ablb")
        )
        scene.append(
            Text(
                (x_normal + x_impaired) / 2,
                (y1 + y2) / 2 - 6,
                _freq_label(pair.frequency),
                size=10,
                anchor="middle",
            )
        )

    inventory = (SymbolEntry("ablb", "rung", "black", len(pairs)),)
    svg = svg_document(scene, width, height)
    return ChartDocument(svg, inventory, width, height, tuple(scene))
