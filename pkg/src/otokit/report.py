"""Printable exam reports: assembly from an exam aggregate and PDF/HTML export.

Every number shown in a report comes from the metrics module; this layer
only formats. Charts are embedded as vector graphics (the scene behind each
SVG is replayed onto the PDF canvas), and output is byte-deterministic when
the generation timestamp is pinned.
"""

from __future__ import annotations

import io
import textwrap
from dataclasses import dataclass, field
from datetime import datetime, timezone
from xml.sax.saxutils import escape

from reportlab.graphics import renderPDF
from reportlab.graphics import shapes as rlshapes
from reportlab.lib import colors as rlcolors
from reportlab.lib.pagesizes import A4
from reportlab.pdfgen.canvas import Canvas

from . import metrics
from .charts import (
    AudiogramSelection,
    ChartDocument,
    render_audiogram,
    render_calorigram,
    render_laddergram,
    render_speech_audiogram,
    render_tympanogram,
)
from .charts import scene as sc
from .errors import EmptyChartError, IncompleteDataError, UndefinedMetricError
from .model import EARS, ExamAggregate, ExamKey

# Tab order of the application, fixed for every report.
SECTION_ORDER = (
    "Patient",
    "Pure-Tone Audiometry",
    "Special Tests",
    "Tuning Fork",
    "Speech",
    "Impedance",
    "Bithermal Caloric",
)


def fmt1(value: float) -> str:
    """Presentation rounding: one decimal place."""
    return f"{value:.1f}"


@dataclass(frozen=True)
class KeyValueBlock:
    rows: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class TableBlock:
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class ChartBlock:
    chart: ChartDocument
    caption: str


@dataclass(frozen=True)
class TextBlock:
    text: str


Block = KeyValueBlock | TableBlock | ChartBlock | TextBlock


@dataclass(frozen=True)
class Section:
    title: str
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class ReportDocument:
    patient_name: str
    key: ExamKey
    generated_at: str  # ISO timestamp, pinned by the caller for determinism
    sections: tuple[Section, ...]
    not_tested: tuple[str, ...] = ()

    def chart_count(self) -> int:
        return sum(
            1 for s in self.sections for b in s.blocks if isinstance(b, ChartBlock)
        )


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


def _patient_section(agg: ExamAggregate) -> Section:
    p = agg.patient
    rows = (
        ("Patient ID", p.key.patient_id),
        ("Exam date", p.key.exam_date),
        ("Name", p.name),
        ("Age", str(p.age)),
        ("Sex", p.sex),
        ("Contact", p.contact),
        ("Symptoms", p.symptoms),
        ("Diagnosis", p.diagnosis),
        ("Prescriptions", p.prescriptions),
    )
    return Section("Patient", (KeyValueBlock(rows),))


_PTA_LABELS = {
    "ac_masked": "Air conduction, masked",
    "ac_unmasked": "Air conduction, unmasked",
    "bc_masked": "Bone conduction, masked",
    "bc_unmasked": "Bone conduction, unmasked",
    "ac_aided": "Air conduction, aided",
    "loudness_level": "Loudness level",
    "sound_field": "Sound field",
}


def _threshold_table(record) -> TableBlock:
    freqs = sorted(
        {f for pts in (record.right, record.left) if pts for f in pts}
    )
    headers = ("Ear",) + tuple(f"{f} Hz" for f in freqs)
    rows = []
    for ear in EARS:
        pts = record.right if ear == "right" else record.left
        if pts is None:
            continue
        rows.append((ear,) + tuple(str(pts[f]) if f in pts else "-" for f in freqs))
    return TableBlock(headers, tuple(rows))


def _disability_blocks(agg: ExamAggregate) -> list[Block]:
    rec = agg.ac_unmasked
    if rec is None or rec.right is None or rec.left is None:
        return [TextBlock("Hearing disability: requires unmasked AC thresholds for both ears.")]
    try:
        m = metrics.disability_metrics(rec.series("right"), rec.series("left"))
    except IncompleteDataError as exc:
        return [TextBlock(f"Hearing disability: {exc.message}.")]
    return [
        KeyValueBlock(
            (
                ("Average speech perception, right (dB)", fmt1(m.avg_speech_perception_right)),
                ("Average speech perception, left (dB)", fmt1(m.avg_speech_perception_left)),
                ("Hearing impairment, right (%)", fmt1(m.impairment_right_pct)),
                ("Hearing impairment, left (%)", fmt1(m.impairment_left_pct)),
                ("Hearing disability (%)", fmt1(m.disability_pct)),
            )
        )
    ]


def _pure_tone_section(agg: ExamAggregate) -> Section | None:
    populated = [
        (slug, agg.slot(slug)) for slug in _PTA_LABELS if agg.slot(slug) is not None
    ]
    if not populated and agg.hearing_disability is None:
        return None
    blocks: list[Block] = []
    all_series = []
    for slug, record in populated:
        blocks.append(TextBlock(_PTA_LABELS[slug]))
        blocks.append(_threshold_table(record))
        all_series.extend(record.all_series())
    blocks.extend(_disability_blocks(agg))
    if agg.hearing_disability is not None:
        hd = agg.hearing_disability
        blocks.append(
            KeyValueBlock(
                (
                    ("Saved hearing disability snapshot (%)", fmt1(hd.disability_pct)),
                    ("Saved impairment, right (%)", fmt1(hd.impairment_right_pct)),
                    ("Saved impairment, left (%)", fmt1(hd.impairment_left_pct)),
                )
            )
        )
    if all_series:
        sel = AudiogramSelection(
            ear_filter="both", categories=tuple(sorted({s.category for s in all_series}))
        )
        blocks.append(ChartBlock(render_audiogram(all_series, sel), "Pure-tone audiogram"))
    return Section("Pure-Tone Audiometry", tuple(blocks))


def _special_tests_section(agg: ExamAggregate) -> Section | None:
    if all(
        agg.slot(slug) is None for slug in ("ablb", "sisi", "tone_decay", "stenger")
    ):
        return None
    blocks: list[Block] = []
    if agg.ablb is not None:
        rows = tuple(
            (str(p.frequency), str(p.normal_ear_level), str(p.impaired_ear_level))
            for p in agg.ablb.pairs
        )
        blocks.append(TextBlock("Alternate binaural loudness balance"))
        blocks.append(
            TableBlock(("Frequency (Hz)", "Normal ear (dB HL)", "Impaired ear (dB HL)"), rows)
        )
        if agg.ablb.pairs:
            blocks.append(
                ChartBlock(render_laddergram(list(agg.ablb.pairs)), "Loudness balance laddergram")
            )
    if agg.sisi is not None:
        s = agg.sisi
        blocks.append(
            KeyValueBlock(
                (
                    ("SISI ear", s.ear),
                    ("SISI carrier level (dB SL)", str(s.carrier_level_sl)),
                    ("SISI pulses heard", str(s.pulses_heard)),
                    ("SISI score (%)", fmt1(metrics.sisi_score_pct(s.pulses_heard))),
                )
            )
        )
    if agg.tone_decay is not None:
        rows = tuple(
            (r.ear, str(r.start_level_sl), fmt1(r.seconds_heard))
            for r in agg.tone_decay.runs
        )
        blocks.append(TextBlock("Tone decay"))
        blocks.append(TableBlock(("Ear", "Start level (dB SL)", "Seconds heard"), rows))
    if agg.stenger is not None:
        st = agg.stenger
        blocks.append(
            KeyValueBlock(
                (
                    ("Stenger frequency (Hz)", str(st.frequency)),
                    ("Stenger right level (dB HL)", str(st.right_level)),
                    ("Stenger left level (dB HL)", str(st.left_level)),
                    ("Stenger heard in", st.heard_in),
                )
            )
        )
    return Section("Special Tests", tuple(blocks))


def _tuning_fork_section(agg: ExamAggregate) -> Section | None:
    if agg.tuning_fork is None:
        return None
    tf = agg.tuning_fork
    rows = (
        ("Weber", tf.weber),
        ("Rinne, right", tf.rinne_right),
        ("Rinne, left", tf.rinne_left),
        ("Schwabach, right", tf.schwabach_right),
        ("Schwabach, left", tf.schwabach_left),
        ("Absolute bone conduction, right", tf.abc_right),
        ("Absolute bone conduction, left", tf.abc_left),
        ("Teal", tf.teal),
        ("Gelle, right", tf.gelle_right),
        ("Gelle, left", tf.gelle_left),
    )
    return Section("Tuning Fork", (KeyValueBlock(rows),))


def _speech_section(agg: ExamAggregate) -> Section | None:
    recs = agg.speech_records()
    if not recs:
        return None
    blocks: list[Block] = []
    for rec in recs:
        rows = tuple((str(t.intensity), fmt1(t.percent_correct)) for t in rec.trials)
        blocks.append(TextBlock(f"Speech audiometry, {rec.ear} ear"))
        blocks.append(TableBlock(("Intensity (dB HL)", "Correct (%)"), rows))
        kv = []
        if rec.trials:
            srt = metrics.speech_reception_threshold(rec)
            kv.append(
                (f"SRT, {rec.ear} (dB HL)", str(srt) if srt is not None else "not reached")
            )
        if rec.sd_score is not None:
            kv.append((f"SD score, {rec.ear} (%)", fmt1(rec.sd_score)))
        if rec.sd_intensity is not None:
            kv.append((f"SD intensity, {rec.ear} (dB HL)", str(rec.sd_intensity)))
        if kv:
            blocks.append(KeyValueBlock(tuple(kv)))
    try:
        blocks.append(ChartBlock(render_speech_audiogram(recs), "Speech audiogram"))
    except EmptyChartError:
        pass
    return Section("Speech", tuple(blocks))


def _impedance_section(agg: ExamAggregate) -> Section | None:
    traces = agg.impedance_traces()
    if not traces:
        return None
    blocks: list[Block] = []
    for trace in traces:
        kv = [(f"Tympanogram samples, {trace.ear}", str(len(trace.samples)))]
        if trace.samples:
            peak_p, peak_c = max(trace.samples, key=lambda s: s[1])
            for p, c in trace.samples:
                if c == peak_c:
                    peak_p = p
                    break
            kv.append((f"Peak pressure, {trace.ear} (daPa)", f"{peak_p:g}"))
        blocks.append(KeyValueBlock(tuple(kv)))
        if trace.reflexes:
            rows = tuple(
                (
                    r.stimulus_ear,
                    r.probe_side,
                    str(r.frequency),
                    str(r.level),
                    "present" if r.present else "absent",
                )
                for r in trace.reflexes
            )
            blocks.append(
                TableBlock(
                    ("Stimulus ear", "Probe", "Frequency (Hz)", "Level (dB HL)", "Reflex"),
                    rows,
                )
            )
    try:
        blocks.append(ChartBlock(render_tympanogram(traces), "Tympanogram"))
    except EmptyChartError:
        pass
    return Section("Impedance", tuple(blocks))


def _caloric_section(agg: ExamAggregate) -> Section | None:
    if agg.caloric is None:
        return None
    m = agg.caloric
    rows = tuple(
        (e.ear, e.temperature, fmt1(e.nystagmus_start), fmt1(e.nystagmus_end), fmt1(e.duration))
        for e in m.entries
    )
    blocks: list[Block] = [
        TableBlock(("Ear", "Temperature", "Start (s)", "End (s)", "Duration (s)"), rows)
    ]
    try:
        cp = metrics.canal_paresis_pct(m)
        dp = metrics.directional_preponderance_pct(m)
        blocks.append(
            KeyValueBlock(
                (
                    ("Canal paresis (%)", fmt1(cp)),
                    ("Directional preponderance (%)", fmt1(dp)),
                )
            )
        )
        blocks.append(ChartBlock(render_calorigram(m), "Calorigram"))
    except (IncompleteDataError, UndefinedMetricError) as exc:
        blocks.append(TextBlock(f"Caloric metrics unavailable: {exc.message}."))
    return Section("Bithermal Caloric", tuple(blocks))


_SECTION_BUILDERS = (
    ("Pure-Tone Audiometry", _pure_tone_section),
    ("Special Tests", _special_tests_section),
    ("Tuning Fork", _tuning_fork_section),
    ("Speech", _speech_section),
    ("Impedance", _impedance_section),
    ("Bithermal Caloric", _caloric_section),
)


def build_report(agg: ExamAggregate, generated_at: datetime | None = None) -> ReportDocument:
    """Assemble the full report; requires at least the patient record."""
    if agg.patient is None:
        raise IncompleteDataError("exam has no patient record; cannot build a report")
    if generated_at is None:
        generated_at = datetime.now(timezone.utc)
    sections = [_patient_section(agg)]
    not_tested = []
    for title, builder in _SECTION_BUILDERS:
        section = builder(agg)
        if section is None:
            not_tested.append(title)
        else:
            sections.append(section)
    return ReportDocument(
        patient_name=agg.patient.name,
        key=agg.key,
        generated_at=generated_at.isoformat(),
        sections=tuple(sections),
        not_tested=tuple(not_tested),
    )


# ---------------------------------------------------------------------------
# PDF export
# ---------------------------------------------------------------------------


def _scene_to_drawing(chart: ChartDocument, scale: float) -> rlshapes.Drawing:
    """Replay a chart scene as reportlab vector shapes (y axis flipped)."""
    d = rlshapes.Drawing(chart.width * scale, chart.height * scale)
    h = chart.height

    def col(name):
        return rlcolors.toColor(name)

    group = rlshapes.Group(transform=(scale, 0, 0, scale, 0, 0))
    for p in chart.scene:
        if isinstance(p, sc.Line):
            shape = rlshapes.Line(
                p.x1, h - p.y1, p.x2, h - p.y2, strokeColor=col(p.color), strokeWidth=p.width
            )
            if p.dash:
                shape.strokeDashArray = [float(x) for x in p.dash.split(",")]
        elif isinstance(p, sc.Polyline):
            pts = []
            for x, y in p.points:
                pts.extend((x, h - y))
            shape = rlshapes.PolyLine(
                pts, strokeColor=col(p.color), strokeWidth=p.width
            )
            if p.dash:
                shape.strokeDashArray = [float(x) for x in p.dash.split(",")]
        elif isinstance(p, sc.Circle):
            shape = rlshapes.Circle(
                p.cx,
                h - p.cy,
                p.r,
                strokeColor=col(p.color),
                strokeWidth=p.width,
                fillColor=None if p.fill == "none" else col(p.fill),
            )
        elif isinstance(p, sc.Polygon):
            pts = []
            for x, y in p.points:
                pts.extend((x, h - y))
            shape = rlshapes.Polygon(
                pts,
                strokeColor=col(p.color),
                strokeWidth=p.width,
                fillColor=None if p.fill == "none" else col(p.fill),
            )
        elif isinstance(p, sc.Rect):
            shape = rlshapes.Rect(
                p.x,
                h - p.y - p.h,
                p.w,
                p.h,
                strokeColor=col(p.color),
                strokeWidth=p.width,
                fillColor=None if p.fill == "none" else col(p.fill),
            )
        elif isinstance(p, sc.Text):
            shape = rlshapes.String(
                p.x,
                h - p.y,
                p.text,
                fontName="Helvetica-Bold" if p.bold else "Helvetica",
                fontSize=p.size,
                fillColor=col(p.color),
                textAnchor=p.anchor,
            )
        else:
            continue
        group.add(shape)
    d.add(group)
    return d


class _PdfWriter:
    def __init__(self, page_size=A4):
        self.buf = io.BytesIO()
        self.page_w, self.page_h = page_size
        self.canvas = Canvas(self.buf, pagesize=page_size, invariant=1)
        self.margin = 50
        self.y = self.page_h - self.margin

    def _ensure(self, needed: float) -> None:
        if self.y - needed < self.margin:
            self.canvas.showPage()
            self.y = self.page_h - self.margin

    def line(self, text: str, size: float = 10, bold: bool = False, indent: float = 0):
        font = "Helvetica-Bold" if bold else "Helvetica"
        for piece in textwrap.wrap(text, width=95) or [""]:
            self._ensure(size + 4)
            self.canvas.setFont(font, size)
            self.canvas.drawString(self.margin + indent, self.y - size, piece)
            self.y -= size + 4
    def gap(self, amount: float = 6):
        self.y -= amount

    def chart(self, chart: ChartDocument):
        avail_w = self.page_w - 2 * self.margin
        scale = min(avail_w / chart.width, 1.0)
        height = chart.height * scale
        self._ensure(height + 10)
        drawing = _scene_to_drawing(chart, scale)
        renderPDF.draw(drawing, self.canvas, self.margin, self.y - height)
        self.y -= height + 10

    def finish(self) -> bytes:
        self.canvas.showPage()
        self.canvas.save()
        return self.buf.getvalue()


def export_pdf(doc: ReportDocument, page_size=A4) -> bytes:
    """Render the report as a PDF; byte-identical for a pinned timestamp."""
    w = _PdfWriter(page_size)
    w.line("Hearing Test Report", size=16, bold=True)
    w.line(f"Patient: {doc.patient_name}  ({doc.key.patient_id})", size=11)
    w.line(f"Exam date: {doc.key.exam_date}", size=11)
    w.line(f"Generated: {doc.generated_at}", size=9)
    w.gap(10)
    for section in doc.sections:
        w.line(section.title, size=13, bold=True)
        w.gap(2)
        for block in section.blocks:
            if isinstance(block, KeyValueBlock):
                for label, value in block.rows:
                    w.line(f"{label}: {value}", indent=10)
            elif isinstance(block, TableBlock):
                w.line("  |  ".join(block.headers), bold=True, indent=10)
                for row in block.rows:
                    w.line("  |  ".join(row), indent=10)
            elif isinstance(block, TextBlock):
                w.line(block.text, indent=10)
            elif isinstance(block, ChartBlock):
                w.line(block.caption, size=9, indent=10)
                w.chart(block.chart)
            w.gap(4)
        w.gap(10)
    if doc.not_tested:
        w.line("Not tested: " + ", ".join(doc.not_tested), size=9)
    return w.finish()


# ---------------------------------------------------------------------------
# HTML export (preview)
# ---------------------------------------------------------------------------


def export_html(doc: ReportDocument) -> str:
    """Standalone HTML rendition of the same report, charts inlined as SVG."""
    out = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8"><title>Hearing Test Report</title>',
        "<style>body{font-family:sans-serif;max-width:900px;margin:2em auto;}"
        "table{border-collapse:collapse;margin:0.5em 0;}"
        "td,th{border:1px solid #999;padding:2px 8px;text-align:left;}"
        "h2{border-bottom:1px solid #ccc;}</style></head><body>",
        "<h1>Hearing Test Report</h1>",
        f"<p>Patient: {escape(doc.patient_name)} ({escape(doc.key.patient_id)})<br>"
        f"Exam date: {escape(doc.key.exam_date)}<br>"
        f"<small>Generated: {escape(doc.generated_at)}</small></p>",
    ]
    for section in doc.sections:
        out.append(f"<h2>{escape(section.title)}</h2>")
        for block in section.blocks:
            if isinstance(block, KeyValueBlock):
                out.append("<table>")
                for label, value in block.rows:
                    out.append(
                        f"<tr><th>{escape(label)}</th><td>{escape(value)}</td></tr>"
                    )
                out.append("</table>")
            elif isinstance(block, TableBlock):
                out.append("<table><tr>")
                out.extend(f"<th>{escape(hd)}</th>" for hd in block.headers)
                out.append("</tr>")
                for row in block.rows:
                    out.append(
                        "<tr>" + "".join(f"<td>{escape(c)}</td>" for c in row) + "</tr>"
                    )
                out.append("</table>")
            elif isinstance(block, TextBlock):
                out.append(f"<p>{escape(block.text)}</p>")
            elif isinstance(block, ChartBlock):
                out.append(f"<p><em>{escape(block.caption)}</em></p>")
                # Strip the XML prolog so the SVG can sit inline.
                svg = block.chart.svg.split("\n", 1)[1]
                out.append(svg)
    if doc.not_tested:
        out.append(f"<p><small>Not tested: {escape(', '.join(doc.not_tested))}</small></p>")
    out.append("</body></html>")
    return "\n".join(out)
