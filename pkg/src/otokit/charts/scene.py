"""Resolution-independent drawing primitives and the SVG 1.1 writer.

Renderers build a flat list of primitives; the same scene drives both the
SVG output and the vector embedding into PDF reports. Coordinates are
formatted with a fixed precision so identical scenes always produce
byte-identical markup.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape, quoteattr


def fmt(value: float) -> str:
    """Fixed two-decimal coordinate formatting; trims a negative zero."""
    s = f"{value:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass(frozen=True)
class Line:
    x1: float
    y1: float
    x2: float
    y2: float
    color: str = "black"
    width: float = 1.0
    dash: str | None = None  # e.g. "6,4"
    css_class: str | None = None


@dataclass(frozen=True)
class Polyline:
    points: tuple[tuple[float, float], ...]
    color: str = "black"
    width: float = 1.0
    dash: str | None = None
    css_class: str | None = None


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float
    color: str = "black"
    width: float = 1.0
    fill: str = "none"
    css_class: str | None = None


@dataclass(frozen=True)
class Polygon:
    points: tuple[tuple[float, float], ...]
    color: str = "black"
    width: float = 1.0
    fill: str = "none"
    css_class: str | None = None


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float
    color: str = "black"
    width: float = 1.0
    fill: str = "none"
    css_class: str | None = None


@dataclass(frozen=True)
class Text:
    x: float
    y: float
    text: str
    color: str = "black"
    size: float = 12.0
    anchor: str = "start"  # start | middle | end
    bold: bool = False
    css_class: str | None = None


Primitive = Line | Polyline | Circle | Polygon | Rect | Text

# Generic font stack only: documents stay portable with no embedded fonts.
FONT_FAMILY = "sans-serif"


def _class_attr(p) -> str:
    return f" class={quoteattr(p.css_class)}" if p.css_class else ""


def _dash_attr(p) -> str:
    return f' stroke-dasharray="{p.dash}"' if p.dash else ""


def _points_attr(points) -> str:
    return " ".join(f"{fmt(x)},{fmt(y)}" for x, y in points)


def _element(p: Primitive) -> str:
    if isinstance(p, Line):
        return (
            f'<line x1="{fmt(p.x1)}" y1="{fmt(p.y1)}" x2="{fmt(p.x2)}" y2="{fmt(p.y2)}"'
            f' stroke="{p.color}" stroke-width="{fmt(p.width)}"'
            f"{_dash_attr(p)}{_class_attr(p)}/>"
        )
    if isinstance(p, Polyline):
        return (
            f'<polyline points="{_points_attr(p.points)}" fill="none"'
            f' stroke="{p.color}" stroke-width="{fmt(p.width)}"'
            f"{_dash_attr(p)}{_class_attr(p)}/>"
        )
    if isinstance(p, Circle):
        return (
            f'<circle cx="{fmt(p.cx)}" cy="{fmt(p.cy)}" r="{fmt(p.r)}"'
            f' stroke="{p.color}" stroke-width="{fmt(p.width)}" fill="{p.fill}"'
            f"{_class_attr(p)}/>"
        )
    if isinstance(p, Polygon):
        return (
            f'<polygon points="{_points_attr(p.points)}"'
            f' stroke="{p.color}" stroke-width="{fmt(p.width)}" fill="{p.fill}"'
            f"{_class_attr(p)}/>"
        )
    if isinstance(p, Rect):
        return (
            f'<rect x="{fmt(p.x)}" y="{fmt(p.y)}" width="{fmt(p.w)}" height="{fmt(p.h)}"'
            f' stroke="{p.color}" stroke-width="{fmt(p.width)}" fill="{p.fill}"'
            f"{_class_attr(p)}/>"
        )
    if isinstance(p, Text):
        weight = ' font-weight="bold"' if p.bold else ""
        return (
            f'<text x="{fmt(p.x)}" y="{fmt(p.y)}" fill="{p.color}"'
            f' font-size="{fmt(p.size)}" font-family="{FONT_FAMILY}"'
            f' text-anchor="{p.anchor}"{weight}{_class_attr(p)}>'
            f"{escape(p.text)}</text>"
        )
    raise TypeError(f"unknown primitive {type(p).__name__}")


def svg_document(scene: list[Primitive], width: int, height: int) -> str:
    """Serialize a scene into a standalone SVG 1.1 document."""
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    parts.extend(_element(p) for p in scene)
    parts.append("</svg>")
    return "\n".join(parts)
