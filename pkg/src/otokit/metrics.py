"""Diagnostic metric computations for the hearing test battery.

All functions are pure. Arithmetic runs over exact rationals internally and
converts to float only at the return boundary; display rounding (one decimal
place) belongs to the presentation layer, never here.

Note: the impairment percentage is deliberately not capped at 100%; an
average perception above 91.67 dB yields values up to 142.5%.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import IncompleteDataError, UndefinedMetricError
from .model import CaloricMeasurement, SpeechAudiometryRecord, ThresholdSeries

# Frequencies entering the average speech perception: 500, 1k, 2k, 3k Hz.
PERCEPTION_FREQUENCIES = (500, 1000, 2000, 3000)

SISI_PULSES = 20


@dataclass(frozen=True)
class DisabilityMetrics:
    """Per-ear average perception and impairment plus combined disability."""

    avg_speech_perception_right: float
    avg_speech_perception_left: float
    impairment_right_pct: float
    impairment_left_pct: float
    disability_pct: float


def average_speech_perception(series: ThresholdSeries) -> float:
    """Mean of the unmasked AC thresholds at 500/1000/2000/3000 Hz, in dB.

    Raises :class:`IncompleteDataError` naming any missing frequency rather
    than imputing a value.
    """
    missing = [f for f in PERCEPTION_FREQUENCIES if f not in series.points]
    if missing:
        raise IncompleteDataError(
            "missing thresholds at " + ", ".join(f"{f} Hz" for f in missing),
            {"missing_frequencies": missing, "ear": series.ear},
        )
    total = Fraction(sum(series.points[f] for f in PERCEPTION_FREQUENCIES))
    return float(total / 4)


def hearing_impairment_pct(a: float) -> float:
    """Impairment percentage from average speech perception: max((a-25)*1.5, 0)."""
    value = (Fraction(a) - 25) * Fraction(3, 2)
    return float(max(value, Fraction(0)))


def hearing_disability_pct(right_pct: float, left_pct: float) -> float:
    """Combined disability: better ear weighted five-to-one against the worse."""
    better = Fraction(min(right_pct, left_pct))
    worse = Fraction(max(right_pct, left_pct))
    return float((better * 5 + worse) / 6)


def disability_metrics(right: ThresholdSeries, left: ThresholdSeries) -> DisabilityMetrics:
    """Full disability computation from both ears' unmasked AC thresholds."""
    a_right = average_speech_perception(right)
    a_left = average_speech_perception(left)
    imp_right = hearing_impairment_pct(a_right)
    imp_left = hearing_impairment_pct(a_left)
    return DisabilityMetrics(
        avg_speech_perception_right=a_right,
        avg_speech_perception_left=a_left,
        impairment_right_pct=imp_right,
        impairment_left_pct=imp_left,
        disability_pct=hearing_disability_pct(imp_right, imp_left),
    )


def _caloric_durations(m: CaloricMeasurement) -> dict[tuple[str, str], Fraction]:
    durations = {}
    for ear in ("right", "left"):
        for temp in ("30C", "44C"):
            d = m.duration(ear, temp)
            if d is None:
                raise IncompleteDataError(
                    f"missing caloric entry for ({ear}, {temp})",
                    {"ear": ear, "temperature": temp},
                )
            durations[(ear, temp)] = Fraction(d)
    total = sum(durations.values())
    if total == 0:
        raise UndefinedMetricError("total nystagmus duration is zero")
    return durations


def canal_paresis_pct(m: CaloricMeasurement) -> float:
    """Signed right-minus-left caloric response asymmetry, in percent.

    Positive values mean right-side response dominance (the formula's R-L
    ordering); the sign carries no further clinical interpretation here.
    """
    d = _caloric_durations(m)
    r44, r30 = d[("right", "44C")], d[("right", "30C")]
    l44, l30 = d[("left", "44C")], d[("left", "30C")]
    return float(((r44 + r30) - (l44 + l30)) / (r44 + l44 + r30 + l30) * 100)


def directional_preponderance_pct(m: CaloricMeasurement) -> float:
    """Signed asymmetry of nystagmus direction across conditions, in percent."""
    d = _caloric_durations(m)
    r44, r30 = d[("right", "44C")], d[("right", "30C")]
    l44, l30 = d[("left", "44C")], d[("left", "30C")]
    return float(((r44 + l30) - (l44 + r30)) / (r44 + l44 + r30 + l30) * 100)


def speech_reception_threshold(rec: SpeechAudiometryRecord) -> int | None:
    """Minimum trial intensity reaching 50% correct; None if never reached."""
    if not rec.trials:
        raise IncompleteDataError("no speech trials recorded", {"ear": rec.ear})
    reaching = [t.intensity for t in rec.trials if t.percent_correct >= 50]
    return min(reaching) if reaching else None


def sisi_score_pct(pulses_heard: int) -> float:
    """Percent of the twenty 1 dB pulses that were heard."""
    if not isinstance(pulses_heard, int) or not 0 <= pulses_heard <= SISI_PULSES:
        raise ValueError(f"pulses_heard {pulses_heard!r} out of [0,{SISI_PULSES}]")
    return float(Fraction(pulses_heard, SISI_PULSES) * 100)


def nystagmus_duration(start: float, end: float) -> float:
    """Seconds from start of irrigation to end of nystagmus."""
    if end < start:
        raise ValueError(f"end {end} precedes start {start}")
    return end - start
