"""Domain records for a complete hearing test battery.

Every record is an immutable value keyed by (patient_id, exam_date) and maps
onto one of the 17 logical store tables. Validation never raises: it returns
a list of violation strings, empty when the record is acceptable.

Canonical JSON (``to_dict`` / ``from_dict`` / :func:`canonical_json`) is the
wire format for the HTTP service and the import/export format of the store.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from datetime import date

from .errors import KeyMismatchError

# Standard audiometric frequency set, 125 Hz to 8 kHz.
STANDARD_FREQUENCIES = (125, 250, 500, 750, 1000, 1500, 2000, 3000, 4000, 6000, 8000)

# Bone conduction is not tested above 4 kHz.
BC_MAX_FREQUENCY = 4000

LEVEL_MIN = -10
LEVEL_MAX = 120

PRESSURE_MIN = -600
PRESSURE_MAX = 400

EARS = ("right", "left")
SEXES = ("male", "female", "other")
CATEGORIES = (
    "ac_masked",
    "ac_unmasked",
    "bc_masked",
    "bc_unmasked",
    "ac_aided",
    "loudness_level",
    "sound_field",
)
BC_CATEGORIES = ("bc_masked", "bc_unmasked")
TEMPERATURES = ("30C", "44C")
PROBE_SIDES = ("ipsilateral", "contralateral")
STENGER_OUTCOMES = ("right", "left", "neither")
WEBER_RESULTS = ("centered", "lateralized_right", "lateralized_left")
RINNE_RESULTS = ("positive", "negative", "equivocal")
SCHWABACH_RESULTS = ("normal", "reduced", "lengthened")
ABC_RESULTS = ("normal", "reduced")
GELLE_RESULTS = ("positive", "negative")

MAX_AGE = 150
SISI_PULSES = 20
TONE_DECAY_MAX_SECONDS = 60

# Table names, in fixed schema order. One logical table per record category.
TABLES = (
    "PatientInfo",
    "PureToneACMsk",
    "PureToneACUMsk",
    "PureToneBCMsk",
    "PureToneBCUMsk",
    "PureToneACAid",
    "PureToneLDL",
    "PureToneS",
    "HearingDisability",
    "Ablb",
    "Sisi",
    "ToneDecay",
    "Stenger",
    "TuningFork",
    "SpeechAudiometry",
    "ImpedanceAudiometry",
    "BithermalCaloric",
)

# Short category slugs used in URLs and aggregate slots, same order as TABLES.
CATEGORY_SLUGS = (
    "patient",
    "ac_masked",
    "ac_unmasked",
    "bc_masked",
    "bc_unmasked",
    "ac_aided",
    "loudness_level",
    "sound_field",
    "hearing_disability",
    "ablb",
    "sisi",
    "tone_decay",
    "stenger",
    "tuning_fork",
    "speech",
    "impedance",
    "caloric",
)

SLUG_TO_TABLE = dict(zip(CATEGORY_SLUGS, TABLES))
TABLE_TO_SLUG = dict(zip(TABLES, CATEGORY_SLUGS))

PURE_TONE_SLUGS = CATEGORY_SLUGS[1:8]

# Tables whose row value merges per-ear records into {"right":…, "left":…}.
EAR_MERGED_SLUGS = ("speech", "impedance")


def _is_iso_date(s) -> bool:
    if not isinstance(s, str):
        return False
    try:
        date.fromisoformat(s)
    except ValueError:
        return False
    return len(s) == 10


@dataclass(frozen=True)
class ExamKey:
    """Composite identity of one exam: opaque patient id + ISO exam date."""

    patient_id: str
    exam_date: str

    def violations(self) -> list[str]:
        out = []
        if not isinstance(self.patient_id, str) or not self.patient_id.strip():
            out.append("patient_id is empty")
        if not _is_iso_date(self.exam_date):
            out.append("exam_date is not a valid ISO 8601 date (YYYY-MM-DD)")
        return out

    def to_dict(self) -> dict:
        return {"patient_id": self.patient_id, "exam_date": self.exam_date}

    @classmethod
    def from_dict(cls, d: dict) -> "ExamKey":
        return cls(patient_id=d["patient_id"], exam_date=d["exam_date"])


@dataclass(frozen=True)
class PatientRecord:
    """Personal data plus free-text symptoms, diagnosis, and prescriptions."""

    key: ExamKey
    name: str = ""
    age: int = 0
    sex: str = "other"
    contact: str = ""
    symptoms: str = ""
    diagnosis: str = ""
    prescriptions: str = ""

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "name": self.name,
            "age": self.age,
            "sex": self.sex,
            "contact": self.contact,
            "symptoms": self.symptoms,
            "diagnosis": self.diagnosis,
            "prescriptions": self.prescriptions,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatientRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            name=d.get("name", ""),
            age=d.get("age", 0),
            sex=d.get("sex", "other"),
            contact=d.get("contact", ""),
            symptoms=d.get("symptoms", ""),
            diagnosis=d.get("diagnosis", ""),
            prescriptions=d.get("prescriptions", ""),
        )


@dataclass(frozen=True)
class ThresholdSeries:
    """Per-ear dB HL thresholds at standard frequencies for one PTA category.

    ``points`` maps frequency in Hz to an integer level in dB HL. Not itself
    a stored record; two of these (one per ear) form a :class:`PureToneRecord`.
    """

    ear: str
    category: str
    points: dict[int, int] = field(default_factory=dict)

    def violations(self) -> list[str]:
        out = []
        if self.ear not in EARS:
            out.append(f"ear {self.ear!r} not one of {EARS}")
        if self.category not in CATEGORIES:
            out.append(f"category {self.category!r} not one of {CATEGORIES}")
        for freq, level in sorted(self.points.items()):
            if freq not in STANDARD_FREQUENCIES:
                out.append(f"frequency {freq} Hz not in the standard audiometric set")
            elif self.category in BC_CATEGORIES and freq > BC_MAX_FREQUENCY:
                out.append(
                    f"bone conduction point at {freq} Hz above {BC_MAX_FREQUENCY} Hz"
                )
            if not isinstance(level, int) or not LEVEL_MIN <= level <= LEVEL_MAX:
                out.append(f"level {level} at {freq} Hz out of [{LEVEL_MIN},{LEVEL_MAX}]")
        return out

    def to_dict(self) -> dict:
        return {
            "ear": self.ear,
            "category": self.category,
            "points": {str(f): lv for f, lv in sorted(self.points.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdSeries":
        return cls(
            ear=d["ear"],
            category=d["category"],
            points={int(f): lv for f, lv in d.get("points", {}).items()},
        )


def _points_to_json(points: dict[int, int] | None):
    if points is None:
        return None
    return {str(f): lv for f, lv in sorted(points.items())}


def _points_from_json(obj) -> dict[int, int] | None:
    if obj is None:
        return None
    return {int(f): lv for f, lv in obj.items()}


@dataclass(frozen=True)
class PureToneRecord:
    """Stored unit for one pure-tone table: both ears' points for a category."""

    key: ExamKey
    category: str
    right: dict[int, int] | None = None
    left: dict[int, int] | None = None

    def series(self, ear: str) -> ThresholdSeries | None:
        points = self.right if ear == "right" else self.left
        if points is None:
            return None
        return ThresholdSeries(ear=ear, category=self.category, points=dict(points))

    def all_series(self) -> list[ThresholdSeries]:
        return [s for s in (self.series("right"), self.series("left")) if s is not None]

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "category": self.category,
            "right": _points_to_json(self.right),
            "left": _points_to_json(self.left),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PureToneRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            category=d["category"],
            right=_points_from_json(d.get("right")),
            left=_points_from_json(d.get("left")),
        )


@dataclass(frozen=True)
class SpeechTrial:
    intensity: int  # dB HL, multiple of 5
    percent_correct: float

    def to_json(self) -> list:
        return [self.intensity, self.percent_correct]

    @classmethod
    def from_json(cls, obj) -> "SpeechTrial":
        return cls(intensity=obj[0], percent_correct=obj[1])


@dataclass(frozen=True)
class SpeechAudiometryRecord:
    """One ear's speech audiometry: intensity/percent trials plus SD outcome."""

    key: ExamKey
    ear: str
    trials: tuple[SpeechTrial, ...] = ()
    sd_score: float | None = None
    sd_intensity: int | None = None

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "ear": self.ear,
            "trials": [t.to_json() for t in self.trials],
            "sd_score": self.sd_score,
            "sd_intensity": self.sd_intensity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpeechAudiometryRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            ear=d["ear"],
            trials=tuple(SpeechTrial.from_json(t) for t in d.get("trials", [])),
            sd_score=d.get("sd_score"),
            sd_intensity=d.get("sd_intensity"),
        )


@dataclass(frozen=True)
class AcousticReflex:
    stimulus_ear: str
    probe_side: str
    frequency: int
    level: int  # dB HL
    present: bool

    def to_dict(self) -> dict:
        return {
            "stimulus_ear": self.stimulus_ear,
            "probe_side": self.probe_side,
            "frequency": self.frequency,
            "level": self.level,
            "present": self.present,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcousticReflex":
        return cls(
            stimulus_ear=d["stimulus_ear"],
            probe_side=d["probe_side"],
            frequency=d["frequency"],
            level=d["level"],
            present=d["present"],
        )


@dataclass(frozen=True)
class TympanogramTrace:
    """One ear's compliance-vs-pressure trace plus acoustic reflex entries."""

    key: ExamKey
    ear: str
    samples: tuple[tuple[float, float], ...] = ()  # (pressure daPa, compliance)
    reflexes: tuple[AcousticReflex, ...] = ()

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "ear": self.ear,
            "samples": [[p, c] for p, c in self.samples],
            "reflexes": [r.to_dict() for r in self.reflexes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TympanogramTrace":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            ear=d["ear"],
            samples=tuple((s[0], s[1]) for s in d.get("samples", [])),
            reflexes=tuple(AcousticReflex.from_dict(r) for r in d.get("reflexes", [])),
        )


@dataclass(frozen=True)
class CaloricEntry:
    ear: str
    temperature: str  # "30C" or "44C"
    nystagmus_start: float  # seconds
    nystagmus_end: float

    @property
    def duration(self) -> float:
        return self.nystagmus_end - self.nystagmus_start

    def to_dict(self) -> dict:
        return {
            "ear": self.ear,
            "temperature": self.temperature,
            "nystagmus_start": self.nystagmus_start,
            "nystagmus_end": self.nystagmus_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaloricEntry":
        return cls(
            ear=d["ear"],
            temperature=d["temperature"],
            nystagmus_start=d["nystagmus_start"],
            nystagmus_end=d["nystagmus_end"],
        )


@dataclass(frozen=True)
class CaloricMeasurement:
    """Bithermal caloric test: four irrigations (2 ears x 30C/44C)."""

    key: ExamKey
    entries: tuple[CaloricEntry, ...] = ()

    def duration(self, ear: str, temperature: str) -> float | None:
        for e in self.entries:
            if e.ear == ear and e.temperature == temperature:
                return e.duration
        return None

    def to_dict(self) -> dict:
        return {"key": self.key.to_dict(), "entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "CaloricMeasurement":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            entries=tuple(CaloricEntry.from_dict(e) for e in d.get("entries", [])),
        )


@dataclass(frozen=True)
class AblbPair:
    """One matched-loudness pair: levels at which a tone sounds equally loud."""

    frequency: int
    normal_ear_level: int
    impaired_ear_level: int

    def to_dict(self) -> dict:
        return {
            "frequency": self.frequency,
            "normal_ear_level": self.normal_ear_level,
            "impaired_ear_level": self.impaired_ear_level,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AblbPair":
        return cls(
            frequency=d["frequency"],
            normal_ear_level=d["normal_ear_level"],
            impaired_ear_level=d["impaired_ear_level"],
        )


@dataclass(frozen=True)
class AblbRecord:
    key: ExamKey
    pairs: tuple[AblbPair, ...] = ()

    def to_dict(self) -> dict:
        return {"key": self.key.to_dict(), "pairs": [p.to_dict() for p in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> "AblbRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            pairs=tuple(AblbPair.from_dict(p) for p in d.get("pairs", [])),
        )


@dataclass(frozen=True)
class SisiRecord:
    """Short increment sensitivity index: pulses heard out of twenty."""

    key: ExamKey
    ear: str
    carrier_level_sl: int  # dB SL
    pulses_heard: int

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "ear": self.ear,
            "carrier_level_sl": self.carrier_level_sl,
            "pulses_heard": self.pulses_heard,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SisiRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            ear=d["ear"],
            carrier_level_sl=d["carrier_level_sl"],
            pulses_heard=d["pulses_heard"],
        )


@dataclass(frozen=True)
class ToneDecayRun:
    ear: str
    start_level_sl: int  # dB SL
    seconds_heard: float  # in [0, 60]

    def to_dict(self) -> dict:
        return {
            "ear": self.ear,
            "start_level_sl": self.start_level_sl,
            "seconds_heard": self.seconds_heard,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToneDecayRun":
        return cls(
            ear=d["ear"],
            start_level_sl=d["start_level_sl"],
            seconds_heard=d["seconds_heard"],
        )


@dataclass(frozen=True)
class ToneDecayRecord:
    key: ExamKey
    runs: tuple[ToneDecayRun, ...] = ()

    def to_dict(self) -> dict:
        return {"key": self.key.to_dict(), "runs": [r.to_dict() for r in self.runs]}

    @classmethod
    def from_dict(cls, d: dict) -> "ToneDecayRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            runs=tuple(ToneDecayRun.from_dict(r) for r in d.get("runs", [])),
        )


@dataclass(frozen=True)
class StengerRecord:
    """Stenger test: identical tones at different levels, which ear hears it."""

    key: ExamKey
    frequency: int
    right_level: int
    left_level: int
    heard_in: str  # right | left | neither

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "frequency": self.frequency,
            "right_level": self.right_level,
            "left_level": self.left_level,
            "heard_in": self.heard_in,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StengerRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            frequency=d["frequency"],
            right_level=d["right_level"],
            left_level=d["left_level"],
            heard_in=d["heard_in"],
        )


@dataclass(frozen=True)
class SpecialTestRecord:
    """Composite of the four special-test sections, each optional.

    Storage keeps the four sections in separate tables; ``parts()`` splits
    this composite into the individually storable records.
    """

    key: ExamKey
    ablb: tuple[AblbPair, ...] | None = None
    sisi: SisiRecord | None = None
    tone_decay: tuple[ToneDecayRun, ...] | None = None
    stenger: StengerRecord | None = None

    def parts(self) -> list:
        out = []
        if self.ablb is not None:
            out.append(AblbRecord(key=self.key, pairs=tuple(self.ablb)))
        if self.sisi is not None:
            out.append(self.sisi)
        if self.tone_decay is not None:
            out.append(ToneDecayRecord(key=self.key, runs=tuple(self.tone_decay)))
        if self.stenger is not None:
            out.append(self.stenger)
        return out

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "ablb": [p.to_dict() for p in self.ablb] if self.ablb is not None else None,
            "sisi": self.sisi.to_dict() if self.sisi is not None else None,
            "tone_decay": [r.to_dict() for r in self.tone_decay]
            if self.tone_decay is not None
            else None,
            "stenger": self.stenger.to_dict() if self.stenger is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpecialTestRecord":
        key = ExamKey.from_dict(d["key"])
        return cls(
            key=key,
            ablb=tuple(AblbPair.from_dict(p) for p in d["ablb"])
            if d.get("ablb") is not None
            else None,
            sisi=SisiRecord.from_dict(d["sisi"]) if d.get("sisi") is not None else None,
            tone_decay=tuple(ToneDecayRun.from_dict(r) for r in d["tone_decay"])
            if d.get("tone_decay") is not None
            else None,
            stenger=StengerRecord.from_dict(d["stenger"])
            if d.get("stenger") is not None
            else None,
        )


@dataclass(frozen=True)
class TuningForkRecord:
    """Qualitative tuning fork outcomes.

    The Teal test is kept free-text: clinical sources give no fixed outcome
    vocabulary for it.
    """

    key: ExamKey
    weber: str = "centered"
    rinne_right: str = "positive"
    rinne_left: str = "positive"
    schwabach_right: str = "normal"
    schwabach_left: str = "normal"
    abc_right: str = "normal"
    abc_left: str = "normal"
    teal: str = ""
    gelle_right: str = "positive"
    gelle_left: str = "positive"

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "weber": self.weber,
            "rinne_right": self.rinne_right,
            "rinne_left": self.rinne_left,
            "schwabach_right": self.schwabach_right,
            "schwabach_left": self.schwabach_left,
            "abc_right": self.abc_right,
            "abc_left": self.abc_left,
            "teal": self.teal,
            "gelle_right": self.gelle_right,
            "gelle_left": self.gelle_left,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TuningForkRecord":
        kwargs = {f.name: d[f.name] for f in fields(cls) if f.name != "key" and f.name in d}
        return cls(key=ExamKey.from_dict(d["key"]), **kwargs)


@dataclass(frozen=True)
class HearingDisabilityRecord:
    """Snapshot of the disability metrics as computed at save time."""

    key: ExamKey
    avg_speech_perception_right: float
    avg_speech_perception_left: float
    impairment_right_pct: float
    impairment_left_pct: float
    disability_pct: float

    def to_dict(self) -> dict:
        return {
            "key": self.key.to_dict(),
            "avg_speech_perception_right": self.avg_speech_perception_right,
            "avg_speech_perception_left": self.avg_speech_perception_left,
            "impairment_right_pct": self.impairment_right_pct,
            "impairment_left_pct": self.impairment_left_pct,
            "disability_pct": self.disability_pct,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HearingDisabilityRecord":
        return cls(
            key=ExamKey.from_dict(d["key"]),
            avg_speech_perception_right=d["avg_speech_perception_right"],
            avg_speech_perception_left=d["avg_speech_perception_left"],
            impairment_right_pct=d["impairment_right_pct"],
            impairment_left_pct=d["impairment_left_pct"],
            disability_pct=d["disability_pct"],
        )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _validate_patient(r: PatientRecord) -> list[str]:
    out = r.key.violations()
    if not isinstance(r.age, int) or r.age < 0:
        out.append("age is negative")
    elif r.age > MAX_AGE:
        out.append(f"age {r.age} above {MAX_AGE}")
    if r.sex not in SEXES:
        out.append(f"sex {r.sex!r} not one of {SEXES}")
    return out


def _validate_pure_tone(r: PureToneRecord) -> list[str]:
    out = r.key.violations()
    if r.category not in CATEGORIES:
        out.append(f"category {r.category!r} not one of {CATEGORIES}")
        return out
    for s in r.all_series():
        out.extend(s.violations())
    return out


def _validate_speech(r: SpeechAudiometryRecord) -> list[str]:
    out = r.key.violations()
    if r.ear not in EARS:
        out.append(f"ear {r.ear!r} not one of {EARS}")
    for t in r.trials:
        if t.intensity % 5 != 0:
            out.append(f"intensity {t.intensity} dB not a multiple of 5")
        if not 0 <= t.percent_correct <= 100:
            out.append(f"percent_correct {t.percent_correct} out of [0,100]")
    if r.sd_score is not None and not 0 <= r.sd_score <= 100:
        out.append(f"sd_score {r.sd_score} out of [0,100]")
    return out


def _validate_tympanogram(r: TympanogramTrace) -> list[str]:
    out = r.key.violations()
    if r.ear not in EARS:
        out.append(f"ear {r.ear!r} not one of {EARS}")
    prev = None
    for pressure, compliance in r.samples:
        if prev is not None and pressure <= prev:
            out.append("pressure samples not strictly increasing")
            break
        prev = pressure
    for pressure, compliance in r.samples:
        if not PRESSURE_MIN <= pressure <= PRESSURE_MAX:
            out.append(f"pressure {pressure} daPa out of [{PRESSURE_MIN},{PRESSURE_MAX}]")
        if compliance < 0:
            out.append(f"compliance {compliance} is negative")
    for reflex in r.reflexes:
        if reflex.stimulus_ear not in EARS:
            out.append(f"reflex stimulus_ear {reflex.stimulus_ear!r} not one of {EARS}")
        if reflex.probe_side not in PROBE_SIDES:
            out.append(f"reflex probe_side {reflex.probe_side!r} not one of {PROBE_SIDES}")
        if reflex.frequency not in STANDARD_FREQUENCIES:
            out.append(f"reflex frequency {reflex.frequency} Hz not in the standard set")
    return out


def _validate_caloric(r: CaloricMeasurement) -> list[str]:
    out = r.key.violations()
    seen = set()
    for e in r.entries:
        if e.ear not in EARS:
            out.append(f"ear {e.ear!r} not one of {EARS}")
            continue
        if e.temperature not in TEMPERATURES:
            out.append(f"temperature {e.temperature!r} not one of {TEMPERATURES}")
            continue
        pair = (e.ear, e.temperature)
        if pair in seen:
            out.append(f"duplicate entry for ({e.ear}, {e.temperature})")
        seen.add(pair)
        if e.nystagmus_start < 0:
            out.append(f"nystagmus_start {e.nystagmus_start} is negative")
        if e.nystagmus_end < e.nystagmus_start:
            out.append(
                f"nystagmus_end {e.nystagmus_end} before start {e.nystagmus_start}"
                f" for ({e.ear}, {e.temperature})"
            )
    return out


def _validate_ablb_pairs(pairs) -> list[str]:
    out = []
    for p in pairs:
        if p.frequency not in STANDARD_FREQUENCIES:
            out.append(f"ABLB frequency {p.frequency} Hz not in the standard set")
        for level in (p.normal_ear_level, p.impaired_ear_level):
            if not LEVEL_MIN <= level <= LEVEL_MAX:
                out.append(f"ABLB level {level} out of [{LEVEL_MIN},{LEVEL_MAX}]")
    return out


def _validate_sisi(r: SisiRecord) -> list[str]:
    out = r.key.violations()
    if r.ear not in EARS:
        out.append(f"ear {r.ear!r} not one of {EARS}")
    if not isinstance(r.pulses_heard, int) or not 0 <= r.pulses_heard <= SISI_PULSES:
        out.append(f"pulses_heard {r.pulses_heard} out of [0,{SISI_PULSES}]")
    return out


def _validate_tone_decay_runs(runs) -> list[str]:
    out = []
    for run in runs:
        if run.ear not in EARS:
            out.append(f"tone decay ear {run.ear!r} not one of {EARS}")
        if not 0 <= run.seconds_heard <= TONE_DECAY_MAX_SECONDS:
            out.append(
                f"seconds_heard {run.seconds_heard} out of [0,{TONE_DECAY_MAX_SECONDS}]"
            )
    return out


def _validate_stenger(r: StengerRecord) -> list[str]:
    out = r.key.violations()
    if r.frequency not in STANDARD_FREQUENCIES:
        out.append(f"Stenger frequency {r.frequency} Hz not in the standard set")
    if r.heard_in not in STENGER_OUTCOMES:
        out.append(f"heard_in {r.heard_in!r} not one of {STENGER_OUTCOMES}")
    for level in (r.right_level, r.left_level):
        if not LEVEL_MIN <= level <= LEVEL_MAX:
            out.append(f"Stenger level {level} out of [{LEVEL_MIN},{LEVEL_MAX}]")
    return out


def _validate_special(r: SpecialTestRecord) -> list[str]:
    out = r.key.violations()
    if r.ablb is not None:
        out.extend(_validate_ablb_pairs(r.ablb))
    if r.sisi is not None:
        out.extend(v for v in _validate_sisi(r.sisi) if v not in out)
    if r.tone_decay is not None:
        out.extend(_validate_tone_decay_runs(r.tone_decay))
    if r.stenger is not None:
        out.extend(v for v in _validate_stenger(r.stenger) if v not in out)
    return out


def _validate_tuning_fork(r: TuningForkRecord) -> list[str]:
    out = r.key.violations()
    checks = (
        ("weber", r.weber, WEBER_RESULTS),
        ("rinne_right", r.rinne_right, RINNE_RESULTS),
        ("rinne_left", r.rinne_left, RINNE_RESULTS),
        ("schwabach_right", r.schwabach_right, SCHWABACH_RESULTS),
        ("schwabach_left", r.schwabach_left, SCHWABACH_RESULTS),
        ("abc_right", r.abc_right, ABC_RESULTS),
        ("abc_left", r.abc_left, ABC_RESULTS),
        ("gelle_right", r.gelle_right, GELLE_RESULTS),
        ("gelle_left", r.gelle_left, GELLE_RESULTS),
    )
    for name, value, allowed in checks:
        if value not in allowed:
            out.append(f"{name} {value!r} not one of {allowed}")
    return out


def _validate_disability(r: HearingDisabilityRecord) -> list[str]:
    out = r.key.violations()
    for name, pct in (
        ("impairment_right_pct", r.impairment_right_pct),
        ("impairment_left_pct", r.impairment_left_pct),
    ):
        if not 0 <= pct <= 142.5:
            out.append(f"{name} {pct} out of [0,142.5]")
    lo = min(r.impairment_right_pct, r.impairment_left_pct)
    hi = max(r.impairment_right_pct, r.impairment_left_pct)
    if not (lo - 1e-9 <= r.disability_pct <= hi + 1e-9):
        out.append(f"disability_pct {r.disability_pct} outside [{lo},{hi}]")
    return out


def _validate_ablb_record(r: AblbRecord) -> list[str]:
    return r.key.violations() + _validate_ablb_pairs(r.pairs)


def _validate_tone_decay_record(r: ToneDecayRecord) -> list[str]:
    return r.key.violations() + _validate_tone_decay_runs(r.runs)


def _validate_series_standalone(s: ThresholdSeries) -> list[str]:
    return s.violations()


_VALIDATORS = {
    PatientRecord: _validate_patient,
    PureToneRecord: _validate_pure_tone,
    ThresholdSeries: _validate_series_standalone,
    SpeechAudiometryRecord: _validate_speech,
    TympanogramTrace: _validate_tympanogram,
    CaloricMeasurement: _validate_caloric,
    AblbRecord: _validate_ablb_record,
    SisiRecord: _validate_sisi,
    ToneDecayRecord: _validate_tone_decay_record,
    StengerRecord: _validate_stenger,
    SpecialTestRecord: _validate_special,
    TuningForkRecord: _validate_tuning_fork,
    HearingDisabilityRecord: _validate_disability,
}


def validate(record) -> list[str]:
    """Return the list of invariant violations; empty means the record is ok.

    Total over every constructible record: never raises.
    """
    validator = _VALIDATORS.get(type(record))
    if validator is None:
        return [f"unknown record type {type(record).__name__}"]
    return validator(record)


# ---------------------------------------------------------------------------
# Category mapping and canonical JSON
# ---------------------------------------------------------------------------

# Single-row record types and the slug of the table they live in.
_RECORD_SLUGS = {
    PatientRecord: "patient",
    HearingDisabilityRecord: "hearing_disability",
    AblbRecord: "ablb",
    SisiRecord: "sisi",
    ToneDecayRecord: "tone_decay",
    StengerRecord: "stenger",
    TuningForkRecord: "tuning_fork",
    SpeechAudiometryRecord: "speech",
    TympanogramTrace: "impedance",
    CaloricMeasurement: "caloric",
}

_SLUG_TYPES = {
    "patient": PatientRecord,
    "hearing_disability": HearingDisabilityRecord,
    "ablb": AblbRecord,
    "sisi": SisiRecord,
    "tone_decay": ToneDecayRecord,
    "stenger": StengerRecord,
    "tuning_fork": TuningForkRecord,
    "speech": SpeechAudiometryRecord,
    "impedance": TympanogramTrace,
    "caloric": CaloricMeasurement,
}


def record_slug(record) -> str:
    """Category slug (and thus table) a storable record belongs to."""
    if isinstance(record, PureToneRecord):
        return record.category
    slug = _RECORD_SLUGS.get(type(record))
    if slug is None:
        raise TypeError(f"{type(record).__name__} is not a storable record")
    return slug


def record_from_dict(slug: str, d: dict):
    """Decode the canonical JSON of a record for the given category slug."""
    if slug in PURE_TONE_SLUGS:
        rec = PureToneRecord.from_dict(d)
        if rec.category != slug:
            raise ValueError(f"category {rec.category!r} does not match slug {slug!r}")
        return rec
    cls = _SLUG_TYPES.get(slug)
    if cls is None:
        raise ValueError(f"unknown category slug {slug!r}")
    return cls.from_dict(d)


def canonical_json(record) -> str:
    """Deterministic JSON encoding used for equality and on-disk values."""
    d = record.to_dict() if hasattr(record, "to_dict") else record
    return json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# Exam aggregate
# ---------------------------------------------------------------------------


def _ear_pair_to_dict(pair):
    if pair is None:
        return None
    return {
        "right": pair["right"].to_dict() if pair.get("right") else None,
        "left": pair["left"].to_dict() if pair.get("left") else None,
    }


@dataclass(frozen=True)
class ExamAggregate:
    """One slot per store table; ``None`` where the exam has no data.

    The ``speech`` and ``impedance`` slots merge both ears into a
    ``{"right": record|None, "left": record|None}`` mapping, mirroring the
    single row those tables keep per exam.
    """

    key: ExamKey
    patient: PatientRecord | None = None
    ac_masked: PureToneRecord | None = None
    ac_unmasked: PureToneRecord | None = None
    bc_masked: PureToneRecord | None = None
    bc_unmasked: PureToneRecord | None = None
    ac_aided: PureToneRecord | None = None
    loudness_level: PureToneRecord | None = None
    sound_field: PureToneRecord | None = None
    hearing_disability: HearingDisabilityRecord | None = None
    ablb: AblbRecord | None = None
    sisi: SisiRecord | None = None
    tone_decay: ToneDecayRecord | None = None
    stenger: StengerRecord | None = None
    tuning_fork: TuningForkRecord | None = None
    speech: dict | None = None
    impedance: dict | None = None
    caloric: CaloricMeasurement | None = None

    def slot(self, slug: str):
        return getattr(self, slug)

    def filled_slots(self) -> list[str]:
        return [slug for slug in CATEGORY_SLUGS if getattr(self, slug) is not None]

    def speech_records(self) -> list[SpeechAudiometryRecord]:
        if not self.speech:
            return []
        return [r for r in (self.speech.get("right"), self.speech.get("left")) if r]

    def impedance_traces(self) -> list[TympanogramTrace]:
        if not self.impedance:
            return []
        return [t for t in (self.impedance.get("right"), self.impedance.get("left")) if t]

    def to_dict(self) -> dict:
        out = {"key": self.key.to_dict()}
        for slug in CATEGORY_SLUGS:
            value = getattr(self, slug)
            if slug in EAR_MERGED_SLUGS:
                out[slug] = _ear_pair_to_dict(value)
            else:
                out[slug] = value.to_dict() if value is not None else None
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExamAggregate":
        key = ExamKey.from_dict(d["key"])
        kwargs = {}
        for slug in CATEGORY_SLUGS:
            raw = d.get(slug)
            if raw is None:
                kwargs[slug] = None
            elif slug in EAR_MERGED_SLUGS:
                per_ear_cls = _SLUG_TYPES[slug]
                kwargs[slug] = {
                    ear: per_ear_cls.from_dict(raw[ear]) if raw.get(ear) else None
                    for ear in EARS
                }
            else:
                kwargs[slug] = record_from_dict(slug, raw)
        return cls(key=key, **kwargs)


def exam_aggregate(key: ExamKey, parts: list) -> ExamAggregate:
    """Compose per-test records into a single exam container.

    Raises :class:`KeyMismatchError` when any part carries a different key.
    """
    slots: dict = {}
    for part in parts:
        if part.key != key:
            raise KeyMismatchError(
                f"record key {part.key} does not match exam key {key}",
                {"expected": key.to_dict(), "actual": part.key.to_dict()},
            )
        slug = record_slug(part)
        if slug in EAR_MERGED_SLUGS:
            pair = slots.setdefault(slug, {"right": None, "left": None})
            pair[part.ear] = part
        else:
            slots[slug] = part
    return ExamAggregate(key=key, **slots)
