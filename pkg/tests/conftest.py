"""Shared fixtures: a fully populated exam and small test helpers."""

from __future__ import annotations

import base64
import re
import zlib

import pytest

from otokit.model import (
    AblbPair,
    AblbRecord,
    AcousticReflex,
    CaloricEntry,
    CaloricMeasurement,
    ExamKey,
    HearingDisabilityRecord,
    PatientRecord,
    PureToneRecord,
    SisiRecord,
    SpeechAudiometryRecord,
    SpeechTrial,
    StengerRecord,
    ToneDecayRecord,
    ToneDecayRun,
    TuningForkRecord,
    TympanogramTrace,
)

# Fast KDF parameters for tests; production defaults stay memory-hard.
TEST_KDF = {"algorithm": "scrypt", "n": 2**10, "r": 8, "p": 1}


def pdf_text(data: bytes) -> str:
    """Pull the text layer out of a PDF: literal strings in content streams."""
    out = []
    for m in re.finditer(rb"stream\r?\n(.*?)endstream", data, re.S):
        raw = m.group(1).strip()
        try:
            raw = base64.a85decode(raw, adobe=True)
        except ValueError:
            pass
        try:
            raw = zlib.decompress(raw)
        except zlib.error:
            pass
        for sm in re.finditer(rb"\((?:[^()\\]|\\.)*\)", raw):
            s = re.sub(rb"\\([()\\])", rb"\1", sm.group(0)[1:-1])
            out.append(s.decode("latin-1"))
    return " ".join(out)


def mark_count(svg: str, series_id: str) -> int:
    """Number of marks a chart drew for one series."""
    return svg.count(f'class="mark {series_id}"')


@pytest.fixture
def key():
    return ExamKey("P001", "2024-03-01")


def make_full_exam_parts(key: ExamKey) -> list:
    """Exactly one record per store table: 17 records."""
    return [
        PatientRecord(
            key,
            name="John Smith",
            age=42,
            sex="male",
            contact="555-0100",
            symptoms="progressive hearing loss, right ear",
            diagnosis="otosclerosis",
            prescriptions="hearing aid evaluation",
        ),
        PureToneRecord(key, "ac_masked", right={500: 35, 1000: 45}, left={500: 25}),
        PureToneRecord(
            key,
            "ac_unmasked",
            right={500: 30, 1000: 40, 2000: 50, 3000: 60},
            left={500: 25, 1000: 25, 2000: 25, 3000: 25},
        ),
        PureToneRecord(key, "bc_masked", right={500: 20, 1000: 25}, left={1000: 15}),
        PureToneRecord(key, "bc_unmasked", right={500: 15, 2000: 30}, left={500: 10}),
        PureToneRecord(key, "ac_aided", right={1000: 30, 2000: 35}, left=None),
        PureToneRecord(key, "loudness_level", right={1000: 100}, left={1000: 95}),
        PureToneRecord(key, "sound_field", right=None, left={500: 40, 1000: 45}),
        HearingDisabilityRecord(
            key,
            avg_speech_perception_right=45.0,
            avg_speech_perception_left=25.0,
            impairment_right_pct=30.0,
            impairment_left_pct=0.0,
            disability_pct=5.0,
        ),
        AblbRecord(key, pairs=(AblbPair(1000, 40, 60), AblbPair(2000, 50, 65))),
        SisiRecord(key, ear="right", carrier_level_sl=20, pulses_heard=14),
        ToneDecayRecord(
            key,
            runs=(ToneDecayRun("right", 5, 45.0), ToneDecayRun("left", 5, 60.0)),
        ),
        StengerRecord(key, frequency=1000, right_level=40, left_level=60, heard_in="right"),
        TuningForkRecord(
            key,
            weber="lateralized_right",
            rinne_right="negative",
            rinne_left="positive",
            schwabach_right="lengthened",
            teal="no response change",
            gelle_right="negative",
        ),
        SpeechAudiometryRecord(
            key,
            ear="right",
            trials=(
                SpeechTrial(20, 10.0),
                SpeechTrial(25, 40.0),
                SpeechTrial(30, 55.0),
                SpeechTrial(35, 90.0),
            ),
            sd_score=88.0,
            sd_intensity=65,
        ),
        TympanogramTrace(
            key,
            ear="right",
            samples=((-300, 0.2), (-100, 1.5), (0, 0.9), (100, 0.4)),
            reflexes=(AcousticReflex("right", "ipsilateral", 1000, 85, True),),
        ),
        CaloricMeasurement(
            key,
            entries=(
                CaloricEntry("right", "44C", 40, 160),
                CaloricEntry("right", "30C", 40, 150),
                CaloricEntry("left", "44C", 40, 120),
                CaloricEntry("left", "30C", 40, 130),
            ),
        ),
    ]


def make_second_ear_parts(key: ExamKey) -> list:
    """Left-ear speech and impedance records for the same exam."""
    return [
        SpeechAudiometryRecord(key, ear="left", trials=(SpeechTrial(20, 50.0),)),
        TympanogramTrace(
            key, ear="left", samples=((-200, 0.3), (0, 1.2), (100, 0.5))
        ),
    ]


@pytest.fixture
def full_exam_parts(key):
    return make_full_exam_parts(key)


@pytest.fixture
def second_ear_parts(key):
    return make_second_ear_parts(key)
