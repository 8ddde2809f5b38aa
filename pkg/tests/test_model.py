"""Domain record validation, aggregation, and canonical JSON round trips."""

import pytest
from hypothesis import given, strategies as st

from otokit.errors import KeyMismatchError
from otokit.model import (
    CATEGORY_SLUGS,
    STANDARD_FREQUENCIES,
    CaloricEntry,
    CaloricMeasurement,
    ExamKey,
    PatientRecord,
    PureToneRecord,
    SisiRecord,
    SpecialTestRecord,
    SpeechAudiometryRecord,
    SpeechTrial,
    ThresholdSeries,
    TympanogramTrace,
    canonical_json,
    exam_aggregate,
    record_from_dict,
    record_slug,
    validate,
)


def test_exam_key_valid(key):
    assert key.violations() == []


@pytest.mark.parametrize(
    "patient_id,exam_date",
    [("", "2024-03-01"), ("  ", "2024-03-01"), ("p1", "2024-13-01"), ("p1", "not-a-date")],
)
def test_exam_key_invalid(patient_id, exam_date):
    assert ExamKey(patient_id, exam_date).violations()


def test_threshold_series_level_out_of_range():
    s = ThresholdSeries("right", "ac_unmasked", {1000: 130})
    violations = validate(s)
    assert any("out of [-10,120]" in v for v in violations)


def test_threshold_series_bc_above_4k():
    s = ThresholdSeries("right", "bc_unmasked", {6000: 30})
    assert any("above 4000 Hz" in v for v in validate(s))


def test_threshold_series_nonstandard_frequency():
    s = ThresholdSeries("right", "ac_unmasked", {440: 30})
    assert any("standard audiometric set" in v for v in validate(s))


def test_caloric_ok(key):
    m = CaloricMeasurement(
        key,
        entries=tuple(
            CaloricEntry(ear, temp, 40, 100)
            for ear in ("right", "left")
            for temp in ("30C", "44C")
        ),
    )
    assert validate(m) == []


def test_caloric_end_before_start(key):
    m = CaloricMeasurement(key, entries=(CaloricEntry("right", "44C", 160, 40),))
    assert any("before start" in v for v in validate(m))


def test_speech_intensity_not_multiple_of_5(key):
    rec = SpeechAudiometryRecord(key, "right", trials=(SpeechTrial(37, 50.0),))
    assert any("not a multiple of 5" in v for v in validate(rec))


def test_tympanogram_unsorted_pressures(key):
    t = TympanogramTrace(key, "right", samples=((0, 1.0), (-100, 0.5)))
    assert any("strictly increasing" in v for v in validate(t))


def test_patient_age_bounds(key):
    assert validate(PatientRecord(key, age=151))
    assert validate(PatientRecord(key, age=150)) == []


def test_special_test_record_delegates(key):
    rec = SpecialTestRecord(key, sisi=SisiRecord(key, "right", 20, 25))
    assert any("pulses_heard" in v for v in validate(rec))
    assert len(rec.parts()) == 1


def test_all_fixture_records_valid(full_exam_parts):
    for record in full_exam_parts:
        assert validate(record) == [], record


def test_validate_returns_each_violation_once(key):
    s = ThresholdSeries("up", "nope", {})
    violations = validate(s)
    assert len(violations) == len(set(violations))


def test_exam_aggregate_single_part(key):
    agg = exam_aggregate(key, [PatientRecord(key, name="A", age=1)])
    assert agg.filled_slots() == ["patient"]


def test_exam_aggregate_key_mismatch(key):
    other = ExamKey("P001", "2024-04-01")
    with pytest.raises(KeyMismatchError):
        exam_aggregate(key, [PatientRecord(key), PatientRecord(other)])


def test_exam_aggregate_full(key, full_exam_parts):
    agg = exam_aggregate(key, full_exam_parts)
    assert agg.filled_slots() == list(CATEGORY_SLUGS)


def test_aggregate_dict_round_trip(key, full_exam_parts, second_ear_parts):
    from otokit.model import ExamAggregate

    agg = exam_aggregate(key, full_exam_parts + second_ear_parts)
    again = ExamAggregate.from_dict(agg.to_dict())
    assert canonical_json(again.to_dict()) == canonical_json(agg.to_dict())


def test_record_json_round_trip(full_exam_parts, second_ear_parts):
    for record in full_exam_parts + second_ear_parts:
        slug = record_slug(record)
        back = record_from_dict(slug, record.to_dict())
        assert back == record
        assert canonical_json(back) == canonical_json(record)
        assert validate(back) == []


# -- property tests ----------------------------------------------------------

levels = st.integers(min_value=-10, max_value=120)
freqs = st.sampled_from(STANDARD_FREQUENCIES)


@given(
    ear=st.sampled_from(("right", "left")),
    points=st.dictionaries(st.sampled_from((125, 250, 500, 1000, 2000, 4000)), levels),
)
def test_valid_series_round_trip_stays_valid(ear, points):
    s = ThresholdSeries(ear, "bc_unmasked", points)
    assert validate(s) == []
    back = ThresholdSeries.from_dict(s.to_dict())
    assert back == s and validate(back) == []


@given(
    points=st.dictionaries(freqs, st.integers(min_value=-200, max_value=300)),
    category=st.sampled_from(("ac_unmasked", "bc_masked")),
)
def test_validation_total_and_idempotent(points, category):
    s = ThresholdSeries("right", category, points)
    first = validate(s)
    assert validate(s) == first  # pure and repeatable


def test_validation_never_raises_on_junk(key):
    weird = [
        PatientRecord(key, age=-3, sex="unknown"),
        SpeechAudiometryRecord(key, "middle", trials=(SpeechTrial(13, 180.0),)),
        CaloricMeasurement(key, entries=(CaloricEntry("both", "50C", -1, -2),)),
    ]
    for record in weird:
        assert isinstance(validate(record), list) and validate(record)
