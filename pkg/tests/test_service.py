"""HTTP facade: endpoint behavior, error mapping, and token handling."""

import pytest
from fastapi.testclient import TestClient

from otokit.model import PatientRecord, exam_aggregate
from otokit.service import create_app, exam_metrics

EXAM = "/patients/P001/exams/2024-03-01"


@pytest.fixture
def client(tmp_path):
    app = create_app(str(tmp_path / "store.otks"), str(tmp_path / "creds.json"))
    with TestClient(app) as c:
        yield c


@pytest.fixture
def session(client):
    r = client.post("/auth/register", json={"username": "doc", "password": "longenough"})
    assert r.status_code == 200
    return {"Authorization": f"Bearer {r.json()['token']}"}


@pytest.fixture
def loaded(client, session, full_exam_parts, second_ear_parts):
    from otokit.model import record_slug

    for record in full_exam_parts + second_ear_parts:
        slug = record_slug(record)
        r = client.put(f"{EXAM}/{slug}", json=record.to_dict(), headers=session)
        assert r.status_code == 200, r.text
    return session


def test_health_is_public(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_register_then_login(client):
    r = client.post("/auth/register", json={"username": "doc", "password": "longenough"})
    assert r.status_code == 200
    assert set(r.json()) == {"token", "expires_at"}
    r2 = client.post("/auth/login", json={"username": "doc", "password": "longenough"})
    assert r2.status_code == 200
    assert r2.json()["token"] != r.json()["token"]


def test_register_weak_password(client):
    r = client.post("/auth/register", json={"username": "doc", "password": "short"})
    assert r.status_code == 422
    assert set(r.json()) == {"code", "message", "details"}


def test_register_duplicate(client, session):
    r = client.post("/auth/register", json={"username": "doc", "password": "otherlong"})
    assert r.status_code == 409


def test_login_wrong_password(client, session):
    r = client.post("/auth/login", json={"username": "doc", "password": "wrongwrong"})
    assert r.status_code == 401


def test_requests_without_token_rejected(client):
    for call in [
        lambda: client.get(f"{EXAM}"),
        lambda: client.get("/search", params={"patient_id": "P001"}),
        lambda: client.delete(EXAM),
    ]:
        assert call().status_code == 401


def test_bogus_token_rejected(client, session):
    r = client.get(EXAM, headers={"Authorization": "Bearer nonsense"})
    assert r.status_code == 401


def test_put_then_get_record(client, session, key):
    patient = PatientRecord(key, name="John Smith", age=42)
    r = client.put(f"{EXAM}/patient", json=patient.to_dict(), headers=session)
    assert r.status_code == 200
    assert r.json() == patient.to_dict()
    r2 = client.get(f"{EXAM}/patient", headers=session)
    assert r2.json() == patient.to_dict()


def test_put_key_mismatch_is_422(client, session, key):
    patient = PatientRecord(key, name="X", age=1)
    r = client.put(
        "/patients/OTHER/exams/2024-03-01/patient", json=patient.to_dict(), headers=session
    )
    assert r.status_code == 422
    assert r.json()["code"] == "key-mismatch"


def test_put_invalid_record_is_422_and_preserves_state(client, session, key):
    good = PatientRecord(key, name="Before", age=42)
    client.put(f"{EXAM}/patient", json=good.to_dict(), headers=session)
    bad = dict(good.to_dict(), age=999)
    r = client.put(f"{EXAM}/patient", json=bad, headers=session)
    assert r.status_code == 422
    assert client.get(f"{EXAM}/patient", headers=session).json()["age"] == 42


def test_get_unknown_category(client, session):
    assert client.get(f"{EXAM}/nonsense", headers=session).status_code == 404


def test_get_missing_record(client, loaded):
    r = client.get("/patients/P001/exams/1999-01-01/patient", headers=loaded)
    assert r.status_code == 404


def test_exam_aggregate_endpoint(client, loaded, key, full_exam_parts, second_ear_parts):
    agg = exam_aggregate(key, full_exam_parts + second_ear_parts)
    r = client.get(EXAM, headers=loaded)
    assert r.status_code == 200
    assert r.json() == agg.to_dict()


def test_ear_merged_category_shape(client, loaded):
    body = client.get(f"{EXAM}/speech", headers=loaded).json()
    assert set(body) == {"right", "left"}
    assert body["right"]["ear"] == "right"


def test_delete_reports_rows_removed(client, loaded):
    assert client.delete(EXAM, headers=loaded).json() == {"rows_removed": 17}
    assert client.delete(EXAM, headers=loaded).json() == {"rows_removed": 0}
    assert client.get(EXAM, headers=loaded).status_code == 404


def test_search_endpoint(client, loaded):
    r = client.get("/search", params={"name": "john"}, headers=loaded)
    assert r.status_code == 200
    results = r.json()["results"]
    assert [x["patient_id"] for x in results] == ["P001"]
    assert set(results[0]) == {"patient_id", "exam_date", "name", "diagnosis"}


def test_search_without_criteria_is_422(client, loaded):
    assert client.get("/search", headers=loaded).status_code == 422


def test_metrics_endpoint_matches_direct_call(
    client, loaded, key, full_exam_parts, second_ear_parts
):
    agg = exam_aggregate(key, full_exam_parts + second_ear_parts)
    r = client.get(f"{EXAM}/metrics", headers=loaded)
    assert r.status_code == 200
    body = r.json()
    assert body == exam_metrics(agg)
    assert body["disability"]["disability_pct"] == 5.0
    assert body["caloric"]["canal_paresis_pct"] == 15.0
    assert body["speech"]["right"]["srt"] == 30


def test_metrics_single_ear_thresholds_is_422(client, session, key):
    from otokit.model import PureToneRecord

    client.put(
        f"{EXAM}/ac_unmasked",
        json=PureToneRecord(key, "ac_unmasked", right={500: 30}, left=None).to_dict(),
        headers=session,
    )
    r = client.get(f"{EXAM}/metrics", headers=session)
    assert r.status_code == 422
    assert r.json()["details"]["missing_ears"] == ["left"]


@pytest.mark.parametrize(
    "kind", ["audiogram", "speech", "tympanogram", "calorigram", "laddergram"]
)
def test_chart_endpoints(client, loaded, kind):
    r = client.get(f"{EXAM}/charts/{kind}.svg", headers=loaded)
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("image/svg+xml")
    assert r.text.strip().endswith("</svg>")


def test_chart_unknown_kind(client, loaded):
    assert client.get(f"{EXAM}/charts/piechart.svg", headers=loaded).status_code == 404


def test_chart_audiogram_category_filter(client, loaded):
    r = client.get(
        f"{EXAM}/charts/audiogram.svg",
        params={"categories": "ac_unmasked", "ear": "right"},
        headers=loaded,
    )
    assert r.status_code == 200
    assert 'class="mark ac_unmasked_right"' in r.text
    assert "ac_masked_right" not in r.text


def test_report_pdf_pinned_timestamp_is_deterministic(client, loaded):
    params = {"generated_at": "2024-03-01T12:00:00+00:00"}
    a = client.get(f"{EXAM}/report.pdf", params=params, headers=loaded)
    b = client.get(f"{EXAM}/report.pdf", params=params, headers=loaded)
    assert a.status_code == 200
    assert a.headers["content-type"] == "application/pdf"
    assert a.content == b.content
    assert a.content.startswith(b"%PDF")


def test_report_html(client, loaded):
    r = client.get(f"{EXAM}/report.html", headers=loaded)
    assert r.status_code == 200
    assert "John Smith" in r.text


def test_error_body_shape(client, loaded):
    r = client.get("/patients/NOBODY/exams/2024-01-01", headers=loaded)
    assert r.status_code == 404
    body = r.json()
    assert set(body) == {"code", "message", "details"}
    assert body["code"] == "not-found"


def test_second_user_cannot_unlock_store(client, session):
    r = client.post(
        "/auth/register", json={"username": "intruder", "password": "longenough"}
    )
    assert r.status_code == 401
