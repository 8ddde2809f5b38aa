"""Local HTTP facade over auth, storage, metrics, charts, and reports.

Every endpoint is a thin adapter: it decodes the canonical JSON wire format,
calls the corresponding module operation, and serializes the result. Domain
errors map onto stable JSON bodies ``{code, message, details}``.

Sessions are in-memory bearer tokens (12 hour lifetime); the store
encryption key never appears in any response.
"""

from __future__ import annotations

import hmac
import os
import secrets
import threading
import time
from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, Query, Request
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__, auth, metrics
from .charts import (
    AudiogramSelection,
    render_audiogram,
    render_calorigram,
    render_laddergram,
    render_speech_audiogram,
    render_tympanogram,
)
from .errors import (
    AlreadyExistsError,
    AuthenticationFailure,
    EmptyChartError,
    IncompleteDataError,
    KeyMismatchError,
    NotFoundError,
    OtokitError,
    RecordInvalidError,
    SchemaVersionError,
    StoreStateError,
    UndefinedMetricError,
    WeakPasswordError,
)
from .model import CATEGORIES, CATEGORY_SLUGS, ExamAggregate, ExamKey, record_from_dict
from .report import build_report, export_html, export_pdf
from .store import SearchCriteria, Store

TOKEN_TTL_SECONDS = 12 * 3600

_STATUS = {
    AuthenticationFailure: 401,
    NotFoundError: 404,
    AlreadyExistsError: 409,
    RecordInvalidError: 422,
    IncompleteDataError: 422,
    KeyMismatchError: 422,
    UndefinedMetricError: 422,
    EmptyChartError: 422,
    WeakPasswordError: 422,
    StoreStateError: 500,
    SchemaVersionError: 500,
}


@dataclass
class _Session:
    username: str
    expires_at: float


class _State:
    """Mutable service state: the open store and the session table."""

    def __init__(self, store_path: str, credentials_path: str):
        self.store_path = store_path
        self.credentials_path = credentials_path
        self.store: Store | None = None
        self.store_key: bytes | None = None
        self.sessions: dict[str, _Session] = {}
        self.lock = threading.Lock()

    def bind_store(self, key: bytes) -> None:
        with self.lock:
            if self.store is not None:
                # One store, one key: a second user cannot unlock it.
                if not hmac.compare_digest(self.store_key, key):
                    raise AuthenticationFailure(
                        "store is bound to the key of the user who created it"
                    )
                return
            if os.path.exists(self.store_path):
                self.store = Store.open(self.store_path, key)
            else:
                self.store = Store.create(self.store_path, key)
            self.store_key = key

    def new_session(self, username: str) -> dict:
        token = secrets.token_urlsafe(32)
        expires_at = time.time() + TOKEN_TTL_SECONDS
        with self.lock:
            self.sessions[token] = _Session(username, expires_at)
        return {"token": token, "expires_at": expires_at}

    def check_token(self, token: str) -> _Session:
        with self.lock:
            session = self.sessions.get(token)
            if session is None or session.expires_at < time.time():
                self.sessions.pop(token, None)
                raise AuthenticationFailure("missing, unknown, or expired session token")
            return session

    def require_store(self) -> Store:
        if self.store is None:
            raise StoreStateError("no store is open; log in first")
        return self.store


class _Credentials(BaseModel):
    username: str
    password: str


def exam_metrics(agg: ExamAggregate) -> dict:
    """Every metric computable from the aggregate, grouped by test.

    Absent test slots are omitted (null); a slot that is present but lacks
    required values raises, so the HTTP layer answers 422.
    """
    out: dict = {"disability": None, "speech": None, "sisi": None, "caloric": None,
                 "peak_pressure": None}
    rec = agg.ac_unmasked
    if rec is not None:
        if rec.right is None or rec.left is None:
            missing = [ear for ear in ("right", "left")
                       if (rec.right if ear == "right" else rec.left) is None]
            raise IncompleteDataError(
                "unmasked AC thresholds missing for " + ", ".join(missing) + " ear",
                {"missing_ears": missing},
            )
        m = metrics.disability_metrics(rec.series("right"), rec.series("left"))
        out["disability"] = {
            "avg_speech_perception_right": m.avg_speech_perception_right,
            "avg_speech_perception_left": m.avg_speech_perception_left,
            "impairment_right_pct": m.impairment_right_pct,
            "impairment_left_pct": m.impairment_left_pct,
            "disability_pct": m.disability_pct,
        }
    speech = {}
    for srec in agg.speech_records():
        speech[srec.ear] = {
            "srt": metrics.speech_reception_threshold(srec),
            "sd_score": srec.sd_score,
            "sd_intensity": srec.sd_intensity,
        }
    if speech:
        out["speech"] = speech
    if agg.sisi is not None:
        out["sisi"] = {
            "ear": agg.sisi.ear,
            "score_pct": metrics.sisi_score_pct(agg.sisi.pulses_heard),
        }
    if agg.caloric is not None:
        m = agg.caloric
        out["caloric"] = {
            "canal_paresis_pct": metrics.canal_paresis_pct(m),
            "directional_preponderance_pct": metrics.directional_preponderance_pct(m),
            "durations": {
                f"{e.ear}_{e.temperature.lower()}": e.duration for e in m.entries
            },
        }
    peaks = {}
    for trace in agg.impedance_traces():
        if trace.samples:
            peak_p, peak_c = max(trace.samples, key=lambda s: s[1])
            for p, c in trace.samples:
                if c == peak_c:
                    peak_p = p
                    break
            peaks[trace.ear] = peak_p
    if peaks:
        out["peak_pressure"] = peaks
    return out


def exam_chart(agg: ExamAggregate, kind: str, ear: str = "both",
               categories: str | None = None):
    """Render one of the five chart kinds from an exam aggregate."""
    if kind == "audiogram":
        if categories:
            cats = tuple(c for c in categories.split(",") if c)
        else:
            cats = CATEGORIES
        series = []
        for slug in CATEGORIES:
            record = agg.slot(slug)
            if record is not None:
                series.extend(record.all_series())
        return render_audiogram(series, AudiogramSelection(ear_filter=ear, categories=cats))
    if kind == "speech":
        return render_speech_audiogram(agg.speech_records())
    if kind == "tympanogram":
        return render_tympanogram(agg.impedance_traces())
    if kind == "calorigram":
        if agg.caloric is None:
            raise IncompleteDataError("no caloric measurement recorded")
        return render_calorigram(agg.caloric)
    if kind == "laddergram":
        if agg.ablb is None:
            raise EmptyChartError("no loudness balance pairs recorded")
        return render_laddergram(list(agg.ablb.pairs))
    raise NotFoundError(f"unknown chart kind {kind!r}")


def create_app(store_path: str, credentials_path: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="otokit", version=__version__)
    state = _State(store_path, credentials_path)
    app.state.otokit = state

    @app.exception_handler(OtokitError)
    async def _domain_error(request: Request, exc: OtokitError):
        status = _STATUS.get(type(exc), 500)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "details": exc.details},
        )

    def current_session(authorization: str | None = Header(default=None)) -> _Session:
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthenticationFailure("missing bearer token")
        return state.check_token(authorization.removeprefix("Bearer "))

    def _key(patient_id: str, exam_date: str) -> ExamKey:
        return ExamKey(patient_id=patient_id, exam_date=exam_date)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/auth/register")
    def register(body: _Credentials):
        _, key = auth.register(body.username, body.password, state.credentials_path)
        state.bind_store(key)
        return state.new_session(body.username)

    @app.post("/auth/login")
    def login(body: _Credentials):
        key = auth.login(body.username, body.password, state.credentials_path)
        state.bind_store(key)
        return state.new_session(body.username)

    @app.get("/search")
    def search(
        patient_id: str | None = None,
        name: str | None = None,
        date_from: str | None = None,
        date_to: str | None = None,
        _: _Session = Depends(current_session),
    ):
        criteria = SearchCriteria(
            patient_id=patient_id,
            name_substring=name,
            date_from=date_from,
            date_to=date_to,
        )
        results = state.require_store().search(criteria)
        return {"results": [r.to_dict() for r in results]}

    @app.get("/patients/{patient_id}/exams/{exam_date}")
    def get_exam(patient_id: str, exam_date: str, _: _Session = Depends(current_session)):
        return state.require_store().get_exam(_key(patient_id, exam_date)).to_dict()

    @app.delete("/patients/{patient_id}/exams/{exam_date}")
    def delete_exam(patient_id: str, exam_date: str, _: _Session = Depends(current_session)):
        removed = state.require_store().delete_exam(_key(patient_id, exam_date))
        return {"rows_removed": removed}

    @app.get("/patients/{patient_id}/exams/{exam_date}/metrics")
    def get_metrics(patient_id: str, exam_date: str, _: _Session = Depends(current_session)):
        agg = state.require_store().get_exam(_key(patient_id, exam_date))
        return exam_metrics(agg)

    @app.get("/patients/{patient_id}/exams/{exam_date}/charts/{kind}.svg")
    def get_chart(
        patient_id: str,
        exam_date: str,
        kind: str,
        ear: str = Query(default="both"),
        categories: str | None = Query(default=None),
        _: _Session = Depends(current_session),
    ):
        agg = state.require_store().get_exam(_key(patient_id, exam_date))
        chart = exam_chart(agg, kind, ear=ear, categories=categories)
        return Response(content=chart.svg, media_type="image/svg+xml")

    @app.get("/patients/{patient_id}/exams/{exam_date}/report.pdf")
    def get_report_pdf(
        patient_id: str,
        exam_date: str,
        generated_at: str | None = Query(default=None),
        _: _Session = Depends(current_session),
    ):
        from datetime import datetime

        agg = state.require_store().get_exam(_key(patient_id, exam_date))
        pinned = datetime.fromisoformat(generated_at) if generated_at else None
        doc = build_report(agg, generated_at=pinned)
        return Response(content=export_pdf(doc), media_type="application/pdf")

    @app.get("/patients/{patient_id}/exams/{exam_date}/report.html")
    def get_report_html(
        patient_id: str, exam_date: str, _: _Session = Depends(current_session)
    ):
        agg = state.require_store().get_exam(_key(patient_id, exam_date))
        return HTMLResponse(export_html(build_report(agg)))

    @app.get("/patients/{patient_id}/exams/{exam_date}/{category}")
    def get_record(
        patient_id: str,
        exam_date: str,
        category: str,
        _: _Session = Depends(current_session),
    ):
        if category not in CATEGORY_SLUGS:
            raise NotFoundError(f"unknown category {category!r}")
        agg = state.require_store().get_exam(_key(patient_id, exam_date))
        value = agg.slot(category)
        if value is None:
            raise NotFoundError(f"no {category} record for this exam")
        if isinstance(value, dict):  # per-ear slots
            return {
                ear: rec.to_dict() if rec else None for ear, rec in value.items()
            }
        return value.to_dict()

    @app.put("/patients/{patient_id}/exams/{exam_date}/{category}")
    def put_record(
        patient_id: str,
        exam_date: str,
        category: str,
        body: dict,
        _: _Session = Depends(current_session),
    ):
        if category not in CATEGORY_SLUGS:
            raise NotFoundError(f"unknown category {category!r}")
        try:
            record = record_from_dict(category, body)
        except (KeyError, TypeError, ValueError) as exc:
            raise RecordInvalidError([f"malformed {category} record: {exc}"]) from None
        if record.key != _key(patient_id, exam_date):
            raise KeyMismatchError(
                "record key does not match the URL",
                {"url": _key(patient_id, exam_date).to_dict(), "body": record.key.to_dict()},
            )
        state.require_store().upsert(record)
        return record.to_dict()

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
