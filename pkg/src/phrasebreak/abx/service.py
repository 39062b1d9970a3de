"""HTTP service hosting ABX listening sessions.

Endpoints (JSON bodies, UTF-8):
  POST /api/sessions                     -> 201 session plan with audio URLs
  GET  /api/sessions/{id}                -> 200 session state (for resume)
  GET  /api/audio/{token}                -> 200 audio bytes
  POST /api/sessions/{id}/responses      -> 204; 409 on duplicate
  GET  /api/export                       -> 200 response log as JSON Lines
  /                                      -> the frontend bundle
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Header, HTTPException, Response
from fastapi.responses import FileResponse, HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from phrasebreak.abx.manifest import StimulusManifest, media_type_for
from phrasebreak.abx.store import (
    AbxStore,
    DuplicateResponseError,
    OutOfOrderError,
    Session,
    TrialOutOfRangeError,
    UnknownSessionError,
)

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>ABX listening test</title></head>
<body><p>No frontend bundle is installed. Point --static-dir at a built
bundle, or drive the JSON API directly.</p></body></html>
"""


class ResponseBody(BaseModel):
    trial: int
    choice: Literal["A", "B", "none"]


def _trial_payload(session: Session) -> list[dict]:
    return [
        {
            "index": trial.index,
            "audio_a_url": f"/api/audio/{trial.token_a}",
            "audio_b_url": f"/api/audio/{trial.token_b}",
        }
        for trial in session.trials
    ]


def create_app(manifest: StimulusManifest, store: AbxStore,
               admin_secret: str | None = None, static_dir=None,
               enforce_order: bool = True) -> FastAPI:
    app = FastAPI(title="ABX listening test")

    @app.post("/api/sessions", status_code=201)
    def create_session():
        session = store.create_session(manifest)
        return {
            "session_id": session.session_id,
            "trials": _trial_payload(session),
        }

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = store.get_session(session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        answered = sorted(session.answered)
        remaining = [i for i in range(session.trial_count) if i not in session.answered]
        return {
            "session_id": session.session_id,
            "trials": _trial_payload(session),
            "answered": answered,
            "completed": session.completed,
            "next_trial": remaining[0] if remaining else None,
        }

    @app.get("/api/audio/{token}")
    def get_audio(token: str):
        path = store.find_audio(token)
        if path is None:
            raise HTTPException(status_code=404, detail="unknown audio token")
        return FileResponse(path, media_type=media_type_for(path))

    @app.post("/api/sessions/{session_id}/responses", status_code=204)
    def post_response(session_id: str, body: ResponseBody):
        try:
            store.record_response(
                session_id, body.trial, body.choice, enforce_order=enforce_order
            )
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except TrialOutOfRangeError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except DuplicateResponseError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except OutOfOrderError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return Response(status_code=204)

    @app.get("/api/export")
    def export(x_admin_secret: str | None = Header(default=None)):
        if admin_secret is not None and x_admin_secret != admin_secret:
            raise HTTPException(status_code=401, detail="missing or wrong admin secret")
        return PlainTextResponse(store.export_raw(), media_type="application/x-ndjson")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="frontend")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _PLACEHOLDER_PAGE

    return app


def serve(manifest_path, port: int, responses_path, admin_secret: str | None = None,
          static_dir=None, enforce_order: bool = True, host: str = "127.0.0.1"):
    """Run the service until interrupted."""
    import uvicorn

    manifest = StimulusManifest.from_json(manifest_path)
    store = AbxStore(responses_path)
    app = create_app(
        manifest, store,
        admin_secret=admin_secret, static_dir=static_dir, enforce_order=enforce_order,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")
