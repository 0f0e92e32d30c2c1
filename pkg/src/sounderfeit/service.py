"""Network front door: model metadata, live audio streaming, WAV rendering.

One model per process; each websocket session owns an independent synth
engine.  Control messages follow the synthengine mailbox contract: the
latest clamped value wins.
"""

from __future__ import annotations

import argparse
import asyncio
import io
import json
import os
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .adversarial import load_model
from .dataset import COND_PARAM_NAMES
from .synthengine import (HOP, ControlCurve, ControlSnapshot, OlaSynth,
                          render_blocks, write_wav)
from .waveguide import SAMPLE_RATE

FRAME_SAMPLES = 4800            # 100 ms of audio per wire frame
FRAME_SECONDS = FRAME_SAMPLES / SAMPLE_RATE
BLOCKS_PER_FRAME = FRAME_SAMPLES // HOP
MAX_RENDER_SECONDS = 60.0

DEFAULT_PORT = 8765


class _ProtocolError(Exception):
    """Client sent a message that violates the stream protocol."""


@dataclass
class ServiceState:
    model: object = None
    model_path: str = ""


def param_descriptors(model):
    """Knob metadata: conditional dims first (y0..), then latent (z0..)."""
    params = []
    for d in range(model.n_cond):
        label = (COND_PARAM_NAMES[d] if d < len(COND_PARAM_NAMES)
                 else f"y{d}")
        params.append({"name": f"y{d}", "kind": "cond", "label": label})
    for d in range(model.n_latent):
        params.append({"name": f"z{d}", "kind": "latent", "label": f"z{d}"})
    return params


class RenderRequest(BaseModel):
    duration: float
    controls: list[list[float]]


def _require_model(state):
    if state.model is None:
        raise HTTPException(status_code=503, detail="no model loaded")
    return state.model


def create_app(model=None, static_dir=None):
    app = FastAPI(title="sounderfeit")
    state = ServiceState(model=model)
    app.state.service = state

    @app.get("/api/model")
    def model_metadata():
        m = _require_model(state)
        return {
            "condition": m.condition_name,
            "n_latent": m.n_latent,
            "n_cond": m.n_cond,
            "params": param_descriptors(m),
            "corpus_hash": m.corpus_hash,
            "sample_rate": SAMPLE_RATE,
        }

    @app.post("/api/render")
    def render(req: RenderRequest):
        m = _require_model(state)
        if not (0.0 < req.duration <= MAX_RENDER_SECONDS):
            raise HTTPException(
                status_code=422,
                detail=f"duration must be in (0, {MAX_RENDER_SECONDS}] s")
        n_dims = m.n_cond + m.n_latent
        if not req.controls:
            raise HTTPException(status_code=422,
                                detail="controls must have at least one row")
        for row in req.controls:
            if len(row) != n_dims + 1:
                raise HTTPException(
                    status_code=422,
                    detail=f"each control row needs 1 + {n_dims} values")
        try:
            curve = ControlCurve.from_rows(req.controls)
        except ValueError as e:
            raise HTTPException(status_code=422, detail=str(e)) from e
        samples = render_blocks(m, curve, req.duration)
        buf = io.BytesIO()
        write_wav(buf, samples)
        return Response(content=buf.getvalue(), media_type="audio/wav")

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        if state.model is None:
            await ws.close(code=1013)
            return
        await ws.accept()
        m = state.model
        engine = OlaSynth(m)
        y = np.zeros(m.n_cond)
        z = np.zeros(m.n_latent)
        valid = {p["name"] for p in param_descriptors(m)}

        async def handle_messages():
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError as e:
                    raise _ProtocolError("not JSON") from e
                if (not isinstance(msg, dict) or msg.get("type") != "set"
                        or not isinstance(msg.get("name"), str)
                        or not isinstance(msg.get("value"), (int, float))):
                    raise _ProtocolError("expected {type:set,name,value}")
                name = msg["name"]
                if name not in valid:
                    await ws.send_text(json.dumps(
                        {"type": "error",
                         "message": f"unknown parameter {name!r}"}))
                    continue
                value = float(np.clip(msg["value"], -1.0, 1.0))
                idx = int(name[1:])
                if name[0] == "y":
                    y[idx] = value
                else:
                    z[idx] = value
                engine.set_controls(ControlSnapshot.make(
                    y, z, m.n_cond, m.n_latent))
                await ws.send_text(json.dumps(
                    {"type": "ack", "name": name, "value": value}))

        receiver = asyncio.ensure_future(handle_messages())
        loop = asyncio.get_event_loop()
        t0 = loop.time()
        frame = np.empty(FRAME_SAMPLES, dtype="<f4")
        n_sent = 0
        try:
            while True:
                if receiver.done():
                    exc = receiver.exception()
                    if isinstance(exc, _ProtocolError):
                        await ws.close(code=1002)
                    return
                for b in range(BLOCKS_PER_FRAME):
                    frame[b * HOP:(b + 1) * HOP] = engine.synth_block()
                await ws.send_bytes(frame.tobytes())
                n_sent += 1
                delay = t0 + n_sent * FRAME_SECONDS - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
        except WebSocketDisconnect:
            pass
        finally:
            receiver.cancel()

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="static")
    return app


def build_arg_parser():
    p = argparse.ArgumentParser(prog="sounderfeit-serve")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("SOUNDERFEIT_PORT",
                                              DEFAULT_PORT)))
    p.add_argument("--static-dir", default=None)
    return p


def serve(model_path, port=DEFAULT_PORT, static_dir=None, host="127.0.0.1"):
    import uvicorn
    model = load_model(model_path)
    app = create_app(model=model, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
