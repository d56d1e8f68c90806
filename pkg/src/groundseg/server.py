"""HTTP annotation service over flood labeling and model inference.

Serves the frames of one data directory (``.bin`` clouds, ``.gsl`` labels
saved alongside). Each frame has a session with a monotonically increasing
revision; mutating requests carry the revision they saw and are rejected
with 409 when stale. Mutations of one frame are serialized by a per-session
lock; saving replaces the label file atomically.

Cloud stream format (``GET /frames/{id}/cloud``): 16-byte header (magic
"GSC1", u32 version=1, u32 point count, 4 reserved bytes), then the XYZIR
point records (20 bytes each), then one label byte per point.
"""

from __future__ import annotations

import os
import struct
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import encoder, flood, labels as lbl, nn
from .cloud import PointCloud, derive_rings, load_kitti_bin, xyzir_bytes
from .encoder import BinGrid, DenseFrame, EncoderConfig
from .errors import GroundSegError, InvalidSeedError

CLOUD_STREAM_MAGIC = b"GSC1"
CLOUD_STREAM_VERSION = 1


@dataclass
class Session:
    """Mutable annotation state of one frame."""

    frame_id: str
    cloud: PointCloud
    frame: DenseFrame
    grid: BinGrid
    labels: lbl.PointLabels
    revision: int = 0
    dirty: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


class FloodRequest(BaseModel):
    seeds: list[tuple[int, int]]
    t1: float = 0.03
    t2: float = 0.07
    revision: int


class ToggleRequest(BaseModel):
    indices: list[int]
    value: int
    revision: int


class SaveRequest(BaseModel):
    revision: int


def create_app(data_dir: str | Path,
               encoder_cfg: EncoderConfig = EncoderConfig(),
               layout: str = "xyzi") -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="groundseg annotation server")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    model_cache: dict[tuple[str, float], nn.NetworkSpec] = {}

    def frame_ids() -> list[str]:
        return sorted(p.stem for p in data_dir.glob("*.bin"))

    def label_path(frame_id: str) -> Path:
        return data_dir / f"{frame_id}.gsl"

    def session(frame_id: str) -> Session:
        with sessions_lock:
            if frame_id in sessions:
                return sessions[frame_id]
        if frame_id not in frame_ids():
            raise HTTPException(404, f"unknown frame {frame_id}")
        cloud = derive_rings(load_kitti_bin(data_dir / f"{frame_id}.bin", layout,
                                            encoder_cfg.num_rings))
        frame, grid = encoder.encode_frame(cloud, encoder_cfg)
        if label_path(frame_id).exists():
            point_labels = lbl.load_labels(label_path(frame_id))
            if len(point_labels) != len(cloud):
                raise HTTPException(500, f"label file for {frame_id} has wrong length")
        else:
            point_labels = lbl.PointLabels.unlabeled(len(cloud), frame_id)
        fresh = Session(frame_id, cloud, frame, grid, point_labels)
        with sessions_lock:
            return sessions.setdefault(frame_id, fresh)

    def check_revision(sess: Session, revision: int) -> None:
        if revision != sess.revision:
            raise HTTPException(
                409, f"stale revision {revision}, current is {sess.revision}")

    @app.get("/frames")
    def list_frames():
        out = []
        for frame_id in frame_ids():
            sess = session(frame_id)
            out.append({
                "frame_id": frame_id,
                "point_count": len(sess.cloud),
                "labeled_fraction": sess.labels.labeled_fraction(),
            })
        return out

    @app.get("/frames/{frame_id}/cloud")
    def get_cloud(frame_id: str):
        sess = session(frame_id)
        with sess.lock:
            body = (CLOUD_STREAM_MAGIC
                    + struct.pack("<II4x", CLOUD_STREAM_VERSION, len(sess.cloud))
                    + xyzir_bytes(sess.cloud)
                    + sess.labels.labels.tobytes())
            return Response(content=body, media_type="application/octet-stream",
                            headers={"X-Revision": str(sess.revision)})

    @app.get("/frames/{frame_id}/state")
    def get_state(frame_id: str):
        sess = session(frame_id)
        return {"frame_id": frame_id, "revision": sess.revision,
                "dirty": sess.dirty,
                "labeled_fraction": sess.labels.labeled_fraction()}

    @app.post("/frames/{frame_id}/flood")
    def post_flood(frame_id: str, req: FloodRequest):
        sess = session(frame_id)
        try:
            cfg = flood.FloodConfig(req.t1, req.t2)
        except GroundSegError as exc:
            raise HTTPException(400, str(exc)) from exc
        with sess.lock:
            check_revision(sess, req.revision)
            seeds = [flood.SeedPoint(r, c) for r, c in req.seeds]
            try:
                updated = flood.apply_seeds(sess.grid, sess.frame, seeds, cfg,
                                            sess.labels)
            except IndexError as exc:
                raise HTTPException(400, str(exc)) from exc
            except InvalidSeedError as exc:
                raise HTTPException(422, str(exc)) from exc
            changed = (updated.labels != sess.labels.labels).nonzero()[0]
            if changed.size:
                sess.labels = updated
                sess.dirty = True
            sess.revision += 1
            return {"changed_point_indices": changed.tolist(),
                    "new_revision": sess.revision}

    @app.post("/frames/{frame_id}/toggle")
    def post_toggle(frame_id: str, req: ToggleRequest):
        sess = session(frame_id)
        with sess.lock:
            check_revision(sess, req.revision)
            try:
                updated = flood.toggle_points(sess.labels, req.indices, req.value)
            except (IndexError, ValueError) as exc:
                raise HTTPException(400, str(exc)) from exc
            changed = (updated.labels != sess.labels.labels).nonzero()[0]
            if changed.size:
                sess.labels = updated
                sess.dirty = True
            sess.revision += 1
            return {"changed_point_indices": changed.tolist(),
                    "new_revision": sess.revision}

    @app.put("/frames/{frame_id}/labels")
    def put_labels(frame_id: str, req: SaveRequest):
        sess = session(frame_id)
        with sess.lock:
            check_revision(sess, req.revision)
            target = label_path(frame_id)
            fd, tmp = tempfile.mkstemp(dir=data_dir, prefix=f".{frame_id}.",
                                       suffix=".gsl.tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(lbl.labels_bytes(sess.labels))
                os.replace(tmp, target)
            except OSError as exc:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise HTTPException(500, f"could not save labels: {exc}") from exc
            sess.dirty = False
            return {"saved": True, "revision": sess.revision}

    @app.get("/frames/{frame_id}/prediction")
    def get_prediction(frame_id: str, model: str):
        sess = session(frame_id)
        model_path = Path(model)
        if not model_path.is_file():
            raise HTTPException(404, f"model file {model} not found")
        key = (str(model_path), model_path.stat().st_mtime)
        if key not in model_cache:
            model_cache[key] = nn.load_model(model_path)
        net = model_cache[key]
        probs = nn.forward(net, encoder.normalize(sess.frame, encoder_cfg))
        scores = encoder.grid_to_point_probs(probs, sess.grid, sess.cloud)
        return {"scores": scores.tolist()}

    return app
