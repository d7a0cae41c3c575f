"""HTTP service backing the interactive latent-steering UI.

Reads run against an immutable model snapshot swapped atomically under a
lock; overlapping mutating prunes answer 409. Images travel as base64 PNG
arrays inside JSON.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import checkpoint as ckpt
from .discriminator import Discriminator, probability
from .generator import Generator, GeneratorConfig
from .imaging import encode_png
from .latent import DELTA_BOUNDS, LatentBatch, Perturbation, compare_pair, sample_latents
from .pruning import count_nonzero, prune_generator, total_prunable

logger = logging.getLogger("stylegan_lens.service")

MAX_BATCH = 64


@dataclass
class ServiceState:
    config: GeneratorConfig
    pristine: Generator
    active: Generator
    discriminator: Discriminator
    fixed_latents: LatentBatch
    allow_inplace: bool = False
    ui_dir: str | None = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    mutation: threading.Lock = field(default_factory=threading.Lock)


def build_state(config: GeneratorConfig | None = None, checkpoint_path=None,
                models: dict | None = None, allow_inplace: bool = False,
                fixed_seed: int = 0, ui_dir=None) -> ServiceState:
    """Wire a serving state from a checkpoint, prebuilt models, or fresh init."""
    if models is not None:
        g, d = models["G"], models["D"]
        config = g.config
    else:
        config = config or GeneratorConfig.desk()
        g = Generator(config, seed=0)
        d = Discriminator(config, seed=1)
        if checkpoint_path is not None:
            entries = ckpt.load(checkpoint_path)
            prefix = "G_copy." if any(k.startswith("G_copy.") for k in entries) else "G."
            g.load_state_dict(entries, prefix=prefix)
            if any(k.startswith("D.") for k in entries):
                d.load_state_dict(entries, prefix="D.")
    fixed = sample_latents(32, seed=fixed_seed, latent_size=config.latent_size)
    return ServiceState(config=config, pristine=g, active=g, discriminator=d,
                        fixed_latents=fixed, allow_inplace=allow_inplace, ui_dir=ui_dir)


class GenerateRequest(BaseModel):
    seed: int = 0
    count: int = 32
    truncation_psi: float = 1.0


class DeltaItem(BaseModel):
    dim: int
    delta: float


class PerturbRequest(BaseModel):
    seed: int = 0
    scale: float = 1.0
    deltas: list[DeltaItem] = []
    w_space: bool = False
    count: int = 32
    unbounded: bool = False


class PruneRequest(BaseModel):
    threshold: float
    in_place: bool = False


def _b64_images(images) -> list[str]:
    data = images.data if hasattr(images, "data") else images
    return [base64.b64encode(encode_png(data[i])).decode("ascii") for i in range(data.shape[0])]


def _bad_request(detail: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"error": detail})


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="stylegan-lens", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _bad_request(str(exc.errors()[:3]))

    @app.exception_handler(Exception)
    async def failure_handler(request: Request, exc: Exception):
        incident = uuid.uuid4().hex
        logger.exception("request failed, incident %s", incident)
        return JSONResponse(status_code=500, content={"error": incident})

    @app.get("/api/info")
    def info():
        with state.lock:
            g = state.active
            return {
                "latent_size": state.config.latent_size,
                "blocks": state.config.blocks,
                "max_res": state.config.max_res,
                "nonzero_weights": count_nonzero(g),
                "total_weights": total_prunable(g),
            }

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        if not (1 <= req.count <= MAX_BATCH):
            return _bad_request(f"count must lie in [1, {MAX_BATCH}]")
        if not (0.0 <= req.truncation_psi <= 1.0):
            return _bad_request("truncation_psi must lie in [0, 1]")
        latents = sample_latents(req.count, seed=req.seed,
                                 latent_size=state.config.latent_size)
        with state.lock:
            images = state.active.generate(latents, seed=req.seed,
                                           truncation_psi=req.truncation_psi)
        return {"images": _b64_images(images), "seed": req.seed}

    @app.post("/api/perturb")
    def perturb_endpoint(req: PerturbRequest):
        if not (1 <= req.count <= MAX_BATCH):
            return _bad_request(f"count must lie in [1, {MAX_BATCH}]")
        bounds = None if req.unbounded else DELTA_BOUNDS
        for item in req.deltas:
            if not (0 <= item.dim < state.config.latent_size):
                return _bad_request(
                    f"dimension {item.dim} outside [0, {state.config.latent_size})")
            if bounds is not None and not (bounds[0] <= item.delta <= bounds[1]):
                return _bad_request(f"delta {item.delta} outside bounds {list(bounds)}")
        p = Perturbation(deltas=[(i.dim, i.delta) for i in req.deltas],
                         scale=req.scale, bounds=bounds)
        base = sample_latents(req.count, seed=req.seed,
                              latent_size=state.config.latent_size)
        with state.lock:
            before, after, distances = compare_pair(state.active, base, p,
                                                    seed=req.seed, w_space=req.w_space)
        return {
            "original": _b64_images(before),
            "modified": _b64_images(after),
            "distances": [float(d) for d in distances],
        }

    @app.post("/api/prune")
    def prune_endpoint(req: PruneRequest):
        if req.threshold < 0:
            return _bad_request("threshold must be >= 0")
        if req.in_place and not state.allow_inplace:
            return _bad_request("in-place pruning disabled; restart serve with "
                                "--allow-inplace-prune")
        if not state.mutation.acquire(blocking=False):
            return JSONResponse(status_code=409,
                                content={"error": "another mutation is in progress"})
        try:
            if req.in_place:
                with state.lock:
                    prune_generator(state.pristine, req.threshold)
                    state.active = state.pristine
                    target = state.pristine
            else:
                with state.lock:
                    pruned = state.pristine.clone()
                prune_generator(pruned, req.threshold)
                with state.lock:
                    state.active = pruned
                    target = pruned
            with state.lock:
                images = target.generate(state.fixed_latents, seed=state.fixed_latents.seed)
                score = float(probability(state.discriminator.get_score(images)).data.mean())
                return {
                    "threshold": req.threshold,
                    "nonzero_weights": count_nonzero(target),
                    "total_weights": total_prunable(target),
                    "mean_d_score": score,
                }
        finally:
            state.mutation.release()

    if state.ui_dir and os.path.isdir(state.ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=state.ui_dir, html=True), name="ui")

    return app
