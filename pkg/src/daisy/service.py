"""JSON-over-HTTP service exposing a loaded session (encoder + basis +
emotion stats + embedded corpus) to scripts and the mixing-console UI.

The session is immutable; every response depends only on it and the request
body, and every response echoes the request seed so results are reproducible
from the CLI.  CORS headers admit a locally hosted UI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import algebra, analysis, encoder as encoder_mod
from .algebra import EmotionStats, ProsodyBasis, SECONDARY_EMOTIONS
from .features import EMOTIONS, load_feature_cache

ALPHA_LEVELS = {"low": 0.25, "medium": 1.0, "high": 1.75}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass(frozen=True, eq=False)
class SessionState:
    """Everything the endpoints read; immutable after load."""

    encoder: "encoder_mod.TrainedEncoder"
    basis: ProsodyBasis
    stats: EmotionStats
    embedding_set: algebra.EmbeddingSet

    def __post_init__(self):
        if self.basis.d != self.encoder.embed_dim:
            raise ValueError("basis dimension does not match encoder embedding size")
        if self.stats.n != self.basis.n:
            raise ValueError("emotion stats do not match the basis")

    @classmethod
    def from_artifacts(cls, model_path, basis_path, corpus_path) -> "SessionState":
        enc = encoder_mod.load_model(model_path)
        basis, stats = algebra.load_basis(basis_path)
        corpus = load_feature_cache(corpus_path)
        return cls(encoder=enc, basis=basis, stats=stats,
                   embedding_set=encoder_mod.embed_corpus(enc, corpus))

    # -- request handlers (pure: dict in, dict out) -------------------------

    def handle_emotions(self) -> dict:
        secondaries = sorted(
            ({"name": name, "pair": sorted(pair)} for pair, name in SECONDARY_EMOTIONS.items()),
            key=lambda item: item["name"])
        return {"seed": None, "primaries": list(EMOTIONS), "secondaries": secondaries,
                "alpha_levels": ALPHA_LEVELS, "embed_dim": self.encoder.embed_dim,
                "n_components": self.basis.n}

    def handle_projection(self) -> dict:
        projection = analysis.project_2d(self.embedding_set, self.basis)
        payload = projection.to_json()
        payload["seed"] = None
        payload["reference_stats"] = {
            name: float(value) for name, value
            in zip(encoder_mod.PROSODY_STAT_NAMES, self.encoder.stats_mean)}
        return payload

    def handle_similarity(self) -> dict:
        payload = analysis.cosine_matrix(self.embedding_set).to_json()
        payload["seed"] = None
        return payload

    def handle_variance(self) -> dict:
        payload = analysis.variance_profile(self.basis).to_json()
        payload["seed"] = None
        payload["retained_components"] = self.basis.n
        return payload

    def handle_sample(self, body: dict) -> dict:
        emotion = _require_emotion(body, "emotion")
        alpha = _get_alpha(body)
        do_negate = _get_bool(body, "negate", False)
        seed = _require_seed(body)
        w = algebra.sample_primary(self.stats, emotion, seed)
        if do_negate:
            w = algebra.negate(w)
        u = algebra.reconstruct(w, self.basis, alpha)
        name = f"polar {emotion}" if do_negate else emotion
        return {"seed": seed, "emotion": emotion, "name": name, "alpha": alpha,
                "negate": do_negate, "w": w.tolist(), "embedding": u.tolist()}

    def handle_mix(self, body: dict) -> dict:
        mode = body.get("mode", "secondary")
        if mode not in ("primary", "secondary", "transfer"):
            raise ApiError(400, f"unknown mode {mode!r}")
        alpha = _get_alpha(body)
        do_negate = _get_bool(body, "negate", False)
        seed = _require_seed(body)
        beta = body.get("beta", 0.5)
        if not isinstance(beta, (int, float)) or isinstance(beta, bool) \
                or not 0.0 <= float(beta) <= 1.0:
            raise ApiError(400, "beta must be a number in [0, 1]")
        beta = float(beta)

        pair = None
        extension = False
        self_mixture = False
        if mode == "primary":
            emotion = _require_emotion(body, "emotion")
            w = algebra.sample_primary(self.stats, emotion, seed)
            name = emotion
        elif mode == "secondary":
            raw_pair = body.get("pair")
            if (not isinstance(raw_pair, (list, tuple)) or len(raw_pair) != 2
                    or not all(isinstance(e, str) for e in raw_pair)):
                raise ApiError(400, "pair must be a list of two emotion names")
            for e in raw_pair:
                if e not in EMOTIONS:
                    raise ApiError(422, f"unknown emotion {e!r}")
            mixture, w = algebra.mix_secondary(self.stats, raw_pair[0], raw_pair[1],
                                               seed, beta=beta)
            pair = list(raw_pair)
            name = mixture.name or f"{raw_pair[0]}+{raw_pair[1]}"
            extension = mixture.extension
            self_mixture = mixture.self_mixture
        else:
            u_in = _require_embedding(body, self.encoder.embed_dim)
            tau = body.get("tau", 0.1)
            if not isinstance(tau, (int, float)) or isinstance(tau, bool) or tau < 0:
                raise ApiError(400, "tau must be a non-negative number")
            w = algebra.project(u_in, self.basis)
            if tau > 0:
                w = algebra.sample_variations(w, self.basis, tau=float(tau), rng_seed=seed)
            name = "transfer"

        if do_negate:
            w = algebra.negate(w)
            name = f"polar {name}"
        u = algebra.reconstruct(w, self.basis, alpha)
        return {"seed": seed, "mode": mode, "name": name, "pair": pair,
                "beta": beta, "alpha": alpha, "negate": do_negate,
                "extension": extension, "self_mixture": self_mixture,
                "w": w.tolist(), "embedding": u.tolist()}

    def handle_classify(self, body: dict) -> dict:
        u = _require_embedding(body, self.encoder.embed_dim)
        probs = self.encoder.discriminate(u)
        return {"seed": body.get("seed"),
                "probabilities": {e: float(p) for e, p in zip(EMOTIONS, probs)},
                "label": EMOTIONS[int(np.argmax(probs))]}

    def handle_stats(self, body: dict) -> dict:
        u = _require_embedding(body, self.encoder.embed_dim)
        values = self.encoder.decode_prosody_stats(u)
        return {"seed": body.get("seed"),
                "stats": {name: float(v) for name, v
                          in zip(encoder_mod.PROSODY_STAT_NAMES, values)}}


def _require_seed(body: dict) -> int:
    seed = body.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ApiError(400, "seed is required and must be an integer")
    return seed


def _require_emotion(body: dict, key: str) -> str:
    emotion = body.get(key)
    if not isinstance(emotion, str):
        raise ApiError(400, f"{key} is required")
    if emotion not in EMOTIONS:
        raise ApiError(422, f"unknown emotion {emotion!r}")
    return emotion


def _get_alpha(body: dict) -> float:
    alpha = body.get("alpha", 1.0)
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) \
            or not np.isfinite(alpha) or alpha <= 0:
        raise ApiError(400, "alpha must be a positive finite number")
    return float(alpha)


def _get_bool(body: dict, key: str, default: bool) -> bool:
    value = body.get(key, default)
    if not isinstance(value, bool):
        raise ApiError(400, f"{key} must be a boolean")
    return value


def _require_embedding(body: dict, dim: int) -> np.ndarray:
    raw = body.get("embedding")
    if not isinstance(raw, list) or len(raw) != dim \
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise ApiError(400, f"embedding must be a list of {dim} numbers")
    u = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ApiError(400, "embedding must be finite")
    return u


GET_ROUTES = {
    "/emotions": SessionState.handle_emotions,
    "/projection": SessionState.handle_projection,
    "/similarity": SessionState.handle_similarity,
    "/variance": SessionState.handle_variance,
}

POST_ROUTES = {
    "/sample": SessionState.handle_sample,
    "/mix": SessionState.handle_mix,
    "/classify": SessionState.handle_classify,
    "/stats": SessionState.handle_stats,
}


def build_server(state: SessionState, host: str = "127.0.0.1",
                 port: int = 8765) -> ThreadingHTTPServer:
    """Create (but do not start) the HTTP server bound to an immutable state."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def _respond(self, status: int, payload: dict):
            raw = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(raw)))
            self._cors()
            self.end_headers()
            self.wfile.write(raw)

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            route = GET_ROUTES.get(self.path)
            if route is None:
                self._respond(404, {"error": f"unknown route {self.path}"})
                return
            try:
                self._respond(200, route(state))
            except ApiError as exc:
                self._respond(exc.status, {"error": exc.message})
            except Exception as exc:
                self._respond(500, {"error": f"internal error: {exc}"})

        def do_POST(self):
            route = POST_ROUTES.get(self.path)
            if route is None:
                self._respond(404, {"error": f"unknown route {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length).decode("utf-8"))
                if not isinstance(body, dict):
                    raise ValueError("body must be a JSON object")
            except (ValueError, UnicodeDecodeError) as exc:
                self._respond(400, {"error": f"malformed body: {exc}"})
                return
            try:
                self._respond(200, route(state, body))
            except ApiError as exc:
                self._respond(exc.status, {"error": exc.message})
            except Exception as exc:
                self._respond(500, {"error": f"internal error: {exc}"})

    return ThreadingHTTPServer((host, port), Handler)


def serve(state: SessionState, host: str = "127.0.0.1", port: int = 8765) -> None:
    """Run the service until interrupted."""
    server = build_server(state, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
