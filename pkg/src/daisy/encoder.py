"""Trainable prosody encoder.

A small 1-D conv net collapses the frame axis of the stacked
(mel | pitch | energy) channels into a fixed-length embedding: three
stride-2 conv blocks with ReLU, concatenated temporal mean+std pooling,
then an affine map to the embedding.  Two affine heads sit on top: a
4-way emotion discriminator (cross-entropy) and a regressor onto six
per-clip prosody statistics (MSE), which stands in for a synthesis
backbone by keeping embeddings prosody-informative.

Everything is plain NumPy with hand-derived gradients; training is
mini-batch gradient descent, deterministic given the seed.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .algebra import EmbeddingSet
from .features import EMOTIONS, FormatError, SpeechFeatures

MODEL_MAGIC = b"DAISYE1"

PROSODY_STAT_NAMES = ("pitch_mean_hz", "pitch_std_hz", "pitch_slope_hz_per_frame",
                      "energy_mean", "energy_std", "voiced_fraction")

_STD_EPS = 1e-8          # keeps the std-pooling branch differentiable
_STRIDE = 2
_MIN_FRAMES = 4


def prosody_stats(feats: SpeechFeatures) -> np.ndarray:
    """Six summary statistics of a clip's prosody (the aux-head targets)."""
    pitch = np.asarray(feats.pitch, dtype=np.float64)
    energy = np.asarray(feats.energy, dtype=np.float64)
    voiced_idx = np.nonzero(pitch > 0)[0]
    if voiced_idx.size >= 2:
        voiced = pitch[voiced_idx]
        slope = np.polyfit(voiced_idx.astype(np.float64), voiced, 1)[0]
        pitch_mean, pitch_std = voiced.mean(), voiced.std()
    else:
        pitch_mean = pitch_std = slope = 0.0
    return np.array([pitch_mean, pitch_std, slope,
                     energy.mean(), energy.std(),
                     voiced_idx.size / pitch.size])


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int = 64
    conv_channels: tuple[int, ...] = (32, 32, 32)
    kernel_size: int = 5
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 60
    rng_seed: int = 0
    discriminator_enabled: bool = True
    ce_weight: float = 1.0
    aux_weight: float = 1.0
    holdout_fraction: float = 0.2

    def __post_init__(self):
        if self.embed_dim <= 0:
            raise ValueError("embed_dim must be positive")
        if self.ce_weight < 0 or self.aux_weight < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.conv_channels or any(c <= 0 for c in self.conv_channels):
            raise ValueError("conv_channels must be positive")
        if self.kernel_size % 2 == 0 or self.kernel_size <= 0:
            raise ValueError("kernel_size must be odd and positive")
        if not 0 < self.holdout_fraction < 1:
            raise ValueError("holdout_fraction must be in (0, 1)")
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size, learning_rate must be positive")

    @property
    def effective_ce_weight(self) -> float:
        return self.ce_weight if self.discriminator_enabled else 0.0


@dataclass(frozen=True, eq=False)
class TrainReport:
    epoch_losses: tuple            # per epoch: (total, cross_entropy, aux)
    holdout_accuracies: tuple
    holdout_accuracy: float
    epochs: int
    wall_clock_s: float
    train_indices: tuple
    holdout_indices: tuple


# ---------------------------------------------------------------------------
# Parameters and forward/backward passes
# ---------------------------------------------------------------------------

def init_params(cfg: EncoderConfig, n_channels: int,
                rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    c_in = n_channels
    for i, c_out in enumerate(cfg.conv_channels):
        scale = np.sqrt(2.0 / (c_in * cfg.kernel_size))
        params[f"conv{i}.w"] = rng.normal(0.0, scale, (c_out, c_in, cfg.kernel_size))
        params[f"conv{i}.b"] = np.zeros(c_out)
        c_in = c_out
    pooled = 2 * cfg.conv_channels[-1]
    params["embed.w"] = rng.normal(0.0, np.sqrt(1.0 / pooled), (cfg.embed_dim, pooled))
    params["embed.b"] = np.zeros(cfg.embed_dim)
    params["disc.w"] = rng.normal(0.0, np.sqrt(1.0 / cfg.embed_dim), (4, cfg.embed_dim))
    params["disc.b"] = np.zeros(4)
    params["aux.w"] = rng.normal(0.0, np.sqrt(1.0 / cfg.embed_dim), (6, cfg.embed_dim))
    params["aux.b"] = np.zeros(6)
    return params


def _conv_forward(x, w, b, k):
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad)))
    windows = sliding_window_view(xp, k, axis=1)[:, ::_STRIDE]
    z = np.einsum("itk,oik->ot", windows, w, optimize=True) + b[:, None]
    return z, np.maximum(z, 0.0), windows, xp.shape[1]


def _conv_backward(dz, w, windows, padded_len, k, in_len):
    dw = np.einsum("ot,itk->oik", dz, windows, optimize=True)
    db = dz.sum(axis=1)
    c_in = w.shape[1]
    dxp = np.zeros((c_in, padded_len))
    t_out = dz.shape[1]
    positions = _STRIDE * np.arange(t_out)
    for j in range(k):
        dxp[:, positions + j] += w[:, :, j].T @ dz
    pad = k // 2
    return dw, db, dxp[:, pad : pad + in_len]


def _forward(params, cfg: EncoderConfig, x):
    """Full forward pass; returns the embedding plus a cache for backprop."""
    cache = {"inputs": [], "zs": [], "windows": [], "padded": [], "lens": []}
    a = x
    for i in range(len(cfg.conv_channels)):
        cache["inputs"].append(a)
        cache["lens"].append(a.shape[1])
        z, a, windows, plen = _conv_forward(a, params[f"conv{i}.w"],
                                            params[f"conv{i}.b"], cfg.kernel_size)
        cache["zs"].append(z)
        cache["windows"].append(windows)
        cache["padded"].append(plen)
    t = a.shape[1]
    mean = a.mean(axis=1)
    centered = a - mean[:, None]
    std = np.sqrt((centered**2).mean(axis=1) + _STD_EPS)
    pooled = np.concatenate([mean, std])
    u = params["embed.w"] @ pooled + params["embed.b"]
    cache.update(a_last=a, t=t, mean=mean, std=std, pooled=pooled)
    return u, cache


def _backward(params, cfg: EncoderConfig, du, cache, grads):
    grads["embed.w"] += np.outer(du, cache["pooled"])
    grads["embed.b"] += du
    dpooled = params["embed.w"].T @ du
    c = cache["mean"].size
    dmean, dstd = dpooled[:c], dpooled[c:]
    a, t = cache["a_last"], cache["t"]
    da = (dmean[:, None] / t
          + dstd[:, None] * (a - cache["mean"][:, None]) / (t * cache["std"][:, None]))
    for i in reversed(range(len(cfg.conv_channels))):
        dz = da * (cache["zs"][i] > 0)
        dw, db, da = _conv_backward(dz, params[f"conv{i}.w"], cache["windows"][i],
                                    cache["padded"][i], cfg.kernel_size,
                                    cache["lens"][i])
        grads[f"conv{i}.w"] += dw
        grads[f"conv{i}.b"] += db
    return da


def _softmax(logits):
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def loss_and_grads(params, cfg: EncoderConfig, batch,
                   ce_weight: float, aux_weight: float):
    """Batch loss and gradients.

    ``batch`` is a list of (x, label_index, stat_target) with label_index -1
    for neutral clips, which contribute to the aux term only.  The loss is
    ce_weight * mean CE over labeled clips + aux_weight * mean MSE over all.
    """
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    n_ce = sum(1 for _, label, _ in batch if label >= 0)
    ce_total = 0.0
    aux_total = 0.0
    for x, label, target in batch:
        u, cache = _forward(params, cfg, x)
        du = np.zeros_like(u)
        if label >= 0 and ce_weight > 0:
            logits = params["disc.w"] @ u + params["disc.b"]
            probs = _softmax(logits)
            ce_total += -np.log(max(probs[label], 1e-300))
            dlogits = probs.copy()
            dlogits[label] -= 1.0
            dlogits *= ce_weight / n_ce
            grads["disc.w"] += np.outer(dlogits, u)
            grads["disc.b"] += dlogits
            du += params["disc.w"].T @ dlogits
        elif label >= 0:
            logits = params["disc.w"] @ u + params["disc.b"]
            ce_total += -np.log(max(_softmax(logits)[label], 1e-300))
        if aux_weight > 0:
            y = params["aux.w"] @ u + params["aux.b"]
            err = y - target
            aux_total += np.mean(err**2)
            dy = (2.0 * err / err.size) * (aux_weight / len(batch))
            grads["aux.w"] += np.outer(dy, u)
            grads["aux.b"] += dy
            du += params["aux.w"].T @ dy
        _backward(params, cfg, du, cache, grads)
    ce_mean = ce_total / n_ce if n_ce else 0.0
    aux_mean = aux_total / len(batch)
    total = ce_weight * ce_mean + aux_weight * aux_mean
    return total, ce_mean, aux_mean, grads


# ---------------------------------------------------------------------------
# Trained encoder
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainedEncoder:
    """Immutable learned encoder; safe for concurrent read-only inference."""

    config: EncoderConfig
    params: dict[str, np.ndarray]
    channel_mean: np.ndarray
    channel_std: np.ndarray
    stats_mean: np.ndarray
    stats_std: np.ndarray

    def __post_init__(self):
        if np.any(self.channel_std <= 0) or np.any(self.stats_std <= 0):
            raise ValueError("normalization stds must be positive")
        for arr in (self.channel_mean, self.channel_std, self.stats_mean, self.stats_std):
            if not np.all(np.isfinite(arr)):
                raise ValueError("normalization stats must be finite")

    @property
    def embed_dim(self) -> int:
        return self.config.embed_dim

    @property
    def n_channels(self) -> int:
        return self.channel_mean.size

    def prepare(self, feats: SpeechFeatures) -> np.ndarray:
        """Stack mel/pitch/energy as channels and apply stored normalization."""
        if feats.frames < _MIN_FRAMES:
            raise ValueError(f"need at least {_MIN_FRAMES} frames, got {feats.frames}")
        x = np.concatenate([np.asarray(feats.mel, dtype=np.float64).T,
                            np.asarray(feats.pitch, dtype=np.float64)[None, :],
                            np.asarray(feats.energy, dtype=np.float64)[None, :]])
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain non-finite values")
        if x.shape[0] != self.n_channels:
            raise ValueError(f"expected {self.n_channels} channels, got {x.shape[0]}")
        return (x - self.channel_mean[:, None]) / self.channel_std[:, None]

    def encode(self, feats: SpeechFeatures) -> np.ndarray:
        u, _ = _forward(self.params, self.config, self.prepare(feats))
        return u

    def discriminate(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.embed_dim,):
            raise ValueError(f"embedding must have shape ({self.embed_dim},)")
        probs = _softmax(self.params["disc.w"] @ u + self.params["disc.b"])
        return probs / probs.sum()

    def decode_prosody_stats(self, u: np.ndarray) -> np.ndarray:
        """De-normalized prosody statistics predicted from an embedding."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.embed_dim,):
            raise ValueError(f"embedding must have shape ({self.embed_dim},)")
        y = self.params["aux.w"] @ u + self.params["aux.b"]
        stats = y * self.stats_std + self.stats_mean
        stats[5] = np.clip(stats[5], 0.0, 1.0)
        return stats


def discriminate(enc: TrainedEncoder, u: np.ndarray) -> np.ndarray:
    return enc.discriminate(u)


def decode_prosody_stats(enc: TrainedEncoder, u: np.ndarray) -> np.ndarray:
    return enc.decode_prosody_stats(u)


def embed_corpus(enc: TrainedEncoder, corpus: list[SpeechFeatures]) -> EmbeddingSet:
    """Encode every clip, preserving corpus order and labels."""
    rows = np.stack([enc.encode(f) for f in corpus])
    return EmbeddingSet(embeddings=rows,
                        emotions=tuple(f.emotion for f in corpus),
                        speakers=tuple(f.speaker for f in corpus))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _stratified_split(labels, fraction, rng):
    train_idx, hold_idx = [], []
    for label in sorted(set(labels)):
        members = [i for i, l in enumerate(labels) if l == label]
        members = list(rng.permutation(members))
        n_hold = max(1, int(round(fraction * len(members))))
        hold_idx.extend(members[:n_hold])
        train_idx.extend(members[n_hold:])
    return sorted(train_idx), sorted(hold_idx)


def train(corpus: list[SpeechFeatures], cfg: EncoderConfig = EncoderConfig(),
          progress=None) -> tuple[TrainedEncoder, TrainReport]:
    """Mini-batch gradient descent on the discriminator + aux objectives.

    Deterministic given ``cfg.rng_seed``: initialization, the train/holdout
    split, and batch order all come from one seeded generator.  Neutral
    clips join the aux term but are excluded from the cross-entropy.
    """
    started = time.perf_counter()
    for emotion in EMOTIONS:
        if sum(1 for f in corpus if f.emotion == emotion) < 2:
            raise ValueError(f"corpus too small: need at least 2 {emotion!r} clips")
    n_channels = corpus[0].mel.shape[1] + 2

    stacked = np.concatenate(
        [np.concatenate([np.asarray(f.mel, dtype=np.float64).T,
                         np.asarray(f.pitch, dtype=np.float64)[None, :],
                         np.asarray(f.energy, dtype=np.float64)[None, :]], axis=0)
         for f in corpus], axis=1)
    channel_mean = stacked.mean(axis=1)
    channel_std = np.maximum(stacked.std(axis=1), 1e-6)

    raw_stats = np.stack([prosody_stats(f) for f in corpus])
    stats_mean = raw_stats.mean(axis=0)
    stats_std = np.maximum(raw_stats.std(axis=0), 1e-6)
    targets = (raw_stats - stats_mean) / stats_std

    enc_proto = TrainedEncoder(config=cfg, params={}, channel_mean=channel_mean,
                               channel_std=channel_std, stats_mean=stats_mean,
                               stats_std=stats_std)
    inputs = [enc_proto.prepare(f) for f in corpus]
    label_idx = [EMOTIONS.index(f.emotion) if f.emotion in EMOTIONS else -1
                 for f in corpus]

    rng = np.random.default_rng(cfg.rng_seed)
    train_idx, hold_idx = _stratified_split([f.emotion for f in corpus],
                                            cfg.holdout_fraction, rng)
    params = init_params(cfg, n_channels, rng)
    ce_w = cfg.effective_ce_weight

    def holdout_accuracy():
        labeled = [i for i in hold_idx if label_idx[i] >= 0]
        if not labeled:
            return 0.0
        hits = 0
        for i in labeled:
            u, _ = _forward(params, cfg, inputs[i])
            logits = params["disc.w"] @ u + params["disc.b"]
            hits += int(np.argmax(logits) == label_idx[i])
        return hits / len(labeled)

    epoch_losses, accuracies = [], []
    for epoch in range(cfg.epochs):
        order = rng.permutation(train_idx)
        sums = np.zeros(3)
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [(inputs[i], label_idx[i], targets[i])
                     for i in order[start : start + cfg.batch_size]]
            total, ce, aux, grads = loss_and_grads(params, cfg, batch,
                                                   ce_w, cfg.aux_weight)
            if not np.isfinite(total):
                raise RuntimeError(
                    f"training diverged at epoch {epoch + 1}: loss={total!r} "
                    f"(learning_rate={cfg.learning_rate})")
            for key in params:
                params[key] -= cfg.learning_rate * grads[key]
            sums += (total, ce, aux)
            n_batches += 1
        mean_losses = tuple(sums / n_batches)
        epoch_losses.append(mean_losses)
        accuracies.append(holdout_accuracy())
        if progress is not None:
            progress({"epoch": epoch + 1, "total": mean_losses[0],
                      "cross_entropy": mean_losses[1], "aux": mean_losses[2],
                      "holdout_accuracy": accuracies[-1]})

    encoder = TrainedEncoder(config=cfg, params=params, channel_mean=channel_mean,
                             channel_std=channel_std, stats_mean=stats_mean,
                             stats_std=stats_std)
    report = TrainReport(epoch_losses=tuple(epoch_losses),
                         holdout_accuracies=tuple(accuracies),
                         holdout_accuracy=accuracies[-1],
                         epochs=cfg.epochs,
                         wall_clock_s=time.perf_counter() - started,
                         train_indices=tuple(train_idx),
                         holdout_indices=tuple(hold_idx))
    return encoder, report


def encode(enc: TrainedEncoder, feats: SpeechFeatures) -> np.ndarray:
    return enc.encode(feats)


# ---------------------------------------------------------------------------
# Persistence (binary, magic DAISYE1)
# ---------------------------------------------------------------------------

def save_model(path, enc: TrainedEncoder) -> None:
    """Versioned binary: config snapshot, normalization stats (float64),
    parameter tensors as float32 with explicit shapes."""
    cfg = enc.config
    header = json.dumps({
        "embed_dim": cfg.embed_dim, "conv_channels": list(cfg.conv_channels),
        "kernel_size": cfg.kernel_size, "learning_rate": cfg.learning_rate,
        "batch_size": cfg.batch_size, "epochs": cfg.epochs,
        "rng_seed": cfg.rng_seed, "discriminator_enabled": cfg.discriminator_enabled,
        "ce_weight": cfg.ce_weight, "aux_weight": cfg.aux_weight,
        "holdout_fraction": cfg.holdout_fraction,
        "n_channels": enc.n_channels,
    }, sort_keys=True).encode("utf-8")
    with open(Path(path), "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for arr in (enc.channel_mean, enc.channel_std, enc.stats_mean, enc.stats_std):
            fh.write(struct.pack("<I", arr.size))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        fh.write(struct.pack("<I", len(enc.params)))
        for name in sorted(enc.params):
            encoded = name.encode("utf-8")
            arr = np.ascontiguousarray(enc.params[name], dtype="<f4")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_model(path) -> TrainedEncoder:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise FormatError(f"{path} is not a model file (bad magic)")
    offset = len(MODEL_MAGIC)
    (header_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    cfg = EncoderConfig(
        embed_dim=header["embed_dim"], conv_channels=tuple(header["conv_channels"]),
        kernel_size=header["kernel_size"], learning_rate=header["learning_rate"],
        batch_size=header["batch_size"], epochs=header["epochs"],
        rng_seed=header["rng_seed"],
        discriminator_enabled=header["discriminator_enabled"],
        ce_weight=header["ce_weight"], aux_weight=header["aux_weight"],
        holdout_fraction=header["holdout_fraction"])
    norm = []
    for _ in range(4):
        (size,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        norm.append(np.frombuffer(blob, dtype="<f8", count=size, offset=offset).copy())
        offset += 8 * size
    (n_params,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    params = {}
    for _ in range(n_params):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        offset += 4 * count
        params[name] = arr.reshape(shape).astype(np.float64)
    if offset != len(blob):
        raise FormatError(f"{path}: trailing bytes after parameters")
    return TrainedEncoder(config=cfg, params=params, channel_mean=norm[0],
                          channel_std=norm[1], stats_mean=norm[2], stats_std=norm[3])
