"""Embedding-space algebra: PCA basis, class-conditional Gaussians, and the
operations that synthesize emotions from them (sampling, pairwise mixing,
intensity scaling, polarity negation, transfer of arbitrary clips).

An embedding u decomposes as ``u(w) = mean + sum_i w_i * v_i`` over the top-n
eigenvectors of the embedding covariance (population divisor m).  Weights w
are modeled as Gaussian with the shared diagonal covariance given by the
eigenvalues; per-emotion means live in that same w-space.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import EMOTIONS, FormatError

BASIS_MAGIC = b"DAISYB1"

# Canonical secondary emotions: unordered primary pair -> name.
SECONDARY_EMOTIONS = {
    frozenset(("joy", "sadness")): "bittersweetness",
    frozenset(("joy", "surprise")): "delight",
    frozenset(("joy", "anger")): "pride",
    frozenset(("sadness", "surprise")): "disappointment",
    frozenset(("anger", "sadness")): "envy",
    frozenset(("anger", "surprise")): "outrage",
}

MAX_AUTO_COMPONENTS = 16
AUTO_VARIANCE_TARGET = 0.95


def secondary_name(e1: str, e2: str) -> str | None:
    """Name of the canonical mixture for a primary pair, else None."""
    return SECONDARY_EMOTIONS.get(frozenset((e1, e2)))


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """m x d embedding matrix with per-row emotion and speaker labels."""

    embeddings: np.ndarray
    emotions: tuple[str, ...]
    speakers: tuple[str, ...]

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "emotions", tuple(self.emotions))
        object.__setattr__(self, "speakers", tuple(self.speakers))
        if emb.ndim != 2:
            raise ValueError("embeddings must be an m x d matrix")
        if not np.all(np.isfinite(emb)):
            raise ValueError("embeddings contain non-finite values")
        m, d = emb.shape
        if len(self.emotions) != m or len(self.speakers) != m:
            raise ValueError("labels must match the number of rows")
        if m < d:
            warnings.warn(f"only {m} embeddings for dimension {d}; "
                          "covariance estimate will be rank-deficient")

    def rows_for(self, emotion: str) -> np.ndarray:
        mask = np.array([e == emotion for e in self.emotions])
        return self.embeddings[mask]


@dataclass(frozen=True, eq=False)
class ProsodyBasis:
    """PCA of an embedding set: mean, orthonormal components, eigenvalues."""

    mean: np.ndarray            # (d,)
    components: np.ndarray      # (n, d), rows orthonormal
    eigenvalues: np.ndarray     # (n,), descending, > 0
    all_eigenvalues: np.ndarray  # (d,), descending, >= 0

    def __post_init__(self):
        for name in ("mean", "components", "eigenvalues", "all_eigenvalues"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(self.n), atol=1e-8):
            raise ValueError("components are not orthonormal")
        if np.any(np.diff(self.eigenvalues) > 0) or np.any(self.eigenvalues < 0):
            raise ValueError("eigenvalues must be sorted descending and non-negative")

    @property
    def n(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True, eq=False)
class EmotionStats:
    """Per-emotion means in w-space plus the shared diagonal covariance."""

    means: dict[str, np.ndarray]   # emotion -> (n,)
    variances: np.ndarray          # (n,), shared, > 0

    def __post_init__(self):
        object.__setattr__(self, "variances", np.asarray(self.variances, dtype=np.float64))
        if set(self.means) != set(EMOTIONS):
            raise ValueError(f"means must cover exactly {EMOTIONS}")
        means = {e: np.asarray(m, dtype=np.float64) for e, m in self.means.items()}
        object.__setattr__(self, "means", means)
        n = self.variances.size
        if any(m.shape != (n,) for m in means.values()):
            raise ValueError("class means must match the covariance dimension")
        if np.any(self.variances <= 0):
            raise ValueError("shared variances must be positive")

    @property
    def n(self) -> int:
        return self.variances.size


@dataclass(frozen=True, eq=False)
class MixtureGaussian:
    """Equal-precision fusion of two class Gaussians sharing a covariance."""

    mean: np.ndarray
    variances: np.ndarray
    pair: tuple[str, str]
    name: str | None
    self_mixture: bool
    extension: bool = False   # True when a non-0.5 blend weight was used


# ---------------------------------------------------------------------------
# PCA
# ---------------------------------------------------------------------------

def fit_basis(embedding_set: EmbeddingSet, n: int | None = None) -> ProsodyBasis:
    """PCA via eigendecomposition of the population covariance (divisor m).

    Component signs are fixed so each vector's largest-magnitude entry is
    positive.  With ``n=None`` the smallest n reaching 95% cumulative
    explained variance is kept, capped at 16 components.
    """
    U = embedding_set.embeddings
    m, d = U.shape
    if m < 2:
        raise ValueError("need at least 2 embeddings")
    mean = U.mean(axis=0)
    centered = U - mean
    cov = centered.T @ centered / m
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order].T          # rows are components
    flip = evecs[np.arange(d), np.argmax(np.abs(evecs), axis=1)] < 0
    evecs[flip] *= -1.0

    total = evals.sum()
    if total <= 0:
        raise ValueError("degenerate: zero variance")
    zero_tol = total * 1e-12
    if n is None:
        ratios = np.cumsum(evals) / total
        n = int(np.searchsorted(ratios, AUTO_VARIANCE_TARGET) + 1)
        n = min(n, MAX_AUTO_COMPONENTS, int(np.sum(evals > zero_tol)))
    else:
        if not 1 <= n <= min(m, d):
            raise ValueError(f"n must be in [1, {min(m, d)}]")
        if evals[n - 1] <= zero_tol:
            raise ValueError("degenerate: zero variance")
    return ProsodyBasis(mean=mean, components=evecs[:n],
                        eigenvalues=evals[:n], all_eigenvalues=evals)


def project(u: np.ndarray, basis: ProsodyBasis) -> np.ndarray:
    """w_i = v_i . (u - mean)"""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (basis.d,):
        raise ValueError(f"embedding must have shape ({basis.d},)")
    return basis.components @ (u - basis.mean)


def reconstruct(w: np.ndarray, basis: ProsodyBasis, alpha: float = 1.0) -> np.ndarray:
    """u = mean + alpha * sum_i w_i v_i; alpha scales the expressed intensity."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (basis.n,):
        raise ValueError(f"weight vector must have shape ({basis.n},)")
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return basis.mean + alpha * (w @ basis.components)


def negate(w: np.ndarray) -> np.ndarray:
    """Polarity flip: the perceived opposite lives at -w."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("weight vector must be finite")
    return -w


# ---------------------------------------------------------------------------
# Class-conditional Gaussians
# ---------------------------------------------------------------------------

def fit_emotion_stats(embedding_set: EmbeddingSet, basis: ProsodyBasis) -> EmotionStats:
    """Class means of projected embeddings; covariance = basis eigenvalues,
    shared across classes."""
    means = {}
    for emotion in EMOTIONS:
        rows = embedding_set.rows_for(emotion)
        if rows.shape[0] < 2:
            raise ValueError(f"missing class: need at least 2 {emotion!r} embeddings")
        means[emotion] = np.mean([project(r, basis) for r in rows], axis=0)
    return EmotionStats(means=means, variances=basis.eigenvalues.copy())


def sample_primary(stats: EmotionStats, emotion: str, rng_seed: int) -> np.ndarray:
    """Draw w ~ N(class mean, shared diagonal covariance), seeded."""
    if emotion not in EMOTIONS:
        raise ValueError(f"unknown emotion {emotion!r}")
    z = np.random.default_rng(rng_seed).standard_normal(stats.n)
    return stats.means[emotion] + np.sqrt(stats.variances) * z


def mix_secondary(stats: EmotionStats, e1: str, e2: str, rng_seed: int,
                  beta: float = 0.5) -> tuple[MixtureGaussian, np.ndarray]:
    """Fuse two class Gaussians and draw one sample from the fusion.

    The fused covariance is (2 Sigma^-1)^-1 and the fused mean is
    Sigma_s Sigma^-1 mu1 + Sigma_s Sigma^-1 mu2, computed in that general
    form; with the shared covariance these reduce to Sigma/2 and the
    arithmetic mean.  ``beta != 0.5`` blends the means unequally instead,
    an extension beyond the equal-precision fusion, and is flagged as such.
    """
    for e in (e1, e2):
        if e not in EMOTIONS:
            raise ValueError(f"unknown emotion {e!r}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must be in [0, 1]")
    precision = 1.0 / stats.variances
    mix_var = 1.0 / (2.0 * precision)
    gain = mix_var * precision
    if beta == 0.5:
        mean = gain * stats.means[e1] + gain * stats.means[e2]
        extension = False
    else:
        mean = (1.0 - beta) * stats.means[e1] + beta * stats.means[e2]
        extension = True
    mixture = MixtureGaussian(mean=mean, variances=mix_var, pair=(e1, e2),
                              name=secondary_name(e1, e2),
                              self_mixture=(e1 == e2), extension=extension)
    z = np.random.default_rng(rng_seed).standard_normal(stats.n)
    return mixture, mixture.mean + np.sqrt(mixture.variances) * z


# ---------------------------------------------------------------------------
# Unseen emotion transfer
# ---------------------------------------------------------------------------

def transfer_unseen(encoder, features, basis: ProsodyBasis) -> np.ndarray:
    """Project an arbitrary clip's embedding into w-space."""
    return project(encoder.encode(features), basis)


def sample_variations(w: np.ndarray, basis: ProsodyBasis, tau: float = 0.1,
                      rng_seed: int = 0) -> np.ndarray:
    """Draw a variation around w from N(w, tau * Sigma); tau=0 returns w."""
    w = np.asarray(w, dtype=np.float64)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return w.copy()
    z = np.random.default_rng(rng_seed).standard_normal(basis.n)
    return w + np.sqrt(tau * basis.eigenvalues) * z


# ---------------------------------------------------------------------------
# Persistence (binary, magic DAISYB1)
# ---------------------------------------------------------------------------

def _write_array(fh, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    fh.write(struct.pack("<B", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.tobytes())


def _read_array(blob: bytes, offset: int) -> tuple[np.ndarray, int]:
    (ndim,) = struct.unpack_from("<B", blob, offset)
    offset += 1
    shape = struct.unpack_from(f"<{ndim}I", blob, offset)
    offset += 4 * ndim
    count = int(np.prod(shape)) if ndim else 1
    arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
    offset += 8 * count
    return arr.reshape(shape).copy(), offset


def save_basis(path, basis: ProsodyBasis, stats: EmotionStats) -> None:
    """Basis + class stats + the secondary-emotion table snapshot."""
    table = sorted([sorted(pair), name] for pair, name in SECONDARY_EMOTIONS.items())
    table_json = json.dumps(table).encode("utf-8")
    with open(Path(path), "wb") as fh:
        fh.write(BASIS_MAGIC)
        _write_array(fh, basis.mean)
        _write_array(fh, basis.components)
        _write_array(fh, basis.eigenvalues)
        _write_array(fh, basis.all_eigenvalues)
        _write_array(fh, np.stack([stats.means[e] for e in EMOTIONS]))
        _write_array(fh, stats.variances)
        fh.write(struct.pack("<I", len(table_json)))
        fh.write(table_json)


def load_basis(path) -> tuple[ProsodyBasis, EmotionStats]:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(BASIS_MAGIC)] != BASIS_MAGIC:
        raise FormatError(f"{path} is not a basis file (bad magic)")
    offset = len(BASIS_MAGIC)
    mean, offset = _read_array(blob, offset)
    components, offset = _read_array(blob, offset)
    eigenvalues, offset = _read_array(blob, offset)
    all_eigenvalues, offset = _read_array(blob, offset)
    class_means, offset = _read_array(blob, offset)
    variances, offset = _read_array(blob, offset)
    (table_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    table = json.loads(blob[offset : offset + table_len].decode("utf-8"))
    expected = sorted([sorted(pair), name] for pair, name in SECONDARY_EMOTIONS.items())
    if table != expected:
        raise FormatError(f"{path}: secondary-emotion table snapshot mismatch")
    basis = ProsodyBasis(mean=mean, components=components,
                         eigenvalues=eigenvalues, all_eigenvalues=all_eigenvalues)
    stats = EmotionStats(means={e: class_means[i] for i, e in enumerate(EMOTIONS)},
                         variances=variances)
    return basis, stats
