"""Diagnostics over a trained pipeline: class-mean cosine similarity,
discriminator confusion (a machine proxy for perception tests), explained
variance profiles, 2-D projections, and the discriminator on/off ablation.

Figures are emitted as self-contained SVG strings so no plotting stack is
needed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Sequence

import numpy as np
from sklearn.metrics import silhouette_score

from . import encoder as encoder_mod
from .algebra import EmbeddingSet, ProsodyBasis, fit_basis, project
from .features import EMOTIONS, SpeechFeatures

EMOTION_COLORS = {"joy": "#e6a817", "sadness": "#3b6fb6",
                  "anger": "#c13f3f", "surprise": "#4caf7d"}


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray          # (4, 4), symmetric, unit diagonal
    labels: tuple[str, ...] = EMOTIONS

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    values: np.ndarray          # (4, 4), row-stochastic
    labels: tuple[str, ...] = EMOTIONS

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class VarianceProfile:
    ratios: np.ndarray
    cumulative: np.ndarray

    def to_json(self) -> dict:
        return {"ratios": self.ratios.tolist(), "cumulative": self.cumulative.tolist()}


@dataclass(frozen=True, eq=False)
class ProjectionMap:
    coords: np.ndarray          # (m, 2)
    emotions: tuple[str, ...]
    speakers: tuple[str, ...]
    class_means: dict[str, np.ndarray]

    def to_json(self) -> dict:
        return {
            "points": [{"x": float(x), "y": float(y), "emotion": e, "speaker": s}
                       for (x, y), e, s in zip(self.coords, self.emotions, self.speakers)],
            "class_means": {e: m.tolist() for e, m in self.class_means.items()},
        }


def class_mean_embeddings(embedding_set: EmbeddingSet) -> dict[str, np.ndarray]:
    means = {}
    for emotion in EMOTIONS:
        rows = embedding_set.rows_for(emotion)
        if rows.shape[0] == 0:
            raise ValueError(f"no embeddings labeled {emotion!r}")
        means[emotion] = rows.mean(axis=0)
    return means


def cosine_matrix(embedding_set: EmbeddingSet) -> SimilarityMatrix:
    """Cosine similarity between class means, centered on the global mean.

    Centering matters: without it all means share the large common offset
    and every entry saturates near 1.
    """
    global_mean = embedding_set.embeddings.mean(axis=0)
    means = class_mean_embeddings(embedding_set)
    centered = []
    for emotion in EMOTIONS:
        v = means[emotion] - global_mean
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError(f"class mean for {emotion!r} coincides with the global mean")
        centered.append(v / norm)
    centered = np.stack(centered)
    values = np.clip(centered @ centered.T, -1.0, 1.0)
    values = (values + values.T) / 2.0
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(values=values)


def confusion(enc, samples: Sequence[tuple]) -> ConfusionMatrix:
    """Row-normalized counts of discriminator argmax predictions.

    ``samples`` holds (embedding or SpeechFeatures, true label) pairs; every
    emotion must appear at least once.
    """
    if not samples:
        raise ValueError("no samples")
    counts = np.zeros((4, 4))
    for item, label in samples:
        if label not in EMOTIONS:
            raise ValueError(f"unknown emotion {label!r}")
        u = enc.encode(item) if isinstance(item, SpeechFeatures) else np.asarray(item)
        predicted = int(np.argmax(enc.discriminate(u)))
        counts[EMOTIONS.index(label), predicted] += 1
    row_sums = counts.sum(axis=1)
    if np.any(row_sums == 0):
        missing = [EMOTIONS[i] for i in np.nonzero(row_sums == 0)[0]]
        raise ValueError(f"empty class row: {missing}")
    return ConfusionMatrix(values=counts / row_sums[:, None])


def variance_profile(source) -> VarianceProfile:
    """Explained-variance ratios over all embedding dimensions.

    Accepts an EmbeddingSet (fits the full decomposition) or a ProsodyBasis
    (uses its stored full eigenvalue spectrum).
    """
    if isinstance(source, ProsodyBasis):
        eigenvalues = source.all_eigenvalues
    elif isinstance(source, EmbeddingSet):
        eigenvalues = fit_basis(source, n=1).all_eigenvalues
    else:
        raise TypeError("expected EmbeddingSet or ProsodyBasis")
    total = eigenvalues.sum()
    if total <= 0:
        raise ValueError("zero total variance")
    ratios = eigenvalues / total
    return VarianceProfile(ratios=ratios, cumulative=np.cumsum(ratios))


def ratio_entropy(profile: VarianceProfile) -> float:
    """Shannon entropy of the variance ratios; uniform spectra score highest."""
    p = profile.ratios[profile.ratios > 0]
    return float(-(p * np.log(p)).sum())


def project_2d(embedding_set: EmbeddingSet,
               basis: ProsodyBasis | None = None) -> ProjectionMap:
    """Coordinates along the top two principal directions."""
    if embedding_set.embeddings.shape[0] < 3:
        raise ValueError("need at least 3 embeddings")
    if basis is None or basis.n < 2:
        basis = fit_basis(embedding_set, n=2)
    coords = np.stack([project(u, basis)[:2] for u in embedding_set.embeddings])
    class_means = {}
    for emotion in EMOTIONS:
        mask = np.array([e == emotion for e in embedding_set.emotions])
        if mask.any():
            class_means[emotion] = coords[mask].mean(axis=0)
    return ProjectionMap(coords=coords, emotions=embedding_set.emotions,
                         speakers=embedding_set.speakers, class_means=class_means)


def emotion_silhouette(embedding_set: EmbeddingSet) -> float:
    """Mean silhouette of the emotional rows grouped by label."""
    mask = np.array([e in EMOTIONS for e in embedding_set.emotions])
    labels = [e for e in embedding_set.emotions if e in EMOTIONS]
    if len(set(labels)) < 2:
        raise ValueError("need at least two emotion classes")
    return float(silhouette_score(embedding_set.embeddings[mask], labels))


@dataclass(frozen=True, eq=False)
class AblationReport:
    silhouette_with: float
    silhouette_without: float
    entropy_with: float
    entropy_without: float
    profile_with: VarianceProfile
    profile_without: VarianceProfile
    projection_with: ProjectionMap
    projection_without: ProjectionMap
    holdout_accuracy_with: float
    holdout_accuracy_without: float

    def to_json(self) -> dict:
        return {
            "silhouette": {"with": self.silhouette_with, "without": self.silhouette_without},
            "variance_entropy": {"with": self.entropy_with, "without": self.entropy_without},
            "holdout_accuracy": {"with": self.holdout_accuracy_with,
                                 "without": self.holdout_accuracy_without},
            "variance": {"with": self.profile_with.to_json(),
                         "without": self.profile_without.to_json()},
            "projection": {"with": self.projection_with.to_json(),
                           "without": self.projection_without.to_json()},
        }


def ablation_report(corpus: list[SpeechFeatures],
                    cfg: "encoder_mod.EncoderConfig") -> AblationReport:
    """Train twice from the same seed, with and without the discriminator,
    and compare embedding separability and variance concentration."""
    enc_with, report_with = encoder_mod.train(corpus, cfg)
    cfg_without = dc_replace(cfg, discriminator_enabled=False)
    enc_without, report_without = encoder_mod.train(corpus, cfg_without)
    set_with = encoder_mod.embed_corpus(enc_with, corpus)
    set_without = encoder_mod.embed_corpus(enc_without, corpus)
    profile_with = variance_profile(set_with)
    profile_without = variance_profile(set_without)
    return AblationReport(
        silhouette_with=emotion_silhouette(set_with),
        silhouette_without=emotion_silhouette(set_without),
        entropy_with=ratio_entropy(profile_with),
        entropy_without=ratio_entropy(profile_without),
        profile_with=profile_with,
        profile_without=profile_without,
        projection_with=project_2d(set_with),
        projection_without=project_2d(set_without),
        holdout_accuracy_with=report_with.holdout_accuracy,
        holdout_accuracy_without=report_without.holdout_accuracy)


# ---------------------------------------------------------------------------
# SVG rendering (self-contained, no plotting dependency)
# ---------------------------------------------------------------------------

def svg_scatter(projection: ProjectionMap, width: int = 640, height: int = 480,
                title: str = "prosody embeddings (2-D)") -> str:
    coords = projection.coords
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    margin = 40

    def sx(x):
        return margin + (x - lo[0]) / span[0] * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - lo[1]) / span[1] * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" '
             f'font-family="sans-serif" font-size="13">{title}</text>']
    for (x, y), emotion in zip(coords, projection.emotions):
        color = EMOTION_COLORS.get(emotion, "#888888")
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" '
                     f'fill="{color}" fill-opacity="0.55"/>')
    for emotion, mean in projection.class_means.items():
        color = EMOTION_COLORS.get(emotion, "#444444")
        parts.append(f'<circle cx="{sx(mean[0]):.2f}" cy="{sy(mean[1]):.2f}" r="7" '
                     f'fill="{color}" stroke="black" stroke-width="1.5"/>')
        parts.append(f'<text x="{sx(mean[0]) + 10:.2f}" y="{sy(mean[1]) + 4:.2f}" '
                     f'font-family="sans-serif" font-size="12">{emotion}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def svg_bars(profile: VarianceProfile, width: int = 640, height: int = 320,
             title: str = "explained variance ratio", max_bars: int = 32) -> str:
    ratios = profile.ratios[:max_bars]
    margin = 40
    bar_w = (width - 2 * margin) / max(len(ratios), 1)
    peak = max(float(ratios.max()), 1e-9)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" '
             f'font-family="sans-serif" font-size="13">{title}</text>',
             f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
             f'y2="{height - margin}" stroke="black"/>']
    for i, r in enumerate(ratios):
        bar_h = (height - 2 * margin) * float(r) / peak
        x = margin + i * bar_w
        parts.append(f'<rect x="{x:.2f}" y="{height - margin - bar_h:.2f}" '
                     f'width="{max(bar_w - 2, 1):.2f}" height="{bar_h:.2f}" '
                     f'fill="#5b7db1"/>')
    parts.append("</svg>")
    return "\n".join(parts)
