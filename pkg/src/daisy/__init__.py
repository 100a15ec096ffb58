"""Emotion-space prosody embeddings.

Feature extraction (mel / pitch / energy), a small trainable prosody
encoder with an emotion discriminator, and a PCA/Gaussian algebra that
samples primary emotions, mixes secondary ones, scales intensity, and
negates polarity, plus analysis tools, a CLI, and an HTTP service.
"""

from .features import (AudioClip, EmotionProfile, FeatureConfig, SpeechFeatures,
                       SyntheticCorpusSpec, EMOTIONS, NEUTRAL, compute_energy,
                       compute_mel, compute_pitch, extract_features,
                       generate_synthetic_corpus, load_audio, load_feature_cache,
                       read_labeled_corpus, save_feature_cache)
from .encoder import (EncoderConfig, TrainedEncoder, TrainReport, embed_corpus,
                      load_model, prosody_stats, save_model, train)
from .algebra import (EmbeddingSet, EmotionStats, MixtureGaussian, ProsodyBasis,
                      SECONDARY_EMOTIONS, fit_basis, fit_emotion_stats, load_basis,
                      mix_secondary, negate, project, reconstruct, sample_primary,
                      sample_variations, save_basis, secondary_name, transfer_unseen)

__all__ = [name for name in dir() if not name.startswith("_")]
