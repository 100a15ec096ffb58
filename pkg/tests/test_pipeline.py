"""Derived behaviors of the fully trained pipeline on the default corpus.

These pin the measured outcomes that the module examples promise: decoded
prosody accuracy, embedding-space geometry, the similarity sign structure,
and the truncation-residual identity.
"""

import numpy as np

from daisy import algebra, analysis
from daisy.encoder import prosody_stats
from daisy.features import EMOTIONS


class TestTrainingSmoke:
    def test_loss_decreases_on_default_corpus(self, trained):
        _, report = trained
        assert report.epoch_losses[-1][0] < report.epoch_losses[0][0]


class TestDecoderFidelity:
    def test_pitch_mean_recovered_for_most_clips(self, trained, default_corpus):
        enc, _ = trained
        good = total = 0
        for feats in default_corpus:
            true = prosody_stats(feats)
            if true[0] <= 0:
                continue
            predicted = enc.decode_prosody_stats(enc.encode(feats))
            total += 1
            good += int(abs(predicted[0] - true[0]) <= 0.15 * true[0])
        assert good / total >= 0.8

    def test_heldout_joy_clips_classified_as_joy(self, trained, default_corpus):
        enc, report = trained
        joy_holdout = [default_corpus[i] for i in report.holdout_indices
                       if default_corpus[i].emotion == "joy"]
        assert joy_holdout
        hits = sum(int(np.argmax(enc.discriminate(enc.encode(f))) ==
                       EMOTIONS.index("joy")) for f in joy_holdout)
        assert hits / len(joy_holdout) >= 0.9


class TestEmbeddingGeometry:
    def test_joy_sadness_farther_than_joy_surprise(self, emotion_stats):
        d_sadness = np.linalg.norm(emotion_stats.means["joy"]
                                   - emotion_stats.means["sadness"])
        d_surprise = np.linalg.norm(emotion_stats.means["joy"]
                                    - emotion_stats.means["surprise"])
        assert d_sadness > d_surprise

    def test_joy_sadness_cosine_negative(self, embedding_set):
        sim = analysis.cosine_matrix(embedding_set)
        i, j = EMOTIONS.index("joy"), EMOTIONS.index("sadness")
        assert sim.values[i, j] < 0

    def test_negated_joy_classifies_as_most_anticorrelated(self, trained, basis,
                                                           emotion_stats):
        enc, _ = trained
        means = np.stack([emotion_stats.means[e] for e in EMOTIONS])
        normed = means / np.linalg.norm(means, axis=1, keepdims=True)
        cosines = normed @ normed.T
        joy = EMOTIONS.index("joy")
        u = algebra.reconstruct(algebra.negate(emotion_stats.means["joy"]), basis)
        predicted = int(np.argmax(enc.discriminate(u)))
        assert predicted == int(np.argmin(cosines[joy]))


class TestTruncationResidual:
    def test_mean_residual_equals_tail_eigenvalue_sum(self, embedding_set, basis):
        # Average squared reconstruction residual over the training rows is
        # exactly the variance left out of the retained components.
        residuals = []
        for u in embedding_set.embeddings:
            recon = algebra.reconstruct(algebra.project(u, basis), basis)
            residuals.append(np.sum((recon - u) ** 2))
        tail = basis.all_eigenvalues[basis.n:].sum()
        assert abs(np.mean(residuals) - tail) <= 1e-6 * max(tail, 1.0)

    def test_transfer_of_training_clip_is_projection(self, trained, basis,
                                                     default_corpus):
        enc, _ = trained
        feats = default_corpus[17]
        w = algebra.transfer_unseen(enc, feats, basis)
        assert np.array_equal(w, algebra.project(enc.encode(feats), basis))
