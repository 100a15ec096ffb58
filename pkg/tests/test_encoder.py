"""Encoder contracts: shapes, determinism, validation, training behavior,
prosody statistics, and the DAISYE1 model format."""

import numpy as np
import pytest

from daisy import encoder
from daisy.encoder import (EncoderConfig, TrainedEncoder, embed_corpus,
                           load_model, prosody_stats, save_model, train)
from daisy.features import EMOTIONS, FormatError, SpeechFeatures


def fake_features(frames=40, n_mels=80, pitch_value=200.0, seed=0,
                  emotion="joy", speaker="s0"):
    rng = np.random.default_rng(seed)
    return SpeechFeatures(mel=rng.standard_normal((frames, n_mels)),
                          pitch=np.full(frames, pitch_value),
                          energy=np.abs(rng.standard_normal(frames)),
                          emotion=emotion, speaker=speaker)


class TestProsodyStats:
    def test_constant_pitch_and_energy(self):
        feats = SpeechFeatures(mel=np.zeros((10, 4)),
                               pitch=np.full(10, 150.0),
                               energy=np.full(10, 0.25))
        stats = prosody_stats(feats)
        assert stats[0] == pytest.approx(150.0)     # pitch mean
        assert stats[1] == pytest.approx(0.0)       # pitch std
        assert stats[2] == pytest.approx(0.0)       # slope
        assert stats[3] == pytest.approx(0.25)      # energy mean
        assert stats[4] == pytest.approx(0.0)       # energy std
        assert stats[5] == pytest.approx(1.0)       # voiced fraction

    def test_linear_pitch_ramp_slope(self):
        pitch = 100.0 + 2.0 * np.arange(20)
        feats = SpeechFeatures(mel=np.zeros((20, 4)), pitch=pitch,
                               energy=np.ones(20))
        assert prosody_stats(feats)[2] == pytest.approx(2.0)

    def test_unvoiced_clip(self):
        feats = SpeechFeatures(mel=np.zeros((10, 4)), pitch=np.zeros(10),
                               energy=np.ones(10))
        stats = prosody_stats(feats)
        assert stats[0] == stats[1] == stats[2] == 0.0
        assert stats[5] == 0.0


class TestEncode:
    def test_length_invariance(self, small_trained):
        enc, _ = small_trained
        short = fake_features(frames=20)
        long = fake_features(frames=77)
        assert enc.encode(short).shape == (enc.embed_dim,)
        assert enc.encode(long).shape == (enc.embed_dim,)

    def test_determinism(self, small_trained):
        enc, _ = small_trained
        feats = fake_features(seed=4)
        assert np.array_equal(enc.encode(feats), enc.encode(feats))

    def test_nan_pitch_rejected(self, small_trained):
        enc, _ = small_trained
        feats = fake_features()
        bad = SpeechFeatures(mel=feats.mel,
                             pitch=np.where(np.arange(feats.frames) == 3,
                                            np.nan, feats.pitch),
                             energy=feats.energy)
        with pytest.raises(ValueError, match="non-finite"):
            enc.encode(bad)

    def test_too_few_frames_rejected(self, small_trained):
        enc, _ = small_trained
        with pytest.raises(ValueError, match="at least"):
            enc.encode(fake_features(frames=3))


class TestDiscriminate:
    def test_probabilities_sum_to_one(self, small_trained):
        enc, _ = small_trained
        rng = np.random.default_rng(0)
        for _ in range(25):
            probs = enc.discriminate(rng.standard_normal(enc.embed_dim) * 10)
            assert probs.shape == (4,)
            assert np.all(probs >= 0)
            assert abs(probs.sum() - 1.0) < 1e-6

    def test_zero_vector_is_valid_input(self, small_trained):
        enc, _ = small_trained
        probs = enc.discriminate(np.zeros(enc.embed_dim))
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_dimension_mismatch(self, small_trained):
        enc, _ = small_trained
        with pytest.raises(ValueError):
            enc.discriminate(np.zeros(enc.embed_dim + 1))


class TestDecodeProsodyStats:
    def test_voiced_fraction_clamped(self, small_trained):
        enc, _ = small_trained
        rng = np.random.default_rng(1)
        for _ in range(20):
            stats = enc.decode_prosody_stats(rng.standard_normal(enc.embed_dim) * 50)
            assert 0.0 <= stats[5] <= 1.0

    def test_determinism(self, small_trained):
        enc, _ = small_trained
        u = np.random.default_rng(2).standard_normal(enc.embed_dim)
        assert np.array_equal(enc.decode_prosody_stats(u),
                              enc.decode_prosody_stats(u.copy()))


class TestTrain:
    def test_determinism(self, small_corpus):
        cfg = EncoderConfig(epochs=3, batch_size=8, rng_seed=5)
        enc1, rep1 = train(small_corpus, cfg)
        enc2, rep2 = train(small_corpus, cfg)
        for key in enc1.params:
            assert np.array_equal(enc1.params[key], enc2.params[key])
        assert rep1.epoch_losses == rep2.epoch_losses

    def test_loss_decreases(self, small_trained):
        _, report = small_trained
        assert report.epoch_losses[-1][0] < report.epoch_losses[0][0]

    def test_report_shape(self, small_trained):
        _, report = small_trained
        assert report.epochs == len(report.epoch_losses)
        assert 0.0 <= report.holdout_accuracy <= 1.0
        assert report.wall_clock_s > 0
        assert not set(report.train_indices) & set(report.holdout_indices)
        assert all(np.isfinite(v) for row in report.epoch_losses for v in row)

    def test_corpus_too_small(self):
        corpus = [fake_features(emotion="joy", seed=i) for i in range(4)]
        with pytest.raises(ValueError, match="corpus too small"):
            train(corpus, EncoderConfig(epochs=1))

    def test_neutral_clips_allowed(self, small_corpus):
        with_neutral = list(small_corpus) + [
            fake_features(emotion="neutral", seed=90),
            fake_features(emotion="neutral", seed=91)]
        cfg = EncoderConfig(epochs=2, batch_size=8, rng_seed=1)
        enc, report = train(with_neutral, cfg)
        assert np.isfinite(report.epoch_losses[-1][0])

    def test_divergence_reported(self, small_corpus):
        cfg = EncoderConfig(epochs=3, batch_size=8, rng_seed=5, learning_rate=1e8)
        with pytest.raises(RuntimeError, match="diverged"):
            train(small_corpus, cfg)

    def test_progress_callback(self, small_corpus):
        records = []
        cfg = EncoderConfig(epochs=2, batch_size=8, rng_seed=5)
        train(small_corpus, cfg, progress=records.append)
        assert [r["epoch"] for r in records] == [1, 2]
        assert {"total", "cross_entropy", "aux", "holdout_accuracy"} <= records[0].keys()


class TestEmbedCorpus:
    def test_shape_and_labels(self, small_trained, small_corpus):
        enc, _ = small_trained
        es = embed_corpus(enc, small_corpus)
        assert es.embeddings.shape == (len(small_corpus), enc.embed_dim)
        assert es.emotions == tuple(f.emotion for f in small_corpus)
        assert es.speakers == tuple(f.speaker for f in small_corpus)

    def test_rerun_identical(self, small_trained, small_corpus):
        enc, _ = small_trained
        a = embed_corpus(enc, small_corpus)
        b = embed_corpus(enc, small_corpus)
        assert np.array_equal(a.embeddings, b.embeddings)


class TestModelPersistence:
    def test_roundtrip_behavior(self, small_trained, tmp_path):
        enc, _ = small_trained
        path = tmp_path / "m.bin"
        save_model(path, enc)
        loaded = load_model(path)
        feats = fake_features(seed=17)
        # Parameters are stored as float32, so embeddings agree to that level.
        assert np.allclose(enc.encode(feats), loaded.encode(feats),
                           rtol=1e-4, atol=1e-4)
        assert loaded.config == enc.config
        assert np.array_equal(loaded.channel_mean, enc.channel_mean)
        assert np.array_equal(loaded.stats_std, enc.stats_std)

    def test_rewrite_is_byte_identical(self, small_trained, tmp_path):
        enc, _ = small_trained
        p1, p2 = tmp_path / "m1.bin", tmp_path / "m2.bin"
        save_model(p1, enc)
        save_model(p2, load_model(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"BOGUS123" + b"\x00" * 64)
        with pytest.raises(FormatError):
            load_model(path)
