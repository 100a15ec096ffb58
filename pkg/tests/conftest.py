"""Shared fixtures.

The default synthetic corpus and the two encoder training runs are expensive
(around a minute each), so they are session-scoped and reused by the module,
pipeline, and acceptance tests.  Small throwaway corpora for contract tests
are built per-module instead.
"""

import threading

import numpy as np
import pytest

from daisy import algebra, analysis, encoder, features, service


@pytest.fixture(scope="session")
def default_corpus():
    return features.generate_synthetic_corpus(features.SyntheticCorpusSpec(rng_seed=7))


@pytest.fixture(scope="session")
def trained(default_corpus):
    return encoder.train(default_corpus, encoder.EncoderConfig())


@pytest.fixture(scope="session")
def ablated(default_corpus):
    cfg = encoder.EncoderConfig(discriminator_enabled=False)
    return encoder.train(default_corpus, cfg)


@pytest.fixture(scope="session")
def embedding_set(trained, default_corpus):
    enc, _ = trained
    return encoder.embed_corpus(enc, default_corpus)


@pytest.fixture(scope="session")
def basis(embedding_set):
    return algebra.fit_basis(embedding_set)


@pytest.fixture(scope="session")
def emotion_stats(embedding_set, basis):
    return algebra.fit_emotion_stats(embedding_set, basis)


@pytest.fixture(scope="session")
def small_corpus():
    """Cheap corpus for contract tests that only need training to run."""
    profiles = features.default_profiles()
    short = {e: features.EmotionProfile(
        p.pitch_base_hz, p.pitch_range_hz, p.pitch_slope_hz_per_s,
        p.energy_level, p.tremor_rate_hz, (0.5, 0.8))
        for e, p in profiles.items()}
    spec = features.SyntheticCorpusSpec(profiles=short, clips_per_emotion=4,
                                        speakers=1, rng_seed=11)
    return features.generate_synthetic_corpus(spec)


@pytest.fixture(scope="session")
def small_trained(small_corpus):
    cfg = encoder.EncoderConfig(embed_dim=12, conv_channels=(16, 16, 16),
                                epochs=6, batch_size=8, rng_seed=3)
    return encoder.train(small_corpus, cfg)


@pytest.fixture(scope="session")
def artifacts_dir(tmp_path_factory, default_corpus, trained, embedding_set,
                  basis, emotion_stats):
    """The three persisted artifacts, written once for CLI/service tests."""
    enc, _ = trained
    root = tmp_path_factory.mktemp("artifacts")
    features.save_feature_cache(root / "corpus.bin", default_corpus)
    encoder.save_model(root / "model.bin", enc)
    algebra.save_basis(root / "basis.bin", basis, emotion_stats)
    return root


@pytest.fixture(scope="session")
def live_service(artifacts_dir):
    """A running HTTP service over the saved artifacts; yields its base URL."""
    state = service.SessionState.from_artifacts(
        artifacts_dir / "model.bin", artifacts_dir / "basis.bin",
        artifacts_dir / "corpus.bin")
    server = service.build_server(state, host="127.0.0.1", port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)
