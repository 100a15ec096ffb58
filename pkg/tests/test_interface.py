"""CLI contract (exit codes, determinism, artifact round-trips) and
service handler validation; live-endpoint conformance runs in the
acceptance suite."""

import json
import subprocess
import sys

import numpy as np
import pytest

from daisy import algebra, encoder, features, service


def run_cli(args, home, **kwargs):
    return subprocess.run([sys.executable, "-m", "daisy.cli", *args],
                          capture_output=True, text=True,
                          env={"DAISY_HOME": str(home), "PATH": "/usr/bin:/bin"},
                          **kwargs)


@pytest.fixture(scope="module")
def cli_home(tmp_path_factory):
    """A tiny end-to-end pipeline driven purely through the CLI."""
    home = tmp_path_factory.mktemp("cli_home")
    steps = [
        ["gen-corpus", "--seed", "3", "--clips-per-emotion", "3", "--speakers", "1"],
        ["train", "--seed", "1", "--epochs", "2", "--batch-size", "8"],
        ["fit"],
    ]
    for step in steps:
        result = run_cli(step, home)
        assert result.returncode == 0, result.stderr
    return home


class TestCliPipeline:
    def test_gen_corpus_deterministic(self, tmp_path):
        for name in ("a.bin", "b.bin"):
            result = run_cli(["gen-corpus", "--seed", "7", "--clips-per-emotion",
                              "2", "--speakers", "1", "--out", str(tmp_path / name)],
                             tmp_path)
            assert result.returncode == 0, result.stderr
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_artifacts_created_in_home(self, cli_home):
        for name in ("corpus.bin", "model.bin", "basis.bin"):
            assert (cli_home / name).exists()

    def test_train_emits_progress_lines(self, cli_home, tmp_path):
        result = run_cli(["train", "--seed", "1", "--epochs", "2",
                          "--batch-size", "8", "--out", str(tmp_path / "m.bin")],
                         cli_home)
        assert result.returncode == 0
        records = [json.loads(line) for line in result.stdout.splitlines()
                   if line.startswith("{")]
        assert [r["epoch"] for r in records] == [1, 2]
        assert all("holdout_accuracy" in r for r in records)

    def test_sample_outputs_json(self, cli_home):
        result = run_cli(["sample", "--emotion", "joy", "--seed", "5"], cli_home)
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["emotion"] == "joy"
        assert payload["seed"] == 5
        basis, _ = algebra.load_basis(cli_home / "basis.bin")
        assert len(payload["w"]) == basis.n
        assert len(payload["embedding"]) == basis.d

    def test_mix_names_envy(self, cli_home):
        args = ["mix", "--pair", "anger", "sadness", "--alpha", "1.75", "--seed", "1"]
        first = run_cli(args, cli_home)
        second = run_cli(args, cli_home)
        assert first.returncode == 0, first.stderr
        payload = json.loads(first.stdout)
        assert payload["name"] == "envy"
        assert payload["alpha"] == 1.75
        basis, _ = algebra.load_basis(cli_home / "basis.bin")
        assert len(payload["w"]) == basis.n
        assert first.stdout == second.stdout

    def test_negated_sample_is_labeled_polar(self, cli_home):
        result = run_cli(["sample", "--emotion", "joy", "--negate", "--seed", "2"],
                         cli_home)
        assert json.loads(result.stdout)["name"] == "polar joy"

    def test_missing_corpus_is_runtime_error(self, tmp_path):
        result = run_cli(["train", "--corpus", str(tmp_path / "missing.bin")],
                         tmp_path)
        assert result.returncode == 1
        assert result.stderr.strip().startswith("error:")

    def test_unknown_flag_is_usage_error(self, tmp_path):
        result = run_cli(["gen-corpus", "--frobnicate"], tmp_path)
        assert result.returncode == 2
        assert "usage" in result.stderr.lower()

    def test_sample_requires_seed(self, cli_home):
        result = run_cli(["sample", "--emotion", "joy"], cli_home)
        assert result.returncode == 2

    def test_analyze_writes_reports(self, cli_home, tmp_path):
        out = tmp_path / "analysis"
        result = run_cli(["analyze", "--out-dir", str(out)], cli_home)
        assert result.returncode == 0, result.stderr
        for name in ("similarity.json", "confusion.json", "variance.json",
                     "projection.json", "variance.svg", "projection.svg",
                     "report.json"):
            assert (out / name).exists()
        similarity = json.loads((out / "similarity.json").read_text())
        values = np.array(similarity["values"])
        assert np.allclose(values, values.T)
        assert np.allclose(np.diag(values), 1.0)


@pytest.fixture(scope="module")
def session_state(tmp_path_factory):
    """Small but complete SessionState for handler-level validation."""
    profiles = features.default_profiles()
    short = {e: features.EmotionProfile(
        p.pitch_base_hz, p.pitch_range_hz, p.pitch_slope_hz_per_s,
        p.energy_level, p.tremor_rate_hz, (0.5, 0.8))
        for e, p in profiles.items()}
    corpus = features.generate_synthetic_corpus(
        features.SyntheticCorpusSpec(profiles=short, clips_per_emotion=4,
                                     speakers=1, rng_seed=11))
    cfg = encoder.EncoderConfig(embed_dim=12, conv_channels=(16, 16, 16),
                                epochs=6, batch_size=8, rng_seed=3)
    enc, _ = encoder.train(corpus, cfg)
    es = encoder.embed_corpus(enc, corpus)
    basis = algebra.fit_basis(es)
    stats = algebra.fit_emotion_stats(es, basis)
    return service.SessionState(encoder=enc, basis=basis, stats=stats,
                                embedding_set=es)


class TestServiceHandlers:
    def test_emotions_catalog(self, session_state):
        payload = session_state.handle_emotions()
        assert payload["primaries"] == list(features.EMOTIONS)
        assert len(payload["secondaries"]) == 6
        assert payload["alpha_levels"] == {"low": 0.25, "medium": 1.0, "high": 1.75}

    def test_sample_requires_integer_seed(self, session_state):
        with pytest.raises(service.ApiError) as err:
            session_state.handle_sample({"emotion": "joy"})
        assert err.value.status == 400
        with pytest.raises(service.ApiError) as err:
            session_state.handle_sample({"emotion": "joy", "seed": "seven"})
        assert err.value.status == 400

    def test_unknown_emotion_is_422(self, session_state):
        with pytest.raises(service.ApiError) as err:
            session_state.handle_sample({"emotion": "melancholy", "seed": 1})
        assert err.value.status == 422

    def test_bad_alpha_is_400(self, session_state):
        with pytest.raises(service.ApiError) as err:
            session_state.handle_sample({"emotion": "joy", "seed": 1, "alpha": -2})
        assert err.value.status == 400

    def test_mix_pair_validation(self, session_state):
        with pytest.raises(service.ApiError) as err:
            session_state.handle_mix({"mode": "secondary", "pair": ["joy"], "seed": 1})
        assert err.value.status == 400
        with pytest.raises(service.ApiError) as err:
            session_state.handle_mix({"mode": "secondary",
                                      "pair": ["joy", "nostalgia"], "seed": 1})
        assert err.value.status == 422

    def test_classify_embedding_length(self, session_state):
        with pytest.raises(service.ApiError) as err:
            session_state.handle_classify({"embedding": [0.0] * 5})
        assert err.value.status == 400

    def test_transfer_mode_roundtrip(self, session_state):
        u = session_state.embedding_set.embeddings[0]
        payload = session_state.handle_mix({"mode": "transfer",
                                            "embedding": u.tolist(),
                                            "tau": 0.0, "seed": 4})
        w = algebra.project(u, session_state.basis)
        assert np.allclose(payload["w"], w, atol=1e-12)

    def test_stats_payload_names(self, session_state):
        u = session_state.embedding_set.embeddings[0]
        payload = session_state.handle_stats({"embedding": u.tolist(), "seed": 2})
        assert set(payload["stats"]) == set(encoder.PROSODY_STAT_NAMES)
        assert payload["seed"] == 2


class TestCliServiceParity:
    def test_mix_matches_post_mix(self, artifacts_dir, live_service):
        import urllib.request
        result = run_cli(["mix", "--pair", "joy", "surprise", "--alpha", "1.75",
                          "--seed", "42", "--basis", str(artifacts_dir / "basis.bin")],
                         artifacts_dir)
        assert result.returncode == 0, result.stderr
        cli_payload = json.loads(result.stdout)
        body = json.dumps({"mode": "secondary", "pair": ["joy", "surprise"],
                           "alpha": 1.75, "seed": 42}).encode()
        request = urllib.request.Request(f"{live_service}/mix", data=body,
                                         headers={"Content-Type": "application/json"})
        with urllib.request.urlopen(request) as response:
            service_payload = json.loads(response.read())
        assert cli_payload["w"] == service_payload["w"]
        assert cli_payload["embedding"] == service_payload["embedding"]
        assert cli_payload["name"] == service_payload["name"] == "delight"
