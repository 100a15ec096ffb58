"""Command-line interface over the full pipeline.

Subcommands: gen-corpus, extract, train, fit, sample, mix, analyze, serve.
Artifacts use the versioned binary formats of their modules; paths left at
their defaults resolve inside $DAISY_HOME (falling back to the working
directory).  Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import algebra, analysis, encoder as encoder_mod, features, service


def artifact_dir() -> Path:
    return Path(os.environ.get("DAISY_HOME", "."))


def positive_float(raw: str) -> float:
    value = float(raw)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"{raw} is not a positive number")
    return value


def _default(name: str) -> str:
    return str(artifact_dir() / name)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daisy",
        description="Emotion-space prosody embeddings: corpus generation, "
                    "training, decomposition, sampling, mixing, analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate the synthetic labeled corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--clips-per-emotion", type=int, default=50)
    p.add_argument("--speakers", type=int, default=2)
    p.add_argument("--out", default=None, help="output feature cache (DAISYF1)")

    p = sub.add_parser("extract", help="extract features from a labeled WAV tree")
    p.add_argument("--audio-dir", required=True,
                   help="layout: <root>/<speaker>/<emotion>/<clip>.wav")
    p.add_argument("--rate", type=int, default=22050)
    p.add_argument("--out", default=None)

    p = sub.add_parser("train", help="train the prosody encoder")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None, help="output model file (DAISYE1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--embed-dim", type=int, default=None)
    p.add_argument("--ce-weight", type=float, default=None)
    p.add_argument("--aux-weight", type=float, default=None)
    p.add_argument("--no-discriminator", action="store_true")

    p = sub.add_parser("fit", help="fit the PCA basis and per-emotion stats")
    p.add_argument("--corpus", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--components", type=int, default=None,
                   help="retained components (default: 95%% variance, max 16)")
    p.add_argument("--out", default=None, help="output basis file (DAISYB1)")

    p = sub.add_parser("sample", help="sample a primary emotion")
    p.add_argument("--basis", default=None)
    p.add_argument("--emotion", required=True, choices=features.EMOTIONS)
    p.add_argument("--alpha", type=positive_float, default=1.0)
    p.add_argument("--negate", action="store_true")
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("mix", help="sample a secondary (two-primary) mixture")
    p.add_argument("--basis", default=None)
    p.add_argument("--pair", nargs=2, required=True, metavar=("EMOTION1", "EMOTION2"),
                   choices=features.EMOTIONS)
    p.add_argument("--beta", type=float, default=0.5,
                   help="blend weight; 0.5 is the equal-precision fusion")
    p.add_argument("--alpha", type=positive_float, default=1.0)
    p.add_argument("--negate", action="store_true")
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("analyze", help="write similarity/confusion/variance/projection reports")
    p.add_argument("--corpus", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--ablation", action="store_true",
                   help="also train without the discriminator and compare")
    p.add_argument("--seed", type=int, default=0, help="seed for ablation training")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model", default=None)
    p.add_argument("--basis", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)

    return parser


def _cmd_gen_corpus(args) -> int:
    spec = features.SyntheticCorpusSpec(clips_per_emotion=args.clips_per_emotion,
                                        speakers=args.speakers, rng_seed=args.seed)
    corpus = features.generate_synthetic_corpus(spec)
    out = args.out or _default("corpus.bin")
    features.save_feature_cache(out, corpus)
    print(f"wrote {len(corpus)} clips to {out}")
    return 0


def _cmd_extract(args) -> int:
    corpus = features.read_labeled_corpus(args.audio_dir, target_rate=args.rate)
    out = args.out or _default("corpus.bin")
    features.save_feature_cache(out, corpus)
    print(f"wrote {len(corpus)} clips to {out}")
    return 0


def _cmd_train(args) -> int:
    corpus = features.load_feature_cache(args.corpus or _default("corpus.bin"))
    cfg = encoder_mod.EncoderConfig(rng_seed=args.seed,
                                    discriminator_enabled=not args.no_discriminator)
    overrides = {name: getattr(args, name) for name in
                 ("epochs", "batch_size", "learning_rate", "embed_dim",
                  "ce_weight", "aux_weight")
                 if getattr(args, name) is not None}
    if overrides:
        cfg = replace(cfg, **overrides)
    enc, report = encoder_mod.train(
        corpus, cfg, progress=lambda rec: print(json.dumps(rec, sort_keys=True)))
    out = args.out or _default("model.bin")
    encoder_mod.save_model(out, enc)
    print(f"wrote model to {out} (holdout accuracy {report.holdout_accuracy:.3f})")
    return 0


def _cmd_fit(args) -> int:
    corpus = features.load_feature_cache(args.corpus or _default("corpus.bin"))
    enc = encoder_mod.load_model(args.model or _default("model.bin"))
    embedding_set = encoder_mod.embed_corpus(enc, corpus)
    basis = algebra.fit_basis(embedding_set, n=args.components)
    stats = algebra.fit_emotion_stats(embedding_set, basis)
    out = args.out or _default("basis.bin")
    algebra.save_basis(out, basis, stats)
    print(f"wrote basis ({basis.n} components, d={basis.d}) to {out}")
    return 0


def _cmd_sample(args) -> int:
    basis, stats = algebra.load_basis(args.basis or _default("basis.bin"))
    w = algebra.sample_primary(stats, args.emotion, args.seed)
    if args.negate:
        w = algebra.negate(w)
    u = algebra.reconstruct(w, basis, args.alpha)
    name = f"polar {args.emotion}" if args.negate else args.emotion
    print(json.dumps({"seed": args.seed, "emotion": args.emotion, "name": name,
                      "alpha": args.alpha, "negate": args.negate,
                      "w": w.tolist(), "embedding": u.tolist()}, sort_keys=True))
    return 0


def _cmd_mix(args) -> int:
    basis, stats = algebra.load_basis(args.basis or _default("basis.bin"))
    e1, e2 = args.pair
    mixture, w = algebra.mix_secondary(stats, e1, e2, args.seed, beta=args.beta)
    name = mixture.name or f"{e1}+{e2}"
    if args.negate:
        w = algebra.negate(w)
        name = f"polar {name}"
    u = algebra.reconstruct(w, basis, args.alpha)
    print(json.dumps({"seed": args.seed, "mode": "secondary", "name": name,
                      "pair": [e1, e2], "beta": args.beta, "alpha": args.alpha,
                      "negate": args.negate, "extension": mixture.extension,
                      "self_mixture": mixture.self_mixture,
                      "w": w.tolist(), "embedding": u.tolist()}, sort_keys=True))
    return 0


def _cmd_analyze(args) -> int:
    corpus = features.load_feature_cache(args.corpus or _default("corpus.bin"))
    enc = encoder_mod.load_model(args.model or _default("model.bin"))
    out_dir = Path(args.out_dir or _default("analysis"))
    out_dir.mkdir(parents=True, exist_ok=True)

    embedding_set = encoder_mod.embed_corpus(enc, corpus)
    basis = algebra.fit_basis(embedding_set, n=args.components)
    similarity = analysis.cosine_matrix(embedding_set)
    samples = [(f, f.emotion) for f in corpus if f.emotion in features.EMOTIONS]
    confusion = analysis.confusion(enc, samples)
    profile = analysis.variance_profile(basis)
    projection = analysis.project_2d(embedding_set, basis)

    (out_dir / "similarity.json").write_text(json.dumps(similarity.to_json(), indent=2))
    (out_dir / "confusion.json").write_text(json.dumps(confusion.to_json(), indent=2))
    (out_dir / "variance.json").write_text(json.dumps(profile.to_json(), indent=2))
    (out_dir / "projection.json").write_text(json.dumps(projection.to_json(), indent=2))
    (out_dir / "variance.svg").write_text(analysis.svg_bars(profile))
    (out_dir / "projection.svg").write_text(analysis.svg_scatter(projection))
    summary = {"silhouette": analysis.emotion_silhouette(embedding_set),
               "variance_entropy": analysis.ratio_entropy(profile),
               "retained_components": basis.n}

    if args.ablation:
        cfg = replace(enc.config, rng_seed=args.seed)
        report = analysis.ablation_report(corpus, cfg)
        (out_dir / "ablation.json").write_text(json.dumps(report.to_json(), indent=2))
        (out_dir / "ablation_projection_with.svg").write_text(
            analysis.svg_scatter(report.projection_with, title="with discriminator"))
        (out_dir / "ablation_projection_without.svg").write_text(
            analysis.svg_scatter(report.projection_without, title="without discriminator"))
        summary["ablation"] = {"silhouette_with": report.silhouette_with,
                               "silhouette_without": report.silhouette_without,
                               "entropy_with": report.entropy_with,
                               "entropy_without": report.entropy_without}

    (out_dir / "report.json").write_text(json.dumps(summary, indent=2))
    print(f"wrote analysis artifacts to {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    state = service.SessionState.from_artifacts(
        args.model or _default("model.bin"),
        args.basis or _default("basis.bin"),
        args.corpus or _default("corpus.bin"))
    print(f"serving on http://{args.host}:{args.port}", flush=True)
    service.serve(state, args.host, args.port)
    return 0


_COMMANDS = {
    "gen-corpus": _cmd_gen_corpus,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "fit": _cmd_fit,
    "sample": _cmd_sample,
    "mix": _cmd_mix,
    "analyze": _cmd_analyze,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
