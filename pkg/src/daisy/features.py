"""Audio ingestion and non-lexical feature extraction.

Turns raw waveforms into the aligned feature bundle used everywhere else
(log-mel spectrogram, pitch contour, per-frame RMS energy), and generates
a deterministic synthetic emotional-prosody corpus for desk-scale training.
All three feature streams share one framing convention (center padding,
``floor(len / hop) + 1`` frames) so alignment never has to be repaired.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import struct

import numpy as np
from scipy.io import wavfile

EMOTIONS = ("joy", "sadness", "anger", "surprise")
NEUTRAL = "neutral"
CORPUS_LABELS = EMOTIONS + (NEUTRAL,)

# Amplitude floor applied before the log so silence has a bounded value.
LOG_FLOOR = 1e-5
# Periodicity threshold for the cumulative-mean-normalized difference function.
YIN_THRESHOLD = 0.15

FEATURE_MAGIC = b"DAISYF1"


class FormatError(ValueError):
    """Raised when a binary artifact does not match its declared format."""


def _check_label(label: str) -> str:
    if label not in CORPUS_LABELS:
        raise ValueError(f"unknown emotion label {label!r}, expected one of {CORPUS_LABELS}")
    return label


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono waveform with samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("empty audio")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio contains non-finite samples")
        if np.max(np.abs(samples)) > 1.0 + 1e-9:
            raise ValueError("samples exceed [-1, 1]")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FeatureConfig:
    """Analysis settings shared by all three feature streams."""

    n_mels: int = 80
    fft_size: int = 1024
    window_size: int = 1024
    hop_length: int = 256
    pitch_fmin: float = 50.0
    pitch_fmax: float = 600.0

    def __post_init__(self):
        if min(self.n_mels, self.fft_size, self.window_size, self.hop_length) <= 0:
            raise ValueError("all sizes must be positive")
        if self.window_size > self.fft_size:
            raise ValueError("window_size must not exceed fft_size")
        if self.hop_length > self.window_size:
            raise ValueError("hop_length must not exceed window_size")
        if not 0 < self.pitch_fmin < self.pitch_fmax:
            raise ValueError("need 0 < pitch_fmin < pitch_fmax")


@dataclass(frozen=True, eq=False)
class SpeechFeatures:
    """Aligned mel / pitch / energy streams with emotion and speaker tags."""

    mel: np.ndarray      # (frames, n_mels) log-amplitude, float32
    pitch: np.ndarray    # (frames,) Hz, 0 where unvoiced, float32
    energy: np.ndarray   # (frames,) per-frame RMS, float32
    emotion: str = NEUTRAL
    speaker: str = ""

    def __post_init__(self):
        mel = np.asarray(self.mel, dtype=np.float32)
        pitch = np.asarray(self.pitch, dtype=np.float32)
        energy = np.asarray(self.energy, dtype=np.float32)
        object.__setattr__(self, "mel", mel)
        object.__setattr__(self, "pitch", pitch)
        object.__setattr__(self, "energy", energy)
        if mel.ndim != 2:
            raise ValueError("mel must be 2-D (frames x n_mels)")
        if not (mel.shape[0] == pitch.shape[0] == energy.shape[0]):
            raise ValueError("feature streams have mismatched frame counts")
        if np.any(energy < 0):
            raise ValueError("energy must be non-negative")
        _check_label(self.emotion)

    @property
    def frames(self) -> int:
        return self.mel.shape[0]


# ---------------------------------------------------------------------------
# Audio loading
# ---------------------------------------------------------------------------

def load_audio(path, target_rate: int = 22050) -> AudioClip:
    """Read a PCM WAV file (16-bit int or 32-bit float), resampling if needed.

    Multi-channel files keep only the first channel.  Resampling is plain
    linear interpolation, which is adequate for prosody features.
    """
    path = Path(path)
    try:
        rate, data = wavfile.read(str(path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        if path.exists() and path.stat().st_size == 0:
            raise ValueError("empty audio") from exc
        raise ValueError(f"unsupported or unreadable WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise ValueError("empty audio")
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        samples = np.clip(data.astype(np.float64), -1.0, 1.0)
    else:
        raise ValueError(f"unsupported WAV encoding {data.dtype}")
    if rate != target_rate:
        n_out = int(round(data.shape[0] * target_rate / rate))
        t_out = np.arange(n_out) * (rate / target_rate)
        samples = np.interp(t_out, np.arange(samples.size), samples)
    return AudioClip(samples=samples, sample_rate=target_rate)


# ---------------------------------------------------------------------------
# Framing helpers
# ---------------------------------------------------------------------------

def frame_count(n_samples: int, hop_length: int) -> int:
    return n_samples // hop_length + 1

def _frame_signal(x: np.ndarray, frame_length: int, hop: int, n_frames: int) -> np.ndarray:
    """Center-padded framing: frame i covers [i*hop - L/2, i*hop + L/2)."""
    pad_left = frame_length // 2
    needed = (n_frames - 1) * hop + frame_length
    pad_right = max(0, needed - (x.size + pad_left))
    xp = np.pad(x, (pad_left, pad_right), mode="reflect")
    idx = np.arange(n_frames)[:, None] * hop + np.arange(frame_length)[None, :]
    return xp[idx]


# ---------------------------------------------------------------------------
# Mel spectrogram
# ---------------------------------------------------------------------------

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

def mel_filterbank(sample_rate: int, fft_size: int, n_mels: int) -> np.ndarray:
    """Triangular filters with unit peak, spanning [0, sample_rate/2]."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))
    freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)
    fb = np.zeros((n_mels, freqs.size))
    for b in range(n_mels):
        lo, center, hi = edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]
        rising = (freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - freqs) / max(hi - center, 1e-12)
        fb[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def compute_mel(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Log-amplitude mel spectrogram, (frames, n_mels)."""
    x = clip.samples
    if x.size < cfg.hop_length:
        raise ValueError("clip shorter than one hop")
    if cfg.pitch_fmax >= clip.sample_rate / 2:
        raise ValueError("pitch_fmax must be below Nyquist")
    n_frames = frame_count(x.size, cfg.hop_length)
    frames = _frame_signal(x, cfg.window_size, cfg.hop_length, n_frames)
    n = np.arange(cfg.window_size)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / cfg.window_size)
    spectrum = np.abs(np.fft.rfft(frames * window, n=cfg.fft_size, axis=1))
    fb = mel_filterbank(clip.sample_rate, cfg.fft_size, cfg.n_mels)
    return np.log(spectrum @ fb.T + LOG_FLOOR)


# ---------------------------------------------------------------------------
# Pitch (frame-wise YIN)
# ---------------------------------------------------------------------------

def compute_pitch(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Per-frame fundamental frequency in Hz; 0 where no periodicity is found.

    Frame-wise cumulative-mean-normalized autocorrelation with an absolute
    threshold and parabolic refinement.  Framing matches ``compute_mel``.
    """
    x = clip.samples
    if x.size < cfg.hop_length:
        raise ValueError("clip shorter than one hop")
    sr = clip.sample_rate
    if cfg.pitch_fmax >= sr / 2:
        raise ValueError("pitch_fmax must be below Nyquist")
    win = cfg.window_size
    tau_min = max(2, int(sr // cfg.pitch_fmax))
    tau_max = int(np.ceil(sr / cfg.pitch_fmin))
    n_frames = frame_count(x.size, cfg.hop_length)
    seg_len = win + tau_max
    frames = _frame_signal(x, seg_len, cfg.hop_length, n_frames)

    # Difference function d(tau) = |x[0:W] - x[tau:tau+W]|^2 for every frame,
    # via one batched FFT cross-correlation.
    nfft = 1 << int(np.ceil(np.log2(seg_len + 1)))
    head = frames[:, :win]
    spec_head = np.fft.rfft(head, n=nfft, axis=1)
    spec_full = np.fft.rfft(frames, n=nfft, axis=1)
    corr = np.fft.irfft(np.conj(spec_head) * spec_full, n=nfft, axis=1)[:, : tau_max + 1]
    sq = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(frames**2, axis=1)], axis=1)
    energy_head = sq[:, win]
    energy_lag = sq[:, win : win + tau_max + 1] - sq[:, : tau_max + 1]
    diff = energy_head[:, None] + energy_lag - 2.0 * corr
    diff = np.maximum(diff, 0.0)

    # Cumulative-mean normalization; frames with no energy stay at 1 (unvoiced).
    denom = np.cumsum(diff[:, 1:], axis=1)
    taus = np.arange(1, tau_max + 1, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        cmndf = np.where(denom > 0, diff[:, 1:] * taus / denom, 1.0)
    cmndf = np.concatenate([np.ones((n_frames, 1)), cmndf], axis=1)

    pitch = np.zeros(n_frames)
    for i in range(n_frames):
        row = cmndf[i]
        tau = _pick_period(row, tau_min, tau_max)
        if tau == 0:
            continue
        tau_ref = _parabolic_min(row, tau)
        f0 = sr / tau_ref
        if cfg.pitch_fmin <= f0 <= cfg.pitch_fmax:
            pitch[i] = f0
    return pitch


def _pick_period(cmndf_row: np.ndarray, tau_min: int, tau_max: int) -> int:
    """First lag under the threshold, walked down to its local minimum."""
    tau = tau_min
    while tau <= tau_max:
        if cmndf_row[tau] < YIN_THRESHOLD:
            while tau + 1 <= tau_max and cmndf_row[tau + 1] < cmndf_row[tau]:
                tau += 1
            return tau
        tau += 1
    return 0


def _parabolic_min(row: np.ndarray, tau: int) -> float:
    if tau <= 1 or tau >= row.size - 1:
        return float(tau)
    a, b, c = row[tau - 1], row[tau], row[tau + 1]
    denom = a - 2.0 * b + c
    if abs(denom) < 1e-12:
        return float(tau)
    shift = 0.5 * (a - c) / denom
    return float(tau) + float(np.clip(shift, -1.0, 1.0))


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------

def compute_energy(clip: AudioClip, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Per-frame RMS over the analysis window (no taper), same framing as mel."""
    x = clip.samples
    if x.size < cfg.hop_length:
        raise ValueError("clip shorter than one hop")
    n_frames = frame_count(x.size, cfg.hop_length)
    frames = _frame_signal(x, cfg.window_size, cfg.hop_length, n_frames)
    return np.sqrt(np.mean(frames**2, axis=1))


# ---------------------------------------------------------------------------
# Bundling
# ---------------------------------------------------------------------------

def extract_features(
    clip: AudioClip,
    label: str = NEUTRAL,
    speaker: str = "",
    cfg: FeatureConfig = FeatureConfig(),
) -> SpeechFeatures:
    """Compute and bundle the three aligned feature streams."""
    mel = compute_mel(clip, cfg)
    pitch = compute_pitch(clip, cfg)
    energy = compute_energy(clip, cfg)
    if not (mel.shape[0] == pitch.shape[0] == energy.shape[0]):
        raise ValueError("feature streams have mismatched frame counts")
    return SpeechFeatures(mel=mel, pitch=pitch, energy=energy,
                          emotion=_check_label(label), speaker=speaker)


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmotionProfile:
    """Parametric prosody recipe for one emotion."""

    pitch_base_hz: float
    pitch_range_hz: float
    pitch_slope_hz_per_s: float
    energy_level: float
    tremor_rate_hz: float
    duration_range_s: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.duration_range_s
        if lo <= 0 or hi < lo:
            raise ValueError("duration range must be positive and ordered")
        if not 0 < self.energy_level <= 1:
            raise ValueError("energy_level must be in (0, 1]")


def default_profiles() -> dict[str, EmotionProfile]:
    """Four pairwise-distinct prosody recipes echoing the usual vocal
    correlates: joy bright and rising, sadness low and falling, anger loud
    with fast tremor, surprise high with a steep sweep.  Joy/sadness and
    anger/surprise are deliberately near-antipodal in the stats space."""
    return {
        "joy": EmotionProfile(290.0, 50.0, 40.0, 0.75, 4.0, (1.0, 1.8)),
        "sadness": EmotionProfile(150.0, 12.0, -35.0, 0.22, 1.5, (1.0, 1.8)),
        "anger": EmotionProfile(200.0, 70.0, -10.0, 0.95, 6.0, (1.0, 1.8)),
        "surprise": EmotionProfile(330.0, 110.0, 80.0, 0.45, 3.0, (1.0, 1.8)),
    }


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    """Recipe for a deterministic labeled corpus (an ESD-free stand-in)."""

    profiles: dict[str, EmotionProfile] = field(default_factory=default_profiles)
    clips_per_emotion: int = 50
    speakers: int = 2
    rng_seed: int = 7
    sample_rate: int = 22050
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        if set(self.profiles) != set(EMOTIONS):
            raise ValueError(f"profiles must cover exactly {EMOTIONS}")
        if len({p for p in self.profiles.values()}) != 4:
            raise ValueError("emotion profiles must be pairwise distinct")
        if self.clips_per_emotion <= 0 or self.speakers <= 0:
            raise ValueError("clips_per_emotion and speakers must be positive")


def _speaker_multiplier(speaker_index: int, n_speakers: int) -> float:
    if n_speakers == 1:
        return 1.0
    return 0.85 + 0.35 * speaker_index / (n_speakers - 1)


def _synthesize_clip(profile: EmotionProfile, pitch_mult: float,
                     rng: np.random.Generator, sr: int,
                     fmin: float, fmax: float) -> np.ndarray:
    dur = rng.uniform(*profile.duration_range_s)
    n = int(round(dur * sr))
    t = np.arange(n) / sr

    base = profile.pitch_base_hz * pitch_mult
    vibrato = 0.5 * profile.pitch_range_hz * np.sin(
        2 * np.pi * profile.tremor_rate_hz * t + rng.uniform(0, 2 * np.pi))
    wander = 0.18 * profile.pitch_range_hz * np.sin(
        2 * np.pi * rng.uniform(0.4, 1.2) * t + rng.uniform(0, 2 * np.pi))
    f0 = base + profile.pitch_slope_hz_per_s * (t - dur / 2) + vibrato + wander
    f0 = np.clip(f0, fmin * 1.15, fmax * 0.88)

    phase = 2 * np.pi * np.cumsum(f0) / sr
    voiced = np.zeros(n)
    for h in range(1, 6):
        voiced += h ** -1.3 * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    voiced /= np.max(np.abs(voiced))

    # Amplitude: emotion level, short attack/release, tremor modulation.
    envelope = np.minimum(np.minimum(t / 0.05, 1.0), np.minimum((dur - t) / 0.08, 1.0))
    envelope = np.clip(envelope, 0.0, 1.0)
    tremor_amp = 1.0 + 0.25 * np.sin(2 * np.pi * profile.tremor_rate_hz * t
                                     + rng.uniform(0, 2 * np.pi))
    amplitude = 0.6 * profile.energy_level * envelope * tremor_amp

    # Voicing mask: leading/trailing silence plus pauses; quieter emotions
    # pause more, which differentiates the voiced fraction per class.
    mask = np.ones(n)
    lead = int(rng.uniform(0.04, 0.12) * sr)
    tail = int(rng.uniform(0.04, 0.12) * sr)
    mask[:lead] = 0.0
    if tail:
        mask[-tail:] = 0.0
    pause_rate = 0.9 * (1.0 - profile.energy_level)
    for _ in range(rng.poisson(pause_rate * dur)):
        start = int(rng.uniform(0.15, 0.8) * n)
        length = int(rng.uniform(0.06, 0.14) * sr)
        mask[start : start + length] = 0.0

    noise = 0.01 * rng.standard_normal(n)
    samples = amplitude * voiced * mask + noise
    return np.clip(samples, -0.99, 0.99)


def generate_synthetic_corpus(spec: SyntheticCorpusSpec) -> list[SpeechFeatures]:
    """Deterministic corpus: each clip's RNG stream is derived from
    (rng_seed, clip_index), so output is independent of evaluation order."""
    corpus = []
    clip_index = 0
    for emotion in EMOTIONS:
        profile = spec.profiles[emotion]
        for spk in range(spec.speakers):
            mult = _speaker_multiplier(spk, spec.speakers)
            for _ in range(spec.clips_per_emotion):
                rng = np.random.default_rng((spec.rng_seed, clip_index))
                samples = _synthesize_clip(
                    profile, mult, rng, spec.sample_rate,
                    spec.feature_config.pitch_fmin, spec.feature_config.pitch_fmax)
                clip = AudioClip(samples=samples, sample_rate=spec.sample_rate)
                corpus.append(extract_features(clip, emotion, f"spk{spk}",
                                               spec.feature_config))
                clip_index += 1
    return corpus


# ---------------------------------------------------------------------------
# Labeled WAV directories
# ---------------------------------------------------------------------------

def read_labeled_corpus(root, cfg: FeatureConfig = FeatureConfig(),
                        target_rate: int = 22050) -> list[SpeechFeatures]:
    """Walk ``<root>/<speaker>/<emotion>/<clip>.wav`` in sorted order."""
    root = Path(root)
    if not root.is_dir():
        raise ValueError(f"corpus root {root} is not a directory")
    corpus = []
    for speaker_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for emotion_dir in sorted(p for p in speaker_dir.iterdir() if p.is_dir()):
            label = _check_label(emotion_dir.name)
            for wav in sorted(emotion_dir.glob("*.wav")):
                clip = load_audio(wav, target_rate)
                corpus.append(extract_features(clip, label, speaker_dir.name, cfg))
    if not corpus:
        raise ValueError(f"no WAV clips found under {root}")
    return corpus


# ---------------------------------------------------------------------------
# Feature cache (binary, magic DAISYF1)
# ---------------------------------------------------------------------------

_LABEL_TO_CODE = {label: i for i, label in enumerate(CORPUS_LABELS)}
_CODE_TO_LABEL = dict(enumerate(CORPUS_LABELS))


def save_feature_cache(path, corpus: list[SpeechFeatures]) -> None:
    """One record per clip: header + row-major mel + pitch + energy (float32)."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<I", len(corpus)))
        for feats in corpus:
            spk = feats.speaker.encode("utf-8")
            fh.write(struct.pack("<IIBH", feats.frames, feats.mel.shape[1],
                                 _LABEL_TO_CODE[feats.emotion], len(spk)))
            fh.write(spk)
            fh.write(np.ascontiguousarray(feats.mel, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(feats.pitch, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(feats.energy, dtype="<f4").tobytes())


def load_feature_cache(path) -> list[SpeechFeatures]:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(FEATURE_MAGIC)] != FEATURE_MAGIC:
        raise FormatError(f"{path} is not a feature cache (bad magic)")
    offset = len(FEATURE_MAGIC)
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    corpus = []
    for _ in range(count):
        frames, n_mels, label_code, spk_len = struct.unpack_from("<IIBH", blob, offset)
        offset += struct.calcsize("<IIBH")
        speaker = blob[offset : offset + spk_len].decode("utf-8")
        offset += spk_len
        mel = np.frombuffer(blob, dtype="<f4", count=frames * n_mels, offset=offset)
        offset += 4 * frames * n_mels
        pitch = np.frombuffer(blob, dtype="<f4", count=frames, offset=offset)
        offset += 4 * frames
        energy = np.frombuffer(blob, dtype="<f4", count=frames, offset=offset)
        offset += 4 * frames
        try:
            label = _CODE_TO_LABEL[label_code]
        except KeyError:
            raise FormatError(f"{path}: unknown emotion code {label_code}") from None
        corpus.append(SpeechFeatures(mel=mel.reshape(frames, n_mels).copy(),
                                     pitch=pitch.copy(), energy=energy.copy(),
                                     emotion=label, speaker=speaker))
    if offset != len(blob):
        raise FormatError(f"{path}: trailing bytes after last record")
    return corpus
