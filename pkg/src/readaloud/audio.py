"""16 kHz mono PCM16 audio: WAV I/O, loudness, and a synthetic utterance source.

There is no recorded reference corpus, so tests and the simulator speak
through ``synth_utterance``: a deterministic pseudo-voice built from three
sine tones whose frequencies are derived from the item id, plus seeded
Gaussian noise scaled relative to the signal.
"""

from __future__ import annotations

import hashlib
import io
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ReadAloudError

SAMPLE_RATE = 16000
FULL_SCALE = 32768.0
LOUDNESS_FLOOR_DBFS = -96.0

SYNTH_DURATION_S = 0.5
_SYNTH_PEAK = 0.35 * 32767.0


class AudioError(ReadAloudError):
    pass


class FormatError(AudioError):
    """WAV input that is not mono 16 kHz PCM16."""


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono clip of signed 16-bit samples at 16 kHz."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.int16)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if self.sample_rate != SAMPLE_RATE:
            raise FormatError(f"sample_rate must be {SAMPLE_RATE}, got {self.sample_rate}")
        if arr.ndim != 1 or arr.size == 0:
            raise FormatError("samples must be a non-empty 1-D array")

    def __len__(self) -> int:
        return int(self.samples.size)


def read_wav(source: str | Path | bytes) -> AudioClip:
    """Read a WAV file; anything but mono 16 kHz PCM16 is rejected."""
    if isinstance(source, bytes):
        fh = io.BytesIO(source)
    else:
        fh = open(source, "rb")
    try:
        try:
            with wave.open(fh, "rb") as wf:
                if wf.getnchannels() != 1:
                    raise FormatError(f"expected mono audio, got {wf.getnchannels()} channels")
                if wf.getsampwidth() != 2:
                    raise FormatError(f"expected 16-bit samples, got {8 * wf.getsampwidth()}-bit")
                if wf.getframerate() != SAMPLE_RATE:
                    raise FormatError(f"expected {SAMPLE_RATE} Hz, got {wf.getframerate()} Hz")
                raw = wf.readframes(wf.getnframes())
        except wave.Error as exc:
            raise FormatError(f"not a readable WAV stream: {exc}") from exc
    finally:
        fh.close()
    if not raw:
        raise FormatError("WAV stream contains no samples")
    return AudioClip(samples=np.frombuffer(raw, dtype="<i2"))


def write_wav(path: str | Path, clip: AudioClip) -> None:
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(clip.samples.astype("<i2").tobytes())


def wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(clip.samples.astype("<i2").tobytes())
    return buf.getvalue()


def loudness_dbfs(clip: AudioClip) -> float:
    """RMS level in dB relative to full scale, clamped to -96 dBFS for silence."""
    rms = float(np.sqrt(np.mean(np.square(clip.samples.astype(np.float64)))))
    if rms <= 0.0:
        return LOUDNESS_FLOOR_DBFS
    return max(LOUDNESS_FLOOR_DBFS, 20.0 * math.log10(rms / FULL_SCALE))


def _item_tones(item_id: str) -> list[tuple[float, float, float, float, float, float]]:
    # (start_freq, end_freq, amplitude, phase, start_frac, width_frac) per
    # tone, keyed off a stable hash of the id. Each tone glides upward through
    # its own hash-chosen frequency range while rising and falling over its
    # own stretch of the clip, so every item traces a distinct band-by-band
    # energy trajectory over time. (A stationary sum of fixed sines would put
    # energy into at most three of the analysis bands and carry no temporal
    # shape for a template matcher to hold on to.)
    digest = hashlib.sha256(item_id.encode("utf-8")).digest()
    tones = []
    for i in range(3):
        chunk = digest[i * 8:(i + 1) * 8]
        value = int.from_bytes(chunk, "big")
        region_lo = 150.0 + i * 2550.0
        region_hi = region_lo + 2550.0
        f_a = region_lo + (value % 400)
        f_b = region_hi - ((value >> 16) % 400)
        if (value >> 40) & 1:
            f_a, f_b = f_b, f_a          # hash bit picks glide direction
        phase = 2.0 * math.pi * ((value >> 12) % 997) / 997.0
        # staggered onsets keep the union of envelopes covering the clip
        start_frac = 0.15 * i + 0.3 * ((value >> 24) % 256) / 256.0
        width_frac = 0.5 + 0.3 * ((value >> 32) % 256) / 256.0
        amp = (1.0, 0.85, 0.7)[i]
        tones.append((f_a, f_b, amp, phase, start_frac, width_frac))
    return tones


def synth_seed(item_id: str, seed: int) -> list[int]:
    digest = hashlib.sha256(item_id.encode("utf-8")).digest()
    return [seed & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "big")]


def synth_utterance(item_id: str, seed: int, noise_sigma: float = 0.0) -> AudioClip:
    """Deterministic 0.5 s pseudo-utterance for an item.

    The clean signal depends only on item_id; noise_sigma adds Gaussian noise
    with standard deviation noise_sigma x signal RMS, drawn from a generator
    seeded by (item_id, seed). Identical inputs give identical samples.
    """
    if noise_sigma < 0:
        raise AudioError(f"noise_sigma must be >= 0, got {noise_sigma}")
    n = int(SYNTH_DURATION_S * SAMPLE_RATE)
    t = np.arange(n, dtype=np.float64) / SAMPLE_RATE
    signal = np.zeros(n, dtype=np.float64)
    for f_start, f_end, amp, phase, start_frac, width_frac in _item_tones(item_id):
        u = np.clip((t / SYNTH_DURATION_S - start_frac) / width_frac, 0.0, 1.0)
        envelope = np.sin(np.pi * u) ** 2
        # linear glide: instantaneous frequency runs f_start -> f_end
        sweep = (f_end - f_start) / (2.0 * SYNTH_DURATION_S)
        signal += amp * envelope * np.sin(2.0 * math.pi * (f_start + sweep * t) * t + phase)
    signal *= _SYNTH_PEAK / np.max(np.abs(signal))
    if noise_sigma > 0:
        rms = float(np.sqrt(np.mean(np.square(signal))))
        rng = np.random.default_rng(synth_seed(item_id, seed))
        signal = signal + rng.normal(0.0, noise_sigma * rms, n)
    samples = np.clip(np.rint(signal), -32768, 32767).astype(np.int16)
    return AudioClip(samples=samples)
