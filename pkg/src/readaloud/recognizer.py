"""Closed-set utterance classification by normalized cross-correlation.

The classifier never tries to transcribe. Each attempt is scored only against
the handful of items currently on screen: templates and the utterance are
reduced to short feature sequences, and the decision is the candidate whose
template correlates best with the utterance over a window of time shifts,
subject to a rejection threshold.

Feature layout per 25 ms frame (10 ms hop), D = 10:

    [0]    log(1 + sum(s^2))            frame log energy
    [1]    zero-crossing rate            sign changes / (frame_len - 1)
    [2:10] log(1 + E_band)               8 equal-width band energies, 0-8 kHz,
                                         from a Hann-windowed magnitude spectrum

After stacking, every dimension is z-normalized across frames; a dimension
with zero variance is set to all-zero rather than dropped, so D stays fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import SAMPLE_RATE, AudioClip, loudness_dbfs
from .errors import ReadAloudError

FRAME_MS = 25
HOP_MS = 10
FRAME_LEN = SAMPLE_RATE * FRAME_MS // 1000   # 400 samples
HOP_LEN = SAMPLE_RATE * HOP_MS // 1000       # 160 samples
FEATURE_DIM = 10
N_SPECTRAL_BANDS = 8
BAND_WIDTH_HZ = 1000.0

MIN_OVERLAP_FRAMES = 10
SHIFT_SLACK_FRAMES = 10
DEFAULT_REJECT_THRESHOLD = 0.55


class RecognizerError(ReadAloudError):
    pass


class TooShortError(RecognizerError):
    """Clip shorter than one analysis frame."""


class NotNormalizedError(RecognizerError):
    pass


class EmptyCandidateSetError(RecognizerError):
    pass


@dataclass(frozen=True)
class FeatureSequence:
    """T x D matrix of per-frame features."""

    frames: np.ndarray
    frame_ms: int = FRAME_MS
    hop_ms: int = HOP_MS
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise RecognizerError(f"frames must be a (T>=1, D) matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise RecognizerError("feature values must all be finite")

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dims(self) -> int:
        return int(self.frames.shape[1])

    def to_payload(self) -> dict:
        return {
            "frame_ms": self.frame_ms,
            "hop_ms": self.hop_ms,
            "dims": self.dims,
            "normalized": self.normalized,
            "frames": [[float(v) for v in row] for row in self.frames],
        }

    @staticmethod
    def from_payload(payload: dict) -> "FeatureSequence":
        try:
            frames = np.asarray(payload["frames"], dtype=np.float64)
            seq = FeatureSequence(
                frames=frames,
                frame_ms=int(payload["frame_ms"]),
                hop_ms=int(payload["hop_ms"]),
                normalized=bool(payload.get("normalized", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RecognizerError(f"malformed feature payload: {exc}") from exc
        if seq.dims != int(payload.get("dims", seq.dims)):
            raise RecognizerError("dims field disagrees with frame width")
        return seq


@dataclass(frozen=True)
class Template:
    """Reference features for one bank item (normalized)."""

    item_id: str
    features: FeatureSequence

    def __post_init__(self):
        if not self.features.normalized:
            raise NotNormalizedError(f"template {self.item_id!r} must hold normalized features")


@dataclass(frozen=True)
class RecognitionResult:
    item_id: str | None            # accepted item, or None when rejected
    best_score: float
    per_candidate_scores: dict[str, float]
    loudness_dbfs: float | None = None

    @property
    def accepted(self) -> bool:
        return self.item_id is not None

    def to_payload(self) -> dict:
        return {
            "decision": "accepted" if self.accepted else "rejected",
            "item_id": self.item_id,
            "best_score": self.best_score,
            "per_candidate_scores": dict(sorted(self.per_candidate_scores.items())),
            "loudness_dbfs": self.loudness_dbfs,
        }


def znormalize(frames: np.ndarray) -> np.ndarray:
    """Per-dimension z-normalization across frames; constant dimensions to zero."""
    frames = np.asarray(frames, dtype=np.float64)
    mean = frames.mean(axis=0)
    std = frames.std(axis=0)
    out = np.zeros_like(frames)
    live = std > 0.0
    out[:, live] = (frames[:, live] - mean[live]) / std[live]
    return out


def extract_features(clip: AudioClip) -> FeatureSequence:
    """Frame a clip at 25 ms / 10 ms and emit the normalized 10-dim features."""
    samples = clip.samples.astype(np.float64)
    n = samples.size
    if n < FRAME_LEN:
        raise TooShortError(f"need at least {FRAME_LEN} samples for one frame, got {n}")
    n_frames = 1 + (n - FRAME_LEN) // HOP_LEN
    windows = np.lib.stride_tricks.sliding_window_view(samples, FRAME_LEN)[::HOP_LEN][:n_frames]

    log_energy = np.log1p(np.sum(np.square(windows), axis=1))

    signs = windows[:, :-1] * windows[:, 1:]
    zcr = np.count_nonzero(signs < 0, axis=1) / (FRAME_LEN - 1)

    hann = np.hanning(FRAME_LEN)
    spectrum = np.abs(np.fft.rfft(windows * hann, axis=1))
    power = np.square(spectrum)
    freqs = np.fft.rfftfreq(FRAME_LEN, d=1.0 / SAMPLE_RATE)
    band_of_bin = np.minimum((freqs // BAND_WIDTH_HZ).astype(int), N_SPECTRAL_BANDS - 1)
    band_energy = np.zeros((n_frames, N_SPECTRAL_BANDS))
    for b in range(N_SPECTRAL_BANDS):
        band_energy[:, b] = power[:, band_of_bin == b].sum(axis=1)
    log_bands = np.log1p(band_energy)

    raw = np.column_stack([log_energy, zcr, log_bands])
    return FeatureSequence(frames=znormalize(raw), normalized=True)


def xcorr_score(x: FeatureSequence, y: FeatureSequence, max_shift: int) -> float:
    """Best normalized cross-correlation of two feature sequences over shifts.

    For each shift s in [-max_shift, +max_shift] the overlapping frames of x
    and y (x[t] against y[t+s]) are correlated:

        r(s) = sum_td x[t,d] * y[t+s,d] / (||x_overlap|| * ||y_overlap||)

    Shifts whose overlap is shorter than min(10, min(Tx, Ty)) frames are
    skipped; a zero overlap norm scores 0. Returns max over admissible r(s),
    always in [-1, 1]. Symmetric in x and y.
    """
    if not x.normalized or not y.normalized:
        raise NotNormalizedError("xcorr_score requires normalized feature sequences")
    if max_shift < 0:
        raise RecognizerError(f"max_shift must be >= 0, got {max_shift}")
    xf, yf = x.frames, y.frames
    tx, ty = len(x), len(y)
    min_overlap = min(MIN_OVERLAP_FRAMES, tx, ty)
    best = -1.0
    seen = False
    for s in range(-max_shift, max_shift + 1):
        t0 = max(0, -s)
        t1 = min(tx, ty - s)
        if t1 - t0 < min_overlap:
            continue
        xo = xf[t0:t1]
        yo = yf[t0 + s:t1 + s]
        nx = float(np.linalg.norm(xo))
        ny = float(np.linalg.norm(yo))
        r = 0.0 if nx == 0.0 or ny == 0.0 else float(np.vdot(xo, yo)) / (nx * ny)
        if not seen or r > best:
            best, seen = r, True
    if not seen:
        # s=0 always has overlap min(tx, ty) >= min_overlap, so this is unreachable
        raise RecognizerError("no admissible shift")
    return best


def classify(
    utterance: FeatureSequence,
    candidates: "list[Template] | tuple[Template, ...] | set[Template] | frozenset[Template]",
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD,
) -> RecognitionResult:
    """Score an utterance against each candidate template and pick or reject.

    The shift window per candidate is the length difference plus a fixed
    slack. Ties on the best score go to the lexicographically smallest
    item_id; a best score below reject_threshold yields a rejection.
    """
    templates = {tpl.item_id: tpl for tpl in candidates}
    if not templates:
        raise EmptyCandidateSetError("candidate set must be non-empty")
    if not utterance.normalized:
        raise NotNormalizedError("utterance features must be normalized")

    scores: dict[str, float] = {}
    for item_id in sorted(templates):
        tpl = templates[item_id]
        max_shift = abs(len(utterance) - len(tpl.features)) + SHIFT_SLACK_FRAMES
        scores[item_id] = xcorr_score(utterance, tpl.features, max_shift)

    best_id = min(scores, key=lambda item_id: (-scores[item_id], item_id))
    best = scores[best_id]
    return RecognitionResult(
        item_id=best_id if best >= reject_threshold else None,
        best_score=best,
        per_candidate_scores=scores,
    )


def classify_clip(
    clip: AudioClip,
    candidates,
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD,
) -> RecognitionResult:
    """classify() on a raw clip, with loudness attached to the result."""
    result = classify(extract_features(clip), candidates, reject_threshold)
    return RecognitionResult(
        item_id=result.item_id,
        best_score=result.best_score,
        per_candidate_scores=result.per_candidate_scores,
        loudness_dbfs=loudness_dbfs(clip),
    )


def build_template(item_id: str, clip: AudioClip) -> Template:
    return Template(item_id=item_id, features=extract_features(clip))
