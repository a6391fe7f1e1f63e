"""Time-frequency analysis: STFT, weighted overlap-add ISTFT, frame fitting, WAV I/O.

Conventions: centered framing with reflect padding, periodic Hann analysis
window, per-utterance max-magnitude normalization of the complex bins
(stored in ``norm_scale`` so the inverse is exact).
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInput

_NOLA_EPS = 1e-10


def hann_window(n_fft: int) -> np.ndarray:
    """Periodic Hann window of length n_fft."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)


@dataclass(frozen=True)
class StftConfig:
    n_fft: int
    hop: int
    window: str = "hann"

    def __post_init__(self):
        if self.n_fft <= 0 or self.hop <= 0:
            raise InvalidInput(f"n_fft and hop must be positive, got {self.n_fft}, {self.hop}")
        if self.hop > self.n_fft:
            raise InvalidInput(f"hop {self.hop} exceeds n_fft {self.n_fft}")
        if self.window != "hann":
            raise InvalidInput(f"unsupported window kind {self.window!r}")
        # NOLA: the squared-window overlap sum must be positive everywhere,
        # otherwise overlap-add inversion is undefined.
        w2 = hann_window(self.n_fft) ** 2
        for r in range(self.hop):
            if w2[r :: self.hop].sum() <= _NOLA_EPS:
                raise InvalidInput(
                    f"hop {self.hop} with Hann window of {self.n_fft} violates "
                    "the overlap-add reconstruction condition"
                )

    @property
    def freq_bins(self) -> int:
        return self.n_fft // 2 + 1


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InvalidInput(f"expected mono 1-D samples, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise InvalidInput(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInput("samples contain NaN or Inf")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class SpectrogramComplex:
    """Complex F x T spectrogram plus the metadata needed to invert it.

    ``norm_scale`` is the max bin magnitude divided out at analysis time;
    ``n_samples`` the analyzed waveform length; ``orig_frames`` the frame
    count before :func:`fit_frames` padded or cropped it.
    """

    bins: np.ndarray
    config: StftConfig
    norm_scale: float
    n_samples: int
    orig_frames: int | None = field(default=None)

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        if self.bins.ndim != 2 or self.bins.shape[0] != self.config.freq_bins:
            raise InvalidInput(
                f"bins must be F x T with F={self.config.freq_bins}, got {self.bins.shape}"
            )
        if not np.all(np.isfinite(self.bins)):
            raise InvalidInput("spectrogram bins contain NaN or Inf")
        if self.norm_scale <= 0:
            raise InvalidInput(f"norm_scale must be positive, got {self.norm_scale}")

    @property
    def frames(self) -> int:
        return self.bins.shape[1]

    @property
    def raw_bins(self) -> np.ndarray:
        """Bins with the normalization undone."""
        return self.bins * self.norm_scale

    def as_image(self) -> np.ndarray:
        """Real/imaginary channels stacked as a (2, F, T) float array."""
        return np.stack([self.bins.real, self.bins.imag]).astype(np.float64)

    def with_image(self, image: np.ndarray) -> "SpectrogramComplex":
        """Copy of this spectrogram with bins replaced from a (2, F, T) image."""
        if image.shape != (2, self.config.freq_bins, self.frames):
            raise InvalidInput(
                f"image shape {image.shape} does not match (2, {self.config.freq_bins}, {self.frames})"
            )
        return replace(self, bins=image[0] + 1j * image[1])


def frame_count(n_samples: int, cfg: StftConfig) -> int:
    """Number of frames produced by centered analysis of n_samples."""
    padded = n_samples + 2 * (cfg.n_fft // 2)
    return (padded - cfg.n_fft) // cfg.hop + 1


def stft(audio: AudioClip, cfg: StftConfig) -> SpectrogramComplex:
    """Centered STFT with reflect padding and max-magnitude normalization."""
    x = audio.samples
    if len(x) == 0:
        raise InvalidInput("cannot analyze empty audio")
    pad = cfg.n_fft // 2
    if len(x) <= pad:
        raise InvalidInput(f"audio of {len(x)} samples is shorter than n_fft/2={pad}")
    xp = np.pad(x, pad, mode="reflect")
    n_frames = frame_count(len(x), cfg)
    idx = np.arange(cfg.n_fft)[None, :] + cfg.hop * np.arange(n_frames)[:, None]
    frames = xp[idx] * hann_window(cfg.n_fft)[None, :]
    bins = np.fft.rfft(frames, n=cfg.n_fft, axis=1).T  # (F, T)
    peak = float(np.max(np.abs(bins))) if bins.size else 0.0
    norm_scale = peak if peak > 0.0 else 1.0
    return SpectrogramComplex(
        bins=bins / norm_scale, config=cfg, norm_scale=norm_scale, n_samples=len(x)
    )


def istft(spec: SpectrogramComplex) -> AudioClip:
    """Weighted overlap-add inverse of :func:`stft`.

    Exact (to float precision) for unmodified spectrograms; least-squares
    synthesis for modified ones.
    """
    cfg = spec.config
    n_frames = spec.frames
    if n_frames < 1:
        raise InvalidInput("spectrogram has no frames")
    w = hann_window(cfg.n_fft)
    frames = np.fft.irfft(spec.raw_bins.T, n=cfg.n_fft, axis=1)  # (T, n_fft)
    total = (n_frames - 1) * cfg.hop + cfg.n_fft
    out = np.zeros(total)
    wsum = np.zeros(total)
    for k in range(n_frames):
        lo = k * cfg.hop
        out[lo : lo + cfg.n_fft] += frames[k] * w
        wsum[lo : lo + cfg.n_fft] += w * w
    nz = wsum > _NOLA_EPS
    out[nz] /= wsum[nz]
    out[~nz] = 0.0
    pad = cfg.n_fft // 2
    out = out[pad : pad + spec.n_samples]
    if len(out) < spec.n_samples:
        out = np.pad(out, (0, spec.n_samples - len(out)))
    return AudioClip(out, sample_rate=16000)


def fit_frames(
    spec: SpectrogramComplex,
    target_frames: int,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
) -> SpectrogramComplex:
    """Crop or right-pad a spectrogram to exactly target_frames frames.

    Cropping is left-aligned for ``mode="infer"`` and randomly positioned for
    ``mode="train"`` (requires ``rng``). The pre-fit frame count is recorded
    in ``orig_frames`` so inference output can be un-padded.
    """
    if target_frames <= 0:
        raise InvalidInput(f"target_frames must be positive, got {target_frames}")
    if mode not in ("infer", "train"):
        raise InvalidInput(f"unknown fit mode {mode!r}")
    t = spec.frames
    orig = spec.orig_frames if spec.orig_frames is not None else t
    if t == target_frames:
        return replace(spec, orig_frames=orig)
    if t > target_frames:
        if mode == "train":
            if rng is None:
                raise InvalidInput("train-mode cropping needs an rng")
            lo = int(rng.integers(0, t - target_frames + 1))
        else:
            lo = 0
        bins = spec.bins[:, lo : lo + target_frames]
    else:
        bins = np.pad(spec.bins, ((0, 0), (0, target_frames - t)))
    return replace(spec, bins=bins, orig_frames=orig)


def restore_frames(spec: SpectrogramComplex) -> SpectrogramComplex:
    """Undo the padding applied by :func:`fit_frames` (cropped content stays lost)."""
    if spec.orig_frames is None or spec.orig_frames == spec.frames:
        return spec
    if spec.orig_frames < spec.frames:
        bins = spec.bins[:, : spec.orig_frames]
    else:
        bins = np.pad(spec.bins, ((0, 0), (0, spec.orig_frames - spec.frames)))
    return replace(spec, bins=bins, orig_frames=spec.orig_frames)


def read_wav(path: str | Path) -> AudioClip:
    """Read a mono 16-bit 16 kHz PCM WAV file; anything else is rejected."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise InvalidInput(f"{path}: not a readable WAV file ({exc})") from exc
    if channels != 1:
        raise InvalidInput(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise InvalidInput(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    if rate != 16000:
        raise InvalidInput(f"{path}: expected 16 kHz sample rate, got {rate}")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(samples, sample_rate=rate)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    """Write a clip as mono 16-bit PCM WAV (values clipped to [-1, 1))."""
    if clip.sample_rate != 16000:
        raise InvalidInput(f"only 16 kHz output is supported, got {clip.sample_rate}")
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(pcm.tobytes())
