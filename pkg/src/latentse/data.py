"""Synthetic desk-scale corpus: harmonic "speech", three noise families,
SNR-controlled mixing, JSON-lines manifests, and dataset loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterator

import numpy as np

from .dsp import AudioClip, SpectrogramComplex, StftConfig, fit_frames, read_wav, stft, write_wav
from .errors import DataError, InvalidInput

SPLITS = ("train", "valid", "test")
NOISE_KINDS = ("white", "pink", "babble")


@dataclass(frozen=True)
class CorpusConfig:
    out_dir: str
    n_train: int
    n_valid: int
    n_test: int
    snr_lo: float = 0.0
    snr_hi: float = 20.0
    snr_choices: tuple[float, ...] | None = None  # discrete alternative to the range
    clip_samples: int = 32640
    sample_rate: int = 16000
    partial_cap_hz: float = 2400.0


@dataclass
class MixtureRecord:
    id: str
    clean_path: str
    noise_path: str
    noisy_path: str
    snr_db: float
    split: str
    seed: int


def measure_snr_db(clean: np.ndarray, noise: np.ndarray) -> float:
    return 10.0 * np.log10(np.mean(clean**2) / np.mean(noise**2))


def synth_speech(rng: np.random.Generator, n_samples: int,
                 sample_rate: int = 16000, partial_cap_hz: float = 2400.0) -> AudioClip:
    """Harmonic tone complex with drifting pitch, formant-shaped partials and
    syllable-rate amplitude modulation.

    Partial phases are integrals of the pitch contour (all zero at onset), so
    the waveform is a deterministic function of its spectral envelope.
    """
    fs = sample_rate
    t = np.arange(n_samples) / fs
    f0_base = rng.uniform(120.0, 240.0)
    drift = rng.uniform(-0.08, 0.08)
    wob_f = rng.uniform(0.6, 2.4, size=2)
    wob_a = rng.uniform(0.01, 0.05, size=2)
    wob_p = rng.uniform(0, 2 * np.pi, size=2)
    f0 = f0_base * (
        1.0
        + drift * t / t[-1]
        + wob_a[0] * np.sin(2 * np.pi * wob_f[0] * t + wob_p[0])
        + wob_a[1] * np.sin(2 * np.pi * wob_f[1] * t + wob_p[1])
    )
    theta = 2 * np.pi * np.cumsum(f0) / fs

    # two fixed formant-like resonances shape the partial amplitudes
    formant_f = np.array([rng.uniform(260, 750), rng.uniform(900, 1900)])
    formant_bw = rng.uniform(90, 220, size=2)
    formant_g = np.array([1.0, rng.uniform(0.4, 0.9)])

    n_partials = max(2, int(partial_cap_hz / (f0_base * (1 + abs(drift)))))
    sig = np.zeros(n_samples)
    for k in range(1, n_partials + 1):
        fk = k * f0
        if fk.max() >= fs / 2:
            break
        env = (formant_g[:, None] * np.exp(
            -((fk[None, :] - formant_f[:, None]) ** 2) / (2 * formant_bw[:, None] ** 2)
        )).sum(axis=0)
        sig += (0.15 + env) / np.sqrt(k) * np.sin(k * theta)

    syl_rate = rng.uniform(2.0, 5.0)
    syl_phase = rng.uniform(0, 2 * np.pi)
    am = 0.55 - 0.45 * np.cos(2 * np.pi * syl_rate * t + syl_phase)
    attack = np.minimum(1.0, t / 0.01)
    sig *= (0.1 + 0.9 * am) * attack
    peak = np.max(np.abs(sig))
    return AudioClip(sig * (0.7 / peak), sample_rate=fs)


def synth_noise(rng: np.random.Generator, kind: str, n_samples: int,
                sample_rate: int = 16000) -> AudioClip:
    """White, pink (1/f power), or babble-like (modulated band-limited) noise."""
    fs = sample_rate
    if kind == "white":
        sig = rng.standard_normal(n_samples)
    elif kind == "pink":
        spec = np.fft.rfft(rng.standard_normal(n_samples))
        f = np.fft.rfftfreq(n_samples, d=1 / fs)
        f[0] = f[1]
        sig = np.fft.irfft(spec / np.sqrt(f), n=n_samples)
    elif kind == "babble":
        spec = np.fft.rfft(rng.standard_normal(n_samples))
        f = np.fft.rfftfreq(n_samples, d=1 / fs)
        shape = np.zeros_like(f)
        for _ in range(rng.integers(3, 6)):
            fc = rng.uniform(300, 3000)
            bw = rng.uniform(150, 500)
            shape += np.exp(-((f - fc) ** 2) / (2 * bw**2))
        sig = np.fft.irfft(spec * shape, n=n_samples)
        t = np.arange(n_samples) / fs
        mod_rate = rng.uniform(3.0, 8.0)
        mod_phase = rng.uniform(0, 2 * np.pi)
        sig *= 0.65 - 0.35 * np.cos(2 * np.pi * mod_rate * t + mod_phase)
    else:
        raise InvalidInput(f"unknown noise kind {kind!r}")
    return AudioClip(sig / np.max(np.abs(sig)), sample_rate=fs)


def _match_length(noise: np.ndarray, n: int) -> np.ndarray:
    if len(noise) >= n:
        return noise[:n]
    reps = int(np.ceil(n / len(noise)))
    return np.tile(noise, reps)[:n]


def mix_components(clean: AudioClip, noise: AudioClip, snr_db: float
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled (clean, noise, mixture) triple hitting snr_db exactly.

    The mixture is peak-normalized to <= 0.99 with the same gain applied to
    both components, so the component power ratio is preserved.
    """
    c = clean.samples
    n = _match_length(noise.samples, len(c))
    p_clean = np.mean(c**2)
    p_noise = np.mean(n**2)
    if p_clean <= 0:
        raise InvalidInput("clean signal is silent")
    if p_noise <= 0:
        raise InvalidInput("noise signal is silent")
    g = np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    mix = c + g * n
    peak = np.max(np.abs(mix))
    k = 0.99 / peak if peak > 0.99 else 1.0
    return k * c, k * g * n, k * mix


def mix_at_snr(clean: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Mixture of clean and noise at the requested SNR, peak <= 0.99."""
    _, _, mix = mix_components(clean, noise, snr_db)
    return AudioClip(mix, sample_rate=clean.sample_rate)


def _record_seed(seed: int, split_idx: int, idx: int) -> int:
    return (seed * 1_000_003 + split_idx * 100_003 + idx) % (2**63)


def synth_corpus(config: CorpusConfig, seed: int) -> list[MixtureRecord]:
    """Write a fully deterministic noisy/clean parallel corpus plus manifest.

    Every record's randomness derives from its own seed, so synthesis is a
    pure function of (config, seed).
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    counts = {"train": config.n_train, "valid": config.n_valid, "test": config.n_test}
    for split_idx, split in enumerate(SPLITS):
        for i in range(counts[split]):
            rec_seed = _record_seed(seed, split_idx, i)
            rng = np.random.default_rng(rec_seed)
            clean = synth_speech(rng, config.clip_samples, config.sample_rate,
                                 config.partial_cap_hz)
            kind = NOISE_KINDS[int(rng.integers(0, len(NOISE_KINDS)))]
            noise = synth_noise(rng, kind, config.clip_samples, config.sample_rate)
            # stand-in for looping a shorter noise file from a random offset
            offset = int(rng.integers(0, config.clip_samples))
            noise = AudioClip(np.roll(noise.samples, offset), noise.sample_rate)
            if config.snr_choices is not None:
                snr_db = float(config.snr_choices[int(rng.integers(0, len(config.snr_choices)))])
            else:
                snr_db = float(rng.uniform(config.snr_lo, config.snr_hi))
            c, n, mix = mix_components(clean, noise, snr_db)

            rec_id = f"{split}_{i:04d}"
            paths = {}
            for tag, sig in (("clean", c), ("noise", n), ("noisy", mix)):
                rel = f"{split}/{rec_id}_{tag}.wav"
                try:
                    write_wav(out / rel, AudioClip(sig, config.sample_rate))
                except OSError as exc:
                    raise DataError(f"failed writing {out / rel}: {exc}") from exc
                paths[tag] = rel
            records.append(MixtureRecord(
                id=rec_id, clean_path=paths["clean"], noise_path=paths["noise"],
                noisy_path=paths["noisy"], snr_db=snr_db, split=split, seed=rec_seed,
            ))
    manifest = out / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(asdict(rec)) + "\n")
    return records


def synth_clean_clips(n: int, clip_samples: int, seed: int,
                      sample_rate: int = 16000,
                      partial_cap_hz: float = 2400.0) -> list[AudioClip]:
    """Clean-only clips from a seed stream disjoint from any mixture corpus."""
    clips = []
    for i in range(n):
        rng = np.random.default_rng(_record_seed(seed, 7, i))
        clips.append(synth_speech(rng, clip_samples, sample_rate, partial_cap_hz))
    return clips


def load_manifest(path: str | Path) -> list[MixtureRecord]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest {path} does not exist")
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                records.append(MixtureRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise DataError(f"{path}:{line_no + 1}: bad manifest line ({exc})") from exc
    return records


def _read_record_wav(manifest_dir: Path, rel: str, rec_id: str) -> AudioClip:
    full = manifest_dir / rel
    if not full.exists():
        raise DataError(f"record {rec_id}: missing file {full}")
    try:
        return read_wav(full)
    except InvalidInput as exc:
        raise DataError(f"record {rec_id}: {exc}") from exc


def load_dataset(
    manifest_path: str | Path,
    split: str,
    stft_cfg: StftConfig,
    target_frames: int,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
) -> Iterator[tuple[SpectrogramComplex, AudioClip, SpectrogramComplex]]:
    """Yield (clean spectrogram, noisy waveform, noisy spectrogram) triples.

    Spectrograms are fit to target_frames; iteration follows manifest order.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    for rec in load_manifest(manifest_path):
        if rec.split != split:
            continue
        clean = _read_record_wav(base, rec.clean_path, rec.id)
        noisy = _read_record_wav(base, rec.noisy_path, rec.id)
        clean_spec = fit_frames(stft(clean, stft_cfg), target_frames, mode=mode, rng=rng)
        noisy_spec = fit_frames(stft(noisy, stft_cfg), target_frames, mode=mode, rng=rng)
        yield clean_spec, noisy, noisy_spec
