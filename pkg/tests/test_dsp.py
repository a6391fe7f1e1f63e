import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latentse import dsp
from latentse.errors import InvalidInput

CFG_FULL = dsp.StftConfig(n_fft=510, hop=128)
CFG_DESK = dsp.StftConfig(n_fft=126, hop=63)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def reference_stft_raw(x, cfg):
    """Frame-by-frame STFT via an explicit DFT matrix (independent of the fast path)."""
    pad = cfg.n_fft // 2
    xp = np.pad(x, pad, mode="reflect")
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(cfg.n_fft) / cfg.n_fft)
    n_frames = (len(xp) - cfg.n_fft) // cfg.hop + 1
    k = np.arange(cfg.n_fft // 2 + 1)[:, None]
    n = np.arange(cfg.n_fft)[None, :]
    dft = np.exp(-2j * np.pi * k * n / cfg.n_fft)
    cols = []
    for m in range(n_frames):
        frame = xp[m * cfg.hop : m * cfg.hop + cfg.n_fft] * w
        cols.append(dft @ frame)
    return np.stack(cols, axis=1)


class TestStft:
    def test_zero_clip_gives_zero_spectrogram_and_unit_scale(self):
        clip = dsp.AudioClip(np.zeros(16000))
        spec = dsp.stft(clip, CFG_FULL)
        assert spec.norm_scale == 1.0
        assert np.all(spec.bins == 0)

    def test_frame_count_example(self):
        clip = dsp.AudioClip(np.zeros(32640))
        assert dsp.stft(clip, CFG_FULL).frames == 256

    def test_matches_reference_frame_by_frame_dft(self, rng):
        x = rng.standard_normal(2000) * 0.3
        cfg = dsp.StftConfig(n_fft=64, hop=16)
        spec = dsp.stft(dsp.AudioClip(x), cfg)
        ref = reference_stft_raw(x, cfg)
        assert spec.bins.shape == ref.shape
        assert rel_l2(spec.raw_bins, ref) < 1e-12

    def test_frame_count_matches_reference_for_varied_lengths(self, rng):
        for n in [1000, 1023, 1024, 4097, 32640]:
            x = rng.standard_normal(n)
            got = dsp.stft(dsp.AudioClip(x), CFG_DESK).frames
            assert got == reference_stft_raw(x, CFG_DESK).shape[1]

    def test_bin_center_sinusoid_concentrates_energy(self):
        cfg = dsp.StftConfig(n_fft=256, hop=64)
        fs = 16000
        bin_idx = 20
        f = bin_idx * fs / cfg.n_fft
        t = np.arange(4 * cfg.n_fft) / fs
        spec = dsp.stft(dsp.AudioClip(0.5 * np.cos(2 * np.pi * f * t)), cfg)
        power = np.abs(spec.bins) ** 2
        # interior frames only: boundary reflection smears the edges
        interior = range(3, spec.frames - 3)
        for m in interior:
            col = power[:, m]
            assert np.argmax(col) == bin_idx
            # a Hann window spreads a bin-centered tone over three bins
            # (amplitude ratio 1:2:1), which holds >= 99% of frame energy
            neighborhood = col[bin_idx - 1 : bin_idx + 2].sum()
            assert neighborhood >= 0.99 * col.sum()

    def test_linearity_on_raw_bins(self, rng):
        x = rng.standard_normal(3000) * 0.2
        a = 0.37
        s1 = dsp.stft(dsp.AudioClip(x), CFG_DESK)
        s2 = dsp.stft(dsp.AudioClip(a * x), CFG_DESK)
        assert rel_l2(s2.raw_bins, a * s1.raw_bins) < 1e-12

    def test_parseval_frame_energy_agreement(self, rng):
        cfg = dsp.StftConfig(n_fft=64, hop=16)
        x = rng.standard_normal(1500)
        spec = dsp.stft(dsp.AudioClip(x), cfg)
        pad = cfg.n_fft // 2
        xp = np.pad(x, pad, mode="reflect")
        w = dsp.hann_window(cfg.n_fft)
        for m in range(spec.frames):
            frame = xp[m * cfg.hop : m * cfg.hop + cfg.n_fft] * w
            col = spec.raw_bins[:, m]
            spec_energy = (np.abs(col[0]) ** 2 + np.abs(col[-1]) ** 2
                           + 2 * np.sum(np.abs(col[1:-1]) ** 2)) / cfg.n_fft
            assert abs(spec_energy - np.sum(frame**2)) <= 1e-6 * max(np.sum(frame**2), 1e-12)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(InvalidInput):
            dsp.stft(dsp.AudioClip(np.zeros(0)), CFG_DESK)
        with pytest.raises(InvalidInput):
            dsp.AudioClip(np.array([0.0, np.nan]))

    def test_rejects_bad_configs(self):
        with pytest.raises(InvalidInput):
            dsp.StftConfig(n_fft=64, hop=65)
        with pytest.raises(InvalidInput):
            dsp.StftConfig(n_fft=64, hop=0)
        with pytest.raises(InvalidInput):
            # hop == n_fft: Hann overlap-add sum has zeros
            dsp.StftConfig(n_fft=64, hop=64)


class TestIstft:
    @given(st.integers(min_value=300, max_value=5000), st.integers(min_value=0, max_value=2**32 - 1))
    def test_roundtrip(self, n, seed):
        x = np.random.default_rng(seed).uniform(-1, 1, n)
        y = dsp.istft(dsp.stft(dsp.AudioClip(x), CFG_DESK))
        assert len(y) == n
        assert rel_l2(y.samples, x) < 1e-6

    def test_roundtrip_full_scale(self, rng):
        x = rng.uniform(-1, 1, 32640)
        y = dsp.istft(dsp.stft(dsp.AudioClip(x), CFG_FULL))
        assert rel_l2(y.samples, x) < 1e-6

    def test_zero_spectrogram_gives_zero_audio(self):
        spec = dsp.stft(dsp.AudioClip(np.zeros(2000)), CFG_DESK)
        assert np.all(dsp.istft(spec).samples == 0)

    def test_doubling_bins_doubles_output(self, rng):
        x = rng.uniform(-0.4, 0.4, 2000)
        spec = dsp.stft(dsp.AudioClip(x), CFG_DESK)
        doubled = dsp.SpectrogramComplex(
            bins=spec.bins * 2, config=spec.config,
            norm_scale=spec.norm_scale, n_samples=spec.n_samples,
        )
        assert rel_l2(dsp.istft(doubled).samples, 2 * dsp.istft(spec).samples) < 1e-12


class TestFitFrames:
    def _spec(self, frames):
        bins = np.arange(64 * frames, dtype=float).reshape(64, frames) + 0j
        return dsp.SpectrogramComplex(
            bins=bins, config=CFG_DESK, norm_scale=1.0, n_samples=frames * 63
        )

    def test_inference_crop_is_left_aligned(self):
        out = dsp.fit_frames(self._spec(300), 256, mode="infer")
        assert out.frames == 256
        assert out.orig_frames == 300
        assert np.array_equal(out.bins, self._spec(300).bins[:, :256])

    def test_pad_appends_zero_frames(self):
        out = dsp.fit_frames(self._spec(200), 256)
        assert out.frames == 256
        assert np.all(out.bins[:, 200:] == 0)
        assert np.array_equal(out.bins[:, :200], self._spec(200).bins)

    def test_exact_size_is_identity(self):
        src = self._spec(256)
        out = dsp.fit_frames(src, 256)
        assert np.array_equal(out.bins, src.bins)
        assert out.orig_frames == 256

    def test_train_crop_uses_rng_and_stays_in_range(self):
        src = self._spec(300)
        rng = np.random.default_rng(7)
        out = dsp.fit_frames(src, 256, mode="train", rng=rng)
        assert out.frames == 256
        first_col = out.bins[:, 0]
        offsets = [c for c in range(45) if np.array_equal(src.bins[:, c], first_col)]
        assert len(offsets) == 1

    def test_restore_after_pad_and_crop(self):
        padded = dsp.fit_frames(self._spec(200), 256)
        assert dsp.restore_frames(padded).frames == 200
        cropped = dsp.fit_frames(self._spec(300), 256)
        assert dsp.restore_frames(cropped).frames == 300


class TestWavIo:
    def test_roundtrip_is_lossless_at_16bit(self, tmp_path, rng):
        x = np.round(rng.uniform(-0.8, 0.8, 5000) * 32768) / 32768
        dsp.write_wav(tmp_path / "a.wav", dsp.AudioClip(x))
        back = dsp.read_wav(tmp_path / "a.wav")
        assert np.allclose(back.samples, x, atol=1e-12)

    def test_rejects_wrong_rate_and_channels(self, tmp_path):
        import wave as wave_mod

        bad = tmp_path / "bad.wav"
        with wave_mod.open(str(bad), "wb") as wf:
            wf.setnchannels(2)
            wf.setsampwidth(2)
            wf.setframerate(16000)
            wf.writeframes(b"\x00\x00" * 64)
        with pytest.raises(InvalidInput, match="mono"):
            dsp.read_wav(bad)

        bad2 = tmp_path / "bad2.wav"
        with wave_mod.open(str(bad2), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(8000)
            wf.writeframes(b"\x00\x00" * 64)
        with pytest.raises(InvalidInput, match="16 kHz"):
            dsp.read_wav(bad2)

    def test_rejects_garbage_file(self, tmp_path):
        p = tmp_path / "junk.wav"
        p.write_bytes(b"not a wav at all")
        with pytest.raises(InvalidInput):
            dsp.read_wav(p)
