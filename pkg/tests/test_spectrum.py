import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import naive_azimuthal, naive_dft2
from perceptxai.errors import BadBand, DimensionTooSmall, PerceptError
from perceptxai.image import quantize8, synth_base
from perceptxai.spectrum import (
    SpectrumProfile,
    azimuthal_average,
    band_energy,
    class_separation,
    dft2_amplitude,
    image_profile,
    write_profile_csv,
    write_separation_csv,
)
from perceptxai.synth import apply_hf_stripes


def test_matches_naive_dft(rng):
    for shape in ((16, 16), (6, 10)):
        g = rng.random(shape)
        fast = dft2_amplitude(g)
        slow = np.abs(np.fft.fftshift(naive_dft2(g)))
        rel = np.max(np.abs(fast - slow)) / np.max(slow)
        assert rel < 1e-8


def test_constant_image():
    amp = dft2_amplitude(np.full((8, 8), 0.3))
    assert amp[4, 4] == pytest.approx(0.3 * 64, rel=1e-12)
    others = np.delete(amp.ravel(), 4 * 8 + 4)
    assert np.all(others <= 1e-9 * amp[4, 4])


def test_row_cosine():
    n = 32
    r = np.arange(n)
    g = np.repeat(np.cos(2 * np.pi * r / 4)[:, None], n, axis=1)
    amp = dft2_amplitude(g)
    c = n // 2
    assert amp[c + n // 4, c] == pytest.approx(n * n / 2, rel=1e-9)
    assert amp[c - n // 4, c] == pytest.approx(n * n / 2, rel=1e-9)
    rest = amp.copy()
    rest[c + n // 4, c] = rest[c - n // 4, c] = 0
    assert rest.max() < 1e-9 * n * n


def test_parseval(rng):
    g = rng.random((24, 20))
    amp = dft2_amplitude(g)
    lhs = np.sum(amp ** 2)
    rhs = g.size * np.sum(g ** 2)
    assert abs(lhs - rhs) / rhs < 1e-6


def test_too_small():
    with pytest.raises(DimensionTooSmall):
        dft2_amplitude(np.zeros((1, 8)))


def test_conjugate_symmetry(rng):
    amp = dft2_amplitude(rng.random((16, 16)))
    # around the centre (8, 8): A(8+u, 8+v) = A(8-u, 8-v)
    for u in range(-7, 8):
        for v in range(-7, 8):
            assert amp[8 + u, 8 + v] == pytest.approx(amp[8 - u, 8 - v], rel=1e-10, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(0, 1)), st.integers(0, 15), st.integers(0, 15))
def test_translation_invariance(g, dy, dx):
    a = dft2_amplitude(g)
    b = dft2_amplitude(np.roll(g, (dy, dx), axis=(0, 1)))
    assert np.all(np.abs(a - b) <= 1e-6 * np.maximum(a, 1e-6 * a.max() + 1e-12))


def test_azimuthal_matches_loops(rng):
    amp = dft2_amplitude(rng.random((12, 16)))
    np.testing.assert_allclose(azimuthal_average(amp, "none").values, naive_azimuthal(amp), rtol=1e-12)


def test_azimuthal_ones():
    for norm in ("dc", "none"):
        np.testing.assert_allclose(azimuthal_average(np.ones((16, 16)), norm).values, np.ones(9))


def test_azimuthal_delta():
    spec = np.zeros((16, 16))
    spec[8, 8] = 5.0
    np.testing.assert_array_equal(azimuthal_average(spec, "dc").values, [1] + [0] * 8)


def test_profile_length_and_dc():
    p = image_profile(synth_base(3, 128, 96))
    assert len(p) == 49
    assert p.values[0] == 1.0


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(0.01, 1)))
def test_rotation_robust(g):
    a = image_profile(g).values
    b = image_profile(np.rot90(g)).values
    assert np.all(np.abs(a - b) <= 1e-6 * np.maximum(np.abs(a), 1e-12) + 1e-15)


def test_white_noise_flat_profile():
    cvs = []
    for s in range(20):
        g = np.random.default_rng(1000 + s).random((128, 128))
        v = image_profile(g).values[5:65]
        cvs.append(v.std() / v.mean())
    assert max(cvs) < 0.2


def test_band_energy_examples():
    ones = SpectrumProfile(np.ones(65))
    assert band_energy(ones, (0, 1)) == 1.0
    assert band_energy(SpectrumProfile(np.r_[1.0, np.zeros(64)]), (0.75, 1.0)) == 0.0
    # [0.75 * 64, 64] = bins 48..64
    assert band_energy(np.arange(65.0), (0.75, 1.0)) == pytest.approx(56.0)


@pytest.mark.parametrize("band", [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.1), (0.9, 0.1)])
def test_bad_band(band):
    with pytest.raises(BadBand):
        band_energy(np.ones(10), band)


def test_stripes_raise_top_quartile():
    e1 = [band_energy(image_profile(quantize8(apply_hf_stripes(synth_base(100 + s, 128, 128)))))
          for s in range(30)]
    e0 = [band_energy(image_profile(quantize8(synth_base(200 + s, 128, 128)))) for s in range(30)]
    assert np.mean(e1) > 2 * np.mean(e0)


def test_stripes_raise_their_own_band():
    # the period-4 stripe line is at radius N/4, i.e. band fraction 0.5
    band = (0.45, 0.55)
    e1 = [band_energy(image_profile(apply_hf_stripes(synth_base(100 + s, 128, 128))), band) for s in range(10)]
    e0 = [band_energy(image_profile(synth_base(100 + s, 128, 128)), band) for s in range(10)]
    assert min(np.array(e1) / np.array(e0)) > 2


def test_separation_identical(rng):
    ps = [SpectrumProfile(rng.random(10)) for _ in range(5)]
    assert class_separation(ps, ps) == 0.0


def test_separation_degenerate():
    two = [SpectrumProfile(np.full(10, 2.0))] * 3
    three = [SpectrumProfile(np.full(10, 3.0))] * 3
    assert class_separation(two, two) == 0.0
    assert class_separation(two, three) == float("inf")


def test_separation_value():
    a = [SpectrumProfile(np.full(8, v)) for v in (1.0, 2.0, 3.0)]
    b = [SpectrumProfile(np.full(8, v)) for v in (3.0, 4.0, 5.0)]
    # means 2 and 4, pooled sd 1
    assert class_separation(a, b) == pytest.approx(2.0)


def test_separation_errors():
    with pytest.raises(PerceptError):
        class_separation([], [SpectrumProfile(np.ones(4))])
    with pytest.raises(PerceptError):
        class_separation([SpectrumProfile(np.ones(4))], [SpectrumProfile(np.ones(5))])


def test_csv_writers(tmp_path):
    write_profile_csv(SpectrumProfile(np.array([1.0, 0.5])), tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines() == ["bin,value", "0,1.0", "1,0.5"]
    write_separation_csv([(0.75, 1.0, 3.5)], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines() == ["band_lo,band_hi,separation", "0.75,1.0,3.5"]
