import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gamutmlp.colorspace import (
    PROPHOTO_TO_SRGB,
    SRGB_TO_PROPHOTO,
    DomainError,
    expand_gamut_naive,
    from_uint8,
    gamma_decode,
    gamma_encode,
    gamut_mask,
    quantization_error_bound,
    quantize,
    reduce_gamut,
    soft_clip,
    soft_clip_expand,
    to_uint8,
)


def iec_encode(v):
    # reference sRGB transfer function, scalar form
    return 12.92 * v if v <= 0.0031308 else 1.055 * v ** (1 / 2.4) - 0.055


def iec_decode(v):
    return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4


def test_matrix_inverse():
    assert np.abs(PROPHOTO_TO_SRGB @ SRGB_TO_PROPHOTO - np.eye(3)).max() < 1e-6


def test_matrix_is_read_only():
    with pytest.raises(ValueError):
        PROPHOTO_TO_SRGB[0, 0] = 1.0


def test_matrix_agrees_with_cat02_derivation():
    # ROMM primaries -> XYZ(D50), CAT02 to D65, XYZ -> linear sRGB
    romm = np.array([[0.7976749, 0.1351917, 0.0313534], [0.2880402, 0.7118741, 0.0000857], [0.0, 0.0, 0.8252100]])
    xyz_to_srgb = np.array([[3.2404542, -1.5371385, -0.4985314], [-0.9692660, 1.8760108, 0.0415560],
                            [0.0556434, -0.2040259, 1.0572252]])
    cat02 = np.array([[0.7328, 0.4296, -0.1624], [-0.7036, 1.6975, 0.0061], [0.0030, 0.0136, 0.9834]])
    d50 = np.array([0.96422, 1.0, 0.82521])
    d65 = np.array([0.95047, 1.0, 1.08883])
    adapt = np.linalg.inv(cat02) @ np.diag((cat02 @ d65) / (cat02 @ d50)) @ cat02
    assert np.abs(xyz_to_srgb @ adapt @ romm - PROPHOTO_TO_SRGB).max() < 1e-3


def test_gamma_fixed_points():
    assert gamma_encode(0.0) == 0.0
    assert gamma_encode(1.0) == pytest.approx(1.0, abs=1e-12)
    assert gamma_decode(0.0) == 0.0
    assert gamma_decode(1.0) == pytest.approx(1.0, abs=1e-12)


def test_gamma_breakpoint_values():
    assert gamma_encode(0.0031308) == pytest.approx(0.04044994, abs=1e-8)
    assert gamma_decode(0.04044994) == pytest.approx(0.0031308, abs=1e-9)
    assert gamma_decode(gamma_encode(0.25)) == pytest.approx(0.25, abs=1e-9)


def test_gamma_matches_reference_formula():
    grid = np.linspace(0, 1, 1001)
    assert np.abs(gamma_encode(grid) - [iec_encode(v) for v in grid]).max() < 1e-12
    assert np.abs(gamma_decode(grid) - [iec_decode(v) for v in grid]).max() < 1e-12


def test_gamma_monotone():
    grid = np.linspace(0, 1, 10_001)
    assert np.all(np.diff(gamma_encode(grid)) > 0)
    assert np.all(np.diff(gamma_decode(grid)) > 0)


@pytest.mark.parametrize("bad", [-0.01, 1.01, np.nan, np.inf])
def test_gamma_domain(bad):
    with pytest.raises(DomainError):
        gamma_encode(np.array([0.5, bad]))
    with pytest.raises(DomainError):
        gamma_decode(bad)


def test_quantize_half_up():
    assert to_uint8(np.array([0.5 / 255, 1.5 / 255, 1.0])).tolist() == [1, 2, 255]
    assert quantize(np.array([0.2]))[0] * 255 == pytest.approx(51.0)
    assert np.array_equal(to_uint8(from_uint8(np.arange(256))), np.arange(256))


def test_reduce_black():
    srgb, mask, clipped = reduce_gamut(np.zeros((1, 1, 3)))
    assert np.all(srgb == 0) and not mask.any() and np.all(clipped == 0)


def test_reduce_white_is_slightly_out_of_gamut():
    white = np.ones((1, 1, 3))
    lin = white[0, 0] @ PROPHOTO_TO_SRGB.T
    assert lin == pytest.approx([0.9996, 1.0002, 0.9998], abs=1e-9)
    srgb, mask, _ = reduce_gamut(white, quantize=False)
    assert mask[0, 0]
    assert srgb.max() <= 1.0


def test_reduce_green_primary():
    img = np.array([[[0.0, 1.0, 0.0]]])
    lin = img[0, 0] @ PROPHOTO_TO_SRGB.T
    assert lin == pytest.approx([-0.7376, 1.2232, -0.1349])
    srgb, mask, _ = reduce_gamut(img, quantize=False)
    assert mask[0, 0]
    assert srgb[0, 0] == pytest.approx([0, 1, 0])


def test_reduce_rejects_bad_input():
    with pytest.raises(ValueError):
        reduce_gamut(np.full((2, 2, 3), 1.5))
    with pytest.raises(ValueError):
        reduce_gamut(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        reduce_gamut(np.full((1, 1, 3), np.nan))


def test_quantization_bound_value():
    row = np.abs(SRGB_TO_PROPHOTO).sum(axis=1).max()
    assert quantization_error_bound() == pytest.approx(row * 2.4 / 1.055 * 0.5 / 255)
    assert quantization_error_bound() < 5e-3


def in_gamut_images(draw_shape=(4, 4, 3)):
    return arrays(np.float64, draw_shape, elements=st.floats(0, 1)).map(
        lambda srgb_lin: srgb_lin @ SRGB_TO_PROPHOTO.T
    ).filter(lambda p: p.min() >= 0 and p.max() <= 1)


@settings(max_examples=50, deadline=None)
@given(in_gamut_images())
def test_float_round_trip_identity(img):
    srgb, mask, clipped = reduce_gamut(img, quantize=False)
    ig = ~mask
    assert np.abs(clipped[ig] - img[ig]).max(initial=0) < 1e-6


@settings(max_examples=50, deadline=None)
@given(in_gamut_images())
def test_quantized_round_trip_bound(img):
    srgb, mask, clipped = reduce_gamut(img, quantize=True)
    assert np.all(srgb * 255 == np.round(srgb * 255))
    ig = ~mask
    assert np.abs(clipped[ig] - img[ig]).max(initial=0) <= quantization_error_bound()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5, 3), elements=st.floats(0, 1)))
def test_reduce_outputs_in_range(img):
    srgb, mask, clipped = reduce_gamut(img)
    assert srgb.min() >= 0 and srgb.max() <= 1
    assert np.array_equal(mask, gamut_mask(img))
    assert np.array_equal(clipped, expand_gamut_naive(srgb))


def test_expand_black():
    assert np.all(expand_gamut_naive(np.zeros((1, 1, 3))) == 0)


def test_soft_clip_knee_endpoints():
    # linear sRGB red channel values 0.5 and 1.5; other channels fixed mid-range
    lin = np.array([[[0.5, 0.5, 0.5], [1.5, 0.5, 0.5]]])
    srgb, mask, knee = soft_clip(lin @ SRGB_TO_PROPHOTO.T)
    comp = gamma_decode(srgb)
    assert comp[0, 0, 0] == pytest.approx(0.5)
    assert comp[0, 1, 0] == pytest.approx(1.0)
    assert knee.high[0] == pytest.approx(1.5)
    assert mask.tolist() == [[False, True]]
    back = soft_clip_expand(srgb, knee) @ PROPHOTO_TO_SRGB.T
    assert back[0, 1, 0] == pytest.approx(1.5)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (4, 4, 3), elements=st.floats(0, 1)))
def test_soft_clip_inverse(img):
    srgb, _, knee = soft_clip(img)
    assert np.abs(soft_clip_expand(srgb, knee) - img).max() < 1e-6
