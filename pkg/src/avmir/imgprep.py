"""Frame substrate: letterbox removal, color-space conversions, circular hue
statistics, CLAHE and ordered dithering.

Frames are numpy arrays of shape (height, width, 3), dtype uint8, RGB order.
All functions here are pure; none mutates its input.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels

# saturation below this is treated as achromatic (hue undefined)
ACHROMATIC_EPS = 0.05

# IHLS luminance weights (ITU-R BT.709 primaries)
_LUMA_R, _LUMA_G, _LUMA_B = 0.2126, 0.7152, 0.0722

# linear sRGB -> XYZ (D65); the reference white is taken as M @ [1,1,1] so
# that pure white maps to exactly L=100
_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_WHITE_XYZ = _SRGB_TO_XYZ @ np.ones(3)


@dataclass
class IhlsFrame:
    """Improved Hue/Luminance/Saturation planes of one frame.

    hue is in radians [0, 2pi); luminance and saturation in [0, 1];
    chromatic is False where saturation < ACHROMATIC_EPS.
    """
    hue: np.ndarray
    luminance: np.ndarray
    saturation: np.ndarray
    chromatic: np.ndarray


@dataclass
class LchFrame:
    """CIELAB lightness / chroma / hue-angle planes (D65 white)."""
    L: np.ndarray
    C: np.ndarray
    H: np.ndarray


@dataclass
class CircularStats:
    angular_mean: float
    angular_deviation: float
    weighted: bool


def wrap_angle(theta):
    """Map angles into [0, 2pi); float dust at exactly 2pi wraps to 0."""
    out = np.mod(theta, 2.0 * np.pi)
    return np.where(out >= 2.0 * np.pi, 0.0, out)


def as_frame(arr):
    """Validate and return an (H, W, 3) uint8 RGB frame."""
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"frame must have shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("frame must contain at least one pixel")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("frame channel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def strip_letterbox(frame, darkness_threshold=24, row_fraction=0.98):
    """Crop contiguous dark border rows/columns (letterboxing, pillarboxing).

    A border row/column is removed while the fraction of its pixels with
    max(R,G,B) <= darkness_threshold exceeds row_fraction.  Total function:
    if everything would be removed the input is returned unchanged.
    """
    frame = as_frame(frame)
    dark = frame.max(axis=2) <= darkness_threshold

    h, w = dark.shape
    row_dark = dark.mean(axis=1)
    top = 0
    while top < h and row_dark[top] > row_fraction:
        top += 1
    bottom = h
    while bottom > top and row_dark[bottom - 1] > row_fraction:
        bottom -= 1
    if top >= bottom:
        return frame

    col_dark = dark[top:bottom].mean(axis=0)
    left = 0
    while left < w and col_dark[left] > row_fraction:
        left += 1
    right = w
    while right > left and col_dark[right - 1] > row_fraction:
        right -= 1
    if left >= right:
        return frame
    return frame[top:bottom, left:right]


def rgb_to_ihls(frame):
    """Convert to the IHLS color space (brightness-independent saturation).

    Luminance is the weighted RGB sum, saturation is max-min and hue is the
    angle in the chromatic plane; achromatic pixels keep hue 0 and are
    excluded via the chromatic mask.
    """
    frame = as_frame(frame)
    rgb = frame.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]

    luminance = _LUMA_R * r + _LUMA_G * g + _LUMA_B * b
    saturation = rgb.max(axis=2) - rgb.min(axis=2)

    num = r - 0.5 * g - 0.5 * b
    den_sq = r * r + g * g + b * b - r * g - r * b - g * b
    den = np.sqrt(np.maximum(den_sq, 0.0))
    chromatic = saturation >= ACHROMATIC_EPS

    hue = np.zeros_like(r)
    safe = den > 1e-12
    ratio = np.clip(np.divide(num, den, out=np.zeros_like(r), where=safe), -1.0, 1.0)
    hue[safe] = np.arccos(ratio[safe])
    flip = safe & (b > g)
    hue[flip] = 2.0 * np.pi - hue[flip]
    hue = np.where(hue >= 2.0 * np.pi, 0.0, hue)
    return IhlsFrame(hue=hue, luminance=luminance, saturation=saturation,
                     chromatic=chromatic)


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    delta = 6.0 / 29.0
    return np.where(t > delta ** 3,
                    np.cbrt(t),
                    t / (3.0 * delta * delta) + 4.0 / 29.0)


def rgb_to_lch(frame):
    """Convert to cylindrical CIELAB: sRGB -> linear -> XYZ (D65) -> LAB -> LCH."""
    frame = as_frame(frame)
    rgb = _srgb_to_linear(frame.astype(np.float64) / 255.0)
    xyz = rgb @ _SRGB_TO_XYZ.T
    xyz /= _WHITE_XYZ

    fx = _lab_f(xyz[..., 0])
    fy = _lab_f(xyz[..., 1])
    fz = _lab_f(xyz[..., 2])
    L = 116.0 * fy - 16.0
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)

    C = np.hypot(a, b)
    H = wrap_angle(np.arctan2(b, a))
    return LchFrame(L=L, C=C, H=H)


def rgb_to_hsv(frame):
    """RGB -> HSV with H in degrees [0, 360), S and V in [0, 1]."""
    rgb = as_frame(frame).astype(np.float64) / 255.0
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]

    h = np.zeros_like(mx)
    nz = delta > 0
    rmax = nz & (mx == r)
    gmax = nz & (mx == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    h[rmax] = np.mod((g[rmax] - b[rmax]) / delta[rmax], 6.0)
    h[gmax] = (b[gmax] - r[gmax]) / delta[gmax] + 2.0
    h[bmax] = (r[bmax] - g[bmax]) / delta[bmax] + 4.0
    h *= 60.0

    s = np.divide(delta, mx, out=np.zeros_like(mx), where=mx > 0)
    return h, s, mx


def hsv_to_rgb(h, s, v):
    """Inverse of rgb_to_hsv; returns a uint8 frame."""
    h = np.mod(np.asarray(h, dtype=np.float64), 360.0) / 60.0
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)

    i = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))

    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(i, choices_r)
    g = np.choose(i, choices_g)
    b = np.choose(i, choices_b)
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)


def circular_stats(hues, weights=None):
    """Angular mean and deviation of a set of hue angles (radians).

    The deviation is sqrt(2 * (1 - R)) with R the mean resultant length, so
    it lies in [0, sqrt(2)].  Optional nonnegative weights must not all be
    zero.  Raises ValueError on empty input.
    """
    hues = np.asarray(hues, dtype=np.float64).ravel()
    if hues.size == 0:
        raise ValueError("no chromatic pixels")
    weighted = weights is not None
    if weighted:
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if weights.shape != hues.shape:
            raise ValueError("weights must match hues in length")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = weights.sum()
        if total <= 0:
            raise ValueError("weights must not all be zero")
    else:
        weights = np.ones_like(hues)
        total = float(hues.size)

    sin_sum = float(np.sum(weights * np.sin(hues)))
    cos_sum = float(np.sum(weights * np.cos(hues)))
    mean = float(wrap_angle(np.arctan2(sin_sum, cos_sum)))
    # sqrt(2 * (1 - R)) via the identity 2*(1 - R) = sum(w * 4*sin^2((h-mean)/2))/W,
    # which stays accurate near zero deviation where 1 - R cancels badly
    half = np.sin((hues - mean) / 2.0)
    deviation = float(2.0 * np.sqrt(np.sum(weights * half * half) / total))
    return CircularStats(angular_mean=mean, angular_deviation=deviation,
                         weighted=weighted)


def clahe(channel, tile=(22, 22), clip_limit=1.0):
    """Contrast-limited adaptive histogram equalization of a 2-D raster.

    Per-tile histograms are clipped at clip_limit * tile_area / 256 (no
    clipping when clip_limit is 0), excess mass is redistributed uniformly
    and pixel values are remapped with bilinear blending between the four
    surrounding tile mappings.  Rasters smaller than one tile degrade to
    global equalization.  Float input is quantized to 256 levels over its
    own range and mapped back, so the value domain is preserved.
    """
    channel = np.asarray(channel)
    if channel.ndim != 2:
        raise ValueError("clahe expects a 2-D raster")
    tw, th = int(tile[0]), int(tile[1])
    if tw < 1 or th < 1:
        raise ValueError("tile dimensions must be >= 1")
    if clip_limit < 0:
        raise ValueError("clip limit must be >= 0")

    if channel.dtype == np.uint8:
        return _kernels.clahe_u8(channel, tw, th, float(clip_limit))

    data = channel.astype(np.float64)
    lo, hi = float(data.min()), float(data.max())
    if hi <= lo:
        return data.copy()
    quantized = np.round((data - lo) / (hi - lo) * 255.0).astype(np.uint8)
    out = _kernels.clahe_u8(quantized, tw, th, float(clip_limit))
    return out.astype(np.float64) / 255.0 * (hi - lo) + lo


def bayer_matrix(order):
    """Recursive Bayer threshold map of the given power-of-two order,
    normalized to [0, 1) with every value k/order**2 appearing exactly once."""
    if order < 2 or order > 64 or order & (order - 1) != 0:
        raise ValueError("order must be a power of two in [2, 64]")
    m = np.zeros((1, 1), dtype=np.int64)
    size = 1
    while size < order:
        m = np.block([[4 * m + 0, 4 * m + 2],
                      [4 * m + 3, 4 * m + 1]])
        size *= 2
    return m.astype(np.float64) / (order * order)


def ordered_dither_quantize(frame, palette, threshold_map=None, spread=64.0):
    """Quantize a frame to a palette with ordered dithering.

    Each pixel is offset per channel by spread * (map[y mod n, x mod n] - 0.5)
    and assigned the nearest palette color by Euclidean RGB distance.  With
    spread 0 this is plain nearest-palette quantization.  Returns an (H, W)
    int32 array of palette indices.
    """
    frame = as_frame(frame)
    palette = np.asarray(palette, dtype=np.float64)
    if palette.ndim != 2 or palette.shape[1] != 3 or palette.shape[0] < 1:
        raise ValueError("palette must be a non-empty list of RGB triples")
    if threshold_map is None:
        threshold_map = bayer_matrix(32)
    return _kernels.dither_indices(frame.astype(np.float64), palette,
                                   threshold_map, spread)
