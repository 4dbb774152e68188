"""Mean-subtracted contrast-normalized coefficients and neighbor products."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import DegenerateInputError
from ..media import ImageBuffer

WINDOW_SIZE = 7
WINDOW_SIGMA = 7.0 / 6.0
STABILIZER = 1.0 / 255.0


def _gauss_window() -> np.ndarray:
    half = WINDOW_SIZE // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(offsets**2) / (2.0 * WINDOW_SIGMA**2))
    return w / w.sum()


_WINDOW = _gauss_window()


def _check_gray(img: ImageBuffer, min_dim: int) -> np.ndarray:
    if img.channels != 1:
        raise DegenerateInputError("expected a single-channel image")
    if min(img.height, img.width) < min_dim:
        raise DegenerateInputError(
            f"image {img.height}x{img.width} smaller than the required {min_dim} pixels"
        )
    return img.data[:, :, 0]


def local_stats(img: ImageBuffer) -> tuple[np.ndarray, np.ndarray]:
    """Local mean and deviation maps from the 7x7 Gaussian window.

    Borders are handled by mirror padding (reflection about the edge pixel
    center). The deviation map doubles as the sharpness field used for
    patch selection.
    """
    gray = _check_gray(img, WINDOW_SIZE)
    mu = ndimage.correlate1d(gray, _WINDOW, axis=0, mode="mirror")
    mu = ndimage.correlate1d(mu, _WINDOW, axis=1, mode="mirror")
    sq = ndimage.correlate1d(gray * gray, _WINDOW, axis=0, mode="mirror")
    sq = ndimage.correlate1d(sq, _WINDOW, axis=1, mode="mirror")
    sigma = np.sqrt(np.abs(sq - mu * mu))
    return mu, sigma


def mscn(img: ImageBuffer) -> np.ndarray:
    """(I - mu) / (sigma + C) with C = 1/255 in the [0,1] pixel domain."""
    gray = _check_gray(img, WINDOW_SIZE)
    mu, sigma = local_stats(img)
    return (gray - mu) / (sigma + STABILIZER)


def pairwise_products(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Horizontal, vertical, and the two diagonal neighbor product maps.

    Output dimensions shrink by one along each shifted axis:
    H (h, w-1), V (h-1, w), D1 (h-1, w-1), D2 (h-1, w-1).
    """
    if coeffs.ndim != 2 or coeffs.shape[0] < 2 or coeffs.shape[1] < 2:
        raise DegenerateInputError("coefficient map must be at least 2x2")
    horizontal = coeffs[:, :-1] * coeffs[:, 1:]
    vertical = coeffs[:-1, :] * coeffs[1:, :]
    diag_main = coeffs[:-1, :-1] * coeffs[1:, 1:]
    diag_anti = coeffs[:-1, 1:] * coeffs[1:, :-1]
    return horizontal, vertical, diag_main, diag_anti
