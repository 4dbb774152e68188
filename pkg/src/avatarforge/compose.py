"""Mask morphology, feathered compositing, and harmonic inpainting.

These are the deterministic pieces that surround the generative inpaint
backend: build body-area masks, soften their boundary into an alpha band,
blend a generated figure over a fixed background, and fill human-free
regions when no generative backend is configured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import DimensionMismatchError, InvariantViolation, NoBoundaryError
from .media import ImageBuffer, MaskMap

SOR_OMEGA = 1.9
SOR_TOL = 1e-6
SOR_MAX_SWEEPS = 10_000

BINARY_THRESHOLD = 0.5


def _binary(mask: MaskMap) -> np.ndarray:
    return mask.data > BINARY_THRESHOLD


def disc_element(radius: int) -> np.ndarray:
    """Disc structuring element: offsets with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise InvariantViolation("radius must be >= 0")
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return (dy * dy + dx * dx) <= radius * radius


def dilate(mask: MaskMap, radius: int) -> MaskMap:
    """Binary dilation with a disc element; out-of-image counts as background."""
    binary = _binary(mask)
    if radius == 0:
        return MaskMap(binary.astype(np.float64))
    out = ndimage.binary_dilation(binary, structure=disc_element(radius), border_value=0)
    return MaskMap(out.astype(np.float64))


def erode(mask: MaskMap, radius: int) -> MaskMap:
    """Binary erosion with a disc element.

    Out-of-image counts as foreground so that erode(dilate(m)) never
    shrinks a mask merely because it touches the image border.
    """
    binary = _binary(mask)
    if radius == 0:
        return MaskMap(binary.astype(np.float64))
    out = ndimage.binary_erosion(binary, structure=disc_element(radius), border_value=1)
    return MaskMap(out.astype(np.float64))


def feather(mask: MaskMap, width: int) -> MaskMap:
    """Ramp a binary mask to an alpha band via the exact distance transform.

    alpha = clamp(signed boundary distance / width, 0, 1): pixels outside
    the mask get 0, pixels at least ``width`` inside get 1, the in-between
    band ramps linearly with Euclidean distance to the nearest outside
    pixel. Width 0 returns the mask unchanged.
    """
    if width < 0:
        raise InvariantViolation("feather width must be >= 0")
    if width == 0:
        return mask
    binary = _binary(mask)
    if binary.all():
        return MaskMap(np.ones_like(mask.data))
    dist = ndimage.distance_transform_edt(binary)
    return MaskMap(np.clip(dist / float(width), 0.0, 1.0))


@dataclass(frozen=True)
class CompositeSpec:
    """Inputs for one feathered foreground-over-background blend."""

    background: ImageBuffer
    foreground: ImageBuffer
    mask: MaskMap
    feather_width: int = 3

    def __post_init__(self):
        dims = {
            (self.background.height, self.background.width),
            (self.foreground.height, self.foreground.width),
            (self.mask.height, self.mask.width),
        }
        if len(dims) > 1:
            raise DimensionMismatchError(f"composite inputs disagree on dimensions: {sorted(dims)}")
        if self.background.channels != self.foreground.channels:
            raise DimensionMismatchError("composite inputs disagree on channel count")
        if self.feather_width < 0:
            raise InvariantViolation("feather_width must be >= 0")


def _blend(background: ImageBuffer, foreground: ImageBuffer, alpha: MaskMap) -> ImageBuffer:
    a = alpha.data[:, :, np.newaxis]
    fg = foreground.data
    bg = background.data
    # Bitwise-exact at the extremes: 1*x + 0*y == x for finite values in [0,1].
    return ImageBuffer(a * fg + (1.0 - a) * bg)


def composite(spec: CompositeSpec) -> ImageBuffer:
    """alpha * foreground + (1 - alpha) * background, alpha = feathered mask.

    Exactly the foreground where alpha is 1 and exactly the background
    where alpha is 0.
    """
    alpha = feather(spec.mask, spec.feather_width)
    return _blend(spec.background, spec.foreground, alpha)


def blend_with_alpha(background: ImageBuffer, foreground: ImageBuffer, alpha: MaskMap) -> ImageBuffer:
    """Composite with a precomputed alpha map (no feathering applied here)."""
    CompositeSpec(background=background, foreground=foreground, mask=alpha, feather_width=0)
    return _blend(background, foreground, alpha)


def soft_matte(mask: MaskMap, width: int) -> MaskMap:
    """Expand a body mask by ``width`` then feather it by ``width``.

    The expansion keeps every original mask pixel strictly inside the
    alpha = 1 core, so compositing never attenuates the figure itself; the
    ramp lives entirely in the halo around it.
    """
    if width == 0:
        return feather(mask, 0)
    return feather(dilate(mask, width), width)


def harmonic_inpaint(img: ImageBuffer, mask: MaskMap) -> ImageBuffer:
    """Fill masked pixels with the discrete Laplace solution.

    Unmasked pixels are Dirichlet boundary values; the 4-neighbor stencil
    is relaxed by Gauss-Seidel SOR (omega 1.9) until the largest update in
    a sweep falls below 1e-6 or 10,000 sweeps have run. Masked pixels start
    from the mean of the unmasked pixels, so constants are recovered
    exactly. Image borders are zero-flux.
    """
    if (img.height, img.width) != (mask.height, mask.width):
        raise DimensionMismatchError("inpaint mask does not match image dimensions")
    hole = _binary(mask)
    if not hole.any():
        return img
    if hole.all():
        raise NoBoundaryError("mask covers the whole image; no boundary values to fill from")
    hole8 = hole.astype(np.uint8)
    out = np.empty_like(img.data)
    for c in range(img.channels):
        chan = np.ascontiguousarray(img.data[:, :, c].copy())
        chan[hole] = chan[~hole].mean()
        _kernels.sor_relax(chan, hole8, SOR_OMEGA, SOR_TOL, SOR_MAX_SWEEPS)
        out[:, :, c] = chan
    # The discrete maximum principle keeps filled values inside the boundary
    # range; the clip only absorbs last-ulp overshoot.
    return ImageBuffer(np.clip(out, 0.0, 1.0))


DILATION_MARGIN = 2

InpaintFn = Callable[[ImageBuffer, MaskMap], ImageBuffer]


def extract_background(
    human_image: ImageBuffer,
    human_mask: MaskMap,
    inpaint: Optional[InpaintFn] = None,
) -> ImageBuffer:
    """Remove the human region and fill it from its surroundings.

    The mask is dilated by a 2-pixel safety margin first. When an
    ``inpaint`` callable (a generative backend adapter) is configured it is
    invoked exactly once with the dilated mask; otherwise the harmonic fill
    runs. An empty mask returns the input unchanged.
    """
    grown = dilate(human_mask, DILATION_MARGIN)
    if not grown.data.any():
        return human_image
    if grown.data.all():
        raise NoBoundaryError("dilated mask covers the whole image")
    if inpaint is not None:
        return inpaint(human_image, grown)
    return harmonic_inpaint(human_image, grown)
