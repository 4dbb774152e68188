"""NIQE: distance between an image's NSS statistics and a pristine model.

Patch features reuse the 18-value block documented in the brisque module,
computed per 96x96 patch at full scale and the co-located 48x48 patch at
half scale. The score is a Mahalanobis-style distance between two
multivariate Gaussians with the pooled covariance pseudo-inverted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DegenerateInputError, DimensionMismatchError, FormatError, InvariantViolation
from ..media import ImageBuffer, MaskMap, downsample_half, halve_mask
from .brisque import COVERAGE_THRESHOLD, FEATURE_DIM
from .fitting import fit_aggd, fit_ggd
from .mscn import local_stats, mscn, pairwise_products

PATCH_SIZE = 96
SHARPNESS_FRACTION = 0.75
PINV_TOL = 1e-10
COV_SYMMETRY_TOL = 1e-8


def _block_features(patch: np.ndarray) -> list[float]:
    g = fit_ggd(patch.reshape(-1))
    feats = [g.alpha, g.sigma_sq]
    for prod in pairwise_products(patch):
        a = fit_aggd(prod.reshape(-1))
        feats.extend([a.mean_eta, a.alpha, a.sigma_l_sq, a.sigma_r_sq])
    return feats


def niqe_features(gray: ImageBuffer, coverage: MaskMap | None = None) -> np.ndarray:
    """Per-patch 36-value feature vectors for the selected sharp patches.

    The image is partitioned into non-overlapping 96x96 patches; a patch is
    kept when its mean local deviation reaches 75% of the sharpest patch's.
    With a ``coverage`` map, patches under 75% region coverage are dropped
    before the sharpness ranking.
    """
    if min(gray.height, gray.width) < PATCH_SIZE:
        raise DegenerateInputError(
            f"image {gray.height}x{gray.width} smaller than one {PATCH_SIZE}px patch"
        )
    cov = None
    if coverage is not None:
        if (coverage.height, coverage.width) != (gray.height, gray.width):
            raise DimensionMismatchError("coverage map does not match image dimensions")
        cov = coverage.data

    _, sigma = local_stats(gray)
    coeffs = mscn(gray)
    half_img = downsample_half(gray)
    coeffs_half = mscn(half_img)
    half_patch = PATCH_SIZE // 2
    cov_half = None if cov is None else halve_mask(coverage).data

    rows = gray.height // PATCH_SIZE
    cols = gray.width // PATCH_SIZE
    candidates = []
    for pi in range(rows):
        for pj in range(cols):
            sl = (slice(pi * PATCH_SIZE, (pi + 1) * PATCH_SIZE),
                  slice(pj * PATCH_SIZE, (pj + 1) * PATCH_SIZE))
            if cov is not None and cov[sl].mean() < COVERAGE_THRESHOLD:
                continue
            sl_half = (slice(pi * half_patch, (pi + 1) * half_patch),
                       slice(pj * half_patch, (pj + 1) * half_patch))
            if cov_half is not None and cov_half[sl_half].mean() < COVERAGE_THRESHOLD:
                continue
            candidates.append((float(sigma[sl].mean()), sl, sl_half))
    if not candidates:
        raise DegenerateInputError("no patch reaches the region-coverage threshold")

    max_sharpness = max(c[0] for c in candidates)
    vectors = []
    for sharpness, sl, sl_half in candidates:
        if sharpness < SHARPNESS_FRACTION * max_sharpness:
            continue
        feats = _block_features(coeffs[sl]) + _block_features(coeffs_half[sl_half])
        vectors.append(feats)
    if not vectors:
        raise DegenerateInputError("no patch survives sharpness selection")
    return np.asarray(vectors, dtype=np.float64)


@dataclass(frozen=True)
class MVGModel:
    """Mean and covariance of a 36-dimensional feature population."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise InvariantViolation(f"covariance must be {mean.size}x{mean.size}, got {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise InvariantViolation("model values must be finite")
        if np.abs(cov - cov.T).max() > COV_SYMMETRY_TOL:
            raise InvariantViolation("covariance matrix is not symmetric")
        eigmin = float(np.linalg.eigvalsh(cov).min())
        if eigmin < -COV_SYMMETRY_TOL:
            raise InvariantViolation(f"covariance is not positive semidefinite (min eig {eigmin})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def fit_mvg(vectors) -> MVGModel:
    """Sample mean and sample covariance (n-1 denominator) of feature rows."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DegenerateInputError("need at least two feature vectors to fit a Gaussian")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    cov = (cov + cov.T) / 2.0  # exact symmetry regardless of BLAS rounding
    return MVGModel(mean=mean, cov=cov)


def niqe_score(test: MVGModel, pristine: MVGModel) -> float:
    """sqrt((m1-m2)^T pinv((C1+C2)/2) (m1-m2)); symmetric in its arguments."""
    if test.mean.shape != pristine.mean.shape:
        raise DimensionMismatchError("models disagree on feature dimension")
    pooled = (test.cov + pristine.cov) / 2.0
    inv = np.linalg.pinv(pooled, rcond=PINV_TOL, hermitian=True)
    d = test.mean - pristine.mean
    q = float(d @ inv @ d)
    return float(np.sqrt(max(q, 0.0)))


def load_pristine_model(path) -> MVGModel:
    """Read the documented pristine-statistics JSON file."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such pristine model file: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"pristine model file is not valid JSON: {path}: {exc}") from exc
    try:
        mean = np.asarray(doc["mean"], dtype=np.float64)
        cov = np.asarray(doc["cov"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"pristine model file {path} violates the schema: {exc}") from exc
    if mean.shape != (FEATURE_DIM,):
        raise FormatError(f"pristine mean must have {FEATURE_DIM} entries")
    return MVGModel(mean=mean, cov=cov)
