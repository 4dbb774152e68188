"""BRISQUE: 36 NSS features mapped to a quality score by an RBF-kernel SVR.

Feature layout (documented order, 18 per scale, full scale then half
scale): [ggd_alpha, ggd_sigma_sq] for the MSCN map, then for each product
map in H, V, D1, D2 order the quadruple [eta, alpha, sigma_l_sq,
sigma_r_sq]. Lower scores mean higher quality under the usual model files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DegenerateInputError, DimensionMismatchError, FormatError, InvariantViolation
from ..media import ImageBuffer, MaskMap, downsample_half, halve_mask
from .fitting import fit_aggd, fit_ggd
from .mscn import mscn, pairwise_products

FEATURE_DIM = 36
MIN_DIM = 14
# Patch size of the coverage gate used for region-restricted scoring
# (matches the NIQE patch grid; halves with the image scale).
COVERAGE_PATCH = 96
COVERAGE_THRESHOLD = 0.75


def _coverage_gate(shape: tuple[int, int], coverage: np.ndarray, patch: int) -> np.ndarray:
    """Pixel-level keep mask: true inside patches with >= 75% coverage.

    The grid tiles the whole image, including partial boundary patches, so
    an all-ones coverage map keeps every pixel.
    """
    h, w = shape
    gate = np.zeros((h, w), dtype=bool)
    for i0 in range(0, h, patch):
        for j0 in range(0, w, patch):
            block = coverage[i0 : i0 + patch, j0 : j0 + patch]
            if block.mean() >= COVERAGE_THRESHOLD:
                gate[i0 : i0 + patch, j0 : j0 + patch] = True
    return gate


def _scale_features(gray: ImageBuffer, coverage: np.ndarray | None, patch: int) -> list[float]:
    coeffs = mscn(gray)
    if coverage is None:
        gate = None
        base = coeffs.reshape(-1)
    else:
        gate = _coverage_gate(coeffs.shape, coverage, patch)
        if not gate.any():
            raise DegenerateInputError("no image patch reaches the region-coverage threshold")
        base = coeffs[gate]
    g = fit_ggd(base)
    feats = [g.alpha, g.sigma_sq]
    products = pairwise_products(coeffs)
    gates = (
        (None, None, None, None)
        if gate is None
        else (
            gate[:, :-1] & gate[:, 1:],
            gate[:-1, :] & gate[1:, :],
            gate[:-1, :-1] & gate[1:, 1:],
            gate[:-1, 1:] & gate[1:, :-1],
        )
    )
    for prod, pgate in zip(products, gates):
        samples = prod.reshape(-1) if pgate is None else prod[pgate]
        a = fit_aggd(samples)
        feats.extend([a.mean_eta, a.alpha, a.sigma_l_sq, a.sigma_r_sq])
    return feats


def brisque_features(gray: ImageBuffer, coverage: MaskMap | None = None) -> np.ndarray:
    """The 36-value NSS feature vector over two scales.

    With a ``coverage`` map (region scoring), only samples inside patches
    with at least 75% coverage contribute to the fits; an all-ones map
    reproduces the unrestricted features bitwise.
    """
    if min(gray.height, gray.width) < MIN_DIM:
        raise DegenerateInputError(
            f"image {gray.height}x{gray.width} too small for two-scale features (min {MIN_DIM})"
        )
    cov = None
    if coverage is not None:
        if (coverage.height, coverage.width) != (gray.height, gray.width):
            raise DimensionMismatchError("coverage map does not match image dimensions")
        cov = coverage.data
    feats = _scale_features(gray, cov, COVERAGE_PATCH)
    half = downsample_half(gray)
    cov_half = None if coverage is None else halve_mask(coverage).data
    feats += _scale_features(half, cov_half, COVERAGE_PATCH // 2)
    return np.asarray(feats, dtype=np.float64)


@dataclass(frozen=True)
class SVRModel:
    """RBF-kernel support vector regressor plus its feature scaling bounds."""

    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    gamma: float
    rho: float
    feature_min: np.ndarray
    feature_max: np.ndarray

    def __post_init__(self):
        sv = np.asarray(self.support_vectors, dtype=np.float64).reshape(-1, FEATURE_DIM)
        coefs = np.asarray(self.dual_coefs, dtype=np.float64).reshape(-1)
        lo = np.asarray(self.feature_min, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.feature_max, dtype=np.float64).reshape(-1)
        if sv.shape[0] != coefs.shape[0]:
            raise InvariantViolation("support vector and dual coefficient counts differ")
        if lo.shape != (FEATURE_DIM,) or hi.shape != (FEATURE_DIM,):
            raise InvariantViolation(f"scaling bounds must be {FEATURE_DIM}-dimensional")
        if not np.all(lo < hi):
            raise InvariantViolation("feature_min must be strictly below feature_max")
        if self.gamma <= 0:
            raise InvariantViolation("gamma must be positive")
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)
        object.__setattr__(self, "feature_min", lo)
        object.__setattr__(self, "feature_max", hi)


def brisque_score(features: np.ndarray, model: SVRModel) -> float:
    """Scale features to [-1, 1], then evaluate the RBF kernel expansion.

    score = sum_k coef_k * exp(-gamma * ||x - sv_k||^2) - rho. An empty
    support set therefore scores exactly -rho.
    """
    x = np.asarray(features, dtype=np.float64).reshape(-1)
    if x.shape != (FEATURE_DIM,):
        raise DimensionMismatchError(f"feature vector must be {FEATURE_DIM}-dimensional")
    scaled = -1.0 + 2.0 * (x - model.feature_min) / (model.feature_max - model.feature_min)
    if model.support_vectors.shape[0] == 0:
        return -model.rho
    diff = model.support_vectors - scaled
    sq_dist = np.sum(diff * diff, axis=1)
    return float(np.dot(model.dual_coefs, np.exp(-model.gamma * sq_dist)) - model.rho)


def load_svr_model(path) -> SVRModel:
    """Read the documented SVR model JSON file."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"no such SVR model file: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"SVR model file is not valid JSON: {path}: {exc}") from exc
    try:
        return SVRModel(
            support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64).reshape(
                -1, FEATURE_DIM
            ),
            dual_coefs=doc["dual_coefs"],
            gamma=float(doc["gamma"]),
            rho=float(doc["rho"]),
            feature_min=doc["feature_min"],
            feature_max=doc["feature_max"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"SVR model file {path} violates the schema: {exc}") from exc
