"""Shared helpers for the test suite: poses, photos, synthetic models."""

from pathlib import Path

import numpy as np

from avatarforge.media import ImageBuffer, PoseFrame, load_frame
from avatarforge.nss import SVRModel, brisque_features, fit_mvg, niqe_features

ASSETS = Path(__file__).parent / "assets"

# Relative joint offsets of a compact standing figure (COCO-18 order).
_FIGURE_LAYOUT = {
    0: (0.0, -2.0), 1: (0.0, -1.2),
    2: (-0.7, -1.2), 3: (-1.0, -0.4), 4: (-1.1, 0.4),
    5: (0.7, -1.2), 6: (1.0, -0.4), 7: (1.1, 0.4),
    8: (-0.45, 0.2), 9: (-0.5, 1.1), 10: (-0.5, 2.0),
    11: (0.45, 0.2), 12: (0.5, 1.1), 13: (0.5, 2.0),
    14: (-0.22, -2.2), 15: (0.22, -2.2), 16: (-0.45, -2.05), 17: (0.45, -2.05),
}


def standing_pose(cx: float, cy: float, scale: float = 14.0, integer: bool = True) -> PoseFrame:
    """A full 18-joint standing figure centered near (cx, cy)."""
    kps = np.zeros((18, 3))
    for k, (dx, dy) in _FIGURE_LAYOUT.items():
        x, y = cx + dx * scale, cy + dy * scale
        if integer:
            x, y = round(x), round(y)
        kps[k] = (x, y, 1.0)
    return PoseFrame(kps)


def random_pose(rng: np.random.Generator, width: int, height: int, margin: int = 8) -> PoseFrame:
    """Random 18-joint pose with every joint at least ``margin`` px from borders."""
    kps = np.zeros((18, 3))
    kps[:, 0] = rng.uniform(margin, width - margin, 18)
    kps[:, 1] = rng.uniform(margin, height - margin, 18)
    kps[:, 2] = 1.0
    return PoseFrame(kps)


def load_photos() -> list[ImageBuffer]:
    paths = sorted((ASSETS / "photos").glob("photo_*.png"))
    assert len(paths) >= 5, "bundled photo assets missing; run tests/assets/make_photos.py"
    return [load_frame(p) for p in paths]


def add_gaussian_noise(img: ImageBuffer, sigma: float, seed: int) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    return ImageBuffer(np.clip(img.data + rng.normal(0.0, sigma, img.data.shape), 0.0, 1.0))


def pristine_model_from(photos):
    vectors = np.vstack([niqe_features(p) for p in photos])
    return fit_mvg(vectors)


def svr_model_from(photos) -> SVRModel:
    """An SVR that rewards proximity to the clean photos' statistics.

    Each photo's feature vector is a support vector with coefficient -1, so
    any statistical drift away from the clean set raises the score.
    """
    feats = np.vstack([brisque_features(p) for p in photos])
    lo = feats.min(axis=0) - 0.5
    hi = feats.max(axis=0) + 0.5
    scaled = -1.0 + 2.0 * (feats - lo) / (hi - lo)
    return SVRModel(
        support_vectors=scaled,
        dual_coefs=[-1.0] * len(photos),
        gamma=0.05,
        rho=0.0,
        feature_min=lo,
        feature_max=hi,
    )
