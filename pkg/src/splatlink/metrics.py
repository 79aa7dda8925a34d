"""Scalar image measures: MSE, PSNR, and the keypoint matching loss.

The matching loss pairs Harris corners from the camera image with corners
from the rendered image by normalized cross-correlation of luminance
patches, keeping mutual-best pairs only.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import Image, check_same_shape

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

PSNR_INF = float("inf")


class DomainError(ValueError):
    pass


class InsufficientMatches(RuntimeError):
    """Fewer mutual-best keypoint matches than cfg.min_matches."""


@dataclass(frozen=True)
class Keypoint:
    position: np.ndarray  # (x, y) pixels
    response: float


@dataclass(frozen=True)
class MatchConfig:
    target_count: int = 20   # keypoints kept per image
    patch_radius: int = 5
    min_matches: int = 8

    def __post_init__(self):
        if not (self.target_count >= self.min_matches >= 4):
            raise ValueError("need target_count >= min_matches >= 4")


def mse(a: Image, b: Image) -> float:
    """Mean squared intensity difference over all pixel-channel samples."""
    check_same_shape(a, b)
    d = a.pixels - b.pixels
    return float(np.mean(d * d))


def psnr(mse_value: float) -> float:
    """10 log10(1 / mse) with peak intensity 1; +inf for a zero mse."""
    if mse_value < 0:
        raise DomainError("mse must be >= 0")
    if mse_value == 0:
        return PSNR_INF
    return float(10.0 * np.log10(1.0 / mse_value))


def luminance(img: Image):
    return img.pixels @ LUMA_WEIGHTS


def detect_keypoints(img: Image, cfg: MatchConfig = MatchConfig()):
    """Harris corners on luminance, 3x3 non-max suppressed, top-M by response.

    Detections are kept at least patch_radius away from the border so the
    matcher always has a full patch.  Ties break by (row, col).
    """
    r = cfg.patch_radius
    if img.width < 2 * r + 1 or img.height < 2 * r + 1:
        raise ValueError("image smaller than one correlation patch")
    y = luminance(img)
    ix = ndimage.sobel(y, axis=1, mode="reflect")
    iy = ndimage.sobel(y, axis=0, mode="reflect")
    sxx = ndimage.gaussian_filter(ix * ix, 1.0, mode="reflect")
    syy = ndimage.gaussian_filter(iy * iy, 1.0, mode="reflect")
    sxy = ndimage.gaussian_filter(ix * iy, 1.0, mode="reflect")
    resp = sxx * syy - sxy * sxy - 0.05 * (sxx + syy) ** 2
    peak = ndimage.maximum_filter(resp, size=3, mode="reflect")
    thresh = 1e-8 * max(float(resp.max()), 0.0) + 1e-12
    mask = (resp >= peak) & (resp > thresh)
    mask[:r, :] = mask[-r:, :] = False
    mask[:, :r] = mask[:, -r:] = False
    rows, cols = np.nonzero(mask)
    order = np.lexsort((cols, rows, -resp[rows, cols]))
    kps = []
    for idx in order[:cfg.target_count]:
        i, j = int(rows[idx]), int(cols[idx])
        kps.append(Keypoint(np.array([float(j), float(i)]), float(resp[i, j])))
    return kps


def _patches(y, kps, r):
    out = np.empty((len(kps), (2 * r + 1) ** 2))
    for n, kp in enumerate(kps):
        j, i = int(kp.position[0]), int(kp.position[1])
        out[n] = y[i - r:i + r + 1, j - r:j + r + 1].ravel()
    out -= out.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    valid = norms[:, 0] > 1e-12
    out = np.divide(out, norms, out=np.zeros_like(out), where=norms > 1e-12)
    return out, valid


def match_keypoints(camera: Image, rendered: Image, cfg: MatchConfig = MatchConfig()):
    """Mutual-best NCC matches as (camera keypoint, rendered keypoint) pairs."""
    check_same_shape(camera, rendered)
    kc = detect_keypoints(camera, cfg)
    kr = detect_keypoints(rendered, cfg)
    if not kc or not kr:
        return []
    pc, vc = _patches(luminance(camera), kc, cfg.patch_radius)
    pr, vr = _patches(luminance(rendered), kr, cfg.patch_radius)
    score = pc @ pr.T
    score[~vc, :] = -np.inf
    score[:, ~vr] = -np.inf
    best_r = np.argmax(score, axis=1)
    best_c = np.argmax(score, axis=0)
    pairs = []
    for i, j in enumerate(best_r):
        if np.isfinite(score[i, j]) and best_c[j] == i:
            pairs.append((kc[i], kr[int(j)]))
    return pairs


def matching_loss(camera: Image, rendered: Image,
                  cfg: MatchConfig = MatchConfig()) -> float:
    """Mean squared pixel distance over retained mutual-best matches."""
    pairs = match_keypoints(camera, rendered, cfg)
    if len(pairs) < cfg.min_matches:
        raise InsufficientMatches(
            f"{len(pairs)} matches < min_matches {cfg.min_matches}")
    d = np.array([a.position - b.position for a, b in pairs])
    return float(np.mean(np.sum(d * d, axis=1)))
