"""Geometry of two augmented views and the ground-truth correspondence oracle.

A view is an axis-aligned crop of the unit image square, optionally mirrored
horizontally. View-local coordinates ``(u, v)`` live in ``[0, 1]^2``; a grid of
``s_h x s_w`` cells tiles that square.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import GenerationFailure, InvalidArgumentError

MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class ViewTransform:
    crop_x0: float = 0.0
    crop_y0: float = 0.0
    crop_w: float = 1.0
    crop_h: float = 1.0
    hflip: bool = False

    def __post_init__(self):
        if not (0.0 <= self.crop_x0 <= 1.0 and 0.0 <= self.crop_y0 <= 1.0):
            raise InvalidArgumentError("crop origin must lie in [0, 1]")
        if not (0.0 < self.crop_w <= 1.0 and 0.0 < self.crop_h <= 1.0):
            raise InvalidArgumentError("crop size must lie in (0, 1]")
        if self.crop_x0 + self.crop_w > 1.0 + 1e-12 or self.crop_y0 + self.crop_h > 1.0 + 1e-12:
            raise InvalidArgumentError("crop extends past the image border")
        object.__setattr__(self, "hflip", bool(self.hflip))

    @classmethod
    def identity(cls) -> "ViewTransform":
        return cls()

    def to_image(self, u, v):
        """Map view-local coordinates to normalized image coordinates."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        if self.hflip:
            u = 1.0 - u
        return self.crop_x0 + u * self.crop_w, self.crop_y0 + v * self.crop_h

    def to_local(self, x, y):
        """Inverse of :meth:`to_image`."""
        u = (np.asarray(x, dtype=np.float64) - self.crop_x0) / self.crop_w
        v = (np.asarray(y, dtype=np.float64) - self.crop_y0) / self.crop_h
        if self.hflip:
            u = 1.0 - u
        return u, v

    def rect(self) -> tuple[float, float, float, float]:
        return self.crop_x0, self.crop_y0, self.crop_x0 + self.crop_w, self.crop_y0 + self.crop_h

    def to_dict(self) -> dict:
        return asdict(self)


def crop_iou(t1: ViewTransform, t2: ViewTransform) -> float:
    """Intersection-over-union of the two crop rectangles in image space."""
    ax0, ay0, ax1, ay1 = t1.rect()
    bx0, by0, bx1, by1 = t2.rect()
    iw = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    ih = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = iw * ih
    union = t1.crop_w * t1.crop_h + t2.crop_w * t2.crop_h - inter
    return inter / union


def _cell_rc(cell, s_h: int, s_w: int) -> tuple[int, int]:
    if isinstance(cell, (tuple, list)):
        i, j = (int(c) for c in cell)
        if not (0 <= i < s_h and 0 <= j < s_w):
            raise InvalidArgumentError(f"cell {cell} outside {s_h}x{s_w} grid")
        return i, j
    cell = int(cell)
    if not 0 <= cell < s_h * s_w:
        raise InvalidArgumentError(f"cell index {cell} outside [0, {s_h * s_w})")
    return divmod(cell, s_w)


def cell_centers_local(s_h: int, s_w: int) -> tuple[np.ndarray, np.ndarray]:
    """View-local ``(u, v)`` centers of all cells in row-major order."""
    rows, cols = np.divmod(np.arange(s_h * s_w), s_w)
    return (cols + 0.5) / s_w, (rows + 0.5) / s_h


def cell_center_in_image(t: ViewTransform, s_h: int, s_w: int, cell) -> tuple[float, float]:
    """Image-space center of a grid cell; ``cell`` is a flat index or ``(row, col)``."""
    i, j = _cell_rc(cell, s_h, s_w)
    x, y = t.to_image((j + 0.5) / s_w, (i + 0.5) / s_h)
    return float(x), float(y)


def warp_points(t1: ViewTransform, t2: ViewTransform, s_h: int, s_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Centers of view-1 cells expressed in view-2 cell coordinates ``(col, row)``.

    Cell ``(i, j)`` of view 2 covers ``[j, j+1) x [i, i+1)`` in these units.
    """
    u, v = cell_centers_local(s_h, s_w)
    x, y = t1.to_image(u, v)
    u2, v2 = t2.to_local(x, y)
    return u2 * s_w, v2 * s_h


@dataclass(frozen=True, eq=False)
class GroundTruthMap:
    """Oracle correspondence; ``keys[q] == -1`` marks a query outside view 2."""

    s_h: int
    s_w: int
    keys: np.ndarray
    displacement: np.ndarray

    @property
    def present(self) -> np.ndarray:
        return self.keys >= 0

    @property
    def n_present(self) -> int:
        return int(np.count_nonzero(self.present))


def ground_truth_match(t1: ViewTransform, t2: ViewTransform, s_h: int, s_w: int) -> GroundTruthMap:
    """Nearest view-2 cell for every view-1 cell center that lands inside view 2."""
    px, py = warp_points(t1, t2, s_h, s_w)
    inside = (px >= 0) & (px < s_w) & (py >= 0) & (py < s_h)
    col = np.floor(px).astype(np.int64)
    row = np.floor(py).astype(np.int64)
    keys = np.where(inside, row * s_w + col, -1)
    disp = np.hypot(px - (col + 0.5), py - (row + 0.5))
    disp = np.where(inside, disp, np.nan)
    return GroundTruthMap(s_h, s_w, keys, disp)


def _check_sampler_args(min_overlap, scale_range, flip_prob):
    lo, hi = scale_range
    if not 0.0 < min_overlap <= 1.0:
        raise InvalidArgumentError("min_overlap must lie in (0, 1]")
    if not (0.0 < lo <= hi <= 1.0):
        raise InvalidArgumentError("scale_range must satisfy 0 < lo <= hi <= 1")
    if not 0.0 <= flip_prob <= 1.0:
        raise InvalidArgumentError("flip_prob must lie in [0, 1]")
    return lo, hi


def sample_view_pair(rng_seed, min_overlap=0.3, scale_range=(0.5, 1.0), flip_prob=0.5):
    """Draw two random crops whose rectangles overlap with IoU >= ``min_overlap``.

    Side lengths are uniform in ``scale_range`` (independently per side and
    per view), origins uniform over valid positions and flips independent.
    ``rng_seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    lo, hi = _check_sampler_args(min_overlap, scale_range, flip_prob)
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_REJECTIONS):
        views = []
        for _ in range(2):
            w, h = rng.uniform(lo, hi, size=2)
            x0 = rng.uniform(0.0, 1.0 - w)
            y0 = rng.uniform(0.0, 1.0 - h)
            flip = bool(rng.random() < flip_prob)
            views.append(ViewTransform(float(x0), float(y0), float(w), float(h), flip))
        if crop_iou(*views) >= min_overlap:
            return views[0], views[1]
    raise GenerationFailure(
        f"no view pair with IoU >= {min_overlap} after {MAX_REJECTIONS} draws"
    )


def _lattice_spans(s: int, latent: int, lo: float, hi: float) -> list[int]:
    # span = latent cells per view cell; crop side = span * s / latent
    return [a for a in range(1, latent // s + 1) if lo - 1e-12 <= a * s / latent <= hi + 1e-12]


def sample_lattice_view_pair(
    rng_seed,
    s_h: int,
    s_w: int,
    latent_h: int,
    latent_w: int,
    min_overlap=0.3,
    scale_range=(0.5, 1.0),
    flip_prob=0.5,
):
    """Draw two crops that are whole-cell translations of each other.

    Both views share a crop size spanning an integer number of latent cells
    per grid cell, and their origins sit on that cell lattice. Under
    nearest-cell sampling every overlapping view-1 cell then sees exactly the
    latent cell of its ground-truth partner, which is what makes clean
    matching accuracy exactly 1.
    """
    lo, hi = _check_sampler_args(min_overlap, scale_range, flip_prob)
    spans_x = _lattice_spans(s_w, latent_w, lo, hi)
    spans_y = _lattice_spans(s_h, latent_h, lo, hi)
    if not spans_x or not spans_y:
        raise GenerationFailure(
            f"no lattice crop size within scale_range {scale_range} for grid "
            f"{s_h}x{s_w} on latent {latent_h}x{latent_w}"
        )
    rng = np.random.default_rng(rng_seed)
    for _ in range(MAX_REJECTIONS):
        ax = spans_x[rng.integers(len(spans_x))]
        ay = spans_y[rng.integers(len(spans_y))]
        views = []
        for _ in range(2):
            mx = rng.integers((latent_w - ax * s_w) // ax + 1)
            my = rng.integers((latent_h - ay * s_h) // ay + 1)
            flip = bool(rng.random() < flip_prob)
            views.append(ViewTransform(
                float(mx * ax / latent_w), float(my * ay / latent_h),
                ax * s_w / latent_w, ay * s_h / latent_h, flip,
            ))
        if crop_iou(*views) >= min_overlap:
            return views[0], views[1]
    raise GenerationFailure(
        f"no lattice view pair with IoU >= {min_overlap} after {MAX_REJECTIONS} draws"
    )
