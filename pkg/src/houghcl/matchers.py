"""Dense positive-pair extraction.

Three strategies turn a cosine similarity matrix ``delta`` between two
flattened grids into one positive key per query:

* :func:`argmax_match` -- winner-takes-all over similarity;
* :func:`warped_threshold_match` -- best key within a radius of the query's
  position warped through the known view geometry;
* :func:`hough_match` -- similarity reweighted by consensus over 2-D
  translation offsets, voted in a Hough accumulator.

Grid positions are ``(col, row)`` cell coordinates; offsets are
``pos(key) - pos(query)``. Ties always go to the lowest key index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .geometry import ViewTransform, warp_points


@dataclass(frozen=True, eq=False)
class CorrespondenceMap:
    """Per-query positive key; ``keys[i] == -1`` (score NaN) means absent."""

    keys: np.ndarray
    scores: np.ndarray
    n_key: int

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64)
        scores = np.asarray(self.scores, dtype=np.float64)
        if keys.shape != scores.shape or keys.ndim != 1:
            raise InvalidArgumentError("keys and scores must be 1-D of equal length")
        if np.any((keys < -1) | (keys >= self.n_key)):
            raise InvalidArgumentError(f"key index outside [0, {self.n_key})")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "scores", scores)

    @property
    def n_query(self) -> int:
        return len(self.keys)

    @property
    def present(self) -> np.ndarray:
        return self.keys >= 0

    def __eq__(self, other):
        if not isinstance(other, CorrespondenceMap):
            return NotImplemented
        return (
            self.n_key == other.n_key
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.scores, other.scores, equal_nan=True)
        )


@dataclass(frozen=True)
class HoughConfig:
    """Knobs of the Hough consensus matcher.

    ``top_k=None`` admits every key of every query; ``min_similarity=-1``
    disables similarity pruning.
    """

    bin_width: float = 1.0
    vote_exponent: float = 2.0
    smoothing_radius: int = 0
    top_k: int | None = None
    min_similarity: float = -1.0

    def __post_init__(self):
        if not self.bin_width > 0:
            raise InvalidArgumentError("bin_width must be > 0")
        if not self.vote_exponent >= 1:
            raise InvalidArgumentError("vote_exponent must be >= 1")
        if int(self.smoothing_radius) != self.smoothing_radius or self.smoothing_radius < 0:
            raise InvalidArgumentError("smoothing_radius must be a non-negative integer")
        if self.top_k is not None and self.top_k < 1:
            raise InvalidArgumentError("top_k must be >= 1 or None")
        if not -1.0 <= self.min_similarity <= 1.0:
            raise InvalidArgumentError("min_similarity must lie in [-1, 1]")


@dataclass(frozen=True, eq=False)
class HoughAccumulator:
    """Binned votes over translation offsets.

    ``counts[by, bx]`` holds the bin whose center is offset
    ``((bx - half) * bin_width, (by - half) * bin_width)``. ``half`` includes
    ``pad`` extra bins per side so that smoothing never spills mass outside
    the array.
    """

    counts: np.ndarray
    bin_width: float
    half: int
    pad: int = 0

    def bin_index(self, dx, dy):
        """Array indices ``(by, bx)`` of the bins holding offsets ``(dx, dy)``."""
        bx = np.floor(np.asarray(dx) / self.bin_width + 0.5).astype(np.int64) + self.half
        by = np.floor(np.asarray(dy) / self.bin_width + 0.5).astype(np.int64) + self.half
        return by, bx

    def lookup(self, dx, dy):
        by, bx = self.bin_index(dx, dy)
        return self.counts[by, bx]

    def scaled(self, c: float) -> "HoughAccumulator":
        return HoughAccumulator(self.counts * c, self.bin_width, self.half, self.pad)

    @property
    def total(self) -> float:
        return float(self.counts.sum())


def _check_delta(delta, s_h, s_w) -> np.ndarray:
    delta = np.asarray(delta, dtype=np.float64)
    n = s_h * s_w
    if delta.shape != (n, n):
        raise InvalidArgumentError(f"delta must be {n}x{n} for a {s_h}x{s_w} grid, got {delta.shape}")
    return delta


def grid_offsets(s_h: int, s_w: int) -> tuple[np.ndarray, np.ndarray]:
    """``(dx, dy)`` matrices with entry ``[i, j] = pos(j) - pos(i)``."""
    rows, cols = np.divmod(np.arange(s_h * s_w), s_w)
    return cols[None, :] - cols[:, None], rows[None, :] - rows[:, None]


def _row_argmax(m: np.ndarray) -> CorrespondenceMap:
    keys = np.argmax(m, axis=1)  # first maximum wins
    return CorrespondenceMap(keys, m[np.arange(len(keys)), keys], m.shape[1])


def argmax_match(delta) -> CorrespondenceMap:
    """Winner-takes-all: each query takes its most similar key."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim != 2 or min(delta.shape) < 1:
        raise InvalidArgumentError(f"delta must be a non-empty matrix, got shape {delta.shape}")
    return _row_argmax(delta)


def warped_threshold_match(
    t1: ViewTransform, t2: ViewTransform, s_h: int, s_w: int, delta, radius: float
) -> CorrespondenceMap:
    """Best-similarity key among those within ``radius`` cells of the warped query.

    A query is absent when its warped center falls outside view 2 or no key
    center lies within ``radius`` (inclusive) of it.
    """
    delta = _check_delta(delta, s_h, s_w)
    if radius < 0:
        raise InvalidArgumentError("radius must be >= 0")
    px, py = warp_points(t1, t2, s_h, s_w)
    inside = (px >= 0) & (px < s_w) & (py >= 0) & (py < s_h)
    rows, cols = np.divmod(np.arange(s_h * s_w), s_w)
    dist = np.hypot(cols[None, :] + 0.5 - px[:, None], rows[None, :] + 0.5 - py[:, None])
    candidate = (dist <= radius) & inside[:, None]
    masked = np.where(candidate, delta, -np.inf)
    keys = np.argmax(masked, axis=1)
    ok = candidate[np.arange(len(keys)), keys]
    scores = np.where(ok, delta[np.arange(len(keys)), keys], np.nan)
    return CorrespondenceMap(np.where(ok, keys, -1), scores, delta.shape[1])


def admitted_pairs(delta: np.ndarray, cfg: HoughConfig) -> np.ndarray:
    """Boolean mask of ``(query, key)`` pairs allowed to vote."""
    n_q, n_k = delta.shape
    mask = delta >= cfg.min_similarity
    if cfg.top_k is not None and cfg.top_k < n_k:
        order = np.argsort(-delta, axis=1, kind="stable")[:, : cfg.top_k]
        top = np.zeros_like(mask)
        np.put_along_axis(top, order, True, axis=1)
        mask &= top
    return mask


def smoothing_kernel(radius: int) -> np.ndarray:
    """Triangular ``(2r+1)^2`` kernel over Chebyshev distance, summing to 1."""
    d = np.abs(np.arange(-radius, radius + 1))
    cheb = np.maximum(d[:, None], d[None, :])
    k = 1.0 - cheb / (radius + 1.0)
    return k / k.sum()


def hough_vote(delta, s_h: int, s_w: int, cfg: HoughConfig = HoughConfig()) -> HoughAccumulator:
    """Accumulate ``max(0, delta)^p`` votes at each admitted pair's offset."""
    delta = _check_delta(delta, s_h, s_w)
    r = int(cfg.smoothing_radius)
    extent = max(s_h, s_w) - 1
    half = int(np.floor(extent / cfg.bin_width + 0.5)) + r
    size = 2 * half + 1
    acc = HoughAccumulator(np.zeros((size, size)), cfg.bin_width, half, r)

    mask = admitted_pairs(delta, cfg)
    weights = np.maximum(delta, 0.0) ** cfg.vote_exponent
    dx, dy = grid_offsets(s_h, s_w)
    by, bx = acc.bin_index(dx[mask], dy[mask])
    raw = np.zeros((size, size))
    np.add.at(raw, (by, bx), weights[mask])

    if r == 0:
        counts = raw
    else:
        kernel = smoothing_kernel(r)
        counts = np.zeros_like(raw)
        inner = slice(r, size - r)
        # votes only land in the unpadded core, so shifted adds stay in bounds
        for a in range(-r, r + 1):
            for b in range(-r, r + 1):
                counts[r + a: size - r + a, r + b: size - r + b] += kernel[a + r, b + r] * raw[inner, inner]
    return HoughAccumulator(counts, cfg.bin_width, half, r)


def hough_rescore(delta, acc: HoughAccumulator, s_h: int, s_w: int, cfg: HoughConfig | None = None) -> np.ndarray:
    """Multiply each similarity by the normalized consensus of its offset bin.

    Falls back to ``delta`` unchanged when the accumulator is empty.
    """
    delta = _check_delta(delta, s_h, s_w)
    peak = acc.counts.max()
    if peak <= 0:
        return delta.copy()
    dx, dy = grid_offsets(s_h, s_w)
    return delta * (acc.lookup(dx, dy) / peak)


def hough_match(delta, s_h: int, s_w: int, cfg: HoughConfig = HoughConfig(), acc: HoughAccumulator | None = None) -> CorrespondenceMap:
    """Vote, rescore, then winner-takes-all over the consensus-weighted scores.

    Pass ``acc`` to reuse (or override) a precomputed accumulator.
    """
    delta = _check_delta(delta, s_h, s_w)
    if acc is None:
        acc = hough_vote(delta, s_h, s_w, cfg)
    return _row_argmax(hough_rescore(delta, acc, s_h, s_w, cfg))


MATCHERS = ("argmax", "warped", "hough")


def run_matcher(
    name: str,
    delta,
    s_h: int,
    s_w: int,
    *,
    hough: HoughConfig = HoughConfig(),
    t1: ViewTransform | None = None,
    t2: ViewTransform | None = None,
    radius: float = 1.5,
) -> CorrespondenceMap:
    """Dispatch by matcher name (one of :data:`MATCHERS`)."""
    if name == "argmax":
        return argmax_match(_check_delta(delta, s_h, s_w))
    if name == "hough":
        return hough_match(delta, s_h, s_w, hough)
    if name == "warped":
        if t1 is None or t2 is None:
            raise InvalidArgumentError("warped matcher needs both view transforms")
        return warped_threshold_match(t1, t2, s_h, s_w, delta, radius)
    raise InvalidArgumentError(f"unknown matcher {name!r}; expected one of {MATCHERS}")
