"""Feature grids, adaptive average pooling and cosine similarity.

All grids are stored as ``(rows, cols, dim)`` float64 arrays. Whenever a grid
is flattened to a list of vectors the order is row-major (row index varies
slowest); every ``S_h * S_w``-indexed structure in the package uses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

NORM_EPS = 1e-12


def _as_grid_array(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim != 3:
        raise InvalidArgumentError(f"grid data must be 3-D (rows, cols, dim), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise InvalidArgumentError(f"grid dimensions must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("grid contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BackboneMap:
    """An ``H x W`` grid of ``K``-dimensional backbone features."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _as_grid_array(self.data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def n_cells(self) -> int:
        return self.height * self.width

    @property
    def vectors(self) -> np.ndarray:
        """Row-major ``(n_cells, dim)`` view of the grid."""
        return self.data.reshape(self.n_cells, self.dim)

    @classmethod
    def from_vectors(cls, vectors, height: int, width: int, **kwargs):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != height * width:
            raise InvalidArgumentError(
                f"expected {height * width} vectors, got array of shape {vectors.shape}"
            )
        return cls(vectors.reshape(height, width, vectors.shape[1]), **kwargs)


@dataclass(frozen=True, eq=False)
class FeatureGrid(BackboneMap):
    """An ``S_h x S_w`` grid of ``E``-dimensional dense embeddings.

    With ``normalized=True`` every nonzero vector must have unit L2 norm
    (checked to 1e-9).
    """

    normalized: bool = False

    def __post_init__(self):
        super().__post_init__()
        if self.normalized:
            norms = np.linalg.norm(self.vectors, axis=1)
            bad = (norms > NORM_EPS) & (np.abs(norms - 1.0) > 1e-9)
            if np.any(bad):
                raise InvalidArgumentError("grid flagged normalized has non-unit vectors")

    def normalize(self) -> "FeatureGrid":
        """Return a copy with every nonzero vector scaled to unit length."""
        return FeatureGrid.from_vectors(
            _unit_rows(self.vectors), self.height, self.width, normalized=True
        )


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    safe = np.where(norms < NORM_EPS, 1.0, norms)
    return np.where(norms < NORM_EPS, 0.0, vectors / safe)


def adaptive_avg_pool(src: BackboneMap, out_h: int, out_w: int) -> BackboneMap:
    """Downsample ``src`` to ``out_h x out_w`` cells by adaptive averaging.

    Output cell ``(i, j)`` averages input rows ``floor(i*H/out_h)`` to
    ``ceil((i+1)*H/out_h) - 1`` and the analogous column range. Bins may
    overlap when the sizes do not divide.
    """
    H, W = src.height, src.width
    if not (1 <= out_h <= H and 1 <= out_w <= W):
        raise InvalidArgumentError(
            f"output size ({out_h}, {out_w}) must lie in [1, ({H}, {W})]"
        )
    out = np.empty((out_h, out_w, src.dim))
    for i in range(out_h):
        r0, r1 = (i * H) // out_h, -((-(i + 1) * H) // out_h)
        for j in range(out_w):
            c0, c1 = (j * W) // out_w, -((-(j + 1) * W) // out_w)
            out[i, j] = src.data[r0:r1, c0:c1].mean(axis=(0, 1))
    return BackboneMap(out)


def cosine_similarity(u, v) -> float:
    """Cosine similarity of two vectors, 0 if either has norm below 1e-12."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise InvalidArgumentError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < NORM_EPS or nv < NORM_EPS:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def similarity_matrix(a: BackboneMap, b: BackboneMap) -> np.ndarray:
    """Cosine similarity between every cell of ``a`` and every cell of ``b``.

    Returns an ``(a.n_cells, b.n_cells)`` array indexed by row-major cell
    order. Zero vectors have similarity 0 with everything.
    """
    if a.dim != b.dim:
        raise InvalidArgumentError(f"feature dims differ: {a.dim} vs {b.dim}")
    sim = _unit_rows(a.vectors) @ _unit_rows(b.vectors).T
    return np.clip(sim, -1.0, 1.0)


def global_pool(g: BackboneMap) -> np.ndarray:
    """Per-component mean over all cells of a grid."""
    return g.vectors.mean(axis=0)
