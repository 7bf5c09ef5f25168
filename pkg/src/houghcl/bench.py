"""Synthetic robustness benchmark for the dense matchers.

A trial draws a latent field of random unit vectors (optionally cluttered with
repeated distractor vectors), renders two grid views of it through a random
view pair (optionally noisy and with corrupted outlier cells), matches the
views and scores the result against the geometric oracle.

Randomness for seed ``k`` of a run with master seed ``m`` comes from
``SeedSequence(m, spawn_key=(k, stream))`` with one stream each for the view
pair, the scene and the two renders. All scenarios of the same seed therefore
share views and base draws, so their differences isolate the dialed factor.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import DegenerateInputError, GenerationFailure, InvalidArgumentError
from .features import FeatureGrid, similarity_matrix
from .geometry import (
    GroundTruthMap,
    ViewTransform,
    ground_truth_match,
    sample_lattice_view_pair,
    sample_view_pair,
)
from .matchers import MATCHERS, CorrespondenceMap, HoughConfig, run_matcher

log = logging.getLogger(__name__)

_VIEW, _SCENE, _RENDER_A, _RENDER_B = range(4)


@dataclass(frozen=True)
class SceneSpec:
    latent_h: int = 28
    latent_w: int = 28
    dim: int = 32
    clutter_frac: float = 0.0
    clutter_pool: int = 4
    seed: object = 0

    def __post_init__(self):
        if not 0.0 <= self.clutter_frac <= 1.0:
            raise InvalidArgumentError("clutter_frac must lie in [0, 1]")
        if min(self.latent_h, self.latent_w, self.dim, self.clutter_pool) < 1:
            raise InvalidArgumentError("latent dims, dim and clutter_pool must be >= 1")


@dataclass(frozen=True)
class RenderSpec:
    s_h: int = 7
    s_w: int = 7
    noise_sigma: float = 0.0
    outlier_frac: float = 0.0
    seed: object = 0

    def __post_init__(self):
        if not 0.0 <= self.outlier_frac <= 1.0:
            raise InvalidArgumentError("outlier_frac must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise InvalidArgumentError("noise_sigma must be >= 0")
        if min(self.s_h, self.s_w) < 1:
            raise InvalidArgumentError("grid dims must be >= 1")


@dataclass(frozen=True)
class BenchRecord:
    seed: int
    matcher: str
    s: int
    outlier_frac: float
    clutter_frac: float
    noise_sigma: float
    overlap_cells: int
    accuracy: float
    mean_score: float


def _random_directions(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _count(frac, n):
    return int(np.floor(frac * n + 0.5))


def generate_scene(spec: SceneSpec) -> np.ndarray:
    """Latent ``(latent_h, latent_w, dim)`` field of unit vectors.

    A ``clutter_frac`` share of cells is overwritten by vectors from a small
    pool of shared distractors, so clutter shows up as repeated content.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.latent_h * spec.latent_w
    cells = _random_directions(rng, n, spec.dim)
    pool = _random_directions(rng, spec.clutter_pool, spec.dim)
    choice = rng.integers(spec.clutter_pool, size=n)
    order = rng.permutation(n)
    cluttered = order[: _count(spec.clutter_frac, n)]
    cells[cluttered] = pool[choice[cluttered]]
    return cells.reshape(spec.latent_h, spec.latent_w, spec.dim)


def render_view(latent: np.ndarray, t: ViewTransform, r: RenderSpec) -> FeatureGrid:
    """Sample the latent field on a view's grid, then add noise and outliers.

    Each cell takes the latent cell nearest to its image-space center (ties on
    a latent boundary resolve upward), gains isotropic Gaussian noise and is
    renormalized; finally an ``outlier_frac`` share of cells is replaced by
    fresh random directions.
    """
    lat_h, lat_w, dim = latent.shape
    if lat_h < r.s_h or lat_w < r.s_w:
        raise InvalidArgumentError("latent field must be at least as large as the grid")
    rng = np.random.default_rng(r.seed)
    n = r.s_h * r.s_w
    rows, cols = np.divmod(np.arange(n), r.s_w)
    x, y = t.to_image((cols + 0.5) / r.s_w, (rows + 0.5) / r.s_h)
    # +1e-9 makes boundary ties resolve identically in both views
    li = np.clip(np.floor(y * lat_h + 1e-9).astype(np.int64), 0, lat_h - 1)
    lj = np.clip(np.floor(x * lat_w + 1e-9).astype(np.int64), 0, lat_w - 1)
    vecs = latent[li, lj].copy()

    noise = rng.standard_normal((n, dim))
    fresh = _random_directions(rng, n, dim)
    order = rng.permutation(n)
    if r.noise_sigma > 0:
        vecs += r.noise_sigma * noise
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    outliers = order[: _count(r.outlier_frac, n)]
    vecs[outliers] = fresh[outliers]
    return FeatureGrid.from_vectors(vecs, r.s_h, r.s_w, normalized=True)


def score_correspondence(corr: CorrespondenceMap, oracle: GroundTruthMap, epsilon: int = 0):
    """Accuracy and mean score over the queries the oracle can place.

    A prediction is correct when its key cell is within Chebyshev distance
    ``epsilon`` of the oracle's cell; an absent prediction is wrong.
    Returns ``(accuracy, mean_score, overlap_cells)``.
    """
    present = oracle.present
    n = int(np.count_nonzero(present))
    if n == 0:
        raise DegenerateInputError("oracle has no overlap cells")
    pred = corr.keys[present]
    truth = oracle.keys[present]
    pr, pc = np.divmod(pred, oracle.s_w)
    tr, tc = np.divmod(truth, oracle.s_w)
    cheb = np.maximum(np.abs(pr - tr), np.abs(pc - tc))
    hit = (pred >= 0) & (cheb <= epsilon)
    scores = corr.scores[present]
    finite = scores[np.isfinite(scores)]
    mean_score = float(finite.mean()) if len(finite) else float("nan")
    return float(np.count_nonzero(hit)) / n, mean_score, n


def evaluate_matcher(
    matcher: str,
    grid_a: FeatureGrid,
    grid_b: FeatureGrid,
    t1: ViewTransform,
    t2: ViewTransform,
    oracle: GroundTruthMap | None = None,
    epsilon: int = 0,
    hough: HoughConfig = HoughConfig(),
    radius: float = 1.5,
):
    """Match two rendered views and score the result; see :func:`score_correspondence`."""
    s_h, s_w = grid_a.height, grid_a.width
    if oracle is None:
        oracle = ground_truth_match(t1, t2, s_h, s_w)
    delta = similarity_matrix(grid_a, grid_b)
    corr = run_matcher(matcher, delta, s_h, s_w, hough=hough, t1=t1, t2=t2, radius=radius)
    return score_correspondence(corr, oracle, epsilon)


@dataclass(frozen=True)
class Scenario:
    matcher: str
    outlier_frac: float = 0.0
    clutter_frac: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.matcher not in MATCHERS:
            raise InvalidArgumentError(f"unknown matcher {self.matcher!r}")


def scenario_grid(matchers, outlier_fracs=(0.0,), clutter_fracs=(0.0,), noise_sigmas=(0.0,)):
    """Cartesian product of factor levels, matcher varying fastest."""
    return [
        Scenario(m, o, c, n)
        for o, c, n, m in product(outlier_fracs, clutter_fracs, noise_sigmas, matchers)
    ]


@dataclass(frozen=True)
class BenchSettings:
    s: int = 7
    dim: int = 32
    latent_factor: int = 4
    clutter_pool: int = 4
    min_overlap: float = 0.3
    scale_range: tuple[float, float] = (0.5, 1.0)
    flip_prob: float = 0.5
    view_mode: str = "lattice"
    hough: HoughConfig = HoughConfig()
    radius: float = 1.5
    epsilon: int = 0

    def __post_init__(self):
        if self.view_mode not in ("lattice", "free"):
            raise InvalidArgumentError("view_mode must be 'lattice' or 'free'")
        if self.s < 1 or self.dim < 1 or self.latent_factor < 1:
            raise InvalidArgumentError("s, dim and latent_factor must be >= 1")

    @property
    def latent(self) -> int:
        return self.latent_factor * self.s


@dataclass
class ExperimentResult:
    records: list[BenchRecord]
    skipped: list[tuple[int, int, str]] = field(default_factory=list)

    def mean_accuracy(self, matcher: str, **levels) -> float:
        accs = [
            r.accuracy for r in self.records
            if r.matcher == matcher and all(getattr(r, k) == v for k, v in levels.items())
        ]
        return float(np.mean(accs)) if accs else float("nan")


def _stream(master_seed: int, seed: int, which: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(seed, which))


def trial_views(seed: int, master_seed: int, settings: BenchSettings):
    ss = _stream(master_seed, seed, _VIEW)
    s, lat = settings.s, settings.latent
    if settings.view_mode == "lattice":
        return sample_lattice_view_pair(
            ss, s, s, lat, lat, settings.min_overlap, settings.scale_range, settings.flip_prob
        )
    return sample_view_pair(ss, settings.min_overlap, settings.scale_range, settings.flip_prob)


def render_trial(scenario: Scenario, seed: int, master_seed: int, settings: BenchSettings, views=None):
    """Views, rendered grids and oracle for one (scenario, seed) trial."""
    t1, t2 = views if views is not None else trial_views(seed, master_seed, settings)
    s, lat = settings.s, settings.latent
    latent = generate_scene(SceneSpec(
        lat, lat, settings.dim, scenario.clutter_frac, settings.clutter_pool,
        _stream(master_seed, seed, _SCENE),
    ))
    grids = [
        render_view(latent, t, RenderSpec(
            s, s, scenario.noise_sigma, scenario.outlier_frac, _stream(master_seed, seed, which),
        ))
        for t, which in ((t1, _RENDER_A), (t2, _RENDER_B))
    ]
    return t1, t2, grids[0], grids[1], ground_truth_match(t1, t2, s, s)


def run_experiment(scenarios, n_seeds: int, master_seed: int = 0, settings: BenchSettings = BenchSettings()) -> ExperimentResult:
    """Run every scenario on seeds ``0 .. n_seeds-1``.

    Records come out ordered by scenario, then seed. Trials whose view pair
    cannot be generated or that have no overlap are skipped and listed in
    ``ExperimentResult.skipped``.
    """
    scenarios = list(scenarios)
    if not scenarios or n_seeds < 1:
        raise InvalidArgumentError("need at least one scenario and one seed")
    views: dict[int, tuple | Exception] = {}
    result = ExperimentResult([])
    for idx, sc in enumerate(scenarios):
        for seed in range(n_seeds):
            if seed not in views:
                try:
                    views[seed] = trial_views(seed, master_seed, settings)
                except GenerationFailure as exc:
                    views[seed] = exc
            if isinstance(views[seed], Exception):
                result.skipped.append((idx, seed, str(views[seed])))
                continue
            t1, t2, ga, gb, oracle = render_trial(sc, seed, master_seed, settings, views[seed])
            try:
                acc, mean_score, n = evaluate_matcher(
                    sc.matcher, ga, gb, t1, t2, oracle,
                    settings.epsilon, settings.hough, settings.radius,
                )
            except DegenerateInputError as exc:
                result.skipped.append((idx, seed, str(exc)))
                continue
            result.records.append(BenchRecord(
                seed, sc.matcher, settings.s, sc.outlier_frac, sc.clutter_frac,
                sc.noise_sigma, n, acc, mean_score,
            ))
    if result.skipped:
        log.warning("skipped %d of %d trials", len(result.skipped), len(scenarios) * n_seeds)
    return result
