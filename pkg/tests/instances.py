"""Constructed test instances shared by several test modules."""

import numpy as np

from houghcl import FeatureGrid, similarity_matrix


def unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def planted_translation(seed, s=7, dim=32, corrupt_frac=0.1, sigma=0.05):
    """Two grids related by a one-column shift, with planted spurious matches.

    Query ``(r, c)`` truly matches key ``(r, c - 1)`` (offset ``dx = -1``) for
    ``c >= 1``; true keys are noisy copies of their queries. For a
    ``corrupt_frac`` share of matched queries an exact copy of the query is
    written into a geometrically inconsistent key cell, so similarity alone
    prefers the wrong key.

    Returns ``(grid_a, grid_b, truth, corrupted)`` where ``truth[q]`` is the
    planted key index (or -1) and ``corrupted`` lists the corrupted queries.
    """
    rng = np.random.default_rng(seed)
    n = s * s
    a = unit_rows(rng, n, dim)
    b = unit_rows(rng, n, dim)
    truth = np.full(n, -1)
    for q in range(n):
        r, c = divmod(q, s)
        if c >= 1:
            k = r * s + c - 1
            noisy = a[q] + sigma * rng.standard_normal(dim)
            b[k] = noisy / np.linalg.norm(noisy)
            truth[q] = k
    matched = np.flatnonzero(truth >= 0)
    n_corrupt = max(1, int(round(corrupt_frac * n)))
    corrupted, spurious, reserved = [], set(), set()
    for q in rng.permutation(matched):
        if len(corrupted) == n_corrupt:
            break
        if truth[q] in spurious:
            continue
        reserved.add(truth[q])
        options = [k for k in range(n) if k not in reserved]
        k = options[rng.integers(len(options))]
        b[k] = a[q]
        spurious.add(k)
        reserved.add(k)
        corrupted.append(q)
    # queries whose true key was overwritten lose their planted partner
    for q in matched:
        if truth[q] in spurious:
            truth[q] = -1
    ga = FeatureGrid.from_vectors(a, s, s, normalized=True)
    gb = FeatureGrid.from_vectors(b, s, s, normalized=True)
    return ga, gb, truth, np.array(sorted(corrupted))


def planted_delta(seed, s=7, dim=32, corrupt_frac=0.1):
    """Similarity-level planted instance: spurious entries set to exactly 1.0."""
    rng = np.random.default_rng(seed)
    n = s * s
    a = unit_rows(rng, n, dim)
    b = unit_rows(rng, n, dim)
    truth = np.full(n, -1)
    for q in range(n):
        r, c = divmod(q, s)
        if c >= 1:
            noisy = a[q] + 0.05 * rng.standard_normal(dim)
            b[r * s + c - 1] = noisy / np.linalg.norm(noisy)
            truth[q] = r * s + c - 1
    delta = similarity_matrix(
        FeatureGrid.from_vectors(a, s, s), FeatureGrid.from_vectors(b, s, s)
    )
    matched = np.flatnonzero(truth >= 0)
    corrupted = np.sort(rng.choice(matched, max(1, int(round(corrupt_frac * n))), replace=False))
    spurious = {}
    for q in corrupted:
        options = [k for k in range(n) if k != truth[q]]
        k = options[rng.integers(len(options))]
        delta[q, k] = 1.0
        spurious[int(q)] = k
    return delta, truth, corrupted, spurious
