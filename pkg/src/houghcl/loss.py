"""Dense and global InfoNCE losses, their mixture, and gradient checking.

Logits are raw dot products divided by the temperature; inputs are not
re-normalized. Negatives are a shared list of pooled vectors (see
:func:`houghcl.features.global_pool`). Keys and negatives are constants for
the gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, NumericFailure
from .features import BackboneMap
from .matchers import CorrespondenceMap


@dataclass(frozen=True, eq=False)
class LossTerms:
    """Loss values for one view pair.

    ``per_location[m]`` is the term of query ``locations[m]``; unmatched
    queries have no entry. ``global_term``/``lam``/``total`` stay ``None``
    until :meth:`with_global` is applied.
    """

    dense_term: float
    per_location: np.ndarray
    locations: np.ndarray
    tau: float
    global_term: float | None = None
    lam: float | None = None
    total: float | None = None

    def with_global(self, global_term: float, lam: float = 0.5) -> "LossTerms":
        return replace(
            self, global_term=global_term, lam=lam,
            total=total_loss(global_term, self.dense_term, lam),
        )


def _check_tau(tau):
    if not tau > 0:
        raise InvalidArgumentError(f"tau must be > 0, got {tau}")


def _vectors(x) -> np.ndarray:
    if isinstance(x, BackboneMap):
        return x.vectors
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"expected (n, dim) vectors, got shape {arr.shape}")
    return arr


def _negatives(negatives, dim) -> np.ndarray:
    neg = np.asarray(negatives, dtype=np.float64)
    if neg.size == 0:
        return np.zeros((0, dim))
    neg = neg.reshape(-1, neg.shape[-1])
    if neg.shape[1] != dim:
        raise InvalidArgumentError(f"negatives have dim {neg.shape[1]}, expected {dim}")
    return neg


def _infonce_rows(q: np.ndarray, pos: np.ndarray, neg: np.ndarray, tau: float):
    """Row-wise ``-log softmax`` of the positive logit, and the softmax itself."""
    logits = np.concatenate([np.sum(q * pos, axis=1, keepdims=True), q @ neg.T], axis=1) / tau
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    z = expd.sum(axis=1)
    return np.log(z) - shifted[:, 0], expd / z[:, None]


def _prepare(queries, keys, corr, negatives, tau):
    _check_tau(tau)
    q = _vectors(queries)
    k = _vectors(keys)
    if q.shape[1] != k.shape[1]:
        raise InvalidArgumentError("queries and keys differ in dim")
    if corr.n_query != len(q):
        raise InvalidArgumentError(f"correspondence covers {corr.n_query} queries, grid has {len(q)}")
    if corr.n_key != len(k):
        raise InvalidArgumentError(f"correspondence indexes {corr.n_key} keys, grid has {len(k)}")
    locs = np.flatnonzero(corr.present)
    if len(locs) == 0:
        raise DegenerateInputError("no query has a positive key")
    return q, k, locs, _negatives(negatives, q.shape[1])


def dense_contrastive_loss(queries, keys, corr: CorrespondenceMap, negatives, tau: float) -> LossTerms:
    """Mean InfoNCE over matched queries, positive = ``keys[corr.keys[s]]``.

    Averaging is over matched queries only, which is all ``S^2`` of them
    when the correspondence is total.
    """
    q, k, locs, neg = _prepare(queries, keys, corr, negatives, tau)
    per_loc, _ = _infonce_rows(q[locs], k[corr.keys[locs]], neg, tau)
    return LossTerms(float(per_loc.mean()), per_loc, locs, float(tau))


def dense_loss_grad(queries, keys, corr: CorrespondenceMap, negatives, tau: float) -> np.ndarray:
    """Gradient of the dense loss w.r.t. every query vector, ``(n_query, dim)``."""
    q, k, locs, neg = _prepare(queries, keys, corr, negatives, tau)
    pos = k[corr.keys[locs]]
    _, p = _infonce_rows(q[locs], pos, neg, tau)
    expected = p[:, :1] * pos + p[:, 1:] @ neg
    grad = np.zeros_like(q)
    grad[locs] = (expected - pos) / (len(locs) * tau)
    return grad


def global_contrastive_loss(q, k_pos, negatives, tau: float) -> float:
    """Image-level InfoNCE of one query against its positive and the negatives."""
    _check_tau(tau)
    q = np.asarray(q, dtype=np.float64).reshape(1, -1)
    k_pos = np.asarray(k_pos, dtype=np.float64).reshape(1, -1)
    if q.shape != k_pos.shape:
        raise InvalidArgumentError("query and positive key differ in dim")
    loss, _ = _infonce_rows(q, k_pos, _negatives(negatives, q.shape[1]), tau)
    return float(loss[0])


def total_loss(global_term: float, dense_term: float, lam: float = 0.5) -> float:
    """``(1 - lam) * global_term + lam * dense_term``."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidArgumentError(f"lambda must lie in [0, 1], got {lam}")
    return (1.0 - lam) * global_term + lam * dense_term


def finite_diff_check(fun: Callable[[np.ndarray], float], point, grad, eps: float = 1e-5) -> float:
    """Max relative error between ``grad`` and central differences of ``fun``.

    The error of component ``c`` is ``|fd_c - grad_c| / max(1, |grad_c|)``.
    """
    if not eps > 0:
        raise InvalidArgumentError("eps must be > 0")
    x0 = np.array(point, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != x0.shape:
        raise InvalidArgumentError(f"gradient shape {grad.shape} != point shape {x0.shape}")
    flat = x0.reshape(-1)
    fd = np.empty(flat.size)
    for c in range(flat.size):
        x = flat.copy()
        x[c] = flat[c] + eps
        f_plus = fun(x.reshape(x0.shape))
        x[c] = flat[c] - eps
        f_minus = fun(x.reshape(x0.shape))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericFailure(f"non-finite loss when perturbing component {c}")
        fd[c] = (f_plus - f_minus) / (2 * eps)
    g = grad.reshape(-1)
    return float(np.max(np.abs(fd - g) / np.maximum(1.0, np.abs(g)), initial=0.0))


def check_dense_gradient(queries, keys, corr: CorrespondenceMap, negatives, tau: float, eps: float = 1e-5) -> float:
    """Run :func:`finite_diff_check` on the dense loss over all query vectors."""
    q0 = _vectors(queries)

    def fun(q):
        return dense_contrastive_loss(q, keys, corr, negatives, tau).dense_term

    return finite_diff_check(fun, q0, dense_loss_grad(q0, keys, corr, negatives, tau), eps)
