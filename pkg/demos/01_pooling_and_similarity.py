"""
Pooling backbone maps and building a similarity matrix
======================================================

Two backbone maps of different resolution are pooled to a common 7x7 grid
and compared cell by cell with cosine similarity.
"""

import numpy as np

from houghcl import BackboneMap, adaptive_avg_pool, argmax_match, similarity_matrix

rng = np.random.default_rng(0)

# a 28x28 map with 16 channels; the second "view" sees the same content
# plus a little noise
f1 = BackboneMap(rng.standard_normal((28, 28, 16)))
f2 = BackboneMap(f1.data + 0.1 * rng.standard_normal((28, 28, 16)))

# bins follow floor(i*H/S) .. ceil((i+1)*H/S)-1, so 28 -> 7 uses 4x4 blocks
p1 = adaptive_avg_pool(f1, 7, 7)
p2 = adaptive_avg_pool(f2, 7, 7)
print("pooled shape:", p1.shape)

# 49x49 cosine similarities, cells flattened row-major
delta = similarity_matrix(p1, p2)
print("similarity range: [%.3f, %.3f]" % (delta.min(), delta.max()))

# with nearly identical content the winner-takes-all rule recovers the identity
corr = argmax_match(delta)
print("identity recovered for %d of 49 cells" % np.sum(corr.keys == np.arange(49)))

# a pooled map of non-dividing size: 28 -> 5 gives overlapping bins
print("5x5 pooled shape:", adaptive_avg_pool(f1, 5, 5).shape)
