"""Dense positive-pair extraction for dense contrastive learning.

Winner-takes-all matching, warped-distance thresholding and Hough-space
consensus matching over cosine similarity matrices, the dense InfoNCE loss
with its analytic gradient, and a synthetic benchmark measuring robustness to
background clutter and outlier cells.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateInputError,
    FormatError,
    GenerationFailure,
    InvalidArgumentError,
    NumericFailure,
)
from .features import (
    BackboneMap,
    FeatureGrid,
    adaptive_avg_pool,
    cosine_similarity,
    global_pool,
    similarity_matrix,
)
from .geometry import (
    GroundTruthMap,
    ViewTransform,
    cell_center_in_image,
    crop_iou,
    ground_truth_match,
    sample_lattice_view_pair,
    sample_view_pair,
)
from .matchers import (
    CorrespondenceMap,
    HoughAccumulator,
    HoughConfig,
    argmax_match,
    hough_match,
    hough_rescore,
    hough_vote,
    run_matcher,
    warped_threshold_match,
)
from .loss import (
    LossTerms,
    check_dense_gradient,
    dense_contrastive_loss,
    dense_loss_grad,
    finite_diff_check,
    global_contrastive_loss,
    total_loss,
)
from .bench import (
    BenchRecord,
    BenchSettings,
    RenderSpec,
    Scenario,
    SceneSpec,
    evaluate_matcher,
    generate_scene,
    render_view,
    run_experiment,
    scenario_grid,
    score_correspondence,
)
