"""Block-scrambling image cipher whose grid HOG features are an exact,
key-derived permutation of the plain-image features, plus the SVM and
EER machinery to demonstrate that classification is unaffected."""

from .cipher import (
    BlockTransform,
    CipherPlan,
    KeySet,
    apply_plan,
    apply_transform,
    decrypt,
    derive_plan,
    encrypt,
    identity_plan,
    invert_plan,
    negate_block,
)
from .equivalence import (
    EquivalenceConditionError,
    EquivalenceReport,
    FeaturePermutation,
    apply_permutation,
    bin_permutation,
    feature_permutation,
    relabel_multiset,
    verify_equivalence,
)
from .evaluation import ScoreSet, eer, eer_from_scores, far_frr_curve, split_dataset
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    fixture_images,
    ingest_dataset,
    make_fixture,
    run_experiment,
)
from .hog import (
    HogParams,
    assemble_and_normalize,
    bin_votes,
    cell_histograms,
    differential_maps,
    extract,
    gradient_maps,
    grid_differentials,
    integer_vote_multiset,
    layout_for,
    load_features,
    save_features,
)
from .image import (
    DimensionError,
    PgmError,
    load_pgm,
    load_pgm_file,
    merge_blocks,
    save_pgm,
    save_pgm_file,
    split_blocks,
)
from .prng import SplitMix64, permutation
from .svm import (
    KernelSpec,
    MultiModel,
    SvmModel,
    TrainConfig,
    decision,
    default_gamma,
    kernel_eval,
    kernel_matrix,
    load_model,
    predict,
    save_model,
    scores,
    train_binary_smo,
    train_one_vs_rest,
)

__version__ = "0.1.0"
