"""Treatment-effect subgroup discovery with mediation-aware estimation.

The heavy lifting lives in the compiled extension ``_medlearn``; this package
re-exports its surface. See the project README for the workflow: estimate
per-unit effects, build the distance matrix, project with t-SNE, cluster,
fit subtype trees, and validate the selection against a null-calibrated
p_leaf threshold.
"""

from ._medlearn import (  # noqa: F401
    CalibrationThreshold,
    Dataset,
    LearnerSpec,
    SubtypeTree,
    calibrate_threshold,
    candidate_ks,
    distance_matrix,
    estimate_caite,
    estimate_catte,
    fit_subtype_tree,
    generate,
    kmeans,
    load_csv,
    load_threshold,
    make_learner,
    mediation_proportion,
    p_leaf,
    project_tsne,
    run_pipeline,
    save_threshold,
    true_effect_surface,
)

__all__ = [
    "CalibrationThreshold",
    "Dataset",
    "LearnerSpec",
    "SubtypeTree",
    "calibrate_threshold",
    "candidate_ks",
    "distance_matrix",
    "estimate_caite",
    "estimate_catte",
    "fit_subtype_tree",
    "generate",
    "kmeans",
    "load_csv",
    "load_threshold",
    "make_learner",
    "mediation_proportion",
    "p_leaf",
    "project_tsne",
    "run_pipeline",
    "save_threshold",
    "true_effect_surface",
]

__version__ = "0.1.0"
