"""Handwriting-based Parkinson's disease classification toolkit.

Modality-separated feature extraction from pen-tablet recordings
(on-surface, in-air, pressure), Mann-Whitney feature filtering, and
RBF-SVM evaluation with cross-validated AUC.
"""

__version__ = "0.1.0"

from .ingest import (  # noqa: F401
    IN_AIR, MODALITIES, ON_SURFACE, P_MAX, PRESSURE,
    ModalityView, PenRecording, PenSample, StrokeSegment,
    parse_recording, project_modality, segment_strokes,
    synthesize_cohort, write_recording,
)
from .featurize import (  # noqa: F401
    FeatureMatrix, FilterReport, apply_functionals, assemble,
    extract_recording_features, filter_features, mann_whitney_u,
)
from .svm import (  # noqa: F401
    CvReport, EvaluationReport, RbfParams, TrainedModel, auc,
    evaluate_matrices, grid_search_cv, rbf_kernel, train_smo,
)
