"""End-to-end run in memory: synthesize a cohort, extract the 21
feature matrices, and grid-search an RBF-SVM per cell.

Uses a reduced hyperparameter grid so it finishes in about a minute;
drop c_grid/gamma_grid to run the full 18 x 15 grid.

    python3 demos/03_end_to_end_evaluation.py
"""

from pdhw import evaluate_matrices, synthesize_cohort
from pdhw.cli import extract_matrices

recordings = synthesize_cohort(8, 8, seed=1)
labels = {r.subject_id: r.label for r in recordings}
print(f"cohort: {len(recordings)} recordings from {len(labels)} subjects")

matrices = extract_matrices(recordings, labels, jobs=4)
total = sum(m.n_features for m in matrices.values())
print(f"extracted {len(matrices)} matrices, {total} feature columns in total")

report = evaluate_matrices(
    matrices,
    alpha=0.05,
    folds=8,
    seed=0,
    c_grid=[2.0 ** k for k in (-4, 0, 4)],
    gamma_grid=[2.0 ** k for k in (-2, 1, 4)],
    n_jobs=4,
)

print("\nmean held-out AUC (x100) per task and modality; '-' = no feature")
print("survived the between-group filter for that cell\n")
print(report.render_table())
