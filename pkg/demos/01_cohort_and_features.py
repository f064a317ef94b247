"""Walk through a synthetic cohort: generate recordings, look at one,
project it onto the three modality views, and pull a few features.

Run from the repo root:

    python3 demos/01_cohort_and_features.py
"""

import numpy as np

from pdhw import project_modality, synthesize_cohort
from pdhw.featurize import extract_recording_features
from pdhw.ingest import IN_AIR, ON_SURFACE, PRESSURE
from pdhw.kinematics import velocity_features

# A small cohort: 3 patients, 3 controls, 7 tasks each
recordings = synthesize_cohort(3, 3, seed=0)
labels = {r.subject_id: r.label for r in recordings}
print(f"{len(recordings)} recordings, labels: {labels}")

# Pick one patient's spiral (task 1) and one control's
rec_pd = next(r for r in recordings if labels[r.subject_id] == "PD" and r.task_id == 1)
rec_hc = next(r for r in recordings if labels[r.subject_id] == "H" and r.task_id == 1)
print(f"\n{rec_pd.subject_id} task {rec_pd.task_id}: "
      f"{len(rec_pd.t)} samples over {rec_pd.duration:.2f} s")

# Each recording projects onto three views; derivatives never cross
# pen lifts, so each view carries its own stroke index.
for modality in (ON_SURFACE, IN_AIR, PRESSURE):
    view = project_modality(rec_pd, modality)
    print(f"  {modality:<11} {len(view.t):4d} samples, {len(view.strokes)} strokes")

# Velocity statistics separate the groups: the patient writes slower
for rec, who in ((rec_pd, "patient"), (rec_hc, "control")):
    view = project_modality(rec, ON_SURFACE)
    v = velocity_features(view)["velocity"].values
    print(f"{who}: mean speed {np.mean(v):8.1f} units/s")

# The full on-surface feature vector for one recording
feats = extract_recording_features(rec_pd, ON_SURFACE)
print(f"\n{len(feats)} on-surface features; a sample:")
for name in list(feats)[:8]:
    print(f"  {name:<28} {feats[name]}")
