"""
Synthetic stress-test cohort, features and labels
=================================================

Sessions follow the protocol phases (waiting, baseline, anticipatory stress,
speech and arithmetic, two recovery periods). Eight features come from
60-sample trailing windows, and an emotion is labeled 1 when its intensity
stays within one standard deviation of its baseline.
"""

import numpy as np

from qkemotion import data

cohort = data.synthesize_cohort(8, seed=3)
s = cohort[0]
print("samples per session:", len(s))
for k, phase in enumerate(data.PHASES):
    rows = s.phase == k
    print(f"{phase:>20}: EDA {s.channels['EDA'][rows].mean():5.2f} uS, "
          f"Negative intensity {s.emotion_intensity['Negative'][rows].mean():+.2f}")

ds = data.build_dataset(cohort)
print("feature matrix:", ds.features.shape, data.FEATURE_NAMES)

# participant-disjoint folds; statistics come from the training side only
fold = data.make_folds(ds.participant_ids, n_folds=4, seed=3)[0]
train_rows = ds.rows_for(fold.train_participants)
test_rows = ds.rows_for(fold.test_participants)
sigma = data.label_sigma(ds.intensities[train_rows])
labels = data.label_emotions(ds.intensities, sigma=sigma)
stats, Xtr, Xte = data.zscore_fit_apply(ds.features[train_rows], ds.features[test_rows])
print("label sigma:", dict(zip(data.EMOTIONS, sigma.round(3).tolist())))
print("inside-1-sigma rate:", dict(zip(data.EMOTIONS, labels[train_rows].mean(axis=0).round(3).tolist())))
print("train column means after z-score:", np.abs(Xtr.mean(axis=0)).max())
