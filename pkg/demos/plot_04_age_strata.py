"""
Separate models per age group
=============================

Fit one model per age bucket and compare each with the pooled model on
that bucket's held-out rows.
"""

import numpy as np

from severity_ridge import GenerationConfig, fit, fit_stratified, generate, r2, train_test_split

cohort = generate(GenerationConfig(100_000, 42))
X = cohort.features()
y = cohort.severity_noisy
train, test = train_test_split(len(cohort))

pooled = fit(X[train], y[train])
strata = fit_stratified(X[train], y[train], cohort.age[train], boundaries=(0, 6, 12, 18))

which = strata.bucket_of(cohort.age[test])
y_true = cohort.severity_precise[test]
for j, (lo, hi) in enumerate(strata.buckets()):
    rows = which == j
    own = r2(y_true[rows], strata.models[j].predict(X[test][rows]))
    shared = r2(y_true[rows], pooled.predict(X[test][rows]))
    print("months %2d-%2d  bucket R² %.5f  pooled R² %.5f" % (lo, hi, own, shared))

# Age enters only through the small linear term, so the buckets hardly help.
print("overall stratified R² %.5f" % r2(y_true, strata.predict(X[test], cohort.age[test])))
