"""
Priority groups from predicted severity
=======================================

Turn predicted severities into three coarse groups and check how often
the group matches the one implied by the true severity.
"""

import numpy as np

from severity_ridge import GenerationConfig, build_plan, fit, generate, train_test_split

cohort = generate(GenerationConfig(100_000, 42))
X = cohort.features()
train, test = train_test_split(len(cohort))
model = fit(X[train], cohort.severity_noisy[train])

plan = build_plan(model.predict(X[train]), k=3)
print("thresholds", ["%.3g" % t for t in plan.thresholds], "labels", plan.labels)

predicted = np.array(plan.bucket(model.predict(X[test])))
actual = np.array(plan.bucket(cohort.severity_precise[test]))
print("group agreement %.3f" % np.mean(predicted == actual))
print("off by two groups %.4f" % np.mean(np.abs(predicted - actual) == 2))
for j, label in enumerate(plan.labels):
    print("%-7s predicted %6d  actual %6d" % (label, np.sum(predicted == j), np.sum(actual == j)))
