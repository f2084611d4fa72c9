"""
Bayesian ridge regression by evidence maximization
==================================================

Fit the model on a toy problem, then on the severity cohort, and inspect
the re-estimated precisions and the predictive uncertainty.
"""

import numpy as np

from severity_ridge import GenerationConfig, RidgeConfig, fit, generate, r2, train_test_split

rng = np.random.default_rng(0)
X = rng.normal(size=(500, 3))
y = X @ [1.5, -2.0, 0.0] + 4.0 + rng.normal(scale=0.3, size=500)

model = fit(X, y)
print("coefficients", model.coefficients.round(3), "intercept %.3f" % model.intercept)
print("noise std estimate %.3f (true 0.3)" % (1 / np.sqrt(model.alpha)))
print("effective dof %.3f after %d iterations" % (model.effective_dof, model.n_iter))

mean, std = model.predict_with_std(X[:3])
print("predictions", mean.round(2), "+/-", std.round(3))

##############################################################################
# The Gamma hyperpriors use shape/rate (alpha_1, alpha_2) for the noise
# precision and (lambda_1, lambda_2) for the weight precision.
cohort = generate(GenerationConfig(50_000, 42))
Xc = cohort.features()
train, test = train_test_split(len(cohort))
config = RidgeConfig(alpha_1=2.0, alpha_2=0.01, lambda_1=0.001, lambda_2=0.01)
m = fit(Xc[train], cohort.severity_noisy[train], config)
print("held-out R² (precise targets) %.4f" % r2(cohort.severity_precise[test], m.predict(Xc[test])))

##############################################################################
# Without target normalization the hyperprior overwhelms targets of order
# 1e20 and the weights collapse to zero.
raw = fit(Xc[train], cohort.severity_noisy[train], RidgeConfig(normalize_target=False))
print("held-out R² with raw targets  %.4f" % r2(cohort.severity_precise[test], raw.predict(Xc[test])))
