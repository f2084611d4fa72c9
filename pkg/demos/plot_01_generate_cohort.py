"""
Generating a synthetic infant cohort
====================================

Draw a reproducible cohort, look at how the severity index behaves, and
write the three CSV files the rest of the pipeline reads.
"""

import tempfile
from pathlib import Path

import numpy as np

from severity_ridge import GenerationConfig, acceptable_weight, generate, write_dataset

# 100k samples from master seed 42; each sample has its own PRNG stream,
# so any prefix of a bigger cohort is identical to a smaller one
cohort = generate(GenerationConfig(n_samples=100_000, master_seed=42))
print(len(cohort), "samples")
print(cohort[0])

##############################################################################
# The weight term multiplies the *square* of the virion count, so it swamps
# the age term by many orders of magnitude.
w_star = acceptable_weight(cohort.sex, cohort.age)
weight_coeff = np.abs((w_star - cohort.weight) / w_star)
age_term = (1 - cohort.age / 24) * cohort.virion_count
weight_term = weight_coeff * cohort.virion_count.astype(float) ** 2
print("median age term    %.3g" % np.median(age_term))
print("median weight term %.3g" % np.median(weight_term))

##############################################################################
# Noise is a multiplicative factor in [1 - 1e-4, 1 + 1e-4].
pos = cohort.severity_precise > 0
ratio = cohort.severity_noisy[pos] / cohort.severity_precise[pos]
print("noise ratio range  [%.6f, %.6f]" % (ratio.min(), ratio.max()))

##############################################################################
# Write x_data.csv, y_data_precise.csv and y_data_variance.csv.
out = Path(tempfile.mkdtemp())
write_dataset(cohort.take(np.arange(5)), out / "x_data.csv", out / "y_data_precise.csv",
              out / "y_data_variance.csv")
print((out / "x_data.csv").read_text())
