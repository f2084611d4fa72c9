import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from severity_ridge import (
    DegenerateTargetError,
    SplitSpec,
    ValidationError,
    emit_report,
    evaluate,
    fit,
    mse,
    nmse,
    r2,
    run_experiment,
    train_test_split,
)
from severity_ridge.evalharness import REPORT_HEADER, bar_chart_svg, shuffled_indices
from severity_ridge.ridge import RidgeModel
from severity_ridge.rng import SplitMix64

from oracles import brute_mse, brute_r2

SVG = "{http://www.w3.org/2000/svg}"


def reference_shuffle(n, seed):
    g = SplitMix64(seed)
    a = list(range(n))
    for i in range(n - 1, 0, -1):
        j = g.randint(0, i)
        a[i], a[j] = a[j], a[i]
    return a


class TestSplit:
    def test_sizes(self):
        train, test = train_test_split(10, SplitSpec(0.2, 42))
        assert (len(train), len(test)) == (8, 2)

    @pytest.mark.parametrize("n", [2, 3, 7, 15, 101])
    def test_partition(self, n):
        train, test = train_test_split(n)
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(n))
        assert not set(train.tolist()) & set(test.tolist())
        assert len(test) == math.ceil(0.2 * n - 1e-12)

    def test_deterministic(self):
        a = train_test_split(1000, SplitSpec(0.3, 5))
        b = train_test_split(1000, SplitSpec(0.3, 5))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    @settings(max_examples=30)
    @given(st.integers(2, 300), st.integers(0, 2 ** 64 - 1))
    def test_matches_scalar_fisher_yates(self, n, seed):
        assert shuffled_indices(n, seed).tolist() == reference_shuffle(n, seed)

    def test_golden_permutation(self):
        assert shuffled_indices(10, 42).tolist() == [8, 3, 6, 5, 4, 0, 9, 2, 1, 7]

    def test_errors(self):
        with pytest.raises(ValidationError):
            train_test_split(1)
        with pytest.raises(ValidationError):
            SplitSpec(0.0)
        with pytest.raises(ValidationError):
            SplitSpec(1.0)
        with pytest.raises(ValidationError):
            train_test_split(2, SplitSpec(0.9))


class TestMetrics:
    def test_perfect(self):
        y = np.array([1.0, 4.0, 2.0])
        assert mse(y, y) == 0.0 and r2(y, y) == 1.0

    def test_mean_predictor(self):
        y = np.array([1.0, 4.0, 2.0, 7.0])
        assert r2(y, np.full(4, y.mean())) == pytest.approx(0.0, abs=1e-15)

    def test_hand_case(self):
        assert mse([1, 2, 3], [1, 2, 4]) == pytest.approx(1 / 3)
        assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(ValidationError):
            mse([1, 2], [1])
        with pytest.raises(DegenerateTargetError):
            r2([2, 2, 2], [1, 2, 3])
        with pytest.raises(DegenerateTargetError):
            r2([2], [2])

    def test_against_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(2, 40))
            a = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
            b = a + rng.normal(size=n) * a.std()
            assert mse(a, b) == pytest.approx(brute_mse(a, b), rel=1e-12, abs=1e-300)
            assert r2(a, b) == pytest.approx(brute_r2(a, b), rel=1e-12, abs=1e-12)
            assert abs(nmse(a, b) + r2(a, b) - 1.0) <= 1e-12

    def test_nmse_is_mse_over_variance(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=50), rng.normal(size=50)
        assert nmse(a, b) == pytest.approx(mse(a, b) / np.var(a), rel=1e-13)

    def test_nmse_on_training_rows(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 3))
        y = X @ [1.0, 2.0, 3.0] + rng.normal(size=200)
        A = np.column_stack([X, np.ones(200)])
        pred = A @ np.linalg.lstsq(A, y, rcond=None)[0]
        assert abs(nmse(y, pred) - (1 - r2(y, pred))) < 1e-12


class TestEvaluate:
    def test_perfect_model(self):
        X = np.random.default_rng(3).normal(size=(30, 2))
        y = X @ [1.0, -1.0] + 2.0
        m = RidgeModel(np.array([1.0, -1.0]), 2.0, 1.0, 1.0, np.eye(2), 2.0, 1, True, (0.0,), np.zeros(2))
        p, q = evaluate(m, X, y, y)
        assert p.r2 == 1.0 and q.r2 == 1.0
        assert (p.target_kind, q.target_kind) == ("precise", "noisy")
        assert p.n_test == 30

    def test_precise_and_noisy_close(self, cohort_42):
        X = cohort_42.features()
        train, test = train_test_split(len(cohort_42))
        m = fit(X[train], cohort_42.severity_noisy[train])
        p, q = evaluate(m, X[test], cohort_42.severity_precise[test], cohort_42.severity_noisy[test])
        assert abs(p.nmse - q.nmse) < 1e-3
        assert p.n_test == q.n_test == len(test)


class TestExperiment:
    def test_length_and_determinism(self):
        a = run_experiment(2000, 3, 7)
        b = run_experiment(2000, 3, 7, workers=3)
        assert len(a.iterations) == 3
        assert [it.seed for it in a.iterations] == [7, 8, 9]
        assert a == b

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValidationError):
            run_experiment(100, 0)

    def test_means(self):
        rep = run_experiment(1000, 2, 1)
        assert rep.mean_r2 == pytest.approx(np.mean([it.precise.r2 for it in rep.iterations]))
        assert rep.mean("mse", "noisy") == pytest.approx(np.mean([it.noisy.mse for it in rep.iterations]))


@pytest.fixture(scope="module")
def emitted(tmp_path_factory):
    out = tmp_path_factory.mktemp("report")
    rep = run_experiment(2000, 10, 42)
    return rep, emit_report(rep, out)


class TestReport:
    def test_csv(self, emitted):
        rep, paths = emitted
        lines = paths["report"].read_text().strip().split("\n")
        assert len(lines) == 12
        assert lines[0] == REPORT_HEADER
        assert lines[1].split(",")[0] == "42"
        assert lines[-1].startswith("mean,")
        assert float(lines[-1].split(",")[3]) == pytest.approx(rep.mean_r2, rel=1e-15)

    @pytest.mark.parametrize("name", ["mse", "r2"])
    def test_svg_structure(self, emitted, name):
        _, paths = emitted
        text = paths[name].read_text()
        root = ET.fromstring(text)
        assert root.tag == f"{SVG}svg"
        assert root.get("width") and root.get("height") and root.get("viewBox")
        bars = [r for r in root.iter(f"{SVG}rect") if r.get("class") == "bar"]
        assert len(bars) == 10
        assert "<script" not in text

    def test_titles(self, emitted):
        _, paths = emitted
        assert "MSE Bar Chart" in paths["mse"].read_text()
        assert "Coefficient of Determination Bar Chart" in paths["r2"].read_text()

    def test_bar_heights_linear(self):
        root = ET.fromstring(bar_chart_svg([1, 2, 3], [1.0, 2.0, -1.0], "t", "y"))
        h = [float(r.get("height")) for r in root.iter(f"{SVG}rect")]
        assert h[0] == pytest.approx(h[1] / 2, abs=0.01) and h[2] == 0.0


def test_experiment_reaches_linear_ceiling():
    # severity ~ U * v**2 with U ~ Uniform(0, 1) independent of every feature
    # and uncorrelated with weight, so the best linear R² is
    # Cov(y, v)**2 / (Var v Var y) = (1/24)**2 / ((1/12) * (7/180)) = 15/28.
    rep = run_experiment(100_000, 10, 42)
    assert rep.mean_r2 == pytest.approx(15 / 28, abs=0.005)
