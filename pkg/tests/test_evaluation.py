import numpy as np
import pytest

from lpmbc import LCA, LGA, LUA, Dataset, InvalidInputError, Rng, apply_scaler, cross_test, fit_scaler
from lpmbc import select_hyperparams, sweep
from lpmbc.data import SyntheticSpec, gen_synthetic, load_bundled
from lpmbc.evaluation import EvalReport, SelectionGrid, accuracy, k_for_fraction, mse, run_fold


class TestMetrics:
    def test_accuracy(self):
        assert accuracy([0, 1, 1, 2], [0, 1, 2, 2]) == 0.75
        with pytest.raises(InvalidInputError):
            accuracy([0, 1], [0])

    def test_mse_examples(self):
        assert mse([[1.0, 0.0], [0.0, 1.0]], [0, 1]) == 0.0
        assert mse([[0.5, 0.5], [0.5, 0.5]], [0, 1]) == 0.25
        assert mse([[0.8, 0.2]], [0]) == pytest.approx(0.04, rel=1e-14)

    def test_mse_bounds(self):
        assert mse([[0.0, 1.0, 0.0]], [0]) == pytest.approx(2 / 3)
        with pytest.raises(InvalidInputError):
            mse([[0.7, 0.7]], [0])


class TestGrid:
    def test_k_fractions_round_half_up(self):
        assert k_for_fraction(0.1, 25) == 3  # 2.5 -> 3
        assert k_for_fraction(0.1, 4) == 1  # 0.4 -> 0, clamped to 1
        assert k_for_fraction(1.0, 40) == 40

    def test_grid_values(self):
        assert SelectionGrid.from_min_count(40).k_values == (1, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40)
        assert SelectionGrid.from_min_count(3).k_values == (1, 2, 3)

    def test_single_cell(self):
        iris = load_bundled("iris")
        k, a = select_hyperparams(iris, SelectionGrid((5,), (LGA,)), Rng(0))
        assert (k, a) == (5, LGA)

    def test_ties_prefer_small_k_then_simple_assumption(self):
        # two far-apart clusters: every cell is perfect, so the tie rule decides
        x = np.concatenate([np.random.default_rng(0).normal(size=(20, 2)), 50 + np.random.default_rng(1).normal(size=(20, 2))])
        ds = Dataset(x, np.repeat([0, 1], 20), ("a", "b"))
        k, a = select_hyperparams(ds, SelectionGrid((3, 5), (LCA, LGA, LUA)), Rng(0))
        assert (k, a) == (3, LUA)

    def test_k_larger_than_inner_class_is_clamped(self):
        iris = load_bundled("iris")
        k, _ = select_hyperparams(iris, SelectionGrid((200,), (LGA,)), Rng(0))
        assert k == 200


def test_gaussian_problem_prefers_parametric_assumptions():
    # well-separated Gaussian classes: LCA should rarely win the inner selection
    spec = SyntheticSpec(0.0, 100, 2.0, ((0.0, 3.0), (0.0, -3.0)))
    picks = []
    for seed in range(1, 21):
        ds = gen_synthetic(spec, Rng(seed))
        ds = apply_scaler(fit_scaler(ds), ds)
        picks.append(select_hyperparams(ds, SelectionGrid.from_min_count(80), Rng(seed).spawn(1))[1])
    assert sum(a in (LUA, LGA) for a in picks) >= 18


def test_selection_ignores_test_labels():
    iris = load_bundled("iris")
    gen = np.random.default_rng(0)
    idx = gen.permutation(iris.n)
    tr, te = iris.subset(idx[:120]), iris.subset(idx[120:])
    scaler = fit_scaler(tr)
    tr, te = apply_scaler(scaler, tr), apply_scaler(scaler, te)
    shuffled = Dataset(te.features, gen.permutation(te.labels), te.class_names)
    a = run_fold(tr, te, Rng(3))
    b = run_fold(tr, shuffled, Rng(3))
    assert a[2:] == b[2:]


@pytest.fixture(scope="module")
def iris_report():
    return cross_test(load_bundled("iris"), 2, 5, Rng(11))


def test_report_shape_and_aggregates(iris_report):
    assert len(iris_report.cells) == 10
    agg = iris_report.aggregates
    accs = [c.acc for c in iris_report.cells]
    assert agg["mean_acc"] == pytest.approx(sum(accs) / len(accs), abs=1e-12)
    assert agg["mean_mse"] == pytest.approx(np.mean([c.mse for c in iris_report.cells]), abs=1e-12)
    assert iris_report.config["assumptions"] == ["LUA", "LGA", "LCA/silverman"]


def test_report_round_trip(iris_report):
    again = EvalReport.from_dict(iris_report.to_dict())
    assert again.to_dict() == iris_report.to_dict()


def test_empty_report_has_no_aggregates():
    with pytest.raises(InvalidInputError):
        EvalReport({}).aggregates


def test_cross_test_is_deterministic(iris_report):
    again = cross_test(load_bundled("iris"), 2, 5, Rng(11))
    assert again.to_dict() == iris_report.to_dict()


@pytest.mark.parametrize("assumption", [LUA, LGA, LCA])
def test_separable_problem_is_solved(assumption):
    spec = SyntheticSpec(0.0, 100, 2.0, ((0.0, 5.0), (0.0, -5.0)))
    report = cross_test(gen_synthetic(spec, Rng(1)), 1, 5, Rng(1), assumptions=[assumption])
    assert report.mean_acc >= 0.95


def test_single_cell_sweep_equals_fixed_cross_test():
    ds = load_bundled("wine")
    (point,) = sweep(ds, [0.3], [LGA], repeats=2, folds=5, rng=Rng(4))
    fixed = cross_test(ds, 2, 5, Rng(4), fixed=(0.3, LGA))
    assert point.mean_acc == fixed.mean_acc
    assert point.mean_mse == fixed.mean_mse


def test_sweep_trends():
    def curve(c):
        acc = {}
        for seed in range(1, 6):
            for p in sweep(gen_synthetic(SyntheticSpec(c), Rng(seed)), [0.1, 1.0], [LGA], rng=Rng(seed)):
                acc[p.k_fraction] = acc.get(p.k_fraction, 0.0) + p.mean_acc / 5
        return acc

    strong = curve(2.0)
    assert strong[0.1] > strong[1.0] + 0.1
    # with independent features the global Gaussian fit is as good as a local one
    flat = curve(0.0)
    assert flat[1.0] >= max(flat.values()) - 0.03


def test_cross_test_validation():
    iris = load_bundled("iris")
    with pytest.raises(InvalidInputError):
        cross_test(iris, 0, 5)
    with pytest.raises(InvalidInputError):
        cross_test(iris, 1, 1)
    with pytest.raises(InvalidInputError):
        sweep(iris, [], [LGA])
