import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dale.estimators import ale_first_order, dale_first_order, grid_for
from dale.models import AnalyticModel, jacobian_batch
from dale.oracles import (
    DomainError,
    MetricUndefinedError,
    nmse,
    numeric_ale_truth,
    toy_ale_truth,
    toy_mp_truth,
    toy_pdp_truth,
)
from dale.synthdata import (
    case2_conditional_sampler,
    case2_model,
    gen_case2,
    toy_conditional_sampler,
    toy_model,
)


class TestToyClosedForms:
    def test_pdp_values(self):
        assert toy_pdp_truth(0.0) == pytest.approx(0.5)
        assert toy_pdp_truth(1.0) == pytest.approx(0.0)
        assert toy_pdp_truth(0.5) == pytest.approx(0.125)

    def test_mp_values(self):
        assert toy_mp_truth(0.25) == pytest.approx(0.5)
        assert toy_mp_truth(0.5) == pytest.approx(0.0)
        assert toy_mp_truth(0.75) == pytest.approx(0.0)

    def test_ale_values(self):
        assert toy_ale_truth(0.75) == pytest.approx(-0.125)
        assert toy_ale_truth(0.0) == pytest.approx(0.375)
        assert toy_ale_truth(0.5) == pytest.approx(-0.125)

    def test_domain_violation(self):
        for fn in (toy_pdp_truth, toy_mp_truth, toy_ale_truth):
            with pytest.raises(DomainError):
                fn(1.5)


class TestNumericAleTruth:
    def test_matches_toy_closed_form(self):
        n_quad = 400
        truth = numeric_ale_truth(
            toy_model(), toy_conditional_sampler(), (0.0, 1.0),
            feature=0, n_quad=n_quad, n_mc=1,
            center_on=np.linspace(0, 1, 20_001))
        xs = np.linspace(0, 1, 101)
        err = np.max(np.abs(truth(xs) - toy_ale_truth(xs)))
        assert err < 1.0 / n_quad + 1e-3

    def test_linear_model_gives_exact_slope(self):
        model = AnalyticModel(
            2,
            lambda X: 3.0 * X[:, 0],
            lambda X: np.column_stack([np.full(X.shape[0], 3.0),
                                       np.zeros(X.shape[0])]))
        truth = numeric_ale_truth(model, toy_conditional_sampler(), (0.0, 1.0),
                                  feature=0, n_quad=50, n_mc=1)
        slope = (truth(1.0) - truth(0.0)) / 1.0
        assert slope == pytest.approx(3.0, abs=1e-9)

    def test_case2_matches_half_square(self):
        # the band-interior derivative is x2 + x3 with conditional mean z,
        # so the accumulation is z^2/2 up to centering
        truth = numeric_ale_truth(
            case2_model(), case2_conditional_sampler(), (0.0, 10.0),
            feature=0, n_quad=200, n_mc=400, seed=0)
        xs = np.linspace(0, 10, 51)
        expected = xs ** 2 / 2.0
        got = truth(xs)
        err = np.max(np.abs((got - got.mean()) - (expected - expected.mean())))
        assert err < 0.5

    def test_quadrature_convergence(self):
        errs = []
        for n_quad in (20, 40, 80):
            truth = numeric_ale_truth(
                toy_model(), toy_conditional_sampler(), (0.0, 1.0),
                feature=0, n_quad=n_quad, n_mc=1,
                center_on=np.linspace(0, 1, 10_001))
            xs = np.linspace(0, 1, 101)
            errs.append(np.max(np.abs(truth(xs) - toy_ale_truth(xs))))
        assert errs[2] <= errs[0] + 1e-12

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            numeric_ale_truth(toy_model(), toy_conditional_sampler(), (0, 1),
                              n_quad=5)
        with pytest.raises(ValueError):
            numeric_ale_truth(toy_model(), toy_conditional_sampler(), (0, 1),
                              n_mc=0)

    def test_domain_enforced(self):
        truth = numeric_ale_truth(toy_model(), toy_conditional_sampler(),
                                  (0.0, 1.0), n_quad=20, n_mc=1)
        with pytest.raises(DomainError):
            truth(1.2)


class TestNmse:
    def test_identical_curves_give_zero(self):
        xs = np.linspace(0, 1, 11)
        assert nmse(lambda z: z ** 2, lambda z: z ** 2, xs) == pytest.approx(0.0)

    def test_constant_offset_is_removed(self):
        xs = np.linspace(0, 1, 11)
        assert nmse(lambda z: z ** 2 + 5.0, lambda z: z ** 2, xs) == pytest.approx(0.0)

    @given(st.floats(-50, 50))
    def test_shared_constant_invariance(self, c):
        xs = np.linspace(0, 1, 9)
        base = nmse(lambda z: z ** 3, lambda z: z, xs)
        shifted = nmse(lambda z: z ** 3 + c, lambda z: z + c, xs)
        assert shifted == pytest.approx(base, rel=1e-9, abs=1e-12)

    @given(st.floats(-20, 20).filter(lambda a: abs(a) > 1e-3))
    def test_shared_scaling_invariance(self, a):
        xs = np.linspace(0, 1, 9)
        base = nmse(lambda z: z ** 3, lambda z: z, xs)
        scaled = nmse(lambda z: a * z ** 3, lambda z: a * z, xs)
        assert scaled == pytest.approx(base, rel=1e-9)

    def test_zero_variance_truth_rejected(self):
        xs = np.linspace(0, 1, 5)
        with pytest.raises(MetricUndefinedError):
            nmse(lambda z: z, lambda z: np.ones_like(z), xs)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            nmse(lambda z: z, lambda z: z, [0.5])

    def test_curve_defaults_to_its_edges(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(0, 1, 200)
        curve = dale_first_order(rng.normal(size=200), values, grid_for(values, 5))
        direct = nmse(curve, lambda z: np.zeros_like(z) + z * 0 + 1e-9 * z)
        assert np.isfinite(direct)

    def test_case2_threshold_ordering(self):
        data = gen_case2(10_000, seed=0)
        model = case2_model()
        truth = numeric_ale_truth(
            model, case2_conditional_sampler(), (0.0, 10.0),
            feature=0, n_quad=200, n_mc=200, seed=1)
        x = data.column(0)
        grid = grid_for(x, 5)
        J = jacobian_batch(model, data.matrix)
        dale_nmse = nmse(dale_first_order(J[:, 0], x, grid), truth)
        ale_nmse = nmse(ale_first_order(model, data.matrix, 0, grid), truth)
        assert dale_nmse < 0.15
        assert ale_nmse > 0.3
