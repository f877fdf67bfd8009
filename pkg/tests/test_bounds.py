import numpy as np
import pytest
from hypothesis import given, strategies as st

from abprune import (
    BoundInput,
    Dataset,
    LayerStats,
    approximation_error_bound,
    bound_report,
    classification_error_bound,
    homogeneous_error_bound,
    layer_stats,
    lq_norm,
    magnitude_error_bound,
)
from conftest import make_net


def unit_input(steps=1, m=4.0, q=0.5, rho=1.0, c=1.0, base=0.0, layers=1):
    stats = LayerStats(
        t=np.ones(layers), q=np.full(layers, q), n=np.full(layers, 10), max_f_norm=np.ones(layers)
    )
    return BoundInput(stats, np.full(layers, m), steps, rho, c=c, base_error=base)


def random_input(rng, layers=3):
    stats = LayerStats(
        t=rng.uniform(0.1, 3.0, layers),
        q=rng.uniform(0.1, 0.9, layers),
        n=rng.integers(4, 40, layers),
        max_f_norm=rng.uniform(0.2, 2.0, layers),
    )
    m = np.array([rng.integers(1, n + 1) for n in stats.n], dtype=float)
    steps = int(rng.integers(1, layers + 1))
    return BoundInput(stats, m, steps, rho=rng.uniform(0.25, 1.5), c=rng.uniform(0.5, 2.0))


class TestGeneralBound:
    def test_unit_fixture_s1(self):
        # t=1, m=4, q=0.5 -> 4^(1/2 - 2) = 4^(-1.5) = 0.125
        assert approximation_error_bound(unit_input()) == pytest.approx(0.125, abs=0)

    def test_no_pruning_still_positive(self):
        inp = unit_input(m=10.0)
        assert approximation_error_bound(inp) > 0.0

    def test_doubling_m_scales_term(self):
        # exponent arithmetic: term scales by 2^(-1.5)
        b1 = approximation_error_bound(unit_input(m=4.0))
        b2 = approximation_error_bound(unit_input(m=8.0))
        assert b2 == pytest.approx(b1 * 2**-1.5, rel=1e-12)

    def test_base_error_added(self):
        assert approximation_error_bound(unit_input(base=0.3)) == pytest.approx(0.425)

    def test_m_below_one_rejected(self):
        with pytest.raises(ValueError, match="m_k must be >= 1"):
            unit_input(m=0.0)

    def test_m_above_n_rejected(self):
        with pytest.raises(ValueError, match="<= the layer width"):
            unit_input(m=11.0)

    @given(seed=st.integers(0, 1000))
    def test_monotone_in_each_m(self, seed):
        rng = np.random.default_rng(seed)
        inp = random_input(rng)
        base = approximation_error_bound(inp)
        for k in range(inp.stats.n_layers):
            if inp.m[k] + 1 > inp.stats.n[k]:
                continue
            bumped = BoundInput(inp.stats, inp.m + np.eye(inp.stats.n_layers)[k], inp.steps, inp.rho, inp.c)
            assert approximation_error_bound(bumped) <= base + 1e-12

    @given(seed=st.integers(0, 1000))
    def test_monotone_in_t_rho_c(self, seed):
        rng = np.random.default_rng(seed)
        inp = random_input(rng)
        base = approximation_error_bound(inp)
        stats2 = LayerStats(inp.stats.t * 1.5, inp.stats.q, inp.stats.n, inp.stats.max_f_norm)
        assert approximation_error_bound(BoundInput(stats2, inp.m, inp.steps, inp.rho, inp.c)) >= base
        assert approximation_error_bound(BoundInput(inp.stats, inp.m, inp.steps, inp.rho * 2, inp.c)) >= base
        assert approximation_error_bound(BoundInput(inp.stats, inp.m, inp.steps, inp.rho, inp.c * 2)) >= base

    @given(seed=st.integers(0, 1000))
    def test_adding_a_step_never_decreases(self, seed):
        rng = np.random.default_rng(seed)
        inp = random_input(rng)
        if inp.steps == inp.stats.n_layers:
            return
        more = BoundInput(inp.stats, inp.m, inp.steps + 1, inp.rho, inp.c)
        assert approximation_error_bound(more) >= approximation_error_bound(inp) - 1e-15

    @given(seed=st.integers(0, 300), c=st.floats(0.5, 4.0))
    def test_first_term_homogeneous_in_t(self, seed, c):
        rng = np.random.default_rng(seed)
        inp = random_input(rng)
        scaled_stats = LayerStats(inp.stats.t * c, inp.stats.q, inp.stats.n, inp.stats.max_f_norm)
        terms = bound_report(inp)["per_step_terms"]
        terms_scaled = bound_report(BoundInput(scaled_stats, inp.m, inp.steps, inp.rho, inp.c))["per_step_terms"]
        for s, (a, b) in enumerate(zip(terms, terms_scaled), start=1):
            assert b == pytest.approx(a * c**s, rel=1e-9)


class TestMagnitudeBound:
    def test_unit_fixture(self):
        # exponent 1 - 1/q at q=0.5 -> 4^(-1) = 0.25
        assert magnitude_error_bound(unit_input()) == pytest.approx(0.25, abs=0)

    @given(seed=st.integers(0, 1000))
    def test_dominates_general_bound_at_unit_c(self, seed):
        rng = np.random.default_rng(seed)
        inp = random_input(rng)
        inp_c1 = BoundInput(inp.stats, inp.m, inp.steps, inp.rho, c=1.0)
        assert magnitude_error_bound(inp_c1) >= approximation_error_bound(inp_c1) - 1e-12

    def test_m_one_equalizes_forms(self):
        inp = unit_input(m=1.0)
        assert magnitude_error_bound(inp) == approximation_error_bound(inp) == 1.0

    def test_ignores_c(self):
        assert magnitude_error_bound(unit_input(c=7.0)) == magnitude_error_bound(unit_input(c=1.0))


class TestHomogeneousBound:
    def test_three_unit_products(self):
        assert homogeneous_error_bound([1.0, 1.0, 1.0], m=1, q=0.5, steps=3) == pytest.approx(3.0)

    def test_s1_consistent_with_general(self):
        general = approximation_error_bound(unit_input())
        assert homogeneous_error_bound([1.0], m=4, q=0.5, steps=1) == pytest.approx(general)

    def test_zero_t(self):
        assert homogeneous_error_bound([0.0, 0.0], m=3, q=0.5, steps=2) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            homogeneous_error_bound([1.0], m=0, q=0.5, steps=1)
        with pytest.raises(ValueError):
            homogeneous_error_bound([1.0], m=2, q=1.5, steps=1)


class TestClassificationBound:
    def test_zero_t_reduces_to_twice_base(self):
        stats = LayerStats([0.0], [0.5], [10], [1.0])
        inp = BoundInput(stats, [4.0], 1, 1.0)
        assert classification_error_bound(inp, base_l2=0.7) == pytest.approx(1.4)

    def test_tail_terms_match_general_bound(self, rng):
        inp = random_input(rng)
        tail = approximation_error_bound(inp) - inp.base_error
        assert classification_error_bound(inp, base_l2=0.0) == pytest.approx(tail)

    def test_hand_case(self):
        # 2*0.1 + 0.125 = 0.325
        assert classification_error_bound(unit_input(), base_l2=0.1) == pytest.approx(0.325)

    def test_negative_base_rejected(self):
        with pytest.raises(ValueError):
            classification_error_bound(unit_input(), base_l2=-1.0)


class TestLayerStats:
    def test_one_hot_rows_give_unit_t(self, rng):
        w0 = np.zeros((3, 5))
        w0[0, 1] = 1.0
        w0[1, 3] = -1.0
        w0[2, 0] = 1.0
        net = make_net([w0, np.ones((1, 4))], kind="relu")
        d = Dataset(rng.standard_normal((20, 4)), np.zeros(20))
        stats = layer_stats(net, d, q=0.5)
        assert stats.t[0] == 1.0

    def test_q1_is_max_row_l1(self, rng):
        net = make_net([rng.standard_normal((3, 5)), rng.standard_normal((1, 4))], kind="relu")
        d = Dataset(rng.standard_normal((15, 4)), np.zeros(15))
        stats = layer_stats(net, d, q=[1.0, 1.0])
        expected = max(np.abs(net.layers[0].values).sum(axis=1))
        assert stats.t[0] == pytest.approx(expected, rel=1e-12)

    def test_sigmoid_hidden_f_norms_at_most_one(self, rng):
        net = make_net(
            [rng.standard_normal((4, 4)), rng.standard_normal((4, 5)), rng.standard_normal((1, 5))],
            kind="sigmoid",
        )
        d = Dataset(rng.standard_normal((50, 3)) * 0.5, np.zeros(50))
        stats = layer_stats(net, d, q=0.5)
        # hidden layers: sigmoid outputs < 1 and the constant neuron is exactly 1
        assert stats.max_f_norm[1] == 1.0
        assert stats.max_f_norm[2] == 1.0

    def test_widths_count_constant_neuron(self, rng):
        net = make_net([rng.standard_normal((6, 4)), rng.standard_normal((1, 7))], kind="relu")
        d = Dataset(rng.standard_normal((10, 3)), np.zeros(10))
        stats = layer_stats(net, d, q=0.5)
        np.testing.assert_array_equal(stats.n, [4, 7])

    def test_t_computed_with_lq(self, rng):
        net = make_net([rng.standard_normal((3, 5)), rng.standard_normal((1, 4))], kind="relu")
        d = Dataset(rng.standard_normal((10, 4)), np.zeros(10))
        stats = layer_stats(net, d, q=[0.3, 0.7])
        expected = max(lq_norm(row, 0.3) for row in net.layers[0].values)
        assert stats.t[0] == pytest.approx(expected, rel=1e-12)

    def test_surviving_only_excludes_unused_neurons(self, rng):
        # hidden neuron 1 has a huge incoming norm but no outgoing weight, so
        # the restricted max must ignore it
        w0 = np.vstack([np.ones((1, 5)), 10 * np.ones((1, 5))])
        w1 = np.array([[1.0, 0.0, 0.5]])  # neuron 1's output unused
        net = make_net([w0, w1], kind="relu")
        d = Dataset(rng.standard_normal((10, 4)), np.zeros(10))
        all_rows = layer_stats(net, d, q=0.5, surviving_only=False)
        surviving = layer_stats(net, d, q=0.5, surviving_only=True)
        assert all_rows.t[0] == pytest.approx(lq_norm(w0[1], 0.5))
        assert surviving.t[0] == pytest.approx(lq_norm(w0[0], 0.5))
        assert surviving.t[1] == all_rows.t[1]  # output layer always counts


class TestBoundReport:
    def test_fields(self):
        rep = bound_report(unit_input(), variant="general")
        assert rep["total"] == pytest.approx(0.125)
        assert rep["S"] == 1 and rep["rho"] == 1.0 and rep["C"] == 1.0
        assert len(rep["per_step_terms"]) == 1

    def test_magnitude_variant(self):
        rep = bound_report(unit_input(), variant="magnitude")
        assert rep["total"] == pytest.approx(0.25)

    def test_bad_variant(self):
        with pytest.raises(ValueError):
            bound_report(unit_input(), variant="other")
