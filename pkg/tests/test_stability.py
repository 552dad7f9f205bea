import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigframe import gallery
from bigframe.core import BiGSystem
from bigframe.errors import BadConstants, BadInputs, CapViolated, DimMismatch, HypothesisFail
from bigframe.stability import (
    K_VARIANTS,
    VARIANTS,
    PerturbParams,
    check_hypothesis,
    predict_bounds,
    scalar_counterexample,
    stability_corpus,
    validate_stability,
)


def _ex1_with(first):
    e = np.eye(3)
    return gallery.from_biframe(list(e), [first * e[0], e[1], 2 * e[2]], [2.0, 3.0, 3.0])


class TestParams:
    @pytest.mark.parametrize("kw", [
        {"alpha": 1.0}, {"beta": -0.1}, {"gamma": float("nan")}, {"variant": "T99"},
        {"D": -1.0, "variant": "C52"}, {"alpha": 0.1, "variant": "C82"}, {"sigma": 0.1, "variant": "T83"},
    ])
    def test_rejects(self, kw):
        with pytest.raises(BadConstants):
            PerturbParams(**kw)

    def test_caps(self):
        with pytest.raises(CapViolated):
            PerturbParams(alpha=0.6, gamma=0.5, variant="T51").check_cap(1, 1)
        with pytest.raises(CapViolated):
            PerturbParams(alpha=0.1, gamma=0.5, variant="T53").check_cap(1, 4)
        with pytest.raises(CapViolated):
            PerturbParams(alpha=0.4, sigma=0.3, gamma=0.3, variant="T84").check_cap(1, 1)
        with pytest.raises(CapViolated):
            PerturbParams(D=3.0, variant="C82").check_cap(3, 6)
        with pytest.raises(CapViolated):
            PerturbParams(D=0.8, variant="C52").check_cap(1, 4)
        PerturbParams(alpha=0.3, gamma=0.3, variant="T83").check_cap(1, 1)


class TestPredict:
    def test_zero_perturbation(self):
        assert predict_bounds(4, 9, 3, 6, PerturbParams(variant="T81")) == (3.0, 6.0)

    def test_t51(self):
        lo, up = predict_bounds(6, 6, 3, 6, PerturbParams(0.1, 0.2, 0.05, variant="T51"))
        assert lo is None and up == 8.3125

    def test_c82(self):
        lo, up = predict_bounds(6, 6, 3, 6, PerturbParams(D=0.5, variant="C82"))
        assert lo == pytest.approx(3 * (1 - 0.5 * math.sqrt(2)), rel=1e-15)
        assert up == pytest.approx(6 + 0.5 * math.sqrt(2), rel=1e-15)
        assert round(lo, 4) == 0.8787 and round(up, 4) == 6.7071

    def test_c82_matches_t81_when_tight(self):
        a = predict_bounds(5, 5, 2, 2, PerturbParams(D=0.3, variant="C82"))
        b = predict_bounds(5, 5, 2, 2, PerturbParams(gamma=0.3, variant="T81"))
        assert a == pytest.approx(b, rel=1e-15)

    def test_bad_inputs(self):
        with pytest.raises(BadInputs):
            predict_bounds(0, 1, 1, 1, PerturbParams())
        with pytest.raises(BadInputs):
            predict_bounds(1, 1, 2, 1, PerturbParams())

    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from(("T51", "T53", "T81", "T83", "T84")),
           st.floats(0, 0.3), st.floats(0, 0.3), st.floats(0, 0.2), st.floats(0, 0.1), st.floats(0, 0.1))
    def test_monotone_in_gamma(self, variant, alpha, beta, g, dg, sigma):
        sigma = sigma if variant == "T84" else 0.0
        p1 = PerturbParams(alpha, beta, g, sigma, variant=variant)
        p2 = PerturbParams(alpha, beta, g + dg, sigma, variant=variant)
        lo1, up1 = predict_bounds(2, 3, 1, 2, p1)
        lo2, up2 = predict_bounds(2, 3, 1, 2, p2)
        assert up2 >= up1
        if lo1 is not None:
            assert lo2 <= lo1


class TestHypothesis:
    def test_identical(self, ex1):
        h = check_hypothesis(ex1[0], ex1[0], ex1[1], PerturbParams(variant="T83"))
        assert h.holds_sampled and h.worst_slack <= 0 and h.norm_certified

    def test_diag_violation(self, ex1):
        pert = _ex1_with(2.05)
        h = check_hypothesis(ex1[0], pert, np.eye(3), PerturbParams(gamma=0.05, variant="T81"))
        assert not h.holds_sampled and h.worst_slack == pytest.approx(0.05)
        assert np.allclose(np.abs(h.witness), [1, 0, 0], atol=1e-12)

    def test_diag_holds(self, ex1):
        h = check_hypothesis(ex1[0], _ex1_with(2.05), np.eye(3), PerturbParams(gamma=0.2, variant="T81"))
        assert h.holds_sampled and h.worst_slack <= -0.1 + 1e-12 and h.norm_certified

    def test_dim_mismatch(self, ex1):
        other = BiGSystem.build([np.eye(2)], [np.eye(2)])
        with pytest.raises(DimMismatch):
            check_hypothesis(ex1[0], other, None, PerturbParams())

    def test_needs_k(self, ex1):
        with pytest.raises(BadInputs):
            check_hypothesis(ex1[0], ex1[0], None, PerturbParams(variant="T81"))


class TestValidate:
    def test_identical(self, ex1):
        for v in VARIANTS:
            p = PerturbParams(D=0.5, variant=v) if v in ("C52", "C82") else PerturbParams(variant=v)
            rep = validate_stability(ex1[0], ex1[0], ex1[1], p)
            assert rep.upper_ok and rep.lower_ok is not False

    def test_diagonal_perturbation(self, ex1):
        sys, P = ex1
        rep = validate_stability(sys, _ex1_with(2.05), P, PerturbParams(gamma=0.1, variant="T81"))
        assert rep.lower_pred == pytest.approx(2.7) and rep.actual_lower == pytest.approx(3.0)
        assert rep.actual_upper == pytest.approx(6.0) and rep.upper_pred == pytest.approx(6.1)
        assert rep.passed and rep.BPhi == 3 and rep.BPsi == 12

    def test_hypothesis_fail_raises(self, ex1):
        with pytest.raises(HypothesisFail):
            validate_stability(ex1[0], _ex1_with(2.05), np.eye(3), PerturbParams(gamma=0.05, variant="T81"))

    @pytest.mark.parametrize("variant", K_VARIANTS)
    def test_scalar_counterexample(self, variant):
        rep = validate_stability(*scalar_counterexample(variant))
        assert rep.hypothesis.holds_sampled and rep.hypothesis.norm_certified
        assert rep.actual_lower == pytest.approx(0.4)
        assert rep.lower_pred == pytest.approx(0.45) and rep.lower_ok is False and rep.upper_ok

    @pytest.mark.parametrize("variant", K_VARIANTS)
    def test_scalar_lower_holds_when_a_at_least_one(self, variant):
        rep = validate_stability(*scalar_counterexample(variant, A=2.0, gamma=0.1))
        assert rep.lower_ok and rep.passed

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_corpus_upper_side(self, variant):
        for base, pert, K, p, idx in stability_corpus(variant, 15, seed=11):
            rep = validate_stability(base, pert, K, p, seed=idx)
            # the norm test cannot recover T84's sigma/gamma split from dS alone
            assert rep.hypothesis.holds_sampled and rep.upper_ok, idx
            assert rep.hypothesis.norm_certified or variant == "T84", idx

    def test_corpus_deterministic(self):
        a = [p for *_, p, _ in stability_corpus("T84", 5, seed=3)]
        b = [p for *_, p, _ in stability_corpus("T84", 5, seed=3)]
        assert a == b
