import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bigframe import gallery
from bigframe._linalg import adj
from bigframe.core import BiGSystem
from bigframe.errors import NotRealForm, Singular
from bigframe.frame_op import (
    check_claimed_bounds,
    family_bessel_bound,
    frame_operator,
    inverse_norm_check,
    inverse_operator,
    ordinary_bounds,
    quadratic_form,
)
from bigframe.suite import form_values

seeds = st.integers(0, 2**31 - 1)


def test_ex1_operator_exact(ex1):
    F = frame_operator(ex1[0])
    assert np.array_equal(F.S, np.diag([4.0, 3.0, 6.0]).astype(complex))
    assert F.herm_defect == 0.0


def test_unit_encoding_is_close_but_not_exact():
    F = frame_operator(gallery.diagonal_k_example("unit")[0])
    assert np.allclose(F.S, np.diag([4, 3, 6]), atol=1e-14)


def test_identity_single_atom():
    sys = BiGSystem.build([np.eye(3)], [np.eye(3)])
    rep = ordinary_bounds(sys)
    assert np.array_equal(frame_operator(sys).S, np.eye(3))
    assert rep.lower == rep.upper == 1.0 and rep.is_parseval and rep.is_tight


def test_ex1_bounds_and_rayleigh_scan(ex1):
    rep = ordinary_bounds(ex1[0])
    assert (rep.lower, rep.upper, rep.is_frame, rep.is_tight) == (3.0, 6.0, True, False)
    rng = np.random.default_rng(0)
    f = rng.standard_normal((100_000, 3)) + 1j * rng.standard_normal((100_000, 3))
    q = form_values(ex1[0], f) / np.linalg.norm(f, axis=1) ** 2
    assert 3 - 1e-12 <= q.min() < 3.02 and 5.98 < q.max() <= 6 + 1e-12


def test_twice_parseval_is_tight():
    e = np.eye(3)
    sys = gallery.controlled([e[[0]], e[[1]], e[[2]]], 2 * e)
    rep = ordinary_bounds(sys)
    assert rep.is_tight and not rep.is_parseval
    assert rep.lower == pytest.approx(2, abs=1e-14) and rep.upper == pytest.approx(2, abs=1e-14)


def test_naive_oracle(rng):
    sys = gallery.random_system(5, 8, seed=11)
    S = frame_operator(sys).S
    naive = gallery.naive_frame_operator(sys)
    assert np.max(np.abs(S - naive)) <= 1e-12 * np.max(np.abs(S))


def test_not_real_form():
    sys = gallery.random_system(4, 6, seed=1, ensure_frame=False)
    assert frame_operator(sys).herm_defect > 1e-3
    with pytest.raises(NotRealForm):
        ordinary_bounds(sys)


def test_bessel_only():
    sys = BiGSystem.build([np.array([[1.0, 0.0]])], [np.array([[1.0, 0.0]])])
    rep = ordinary_bounds(sys)
    assert not rep.is_frame and rep.bessel_only and rep.upper == 1.0


def test_inverse_norm_examples(ex1):
    F = frame_operator(ex1[0])
    norm_inv, ok = inverse_norm_check(F, 3.0)
    assert norm_inv == pytest.approx(1 / 3, rel=1e-15) and ok
    assert inverse_norm_check(F, 2.0) == (pytest.approx(1 / 3), True)
    assert inverse_norm_check(frame_operator(BiGSystem.build([np.eye(2)], [np.eye(2)])), 1.0) == (1.0, True)


def test_singular():
    F = frame_operator(BiGSystem.build([np.array([[1.0, 0.0]])], [np.array([[1.0, 0.0]])]))
    with pytest.raises(Singular):
        inverse_norm_check(F, 1.0)
    with pytest.raises(Singular):
        inverse_operator(F)


def test_claims_witness(ex1):
    F = frame_operator(ex1[0])
    out = check_claimed_bounds(F, lower=2, upper=3)
    assert out["lower"]["satisfied"]
    assert not out["upper"]["satisfied"]
    assert np.allclose(out["upper"]["witness"], [0, 0, 1]) and out["upper"]["form_at_witness"] == 6.0
    bad_lower = check_claimed_bounds(F, lower=3.5)["lower"]
    assert not bad_lower["satisfied"] and np.allclose(bad_lower["witness"], [0, 1, 0])


def test_family_bessel(ex1):
    assert family_bessel_bound(ex1[0], "phi") == 3.0
    assert family_bessel_bound(ex1[0], "psi") == 12.0


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 8))
def test_swap_adjoint_and_bounds(seed, dim, atoms):
    sys = gallery.random_system(dim, atoms, seed=seed)
    S = frame_operator(sys).S
    assert np.max(np.abs(frame_operator(sys.swap()).S - adj(S))) <= 1e-12 * max(1, np.abs(S).max())
    a, b = ordinary_bounds(sys), ordinary_bounds(sys.swap())
    assert abs(a.lower - b.lower) <= 1e-12 * max(1, a.upper)
    assert abs(a.upper - b.upper) <= 1e-12 * max(1, a.upper)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 8))
def test_sandwich_and_form_agreement(seed, dim, atoms):
    sys = gallery.random_system(dim, atoms, seed=seed)
    rep = ordinary_bounds(sys)
    F = frame_operator(sys)
    rng = np.random.default_rng(seed)
    for f in rng.standard_normal((20, dim)) + 1j * rng.standard_normal((20, dim)):
        f /= np.linalg.norm(f)
        q = quadratic_form(sys, f)
        assert abs(q - np.vdot(f, F.S @ f)) <= 1e-12 * max(1, rep.upper)
        eps = 1e-9 * max(1, rep.upper)
        assert rep.lower - eps <= q.real <= rep.upper + eps


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_spectrum_sorted(seed):
    rep = ordinary_bounds(gallery.random_system(5, 7, seed=seed))
    assert list(rep.spectrum) == sorted(rep.spectrum)
    assert rep.spectrum[0] == rep.lower and rep.spectrum[-1] == rep.upper
    assert 0 < rep.lower <= rep.upper
