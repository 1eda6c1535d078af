"""Tableau construction, inversion and stability classification."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rkentropy.errors import DegenerateTableau, NotInvertible, UnknownScheme
from rkentropy.tableau import (
    BUILTIN_NAMES,
    ButcherTableau,
    builtin_tableau,
    dirk_chain,
    invert_stage_matrix,
    stability_report,
)

R3 = np.sqrt(3.0)


def test_builtin_be():
    t = builtin_tableau("be")
    assert t.s == 1 and t.p == 1
    assert t.A[0, 0] == 1.0 and t.b[0] == 1.0
    assert t.diagonal_kind == "dirk"


def test_builtin_radau2_printed_entries():
    t = builtin_tableau("radau2")
    np.testing.assert_allclose(t.b, [3 / 4, 1 / 4], rtol=0, atol=0)
    np.testing.assert_allclose(
        t.A, [[5 / 12, -1 / 12], [3 / 4, 1 / 4]], rtol=0, atol=0
    )
    assert t.p == 3


def test_builtin_sdirk3_diagonal():
    t = builtin_tableau("sdirk3")
    np.testing.assert_allclose(np.diag(t.A), 0.4358665215, rtol=0, atol=0)
    assert t.diagonal_kind == "dirk"


def test_builtin_cn_shape():
    t = builtin_tableau("cn")
    np.testing.assert_allclose(t.A, [[0, 0], [0.5, 0.5]])
    np.testing.assert_allclose(t.b, [0.5, 0.5])
    assert t.p == 2


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_builtin_consistency(name):
    t = builtin_tableau(name)
    assert np.abs(t.A.sum(axis=1) - t.c).max() <= 1e-12
    assert abs(t.b.sum() - 1.0) <= 1e-12


def test_unknown_scheme():
    with pytest.raises(UnknownScheme):
        builtin_tableau("rk4")


@pytest.mark.parametrize(
    "name,expected",
    [
        ("be", "dirk"),
        ("cn", "dirk"),
        ("sdirk2", "dirk"),
        ("sdirk3", "dirk"),
        ("gauss2", "fully-implicit"),
        ("gauss3", "fully-implicit"),
        ("radau2", "fully-implicit"),
        ("radau3", "fully-implicit"),
    ],
)
def test_diagonal_kind(name, expected):
    assert builtin_tableau(name).diagonal_kind == expected


def test_explicit_kind_synthetic():
    t = ButcherTableau(
        "heun", np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.5]),
        np.array([0.0, 1.0]), p=2,
    )
    assert t.diagonal_kind == "explicit"


class TestInvertStageMatrix:
    def test_gauss2_printed_inverse(self):
        inv = invert_stage_matrix(builtin_tableau("gauss2"))
        assert not inv.pseudo
        expected = np.array([[3.0, -3 + 2 * R3], [-3 - 2 * R3, 3.0]])
        np.testing.assert_allclose(inv.matrix, expected, rtol=0, atol=1e-12)

    def test_radau2_printed_inverse(self):
        inv = invert_stage_matrix(builtin_tableau("radau2"))
        expected = np.array([[3 / 2, 1 / 2], [-9 / 2, 5 / 2]])
        np.testing.assert_allclose(inv.matrix, expected, rtol=0, atol=1e-12)

    @pytest.mark.parametrize(
        "name", ["be", "gauss2", "gauss3", "radau2", "radau3", "sdirk2", "sdirk3"]
    )
    def test_inverse_roundtrip(self, name):
        t = builtin_tableau(name)
        inv = invert_stage_matrix(t)
        assert not inv.pseudo
        np.testing.assert_allclose(t.A @ inv.matrix, np.eye(t.s), atol=1e-12)

    def test_cn_not_invertible(self):
        with pytest.raises(NotInvertible):
            invert_stage_matrix(builtin_tableau("cn"))

    def test_pseudo_inverse_rank_s(self):
        # Explicit trapezoid: A singular, [A; b^T] has full column rank.
        t = ButcherTableau(
            "heun", np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([0.5, 0.5]),
            np.array([0.0, 1.0]), p=2,
        )
        inv = invert_stage_matrix(t)
        assert inv.pseudo
        assert inv.matrix.shape == (2, 3)
        ext = np.vstack([t.A, t.b])
        np.testing.assert_allclose(inv.matrix @ ext, np.eye(2), atol=1e-12)


class TestDirkChain:
    def test_single_step_is_be(self):
        t = dirk_chain([1.0])
        be = builtin_tableau("be")
        np.testing.assert_array_equal(t.A, be.A)
        np.testing.assert_array_equal(t.b, be.b)

    def test_half_half(self):
        t = dirk_chain([0.5, 0.5])
        np.testing.assert_allclose(t.A, [[0.5, 0.0], [0.5, 0.5]])
        np.testing.assert_allclose(t.c, [0.5, 1.0])

    def test_thirds_inverse_bidiagonal(self):
        t = dirk_chain([1 / 3, 1 / 3, 1 / 3])
        inv = np.linalg.inv(t.A)
        expected = np.array([[3, 0, 0], [-3, 3, 0], [0, -3, 3]], dtype=float)
        np.testing.assert_allclose(inv, expected, atol=1e-12)

    def test_zero_weight_rejected(self):
        with pytest.raises(DegenerateTableau):
            dirk_chain([0.5, 0.0])

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=0.05, max_value=2.0), min_size=1, max_size=5
        )
    )
    def test_inverse_closed_form(self, weights):
        t = dirk_chain(weights)
        inv = np.linalg.inv(t.A)
        b = np.asarray(weights)
        expected = np.diag(1.0 / b)
        for k in range(1, t.s):
            expected[k, k - 1] = -1.0 / b[k]
        np.testing.assert_allclose(inv, expected, atol=1e-9)
        np.testing.assert_allclose(t.A.sum(axis=1), t.c, atol=1e-12)


class TestStabilityReport:
    def test_gauss2_q_zero(self):
        rep = stability_report(builtin_tableau("gauss2"))
        assert np.abs(rep.Q).max() <= 1e-12
        assert rep.algebraically_stable

    def test_gauss3_q_zero(self):
        rep = stability_report(builtin_tableau("gauss3"))
        assert np.abs(rep.Q).max() <= 1e-10

    def test_radau2_q_matrix(self):
        rep = stability_report(builtin_tableau("radau2"))
        np.testing.assert_allclose(
            rep.Q, [[9 / 4, -3 / 4], [-3 / 4, 1 / 4]], atol=1e-12
        )
        np.testing.assert_allclose(rep.q_eigenvalues, [0.0, 2.5], atol=1e-12)
        assert rep.algebraically_stable

    def test_sdirk2_not_algebraically_stable(self):
        rep = stability_report(builtin_tableau("sdirk2"))
        assert not rep.algebraically_stable
        assert rep.q_eigenvalues[0] < -1e-6

    def test_sdirk3_negative_weight(self):
        rep = stability_report(builtin_tableau("sdirk3"))
        assert not rep.b_nonnegative
        assert not rep.algebraically_stable

    def test_cn_no_q(self):
        rep = stability_report(builtin_tableau("cn"))
        assert rep.Q is None and not rep.a_invertible
        assert rep.M.shape == (2, 2)

    @pytest.mark.parametrize(
        "name", ["be", "gauss2", "gauss3", "radau2", "radau3", "sdirk2", "sdirk3"]
    )
    def test_congruence(self, name):
        t = builtin_tableau(name)
        rep = stability_report(t)
        Ainv = invert_stage_matrix(t).matrix
        np.testing.assert_allclose(rep.Q, Ainv.T @ rep.M @ Ainv, atol=1e-10)
        assert np.abs(rep.M - rep.M.T).max() <= 1e-12
        assert np.abs(rep.Q - rep.Q.T).max() <= 1e-12

    @pytest.mark.parametrize("name", ["radau2", "radau3"])
    def test_radau_psd(self, name):
        rep = stability_report(builtin_tableau(name))
        assert rep.q_eigenvalues[0] >= -1e-10
