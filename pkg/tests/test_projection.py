import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phicopula.basis import make_fgm_family, make_haar_family, make_trig_family
from phicopula.copula import INVALID, VALID, diagonal_model, independence_model, new_model, star, star_integral
from phicopula.dependence import spearman_rho, spearman_rho_quadrature
from phicopula.descriptors import family_for_size
from phicopula.errors import InvalidArgumentError, NotSquareIntegrableError, NumericError
from phicopula.numerics import composite_rule, gauss_legendre_rule, graded_edges
from phicopula.projection import (
    CONVERGENCE_HEADER,
    check_square_integrable,
    convergence_study,
    identity_check,
    inner_product,
    inner_product_quadrature,
    l2_distance,
    p_phi,
    rho_gap_bound,
    t_phi,
    write_convergence_csv,
)
from phicopula.reference import make_reference, parse_reference

from conftest import haar_cell_model, random_doubly_stochastic


def haar(p):
    return family_for_size("haar", p)


class TestTphi:
    def test_independence(self):
        fam = make_trig_family(2)
        expected = np.zeros((5, 5))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(t_phi(make_reference("independence"), fam), expected, atol=1e-14)

    @pytest.mark.parametrize(
        "model",
        [diagonal_model(make_trig_family(2), 0.3), diagonal_model(make_haar_family(3), 0.6),
         diagonal_model(make_fgm_family(), -0.2)],
        ids=["trig", "haar", "fgm"],
    )
    def test_member_recovered(self, model):
        np.testing.assert_allclose(t_phi(model, model.family), model.matrix, atol=1e-10)

    @pytest.mark.parametrize("theta", [-1.0, 0.4, 1.0])
    def test_fgm_target_on_fgm_basis(self, theta):
        target = make_reference("fgm", theta)
        a = t_phi(target, make_fgm_family())
        rho = spearman_rho_quadrature(target)
        np.testing.assert_allclose(a, np.diag([1.0, rho]), atol=1e-12)
        assert rho == pytest.approx(theta / 3, abs=1e-12)

    def test_entries_are_l2_coefficients(self):
        target = make_reference("frank", 2.0)
        fam = make_trig_family(1)
        rule = gauss_legendre_rule(96)
        U, V = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        c = target.density(U, V)
        a = t_phi(target, fam)
        for i in range(3):
            for j in range(3):
                coef = rule.weights @ (c * fam.phi(U)[..., i] * fam.phi(V)[..., j]) @ rule.weights
                assert a[i, j] == pytest.approx(coef, abs=1e-12)

    @pytest.mark.parametrize("target", ["clayton:0.5", "clayton:2", "frank:-6"])
    def test_e1_constraints_preserved(self, target):
        a = t_phi(parse_reference(target), haar(8))
        np.testing.assert_allclose(a[:, 0], np.eye(8)[0], atol=1e-9)
        np.testing.assert_allclose(a[0, :], np.eye(8)[0], atol=1e-9)

    def test_non_finite_target(self):
        with pytest.raises(NumericError):
            t_phi(lambda u, v: np.where(u > 0.5, np.inf, 1.0), make_fgm_family())

    def test_star_isomorphism(self, rng):
        fam = haar(8)
        a = haar_cell_model(fam, random_doubly_stochastic(rng, 8))
        b = haar_cell_model(fam, random_doubly_stochastic(rng, 8))
        got = t_phi(star_integral(a, b, fam.quadrature(2)), fam, fam.quadrature(2))
        np.testing.assert_allclose(got, star(a, b).matrix, atol=1e-8)


class TestPphi:
    def test_clayton_on_fgm_invalid(self):
        model, report = p_phi(make_reference("clayton", 1.0), make_fgm_family())
        assert model.matrix[1, 1] > 1 / 3
        assert report.verdict == INVALID
        assert model.validation is report

    def test_clayton_on_haar_valid(self):
        _, report = p_phi(make_reference("clayton", 0.5), make_haar_family(3))
        assert report.verdict == VALID

    def test_idempotent(self):
        first, _ = p_phi(make_reference("frank", 5.0), haar(4))
        second, _ = p_phi(first, haar(4))
        np.testing.assert_allclose(second.matrix, first.matrix, atol=1e-10)

    def test_orthogonality(self, rng):
        target = make_reference("frank", -3.0)
        fam = haar(4)
        proj, _ = p_phi(target, fam)
        rule = composite_rule(graded_edges(fam.breakpoints), 32)
        for _ in range(3):
            s = haar_cell_model(fam, random_doubly_stochastic(rng, 4))
            inner = inner_product_quadrature(target, s, rule) - inner_product_quadrature(proj, s, rule)
            assert abs(inner) < 1e-8


class TestIdentityCheck:
    def test_haar(self):
        assert identity_check(make_haar_family(2))

    @pytest.mark.parametrize("harmonics", [1, 2, 3])
    def test_trig(self, harmonics):
        assert not identity_check(make_trig_family(harmonics))

    def test_fgm(self):
        assert not identity_check(make_fgm_family())


class TestInnerProduct:
    def test_independence(self):
        m = independence_model(make_trig_family(1))
        assert inner_product(m, m) == 1.0

    def test_fgm_with_itself(self):
        m = diagonal_model(make_fgm_family(), 1 / 3)
        assert inner_product(m, m) == pytest.approx(1 + 1 / 9, abs=1e-15)
        rule = gauss_legendre_rule(16)
        assert inner_product_quadrature(m, m, rule) == pytest.approx(1 + 1 / 9, abs=1e-13)

    def test_symmetric_models_give_l2_product(self):
        fam = make_trig_family(2)
        a = diagonal_model(fam, 0.3)
        b = diagonal_model(fam, 0.1)
        rule = gauss_legendre_rule(32)
        U, V = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
        l2 = rule.weights @ (a.density(U, V) * b.density(U, V)) @ rule.weights
        assert inner_product(a, b) == pytest.approx(l2, abs=1e-8)

    def test_against_reference(self):
        m = diagonal_model(haar(4), 0.5)
        target = make_reference("frank", 3.0)
        rule = composite_rule(graded_edges(m.family.breakpoints), 32)
        assert inner_product(m, target) == pytest.approx(inner_product_quadrature(m, target, rule), abs=1e-10)

    def test_family_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            inner_product(independence_model(make_fgm_family()), independence_model(haar(2)))


class TestSquareIntegrability:
    @pytest.mark.parametrize("theta", [0.3, 0.5, 1.0, 4.0])
    def test_clayton_rejected(self, theta):
        with pytest.raises(NotSquareIntegrableError) as info:
            check_square_integrable(make_reference("clayton", theta))
        assert info.value.location == (0, 0)

    @pytest.mark.parametrize("target", [("frank", 3.0), ("frank", -8.0), ("fgm", 1.0), ("independence", 0.0)])
    def test_bounded_accepted(self, target):
        check_square_integrable(make_reference(*target))

    def test_mild_singularity_accepted(self):
        # r^-1/2 at the origin is square integrable
        check_square_integrable(lambda u, v: 1.0 / np.sqrt(np.hypot(u, v) + 1e-300))

    def test_clayton_l2_error_grows_with_refinement(self):
        # the squared density has a logarithmic divergence at the origin: the
        # quadrature value of the projection error keeps increasing with grading
        target = make_reference("clayton", 0.5)
        fam = haar(2)
        model = new_model(fam, t_phi(target, fam), atol=1e-8)
        values = [l2_distance(target, model, composite_rule(graded_edges(fam.breakpoints, k), 20)) for k in (24, 96, 384)]
        assert values[0] < values[1] < values[2]
        assert values[2] > 2 * values[0]


class TestConvergence:
    def test_member_has_zero_error(self):
        target = diagonal_model(haar(4), 0.5)
        rows = convergence_study(target, haar, [4])
        assert rows[0].l2_error < 1e-10
        assert rows[0].rho_gap < 1e-12

    def test_frank_haar(self):
        rows = convergence_study(make_reference("frank", 3.0), haar, [2, 4, 8, 16, 32])
        errors = [r.l2_error for r in rows]
        assert all(b < a for a, b in zip(errors, errors[1:]))
        for r in rows:
            assert r.rho_gap <= rho_gap_bound(haar(r.p)) * r.l2_error
        assert rows[-1].rho_gap < 0.01

    def test_fgm_haar_gap_against_half_error(self):
        rows = convergence_study(make_reference("fgm", 1.0), haar, [2, 4, 8])
        # at p = 2: gap = 7/48 and error = sqrt(7)/12, a ratio of sqrt(7)/4 > 1/2
        assert rows[0].rho_gap == pytest.approx(7 / 48, abs=1e-12)
        assert rows[0].l2_error == pytest.approx(np.sqrt(7) / 12, abs=1e-12)
        assert rows[0].rho_gap / rows[0].l2_error == pytest.approx(np.sqrt(7) / 4, abs=1e-10)
        for r in rows[1:]:
            assert r.rho_gap <= 0.5 * r.l2_error
        for r in rows:
            assert r.rho_gap <= rho_gap_bound(haar(r.p)) * r.l2_error

    def test_clayton_rho_gap_shrinks(self):
        # the rho part of the study does not need square integrability
        target = make_reference("clayton", 0.5)
        rho_c = spearman_rho_quadrature(target)
        gaps = []
        for p in (2, 4, 8, 16, 32):
            fam = haar(p)
            gaps.append(abs(spearman_rho(new_model(fam, t_phi(target, fam), atol=1e-8)) - rho_c))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.01

    def test_clayton_refused(self):
        with pytest.raises(NotSquareIntegrableError):
            convergence_study(make_reference("clayton", 0.5), haar, [2])

    def test_csv(self):
        rows = convergence_study(make_reference("fgm", 0.5), haar, [2, 4])
        buf = io.StringIO()
        write_convergence_csv(rows, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == ",".join(CONVERGENCE_HEADER)
        assert len(lines) == 3
        assert float(lines[1].split(",")[1]) == rows[0].l2_error


def test_rho_gap_bound_haar_closed_form():
    for p in (2, 4, 8, 16):
        assert rho_gap_bound(haar(p)) == pytest.approx(12 * np.sqrt(1 / 9 - (1 / 3 - 1 / (12 * p * p)) ** 2), abs=1e-10)


@settings(max_examples=10)
@given(st.floats(-10, 10).filter(lambda t: abs(t) > 0.1), st.sampled_from([2, 4, 8]))
def test_projection_gap_bounded(theta, p):
    target = make_reference("frank", theta)
    rows = convergence_study(target, haar, [p])
    assert rows[0].rho_gap <= rho_gap_bound(haar(p)) * rows[0].l2_error + 1e-12
