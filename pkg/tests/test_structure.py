import numpy as np
import pytest
from numpy.testing import assert_allclose

from bures.algebra import AlgebraSpec, matrix_algebra, random_element, random_unitary, rng_stream
from bures.channels import (Channel, Status, apply, choi_schwarz_m2, completely_depolarising,
                            convex_combine, depolarising, from_kraus, identity_channel, is_cp,
                            is_trace_preserving, is_unital, pauli_pair, schwarz_status,
                            transpose_map, unitary_channel, unitary_mixture)
from bures.errors import InvalidParameterError, RefusedError
from bures.structure import (conditional_expectation_onto_fix, fit_unitarily_covariant,
                             fixed_point_space, irreducibility_verdict, multiplicative_domain,
                             spectral_projection, superoperator_spectrum)

import oracles
from test_channels import example_channels


def m2m2_example(lam=0.5):
    spec = matrix_algebra(4)
    u, v = pauli_pair(spec)
    return spec, unitary_mixture(lam, u, v)


def is_diag_aa(x, atol=1e-10):
    b = x.blocks[0]
    return (np.allclose(b[:2, 2:], 0, atol=atol) and np.allclose(b[2:, :2], 0, atol=atol)
            and np.allclose(b[:2, :2], b[2:, 2:], atol=atol))


class TestFixedPoints:
    def test_identity(self, m2):
        f = fixed_point_space(identity_channel(m2))
        assert f.dimension == 4 and f.is_algebra

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_omega_scalars(self, d):
        spec = matrix_algebra(d)
        f = fixed_point_space(completely_depolarising(spec))
        assert f.dimension == 1 and f.contains(spec.identity())

    def test_m2m2_example(self):
        spec, E = m2m2_example()
        f = fixed_point_space(E)
        assert f.dimension == 4 and f.is_algebra
        assert all(is_diag_aa(x) for x in f.basis)

    def test_orthonormal_basis(self, spec):
        for E in example_channels(spec):
            f = fixed_point_space(E)
            assert_allclose(f.coords.conj().T @ f.coords, np.eye(f.dimension), atol=1e-10)

    def test_schwarz_fix_is_algebra(self, spec):
        for E in example_channels(spec):
            if is_trace_preserving(E).holds and schwarz_status(E, 100).holds:
                f = fixed_point_space(E)
                assert f.flags["adjoint_closed"] and f.flags["product_closed"]

    def test_kraus_commutant(self):
        spec, E = m2m2_example()
        f = fixed_point_space(E)
        for x in f.basis:
            for w in E.kraus:
                assert (x @ w - w @ x).opnorm() <= 1e-8
                assert (x @ w.H - w.H @ x).opnorm() <= 1e-8

    def test_non_unital_fix(self):
        # x ↦ τ(x) ρ0 fixes only multiples of ρ0, which is not an algebra
        spec = matrix_algebra(2)
        rho0 = spec.element([np.diag([0.8, 0.2])])
        one = spec.vec(spec.identity())
        E = Channel(spec, np.outer(spec.vec(rho0), one.conj()))
        f = fixed_point_space(E)
        assert f.dimension == 1 and not f.flags["contains_identity"]


class TestMultiplicativeDomain:
    @pytest.mark.parametrize("d", [2, 3])
    def test_trivial_for_depolarising(self, d):
        spec = matrix_algebra(d)
        for E in (completely_depolarising(spec), depolarising(spec, 0.5)):
            m = multiplicative_domain(E)
            assert m.dimension == 1 and m.status is Status.CERTIFIED_TRUE

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_full_for_unitary(self, d):
        spec = matrix_algebra(d)
        m = multiplicative_domain(unitary_channel(random_unitary(spec, rng_stream(d, "u"))))
        assert m.dimension == d * d and m.detail["bilinear_residual"] <= 1e-7

    def test_contains_fix(self, spec):
        for E in example_channels(spec):
            if not (is_trace_preserving(E).holds and schwarz_status(E, 100).holds):
                continue
            m, f = multiplicative_domain(E), fixed_point_space(E)
            assert all(m.contains(x) for x in f.basis)

    def test_schwarz_equality_on_domain(self, spec):
        for E in example_channels(spec):
            if is_trace_preserving(E).holds and schwarz_status(E, 100).holds:
                assert multiplicative_domain(E).detail["schwarz_equality_residual"] <= 1e-7

    def test_line_through_contraction(self, m2):
        # any map on a segment through a Bures contraction has trivial domain
        for phi in (identity_channel(m2), unitary_channel(random_unitary(m2, rng_stream(0, "v")))):
            mix = convex_combine(0.5, phi, completely_depolarising(m2))
            assert multiplicative_domain(mix).dimension == 1

    def test_unitary_mixture_domain(self, m2):
        u, v = pauli_pair(m2)
        m = multiplicative_domain(unitary_mixture(0.5, u, v))
        assert m.dimension == 2 and m.is_algebra
        assert m.contains(m2.unit(0, 0, 0))

    def test_transpose_not_schwarz(self, m2):
        m = multiplicative_domain(transpose_map(m2), samples=200)
        # S†S = 1 for the transpose, but it is multiplicative only on the diagonal
        assert m.status is Status.UNDETERMINED
        assert m.detail["trimmed"] and m.dimension < 4

    def test_requires_tp(self, m2):
        with pytest.raises(InvalidParameterError):
            multiplicative_domain(from_kraus(m2, [2 * m2.identity()]))


class TestConditionalExpectation:
    def test_diagonal(self, m2):
        E = unitary_channel(m2.element([np.diag([1, -1])]))
        pi = conditional_expectation_onto_fix(E)
        assert apply(pi, m2.unit(0, 0, 1)).allclose(m2.zero(), 1e-12)
        assert apply(pi, m2.unit(0, 0, 0)).allclose(m2.unit(0, 0, 0), 1e-12)

    def test_omega(self, spec):
        O = completely_depolarising(spec)
        assert_allclose(conditional_expectation_onto_fix(O).superop, O.superop, atol=1e-12)

    def test_m2m2(self, rng):
        spec, E = m2m2_example()
        pi = conditional_expectation_onto_fix(E)
        x = random_element(spec, rng)
        b = x.blocks[0]
        m = (b[:2, :2] + b[2:, 2:]) / 2
        assert apply(pi, x).allclose(spec.element([np.kron(np.eye(2), m)]), 1e-10)

    def test_properties(self, spec, rng):
        for E in example_channels(spec):
            try:
                pi = conditional_expectation_onto_fix(E)
            except RefusedError:
                continue
            p = pi.superop
            assert np.abs(p @ p - p).max() <= 1e-10
            assert is_trace_preserving(pi).status is Status.CERTIFIED_TRUE
            assert is_cp(pi).status is Status.CERTIFIED_TRUE
            assert is_unital(pi).status is Status.CERTIFIED_TRUE
            assert_allclose(pi.superop @ E.superop, p, atol=1e-8)
            assert_allclose(E.superop @ pi.superop, p, atol=1e-8)

    def test_refuses_non_algebra(self):
        spec = matrix_algebra(2)
        rho0 = spec.element([np.diag([0.8, 0.2])])
        one = spec.vec(spec.identity())
        E = Channel(spec, np.outer(spec.vec(rho0), one.conj()))
        with pytest.raises(RefusedError):
            conditional_expectation_onto_fix(E)


class TestIrreducibility:
    def test_omega(self, spec):
        assert irreducibility_verdict(completely_depolarising(spec)).status is Status.CERTIFIED_TRUE

    def test_m2m2_reducible(self):
        spec, E = m2m2_example()
        v = irreducibility_verdict(E)
        assert v.status is Status.CERTIFIED_FALSE
        p = v.witness
        assert (p @ p).allclose(p, 1e-10) and p.is_hermitian()
        assert (apply(E, p) - p).max_abs() <= 1e-8
        assert is_diag_aa(p) and 0 < p.trace().real < 4

    def test_cyclic_permutation(self):
        spec = AlgebraSpec([1, 1, 1])
        perm = np.roll(np.eye(3), 1, axis=0)
        E = Channel(spec, perm)
        v = irreducibility_verdict(E)
        assert v.status is Status.CERTIFIED_TRUE

    def test_abelian_reducible(self):
        spec = AlgebraSpec([1, 1, 1])
        # state 0 is absorbing; mass in states 1 and 2 leaks into it
        s = np.array([[1, 0.5, 0.5], [0, 0.5, 0], [0, 0, 0.5]])
        v = irreducibility_verdict(Channel(spec, s))
        assert v.status is Status.CERTIFIED_FALSE
        assert_allclose(v.witness.to_matrix().real, np.diag([1, 0, 0]))

    def test_unitary_reducible_iff_nonscalar(self, m2):
        assert irreducibility_verdict(unitary_channel(m2.element([np.diag([1, 1j])]))).status is Status.CERTIFIED_FALSE
        assert irreducibility_verdict(unitary_channel(m2.element([1j * np.eye(2)]))).status is Status.CERTIFIED_FALSE

    def test_verdict_matches_projection_in_fix(self, spec):
        for E in example_channels(spec):
            if not is_trace_preserving(E).holds:
                continue
            v = irreducibility_verdict(E)
            f = fixed_point_space(E)
            if f.is_algebra:
                assert (v.status is Status.CERTIFIED_FALSE) == (f.dimension > 1)
            if v.status is Status.CERTIFIED_FALSE:
                p = v.witness
                assert (p @ p).allclose(p, 1e-10) and (apply(E, p) - p).max_abs() <= 1e-8


class TestSpectrum:
    @pytest.mark.parametrize("d", [2, 3])
    def test_depolarising(self, d):
        lam = 0.3
        rep = superoperator_spectrum(depolarising(matrix_algebra(d), lam))
        assert_allclose(np.sort(rep.eigenvalues.real), [lam] * (d * d - 1) + [1], atol=1e-12)
        assert_allclose(rep.perron_value, 1, atol=1e-12)

    def test_choi_schwarz(self):
        rep = superoperator_spectrum(choi_schwarz_m2())
        assert_allclose(np.sort(rep.eigenvalues.real), [-0.5, 0.5, 0.5, 1], atol=1e-10)
        assert len(rep.peripheral_eigenvalues) == 1 and rep.peripheral_trivial

    def test_unitary_peripheral(self, m2):
        rep = superoperator_spectrum(unitary_channel(m2.element([np.diag([1, 1j])])))
        per = sorted(rep.peripheral_eigenvalues, key=lambda z: (z.imag, z.real))
        assert_allclose(per, [-1j, 1, 1, 1j], atol=1e-12)
        assert not rep.peripheral_trivial

    def test_perron_for_channels(self, spec):
        for E in example_channels(spec):
            rep = superoperator_spectrum(E)
            if is_trace_preserving(E).holds:
                assert abs(rep.perron_value - 1) <= 1e-8 and rep.perron_in_spectrum

    def test_perron_in_spectrum_for_positive_non_tp(self, m2):
        E = from_kraus(m2, [m2.element([[[1, 2], [0, 0.5]]])])
        rep = superoperator_spectrum(E)
        assert rep.perron_in_spectrum


class TestCovariance:
    def test_depolarising(self):
        fit = fit_unitarily_covariant(depolarising(matrix_algebra(3), 0.3))
        assert_allclose((fit.alpha, fit.beta), (0.3, 0.7), atol=1e-12)
        assert fit.residual < 1e-12 and not fit.anomalies

    def test_omega(self, m2):
        fit = fit_unitarily_covariant(completely_depolarising(m2))
        assert_allclose((fit.alpha, fit.beta), (0, 1), atol=1e-12)

    def test_unitary_not_covariant(self, m2):
        fit = fit_unitarily_covariant(unitary_channel(m2.element([np.diag([1, -1])])))
        assert not fit.fitted and fit.commutation_defect > 0.1

    def test_reduction_map_flagged(self):
        spec = matrix_algebra(3)
        # x ↦ (Tr(x) 1 - x)/2 is positive and trace preserving with α < 0
        E = Channel.from_function(spec, lambda x: (x.trace() * spec.identity() - x) / 2)
        fit = fit_unitarily_covariant(E)
        assert fit.fitted and fit.alpha < 0 and fit.anomalies

    def test_multi_block(self):
        with pytest.raises(InvalidParameterError):
            fit_unitarily_covariant(completely_depolarising(AlgebraSpec([1, 2])))


def test_spectral_projection(m2):
    assert spectral_projection(m2.identity()) is None
    p = spectral_projection(m2.element([np.diag([3.0, 1.0])]))
    assert p.allclose(m2.unit(0, 0, 0))
