import numpy as np
import pytest
from numpy.testing import assert_allclose

from bures.algebra import (AlgebraSpec, DensityElement, matrix_algebra, random_unitary, rng_stream)
from bures.channels import (Channel, Status, apply, choi_schwarz_m2, completely_depolarising,
                            convex_combine, depolarising, from_kraus, identity_channel,
                            pauli_pair, schwarz_status, transpose_map, unitary_channel,
                            unitary_mixture)
from bures.contraction import (NEAR_COINCIDENT, bures_contraction_probe, correctability_obstruction,
                               density_pairs, equidistance_criterion, extreme_point_probe,
                               inverse_positivity_check, nonexpansive_probe)
from bures.errors import InvalidParameterError, NotPositiveError
from bures.structure import fixed_point_space, multiplicative_domain, superoperator_spectrum

import oracles
from test_channels import example_channels


def haar(spec, key="u"):
    return random_unitary(spec, rng_stream(0, key))


class TestNonexpansive:
    def test_identity_isometric(self, spec):
        rep = nonexpansive_probe(identity_channel(spec), samples=50)
        assert_allclose((rep.min_ratio, rep.max_ratio), (1, 1), atol=1e-8)
        assert rep.isometric_witness is not None and rep.nonexpansive

    def test_omega_collapses(self, spec):
        rep = nonexpansive_probe(completely_depolarising(spec), samples=50)
        assert rep.max_ratio <= 1e-6 and rep.isometric_witness is None

    def test_unitary_mixture_isometric_pair(self, m2):
        u, v = pauli_pair(m2)
        rep = nonexpansive_probe(unitary_mixture(0.5, u, v), samples=50)
        assert rep.isometric_witness is not None and rep.nonexpansive

    def test_all_examples(self, spec):
        for E in example_channels(spec):
            rep = nonexpansive_probe(E, samples=100, seed=3)
            assert rep.nonexpansive and rep.max_ratio <= 1 + 1e-8
            assert rep.max_fidelity_drop <= 1e-8

    def test_rejects_non_tp(self, m2):
        with pytest.raises(InvalidParameterError):
            nonexpansive_probe(from_kraus(m2, [2 * m2.identity()]))

    def test_rejects_non_positive(self, m2):
        # adding a traceless multiple of τ(x) keeps TP but sends e22 to diag(2, -1)
        z = m2.element([np.diag([2.0, -2.0])])
        E = Channel.from_function(m2, lambda x: x + x.trace() * z)
        with pytest.raises(InvalidParameterError):
            nonexpansive_probe(E)

    def test_pairs_include_structured(self, m2):
        pairs = density_pairs(m2, rng_stream(0, "p"), 0)
        assert any(s.allclose(m2.unit(0, 0, 0)) and r.allclose(m2.unit(0, 1, 1)) for s, r in pairs)
        assert all(isinstance(s, DensityElement) for pair in pairs for s in pair)

    def test_deterministic(self, m2):
        E = depolarising(m2, 0.3)
        a, b = nonexpansive_probe(E, 30, seed=5), nonexpansive_probe(E, 30, seed=5)
        assert a.to_dict() == b.to_dict()


class TestContractionVerdict:
    def test_depolarising_certified(self, spec):
        v = bures_contraction_probe(depolarising(spec, 0.3))
        assert v.status is Status.CERTIFIED_TRUE and v.certificate.startswith("provenance")

    def test_choi_schwarz_certified(self):
        assert bures_contraction_probe(choi_schwarz_m2()).status is Status.CERTIFIED_TRUE

    def test_unitary_refuted(self, spec):
        v = bures_contraction_probe(unitary_channel(haar(spec)))
        assert v.status is Status.CERTIFIED_FALSE
        s, r = v.witness
        assert s.allclose(r) is False

    def test_unitary_mixture_refuted_with_swap_pair(self, m2):
        u, v = pauli_pair(m2)
        E = unitary_mixture(0.5, u, v)
        verdict = bures_contraction_probe(E)
        assert verdict.status is Status.CERTIFIED_FALSE
        assert verdict.certificate == "multiplicative_domain"
        assert apply(E, m2.unit(0, 0, 0)).allclose(m2.unit(0, 1, 1), 1e-14)

    def test_kraus_channel_probe_passed(self, m2):
        E = from_kraus(m2, oracles.random_kraus(m2, rng_stream(0, "k"), 3))
        v = bures_contraction_probe(E, samples=50)
        assert v.status is Status.PROBE_PASSED
        assert v.detail["max_ratio"] < 1

    def test_line_through_contraction_has_trivial_domain(self, spec):
        phi = unitary_channel(haar(spec, "phi"))
        mix = convex_combine(0.5, phi, depolarising(spec, 0.3))
        assert bures_contraction_probe(mix).status is Status.CERTIFIED_TRUE
        assert multiplicative_domain(mix).dimension == 1

    def test_contractive_schwarz_structure(self, spec):
        channels = [completely_depolarising(spec), depolarising(spec, 0.3)]
        if spec == matrix_algebra(2):
            channels.append(choi_schwarz_m2())
        for E in channels:
            assert bures_contraction_probe(E).status is Status.CERTIFIED_TRUE
            assert fixed_point_space(E).dimension == 1
            rep = superoperator_spectrum(E)
            assert rep.peripheral_trivial
            assert_allclose(rep.peripheral_eigenvalues, [1], atol=1e-8)


class TestEquidistance:
    def test_identity_element_passes(self, spec):
        for E in example_channels(spec):
            if not schwarz_status(E, 50).holds:
                continue
            res = equidistance_criterion(E, spec.identity(), samples=50)
            assert res.in_domain and res.domain_member
            assert_allclose((res.lhs, res.rhs), (0, 0), atol=1e-6)

    def test_omega_unit_fails(self, m2):
        res = equidistance_criterion(completely_depolarising(m2), m2.unit(0, 0, 0))
        assert_allclose(res.lhs, np.sqrt(1 - 2 ** -0.5), atol=1e-9)
        assert_allclose(res.rhs, 0, atol=1e-6)
        assert not res.in_domain and not res.domain_member

    def test_unitary_passes_everywhere(self, spec, rng):
        E = unitary_channel(haar(spec))
        from bures.algebra import random_psd
        for _ in range(5):
            res = equidistance_criterion(E, random_psd(spec, rng))
            assert res.in_domain and res.domain_member

    def test_agrees_with_domain(self, m2):
        u, v = pauli_pair(m2)
        E = unitary_mixture(0.5, u, v)
        for a in (m2.unit(0, 0, 0), m2.element([[[1, 0.5], [0.5, 1]]])):
            res = equidistance_criterion(E, a)
            assert res.in_domain == res.domain_member

    def test_rejects(self, m2):
        with pytest.raises(NotPositiveError):
            equidistance_criterion(identity_channel(m2), m2.element([np.diag([1, -1])]))
        with pytest.raises(NotPositiveError):
            equidistance_criterion(identity_channel(m2), m2.zero())


class TestCorrectability:
    def codes(self, m2):
        return [m2.unit(0, 0, 0), m2.unit(0, 1, 1)]

    def test_omega(self, m2):
        w = correctability_obstruction(completely_depolarising(m2), self.codes(m2))
        assert w is not None and (w.i, w.j) == (0, 1)
        assert_allclose((w.before, w.after), (1, 0), atol=1e-8)

    def test_depolarising(self, m2):
        w = correctability_obstruction(depolarising(m2, 0.5), self.codes(m2))
        # F(diag(¾,¼), diag(¼,¾)) = √3/2
        assert w is not None
        assert_allclose(w.after, np.sqrt(1 - np.sqrt(3) / 2), atol=1e-9)

    def test_unitary(self, m2):
        assert correctability_obstruction(unitary_channel(haar(m2)), self.codes(m2)) is None

    def test_needs_two(self, m2):
        with pytest.raises(InvalidParameterError):
            correctability_obstruction(identity_channel(m2), [m2.unit(0, 0, 0)])


class TestInversePositivity:
    def test_depolarising_half(self, m2):
        v = inverse_positivity_check(depolarising(m2, 0.5))
        assert v.status is Status.CERTIFIED_FALSE
        expected = np.linalg.eigvalsh(oracles.depolarising_inverse(np.diag([1.0, 0.0]), 0.5)).min()
        assert_allclose(v.detail["min_eigenvalue"], expected, atol=1e-10)
        assert_allclose(expected, -0.5)

    def test_unitary_certified(self, spec):
        v = inverse_positivity_check(unitary_channel(haar(spec)))
        assert v.status is Status.CERTIFIED_TRUE

    def test_omega_not_invertible(self, spec):
        v = inverse_positivity_check(completely_depolarising(spec))
        assert v.status is Status.UNDETERMINED and v.certificate == "not_invertible"

    def test_transpose_inverse_positive(self, m2):
        # the transpose is its own inverse; no negative image exists
        v = inverse_positivity_check(transpose_map(m2))
        assert v.status in (Status.CERTIFIED_TRUE, Status.UNDETERMINED)
        assert v.status is Status.CERTIFIED_TRUE or v.detail["min_eigenvalue"] >= -1e-8


class TestExtremePoints:
    def test_omega(self, m2):
        # the trace-zero unitary diag(1, -1) is sent to 0, so its defect is exactly 1
        rep = extreme_point_probe(completely_depolarising(m2), samples=0)
        assert_allclose(rep.min_defect, 1, atol=1e-12)
        assert rep.samples_used == 2

    def test_identity(self, spec):
        if not spec.is_factor:
            pytest.skip("single block only")
        assert extreme_point_probe(identity_channel(spec), samples=10).min_defect <= 1e-12

    def test_choi_schwarz(self):
        rep = extreme_point_probe(choi_schwarz_m2(), samples=500)
        assert rep.min_defect > 0 and rep.samples_used == 502

    def test_rejects_multi_block(self):
        with pytest.raises(InvalidParameterError):
            extreme_point_probe(identity_channel(AlgebraSpec([1, 2])))


def test_near_coincident_constant():
    assert NEAR_COINCIDENT == 1e-4
