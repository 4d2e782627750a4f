"""Bures contractivity and its consequences.

Strict contractivity quantifies over every pair of distinct densities, so it
is certified only through the construction of a map and refuted only by an
explicit pair (or by a multiplicative domain big enough to carry one).
Sampling alone gives ``probe_passed``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import (DEFAULT_TOL, AlgElement, DensityElement, Tolerances, random_psd,
                      random_unitary, rng_stream, sample_density)
from .channels import (CONTRACTIVE, INVERSE_POSITIVE, Channel, PropertyVerdict, Status, apply,
                       is_positive, is_trace_preserving, schwarz_status, random_rank_one)
from .errors import InvalidParameterError, NotPositiveError
from .metrics import bures_distance, fidelity_and_distance
from .structure import multiplicative_domain, spectral_projection

__all__ = [
    "ContractionReport", "nonexpansive_probe", "bures_contraction_probe", "EquidistanceResult",
    "equidistance_criterion", "ObstructionWitness", "correctability_obstruction",
    "inverse_positivity_check", "ExtremePointReport", "extreme_point_probe", "density_pairs",
    "CONDITION_LIMIT", "NEAR_COINCIDENT", "ISOMETRY_SLACK",
]

CONDITION_LIMIT = 1e10
NEAR_COINCIDENT = 1e-4    # pairs closer than this are checked through fidelity only
ISOMETRY_SLACK = 1e-10    # ratio >= 1 - slack counts as distance preserved
EXPANSION_SLACK = 1e-8


@dataclass
class ContractionReport:
    """Extremes of ``d_B(Eσ, Eρ) / d_B(σ, ρ)`` over sampled pairs.

    Ratios are taken over pairs with ``d_B(σ, ρ) >= NEAR_COINCIDENT``.  Closer
    pairs only enter the fidelity monotonicity check ``F(σ, ρ) <= F(Eσ, Eρ)``.
    """

    pairs_tested: int = 0
    min_ratio: float = np.inf
    max_ratio: float = -np.inf
    isometric_witness: tuple | None = None
    expansion_witness: tuple | None = None
    certificate: str | None = None
    fidelity_violations: int = 0
    max_fidelity_drop: float = 0.0
    seed: int | None = None
    diagnostics: list = field(default_factory=list)

    @property
    def nonexpansive(self) -> bool:
        return self.expansion_witness is None and self.fidelity_violations == 0

    def to_dict(self) -> dict:
        return {
            "pairs_tested": self.pairs_tested,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "isometric_witness": self.isometric_witness is not None,
            "expansion_witness": self.expansion_witness is not None,
            "certificate": self.certificate,
            "fidelity_violations": self.fidelity_violations,
            "max_fidelity_drop": self.max_fidelity_drop,
            "seed": self.seed,
            "diagnostics": list(self.diagnostics),
        }


def density_pairs(spec, rng: np.random.Generator, samples: int, tol: Tolerances = DEFAULT_TOL):
    """Structured density pairs followed by ``samples`` random full-rank pairs.

    The structured part covers pure diagonal states with disjoint supports,
    each pure diagonal state against the centre, rank-deficient random pairs
    and pairs that differ by a small mixing step.
    """
    pure = []
    for j, d in enumerate(spec.block_dims):
        for k in range(d):
            pure.append(DensityElement.normalized(spec.unit(j, k, k), tol))
    pairs = list(combinations(pure, 2))
    zeta = spec.centre()
    pairs += [(p, zeta) for p in pure]
    for _ in range(4):
        low = [max(1, d - 1) for d in spec.block_dims]
        pairs.append((sample_density(spec, rng, low, tol), sample_density(spec, rng, low, tol)))
        a, b = sample_density(spec, rng, tol=tol), sample_density(spec, rng, tol=tol)
        pairs.append((a, DensityElement.from_element(0.99 * a + 0.01 * b, tol)))
    pairs += [(sample_density(spec, rng, tol=tol), sample_density(spec, rng, tol=tol))
              for _ in range(samples)]
    return pairs


def _require_channel(E: Channel, samples: int, seed: int, tol: Tolerances) -> None:
    if not is_trace_preserving(E, tol).holds:
        raise InvalidParameterError("map is not trace preserving")
    if is_positive(E, samples, seed, tol).holds is False:
        raise InvalidParameterError("map is not positive")


def nonexpansive_probe(E: Channel, samples: int = 200, seed: int = 0,
                       tol: Tolerances = DEFAULT_TOL) -> ContractionReport:
    """Sample ``d_B(Eσ, Eρ) / d_B(σ, ρ)`` and the fidelity gain.

    A ratio above ``1 + 1e-8`` or a fidelity drop above ``tol.fid`` is stored
    as a diagnostic and an ``expansion_witness``; it means the input is not a
    channel or the numerics broke down.  No exception is raised.
    """
    _require_channel(E, 50, seed, tol)
    rng = rng_stream(seed, "nonexpansive")
    rep = ContractionReport(seed=seed, certificate=_provenance_certificate(E))
    for s, r in density_pairs(E.spec, rng, samples, tol):
        es = DensityElement.from_element(apply(E, s).hermitian_part(), tol)
        er = DensityElement.from_element(apply(E, r).hermitian_part(), tol)
        (f0, d0), (f1, d1) = fidelity_and_distance(s, r, tol), fidelity_and_distance(es, er, tol)
        rep.pairs_tested += 1
        drop = f0 - f1
        rep.max_fidelity_drop = max(rep.max_fidelity_drop, drop)
        if drop > tol.fid:
            rep.fidelity_violations += 1
            if rep.expansion_witness is None:
                rep.expansion_witness = (s, r)
                rep.diagnostics.append(f"fidelity decreased by {drop:.3e}")
        if d0 < NEAR_COINCIDENT:
            continue
        ratio = d1 / d0
        rep.min_ratio = min(rep.min_ratio, ratio)
        rep.max_ratio = max(rep.max_ratio, ratio)
        if ratio >= 1.0 - ISOMETRY_SLACK and rep.isometric_witness is None:
            rep.isometric_witness = (s, r)
        if ratio > 1.0 + EXPANSION_SLACK and rep.expansion_witness is None:
            rep.expansion_witness = (s, r)
            rep.diagnostics.append(f"Bures ratio {ratio:.12g} exceeds 1")
    return rep


def _provenance_certificate(E: Channel) -> str | None:
    if CONTRACTIVE in E.provenance.facts:
        return f"provenance:{E.provenance.tag}"
    return None


def _domain_witness(E: Channel, seed: int, tol: Tolerances):
    """Two distinct densities in the multiplicative domain, or ``None``."""
    dom = multiplicative_domain(E, seed=seed, tol=tol)
    if dom.dimension < 2 or not dom.is_algebra:
        return dom, None
    rng = rng_stream(seed, "domain_witness")
    for _ in range(8):
        c = rng.standard_normal(dom.dimension) + 1j * rng.standard_normal(dom.dimension)
        p = spectral_projection(E.spec.unvec(dom.coords @ c).hermitian_part())
        if p is None:
            continue
        q = E.spec.identity() - p
        if p.trace().real > tol.zero and q.trace().real > tol.zero:
            return dom, (DensityElement.normalized(p, tol), DensityElement.normalized(q, tol))
    return dom, None


def bures_contraction_probe(E: Channel, samples: int = 200, seed: int = 0,
                            tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Bures contractivity verdict.

    Order of evidence: a certified-contractive construction; a pair of
    distinct densities in the multiplicative domain whose distance is kept;
    an isometric pair among the samples; otherwise ``probe_passed``.
    """
    cert = _provenance_certificate(E)
    if cert is not None:
        return PropertyVerdict(CONTRACTIVE, Status.CERTIFIED_TRUE, cert)
    _require_channel(E, 50, seed, tol)
    dom, pair = _domain_witness(E, seed, tol)
    if pair is not None:
        s, r = pair
        ratio = bures_distance(apply(E, s), apply(E, r), tol) / bures_distance(s, r, tol)
        if ratio >= 1.0 - ISOMETRY_SLACK:
            return PropertyVerdict(CONTRACTIVE, Status.CERTIFIED_FALSE, "multiplicative_domain",
                                   witness=pair, seed=seed,
                                   detail={"domain_dimension": dom.dimension, "ratio": ratio})
    rep = nonexpansive_probe(E, samples, seed, tol)
    detail = {"min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio,
              "domain_dimension": dom.dimension}
    if rep.isometric_witness is not None:
        s, r = rep.isometric_witness
        if bures_distance(s, r, tol) > 1e-6:
            return PropertyVerdict(CONTRACTIVE, Status.CERTIFIED_FALSE, "isometric_pair",
                                   witness=rep.isometric_witness, samples_used=rep.pairs_tested,
                                   seed=seed, detail=detail)
    return PropertyVerdict(CONTRACTIVE, Status.PROBE_PASSED, "sampling", samples_used=rep.pairs_tested,
                           seed=seed, detail=detail)


class EquidistanceResult(NamedTuple):
    lhs: float
    rhs: float
    in_domain: bool
    domain_member: bool


def equidistance_criterion(E: Channel, a: AlgElement, samples: int = 200, seed: int = 0,
                           tol: Tolerances = DEFAULT_TOL) -> EquidistanceResult:
    """Compare ``d_B(a/τ(a), ζ)`` with ``d_B(E(a)/τ(a), ζ)``.

    For a Schwarz channel the two agree exactly when ``a`` lies in the
    multiplicative domain.  ``domain_member`` is the independent answer from
    :func:`~bures.structure.multiplicative_domain`.
    """
    if not a.is_psd(tol):
        raise NotPositiveError("a must be positive")
    t = a.trace().real
    if t <= tol.zero:
        raise NotPositiveError("a must have nonzero trace")
    if schwarz_status(E, samples, seed, tol).holds is False:
        raise InvalidParameterError("equidistance criterion needs a Schwarz channel")
    zeta = E.spec.centre()
    lhs = bures_distance(DensityElement.normalized(a.hermitian_part(), tol), zeta, tol)
    ea = apply(E, a).hermitian_part()
    rhs = bures_distance(DensityElement.from_element(ea / t, tol), zeta, tol)
    dom = multiplicative_domain(E, seed=seed, tol=tol)
    return EquidistanceResult(lhs, rhs, abs(lhs - rhs) <= 1e-8, dom.contains(a, tol))


class ObstructionWitness(NamedTuple):
    i: int
    j: int
    before: float
    after: float


def correctability_obstruction(E: Channel, codes: Sequence[AlgElement],
                               tol: Tolerances = DEFAULT_TOL) -> ObstructionWitness | None:
    """First code pair whose Bures distance strictly shrinks under ``E``.

    A recovery channel ``R`` with ``R∘E = id`` on the codes would be
    nonexpansive and would restore the lost distance, so such a pair rules
    recovery out.  ``None`` means distances are all kept (a necessary
    condition for correctability).
    """
    if len(codes) < 2:
        raise InvalidParameterError("need at least two codes")
    codes = [DensityElement.from_element(c, tol) for c in codes]
    images = [DensityElement.from_element(apply(E, c).hermitian_part(), tol) for c in codes]
    for i, j in combinations(range(len(codes)), 2):
        before = bures_distance(codes[i], codes[j], tol)
        after = bures_distance(images[i], images[j], tol)
        if after < before - 1e-8:
            return ObstructionWitness(i, j, before, after)
    return None


def inverse_positivity_check(E: Channel, samples: int = 50, seed: int = 0,
                             tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Search for positive ``x`` with ``E^{-1}(x)`` not positive.

    Candidates are diagonal matrix units, random rank-one projections and
    random positive elements, all of operator norm 1.  A singular superoperator (condition number at
    least ``CONDITION_LIMIT``) yields an ``undetermined`` verdict with
    certificate ``not_invertible``.
    """
    spec = E.spec
    cond = float(np.linalg.cond(E.superop))
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        return PropertyVerdict("inverse_positive", Status.UNDETERMINED, "not_invertible",
                               detail={"condition_number": cond})
    if INVERSE_POSITIVE in E.provenance.facts:
        return PropertyVerdict("inverse_positive", Status.CERTIFIED_TRUE,
                               f"provenance:{E.provenance.kind}", detail={"condition_number": cond})
    inv = np.linalg.inv(E.superop)
    rng = rng_stream(seed, "inverse")
    cands = [spec.unit(j, k, k) for j, d in enumerate(spec.block_dims) for k in range(d)]
    for i in range(samples):
        if i % 2 == 0:
            v = random_rank_one(spec, rng)
            cands.append(v @ v.H / (v @ v.H).opnorm())
        else:
            a = random_psd(spec, rng)
            cands.append(a / a.opnorm())
    worst, witness = np.inf, None
    for x in cands:
        lam = spec.unvec(inv @ spec.vec(x)).min_eigenvalue()
        if lam < worst:
            worst, witness = lam, x
    detail = {"condition_number": cond, "min_eigenvalue": float(worst)}
    if worst < -tol.psd:
        return PropertyVerdict("inverse_positive", Status.CERTIFIED_FALSE, "negative_image",
                               witness=witness, samples_used=len(cands), seed=seed, detail=detail)
    return PropertyVerdict("inverse_positive", Status.UNDETERMINED, "search_exhausted",
                           samples_used=len(cands), seed=seed, detail=detail)


@dataclass(frozen=True)
class ExtremePointReport:
    """Smallest observed ``‖E(u)* E(u) - 1‖`` over nonscalar unitaries ``u``."""

    min_defect: float
    witness: AlgElement
    samples_used: int
    seed: int


def extreme_point_probe(E: Channel, samples: int = 200, seed: int = 0) -> ExtremePointReport:
    """Probe whether ``E`` sends nonscalar unitaries to unitaries.

    Structured unitaries (diagonal sign patterns, the cyclic shift) come
    first, then Haar samples.  No threshold on the defect is asserted.
    """
    spec = E.spec
    if not spec.is_factor:
        raise InvalidParameterError("extreme_point_probe needs a single block")
    d = spec.block_dims[0]
    if d < 2:
        raise InvalidParameterError("M_1 has no nonscalar unitaries")
    rng = rng_stream(seed, "extreme")
    us = [spec.element([np.diag([1.0] * k + [-1.0] * (d - k))]) for k in range(1, d)]
    us.append(spec.element([np.roll(np.eye(d), 1, axis=0)]))
    us += [random_unitary(spec, rng) for _ in range(samples)]
    one = spec.identity()
    best, witness = np.inf, None
    for u in us:
        eu = apply(E, u)
        defect = (eu.H @ eu - one).opnorm()
        if defect < best:
            best, witness = defect, u
    return ExtremePointReport(float(best), witness, len(us), seed)
