"""Fixed points, multiplicative domains, irreducibility and spectra of maps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .algebra import DEFAULT_TOL, AlgElement, Tolerances, random_element, random_unitary, rng_stream
from .channels import (CONTRACTIVE, CP, POSITIVE, SCHWARZ, TP, UNITAL, Channel, PropertyVerdict,
                       Provenance, Status, apply, is_cp, is_positive, is_trace_preserving, is_unital,
                       schwarz_status)
from .errors import InvalidParameterError, NumericalError, RefusedError, TheoremViolation

__all__ = [
    "SubspaceBasis", "SpectrumReport", "CovarianceFit", "fixed_point_space",
    "multiplicative_domain", "conditional_expectation_onto_fix", "irreducibility_verdict",
    "superoperator_spectrum", "fit_unitarily_covariant", "spectral_projection",
]


@dataclass(frozen=True)
class SubspaceBasis:
    """A subspace of the algebra with a τ-orthonormal basis.

    ``coords`` holds the basis as columns in τ-orthonormal coordinates.  The
    algebra flags are the outcome of explicit membership tests.
    """

    basis: tuple
    coords: np.ndarray
    flags: dict
    status: Status = Status.CERTIFIED_TRUE
    detail: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    @property
    def is_algebra(self) -> bool:
        return all(self.flags.get(k, False) for k in ("adjoint_closed", "product_closed", "contains_identity"))

    def residual(self, x: AlgElement) -> float:
        """Relative distance from ``x`` to the subspace in the 2-norm."""
        v = x.spec.vec(x)
        r = v - self.coords @ (self.coords.conj().T @ v)
        return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(v)))

    def contains(self, x: AlgElement, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.residual(x) <= tol.member

    def project(self, x: AlgElement) -> AlgElement:
        v = x.spec.vec(x)
        return x.spec.unvec(self.coords @ (self.coords.conj().T @ v))


def _null_space(m: np.ndarray, rel: float) -> np.ndarray:
    """Orthonormal kernel basis: right singular vectors with ``s <= rel * max(1, s_max)``."""
    _, s, vh = np.linalg.svd(m)
    cutoff = rel * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def _make_subspace(spec, coords: np.ndarray, tol: Tolerances, status=Status.CERTIFIED_TRUE,
                   detail=None) -> SubspaceBasis:
    basis = tuple(spec.unvec(c) for c in coords.T)
    sub = SubspaceBasis(basis, coords, {}, status, dict(detail or {}))
    one = spec.identity()
    sub.flags["contains_identity"] = sub.contains(one, tol)
    sub.flags["adjoint_closed"] = all(sub.contains(x.H, tol) for x in basis)
    sub.flags["product_closed"] = all(sub.contains(x @ y, tol) for x in basis for y in basis)
    return sub


def _schwarz_certified(E: Channel, tol: Tolerances) -> bool:
    if SCHWARZ in E.facts:
        return True
    return (is_cp(E, tol).status is Status.CERTIFIED_TRUE
            and is_unital(E, tol).status is Status.CERTIFIED_TRUE)


def fixed_point_space(E: Channel, tol: Tolerances = DEFAULT_TOL) -> SubspaceBasis:
    """``Fix E = ker(E - id)``, from an SVD with the relative threshold ``tol.fix``.

    For a certified Schwarz channel the fixed points form a C*-algebra; a
    failing product test then raises :class:`TheoremViolation`.
    """
    coords = _null_space(E.superop - np.eye(E.spec.dim), tol.fix)
    sub = _make_subspace(E.spec, coords, tol)
    if _schwarz_certified(E, tol) and is_trace_preserving(E, tol).holds and not sub.is_algebra:
        raise TheoremViolation(f"fixed points of a Schwarz channel are not an algebra: {sub.flags}")
    return sub


def multiplicative_domain(E: Channel, checks: int = 20, seed: int = 0, samples: int = 200,
                          tol: Tolerances = DEFAULT_TOL) -> SubspaceBasis:
    """Multiplicative domain of a trace-preserving map.

    For a trace-preserving Schwarz channel ``x ∈ M_E`` exactly when
    ``‖E(x)‖_{2,τ} = ‖x‖_{2,τ}``, so ``M_E`` is the eigenspace of ``S†S`` at 1.
    The candidate space is then tested against ``checks`` random ``y``:
    ``E(xy) = E(x)E(y)`` and ``E(yx) = E(y)E(x)``.  If some candidate fails,
    the subspace of candidates that pass every test is returned with status
    ``undetermined``.

    Status is ``certified_true`` when the Schwarz property is certified,
    ``probe_passed`` when it only passed a probe of ``samples`` draws.
    """
    spec = E.spec
    if not is_trace_preserving(E, tol).holds:
        raise InvalidParameterError("multiplicative_domain needs a trace-preserving map")
    s = E.superop
    gram = s.conj().T @ s
    lam, vecs = np.linalg.eigh((gram + gram.conj().T) / 2)
    near_one = np.abs(lam - 1.0) <= tol.fix * max(1.0, float(lam.max()))
    coords = vecs[:, near_one]

    rng = rng_stream(seed, "multiplicative")
    ys = [random_element(spec, rng) for _ in range(checks)]
    ys = [y / y.opnorm() for y in ys]
    cols = []
    for v in coords.T:
        x = spec.unvec(v)
        ex = apply(E, x)
        parts = []
        for y in ys:
            ey = apply(E, y)
            parts.append(spec.vec(apply(E, x @ y) - ex @ ey))
            parts.append(spec.vec(apply(E, y @ x) - ey @ ex))
        cols.append(np.concatenate(parts))
    defect = np.column_stack(cols) if cols else np.zeros((0, 0))
    per_col = np.abs(defect).max(axis=0) if defect.size else np.zeros(0)
    residual = float(per_col.max()) if per_col.size else 0.0

    trimmed = False
    if residual > tol.member:
        trimmed = True
        keep = _null_space(defect, tol.member)
        coords = coords @ keep
        coords, _ = np.linalg.qr(coords) if coords.shape[1] else (coords, None)

    schwarz_eq = 0.0
    for v in coords.T:
        x = spec.unvec(v)
        ex = apply(E, x)
        schwarz_eq = max(schwarz_eq, (apply(E, x.H @ x) - ex.H @ ex).max_abs(),
                         (apply(E, x @ x.H) - ex @ ex.H).max_abs())

    if trimmed:
        status = Status.UNDETERMINED
    elif _schwarz_certified(E, tol):
        status = Status.CERTIFIED_TRUE
    else:
        verdict = schwarz_status(E, samples, seed, tol)
        status = Status.PROBE_PASSED if verdict.holds else Status.UNDETERMINED
    detail = {"bilinear_residual": residual, "checks": checks, "seed": seed,
              "schwarz_equality_residual": float(schwarz_eq), "trimmed": trimmed}
    return _make_subspace(spec, coords, tol, status, detail)


def spectral_projection(h: AlgElement, min_gap: float = 1e-6) -> AlgElement | None:
    """Spectral projection of Hermitian ``h`` above its largest eigenvalue gap.

    Returns ``None`` when every gap is below ``min_gap`` (``h`` is scalar).
    """
    lam = np.sort(h.eigvalsh())
    if lam.size < 2:
        return None
    gaps = np.diff(lam)
    i = int(np.argmax(gaps))
    if gaps[i] < min_gap:
        return None
    cut = (lam[i] + lam[i + 1]) / 2
    blocks = []
    for b in h.hermitian_part().blocks:
        w, v = np.linalg.eigh(b)
        up = v[:, w > cut]
        blocks.append(up @ up.conj().T)
    return AlgElement(h.spec, blocks)


def _projection_in(sub: SubspaceBasis, E: Channel, rng, tol: Tolerances, tries: int = 8):
    """Nontrivial projection ``p`` spanned by ``sub`` with ``E(p) = p``, or ``None``."""
    if sub.dimension < 2:
        return None
    spec = E.spec
    one = spec.identity()
    for _ in range(tries):
        c = rng.standard_normal(sub.dimension) + 1j * rng.standard_normal(sub.dimension)
        h = spec.unvec(sub.coords @ c).hermitian_part()
        p = spectral_projection(h)
        if p is None or p.allclose(spec.zero(), tol.zero) or p.allclose(one, tol.zero):
            continue
        if (apply(E, p) - p).max_abs() <= tol.fix:
            return p
    return None


def irreducibility_verdict(E: Channel, seed: int = 0, samples: int = 50,
                           tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Irreducibility of a trace-preserving positive map.

    For such maps ``E(p) <= p`` forces ``E(p) = p`` because τ is faithful, so
    the map is reducible exactly when a nontrivial projection is fixed.

    1. If ``Fix E`` is a verified unital *-algebra: dimension 1 certifies
       irreducibility; otherwise a spectral projection of a Hermitian fixed
       element is the witness.
    2. Abelian algebras: strong connectivity of the support graph of the
       (entrywise nonnegative) superoperator.
    3. Otherwise spectral projections of random Hermitian fixed elements are
       tried; if none is fixed the verdict is ``undetermined``.
    """
    if not is_trace_preserving(E, tol).holds:
        raise InvalidParameterError("irreducibility_verdict needs a trace-preserving map")
    if not is_positive(E, samples, seed, tol).holds:
        raise InvalidParameterError("irreducibility_verdict needs a positive map")
    spec = E.spec
    rng = rng_stream(seed, "irreducible")
    fix = fixed_point_space(E, tol)
    info = {"fix_dimension": fix.dimension, "fix_flags": dict(fix.flags)}

    if fix.is_algebra:
        if fix.dimension == 1:
            return PropertyVerdict("irreducible", Status.CERTIFIED_TRUE, "fix_is_scalars", detail=info)
        p = _projection_in(fix, E, rng, tol)
        if p is None:
            raise NumericalError("Fix E is a nontrivial algebra but no fixed projection was found")
        info["witness_residual"] = (apply(E, p) - p).max_abs()
        return PropertyVerdict("irreducible", Status.CERTIFIED_FALSE, "fixed_projection", witness=p,
                               seed=seed, detail=info)

    if spec.is_abelian:
        a = np.abs(E.superop.real) > tol.zero
        n, labels = connected_components(a.astype(int), directed=True, connection="strong")
        info["strong_components"] = int(n)
        if n == 1:
            return PropertyVerdict("irreducible", Status.CERTIFIED_TRUE, "strongly_connected", detail=info)
        # a closed class of the chain gives an invariant coordinate projection
        for comp in range(n):
            mask = labels == comp
            if not a[np.ix_(~mask, mask)].any():   # S[i, k] != 0 means mass flows k -> i
                p = spec.element([[[1.0 if m else 0.0]] for m in mask])
                info["witness_residual"] = (apply(E, p) - p).max_abs()
                return PropertyVerdict("irreducible", Status.CERTIFIED_FALSE, "closed_class",
                                       witness=p, detail=info)

    p = _projection_in(fix, E, rng, tol, tries=samples)
    if p is not None:
        info["witness_residual"] = (apply(E, p) - p).max_abs()
        return PropertyVerdict("irreducible", Status.CERTIFIED_FALSE, "fixed_projection", witness=p,
                               samples_used=samples, seed=seed, detail=info)
    return PropertyVerdict("irreducible", Status.UNDETERMINED, "projection_search",
                           samples_used=samples, seed=seed, detail=info)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    perron_value: float
    peripheral_eigenvalues: np.ndarray
    perron_in_spectrum: bool
    peripheral_trivial: bool

    def to_dict(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]
        return {
            "eigenvalues": [pair(z) for z in self.eigenvalues],
            "perron_value": self.perron_value,
            "peripheral_eigenvalues": [pair(z) for z in self.peripheral_eigenvalues],
            "perron_in_spectrum": self.perron_in_spectrum,
            "peripheral_trivial": self.peripheral_trivial,
        }


def superoperator_spectrum(E: Channel, tol: Tolerances = DEFAULT_TOL) -> SpectrumReport:
    """Eigenvalues of the superoperator sorted by decreasing modulus.

    ``peripheral_trivial`` says whether every eigenvalue on the spectral circle
    equals the Perron value.
    """
    try:
        lam = np.linalg.eigvals(E.superop)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    # round away sub-tolerance noise in the sort key only, for a stable order
    key = np.lexsort((-np.round(lam.imag, 12), -np.round(lam.real, 12), -np.round(np.abs(lam), 12)))
    lam = lam[key]
    r = float(np.abs(lam).max())
    band = tol.spec * max(1.0, r)
    peripheral = lam[np.abs(lam) >= r - band]
    in_spec = bool(np.any(np.abs(lam - r) <= band))
    trivial = bool(np.all(np.abs(peripheral - r) <= band))
    return SpectrumReport(lam, r, peripheral, in_spec, trivial)


@dataclass(frozen=True)
class CovarianceFit:
    """Outcome of fitting ``E(x) = αx + β τ(x)/τ(1) 1``.

    ``alpha``/``beta`` are ``None`` when the residual exceeds the threshold; the
    sampled commutation defect ``max ‖E(u x u*) - u E(x) u*‖`` is then set.
    """

    alpha: float | None
    beta: float | None
    residual: float
    commutation_defect: float | None = None
    anomalies: tuple = ()

    @property
    def fitted(self) -> bool:
        return self.alpha is not None


def fit_unitarily_covariant(E: Channel, samples: int = 50, seed: int = 0, threshold: float = 1e-8,
                            tol: Tolerances = DEFAULT_TOL) -> CovarianceFit:
    """Least-squares fit of the superoperator by ``α id + β Ω`` on a factor.

    On success, trace preservation should give ``α + β = 1`` and the fit
    should have ``α, β ∈ [0, 1]``; departures are listed in ``anomalies``
    instead of raising.
    """
    spec = E.spec
    if not spec.is_factor:
        raise InvalidParameterError("covariance fit is only defined on a single block")
    one = spec.vec(spec.identity())
    omega = np.outer(one, one.conj()) / spec.tau_one
    ident = np.eye(spec.dim)
    # real unknowns (α, β): stack real and imaginary parts
    design = np.column_stack([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in (ident, omega)])
    target = np.concatenate([E.superop.real.ravel(), E.superop.imag.ravel()])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    alpha, beta = (float(c) for c in coef)
    resid = float(np.linalg.norm(E.superop - alpha * ident - beta * omega)
                  / max(1.0, np.linalg.norm(E.superop)))
    if resid <= threshold:
        anomalies = []
        if is_trace_preserving(E, tol).holds and abs(alpha + beta - 1.0) > tol.member:
            anomalies.append(f"alpha + beta = {alpha + beta:.12g} for a trace-preserving map")
        for name, c in (("alpha", alpha), ("beta", beta)):
            if not -tol.member <= c <= 1.0 + tol.member:
                anomalies.append(f"{name} = {c:.12g} lies outside [0, 1]")
        return CovarianceFit(alpha, beta, resid, anomalies=tuple(anomalies))

    rng = rng_stream(seed, "covariance")
    worst = 0.0
    xs = [unit for *_, unit in spec.units()] + [random_element(spec, rng) for _ in range(samples)]
    for i, x in enumerate(xs):
        u = random_unitary(spec, rng)
        x = x / x.opnorm()
        d = apply(E, u @ x @ u.H) - u @ apply(E, x) @ u.H
        worst = max(worst, d.opnorm())
    return CovarianceFit(None, None, resid, commutation_defect=worst)


def conditional_expectation_onto_fix(E: Channel, tol: Tolerances = DEFAULT_TOL) -> Channel:
    """The τ-orthogonal projection onto ``Fix E``, as a channel.

    Refuses when ``Fix E`` is not a unital *-algebra.  The result is checked
    for idempotence, trace preservation, complete positivity, unitality and
    ``E ∘ Π = Π``.
    """
    fix = fixed_point_space(E, tol)
    if not fix.is_algebra:
        raise RefusedError(f"Fix E is not a unital *-algebra (flags {fix.flags}); "
                           "no conditional expectation onto it")
    v = fix.coords
    p = v @ v.conj().T
    facts = {TP, UNITAL, POSITIVE, CP, SCHWARZ}
    if fix.dimension == 1:
        facts.add(CONTRACTIVE)   # Π is then the completely depolarising channel
    pi = Channel(E.spec, p, provenance=Provenance("conditional_expectation", {"dim": fix.dimension},
                                                  (E.provenance,), frozenset(facts)))
    checks = {
        "idempotent": float(np.abs(p @ p - p).max()) <= 1e-10,
        "trace_preserving": is_trace_preserving(pi, tol).status is Status.CERTIFIED_TRUE,
        "cp": is_cp(pi, tol).status is Status.CERTIFIED_TRUE,
        "unital": is_unital(pi, tol).status is Status.CERTIFIED_TRUE,
        "range_fixed": float(np.abs(E.superop @ p - p).max()) <= tol.member,
    }
    if not all(checks.values()):
        raise NumericalError(f"conditional expectation failed verification: {checks}")
    return pi
