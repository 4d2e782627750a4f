"""Linear maps on the algebra: construction, application and classification.

A :class:`Channel` stores its superoperator in the τ-orthonormal basis of
scaled matrix units (see :mod:`bures.algebra`), so the τ-adjoint of a map is the
conjugate transpose of its matrix.

Verdicts come in two kinds.  *Certified* verdicts rest on an exact finite
computation (Choi spectra, ``E†(1) = 1``) or on the construction history of
the map (its :class:`Provenance`).  *Probe* verdicts come from sampling and
are never promoted to certified.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraSpec, AlgElement, Tolerances, random_element,
                      random_projection, random_unitary, rng_stream)
from .errors import InvalidParameterError, NumericalError, StructuralError

__all__ = [
    "Status", "PropertyVerdict", "Provenance", "Channel", "apply", "from_kraus",
    "standard_channel", "identity_channel", "completely_depolarising", "depolarising",
    "unitary_channel", "unitary_mixture", "transpose_map", "choi_schwarz_m2", "pauli_pair",
    "convex_combine", "compose", "tau_adjoint", "choi_matrix", "is_trace_preserving",
    "is_unital", "is_cp", "is_positive", "schwarz_probe", "schwarz_status",
    "k_positive_probe", "probe_elements", "random_rank_one", "STANDARD_KINDS",
]


class Status(str, enum.Enum):
    CERTIFIED_TRUE = "certified_true"
    CERTIFIED_FALSE = "certified_false"
    PROBE_PASSED = "probe_passed"
    PROBE_FAILED = "probe_failed_with_witness"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class PropertyVerdict:
    """Outcome of a property check.

    ``certificate`` names what backs a certified status (``"choi_spectrum"``,
    ``"adjoint_identity"``, ``"provenance:..."``, ...).  Probe statuses record
    the sample budget and seed that produced them.
    """

    prop: str
    status: Status
    certificate: str = ""
    witness: Any = None
    samples_used: int = 0
    seed: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool | None:
        if self.status in (Status.CERTIFIED_TRUE, Status.PROBE_PASSED):
            return True
        if self.status in (Status.CERTIFIED_FALSE, Status.PROBE_FAILED):
            return False
        return None

    @property
    def certified(self) -> bool:
        return self.status in (Status.CERTIFIED_TRUE, Status.CERTIFIED_FALSE)


# Facts a construction can certify.
TP, UNITAL, POSITIVE, CP, SCHWARZ, CONTRACTIVE, INVERSE_POSITIVE = (
    "trace_preserving", "unital", "positive", "cp", "schwarz", "bures_contractive",
    "inverse_positive")
_CHANNEL = frozenset({TP, POSITIVE})


@dataclass(frozen=True)
class Provenance:
    """Construction history of a map and the facts it certifies."""

    kind: str
    params: dict = field(default_factory=dict)
    children: tuple["Provenance", ...] = ()
    facts: frozenset = frozenset()

    @property
    def tag(self) -> str:
        args = [f"{k}={v}" for k, v in self.params.items() if np.isscalar(v)]
        args += [c.tag for c in self.children]
        return f"{self.kind}({', '.join(args)})"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "facts": sorted(self.facts)}
        scalars = {k: v for k, v in self.params.items() if np.isscalar(v)}
        if scalars:
            out["params"] = scalars
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out


def _convex_facts(lam: float, f1: frozenset, f2: frozenset) -> frozenset:
    if lam == 1.0:
        return frozenset(f1)
    if lam == 0.0:
        return frozenset(f2)
    shared = {TP, UNITAL, POSITIVE, CP, SCHWARZ} & f1 & f2
    # λE1 + (1-λ)E2 is Bures contractive when both are channels and one of them is.
    if _CHANNEL <= f1 and _CHANNEL <= f2 and (CONTRACTIVE in f1 or CONTRACTIVE in f2):
        shared.add(CONTRACTIVE)
    return frozenset(shared)


def _compose_facts(f1: frozenset, f2: frozenset) -> frozenset:
    shared = {TP, UNITAL, POSITIVE, CP, INVERSE_POSITIVE} & f1 & f2
    if SCHWARZ in f1 and SCHWARZ in f2:
        shared.add(SCHWARZ)
    return frozenset(shared)


def _adjoint_facts(f: frozenset) -> frozenset:
    out = {POSITIVE, CP, INVERSE_POSITIVE} & f
    if TP in f:
        out.add(UNITAL)
    if UNITAL in f:
        out.add(TP)
    return frozenset(out)


class Channel:
    """A linear map on an algebra, held as its superoperator matrix.

    The name follows the usage of the package: instances need not be trace
    preserving or positive; those are properties to be checked.
    """

    __slots__ = ("spec", "superop", "kraus", "provenance", "_cache", "_lock")

    def __init__(self, spec: AlgebraSpec, superop, *, kraus: Sequence[AlgElement] | None = None,
                 provenance: Provenance | None = None):
        s = np.array(superop, dtype=complex)
        if s.shape != (spec.dim, spec.dim):
            raise StructuralError(f"superoperator must have shape ({spec.dim}, {spec.dim}), got {s.shape}")
        s.flags.writeable = False
        self.spec = spec
        self.superop = s
        self.kraus = tuple(kraus) if kraus is not None else None
        self.provenance = provenance or Provenance("raw")
        self._cache: dict = {}
        self._lock = threading.Lock()

    @classmethod
    def from_function(cls, spec: AlgebraSpec, f: Callable[[AlgElement], AlgElement],
                      **kwargs) -> "Channel":
        cols = [spec.vec(f(b)) for b in spec.basis()]
        return cls(spec, np.column_stack(cols), **kwargs)

    def __call__(self, x: AlgElement) -> AlgElement:
        return apply(self, x)

    def __repr__(self):
        return f"Channel({self.provenance.tag}, spec={self.spec})"

    @property
    def facts(self) -> frozenset:
        """Properties certified by construction or by cached exact checks."""
        out = set(self.provenance.facts)
        for verdict in list(self._cache.values()):
            if verdict.status is Status.CERTIFIED_TRUE:
                out.add(verdict.prop)
                if verdict.prop == CP:
                    out.add(POSITIVE)
        return frozenset(out)

    def cached(self, key, compute: Callable[[], PropertyVerdict]) -> PropertyVerdict:
        """Insert-once cache of verdicts; concurrent callers see the first result."""
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        verdict = compute()
        with self._lock:
            return self._cache.setdefault(key, verdict)


def apply(E: Channel, x: AlgElement) -> AlgElement:
    E.spec.check(x)
    return E.spec.unvec(E.superop @ E.spec.vec(x))


def _require_same(E1: Channel, E2: Channel) -> None:
    if E1.spec != E2.spec:
        raise StructuralError("channels act on different algebras")


# --- constructors -----------------------------------------------------------

def from_kraus(spec: AlgebraSpec, ws: Sequence[AlgElement]) -> Channel:
    """``E(x) = Σ_k w_k x w_k*``.  Completely positive by construction."""
    ws = list(ws)
    if not ws:
        raise InvalidParameterError("Kraus list must be nonempty")
    for w in ws:
        spec.check(w)
    s = np.zeros((spec.dim, spec.dim), dtype=complex)
    for w in ws:
        # x ↦ w x w* is blockwise; its matrix in row-major coordinates is w ⊗ conj(w)
        for j, blk in enumerate(w.blocks):
            sl = spec.block_slice(j)
            s[sl, sl] += np.kron(blk, blk.conj())
    return Channel(spec, s, kraus=ws, provenance=Provenance("kraus", {"n": len(ws)},
                                                             facts=frozenset({POSITIVE, CP})))


def identity_channel(spec: AlgebraSpec) -> Channel:
    return Channel(spec, np.eye(spec.dim), kraus=[spec.identity()],
                   provenance=Provenance("identity", facts=frozenset(
                       {TP, UNITAL, POSITIVE, CP, SCHWARZ, INVERSE_POSITIVE})))


def completely_depolarising(spec: AlgebraSpec) -> Channel:
    """``Ω(x) = τ(x) / τ(1) · 1``."""
    one = spec.vec(spec.identity())
    s = np.outer(one, one.conj()) / spec.tau_one
    return Channel(spec, s, provenance=Provenance("completely_depolarising", facts=frozenset(
        {TP, UNITAL, POSITIVE, CP, SCHWARZ, CONTRACTIVE})))


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameterError(f"lambda must lie in [0, 1], got {lam}")
    return lam


def _check_unitary(u: AlgElement, tol: Tolerances) -> None:
    one = u.spec.identity()
    if not ((u.H @ u).allclose(one, tol.member) and (u @ u.H).allclose(one, tol.member)):
        raise InvalidParameterError("element is not unitary")


def unitary_channel(u: AlgElement, tol: Tolerances = DEFAULT_TOL) -> Channel:
    """``Ad_u(x) = u x u*``."""
    _check_unitary(u, tol)
    E = from_kraus(u.spec, [u])
    return Channel(u.spec, E.superop, kraus=[u], provenance=Provenance(
        "unitary", {"u": u}, facts=frozenset({TP, UNITAL, POSITIVE, CP, SCHWARZ, INVERSE_POSITIVE})))


def convex_combine(lam: float, E1: Channel, E2: Channel) -> Channel:
    """``λ E1 + (1-λ) E2``.

    The result is certified Bures contractive when ``λ ∈ (0, 1)``, both maps are
    certified channels and at least one of them is certified contractive.
    """
    lam = _check_lambda(lam)
    _require_same(E1, E2)
    s = lam * E1.superop + (1.0 - lam) * E2.superop
    kraus = None
    if E1.kraus is not None and E2.kraus is not None:
        kraus = [np.sqrt(lam) * w for w in E1.kraus if lam > 0]
        kraus += [np.sqrt(1.0 - lam) * w for w in E2.kraus if lam < 1]
    prov = Provenance("convex_combination", {"lambda": lam}, (E1.provenance, E2.provenance),
                      _convex_facts(lam, E1.facts, E2.facts))
    return Channel(E1.spec, s, kraus=kraus, provenance=prov)


def depolarising(spec: AlgebraSpec, lam: float) -> Channel:
    """``x ↦ λx + (1-λ) τ(x)/τ(1) · 1``, the mixture of the identity and Ω."""
    lam = _check_lambda(lam)
    mix = convex_combine(lam, identity_channel(spec), completely_depolarising(spec))
    prov = Provenance("depolarising", {"lambda": lam}, (mix.provenance,), mix.provenance.facts)
    return Channel(spec, mix.superop, provenance=prov)


def unitary_mixture(lam: float, u: AlgElement, v: AlgElement, tol: Tolerances = DEFAULT_TOL) -> Channel:
    """``x ↦ λ u x u* + (1-λ) v x v*`` for unitaries ``u`` and ``v``."""
    lam = _check_lambda(lam)
    mix = convex_combine(lam, unitary_channel(u, tol), unitary_channel(v, tol))
    prov = Provenance("unitary_mixture", {"lambda": lam}, mix.provenance.children,
                      mix.provenance.facts)
    return Channel(u.spec, mix.superop, kraus=mix.kraus, provenance=prov)


def pauli_pair(spec: AlgebraSpec) -> tuple[AlgElement, AlgElement]:
    """The unitaries ``[[0, 1], [1, 0]]`` and ``[[0, -i], [i, 0]]`` over ``M_2(M_m)``.

    ``spec`` must be a single block of even size ``2m``; the entries act as
    multiples of the identity of ``M_m``.
    """
    if not spec.is_factor or spec.block_dims[0] % 2:
        raise InvalidParameterError("pauli_pair needs a single block of even dimension")
    m = spec.block_dims[0] // 2
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    return spec.element([np.kron(x, np.eye(m))]), spec.element([np.kron(y, np.eye(m))])


def transpose_map(spec: AlgebraSpec) -> Channel:
    """Blockwise transpose.  Positive and trace preserving; not CP when some ``d_j > 1``."""
    return Channel.from_function(spec, AlgElement.transpose, provenance=Provenance(
        "transpose", facts=frozenset({TP, UNITAL, POSITIVE, INVERSE_POSITIVE})))


def choi_schwarz_m2(spec: AlgebraSpec | None = None) -> Channel:
    """Choi's Schwarz map on ``M_2`` with the canonical trace.

    ``x ↦ ½ [[x11 + t, x21], [x12, x22 + t]]`` with ``t = (x11 + x22)/2``.  It
    equals ``½ Ω + ½ (transpose)``, a mixture of two channels one of which is
    Bures contractive; the Schwarz property is Choi's result.
    """
    spec = spec or AlgebraSpec((2,), (1.0,))
    if spec != AlgebraSpec((2,), (1.0,)):
        raise InvalidParameterError("choi_schwarz_m2 is defined on M_2 with the canonical trace")

    def formula(x: AlgElement) -> AlgElement:
        (a,) = x.blocks
        t = (a[0, 0] + a[1, 1]) / 2
        return spec.element([0.5 * np.array([[a[0, 0] + t, a[1, 0]], [a[0, 1], a[1, 1] + t]])])

    direct = Channel.from_function(spec, formula)
    split = convex_combine(0.5, completely_depolarising(spec), transpose_map(spec))
    if not np.allclose(direct.superop, split.superop, rtol=0, atol=1e-12):
        raise NumericalError("Choi-Schwarz decomposition check failed")
    prov = Provenance("choi_schwarz_m2", children=(split.provenance,),
                      facts=split.provenance.facts | {SCHWARZ})
    return Channel(spec, direct.superop, provenance=prov)


def compose(E1: Channel, E2: Channel) -> Channel:
    """``E1 ∘ E2``."""
    _require_same(E1, E2)
    kraus = None
    if E1.kraus is not None and E2.kraus is not None:
        kraus = [a @ b for a in E1.kraus for b in E2.kraus]
    prov = Provenance("compose", children=(E1.provenance, E2.provenance),
                      facts=_compose_facts(E1.facts, E2.facts))
    return Channel(E1.spec, E1.superop @ E2.superop, kraus=kraus, provenance=prov)


def tau_adjoint(E: Channel) -> Channel:
    """The map ``E†`` with ``<E(x), y> = <x, E†(y)>`` in the τ-inner product."""
    kraus = [w.H for w in E.kraus] if E.kraus is not None else None
    prov = Provenance("adjoint", children=(E.provenance,), facts=_adjoint_facts(E.facts))
    return Channel(E.spec, E.superop.conj().T, kraus=kraus, provenance=prov)


STANDARD_KINDS = ("identity", "completely_depolarising", "depolarising", "unitary",
                  "unitary_mixture", "choi_schwarz_m2", "transpose")


def standard_channel(kind: str, spec: AlgebraSpec, **params) -> Channel:
    """Build one of the named maps in :data:`STANDARD_KINDS`.

    ``depolarising`` takes ``lam``; ``unitary`` takes ``u``; ``unitary_mixture``
    takes ``lam`` and optionally ``u``, ``v`` (default: :func:`pauli_pair`).
    """
    if kind == "identity":
        return identity_channel(spec)
    if kind == "completely_depolarising":
        return completely_depolarising(spec)
    if kind == "depolarising":
        return depolarising(spec, params["lam"])
    if kind == "unitary":
        return unitary_channel(params["u"])
    if kind == "unitary_mixture":
        u, v = params.get("u"), params.get("v")
        if u is None or v is None:
            u, v = pauli_pair(spec)
        return unitary_mixture(params["lam"], u, v)
    if kind == "choi_schwarz_m2":
        return choi_schwarz_m2(spec)
    if kind == "transpose":
        return transpose_map(spec)
    raise InvalidParameterError(f"unknown channel kind {kind!r}")


# --- exact checks -----------------------------------------------------------

def choi_matrix(E: Channel) -> dict[tuple[int, int], np.ndarray]:
    """Choi matrix of each block component ``E_{j'j}: M_{d_j} -> M_{d_j'}``.

    Keys are ``(source block, target block)``; entry ``[(i, k), (l, m)]`` of
    each matrix is ``E(e^{(j)}_{il})_{j'}[k, m]`` with row-major pairing.
    """
    spec = E.spec
    out = {}
    images = {}
    for j, i, l, unit in spec.units():
        images[(j, i, l)] = apply(E, unit)
    for j, d in enumerate(spec.block_dims):
        for jj, dd in enumerate(spec.block_dims):
            c = np.zeros((d * dd, d * dd), dtype=complex)
            for i in range(d):
                for l in range(d):
                    c[i * dd:(i + 1) * dd, l * dd:(l + 1) * dd] = images[(j, i, l)].blocks[jj]
            out[(j, jj)] = c
    return out


def is_trace_preserving(E: Channel, tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Exact check of ``τ∘E = τ`` through ``E†(1) = 1``.

    A failing verdict carries ``E†(1) - 1`` as witness: for that ``x``,
    ``τ(E(x)) - τ(x) = ‖x‖²_{2,τ} ≠ 0``.
    """
    def compute():
        spec = E.spec
        one = spec.identity()
        diff = spec.unvec(E.superop.conj().T @ spec.vec(one)) - one
        resid = diff.max_abs()
        if resid <= tol.zero:
            return PropertyVerdict(TP, Status.CERTIFIED_TRUE, "adjoint_identity", detail={"residual": resid})
        return PropertyVerdict(TP, Status.CERTIFIED_FALSE, "adjoint_identity", witness=diff,
                               detail={"residual": resid})
    return E.cached((TP, tol), compute)


def is_unital(E: Channel, tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    def compute():
        one = E.spec.identity()
        diff = apply(E, one) - one
        resid = diff.max_abs()
        status = Status.CERTIFIED_TRUE if resid <= tol.zero else Status.CERTIFIED_FALSE
        return PropertyVerdict(UNITAL, status, "image_of_identity",
                               witness=None if resid <= tol.zero else diff, detail={"residual": resid})
    return E.cached((UNITAL, tol), compute)


def is_cp(E: Channel, tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Complete positivity: every block Choi matrix is positive semidefinite."""
    def compute():
        worst, where, vec = np.inf, None, None
        eigs = {}
        for key, c in choi_matrix(E).items():
            h = (c + c.conj().T) / 2
            if np.abs(c - c.conj().T).max() > tol.herm * max(1.0, np.abs(c).max()):
                return PropertyVerdict(CP, Status.CERTIFIED_FALSE, "choi_not_hermitian",
                                       detail={"block_pair": list(key)})
            lam, vecs = np.linalg.eigh(h)
            eigs[key] = lam
            if lam[0] < worst:
                worst, where, vec = float(lam[0]), key, vecs[:, 0]
        detail = {"min_eigenvalue": worst, "block_pair": list(where),
                  "eigenvalues": {f"{a}->{b}": v.tolist() for (a, b), v in eigs.items()}}
        if worst >= -tol.psd:
            return PropertyVerdict(CP, Status.CERTIFIED_TRUE, "choi_spectrum", detail=detail)
        return PropertyVerdict(CP, Status.CERTIFIED_FALSE, "choi_spectrum", witness=vec, detail=detail)
    return E.cached((CP, tol), compute)


# --- probes -----------------------------------------------------------------

def probe_elements(spec: AlgebraSpec, rng: np.random.Generator, n_random: int) -> list[AlgElement]:
    """Structured test elements followed by ``n_random`` random ones.

    The structured set holds every matrix unit, the rank-one diagonal
    projections, rank-one operators between random vectors, Hermitian
    elements, random unitaries and projections, and commutators.  Random
    elements cycle through Gaussian, unitary, projection, Hermitian and rank
    one draws.  Everything is scaled to operator norm 1.
    """
    out = [unit for *_, unit in spec.units()]
    for _ in range(2):
        out.append(random_unitary(spec, rng))
        out.append(_nonzero_projection(spec, rng))
        g = random_element(spec, rng)
        out.append(g + g.H)
        h = random_element(spec, rng)
        out.append(g @ h - h @ g)
    makers = [
        lambda: random_element(spec, rng),
        lambda: random_unitary(spec, rng),
        lambda: _nonzero_projection(spec, rng),
        lambda: random_element(spec, rng).hermitian_part(),
        lambda: random_rank_one(spec, rng),
    ]
    out.extend(makers[i % len(makers)]() for i in range(n_random))
    return [x / x.opnorm() for x in out if x.opnorm() > 1e-12]


def _nonzero_projection(spec: AlgebraSpec, rng: np.random.Generator) -> AlgElement:
    while True:
        p = random_projection(spec, rng)
        if p.max_abs() > 0.5:
            return p


def random_rank_one(spec: AlgebraSpec, rng: np.random.Generator) -> AlgElement:
    blocks = []
    for d in spec.block_dims:
        a = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        blocks.append(np.outer(a, b.conj()))
    return AlgElement(spec, blocks)


def schwarz_probe(E: Channel, samples: int = 500, seed: int = 0,
                  tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Search for ``x`` with ``E(x*x) - E(x)*E(x)`` not positive.

    A CP unital map is 2-positive and unital, hence Schwarz, and gets a
    certified verdict without sampling.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be at least 1")
    if is_cp(E, tol).status is Status.CERTIFIED_TRUE and is_unital(E, tol).status is Status.CERTIFIED_TRUE:
        return PropertyVerdict(SCHWARZ, Status.CERTIFIED_TRUE, "cp_and_unital")

    def compute():
        rng = rng_stream(seed, "schwarz")
        worst, witness = np.inf, None
        xs = probe_elements(E.spec, rng, samples)
        for x in xs:
            ex = apply(E, x)
            gap = apply(E, x.H @ x) - ex.H @ ex
            lam = gap.min_eigenvalue()
            if lam < worst:
                worst, witness = lam, x
        detail = {"min_eigenvalue": float(worst)}
        if worst < -tol.psd:
            return PropertyVerdict(SCHWARZ, Status.PROBE_FAILED, "sampling", witness=witness,
                                   samples_used=len(xs), seed=seed, detail=detail)
        return PropertyVerdict(SCHWARZ, Status.PROBE_PASSED, "sampling", samples_used=len(xs),
                               seed=seed, detail=detail)
    return E.cached(("schwarz_probe", samples, seed, tol), compute)


def _min_over_schmidt_rank(c: np.ndarray, n: int, m: int, k: int, rng: np.random.Generator,
                           starts: int, sweeps: int = 25) -> tuple[float, np.ndarray]:
    """Approximate ``min <ξ, C ξ>`` over unit ``ξ ∈ C^n ⊗ C^m`` of Schmidt rank ≤ k.

    Alternating minimisation on ``Ξ = A Bᵀ``: with one factor fixed and
    orthonormalised, the other is the lowest eigenvector of a compressed
    Hermitian matrix.
    """
    h = (c + c.conj().T) / 2
    best, best_vec = np.inf, None
    for _ in range(starts):
        b = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        for _ in range(sweeps):
            q, _ = np.linalg.qr(b)
            lift = np.kron(np.eye(n), q)          # vec(A qᵀ) = lift @ vec(A)
            lam, vecs = np.linalg.eigh(lift.conj().T @ h @ lift)
            a = vecs[:, 0].reshape(n, k)
            q, _ = np.linalg.qr(a)
            lift = np.kron(q, np.eye(m))          # vec(q M) = lift @ vec(M), M = Bᵀ
            lam, vecs = np.linalg.eigh(lift.conj().T @ h @ lift)
            b = vecs[:, 0].reshape(k, m).T
        xi = lift @ vecs[:, 0]
        xi /= np.linalg.norm(xi)
        val = float(np.real(np.vdot(xi, h @ xi)))
        if val < best:
            best, best_vec = val, xi
    return best, best_vec


def k_positive_probe(E: Channel, k: int, samples: int = 50, seed: int = 0,
                     tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """k-positivity through Choi matrices tested on Schmidt-rank-≤k vectors.

    For block pairs with ``k >= min(d_j, d_j')`` the test is the exact PSD
    check.  Elsewhere ``samples`` random starts of an alternating
    minimisation look for a negative value.  A negative value is a genuine
    certificate of failure; its absence is certified only when every block
    pair was checked exactly.
    """
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"k must be a positive integer, got {k}")
    k = int(k)

    def compute():
        rng = rng_stream(seed, "k_positive", k)
        spec = E.spec
        worst, witness, where = np.inf, None, None
        exact = True
        for (j, jj), c in choi_matrix(E).items():
            n, m = spec.block_dims[j], spec.block_dims[jj]
            if k >= min(n, m):
                lam, vecs = np.linalg.eigh((c + c.conj().T) / 2)
                val, vec = float(lam[0]), vecs[:, 0]
            else:
                exact = False
                val, vec = _min_over_schmidt_rank(c, n, m, k, rng, samples)
            if val < worst:
                worst, witness, where = val, vec, (j, jj)
        detail = {"k": k, "min_value": worst, "block_pair": list(where), "exact": exact}
        if worst < -tol.psd:
            return PropertyVerdict(f"{k}-positive", Status.CERTIFIED_FALSE, "schmidt_vector",
                                   witness=witness, samples_used=samples, seed=seed, detail=detail)
        if exact:
            return PropertyVerdict(f"{k}-positive", Status.CERTIFIED_TRUE, "choi_spectrum", detail=detail)
        return PropertyVerdict(f"{k}-positive", Status.PROBE_PASSED, "sampling",
                               samples_used=samples, seed=seed, detail=detail)
    return E.cached(("k_positive", k, samples, seed, tol), compute)


def is_positive(E: Channel, samples: int = 50, seed: int = 0,
                tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Positivity from construction, from complete positivity, or by probing."""
    if POSITIVE in E.provenance.facts:
        return PropertyVerdict(POSITIVE, Status.CERTIFIED_TRUE, f"provenance:{E.provenance.kind}")
    if is_cp(E, tol).status is Status.CERTIFIED_TRUE:
        return PropertyVerdict(POSITIVE, Status.CERTIFIED_TRUE, "choi_spectrum")
    v = k_positive_probe(E, 1, samples, seed, tol)
    return PropertyVerdict(POSITIVE, v.status, v.certificate, v.witness, v.samples_used, v.seed, v.detail)


def schwarz_status(E: Channel, samples: int = 500, seed: int = 0,
                   tol: Tolerances = DEFAULT_TOL) -> PropertyVerdict:
    """Schwarz property from construction if available, otherwise :func:`schwarz_probe`."""
    if SCHWARZ in E.provenance.facts:
        return PropertyVerdict(SCHWARZ, Status.CERTIFIED_TRUE, f"provenance:{E.provenance.kind}")
    return schwarz_probe(E, samples, seed, tol)
