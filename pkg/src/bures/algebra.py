"""Finite-dimensional tracial C*-algebras.

An algebra is a direct sum ``M_{d_1} ⊕ ... ⊕ M_{d_m}`` carrying the faithful
trace ``τ(x) = Σ_j w_j Tr(x_j)`` with strictly positive weights ``w_j``.
Elements are stored block by block; every arithmetic operation acts blockwise.

The vector-space coordinates used throughout the package are taken in the
τ-orthonormal basis of scaled matrix units ``e^{(j)}_{kl} / sqrt(w_j)``,
ordered block by block and row-major inside a block.  In these coordinates the
τ-inner product ``<x, y> = τ(y* x)`` is the standard complex inner product.
"""
from __future__ import annotations

import dataclasses
import zlib
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NotHermitianError, NotPositiveError, NumericalError, StructuralError

__all__ = [
    "Tolerances", "DEFAULT_TOL", "AlgebraSpec", "AlgElement", "DensityElement",
    "matrix_algebra", "trace", "tau_inner_product", "psd_sqrt", "hermitian_function",
    "abs_element", "trace_norm", "is_orthogonal_pair", "random_density",
    "sample_density", "random_element", "random_unitary", "random_psd",
    "random_projection", "rng_stream", "noise_floor",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds.  Every check in the package reads from one of these."""

    herm: float = 1e-10    # Hermiticity
    psd: float = 1e-8      # eigenvalues in [-psd, 0) are clipped to 0
    zero: float = 1e-9     # zero tests
    recon: float = 1e-9    # reconstruction, e.g. sqrt(a)**2 == a
    fid: float = 1e-8      # agreement of the two fidelity routes
    fix: float = 1e-8      # relative singular-value threshold for kernels
    spec: float = 1e-8     # peripheral spectrum
    member: float = 1e-7   # subspace membership / multiplicativity residuals

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)


DEFAULT_TOL = Tolerances()


def rng_stream(seed: int, *keys) -> np.random.Generator:
    """Deterministic generator for ``seed`` split by the given keys.

    String keys are hashed with CRC32 so that the same key always selects the
    same stream.
    """
    entropy = [int(seed)]
    for key in keys:
        entropy.append(zlib.crc32(key.encode()) if isinstance(key, str) else int(key))
    return np.random.default_rng(entropy)


class AlgebraSpec:
    """Block dimensions plus the trace weights of a finite-dimensional algebra."""

    __slots__ = ("block_dims", "trace_weights", "_offsets")

    def __init__(self, block_dims: Sequence[int], trace_weights: Sequence[float] | None = None):
        dims = tuple(int(d) for d in block_dims)
        if not dims:
            raise StructuralError("an algebra needs at least one block")
        if any(d < 1 for d in dims):
            raise StructuralError(f"block dimensions must be positive, got {dims}")
        if trace_weights is None:
            weights = (1.0,) * len(dims)
        else:
            weights = tuple(float(w) for w in trace_weights)
        if len(weights) != len(dims):
            raise StructuralError(
                f"{len(dims)} blocks but {len(weights)} trace weights")
        if not all(np.isfinite(w) and w > 0 for w in weights):
            raise StructuralError("trace weight must be positive (faithfulness)")
        offsets = np.cumsum([0] + [d * d for d in dims])
        object.__setattr__(self, "block_dims", dims)
        object.__setattr__(self, "trace_weights", weights)
        object.__setattr__(self, "_offsets", tuple(int(o) for o in offsets))

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraSpec is immutable")

    def __eq__(self, other):
        if not isinstance(other, AlgebraSpec):
            return NotImplemented
        return self.block_dims == other.block_dims and self.trace_weights == other.trace_weights

    def __hash__(self):
        return hash((self.block_dims, self.trace_weights))

    def __repr__(self):
        return f"AlgebraSpec(block_dims={list(self.block_dims)}, trace_weights={list(self.trace_weights)})"

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    @property
    def dim(self) -> int:
        """Vector-space dimension ``Σ d_j²``."""
        return self._offsets[-1]

    @property
    def tau_one(self) -> float:
        return float(sum(w * d for w, d in zip(self.trace_weights, self.block_dims)))

    @property
    def is_abelian(self) -> bool:
        return all(d == 1 for d in self.block_dims)

    @property
    def is_factor(self) -> bool:
        return self.n_blocks == 1

    def block_slice(self, j: int) -> slice:
        return slice(self._offsets[j], self._offsets[j + 1])

    def element(self, blocks) -> "AlgElement":
        return AlgElement(self, blocks)

    def zero(self) -> "AlgElement":
        return AlgElement(self, [np.zeros((d, d)) for d in self.block_dims])

    def identity(self) -> "AlgElement":
        return AlgElement(self, [np.eye(d) for d in self.block_dims])

    def scalar(self, c: complex) -> "AlgElement":
        return AlgElement(self, [c * np.eye(d) for d in self.block_dims])

    def unit(self, j: int, k: int, l: int) -> "AlgElement":
        """Matrix unit ``e^{(j)}_{kl}`` (zero-based indices)."""
        blocks = [np.zeros((d, d)) for d in self.block_dims]
        blocks[j][k, l] = 1.0
        return AlgElement(self, blocks)

    def units(self) -> Iterable[tuple[int, int, int, "AlgElement"]]:
        for j, d in enumerate(self.block_dims):
            for k in range(d):
                for l in range(d):
                    yield j, k, l, self.unit(j, k, l)

    def centre(self) -> "DensityElement":
        """The centre ``ζ = τ(1)^{-1} 1`` of the density space."""
        return DensityElement(self, [np.eye(d) / self.tau_one for d in self.block_dims])

    def vec(self, x: "AlgElement") -> np.ndarray:
        """Coordinates of ``x`` in the τ-orthonormal basis."""
        self.check(x)
        return np.concatenate([np.sqrt(w) * b.ravel() for w, b in zip(self.trace_weights, x.blocks)])

    def unvec(self, v: np.ndarray) -> "AlgElement":
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise StructuralError(f"coordinate vector must have shape ({self.dim},), got {v.shape}")
        blocks = [v[self.block_slice(j)].reshape(d, d) / np.sqrt(w)
                  for j, (d, w) in enumerate(zip(self.block_dims, self.trace_weights))]
        return AlgElement(self, blocks)

    def basis(self) -> list["AlgElement"]:
        """The τ-orthonormal basis, in coordinate order."""
        return [self.unvec(col) for col in np.eye(self.dim)]

    def check(self, x: "AlgElement") -> None:
        if not isinstance(x, AlgElement):
            raise StructuralError(f"expected an AlgElement, got {type(x).__name__}")
        if x.spec != self:
            raise StructuralError(f"element belongs to {x.spec}, not {self}")


def matrix_algebra(d: int, weight: float = 1.0) -> AlgebraSpec:
    """``M_d`` with trace ``weight * Tr``; ``weight=1`` is the canonical trace."""
    return AlgebraSpec((d,), (weight,))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class AlgElement:
    """Block-diagonal element of an :class:`AlgebraSpec`.

    ``x @ y`` is the algebra product, ``x * c`` scales, ``x.H`` is the adjoint.
    """

    __slots__ = ("spec", "blocks")
    __array_ufunc__ = None  # numpy scalars defer to __rmul__

    def __init__(self, spec: AlgebraSpec, blocks):
        blocks = list(blocks)
        if len(blocks) != spec.n_blocks:
            raise StructuralError(f"expected {spec.n_blocks} blocks, got {len(blocks)}")
        frozen = []
        for j, (b, d) in enumerate(zip(blocks, spec.block_dims)):
            arr = np.array(b, dtype=complex)
            if arr.shape != (d, d):
                raise StructuralError(f"block {j} must have shape ({d}, {d}), got {arr.shape}")
            frozen.append(_freeze(arr))
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "blocks", tuple(frozen))

    def __setattr__(self, name, value):
        raise AttributeError("AlgElement is immutable")

    def _same(self, other: "AlgElement") -> None:
        if not isinstance(other, AlgElement):
            raise StructuralError(f"expected an AlgElement, got {type(other).__name__}")
        if other.spec != self.spec:
            raise StructuralError("elements belong to different algebras")

    def _new(self, blocks) -> "AlgElement":
        return AlgElement(self.spec, blocks)

    def __add__(self, other):
        self._same(other)
        return self._new([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._same(other)
        return self._new([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return self._new([-a for a in self.blocks])

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return self._new([c * a for a in self.blocks])

    __rmul__ = __mul__

    def __truediv__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return self._new([a / c for a in self.blocks])

    def __matmul__(self, other):
        self._same(other)
        return self._new([a @ b for a, b in zip(self.blocks, other.blocks)])

    @property
    def H(self) -> "AlgElement":
        return self._new([a.conj().T for a in self.blocks])

    def adjoint(self) -> "AlgElement":
        return self.H

    def transpose(self) -> "AlgElement":
        return self._new([a.T for a in self.blocks])

    def trace(self) -> complex:
        return complex(sum(w * np.trace(b) for w, b in zip(self.spec.trace_weights, self.blocks)))

    def norm2(self) -> float:
        """``‖x‖_{2,τ} = sqrt(τ(x* x))``."""
        return float(np.sqrt(sum(w * np.vdot(b, b).real for w, b in zip(self.spec.trace_weights, self.blocks))))

    def opnorm(self) -> float:
        """C*-norm: the largest operator norm over the blocks."""
        return float(max(np.linalg.norm(b, 2) for b in self.blocks))

    def max_abs(self) -> float:
        return float(max(np.abs(b).max() for b in self.blocks))

    def is_hermitian(self, tol: float = DEFAULT_TOL.herm) -> bool:
        scale = max(1.0, self.max_abs())
        return all(np.abs(b - b.conj().T).max() <= tol * scale for b in self.blocks)

    def hermitian_part(self) -> "AlgElement":
        return self._new([(b + b.conj().T) / 2 for b in self.blocks])

    def eigvalsh(self) -> np.ndarray:
        """Eigenvalues of the Hermitian part, all blocks concatenated."""
        return np.concatenate([np.linalg.eigvalsh((b + b.conj().T) / 2) for b in self.blocks])

    def min_eigenvalue(self) -> float:
        return float(self.eigvalsh().min())

    def is_psd(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.is_hermitian(tol.herm) and self.min_eigenvalue() >= -tol.psd

    def allclose(self, other: "AlgElement", atol: float = 1e-10) -> bool:
        self._same(other)
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def to_matrix(self) -> np.ndarray:
        """Dense block-diagonal matrix of size ``Σ d_j``."""
        n = sum(self.spec.block_dims)
        out = np.zeros((n, n), dtype=complex)
        i = 0
        for b in self.blocks:
            d = b.shape[0]
            out[i:i + d, i:i + d] = b
            i += d
        return out

    def __repr__(self):
        inner = ", ".join(np.array2string(b, precision=4, suppress_small=True) for b in self.blocks)
        return f"{type(self).__name__}({inner})"


class DensityElement(AlgElement):
    """A positive element of unit trace, validated at construction."""

    __slots__ = ()
    validated = True

    def __init__(self, spec: AlgebraSpec, blocks, tol: Tolerances = DEFAULT_TOL):
        super().__init__(spec, blocks)
        if not self.is_hermitian(tol.herm):
            raise NotHermitianError("density element must be Hermitian")
        lam = self.min_eigenvalue()
        if lam < -tol.psd:
            raise NotPositiveError(f"density element has eigenvalue {lam:.3e} < 0")
        t = self.trace()
        if abs(t - 1) > tol.zero:
            raise NotPositiveError(f"density element has trace {t:.12g}, expected 1")

    @classmethod
    def from_element(cls, x: AlgElement, tol: Tolerances = DEFAULT_TOL) -> "DensityElement":
        if isinstance(x, DensityElement):
            return x
        return cls(x.spec, x.blocks, tol)

    @classmethod
    def normalized(cls, x: AlgElement, tol: Tolerances = DEFAULT_TOL) -> "DensityElement":
        """``x / τ(x)`` for a nonzero positive ``x``."""
        t = x.trace().real
        if t <= tol.zero:
            raise NotPositiveError(f"cannot normalise an element of trace {t:.3e}")
        return cls(x.spec, [b / t for b in x.blocks], tol)


def trace(spec: AlgebraSpec, x: AlgElement) -> complex:
    spec.check(x)
    return x.trace()


def tau_inner_product(x: AlgElement, y: AlgElement) -> complex:
    """``<x, y> = τ(y* x)``, linear in ``x`` and conjugate-linear in ``y``."""
    x._same(y)
    return complex(sum(w * np.vdot(b, a) for w, a, b in zip(x.spec.trace_weights, x.blocks, y.blocks)))


def _hermitian_blocks(a: AlgElement, tol: Tolerances):
    if not a.is_hermitian(tol.herm):
        raise NotHermitianError("element is not Hermitian")
    return [(b + b.conj().T) / 2 for b in a.blocks]


def hermitian_function(a: AlgElement, f: Callable[[np.ndarray], np.ndarray],
                       tol: Tolerances = DEFAULT_TOL) -> AlgElement:
    """Apply ``f`` to a Hermitian element through its spectral decomposition."""
    out = []
    for b in _hermitian_blocks(a, tol):
        lam, vecs = np.linalg.eigh(b)
        out.append((vecs * f(lam)) @ vecs.conj().T)
    return AlgElement(a.spec, out)


def noise_floor(lam: np.ndarray) -> float:
    """Eigenvalues of a Hermitian matrix below this are indistinguishable from round-off."""
    if not lam.size:
        return 0.0
    return 10.0 * lam.size * np.finfo(float).eps * float(np.abs(lam).max())


def _clipped(lam: np.ndarray, tol: Tolerances) -> np.ndarray:
    if lam.size and lam.min() < -tol.psd:
        raise NotPositiveError(f"eigenvalue {lam.min():.3e} is below -{tol.psd:g}")
    # round-off eigenvalues of a rank-deficient input would become ~1e-8 after a square root
    return np.where(lam <= noise_floor(lam), 0.0, lam)


def psd_sqrt(a: AlgElement, tol: Tolerances = DEFAULT_TOL) -> AlgElement:
    """Positive square root of a positive element.

    Eigenvalues in ``[-tol.psd, 0)`` are clipped to zero, as are positive
    eigenvalues under the round-off floor of :func:`noise_floor`; anything
    below ``-tol.psd`` raises :class:`NotPositiveError`.
    """
    out = []
    for b in _hermitian_blocks(a, tol):
        lam, vecs = np.linalg.eigh(b)
        root = np.sqrt(_clipped(lam, tol))
        s = (vecs * root) @ vecs.conj().T
        out.append((s + s.conj().T) / 2)
    return AlgElement(a.spec, out)


def abs_element(x: AlgElement) -> AlgElement:
    """``|x| = (x* x)^{1/2}``, computed from an SVD of each block."""
    out = []
    for b in x.blocks:
        _, s, vh = np.linalg.svd(b)
        m = (vh.conj().T * s) @ vh
        out.append((m + m.conj().T) / 2)
    return AlgElement(x.spec, out)


def trace_norm(x: AlgElement) -> float:
    """``‖x‖_{1,τ} = τ(|x|)``."""
    return float(sum(w * np.linalg.svd(b, compute_uv=False).sum()
                     for w, b in zip(x.spec.trace_weights, x.blocks)))


def is_orthogonal_pair(x: AlgElement, y: AlgElement, tol: Tolerances = DEFAULT_TOL) -> bool:
    """``x ⊥ y``: ``xy = yx = x*y = xy* = 0``."""
    x._same(y)
    products = (x @ y, y @ x, x.H @ y, x @ y.H)
    return all(p.opnorm() <= tol.zero for p in products)


def _gaussian_block(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def sample_density(spec: AlgebraSpec, rng: np.random.Generator,
                   rank_profile: Sequence[int] | None = None,
                   tol: Tolerances = DEFAULT_TOL, max_tries: int = 16) -> DensityElement:
    """Random density ``g g* / τ(g g*)`` with ``g`` complex Gaussian per block.

    ``rank_profile[j]`` sets the rank of block ``j`` (0 gives a zero block).
    """
    if rank_profile is None:
        ranks = spec.block_dims
    else:
        ranks = tuple(int(r) for r in rank_profile)
        if len(ranks) != spec.n_blocks or any(r < 0 or r > d for r, d in zip(ranks, spec.block_dims)):
            raise StructuralError(f"invalid rank profile {ranks} for {spec}")
        if not any(ranks):
            raise StructuralError("rank profile must leave at least one nonzero block")
    for _ in range(max_tries):
        blocks = []
        for d, r in zip(spec.block_dims, ranks):
            g = _gaussian_block(rng, d, r)
            blocks.append(g @ g.conj().T)
        x = AlgElement(spec, blocks)
        t = x.trace().real
        if t > tol.zero:
            return DensityElement(spec, [b / t for b in blocks], tol)
    raise NumericalError("could not draw a non-degenerate density sample")


def random_density(spec: AlgebraSpec, rng_seed: int | np.random.Generator,
                   rank_profile: Sequence[int] | None = None,
                   tol: Tolerances = DEFAULT_TOL) -> DensityElement:
    """Reproducible random density; identical seeds give identical elements."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else rng_stream(rng_seed, "density")
    return sample_density(spec, rng, rank_profile, tol)


def random_element(spec: AlgebraSpec, rng: np.random.Generator) -> AlgElement:
    return AlgElement(spec, [_gaussian_block(rng, d, d) for d in spec.block_dims])


def random_psd(spec: AlgebraSpec, rng: np.random.Generator) -> AlgElement:
    g = random_element(spec, rng)
    return g @ g.H


def random_unitary(spec: AlgebraSpec, rng: np.random.Generator) -> AlgElement:
    """Haar-distributed unitary, one QR per block with the phase fix."""
    blocks = []
    for d in spec.block_dims:
        q, r = np.linalg.qr(_gaussian_block(rng, d, d))
        ph = np.diag(r) / np.abs(np.diag(r))
        blocks.append(q * ph)
    return AlgElement(spec, blocks)


def random_projection(spec: AlgebraSpec, rng: np.random.Generator,
                      ranks: Sequence[int] | None = None) -> AlgElement:
    """Orthogonal projection with the given rank in each block (random if omitted)."""
    if ranks is None:
        ranks = [int(rng.integers(0, d + 1)) for d in spec.block_dims]
    blocks = []
    for d, r in zip(spec.block_dims, ranks):
        q, _ = np.linalg.qr(_gaussian_block(rng, d, d))
        v = q[:, :r]
        blocks.append(v @ v.conj().T)
    return AlgElement(spec, blocks)
