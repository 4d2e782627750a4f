"""Fidelity, Bures distance and trace-norm distance on the density space."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .algebra import (DEFAULT_TOL, AlgElement, DensityElement, Tolerances, hermitian_function, noise_floor,
                      psd_sqrt, rng_stream, trace_norm, is_orthogonal_pair)
from .errors import NotPositiveError

__all__ = [
    "fidelity", "fidelity_root_form", "fidelity_and_distance", "bures_distance", "trace_distance", "fvdg_bounds",
    "optimal_alignment_unitary", "variational_fidelity_check", "joint_concavity_check",
    "MetricReport", "metric_report", "VariationalResult",
]


def _density(x: AlgElement, tol: Tolerances) -> DensityElement:
    return DensityElement.from_element(x, tol)


def _root_fidelity(a: AlgElement, b: AlgElement, tol: Tolerances) -> float:
    """``τ((a^{1/2} b a^{1/2})^{1/2})`` for positive ``a``, ``b``."""
    ra = psd_sqrt(a, tol)
    total = 0.0
    for w, r, m in zip(a.spec.trace_weights, ra.blocks, b.blocks):
        inner = r @ m @ r
        lam = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
        lam = np.where(lam <= noise_floor(lam), 0.0, lam)
        total += w * np.sqrt(lam).sum()
    return float(total)


def _product_fidelity(a: AlgElement, b: AlgElement, tol: Tolerances) -> float:
    """``τ(|a^{1/2} b^{1/2}|)`` via singular values."""
    ra, rb = psd_sqrt(a, tol), psd_sqrt(b, tol)
    return float(sum(w * np.linalg.svd(x @ y, compute_uv=False).sum()
                     for w, x, y in zip(a.spec.trace_weights, ra.blocks, rb.blocks)))


def fidelity(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> float:
    """Fidelity ``F(σ, ρ) = τ(|σ^{1/2} ρ^{1/2}|)``, clipped into ``[0, 1]``.

    Computed from the singular values of ``σ^{1/2} ρ^{1/2}``.  The form
    ``τ((σ^{1/2} ρ σ^{1/2})^{1/2})`` takes square roots of eigenvalues that sit
    at round-off level for rank-deficient pairs, which costs about 1e-8 of
    accuracy; it is kept as :func:`fidelity_root_form` for cross-checks.
    """
    sigma, rho = _density(sigma, tol), _density(rho, tol)
    sigma._same(rho)
    return float(min(1.0, max(0.0, _product_fidelity(sigma, rho, tol))))


def fidelity_root_form(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> float:
    """Fidelity as ``τ((σ^{1/2} ρ σ^{1/2})^{1/2})`` (cross-check route)."""
    sigma, rho = _density(sigma, tol), _density(rho, tol)
    sigma._same(rho)
    return float(min(1.0, max(0.0, _root_fidelity(sigma, rho, tol))))


def fidelity_and_distance(sigma: AlgElement, rho: AlgElement,
                          tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """``(F(σ, ρ), d_B(σ, ρ))`` from one SVD of ``σ^{1/2} ρ^{1/2}`` per block.

    The distance is taken from ``d_B² = ½ τ(|σ^{1/2} - ρ^{1/2} v*|²)`` with
    ``v`` the polar unitary, not from ``sqrt(1 - F)``: near ``σ = ρ`` the
    latter turns a round-off error of 1e-16 in ``F`` into 1e-8 in ``d_B``.
    """
    sigma, rho = _density(sigma, tol), _density(rho, tol)
    sigma._same(rho)
    rs, rr = psd_sqrt(sigma, tol), psd_sqrt(rho, tol)
    f = d2 = 0.0
    for w, a, b in zip(sigma.spec.trace_weights, rs.blocks, rr.blocks):
        left, sv, right_h = np.linalg.svd(a @ b)
        gap = a - b @ (left @ right_h).conj().T
        f += w * sv.sum()
        d2 += w * np.vdot(gap, gap).real
    f = min(1.0, max(0.0, float(f)))
    return f, float(np.sqrt(min(1.0, max(0.0, d2 / 2))))


def bures_distance(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> float:
    """Bures distance ``sqrt(1 - F(σ, ρ))``, evaluated as in :func:`fidelity_and_distance`."""
    return fidelity_and_distance(sigma, rho, tol)[1]


def trace_distance(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> float:
    """``d_1(σ, ρ) = ‖σ - ρ‖_{1,τ}`` (no factor 1/2)."""
    sigma, rho = _density(sigma, tol), _density(rho, tol)
    return trace_norm(sigma - rho)


def fvdg_bounds(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """Fuchs-van de Graaf sandwich ``(2 - 2F, 2 sqrt(1 - F²))`` for the trace distance."""
    f = fidelity(sigma, rho, tol)
    return 2.0 - 2.0 * f, 2.0 * float(np.sqrt(max(0.0, 1.0 - f * f)))


@dataclass(frozen=True)
class MetricReport:
    fidelity: float
    bures: float
    trace_dist: float
    fvdg_lower: float
    fvdg_upper: float
    orthogonal: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def metric_report(sigma: AlgElement, rho: AlgElement, tol: Tolerances = DEFAULT_TOL) -> MetricReport:
    f, d = fidelity_and_distance(sigma, rho, tol)
    lower, upper = 2.0 - 2.0 * f, 2.0 * float(np.sqrt(max(0.0, 1.0 - f * f)))
    return MetricReport(
        fidelity=f,
        bures=d,
        trace_dist=trace_distance(sigma, rho, tol),
        fvdg_lower=lower,
        fvdg_upper=upper,
        orthogonal=is_orthogonal_pair(sigma, rho, tol),
    )


def optimal_alignment_unitary(sigma: AlgElement, rho: AlgElement,
                              tol: Tolerances = DEFAULT_TOL) -> tuple[AlgElement, float]:
    """Unitary ``v`` attaining the fidelity, and the attained value.

    ``v`` is the unitary polar part of ``σ^{1/2} ρ^{1/2} = v |σ^{1/2} ρ^{1/2}|``.
    It satisfies ``Re τ(ρ^{1/2} σ^{1/2} v) = F(σ, ρ)`` and
    ``τ(|σ^{1/2} - ρ^{1/2} v*|²) = 2 - 2F(σ, ρ)``.  When the product is
    rank deficient the partial isometry is completed by pairing the left and
    right null-space bases of the SVD in index order.
    """
    sigma, rho = _density(sigma, tol), _density(rho, tol)
    sigma._same(rho)
    rs, rr = psd_sqrt(sigma, tol), psd_sqrt(rho, tol)
    blocks = []
    for a, b in zip(rs.blocks, rr.blocks):
        left, _, right_h = np.linalg.svd(a @ b)
        blocks.append(left @ right_h)
    v = AlgElement(sigma.spec, blocks)
    value = (rr @ rs @ v).trace().real
    return v, float(value)


class VariationalResult(NamedTuple):
    min_value: float
    gap: float
    fidelity: float
    evaluations: int
    violations: int


def variational_fidelity_check(a: AlgElement, b: AlgElement, samples: int = 100, seed: int = 0,
                               eps: float = 1e-10,
                               tol: Tolerances = DEFAULT_TOL) -> VariationalResult:
    """Check ``τ(|a^{1/2} b^{1/2}|) = ½ inf_y (τ(a y) + τ(b y^{-1}))`` over positive invertible ``y``.

    Evaluates the objective at ``y = 1``, at the closed-form minimiser
    ``a^{-1/2} (a^{1/2} b a^{1/2})^{1/2} a^{-1/2}`` (built from ``a + eps`` and
    ``b + eps`` when singular) and at ``samples`` random positive invertible
    ``y``.  ``gap`` is the smallest value minus the fidelity; ``violations``
    counts values below the fidelity by more than ``tol.fid``.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    for name, x in (("a", a), ("b", b)):
        if not x.is_psd(tol):
            raise NotPositiveError(f"{name} is not positive")
    a._same(b)
    spec = a.spec
    target = _product_fidelity(a, b, tol)

    def objective(y: AlgElement) -> float:
        y_inv = AlgElement(spec, [np.linalg.inv(blk) for blk in y.blocks])
        return 0.5 * ((a @ y).trace().real + (b @ y_inv).trace().real)

    one = spec.identity()
    a_reg, b_reg = a.hermitian_part() + eps * one, b.hermitian_part() + eps * one
    ra = psd_sqrt(a_reg, tol)
    ra_inv = hermitian_function(a_reg, lambda lam: 1.0 / np.sqrt(lam), tol)
    y_star = ra_inv @ psd_sqrt((ra @ b_reg @ ra).hermitian_part(), tol) @ ra_inv
    candidates = [one, y_star.hermitian_part()]

    rng = rng_stream(seed, "variational")
    for _ in range(samples):
        g = AlgElement(spec, [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
                              for d in spec.block_dims])
        scale = np.exp(rng.uniform(-2, 2))
        candidates.append(scale * (g @ g.H + 1e-3 * one))

    values = np.array([objective(y) for y in candidates])
    m = float(values.min())
    return VariationalResult(m, m - target, target, len(values),
                             int(np.sum(values < target - tol.fid)))


def joint_concavity_check(sigma1: AlgElement, sigma2: AlgElement, rho1: AlgElement, rho2: AlgElement,
                          lam: float, slack: float = 1e-9, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether ``F(λσ1 + (1-λ)σ2, λρ1 + (1-λ)ρ2) >= λF(σ1, ρ1) + (1-λ)F(σ2, ρ2) - slack``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    mixed_s = DensityElement.from_element(lam * sigma1 + (1 - lam) * sigma2, tol)
    mixed_r = DensityElement.from_element(lam * rho1 + (1 - lam) * rho2, tol)
    lhs = fidelity(mixed_s, mixed_r, tol)
    rhs = lam * fidelity(sigma1, rho1, tol) + (1 - lam) * fidelity(sigma2, rho2, tol)
    return lhs >= rhs - slack
