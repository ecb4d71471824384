"""Polynomial interference canceller: basis expansion, LS fit and counts.

The received interference is modelled per rx antenna as a linear
combination of conjugate monomials of delayed transmit samples,

    basis_term(x, p, q) = x**q * conj(x)**(p - q),   p odd, 0 <= q <= p,

over memory lags ``0 .. depth-1`` and all tx antennas. With the basis
depth equal to PA memory + path count and the order matching the PA, the
composed transmit chain is exactly inside the span, so noiseless LS
identification drives the residual to numerical zero.

The traditional (CSI-only) canceller is the restriction to the
``(p=1, q=1)`` terms, i.e. plain multichannel FIR identification.

Coefficients are estimated with an SVD-based least-squares solve (the
monomial columns are strongly correlated; normal equations would square
an already large condition number), one shared factorization for all rx
antennas.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import container

COEFFS_KIND = "poly-coeffs"


class SingularBasisError(np.linalg.LinAlgError):
    """Basis matrix is rank deficient; message carries a condition estimate."""


def basis_term(x, p: int, q: int):
    """Conjugate monomial ``x**q * conj(x)**(p - q)``."""
    if not (0 <= q <= p):
        raise ValueError(f"need 0 <= q <= p, got p={p}, q={q}")
    x = np.asarray(x, dtype=np.complex128)
    return x**q * np.conj(x) ** (p - q)


@dataclass(frozen=True)
class BasisSpec:
    """Term layout of the polynomial basis for one interfering BS.

    ``terms`` enumerates ``(antenna, p, q, lag)`` antenna-major, then
    ascending odd ``p``, then ``q = 0..p``, then lag. The linear-only
    variant keeps just ``(p=1, q=1)`` per antenna/lag.
    """

    n_tx: int
    depth: int
    order: int
    linear_only: bool = False

    def __post_init__(self):
        if self.n_tx < 1 or self.depth < 1:
            raise ValueError("n_tx and depth must be >= 1")
        if self.order < 1 or self.order % 2 == 0:
            raise ValueError(f"order must be odd and >= 1, got {self.order}")

    @classmethod
    def linear(cls, n_tx: int, depth: int) -> "BasisSpec":
        return cls(n_tx=n_tx, depth=depth, order=1, linear_only=True)

    @property
    def pq_pairs(self) -> tuple[tuple[int, int], ...]:
        if self.linear_only:
            return ((1, 1),)
        return tuple(
            (p, q) for p in range(1, self.order + 1, 2) for q in range(p + 1)
        )

    @property
    def terms(self) -> tuple[tuple[int, int, int, int], ...]:
        return tuple(
            (a, p, q, m)
            for a in range(self.n_tx)
            for (p, q) in self.pq_pairs
            for m in range(self.depth)
        )

    @property
    def n_terms(self) -> int:
        return self.n_tx * len(self.pq_pairs) * self.depth


@dataclass(frozen=True)
class PolyCoefficients:
    """LS-estimated complex weights, one row per rx antenna."""

    basis: BasisSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.complex128)
        if w.ndim != 2 or w.shape[1] != self.basis.n_terms:
            raise ValueError(
                f"weights shape {w.shape} does not match basis with "
                f"{self.basis.n_terms} terms"
            )
        object.__setattr__(self, "weights", w)

    @property
    def n_rx(self) -> int:
        return self.weights.shape[0]


def build_basis_matrix(tx: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Evaluate every basis term on delayed transmit samples.

    ``tx`` has shape ``(n_tx, n)``; returns a complex matrix with one row
    per sample index ``n >= depth - 1`` (aligned with
    ``scenario.build_regressors``) and one column per ``spec.terms`` entry.
    """
    tx = np.atleast_2d(np.asarray(tx, dtype=np.complex128))
    n_tx, n = tx.shape
    if n_tx != spec.n_tx:
        raise ValueError(f"tx has {n_tx} antennas, basis expects {spec.n_tx}")
    if n < spec.depth:
        raise ValueError(f"stream length {n} shorter than basis depth {spec.depth}")
    n_rows = n - spec.depth + 1
    out = np.empty((n_rows, spec.n_terms), dtype=np.complex128)
    col = 0
    for a in range(spec.n_tx):
        for p, q in spec.pq_pairs:
            monomial = basis_term(tx[a], p, q)
            for m in range(spec.depth):
                out[:, col] = monomial[spec.depth - 1 - m : n - m]
                col += 1
    return out


def ls_fit(
    basis: np.ndarray,
    labels: np.ndarray,
    spec: BasisSpec,
    ridge: float = 0.0,
) -> PolyCoefficients:
    """Least-squares coefficient estimate, all rx antennas in one solve.

    ``labels`` has shape ``(n_rx, n_rows)``. Requires more rows than
    columns and a full-rank basis; rank deficiency raises
    :class:`SingularBasisError` with a condition estimate. ``ridge`` adds
    Tikhonov rows (sqrt(ridge) * I) for deliberately ill-conditioned
    configurations; it defaults to off.
    """
    basis = np.asarray(basis)
    labels = np.atleast_2d(np.asarray(labels, dtype=np.complex128))
    if labels.shape[1] != basis.shape[0]:
        raise ValueError(
            f"labels have {labels.shape[1]} rows, basis has {basis.shape[0]}"
        )
    if basis.shape[0] < basis.shape[1]:
        raise ValueError(
            f"underdetermined fit: {basis.shape[0]} rows < {basis.shape[1]} columns"
        )
    rhs = labels.T
    if ridge > 0:
        basis = np.vstack([basis, np.sqrt(ridge) * np.eye(basis.shape[1])])
        rhs = np.vstack([rhs, np.zeros((basis.shape[1], rhs.shape[1]))])
    solution, _, rank, sv = np.linalg.lstsq(basis, rhs, rcond=None)
    if rank < basis.shape[1]:
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        raise SingularBasisError(
            f"basis is rank deficient ({rank}/{basis.shape[1]}); "
            f"condition estimate {cond:.3e}"
        )
    return PolyCoefficients(basis=spec, weights=solution.T)


def reconstruct(coeffs: PolyCoefficients, tx: np.ndarray) -> np.ndarray:
    """Rebuild the interference estimate from fitted coefficients.

    Returns shape ``(n_rx, n - depth + 1)``, aligned with the basis rows.
    """
    basis = build_basis_matrix(tx, coeffs.basis)
    return apply_basis(coeffs, basis)


def apply_basis(coeffs: PolyCoefficients, basis: np.ndarray) -> np.ndarray:
    """Like :func:`reconstruct` but reusing a prebuilt basis matrix."""
    if basis.shape[1] != coeffs.basis.n_terms:
        raise ValueError(
            f"basis has {basis.shape[1]} columns, coefficients expect "
            f"{coeffs.basis.n_terms}"
        )
    return (basis @ coeffs.weights.T).T


def tc_fit(
    tx: np.ndarray, labels: np.ndarray, depth: int, ridge: float = 0.0
) -> PolyCoefficients:
    """Linear-only fit (CSI-style canceller): FIR taps per (rx, tx) pair."""
    tx = np.atleast_2d(np.asarray(tx, dtype=np.complex128))
    spec = BasisSpec.linear(tx.shape[0], depth)
    return ls_fit(build_basis_matrix(tx, spec), labels, spec, ridge=ridge)


def pc_param_count(n_rx: int, n_tx: int, memory: int, n_paths: int, order: int) -> int:
    """Real parameters estimated by the polynomial canceller."""
    if order % 2 == 0:
        raise ValueError("order must be odd")
    return n_rx * n_tx * (memory + n_paths) * (order + 1) * (order + 3) // 2


def pc_complexity(n_rx: int, n_tx: int, memory: int, n_paths: int, order: int) -> int:
    """Real add/multiply count to reconstruct one interference sample.

    Evaluated in exact rational arithmetic; the result is integral for
    odd orders.
    """
    if order % 2 == 0:
        raise ValueError("order must be odd")
    per_term = Fraction((35 * order + 33) * 6 ** (order + 2) + 12, 35**2)
    per_lag = per_term + Fraction((order + 1) * (order + 3), 2)
    total = n_rx * n_tx * (memory + n_paths) * per_lag - 2 * n_rx
    if total.denominator != 1:
        raise ValueError(f"complexity formula not integral for order {order}")
    return int(total)


def tc_param_count(n_rx: int, n_tx: int, memory: int, n_paths: int) -> int:
    """Real parameters of the linear-only canceller (one complex FIR bank)."""
    return 2 * n_rx * n_tx * (memory + n_paths)


def tc_complexity(n_rx: int, n_tx: int, memory: int, n_paths: int) -> int:
    """Real operations for the linear-only reconstruction."""
    return 8 * n_rx * n_tx * (memory + n_paths) - 2 * n_rx


def save_coefficients(coeffs: PolyCoefficients, path, extra_meta: dict | None = None):
    meta = {
        "n_tx": coeffs.basis.n_tx,
        "depth": coeffs.basis.depth,
        "order": coeffs.basis.order,
        "linear_only": coeffs.basis.linear_only,
    }
    if extra_meta:
        meta.update(extra_meta)
    container.write_container(path, COEFFS_KIND, meta, {"weights": coeffs.weights})


def load_coefficients(path) -> PolyCoefficients:
    _, meta, arrays = container.read_container(path, expected_kind=COEFFS_KIND)
    spec = BasisSpec(
        n_tx=meta["n_tx"],
        depth=meta["depth"],
        order=meta["order"],
        linear_only=meta["linear_only"],
    )
    return PolyCoefficients(basis=spec, weights=arrays["weights"])
