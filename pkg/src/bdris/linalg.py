"""Dense complex-matrix primitives: skew-Hermitian exponentials, Haar
unitaries, re-unitarization, and drift reports.

Everything here is a pure function of its inputs (seeds included), so
concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ArgumentError, SingularMatrixError, SkewToleranceError

# Relative tolerance for accepting an input as skew-Hermitian. Inputs outside
# it raise instead of being symmetrized: a non-skew matrix here almost always
# means a gradient bug upstream.
SKEW_RTOL = 1e-10

# Unitarity drift (Frobenius) above which re-unitarization is applied by the
# optimizer policy.
REUNITARIZE_DRIFT = 1e-10

_SINGULAR_RTOL = 1e-12


def _as_square_complex(m, name: str) -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ArgumentError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ArgumentError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def _check_skew(s: np.ndarray) -> None:
    resid = np.linalg.norm(s + s.conj().T)
    if resid > SKEW_RTOL * (1.0 + np.linalg.norm(s)):
        raise SkewToleranceError(
            f"matrix is not skew-Hermitian within tolerance: residual {resid:.3e}"
        )


@dataclass(frozen=True)
class UnitarityReport:
    """Deviation of M^H M from the identity."""

    frobenius_drift: float
    max_entry_drift: float


@dataclass(frozen=True)
class SkewFactorization:
    """Spectral factorization S = V diag(j*omega) V^H of a skew-Hermitian S.

    One factorization amortizes the cost of evaluating exp(mu*S) at many
    step sizes: each evaluation is a diagonal scaling plus one product.
    """

    omega: np.ndarray  # real, so eigenvalues of S are j*omega
    vectors: np.ndarray

    def rotation(self, mu: float) -> np.ndarray:
        """Return exp(mu*S), a unitary rotation."""
        phase = np.exp(1j * mu * self.omega)
        return (self.vectors * phase) @ self.vectors.conj().T

    def reconstruct(self) -> np.ndarray:
        """Rebuild S itself from the factorization (testing aid)."""
        return (self.vectors * (1j * self.omega)) @ self.vectors.conj().T


def skew_eigensystem(s) -> SkewFactorization:
    """Factorize a skew-Hermitian matrix through a Hermitian eigensolve.

    S skew-Hermitian means -jS is Hermitian with real eigenvalues omega,
    giving S = V diag(j*omega) V^H with unitary V.

    Raises
    ------
    SkewToleranceError
        If the input is outside the skew tolerance.
    ArgumentError
        For non-square or non-finite input.
    np.linalg.LinAlgError
        If the eigensolver fails to converge; reported, never silently wrong.
    """
    s = _as_square_complex(s, "S")
    _check_skew(s)
    hermitian = -1j * s
    omega, vectors = np.linalg.eigh(hermitian)
    return SkewFactorization(omega=omega, vectors=vectors)


def expm_skew(s, mu: float) -> np.ndarray:
    """exp(mu*S) for skew-Hermitian S; the result is unitary.

    Spectral path first (one Hermitian eigensolve); scaling-and-squaring
    Pade as the fallback if the eigensolver fails on a degenerate input.
    """
    s = _as_square_complex(s, "S")
    if not np.isfinite(mu):
        raise ArgumentError("mu must be finite")
    _check_skew(s)
    try:
        return skew_eigensystem(s).rotation(mu)
    except np.linalg.LinAlgError:
        return scipy.linalg.expm(mu * s)


def haar_random_unitary(n: int, seed) -> np.ndarray:
    """Draw an n x n unitary from the Haar measure.

    QR of an i.i.d. complex Gaussian matrix with the R-diagonal phase
    correction; without the correction QR output is not Haar.

    `seed` may be an int, a SeedSequence, or a numpy Generator.
    """
    if n < 1:
        raise ArgumentError("n must be >= 1")
    rng = as_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r).copy()
    diag[diag == 0] = 1.0
    return q * (diag / np.abs(diag))


def _flatten_seed(seed):
    if isinstance(seed, (tuple, list)):
        out = []
        for part in seed:
            out.extend(_flatten_seed(part))
        return out
    return [int(seed)]


def as_rng(seed) -> np.random.Generator:
    """Normalize int / tuple-of-ints / SeedSequence / Generator into a
    counter-based Generator. Tuples may nest; they are flattened into one
    entropy sequence, so derived streams stay order-independent."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(_flatten_seed(seed)))


def block_mask(n: int, group_size: int) -> np.ndarray:
    """Boolean support of a block-diagonal matrix with `group_size` blocks."""
    if group_size < 1 or n % group_size != 0:
        raise ArgumentError(f"group_size {group_size} must divide n {n}")
    idx = np.arange(n) // group_size
    return idx[:, None] == idx[None, :]


def block_diag_haar(n: int, group_size: int, seed) -> np.ndarray:
    """Block-diagonal unitary with independent Haar blocks, exact zeros off-block.

    With group_size == n this draws exactly one Haar matrix from the stream,
    so it reproduces haar_random_unitary bit for bit.
    """
    rng = as_rng(seed)
    out = np.zeros((n, n), dtype=np.complex128)
    for start in range(0, n, group_size):
        stop = start + group_size
        out[start:stop, start:stop] = haar_random_unitary(group_size, rng)
    return out


def reunitarize(m) -> np.ndarray:
    """Nearest unitary to M in Frobenius norm (the polar factor, via SVD)."""
    m = _as_square_complex(m, "M")
    u, sv, vh = np.linalg.svd(m)
    if sv[-1] <= _SINGULAR_RTOL * sv[0]:
        raise SingularMatrixError(
            f"matrix is singular to working precision (sv ratio {sv[-1] / sv[0]:.3e})"
        )
    return u @ vh


def reunitarize_blocks(m, group_size: int) -> np.ndarray:
    """Per-block polar projection for block-diagonal matrices."""
    m = _as_square_complex(m, "M")
    n = m.shape[0]
    if group_size == n:
        return reunitarize(m)
    if n % group_size != 0:
        raise ArgumentError(f"group_size {group_size} must divide n {n}")
    out = np.zeros_like(m)
    for start in range(0, n, group_size):
        stop = start + group_size
        out[start:stop, start:stop] = reunitarize(m[start:stop, start:stop])
    return out


def unitarity_report(m) -> UnitarityReport:
    """Measure how far M is from unitary."""
    m = _as_square_complex(m, "M")
    excess = m.conj().T @ m - np.eye(m.shape[0])
    return UnitarityReport(
        frobenius_drift=float(np.linalg.norm(excess)),
        max_entry_drift=float(np.max(np.abs(excess))),
    )
