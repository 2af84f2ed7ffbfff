"""Numerical substrate: odd theta series, SVD null spaces, companion-matrix roots.

Everything downstream (curve interpolation, intersection searches, the Lax
operators) reduces to the three primitives in this module plus a handful of
small vector utilities.  All computations are double-precision complex and
report residuals instead of asserting exactness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidLatticeError

# Relative singular-value cutoff separating "numerically zero" directions.
DEFAULT_RANK_TOL = 1e-8

# Theta series truncation, relative to the largest term seen so far.
THETA_TERM_CUTOFF = 1e-18

# Largest lattice shift absorbed through quasi-periodicity; beyond this the
# automorphy factor exp(pi*Im(tau)*n^2) would overflow a double.
THETA_MAX_SHIFT = 24

_THETA_MAX_TERMS = 64


@dataclass(frozen=True)
class Lattice:
    """Period lattice Z + tau*Z with Im(tau) > 0."""

    tau: complex

    def __post_init__(self):
        tau = complex(self.tau)
        if not (np.isfinite(tau.real) and np.isfinite(tau.imag)):
            raise InvalidLatticeError(f"tau must be finite, got {tau!r}")
        if tau.imag <= 0.0:
            raise InvalidLatticeError(f"Im(tau) must be > 0, got {tau!r}")
        object.__setattr__(self, "tau", tau)


def lattice_split(w, tau):
    """Integer pair (m, n) such that w - m - n*tau lies in the centered cell."""
    w = np.asarray(w, dtype=complex)
    n = np.round(w.imag / tau.imag).astype(np.int64)
    m = np.round((w - n * tau).real).astype(np.int64)
    return m, n


def lattice_reduce(w, tau):
    """Representative of w modulo Z + tau*Z in the centered fundamental cell."""
    m, n = lattice_split(w, tau)
    return w - m - n * tau


def lattice_distance(w, tau):
    """Distance from w to the nearest point of Z + tau*Z."""
    w0 = np.asarray(lattice_reduce(w, tau), dtype=complex)
    best = np.full(w0.shape, np.inf)
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            best = np.minimum(best, np.abs(w0 - i - j * tau))
    return best if best.shape else float(best)


def theta(u, lattice):
    """Odd theta value sum_n (-1)^n q^((n+1/2)^2) e^((2n+1) pi i u), q = e^(pi i tau).

    The argument is reduced into the fundamental cell first and the value is
    restored through the quasi-periodicity factors, so moderate multiples of
    the periods are handled without overflow.  Accepts scalars or arrays.
    """
    tau = lattice.tau
    u_arr = np.asarray(u, dtype=complex)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)
    if not np.all(np.isfinite(u_arr)):
        raise DegenerateInputError("theta argument must be finite")

    m, n = lattice_split(u_arr, tau)
    if np.any(np.abs(n) > THETA_MAX_SHIFT) or np.any(np.abs(m) > 4 * THETA_MAX_SHIFT):
        raise DegenerateInputError(
            "theta argument is too many lattice cells away from the origin"
        )
    u0 = u_arr - m - n * tau
    # theta(u0 + m + n*tau) = (-1)^(m+n) q^(-n^2) e^(-2 pi i n u0) theta(u0)
    sign = np.where((m + n) % 2 == 0, 1.0, -1.0)
    factor = sign * np.exp(-1j * np.pi * tau * n**2 - 2j * np.pi * n * u0)

    acc = np.zeros_like(u0)
    max_term = np.zeros(u0.shape, dtype=float)
    ipi = 1j * np.pi
    for k in range(_THETA_MAX_TERMS):
        half = k + 0.5
        # (-1)^k [e^(i pi (tau half^2 + (2k+1) u)) - e^(i pi (tau half^2 - (2k+1) u))]
        base = ipi * tau * half * half
        osc = ipi * (2 * k + 1) * u0
        term = np.exp(base + osc) - np.exp(base - osc)
        if k % 2:
            term = -term
        acc += term
        mag = np.abs(term)
        max_term = np.maximum(max_term, mag)
        if k >= 4 and np.all(mag <= THETA_TERM_CUTOFF * np.maximum(max_term, 1e-300)):
            break
    out = factor * acc
    return complex(out[0]) if scalar else out


@dataclass
class NullSpaceResult:
    """Orthonormal null-space basis plus the full singular-value spectrum."""

    vectors: np.ndarray  # shape (dim, cols); rows are the basis vectors
    singular_values: np.ndarray
    rank: int

    @property
    def dim(self):
        return self.vectors.shape[0]


def null_space(mat, tol=DEFAULT_RANK_TOL):
    """Numerical null space of a complex matrix via SVD.

    Directions whose singular value is <= tol times the largest singular
    value count as null.  Rows of the returned ``vectors`` are orthonormal.
    """
    if tol <= 0:
        raise DegenerateInputError("null_space tolerance must be positive")
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise DegenerateInputError(f"null_space needs a nonempty 2-d matrix, got shape {a.shape}")
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    cols = a.shape[1]
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if s.size else 0
    return NullSpaceResult(vectors=vh[rank:cols].conj(), singular_values=s, rank=rank)


@dataclass
class RootResult:
    """Polynomial roots plus per-root relative residuals |p(r)| / scale."""

    roots: np.ndarray
    residuals: np.ndarray


def poly_roots(coeffs, trim_tol=1e-13):
    """All complex roots of sum_k coeffs[k] z^k via the companion matrix.

    Leading coefficients within ``trim_tol`` (relative to the largest
    coefficient) are trimmed before forming the companion matrix.
    """
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0:
        raise DegenerateInputError("empty coefficient list")
    scale = np.max(np.abs(c))
    if scale == 0.0:
        raise DegenerateInputError("zero polynomial has no well-defined roots")
    deg = c.size - 1
    while deg > 0 and abs(c[deg]) <= trim_tol * scale:
        deg -= 1
    if deg == 0:
        return RootResult(roots=np.zeros(0, dtype=complex), residuals=np.zeros(0))
    c = c[: deg + 1]
    roots = np.roots(c[::-1])
    powers = roots[:, None] ** np.arange(deg + 1)[None, :]
    vals = powers @ c
    denom = np.abs(powers) @ np.abs(c)
    residuals = np.abs(vals) / np.maximum(denom, 1e-300)
    return RootResult(roots=roots, residuals=residuals)


def proj_distance(u, v):
    """sin of the angle between complex vectors: 0 iff proportional.

    Computed as the norm of v minus its projection onto u, which stays
    accurate to machine precision for nearly parallel vectors.
    """
    a = np.asarray(u, dtype=complex).ravel()
    b = np.asarray(v, dtype=complex).ravel()
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("projective distance undefined for the zero vector")
    a = a / na
    b = b / nb
    resid = b - a * np.vdot(a, b)
    return float(min(1.0, np.linalg.norm(resid)))


def gauge_normalize(vec):
    """Unit-norm copy of vec with its largest entry rotated to be real positive.

    Fixes the irrelevant overall factor of a projective object so that
    repeated runs produce identical coefficient arrays.
    """
    v = np.asarray(vec, dtype=complex)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    v = v / nrm
    flat = np.abs(v).ravel()
    k = int(np.argmax(flat))
    pivot = v.ravel()[k]
    return v * (np.conj(pivot) / abs(pivot))
