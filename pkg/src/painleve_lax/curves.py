"""Bivariate polynomials on P1 x P1 and linear curve-interpolation families.

A bidegree (m,n) polynomial is stored as an (m+1) x (n+1) complex matrix of
coefficients of f^i g^j.  Families of curves through assigned points (with
multiplicities, tangencies, or jet conditions) are the null spaces of the
corresponding condition matrices.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchWarning, NoCurveError
from .numerics import DEFAULT_RANK_TOL, gauge_normalize, null_space
from .surface import SurfacePoint


class BiPoly:
    """Polynomial of bidegree (m,n) in the affine coordinates (f,g)."""

    def __init__(self, coeffs):
        c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
        if c.ndim != 2:
            raise DegenerateInputError("BiPoly coefficients must form a matrix")
        self.coeffs = c

    @property
    def m(self):
        return self.coeffs.shape[0] - 1

    @property
    def n(self):
        return self.coeffs.shape[1] - 1

    @property
    def degree(self):
        return (self.m, self.n)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def normalized(self):
        return BiPoly(gauge_normalize(self.coeffs))

    def eval_affine(self, f, g):
        fp = np.power(complex(f), np.arange(self.m + 1))
        gp = np.power(complex(g), np.arange(self.n + 1))
        return complex(fp @ self.coeffs @ gp)

    def eval_point(self, point):
        """Bihomogeneous evaluation sum c_ij x0^i x1^(m-i) y0^j y1^(n-j).

        With unit-normalized pairs and a unit coefficient vector the returned
        magnitude serves directly as a vanishing residual.
        """
        return complex(_monomial_row(self, point) @ self.coeffs.ravel())

    def partial(self, df=0, dg=0):
        """Affine partial derivative d^df/df d^dg/dg as a new BiPoly."""
        c = self.coeffs
        for _ in range(df):
            k = np.arange(1, c.shape[0])
            c = c[1:, :] * k[:, None]
            if c.shape[0] == 0:
                c = np.zeros((1, self.n + 1), dtype=complex)
        for _ in range(dg):
            k = np.arange(1, c.shape[1])
            c = c[:, 1:] * k[None, :]
            if c.shape[1] == 0:
                c = np.zeros((c.shape[0], 1), dtype=complex)
        return BiPoly(c)

    def restrict_f(self, f_value):
        """Coefficients in g of the restriction to the vertical line f = const."""
        fp = np.power(complex(f_value), np.arange(self.m + 1))
        return fp @ self.coeffs

    def restrict_g(self, g_value):
        gp = np.power(complex(g_value), np.arange(self.n + 1))
        return self.coeffs @ gp

    def __mul__(self, other):
        return poly_mul(self, other)

    def __rmul__(self, scalar):
        return BiPoly(complex(scalar) * self.coeffs)

    def __add__(self, other):
        return poly_linear_combine([1.0, 1.0], [self, other])

    def __sub__(self, other):
        return poly_linear_combine([1.0, -1.0], [self, other])

    def __repr__(self):
        return f"BiPoly(degree=({self.m},{self.n}))"


def poly_mul(pa, pb):
    """Exact coefficient convolution; degrees add."""
    a, b = pa.coeffs, pb.coeffs
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
    for i in range(b.shape[0]):
        for j in range(b.shape[1]):
            if b[i, j] != 0.0:
                out[i : i + a.shape[0], j : j + a.shape[1]] += b[i, j] * a
    return BiPoly(out)


def poly_linear_combine(scalars, polys):
    """Linear combination with degrees padded to the elementwise maximum."""
    if len(scalars) != len(polys) or not polys:
        raise DegenerateInputError("mismatched linear combination")
    m = max(p.m for p in polys)
    n = max(p.n for p in polys)
    out = np.zeros((m + 1, n + 1), dtype=complex)
    for s, p in zip(scalars, polys):
        out[: p.m + 1, : p.n + 1] += complex(s) * p.coeffs
    return BiPoly(out)


def linear_f(f_value):
    """The pencil member f - f_value as a (1,0) polynomial."""
    return BiPoly(np.array([[-complex(f_value)], [1.0]]))


def poly_eval(p, point, df=0, dg=0):
    return poly_partial(p, point, df, dg)


def poly_partial(p, point, df=0, dg=0):
    """Chart-consistent evaluation of the (df,dg) affine partial at a point.

    At points with an infinite coordinate the polynomial is rewritten in the
    chart where the point is finite (exponent reversal) before
    differentiating.
    """
    coeffs = p.coeffs
    if point.x_infinite:
        coeffs = coeffs[::-1, :]
        fa = point.x[1] / point.x[0]
    else:
        fa = point.x[0] / point.x[1]
    if point.y_infinite:
        coeffs = coeffs[:, ::-1]
        ga = point.y[1] / point.y[0]
    else:
        ga = point.y[0] / point.y[1]
    q = BiPoly(coeffs).partial(df, dg)
    return q.eval_affine(fa, ga)


def _monomial_row(p, point):
    """Row of bihomogeneous monomials of bidegree (m,n) at a normalized point."""
    m, n = p.m, p.n
    x0, x1 = point.x
    y0, y1 = point.y
    xm = x0 ** np.arange(m + 1) * x1 ** (m - np.arange(m + 1))
    yn = y0 ** np.arange(n + 1) * y1 ** (n - np.arange(n + 1))
    return np.outer(xm, yn).ravel()


# ---------------------------------------------------------------------------
# Interpolation conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vanish:
    point: SurfacePoint

    def row_count(self):
        return 1


@dataclass(frozen=True)
class Multiplicity:
    point: SurfacePoint
    order: int

    def row_count(self):
        return self.order * (self.order + 1) // 2


@dataclass(frozen=True)
class LineTangencyF:
    """Tangency to the vertical line f = const at the point: d/dg vanishes.

    Assumes the vanishing at the point itself is imposed separately."""

    point: SurfacePoint

    def row_count(self):
        return 1


@dataclass(frozen=True)
class JetVanish:
    """F(f(eps), g(eps)) = O(eps^order) along an affine arc.

    ``arc_f`` and ``arc_g`` are coefficient lists in eps, ascending."""

    arc_f: tuple
    arc_g: tuple
    order: int

    def row_count(self):
        return self.order


def _derivative_row(degree, point, df, dg):
    """Row of the (df,dg) affine partial over the monomial basis, in the
    chart where the point is finite."""
    m, n = degree
    if point.x_infinite:
        fa = point.x[1] / point.x[0]
        i_map = m - np.arange(m + 1)
    else:
        fa = point.x[0] / point.x[1]
        i_map = np.arange(m + 1)
    if point.y_infinite:
        ga = point.y[1] / point.y[0]
        j_map = n - np.arange(n + 1)
    else:
        ga = point.y[0] / point.y[1]
        j_map = np.arange(n + 1)

    def deriv_factors(exps, order, val):
        fac = np.ones(len(exps), dtype=complex)
        shift = exps.astype(float)
        for _ in range(order):
            fac *= shift
            shift -= 1.0
        powers = np.where(exps - order >= 0, val ** np.maximum(exps - order, 0), 0.0)
        return fac * np.where(exps - order >= 0, powers, 0.0)

    fi = deriv_factors(i_map, df, fa)
    gj = deriv_factors(j_map, dg, ga)
    return np.outer(fi, gj).ravel()


def _jet_rows(degree, cond):
    m, n = degree
    order = cond.order
    pad = order + 1
    fa = np.zeros(pad, dtype=complex)
    ga = np.zeros(pad, dtype=complex)
    fa[: len(cond.arc_f)] = np.asarray(cond.arc_f, dtype=complex)[:pad]
    ga[: len(cond.arc_g)] = np.asarray(cond.arc_g, dtype=complex)[:pad]

    def tpow(series, k):
        out = np.zeros(pad, dtype=complex)
        out[0] = 1.0
        for _ in range(k):
            out = np.convolve(out, series)[:pad]
        return out

    fpows = [tpow(fa, i) for i in range(m + 1)]
    gpows = [tpow(ga, j) for j in range(n + 1)]
    rows = np.zeros((order, (m + 1) * (n + 1)), dtype=complex)
    for i in range(m + 1):
        for j in range(n + 1):
            series = np.convolve(fpows[i], gpows[j])[:pad]
            rows[:, i * (n + 1) + j] = series[:order]
    return [rows[k] for k in range(order)]


def condition_rows(degree, cond):
    """Expand one condition into unit-norm linear functionals on coefficients."""
    m, n = degree
    if isinstance(cond, Vanish):
        probe = BiPoly(np.zeros((m + 1, n + 1), dtype=complex))
        rows = [_monomial_row(probe, cond.point)]
    elif isinstance(cond, Multiplicity):
        rows = [
            _derivative_row(degree, cond.point, df, dg)
            for total in range(cond.order)
            for df in range(total + 1)
            for dg in [total - df]
        ]
    elif isinstance(cond, LineTangencyF):
        rows = [_derivative_row(degree, cond.point, 0, 1)]
    elif isinstance(cond, JetVanish):
        rows = _jet_rows(degree, cond)
    else:
        raise DegenerateInputError(f"unknown condition {cond!r}")
    out = []
    for r in rows:
        nrm = np.linalg.norm(r)
        if nrm == 0.0:
            raise DegenerateInputError("condition produced a zero row")
        out.append(r / nrm)
    return out


@dataclass
class CurveFamily:
    """Null-space basis of an interpolation problem, plus diagnostics."""

    degree: tuple
    basis: list
    singular_values: np.ndarray
    expected_dim: int
    observed_dim: int
    max_condition_residual: float = 0.0
    conditions: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.basis)

    def member(self, coeffs3):
        """Linear combination of the basis with the given coordinates."""
        return poly_linear_combine(coeffs3, self.basis)

    def contains(self, poly, tol=1e-8):
        """Projection residual of a (normalized) polynomial onto the family."""
        v = gauge_normalize(poly.coeffs).ravel()
        basis = np.array([b.coeffs.ravel() for b in self.basis])
        proj = basis.conj() @ v
        return float(np.linalg.norm(v - basis.T @ proj))


def build_family(degree, conditions, tol=DEFAULT_RANK_TOL, expected_dim=None):
    """Assemble the condition matrix over all monomials and take its null space.

    The expected dimension is (m+1)(n+1) - (number of condition rows) unless
    overridden (some configurations carry a known row dependency).  A
    mismatch between expected and observed dimensions raises a
    DimensionMismatchWarning; an empty family where at least one curve was
    expected raises NoCurveError.
    """
    m, n = degree
    if m < 0 or n < 0:
        raise DegenerateInputError("bidegree must be nonnegative")
    ncoef = (m + 1) * (n + 1)
    rows = []
    for cond in conditions:
        rows.extend(condition_rows(degree, cond))
    formula_dim = max(ncoef - len(rows), 0)
    expect = formula_dim if expected_dim is None else expected_dim

    if not rows:
        basis = [BiPoly(e.reshape(m + 1, n + 1)) for e in np.eye(ncoef, dtype=complex)]
        return CurveFamily(degree, basis, np.zeros(0), ncoef, ncoef, 0.0, list(conditions))

    mat = np.array(rows)
    ns = null_space(mat, tol=tol)
    observed = ns.dim
    if observed == 0 and expect >= 1:
        raise NoCurveError(
            f"no curve of bidegree {degree} satisfies the conditions (expected dim {expect})"
        )
    if observed != expect:
        warnings.warn(
            f"bidegree {degree}: observed family dimension {observed}, expected {expect}",
            DimensionMismatchWarning,
            stacklevel=2,
        )
    basis = [BiPoly(v.reshape(m + 1, n + 1)) for v in ns.vectors]
    resid = float(np.max(np.abs(mat @ ns.vectors.T))) if observed else 0.0
    return CurveFamily(degree, basis, ns.singular_values, expect, observed, resid, list(conditions))


@dataclass
class BasePointCheck:
    point: SurfacePoint
    verified: bool
    residual: float


def detect_base_points(family, candidates, tol=1e-8):
    """Check which candidate points kill every member of the family."""
    if not family.basis:
        raise DegenerateInputError("cannot probe base points of an empty family")
    out = []
    for pt in candidates:
        resid = max(abs(b.eval_point(pt)) for b in family.basis)
        out.append(BasePointCheck(point=pt, verified=resid < tol, residual=float(resid)))
    return out


def exact_divide(p, q, tol=1e-8):
    """Least-squares quotient of p by q and the relative residual.

    Divisibility itself is a theorem-level claim in the elimination chain, so
    the residual is returned for the caller to judge instead of raising.
    """
    if q.norm() == 0.0:
        raise DegenerateInputError("division by the zero polynomial")
    dm, dn = p.m - q.m, p.n - q.n
    if dm < 0 or dn < 0:
        raise DegenerateInputError(
            f"divisor degree {q.degree} exceeds dividend degree {p.degree}"
        )
    ncols = (dm + 1) * (dn + 1)
    a = np.zeros(((p.m + 1) * (p.n + 1), ncols), dtype=complex)
    for k in range(dm + 1):
        for l in range(dn + 1):
            block = np.zeros((p.m + 1, p.n + 1), dtype=complex)
            block[k : k + q.m + 1, l : l + q.n + 1] = q.coeffs
            a[:, k * (dn + 1) + l] = block.ravel()
    rhs = p.coeffs.ravel()
    sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    residual = float(np.linalg.norm(a @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return BiPoly(sol.reshape(dm + 1, dn + 1)), residual


def c0_equation(data, tol=DEFAULT_RANK_TOL):
    """The unique (2,2) curve through the eight base points (the base curve)."""
    fam = build_family((2, 2), [Vanish(p) for p in data.base_points()], tol=tol)
    if fam.observed_dim != 1:
        raise NoCurveError(
            f"base-curve family has dimension {fam.observed_dim}; configuration too special"
        )
    return fam.basis[0].normalized()
