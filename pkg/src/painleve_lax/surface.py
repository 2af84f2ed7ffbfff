"""Elliptic data, the base-curve parametrization, the Abel condition, and
the Picard-lattice bookkeeping.

The base curve C0 is the unique (2,2) curve through the eight points
P_1..P_8.  Points of C0 carry a Jacobian parameter u; the parametrization is

    f_u = [u+a][u-h1-a] / ([u+b][u-h1-b]),
    g_u = [u+c][u-h2-c] / ([u+d][u-h2-d]),

with [.] the odd theta function.  Numerator and denominator share the same
automorphy factor, so each pair is used directly as bihomogeneous
coordinates and no poles ever have to be evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegeneracyError,
    DegenerateInputError,
    GenerationError,
    GenericityError,
    IntersectionSearchError,
    NotOnCurveError,
)
from .numerics import Lattice, lattice_distance, lattice_reduce, theta

# Minimal lattice-reduced separation between parameters that must stay
# distinct; configurations below this margin are rejected at construction.
GENERICITY_MARGIN = 1e-3

# Finite-chart margin: |smaller pair entry| / |larger| must exceed this for
# every constructed point of the elliptic machinery.
CHART_MARGIN = 1e-4


def _normalize_pair(p0, p1):
    p0 = complex(p0)
    p1 = complex(p1)
    scale = max(abs(p0), abs(p1))
    if scale == 0.0 or not np.isfinite(scale):
        raise DegenerateInputError("homogeneous pair must be finite and nonzero")
    return (p0 / scale, p1 / scale)


@dataclass(frozen=True)
class SurfacePoint:
    """Point of P1 x P1 in bihomogeneous coordinates ((x0:x1), (y0:y1)).

    ``param`` records the Jacobian parameter when the point was produced by
    the C0 parametrization.
    """

    x: tuple
    y: tuple
    param: complex | None = None

    @staticmethod
    def from_pairs(x0, x1, y0, y1, param=None):
        return SurfacePoint(_normalize_pair(x0, x1), _normalize_pair(y0, y1), param)

    @staticmethod
    def from_affine(f, g, param=None):
        return SurfacePoint.from_pairs(f, 1.0, g, 1.0, param)

    @property
    def x_infinite(self):
        return abs(self.x[1]) <= CHART_MARGIN * abs(self.x[0])

    @property
    def y_infinite(self):
        return abs(self.y[1]) <= CHART_MARGIN * abs(self.y[0])

    @property
    def f(self):
        """Affine first coordinate x0/x1."""
        if self.x_infinite:
            raise DegeneracyError("point is at f = infinity")
        return self.x[0] / self.x[1]

    @property
    def g(self):
        """Affine second coordinate y0/y1."""
        if self.y_infinite:
            raise DegeneracyError("point is at g = infinity")
        return self.y[0] / self.y[1]

    def distance_to(self, other):
        """Projective distance, factorwise: 0 iff the same point."""
        dx = abs(self.x[0] * other.x[1] - self.x[1] * other.x[0])
        dy = abs(self.y[0] * other.y[1] - self.y[1] * other.y[0])
        return dx + dy


@dataclass(frozen=True)
class EllipticData:
    """Full parameter state: lattice, h1, h2, theta constants, u_1..u_8, z."""

    lattice: Lattice
    h1: complex
    h2: complex
    a: complex
    b: complex
    c: complex
    d: complex
    u: tuple
    z: complex

    def __post_init__(self):
        if len(self.u) != 8:
            raise DegenerateInputError("exactly eight point parameters u_1..u_8 required")
        object.__setattr__(self, "u", tuple(complex(w) for w in self.u))

    @property
    def tau(self):
        return self.lattice.tau

    @property
    def delta(self):
        """Scalar shift delta = 2 h1 + 2 h2 - sum(u)."""
        return 2 * self.h1 + 2 * self.h2 - sum(self.u)

    def point(self, w):
        """Point P_w on C0 with Jacobian parameter w."""
        return point_on_C0(w, self)

    def base_points(self):
        return [self.point(w) for w in self.u]

    def dotted(self):
        """Parameter state after one translation step: u1 -= delta, u2 += delta."""
        dlt = self.delta
        u = list(self.u)
        u[0] -= dlt
        u[1] += dlt
        return replace(self, u=tuple(u))


def point_on_C0(w, data):
    """Evaluate the theta-ratio parametrization at parameter w.

    The two numerator/denominator theta products share one automorphy
    factor, so they are returned as a bihomogeneous pair and the map is a
    well-defined function of w modulo the lattice.
    """
    lat = data.lattice
    w = complex(w)
    x0 = theta(w + data.a, lat) * theta(w - data.h1 - data.a, lat)
    x1 = theta(w + data.b, lat) * theta(w - data.h1 - data.b, lat)
    y0 = theta(w + data.c, lat) * theta(w - data.h2 - data.c, lat)
    y1 = theta(w + data.d, lat) * theta(w - data.h2 - data.d, lat)
    if max(abs(x0), abs(x1)) == 0.0 or max(abs(y0), abs(y1)) == 0.0:
        raise DegeneracyError(f"parametrization degenerates at u = {w!r}")
    return SurfacePoint.from_pairs(x0, x1, y0, y1, param=lattice_reduce(w, lat.tau))


def _pair_arrays(w_grid, data):
    """Vectorized bihomogeneous coordinates along a parameter array."""
    lat = data.lattice
    x0 = theta(w_grid + data.a, lat) * theta(w_grid - data.h1 - data.a, lat)
    x1 = theta(w_grid + data.b, lat) * theta(w_grid - data.h1 - data.b, lat)
    y0 = theta(w_grid + data.c, lat) * theta(w_grid - data.h2 - data.c, lat)
    y1 = theta(w_grid + data.d, lat) * theta(w_grid - data.h2 - data.d, lat)
    return x0, x1, y0, y1


def locate_parameter(p, data, hint=None, tol=1e-11, grid=24):
    """Invert the parametrization: find u with P_u = p (mod lattice).

    Newton iteration on the holomorphic mismatch x0(u) * px1 - x1(u) * px0,
    started from a coarse fundamental-domain grid (or from ``hint``).  Of
    the two f-branches {u, h1 - u} the one matching the g component wins.
    """
    tau = data.tau

    def mismatch_f(w):
        x0, x1, _, _ = _pair_arrays(np.asarray(w, dtype=complex), data)
        return x0 * p.x[1] - x1 * p.x[0], np.abs(x0) + np.abs(x1)

    def point_residual(w):
        try:
            return point_on_C0(w, data).distance_to(p)
        except DegeneracyError:
            return np.inf

    starts = []
    if hint is not None:
        starts.append(complex(hint))
    ss, tt = np.meshgrid(
        (np.arange(grid) + 0.5) / grid - 0.5, (np.arange(grid) + 0.5) / grid - 0.5
    )
    w_grid = (ss + tt * tau).ravel()
    vals, scales = mismatch_f(w_grid)
    order = np.argsort(np.abs(vals) / np.maximum(scales, 1e-300))
    starts.extend(w_grid[order[:6]])

    h = 1e-6
    for w0 in starts:
        w = complex(w0)
        ok = False
        for _ in range(60):
            val, scale = mismatch_f(np.array([w, w + h, w - h]))
            fval = val[0]
            dval = (val[1] - val[2]) / (2 * h)
            if abs(fval) <= 1e-14 * max(scale[0], 1e-300):
                ok = True
                break
            if dval == 0:
                break
            step = fval / dval
            if abs(step) > 0.5:
                step *= 0.5 / abs(step)
            w -= step
        if not ok:
            continue
        for cand in (w, data.h1 - w):
            if point_residual(cand) < max(tol, 1e-9):
                return lattice_reduce(cand, tau)
    raise NotOnCurveError("no parameter converged onto the given point")


@dataclass
class AbelResult:
    """Outcome of an Abel-sum intersection check."""

    residual: float
    parameters: np.ndarray
    expected_count: int


def abel_sum_check(curve, data, grid=None, tol=1e-11):
    """Intersect a bidegree (m,n) curve with C0 and test the Abel condition.

    A bidegree (m,n) curve meets the (2,2) base curve in 2(m+n) points; the
    sum of their Jacobian parameters must equal m*h1 + n*h2 modulo the
    lattice.  Returns the lattice-reduced defect together with the located
    parameters.
    """
    coeffs = np.asarray(getattr(curve, "coeffs", curve), dtype=complex)
    m = coeffs.shape[0] - 1
    n = coeffs.shape[1] - 1
    count = 2 * (m + n)
    tau = data.tau

    if m >= 2 and n >= 2:
        # reject curves containing C0 as a component
        from .curves import BiPoly, c0_equation, exact_divide

        _, resid = exact_divide(BiPoly(coeffs), c0_equation(data))
        if resid < 1e-8:
            raise DegenerateInputError("curve contains the base curve as a component")

    i_exp = np.arange(m + 1)
    j_exp = np.arange(n + 1)

    def restricted(w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        x0, x1, y0, y1 = _pair_arrays(w, data)
        xm = x0[:, None] ** i_exp * x1[:, None] ** (m - i_exp)
        yn = y0[:, None] ** j_exp * y1[:, None] ** (n - j_exp)
        vals = np.einsum("ki,ij,kj->k", xm, coeffs, yn)
        norm = (np.abs(x0) + np.abs(x1)) ** m * (np.abs(y0) + np.abs(y1)) ** n
        return vals, np.maximum(norm, 1e-300)

    def deflated(w, roots):
        """Restriction value with the already-located zeros divided out.

        Dividing by theta(u - r) removes the zero at r without introducing
        new ones, so Newton runs converge onto the remaining zeros even when
        several share a basin of the raw function.
        """
        vals, norms = restricted(w)
        for r0 in roots:
            th = theta(np.atleast_1d(w) - r0, data.lattice)
            vals = vals / th
            norms = norms / np.abs(th)
        return vals, norms

    def newton(w0, roots):
        h = 1e-6
        w = complex(w0)
        for _ in range(60):
            vals, norms = deflated(np.array([w, w + h, w - h]), roots)
            fval = vals[0]
            if abs(fval) <= tol * norms[0]:
                break
            dval = (vals[1] - vals[2]) / (2 * h)
            if dval == 0:
                return None
            step = fval / dval
            if abs(step) > 0.35:
                step *= 0.35 / abs(step)
            w -= step
        else:
            return None
        # polish on the raw function for full accuracy
        for _ in range(8):
            vals, norms = restricted(np.array([w, w + h, w - h]))
            if abs(vals[0]) <= 0.01 * tol * norms[0]:
                break
            dval = (vals[1] - vals[2]) / (2 * h)
            if dval == 0:
                break
            w -= vals[0] / dval
        vals, norms = restricted(np.array([w]))
        if abs(vals[0]) > 10 * tol * norms[0]:
            return None
        return lattice_reduce(w, tau)

    def sweep(g, roots):
        ss, tt = np.meshgrid((np.arange(g) + 0.5) / g - 0.5, (np.arange(g) + 0.5) / g - 0.5)
        w_grid = (ss + tt * tau).ravel()
        vals, norms = deflated(w_grid, roots)
        order = np.argsort(np.abs(vals) / norms)
        for w0 in w_grid[order[: 6 * count]]:
            w = newton(w0, roots)
            if w is None:
                continue
            if all(lattice_distance(w - r0, tau) > 1e-6 for r0 in roots):
                roots.append(w)
                if len(roots) == count:
                    return

    g = grid or (36 + 6 * (m + n))
    roots = []
    sweep(g, roots)
    while len(roots) < count and g <= 4 * (36 + 6 * (m + n)):
        g *= 2
        sweep(g, roots)
    if len(roots) != count:
        raise IntersectionSearchError(
            f"expected {count} intersections with the base curve, found {len(roots)}"
        )
    defect = m * data.h1 + n * data.h2 - sum(roots)
    return AbelResult(
        residual=float(lattice_distance(defect, tau)),
        parameters=np.array(roots),
        expected_count=count,
    )


# ---------------------------------------------------------------------------
# Picard lattice
# ---------------------------------------------------------------------------

# intersection Gram matrix in the basis (H1, H2, E1, ..., E8)
_GRAM = np.zeros((10, 10), dtype=np.int64)
_GRAM[0, 1] = _GRAM[1, 0] = 1
for _k in range(2, 10):
    _GRAM[_k, _k] = -1


@dataclass(frozen=True)
class PicardClass:
    """Integer divisor class a*H1 + b*H2 + sum_i c_i E_i."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != 10:
            raise DegenerateInputError("PicardClass needs 10 integer coefficients")
        object.__setattr__(self, "coeffs", tuple(int(v) for v in self.coeffs))

    @staticmethod
    def H(i):
        v = [0] * 10
        v[i - 1] = 1
        return PicardClass(tuple(v))

    @staticmethod
    def E(j):
        v = [0] * 10
        v[1 + j] = 1
        return PicardClass(tuple(v))

    def __add__(self, other):
        return PicardClass(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        return PicardClass(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return PicardClass(tuple(-a for a in self.coeffs))

    def __rmul__(self, k):
        return PicardClass(tuple(int(k) * a for a in self.coeffs))

    def pair(self, other):
        """Intersection pairing (H1,H2) = 1, (Ej,Ej) = -1, rest zero."""
        v = np.array(self.coeffs, dtype=np.int64)
        w = np.array(other.coeffs, dtype=np.int64)
        return int(v @ _GRAM @ w)


# anti-canonical null root 2H1 + 2H2 - E1 - ... - E8
NULL_ROOT = PicardClass((2, 2, -1, -1, -1, -1, -1, -1, -1, -1))


def kac_translate(alpha, beta):
    """Translation T_alpha acting on a divisor class beta.

    T_alpha(beta) = beta + (d,beta) alpha - ((d,beta)(alpha,alpha)/2 + (alpha,beta)) d
    with d the null root.  alpha must have even self-intersection (it does
    for every element of the root lattice).
    """
    d_b = NULL_ROOT.pair(beta)
    a_a = alpha.pair(alpha)
    a_b = alpha.pair(beta)
    if (d_b * a_a) % 2 != 0:
        raise DegenerateInputError("translation undefined: (d,b)*(a,a) is odd")
    scale = (d_b * a_a) // 2 + a_b
    return beta + d_b * alpha - scale * NULL_ROOT


_R_MATRIX = np.eye(10, dtype=np.int64)
_R_MATRIX[:, 1] = [4, 1, -1, -1, -1, -1, -1, -1, -1, -1]  # r(H2)
for _k in range(2, 10):
    col = np.zeros(10, dtype=np.int64)
    col[0] = 1
    col[_k] = -1
    _R_MATRIX[:, _k] = col  # r(Ei) = H1 - Ei


def picard_r(beta):
    """Involution r: H1 -> H1, H2 -> 4H1 + H2 - sum(E), Ei -> H1 - Ei."""
    v = np.array(beta.coeffs, dtype=np.int64)
    return PicardClass(tuple(_R_MATRIX @ v))


# ---------------------------------------------------------------------------
# Configuration generation and validation
# ---------------------------------------------------------------------------


def _draw(rng, tau, spread=0.15):
    s, t = rng.uniform(-spread, spread, size=2)
    return complex(s + t * tau)


def validate_elliptic_data(data, margin=GENERICITY_MARGIN):
    """Genericity margins for an elliptic configuration; raises on violation.

    Separation is measured in the lattice-reduced metric.  Checked pairs are
    exactly the coincidences that would collapse a construction downstream:
    equal points, equal f- or g-fibers, vanishing delta, chart escapes.
    """
    tau = data.tau

    def apart(w, label):
        if lattice_distance(w, tau) < margin:
            raise GenericityError(f"genericity margin violated: {label}")

    apart(data.delta, "delta near a lattice point")
    apart(data.a - data.b, "a - b")
    apart(data.a + data.b + data.h1, "a + b + h1")
    apart(data.c - data.d, "c - d")
    apart(data.c + data.d + data.h2, "c + d + h2")

    us = data.u
    for i in range(8):
        apart(us[i] - data.z, f"u{i + 1} - z")
        apart(2 * us[i] - data.h1, f"2 u{i + 1} - h1")
        apart(2 * us[i] - data.h2, f"2 u{i + 1} - h2")
        for j in range(i + 1, 8):
            apart(us[i] - us[j], f"u{i + 1} - u{j + 1}")
            apart(us[i] + us[j] - data.h1, f"u{i + 1} + u{j + 1} - h1")
            apart(us[i] + us[j] - data.h2, f"u{i + 1} + u{j + 1} - h2")
    apart(2 * data.z - data.h1, "2z - h1")
    apart(2 * data.z - data.h2, "2z - h2")

    for w in (*us, data.z):
        pt = data.point(w)
        if pt.x_infinite or pt.y_infinite:
            raise GenericityError("a base point escapes the finite affine chart")
    return data


def random_elliptic_data(seed_or_rng, margin=GENERICITY_MARGIN, max_tries=1000):
    """Draw a generic configuration from a seeded generator, resampling until
    every margin holds."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    for _ in range(max_tries):
        tau = complex(rng.uniform(-0.15, 0.15), rng.uniform(0.75, 1.05))
        lat = Lattice(tau)
        data = EllipticData(
            lattice=lat,
            h1=_draw(rng, tau),
            h2=_draw(rng, tau),
            a=_draw(rng, tau),
            b=_draw(rng, tau),
            c=_draw(rng, tau),
            d=_draw(rng, tau),
            u=tuple(_draw(rng, tau) for _ in range(8)),
            z=_draw(rng, tau),
        )
        try:
            return validate_elliptic_data(data, margin)
        except (GenericityError, DegeneracyError):
            continue
    raise GenerationError(f"no generic configuration found in {max_tries} draws")
