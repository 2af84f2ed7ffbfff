"""The elliptic Painleve step T = T_{E2-E1} and the vertical involution r.

One step moves the parameters (u1, u2) -> (u1 - delta, u2 + delta) and moves
the dependent point P by divisor addition on the unique (2,2) curve C
through {P1, P3..P8, P}: the new point solves T(P2) + T(P) ~ P1 + P on C.
The divisor relation is realized by two chords, i.e. residual intersections
of (1,1) curves with C.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import BiPoly, Vanish, build_family, poly_linear_combine
from .errors import DegeneracyError, GenericityError, NoCurveError
from .numerics import null_space, poly_roots
from .surface import GENERICITY_MARGIN, SurfacePoint

# Auxiliary pencil points are drawn from this fixed stream so that repeated
# runs of a step are bit-identical; degeneracies only trigger re-draws.
_PENCIL_SEED = 0x9E3779B9
_MAX_PENCIL_TRIES = 8


@dataclass(frozen=True)
class PainleveState:
    """An elliptic configuration together with the dependent point P = (f,g)."""

    data: object
    P: SurfacePoint

    def __post_init__(self):
        for base in self.data.base_points():
            if self.P.distance_to(base) < GENERICITY_MARGIN:
                raise GenericityError("dependent point collides with a base point")


def curve22_through(data, extra_points, skip=(2,)):
    """Unique (2,2) curve through the base points (minus ``skip``) and extras.

    ``skip`` lists 1-based base-point indices to omit; the step of
    T_{E2-E1} interpolates through all P_k except P_2, plus P itself.
    """
    pts = [p for k, p in enumerate(data.base_points(), start=1) if k not in skip]
    pts.extend(extra_points)
    fam = build_family((2, 2), [Vanish(p) for p in pts])
    if fam.observed_dim != 1:
        raise DegeneracyError(
            f"(2,2) interpolation through {len(pts)} points has dimension {fam.observed_dim}"
        )
    return fam.basis[0].normalized()


def line11_through(points):
    """The unique (1,1) curve through three points, as a BiPoly."""
    fam = build_family((1, 1), [Vanish(p) for p in points])
    if fam.observed_dim != 1:
        raise DegeneracyError("(1,1) interpolation through 3 points is degenerate")
    return fam.basis[0].normalized()


def intersect_11_22(line, curve):
    """All four intersection points of a (1,1) curve with a (2,2) curve.

    The (1,1) relation solves g as a fractional-linear function of f, so the
    restriction of the (2,2) curve is a quartic in f.
    """
    e = line.coeffs  # e[i][j] f^i g^j, i,j <= 1
    den = np.array([e[0, 1], e[1, 1]])  # e01 + e11 f
    num = np.array([-e[0, 0], -e[1, 0]])  # -(e00 + e10 f)
    q = [np.array(curve.coeffs[:, j]) for j in range(3)]  # g-slices, cubic in f

    def conv(a, b):
        return np.convolve(a, b)

    quartic = np.zeros(5, dtype=complex)
    quartic[: q[0].size + 2 * den.size - 2] += conv(q[0], conv(den, den))
    quartic[: q[1].size + num.size + den.size - 2] += conv(q[1], conv(num, den))
    quartic[: q[2].size + 2 * num.size - 2] += conv(q[2], conv(num, num))

    rr = poly_roots(quartic)
    if rr.roots.size != 4:
        raise DegeneracyError(
            f"pencil member meets the (2,2) curve in {rr.roots.size} finite points, not 4"
        )
    points = []
    for f in rr.roots:
        d = den[0] + den[1] * f
        nmr = num[0] + num[1] * f
        if abs(d) < 1e-12 * max(1.0, abs(nmr)):
            raise DegeneracyError("intersection escapes to g = infinity; retry the pencil")
        points.append(SurfacePoint.from_affine(f, nmr / d))
    return points


def _match_and_deflate(points, known, gate=1e-6):
    """Remove the known points from an intersection list by nearest pairing."""
    remaining = list(points)
    for k in known:
        dists = [k.distance_to(p) for p in remaining]
        j = int(np.argmin(dists))
        if dists[j] > gate:
            raise DegeneracyError(
                f"known intersection not matched (nearest at {dists[j]:.2e})"
            )
        remaining.pop(j)
    return remaining


def _aux_points(rng):
    for _ in range(_MAX_PENCIL_TRIES):
        f = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
        g = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
        yield SurfacePoint.from_affine(f, g)


def chord_residual_points(curve22, pencil_points, known, rng=None):
    """Residual intersections of the (1,1) curve through ``pencil_points``.

    With two pencil points an auxiliary third point pins down one member of
    the pencil; the choice is irrelevant for the divisor class of the
    residual pair and is re-drawn on degeneracy.
    """
    rng = rng or np.random.default_rng(_PENCIL_SEED)
    last = None
    tries = _aux_points(rng) if len(pencil_points) == 2 else [None]
    for aux in tries:
        pts = list(pencil_points) + ([aux] if aux is not None else [])
        try:
            line = line11_through(pts)
            inter = intersect_11_22(line, curve22)
            return _match_and_deflate(inter, known)
        except DegeneracyError as err:
            last = err
            continue
    raise DegeneracyError(f"no nondegenerate pencil member found: {last}")


def chord_residual_point(curve22, known, pencil_pt_a, pencil_pt_b, rng=None):
    """Single residual point of the member through {a, b}, deflating ``known``."""
    rest = chord_residual_points(curve22, [pencil_pt_a, pencil_pt_b], known, rng=rng)
    if len(rest) != 1:
        raise DegeneracyError(f"expected one residual intersection, got {len(rest)}")
    return rest[0]


def elliptic_step(state):
    """One translation step: returns the new PainleveState.

    (a) T(P2) = P_{u2+delta} on the base curve;
    (b) C = unique (2,2) curve through {P1, P3..P8, P};
    (c) T(P) = residual point of T(P2) + T(P) ~ P1 + P on C, via two chords.
    """
    data = state.data
    dotted = data.dotted()
    t_p2 = data.point(data.u[1] + data.delta)

    curve = curve22_through(data, [state.P])
    rng = np.random.default_rng(_PENCIL_SEED)
    p1 = data.point(data.u[0])
    r_s = chord_residual_points(curve, [p1, state.P], [p1, state.P], rng=rng)
    if len(r_s) != 2:
        raise DegeneracyError("first chord did not leave two residual points")
    rest = chord_residual_points(curve, [t_p2, *r_s], [t_p2, *r_s], rng=rng)
    if len(rest) != 1:
        raise DegeneracyError("second chord did not leave one residual point")
    new_p = rest[0]
    if state.P.param is not None:
        # P was on the base curve; tag the image with its closed-form parameter
        new_p = SurfacePoint(
            new_p.x, new_p.y, state.P.param + data.u[0] - data.u[1] - data.delta
        )
    return PainleveState(data=dotted, P=new_p)


def involution_family(data, q_point):
    """Member of the pencil of (2,2) curves through P1, T(P2), P3..P8 and Q.

    The eight points P1, T(P2), P3..P8 satisfy the Abel relation, so the nine
    conditions have one dependency and the family is still a single curve.
    """
    pts = [p for k, p in enumerate(data.base_points(), start=1) if k != 2]
    pts.append(data.point(data.u[1] + data.delta))
    pts.append(q_point)
    fam = build_family((2, 2), [Vanish(p) for p in pts], expected_dim=1)
    if fam.observed_dim != 1:
        raise DegeneracyError("involution curve family is not one-dimensional")
    return fam.basis[0].normalized()


def involution_r(state, q_point):
    """Involution (f, g) -> (f, g~): second root in g of the pinned (2,2) curve.

    The curve through {P1, T(P2), P3..P8, Q} restricted to the vertical line
    f = x_Q is a quadratic in g with g_Q as one root; the involution returns
    the other root, keeping the first coordinate.
    """
    if q_point.x_infinite or q_point.y_infinite:
        raise DegeneracyError("involution point must be in the finite chart")
    curve = involution_family(state.data, q_point)
    quad = curve.restrict_f(q_point.f)
    if abs(quad[2]) < 1e-10 * max(np.abs(quad)):
        raise DegeneracyError("restriction to the vertical line degenerates")
    # deflate the known root g_Q: a g^2 + b g + c = a (g - g_Q)(g - g~)
    other = -(quad[1] + quad[2] * q_point.g) / quad[2]
    return SurfacePoint.from_affine(q_point.f, other)
