"""The elimination chain L1, L2 -> L3 -> L4, L5 -> L6 and the compatibility
theorem: L6 evaluated at P agrees projectively with the translated first Lax
operator evaluated at the stepped point.

Every elimination cross-multiplies two operators by each other's
kill-slot coefficients and divides the combination by a known factor; the
divisibility residuals are theorem-level claims and are recorded, never
assumed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .curves import (
    BiPoly,
    Multiplicity,
    Vanish,
    build_family,
    c0_equation,
    exact_divide,
    linear_f,
    poly_linear_combine,
    poly_mul,
)
from .dynamics import PainleveState, elliptic_step
from .errors import DegeneracyError, EliminationError
from .lax import (
    SLOT_DOT,
    SLOT_DOT_MINUS,
    SLOT_DOT_PLUS,
    SLOT_Y,
    SLOT_Y_MINUS,
    SLOT_Y_PLUS,
    LaxOperator,
    WaveValues,
    build_F32,
    build_L1,
    build_L2,
    phi32_tangent,
    phi54,
)
from .numerics import proj_distance
from .surface import SurfacePoint


def eliminate(op_a, op_b, shared_slot, kill_slot, divisor, tol=1e-8):
    """Cancel ``kill_slot`` between two operators and reduce by ``divisor``.

    Forms opB[kill] * opA - opA[kill] * opB on the remaining slots, divides
    every coefficient by the divisor, and records the worst divisibility
    residual.  A residual above ``tol`` raises EliminationError.
    """
    for slot in (shared_slot, kill_slot):
        if slot not in op_a.slots or slot not in op_b.slots:
            raise DegeneracyError(f"operators do not share slot {slot}")
    mult_a = op_b.coeff(kill_slot)
    mult_b = op_a.coeff(kill_slot)
    slots = [s for s in op_a.slots if s != kill_slot]
    slots += [s for s in op_b.slots if s != kill_slot and s not in slots]

    coeffs = []
    residuals = {}
    for slot in slots:
        parts, scal = [], []
        if slot in op_a.slots:
            parts.append(poly_mul(mult_a, op_a.coeff(slot)))
            scal.append(1.0)
        if slot in op_b.slots:
            parts.append(poly_mul(mult_b, op_b.coeff(slot)))
            scal.append(-1.0)
        combo = poly_linear_combine(scal, parts)
        quotient, resid = exact_divide(combo, divisor)
        residuals[slot] = resid
        if resid > tol:
            raise EliminationError(
                f"slot {slot}: combination not divisible (residual {resid:.2e})"
            )
        coeffs.append(quotient)
    op = LaxOperator(tuple(coeffs), tuple(slots)).normalized()
    return op, residuals


class LaxSystem:
    """Caches the L1/L2 operators of one configuration at shifted spectral
    points and derives the elimination chain from them."""

    def __init__(self, state, z=None):
        self.state = state
        self.data = state.data
        self.z = self.data.z if z is None else z
        self._l1 = {}
        self._l2 = {}
        self._phi22 = None

    def phi22(self):
        if self._phi22 is None:
            self._phi22 = c0_equation(self.data)
        return self._phi22

    def l1(self, shift=0):
        if shift not in self._l1:
            self._l1[shift] = build_L1(self.data, self.z + shift * self.data.delta)
        return self._l1[shift]

    def l2(self, shift=0):
        if shift not in self._l2:
            self._l2[shift] = build_L2(self.data, self.z + shift * self.data.delta)
        return self._l2[shift]

    def f_line(self, w):
        return linear_f(self.data.point(w).f)

    def l3(self, shift=0, residuals=None):
        """Step 1 at base point z + shift*delta: eliminate y(z-delta)."""
        dlt = self.data.delta
        zs = self.z + shift * dlt
        divisor = poly_mul(self.phi22(), self.f_line(zs - dlt))
        op, resid = eliminate(
            self.l1(shift), self.l2(shift), SLOT_Y, SLOT_Y_MINUS, divisor
        )
        if residuals is not None:
            residuals[f"step1_shift{shift}"] = resid
        return op.shifted(shift) if shift else op


@dataclass
class EliminationReport:
    """Residual bookkeeping for one run of the chain and theorem check."""

    step_residuals: dict = field(default_factory=dict)
    structure: list = field(default_factory=list)
    dimensions: dict = field(default_factory=dict)
    wave_residuals: dict = field(default_factory=dict)
    l6_residual_at_p: float = float("nan")
    theorem_distance: float = float("nan")
    negative_control_distance: float = float("nan")
    dotted_l1_residual: float = float("nan")

    def max_step_residual(self):
        out = 0.0
        for group in self.step_residuals.values():
            out = max(out, *group.values())
        return out


@dataclass
class ChainResult:
    l3: LaxOperator
    l4: LaxOperator
    l5: LaxOperator
    l6: LaxOperator
    report: EliminationReport
    system: LaxSystem


def run_chain(state, z=None, waves=None, system=None):
    """Steps 1-4 of the elimination chain at one configuration.

    Returns the four derived operators with slots labeled relative to the
    base spectral point, plus the divisibility residuals per step.
    """
    sys_ = system or LaxSystem(state, z)
    data = sys_.data
    dlt = data.delta
    report = EliminationReport()

    l3 = sys_.l3(0, report.step_residuals)
    l3_down = sys_.l3(-1, report.step_residuals)

    l4, resid = eliminate(
        sys_.l2(0), l3_down, SLOT_Y, SLOT_Y_MINUS, sys_.f_line(sys_.z - dlt)
    )
    report.step_residuals["step2"] = resid

    l2_up = sys_.l2(+1).shifted(+1)
    l5, resid = eliminate(l2_up, l3, SLOT_Y, SLOT_Y_PLUS, sys_.f_line(sys_.z))
    report.step_residuals["step3"] = resid

    divisor = poly_mul(sys_.phi22(), sys_.f_line(data.u[0]))
    l6, resid = eliminate(l4, l5, SLOT_DOT, SLOT_Y, divisor)
    report.step_residuals["step4"] = resid

    return ChainResult(l3=l3, l4=l4, l5=l5, l6=l6, report=report, system=sys_)


def propagate_waves(state, z=None, seed=(1.0 + 0.0j, 0.8 - 0.3j), system=None, point=None):
    """Solve the Lax equations for the full wave set at the fixed point P.

    From the seed (y(z-delta), y(z)) the first operator extends along the
    spectral direction and the second produces the translated values; each
    solved value is checked by back-substitution.
    """
    sys_ = system or LaxSystem(state, z)
    p = point if point is not None else state.P

    def solve(op, known, target_slot):
        vals = {s: known[s] for s in op.slots if s in known}
        if len(vals) != 2 or target_slot in vals:
            raise DegeneracyError(f"cannot solve {target_slot} from {sorted(known)}")
        cofs = {s: op.coeff(s).eval_point(p) for s in op.slots}
        scale = max(abs(v) for v in cofs.values())
        if abs(cofs[target_slot]) < 1e-10 * scale:
            raise DegeneracyError(f"solve coefficient for {target_slot} below margin")
        rhs = -sum(cofs[s] * vals[s] for s in vals)
        out = rhs / cofs[target_slot]
        total = sum(abs(cofs[s] * vals[s]) for s in vals) + abs(cofs[target_slot] * out)
        resid = abs(sum(cofs[s] * vals[s] for s in vals) + cofs[target_slot] * out)
        return out, resid / max(total, 1e-300)

    w = {SLOT_Y_MINUS: complex(seed[0]), SLOT_Y: complex(seed[1])}
    resids = {}
    plan = [
        (sys_.l1(0), SLOT_Y_PLUS, 0),
        (sys_.l1(-1), (0, -2), -1),
        (sys_.l1(+1), (0, 2), +1),
        (sys_.l2(0), SLOT_DOT, 0),
        (sys_.l2(-1), SLOT_DOT_MINUS, -1),
        (sys_.l2(+1), SLOT_DOT_PLUS, +1),
    ]
    for op, absolute_slot, shift in plan:
        shifted = op.shifted(shift) if shift else op
        val, resid = solve(shifted, w, absolute_slot)
        w[absolute_slot] = val
        resids[str(absolute_slot)] = resid
    return w, resids


def structure_table_report(chain, tol=1e-8):
    """Verify every coefficient of the six operators against its expected
    factorization and its listed additional zeros.

    Named reference polynomials (the tangent families and the pinned (5,4)
    curves) are interpolated independently and compared projectively; the
    top-degree (7,6) coefficient is checked by membership in its defining
    family instead.
    """
    sys_ = chain.system
    data = sys_.data
    z = sys_.z
    dlt = data.delta
    u1, u2 = data.u[0], data.u[1]
    phi22 = sys_.phi22()

    def lf(w):
        return sys_.f_line(w)

    refs = {
        "phi32": phi32_tangent(data, z),
        "f32_h1_zm": build_F32(data, data.h1 + dlt - z),
        "f32_z": build_F32(data, z),
        "f32_zm": build_F32(data, z - dlt),
        "f32_h1_z": build_F32(data, data.h1 - z),
        "phi54_z": phi54(data, z),
        "phi54_zm": phi54(data, z - dlt),
    }

    shift_a = z - u1 + u2
    shift_b = data.h1 + 2 * dlt - z - u1 + u2
    rows = [
        ("L1", SLOT_Y_MINUS, [lf(z), phi22], None, [z, data.h1 - z]),
        ("L1", SLOT_Y, [], "phi32", [z, data.h1 + dlt - z]),
        ("L1", SLOT_Y_PLUS, [lf(z - dlt), phi22], None, [z - dlt, data.h1 + dlt - z]),
        ("L2", SLOT_Y_MINUS, [lf(u1), phi22], None, []),
        ("L2", SLOT_Y, [], "f32_h1_zm", [shift_a - dlt, data.h1 + dlt - z]),
        ("L2", SLOT_DOT, [lf(z - dlt), phi22], None, [z - dlt, data.h1 + dlt - z]),
        ("L3", SLOT_DOT, [lf(z), phi22], None, [z, data.h1 - z]),
        ("L3", SLOT_Y, [], "f32_z", [z, data.h1 + dlt - u1 + u2 - z]),
        ("L3", SLOT_Y_PLUS, [lf(u1), phi22], None, []),
        ("L4", SLOT_Y, [], "phi54_zm", [shift_a - dlt, shift_b]),
        ("L4", SLOT_DOT, [phi22], "f32_zm", [z - dlt, shift_b]),
        ("L4", SLOT_DOT_MINUS, [lf(u1), phi22, phi22], None, []),
        ("L5", SLOT_Y, [], "phi54_z", [shift_a, shift_b - dlt]),
        ("L5", SLOT_DOT, [phi22], "f32_h1_z", [shift_a, data.h1 - z]),
        ("L5", SLOT_DOT_PLUS, [lf(u1), phi22, phi22], None, []),
        ("L6", SLOT_DOT_MINUS, [phi22], "phi54_z", [shift_a, shift_b - dlt]),
        ("L6", SLOT_DOT, [], "phi76", [shift_a, shift_b]),
        ("L6", SLOT_DOT_PLUS, [phi22], "phi54_zm", [shift_a - dlt, shift_b]),
    ]

    ops = {
        "L1": sys_.l1(0),
        "L2": sys_.l2(0),
        "L3": chain.l3,
        "L4": chain.l4,
        "L5": chain.l5,
        "L6": chain.l6,
    }

    phi76_family = None
    out = []
    for op_name, slot, factors, ref_name, zero_params in rows:
        coeff = ops[op_name].coeff(slot)
        division = []
        current = coeff
        for fac in factors:
            current, resid = exact_divide(current, fac)
            division.append(resid)
        ref_distance = None
        if ref_name == "phi76":
            if phi76_family is None:
                conds = [Multiplicity(data.point(u1), 5), Vanish(data.point(u2))]
                conds += [Multiplicity(data.point(v), 3) for v in data.u[2:]]
                conds += [Vanish(data.point(z + dlt - u1 + u2))]
                phi76_family = build_family((7, 6), conds)
            ref_distance = phi76_family.contains(coeff)
        elif ref_name is not None:
            ref_distance = proj_distance(current.coeffs, refs[ref_name].coeffs)
        zeros = [
            abs(coeff.normalized().eval_point(data.point(w))) for w in zero_params
        ]
        worst = max(
            max(division, default=0.0),
            ref_distance or 0.0,
            max(zeros, default=0.0),
        )
        out.append(
            {
                "name": f"{op_name}[{slot[0]},{slot[1]:+d}]",
                "division": division,
                "reference": ref_distance,
                "zeros": zeros,
                "residual": worst,
                "pass": worst < tol,
            }
        )
    return out


def dimension_report(data, z=None):
    """Observed null-space dimensions of the named interpolation families.

    The (5,4) families behind steps 2 and 3 carry a known count discrepancy,
    so their observed dimension is recorded and flagged, not asserted.
    """
    from .lax import l1_family, l2_family

    z = data.z if z is None else z
    dlt = data.delta
    u1, u2 = data.u[0], data.u[1]
    report = {}
    report["L1a"] = l1_family(data, z).observed_dim
    report["L2a"] = l2_family(data, z).observed_dim

    pts = [p for k, p in enumerate(data.base_points(), start=1) if k != 2]
    conds = [Vanish(p) for p in pts]
    conds += [Vanish(data.point(z)), Vanish(data.point(data.h1 + dlt - z - u1 + u2))]
    report["L3a"] = build_family((3, 2), conds).observed_dim

    def l45_conditions(p_first, p_second):
        conds = [Multiplicity(data.point(u1), 3)]
        conds += [Multiplicity(data.point(v), 2) for v in data.u[2:]]
        conds += [Vanish(data.point(p_first)), Vanish(data.point(p_second))]
        return conds

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fam4 = build_family((5, 4), l45_conditions(z - u1 + u2, data.h1 + 2 * dlt - z - u1 + u2))
        fam5 = build_family(
            (5, 4), l45_conditions(z + dlt - u1 + u2, data.h1 + dlt - z - u1 + u2)
        )
    report["L4a_observed"] = fam4.observed_dim
    report["L4a_matches"] = "formula" if fam4.observed_dim == 4 else (
        "table" if fam4.observed_dim == 3 else "neither"
    )
    report["L5a_observed"] = fam5.observed_dim
    report["L5a_matches"] = "formula" if fam5.observed_dim == 4 else (
        "table" if fam5.observed_dim == 3 else "neither"
    )

    conds = [Multiplicity(data.point(u1), 5), Vanish(data.point(u2))]
    conds += [Multiplicity(data.point(v), 3) for v in data.u[2:]]
    conds += [Vanish(data.point(z + dlt - u1 + u2))]
    report["L6a"] = build_family((7, 6), conds).observed_dim

    from .lax import build_F32 as _f32

    report["F32"] = 1 if _f32(data, z) is not None else 0
    report["phi54"] = 1 if phi54(data, z) is not None else 0
    return report


def verify_theorem(state, z=None, seed=(1.0 + 0.0j, 0.8 - 0.3j), rng=None):
    """Numerical content of the compatibility theorem at one configuration.

    Builds L6 through the chain, steps the configuration, builds the first
    Lax operator of the stepped configuration, and compares the two
    evaluated coefficient triples projectively: L6 at P against the stepped
    operator at the stepped point.  A random stand-in for the stepped point
    provides the negative control.
    """
    chain = run_chain(state, z)
    sys_ = chain.system
    report = chain.report

    waves, wave_resids = propagate_waves(state, z, seed=seed, system=sys_)
    report.wave_residuals = wave_resids

    p = state.P
    l6_vals = chain.l6.evaluate(p)
    dotted_triple = np.array(
        [waves[SLOT_DOT_MINUS], waves[SLOT_DOT], waves[SLOT_DOT_PLUS]]
    )
    order = [chain.l6.slots.index(s) for s in (SLOT_DOT_MINUS, SLOT_DOT, SLOT_DOT_PLUS)]
    l6_triple = l6_vals[order]
    scale = np.sum(np.abs(l6_triple * dotted_triple))
    report.l6_residual_at_p = float(
        abs(np.sum(l6_triple * dotted_triple)) / max(scale, 1e-300)
    )

    stepped = elliptic_step(state)
    dotted_l1 = build_L1(stepped.data, sys_.z)
    dotted_vals = dotted_l1.evaluate(stepped.P)
    report.theorem_distance = proj_distance(l6_triple, dotted_vals)
    report.dotted_l1_residual = float(
        abs(np.sum(dotted_vals * dotted_triple))
        / max(np.sum(np.abs(dotted_vals * dotted_triple)), 1e-300)
    )

    rng = rng or np.random.default_rng(0xC0FFEE)
    fake = SurfacePoint.from_affine(
        complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)),
        complex(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)),
    )
    report.negative_control_distance = proj_distance(
        l6_triple, dotted_l1.evaluate(fake)
    )
    return report


def lemma13_residual(state, z=None, samples=3):
    """Shift symmetry of the normalized step-1 coefficients.

    With (L2): y(z-d) - A2 y + B2 T(y) = 0 and (L3): y(z+d) - A3 y + B3 T(y) = 0,
    the claim is A3(h1 + d - z) = A2(z) and B3(h1 + d - z) = B2(z) pointwise.
    """
    sys_ = LaxSystem(state, z)
    data = sys_.data
    z0 = sys_.z
    mirrored = LaxSystem(state, data.h1 + data.delta - z0)
    l2 = sys_.l2(0)
    l3_mirror = mirrored.l3(0)

    probes = [
        SurfacePoint.from_affine(0.47 + 0.29j, -0.58 + 0.41j),
        SurfacePoint.from_affine(-0.31 - 0.52j, 0.64 + 0.17j),
        SurfacePoint.from_affine(0.12 + 0.71j, 0.35 - 0.46j),
    ][:samples]
    worst = 0.0
    for p in probes:
        c4, c5, c6 = (l2.coeff(s).eval_point(p) for s in (SLOT_Y_MINUS, SLOT_Y, SLOT_DOT))
        a2, b2 = -c5 / c4, c6 / c4
        cy, cyp, cd = (
            l3_mirror.coeff(s).eval_point(p) for s in (SLOT_Y, SLOT_Y_PLUS, SLOT_DOT)
        )
        a3, b3 = -cy / cyp, cd / cyp
        worst = max(
            worst,
            abs(a3 - a2) / max(1.0, abs(a2)),
            abs(b3 - b2) / max(1.0, abs(b2)),
        )
    return worst


def _locus_points(data, w, g_anchor, count=3):
    """Points P with translated first coordinate equal to f_w, found as roots
    of the pinned (5,4) curve restricted to a horizontal line."""
    from .numerics import poly_roots

    curve = phi54(data, w)
    coeffs = curve.restrict_g(g_anchor)
    rr = poly_roots(coeffs)
    pts = []
    for f in rr.roots:
        if abs(f) > 50:
            continue
        pts.append(SurfacePoint.from_affine(f, g_anchor))
        if len(pts) == count:
            break
    if not pts:
        raise DegeneracyError("no usable locus point on the probe line")
    return pts


def lemma14_point_residual(state, z=None, seed=(1.0 + 0.0j, 0.8 - 0.3j)):
    """Second passage condition of step 2: at a point P with stepped first
    coordinate f_{z-delta}, the propagated translated waves satisfy
    (g. - g_{h1-z+d}) T(y) = (g. - g_{z-d}) T(y)(z-d)."""
    data = state.data
    z0 = data.z if z is None else z
    dlt = data.delta
    worst = 0.0
    for p_star in _locus_points(data, z0 - dlt, -0.37 + 0.22j, count=2):
        st = PainleveState(data, p_star)
        stepped = elliptic_step(st)
        fz = data.point(z0 - dlt).f
        check = abs(stepped.P.f - fz) / max(1.0, abs(fz))
        if check > 1e-6:
            raise DegeneracyError(f"locus point misses the fiber ({check:.2e})")
        waves, _ = propagate_waves(st, z0, seed=seed)
        g_dot = stepped.P.g
        lhs = (g_dot - data.point(data.h1 - z0 + dlt).g) * waves[SLOT_DOT]
        rhs = (g_dot - data.point(z0 - dlt).g) * waves[SLOT_DOT_MINUS]
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1e-300))
    return worst


def lemma15_point_residual(state, z=None, seed=(1.0 + 0.0j, 0.8 - 0.3j)):
    """Second passage condition of step 3: at a point P with stepped first
    coordinate f_z, the propagated waves satisfy
    (g. - g_{h1-z}) T(y)(z+d) = (g. - g_z) T(y)."""
    data = state.data
    z0 = data.z if z is None else z
    worst = 0.0
    for p_star in _locus_points(data, z0, 0.33 - 0.27j, count=2):
        st = PainleveState(data, p_star)
        stepped = elliptic_step(st)
        waves, _ = propagate_waves(st, z0, seed=seed)
        g_dot = stepped.P.g
        lhs = (g_dot - data.point(data.h1 - z0).g) * waves[SLOT_DOT_PLUS]
        rhs = (g_dot - data.point(z0).g) * waves[SLOT_DOT]
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1e-300))
    return worst
