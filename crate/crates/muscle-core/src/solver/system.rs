//! Cross-section equilibrium equations for the four contact regimes.
//!
//! One repeating cell of the actuator is modelled as three inextensible-in-
//! width elastic sheets: the inflated pouch membrane (1), the evacuated skin
//! (2), and the bottom pouch membrane (3). Each curved run obeys the membrane
//! Laplace relation `2·T·θ = Δp·W·arc`, straight runs carry tension without
//! pressure load, and the sheet junction is in force balance. Segment lengths
//! respond elastically to tension.
//!
//! Contact regimes (model variants):
//! * A — no contact: three free arcs joined at a point.
//! * B — skin wraps the pouch over a patch (`θ1 < θ2` released).
//! * C — skin flattened against the mid-plane over width `w2`.
//! * D — both contacts at once.

use crate::geom::{chord_from_length, radius_from_length, segment_area, sinc};
use crate::state::{section_height, CrossSectionState, ModelVariant};
use crate::types::{ActuatorSpec, PressureCondition};

/// Per-solve constants in SI units.
#[derive(Debug, Clone)]
pub(crate) struct Ctx {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Natural (prestrain-released) segment lengths.
    pub l10n: f64,
    pub l20n: f64,
    pub l30n: f64,
    /// Designed (flat-state) segment lengths.
    pub l10d: f64,
    pub w: f64,
    pub n: u32,
    pub m: u32,
    /// Flat actuator length `n·L10 + (n−1)·L20`.
    pub ssum0: f64,
    /// Absolute ambient pressure.
    pub p0: f64,
    /// Skin gauge vacuum magnitude `P0 − P2 = −ΔP2 ≥ 0`.
    pub d2: f64,
    /// Tubing/connector volume added on the gas side under a sealed skeleton.
    pub dead_volume: f64,
    /// Row scales: force-balance rows and length rows.
    pub force_scale: f64,
    pub length_scale: f64,
}

impl Ctx {
    pub fn new(spec: &ActuatorSpec, cond: &PressureCondition) -> Self {
        let d2 = -cond.negative_gauge_dp2;
        // Scale force rows by a characteristic membrane load so the
        // convergence test reads as a relative error at every pressure level.
        // Under a sealed skeleton the initial charge is the reference level.
        let d1_ref = cond.positive_gauge_dp1.abs();
        let force_scale = d1_ref.max(d2).max(1e3) * spec.width_w * spec.pouch_length_l10;
        let dead_volume = match cond.skeleton_regime {
            crate::types::SkeletonRegime::ClosedChamber { dead_volume, .. } => dead_volume,
            crate::types::SkeletonRegime::ConstantPressure => 0.0,
        };
        Ctx {
            k1: spec.stiffness_k1(),
            k2: spec.stiffness_k2(),
            k3: spec.stiffness_k3(),
            l10n: spec.natural_pouch_length(),
            l20n: spec.natural_gap_length(),
            l30n: spec.natural_bottom_length(),
            l10d: spec.pouch_length_l10,
            w: spec.width_w,
            n: spec.columns_n,
            m: spec.layers_m,
            ssum0: spec.flat_length(),
            p0: cond.atmospheric_p0,
            d2,
            dead_volume,
            force_scale,
            length_scale: spec.pouch_length_l10,
        }
    }

    /// Pouch/skin pressure difference magnitude `P1 − P2` for pouch gauge `d1`.
    pub fn d13(&self, d1: f64) -> f64 {
        d1 + self.d2
    }
}

/// Number of unknowns for a variant (without a trapped-gas augmentation).
pub(crate) fn dim(variant: ModelVariant) -> usize {
    match variant {
        ModelVariant::A => 6,
        ModelVariant::B => 5,
        ModelVariant::C => 7,
        ModelVariant::D => 6,
    }
}

/// Fully decoded cross-section geometry for one unknown vector.
///
/// All lengths are SI; radii may be infinite for straight segments.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub variant: ModelVariant,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub w1: f64,
    pub w2: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    /// Curved portion of the skin (excludes wrap patch and flattened `w2`).
    pub arc2: f64,
    /// Curved portion of the bottom sheet (excludes wrap patch and `w1`).
    pub arc3: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub sag2: f64,
    pub sag3: f64,
}

/// Expand an unknown vector into explicit geometry.
///
/// Unknown packing:
/// * A: `[θ1, θ3, w1, L1, L2, L3]`
/// * B: `[θ1, w1, L1, L2, L3]` (θ3, θ4 follow from θ2)
/// * C: `[θ1, θ3, w1, w2, L1, L2, L3]`
/// * D: `[θ1, w1, w2, L1, L2, L3]`
pub(crate) fn decode(ctx: &Ctx, variant: ModelVariant, theta2: f64, x: &[f64]) -> Geometry {
    use ModelVariant::*;
    debug_assert_eq!(x.len(), dim(variant));
    let (theta1, theta3, theta4, w1, w2, l1, l2, l3) = match variant {
        A => (x[0], x[1], 0.0, x[2], 0.0, x[3], x[4], x[5]),
        B => {
            let theta1 = x[0];
            (
                theta1,
                std::f64::consts::PI - theta2,
                theta2 - theta1,
                x[1],
                0.0,
                x[2],
                x[3],
                x[4],
            )
        }
        C => (x[0], x[1], 0.0, x[2], x[3], x[4], x[5], x[6]),
        D => {
            let theta1 = x[0];
            (
                theta1,
                std::f64::consts::PI - theta2,
                theta2 - theta1,
                x[1],
                x[2],
                x[3],
                x[4],
                x[5],
            )
        }
    };

    let r1 = radius_from_length(l1, theta1);
    // Skin wrap patch: arc of radius R1 subtending 2·θ4 where the skin lies
    // on the pouch (variants B, D only).
    let patch = if variant.has_skin_skeleton_contact() {
        2.0 * r1 * theta4
    } else {
        0.0
    };
    let arc2 = l2 - patch - w2;
    let arc3 = l3 - patch - w1;
    let r2 = radius_from_length(arc2, theta2);
    let r3 = radius_from_length(arc3, theta3);

    let t1 = ctx.k1 * (l1 - ctx.l10n);
    let t2 = ctx.k2 * (l2 - ctx.l20n);
    let t3 = ctx.k3 * (l3 - ctx.l30n);

    let (s1, s2, s3) = match variant {
        A | C => {
            let s1 = chord_from_length(l1, theta1);
            let s2 = chord_from_length(arc2, theta2) + w2;
            let s3 = chord_from_length(arc3, theta3) + w1;
            (s1, s2, s3)
        }
        B | D => {
            let s1 = 2.0 * r1 * theta1.sin();
            let s2 = 2.0 * r1 * (theta3.sin() - theta1.sin()) + 2.0 * r2 * theta2.sin() + w2;
            let s3 = 2.0 * r3 * theta3.sin() + 2.0 * r1 * (theta1.sin() - theta3.sin()) + w1;
            (s1, s2, s3)
        }
    };

    let sag2 = if r2.is_finite() { r2 * (1.0 - theta2.cos()) } else { 0.0 };
    let sag3 = if r3.is_finite() { r3 * (1.0 - theta3.cos()) } else { 0.0 };

    Geometry {
        variant,
        theta1,
        theta2,
        theta3,
        theta4,
        w1,
        w2,
        l1,
        l2,
        l3,
        r1,
        r2,
        r3,
        arc2,
        arc3,
        t1,
        t2,
        t3,
        s1,
        s2,
        s3,
        sag2,
        sag3,
    }
}

/// Scaled equilibrium residuals for geometry `g` at pouch gauge pressure `d1`.
///
/// Row order matches the unknown packing dimension of `g.variant`.
pub(crate) fn residuals(ctx: &Ctx, g: &Geometry, d1: f64, out: &mut [f64]) {
    use ModelVariant::*;
    let fs = ctx.force_scale;
    let ls = ctx.length_scale;
    let d13 = ctx.d13(d1);

    let laplace1 = 2.0 * g.t1 * g.theta1 - d1 * ctx.w * g.l1;
    let laplace2 = 2.0 * g.t2 * g.theta2 - ctx.d2 * ctx.w * g.arc2;
    let laplace3 = 2.0 * g.t3 * g.theta3 - d13 * ctx.w * g.arc3;

    match g.variant {
        A | C => {
            let span = g.l1 * sinc(g.theta1) - (g.arc3 * sinc(g.theta3) + g.w1);
            let eq_x = g.t1 * g.theta1.cos() + g.t3 * g.theta3.cos() - g.t2 * g.theta2.cos();
            let eq_y = g.t1 * g.theta1.sin() - g.t2 * g.theta2.sin() - g.t3 * g.theta3.sin();
            out[0] = laplace1 / fs;
            out[1] = laplace2 / fs;
            out[2] = laplace3 / fs;
            out[3] = span / ls;
            out[4] = eq_x / fs;
            out[5] = eq_y / fs;
            if g.variant == C {
                out[6] = (g.sag2 - g.sag3) / ls;
            }
        }
        B | D => {
            let closure = 2.0 * (g.r1 - g.r3) * g.theta3.sin() - g.w1;
            let balance = g.t1 - g.t2 - g.t3;
            out[0] = laplace1 / fs;
            out[1] = laplace2 / fs;
            out[2] = laplace3 / fs;
            out[3] = closure / ls;
            out[4] = balance / fs;
            if g.variant == D {
                out[5] = (g.sag2 - g.sag3) / ls;
            }
        }
    }
}

/// Pouch lumen volume of the whole actuator for one cross-section geometry:
/// `m·n·W·(circular segment of arc 1 + circular segment of arc 3)`.
pub(crate) fn lumen_volume(ctx: &Ctx, g: &Geometry) -> f64 {
    let cell = segment_area(g.r1, g.theta1) + segment_area(g.r3, g.theta3);
    ctx.m as f64 * ctx.n as f64 * ctx.w * cell
}

/// Volume the trapped gas occupies under a sealed skeleton: the pouch lumen
/// plus any tubing/connector dead volume.
pub(crate) fn gas_volume(ctx: &Ctx, g: &Geometry) -> f64 {
    lumen_volume(ctx, g) + ctx.dead_volume
}

/// Which closure condition a converged geometry violates. The kind tells the
/// regime search how to react: the two `…ContactActive` kinds ask for a
/// contact to switch on, `NegativePatch`/`NegativeW2` ask for one to release,
/// and the remaining kinds have no regime cure (the model is exhausted).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ClosureViolation {
    /// The bottom sheets' contact run came out negative.
    NegativeContactW1,
    /// A free material arc length came out negative (membrane used up).
    NegativeArc,
    /// The wrap patch angle θ4 is negative: the skin does not reach the pouch.
    NegativePatch,
    /// θ1 < θ2 without wrap contact: the skin must wrap onto the pouch.
    WrapContactActive,
    /// The flattened skin run w2 is negative: mid-plane contact must release.
    NegativeW2,
    /// The skin sags past the bottom sheet: mid-plane contact must form.
    MidplaneContactActive,
}

/// Closure-condition violations of a converged geometry, if any. A violation
/// means the solution is inconsistent with the variant's contact assumptions
/// and the caller must switch regimes (or stop, if no regime cures it).
pub(crate) fn closure_violation(ctx: &Ctx, g: &Geometry) -> Option<(ClosureViolation, String)> {
    let tol_l = 1e-9 * ctx.l10d;
    if g.w1 < -tol_l {
        return Some((
            ClosureViolation::NegativeContactW1,
            format!("contact run w1 = {:.3e} m is negative", g.w1),
        ));
    }
    if g.arc2 < -tol_l || g.arc3 < -tol_l {
        return Some((
            ClosureViolation::NegativeArc,
            format!(
                "a material arc length is negative (arc2 = {:.3e} m, arc3 = {:.3e} m)",
                g.arc2, g.arc3
            ),
        ));
    }
    if g.variant.has_skin_skeleton_contact() {
        if g.theta4 < -1e-9 {
            return Some((
                ClosureViolation::NegativePatch,
                format!(
                    "wrap patch angle theta4 = {:.3e} rad is negative (skin does not reach \
                     the pouch)",
                    g.theta4
                ),
            ));
        }
    } else if g.theta1 < g.theta2 - 1e-9 {
        return Some((
            ClosureViolation::WrapContactActive,
            format!(
                "skin half-angle {:.6} rad exceeds the pouch half-angle {:.6} rad (wrap \
                 contact active)",
                g.theta2, g.theta1
            ),
        ));
    }
    if g.variant.has_midplane_contact() {
        if g.w2 < -tol_l {
            return Some((
                ClosureViolation::NegativeW2,
                format!("flattened skin run w2 = {:.3e} m is negative", g.w2),
            ));
        }
    } else if g.sag2 > g.sag3 + tol_l {
        return Some((
            ClosureViolation::MidplaneContactActive,
            format!(
                "skin sag {:.3e} m exceeds the bottom-sheet sag {:.3e} m (mid-plane contact \
                 active)",
                g.sag2, g.sag3
            ),
        ));
    }
    None
}

/// The message half of [`closure_violation`], for callers that only report.
pub(crate) fn validity_error(ctx: &Ctx, g: &Geometry) -> Option<String> {
    closure_violation(ctx, g).map(|(_, msg)| msg)
}

/// Build the public state record from a converged geometry.
pub(crate) fn build_state(g: &Geometry) -> CrossSectionState {
    let mut state = CrossSectionState {
        model_variant: g.variant,
        r1: g.r1,
        r2: g.r2,
        r3: g.r3,
        theta1: g.theta1,
        theta2: g.theta2,
        theta3: g.theta3,
        theta4: g.theta4,
        contact_w1: g.w1,
        contact_w2: g.w2,
        l1: g.l1,
        l2: g.l2,
        l3: g.l3,
        s1: g.s1,
        s2: g.s2,
        s3: g.s3,
        t1: g.t1,
        t2: g.t2,
        t3: g.t3,
        section_height_h: 0.0,
    };
    state.section_height_h = section_height(&state);
    state
}

/// Recover the unknown vector of `state`'s variant from a state record
/// (used for warm starts and residual evaluation at a reported state).
pub(crate) fn pack_from_state(state: &CrossSectionState) -> Vec<f64> {
    use ModelVariant::*;
    match state.model_variant {
        A => vec![
            state.theta1,
            state.theta3,
            state.contact_w1,
            state.l1,
            state.l2,
            state.l3,
        ],
        B => vec![state.theta1, state.contact_w1, state.l1, state.l2, state.l3],
        C => vec![
            state.theta1,
            state.theta3,
            state.contact_w1,
            state.contact_w2,
            state.l1,
            state.l2,
            state.l3,
        ],
        D => vec![
            state.theta1,
            state.contact_w1,
            state.contact_w2,
            state.l1,
            state.l2,
            state.l3,
        ],
    }
}

/// Convert a converged unknown vector of `from` into a start vector for
/// variant `to` at the same (or a nearby) skin angle.
pub(crate) fn convert_start(
    ctx: &Ctx,
    from: ModelVariant,
    to: ModelVariant,
    theta2: f64,
    x: &[f64],
) -> Vec<f64> {
    use ModelVariant::*;
    let g = decode(ctx, from, theta2, x);
    // Seed contact extents just off zero so Newton can grow them.
    let w2_seed = if g.w2 > 0.0 { g.w2 } else { 1e-4 * ctx.l10d };
    match to {
        A => vec![g.theta1, g.theta3, g.w1, g.l1, g.l2, g.l3],
        B => vec![g.theta1.min(theta2 * 0.999), g.w1, g.l1, g.l2, g.l3],
        C => vec![g.theta1, g.theta3, g.w1, w2_seed, g.l1, g.l2, g.l3],
        D => vec![g.theta1.min(theta2 * 0.999), g.w1, w2_seed, g.l1, g.l2, g.l3],
    }
}

/// Box bounds and typical magnitudes for the unknowns of `variant`.
pub(crate) fn bounds(
    ctx: &Ctx,
    variant: ModelVariant,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    use ModelVariant::*;
    let th = (1e-9, std::f64::consts::PI - 1e-9, 1.0);
    let wl = (-0.5 * ctx.l10d, 10.0 * ctx.ssum0, ctx.l10d);
    let l1 = (1e-3 * ctx.l10n, 200.0 * ctx.l10n, ctx.l10d);
    let l2 = (1e-3 * ctx.l20n, 400.0 * ctx.l20n, ctx.l10d);
    let l3 = (1e-3 * ctx.l10n, 200.0 * ctx.l10n, ctx.l10d);
    let rows: Vec<(f64, f64, f64)> = match variant {
        A => vec![th, th, wl, l1, l2, l3],
        B => vec![th, wl, l1, l2, l3],
        C => vec![th, th, wl, wl, l1, l2, l3],
        D => vec![th, wl, wl, l1, l2, l3],
    };
    let lo = rows.iter().map(|r| r.0).collect();
    let hi = rows.iter().map(|r| r.1).collect();
    let typ = rows.iter().map(|r| r.2).collect();
    (lo, hi, typ)
}
