//! One-dimensional equilibrium branch for a skin at ambient pressure
//! (`ΔP2 = 0`).
//!
//! With no pressure difference across the skin it stays straight (zero
//! curvature) even while carrying tension, so the cross-section collapses to
//! a symmetric one-parameter family: both pouch sheets bulge with the same
//! half-angle `θ` and length `Λ1(θ)` fixed by the membrane Laplace relation,
//! and the straight skin's tension follows from the junction balance
//! `T2 = 2·T1·cos θ`. This branch handles both the blocked state (length
//! pinned at the flat length) and the free-contraction sweep.

use crate::geom::{chord_from_length, radius_from_length, segment_area};
use crate::state::{CrossSectionState, CurvePoint, GasState, ModelVariant};
use crate::types::{Error, Result, SolverSettings};

use super::newton::bisect;
use super::system::Ctx;

/// Laplace-consistent pouch sheet length at half-angle `theta` and pouch
/// gauge `d1`: `Λ1 = L1n / (1 − d1·W/(2·K1·θ))`. Valid for `θ > d1·W/(2·K1)`.
pub(crate) fn laplace_length_1(ctx: &Ctx, d1: f64, theta: f64) -> f64 {
    ctx.l10n / (1.0 - d1 * ctx.w / (2.0 * ctx.k1 * theta))
}

/// Pouch half-angle below which the Laplace relation for the pouch sheets
/// has no tensile solution at gauge `d1`.
pub(crate) fn min_pouch_angle(ctx: &Ctx, d1: f64) -> f64 {
    d1 * ctx.w / (2.0 * ctx.k1)
}

/// Build the symmetric no-vacuum cross-section at pouch half-angle `theta`
/// with skin span (= length) `l2` and skin tension `t2`.
fn build_state(ctx: &Ctx, d1: f64, theta: f64, l2: f64, t2: f64) -> CrossSectionState {
    let l1 = laplace_length_1(ctx, d1, theta);
    let r = radius_from_length(l1, theta);
    let t1 = ctx.k1 * (l1 - ctx.l10n);
    let s1 = chord_from_length(l1, theta);
    let sag = if r.is_finite() { r * (1.0 - theta.cos()) } else { 0.0 };
    CrossSectionState {
        model_variant: ModelVariant::A,
        r1: r,
        r2: f64::INFINITY,
        r3: r,
        theta1: theta,
        theta2: 0.0,
        theta3: theta,
        theta4: 0.0,
        contact_w1: 0.0,
        contact_w2: 0.0,
        l1,
        l2,
        l3: l1,
        s1,
        s2: l2,
        s3: s1,
        t1,
        t2,
        t3: t1,
        section_height_h: 2.0 * sag,
    }
}

/// Actuator length for pouch span `s1` and skin span `s2`.
fn total_length(ctx: &Ctx, s1: f64, s2: f64) -> f64 {
    let n = ctx.n as f64;
    n * s1 + (n - 1.0) * s2
}

/// Blocked (flat-length) state on the no-vacuum branch at pouch gauge `d1`.
///
/// The flat-length constraint fixes the skin span each gap must take, which
/// implies a skin tension; the junction balance implies another. Their
/// matching point in `θ` is the blocked state. Fails with `NoBlockedState`
/// when the pouches cannot be inflated (`d1 ≤ 0`) or when holding the flat
/// length never tensions the skin (no positive blocked force exists).
pub(crate) fn blocked_state(ctx: &Ctx, d1: f64) -> Result<CrossSectionState> {
    if d1 <= 0.0 {
        return Err(Error::NoBlockedState(
            "pouches are unpressurized (dP1 <= 0); the flat state carries no force".into(),
        ));
    }
    let a1 = min_pouch_angle(ctx, d1);
    if a1 >= std::f64::consts::FRAC_PI_2 * 0.999 {
        return Err(Error::NoBlockedState(format!(
            "pouch pressure too high for the sheet stiffness: the membrane relation needs a \
             half-angle above {a1:.3} rad"
        )));
    }
    let n = ctx.n as f64;
    let lo = a1 * (1.0 + 1e-9) + 1e-12;
    let hi = std::f64::consts::FRAC_PI_2;

    if ctx.n == 1 {
        // Single column: no skin gaps; the flat-length constraint pins the
        // pouch span alone: Λ1(θ)·sinc(θ) = Ssum0.
        let span_err =
            |th: f64| chord_from_length(laplace_length_1(ctx, d1, th), th) - ctx.ssum0;
        // Span decreases from +∞ (θ→a1) while Λ1 explodes; require a sign
        // change by θ = π/2.
        if span_err(hi) > 0.0 {
            return Err(Error::NoBlockedState(
                "pouch span exceeds the flat length for every admissible half-angle".into(),
            ));
        }
        let theta = bisect(span_err, lo, hi, 1e-15)?;
        let t1 = ctx.k1 * (laplace_length_1(ctx, d1, theta) - ctx.l10n);
        let t2 = 2.0 * t1 * theta.cos();
        let l2 = ctx.l20n + t2 / ctx.k2;
        return Ok(build_state(ctx, d1, theta, l2, t2));
    }

    // Required skin span at θ; implied vs. equilibrium skin tension.
    let skin_req = |th: f64| {
        let s1 = chord_from_length(laplace_length_1(ctx, d1, th), th);
        (ctx.ssum0 - n * s1) / (n - 1.0)
    };
    let tension_gap = |th: f64| {
        let l1 = laplace_length_1(ctx, d1, th);
        let t1 = ctx.k1 * (l1 - ctx.l10n);
        let t2_req = ctx.k2 * (skin_req(th) - ctx.l20n);
        2.0 * t1 * th.cos() - t2_req
    };
    if tension_gap(hi) >= 0.0 {
        // Even fully bulged pouches leave the skin slack at the flat length:
        // the blocked force would be zero.
        return Err(Error::NoBlockedState(
            "skin stays slack at the flat length; the blocked force vanishes".into(),
        ));
    }
    let theta = bisect(tension_gap, lo, hi, 1e-15)?;
    let l2 = skin_req(theta);
    let t2 = ctx.k2 * (l2 - ctx.l20n);
    if t2 < 0.0 {
        return Err(Error::NoBlockedState(
            "flat-length skin tension is negative; the skin buckles instead of pulling".into(),
        ));
    }
    Ok(build_state(ctx, d1, theta, l2, t2))
}

/// Evaluate the free (length-unconstrained) no-vacuum state at `theta`.
/// Returns the state; the skin is taut at the junction-balance tension (the
/// sweep terminates before the tension can cross zero at θ = π/2).
fn free_state(ctx: &Ctx, d1: f64, theta: f64) -> CrossSectionState {
    let l1 = laplace_length_1(ctx, d1, theta);
    let t1 = ctx.k1 * (l1 - ctx.l10n);
    let t2 = 2.0 * t1 * theta.cos();
    let l2 = ctx.l20n + t2 / ctx.k2;
    build_state(ctx, d1, theta, l2, t2)
}

/// Gas-side volume of a no-vacuum state: symmetric pouch lumen plus any
/// tubing dead volume.
fn volume(ctx: &Ctx, state: &CrossSectionState) -> f64 {
    let cell = 2.0 * segment_area(state.r1, state.theta1);
    ctx.m as f64 * ctx.n as f64 * ctx.w * cell + ctx.dead_volume
}

/// Instantaneous pouch gauge for a sealed skeleton at pouch half-angle
/// `theta`: solves the isothermal gas law `(P0 + dP1)·V(θ, dP1) = pv` for
/// `dP1` by bisection (the product is strictly increasing in `dP1`).
fn sealed_gauge_at(ctx: &Ctx, gas: &GasState, theta: f64, seed: f64) -> Result<f64> {
    let h = |dp1: f64| {
        let state = free_state(ctx, dp1, theta);
        (ctx.p0 + dp1) * volume(ctx, &state) - gas.trapped_moles_proxy
    };
    // The pouch relation needs θ > a1(dp1) ⇔ dp1 < 2·K1·θ/W; stay below it.
    let dp1_cap = 0.999 * 2.0 * ctx.k1 * theta / ctx.w;
    let mut lo = -0.95 * ctx.p0;
    let mut hi = seed.abs().max(1e3).min(dp1_cap);
    let mut grow = 0;
    while h(hi) < 0.0 {
        let next = (hi * 1.6 + 1e3).min(dp1_cap);
        if next == hi || grow > 80 {
            return Err(Error::NoConvergence {
                residual: h(hi).abs(),
                iters: grow,
                context: "sealed-skeleton gas law has no admissible pouch gauge".into(),
            });
        }
        hi = next;
        grow += 1;
    }
    while h(lo) > 0.0 {
        let next = lo + 0.5 * (-ctx.p0 - lo);
        if (next - lo).abs() < 1e-9 {
            return Err(Error::VolumeCollapse {
                volume: volume(ctx, &free_state(ctx, lo, theta)),
                floor: 1e-9,
            });
        }
        lo = next;
    }
    bisect(h, lo, hi, 1e-9 * ctx.p0.max(1.0))
}

/// Trace the no-vacuum force–contraction curve.
///
/// `d1_supply` is the constant pouch gauge; with `gas` present the gauge
/// floats per point under the isothermal law instead (and `d1_supply` seeds
/// the per-point search). `kr_at` maps the instantaneous gauge to the fold
/// resistance coefficient.
pub(crate) fn trace(
    ctx: &Ctx,
    settings: &SolverSettings,
    d1_supply: f64,
    gas: Option<&GasState>,
    kr_at: &dyn Fn(f64) -> f64,
    min_volume: f64,
) -> Result<(Vec<CurvePoint>, bool, Option<String>)> {
    let blocked = blocked_state(ctx, d1_supply)?;
    if let Some(g) = gas {
        let v = volume(ctx, &blocked);
        if v < min_volume {
            return Err(Error::VolumeCollapse { volume: v, floor: min_volume });
        }
        // The sealed charge is defined at this very state; consistency check
        // is structural, not numeric (seal() built `g` from it).
        debug_assert!((g.sealed_absolute_p1 - (ctx.p0 + d1_supply)).abs() < 1e-6);
    }

    let mut points = vec![CurvePoint {
        contraction_ratio_cr: 0.0,
        output_force_f: 2.0 * blocked.t2,
        resistance_fr: 0.0,
        actuator_length_ssum: ctx.ssum0,
        state: blocked.clone(),
        skeleton_gauge_dp1: d1_supply,
    }];

    let mut theta = blocked.theta1;
    let mut dp1 = d1_supply;
    let mut truncated = false;
    let mut reason: Option<String> = None;

    for _ in 0..200_000 {
        theta += settings.theta2_step;
        if theta >= std::f64::consts::FRAC_PI_2 {
            theta = std::f64::consts::FRAC_PI_2 - 1e-12;
        }

        if let Some(g) = gas {
            match sealed_gauge_at(ctx, g, theta, dp1) {
                Ok(v) => dp1 = v,
                Err(e) => {
                    truncated = true;
                    reason = Some(format!("sealed-gas update failed: {e}"));
                    break;
                }
            }
        }
        let state = free_state(ctx, dp1, theta);
        if gas.is_some() {
            let v = volume(ctx, &state);
            if v < min_volume {
                truncated = true;
                reason = Some(format!(
                    "skeleton volume {v:.3e} m³ fell below the {min_volume:.0e} m³ floor"
                ));
                break;
            }
        }
        let ssum = total_length(ctx, state.s1, state.s2);
        let cr = (ctx.ssum0 - ssum) / ctx.ssum0;
        let fr = kr_at(dp1) * (ctx.ssum0 - ssum).max(0.0);
        let f = 2.0 * state.t2 - fr;
        points.push(CurvePoint {
            contraction_ratio_cr: cr,
            output_force_f: f,
            resistance_fr: fr,
            actuator_length_ssum: ssum,
            state,
            skeleton_gauge_dp1: dp1,
        });

        if f <= 0.0 {
            super::interpolate_terminal(ctx, settings, &mut points, kr_at);
            return Ok((points, false, None));
        }
        if theta >= std::f64::consts::FRAC_PI_2 - 1e-9 {
            // T2 → 0 at π/2, so the force cannot stay positive here; the
            // endpoint is terminal and its force is exactly the T2 → 0 limit
            // (reaching this branch means Fr stayed ~0, else f ≤ 0 fired).
            points.last_mut().expect("endpoint exists").output_force_f = 0.0;
            return Ok((points, false, None));
        }
    }
    Ok((points, truncated, reason))
}
