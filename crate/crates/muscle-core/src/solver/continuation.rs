//! Vacuum-branch equilibrium solving, blocked-state location, and curve
//! tracing with automatic contact-regime escalation.
//!
//! The skin half-angle θ2 is the continuation parameter: the blocked state is
//! the θ2 where the actuator holds exactly its flat length, and the
//! force–contraction curve is swept by growing θ2 from there. Contact flags
//! only ever switch on along a sweep (skin wrap: A→B, C→D; mid-plane
//! flattening: A→C, B→D).

use crate::state::{CrossSectionState, CurvePoint, GasState, ModelVariant};
use crate::types::{Error, Result, SolverSettings};

use super::newton::{self, NewtonOptions};
use super::slack;
use super::system::{self, Ctx, Geometry};

/// One converged equilibrium: geometry, public state, raw unknowns, and the
/// pouch gauge pressure in effect (fixed, or solved under a sealed skeleton).
#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub g: Geometry,
    pub state: CrossSectionState,
    pub x: Vec<f64>,
    pub dp1: f64,
}

/// How the pouch pressure is supplied during a solve.
#[derive(Clone, Copy)]
pub(crate) enum Drive<'a> {
    /// Fixed gauge pressure.
    Constant(f64),
    /// Sealed skeleton: the gauge is an extra unknown tied to the isothermal
    /// gas law; `seed_dp1` starts its iteration.
    Sealed { gas: &'a GasState, seed_dp1: f64 },
}

impl Drive<'_> {
    fn seed(&self) -> f64 {
        match self {
            Drive::Constant(d) => *d,
            Drive::Sealed { seed_dp1, .. } => *seed_dp1,
        }
    }
}

fn variant_for(flags: (bool, bool)) -> ModelVariant {
    match flags {
        (false, false) => ModelVariant::A,
        (true, false) => ModelVariant::B,
        (false, true) => ModelVariant::C,
        (true, true) => ModelVariant::D,
    }
}

fn flags_for(variant: ModelVariant) -> (bool, bool) {
    (
        variant.has_skin_skeleton_contact(),
        variant.has_midplane_contact(),
    )
}

/// Contact conditions a converged state says should be active.
fn induced_flags(g: &Geometry) -> (bool, bool) {
    let current = flags_for(g.variant);
    let wrap = current.0 || g.theta1 < g.theta2 - 1e-10;
    let flatten = current.1 || g.sag2 > g.sag3 + 1e-12;
    (wrap, flatten)
}

/// Solve one variant at fixed θ2 from one start vector.
fn solve_variant(
    ctx: &Ctx,
    settings: &SolverSettings,
    variant: ModelVariant,
    theta2: f64,
    drive: Drive<'_>,
    start: &[f64],
) -> Result<Outcome> {
    let base_dim = system::dim(variant);
    let (mut lo, mut hi, mut typ) = system::bounds(ctx, variant);
    let mut x0 = start.to_vec();
    debug_assert_eq!(x0.len(), base_dim);
    if let Drive::Sealed { .. } = drive {
        x0.push(drive.seed());
        lo.push(-0.95 * ctx.p0);
        hi.push(60.0 * ctx.p0);
        typ.push(ctx.p0);
    }

    let f = |x: &[f64], out: &mut [f64]| {
        let (xs, d1) = match drive {
            Drive::Constant(d1) => (&x[..], d1),
            Drive::Sealed { .. } => (&x[..base_dim], x[base_dim]),
        };
        let g = system::decode(ctx, variant, theta2, xs);
        system::residuals(ctx, &g, d1, &mut out[..base_dim]);
        if let Drive::Sealed { gas, .. } = drive {
            let v = system::gas_volume(ctx, &g);
            out[base_dim] = ((ctx.p0 + d1) * v - gas.trapped_moles_proxy)
                / gas.trapped_moles_proxy;
        }
    };

    let opts = NewtonOptions {
        tol: settings.residual_tol,
        max_iters: settings.max_newton_iters,
        damping: settings.newton_damping,
        context: format!("variant {} at theta2 = {theta2:.6}", variant.letter()),
    };
    let (x, _) = newton::solve(f, &x0, &lo, &hi, &typ, &opts)?;

    let (xs, dp1) = match drive {
        Drive::Constant(d1) => (&x[..], d1),
        Drive::Sealed { .. } => (&x[..base_dim], x[base_dim]),
    };
    let g = system::decode(ctx, variant, theta2, xs);
    let state = system::build_state(&g);
    Ok(Outcome { state, x: xs.to_vec(), dp1, g })
}

/// Cold-start candidates for variant A at fixed θ2.
fn cold_starts(ctx: &Ctx, theta2: f64, d1: f64) -> Vec<Vec<f64>> {
    let a1 = slack::min_pouch_angle(ctx, d1.max(0.0));
    let lam2 = {
        let denom = 1.0 - ctx.d2 * ctx.w / (2.0 * ctx.k2 * theta2);
        if denom > 0.01 {
            (ctx.l20n / denom).min(10.0 * ctx.l20n)
        } else {
            2.0 * ctx.l20n
        }
    };
    let mut starts = Vec::new();
    for th1 in [0.8_f64, 0.5, 1.1, 1.4, 0.3] {
        let th1 = th1.max(1.10 * a1).min(3.0);
        let l1 = {
            let lam1 = slack::laplace_length_1(ctx, d1.max(1.0), th1);
            if lam1 > ctx.l10n && lam1 < 3.0 * ctx.l10n {
                lam1
            } else {
                1.02 * ctx.l10n
            }
        };
        let th3 = (th1 * 1.15 + 0.05).min(3.0);
        starts.push(vec![th1, th3, 0.05 * ctx.l10d, l1, lam2, l1]);
    }
    starts
}

/// Solve at θ2 under one prescribed variant, without escalation. Uses the
/// given start vector, or the cold-start ladder (converted from variant A's
/// guesses when needed).
pub(crate) fn solve_fixed_variant(
    ctx: &Ctx,
    settings: &SolverSettings,
    variant: ModelVariant,
    theta2: f64,
    drive: Drive<'_>,
    start: Option<Vec<f64>>,
) -> Result<Outcome> {
    let starts: Vec<Vec<f64>> = match start {
        Some(x) => vec![x],
        None if variant == ModelVariant::A => cold_starts(ctx, theta2, drive.seed()),
        None => cold_starts(ctx, theta2, drive.seed())
            .into_iter()
            .map(|x| system::convert_start(ctx, ModelVariant::A, variant, theta2, &x))
            .collect(),
    };
    let mut last_err = None;
    for s in &starts {
        match solve_variant(ctx, settings, variant, theta2, drive, s) {
            Ok(o) => return Ok(o),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::NoConvergence {
        residual: f64::NAN,
        iters: 0,
        context: format!("no start available at theta2 = {theta2:.6}"),
    }))
}

fn flag_index(flags: (bool, bool)) -> usize {
    (flags.0 as usize) | ((flags.1 as usize) << 1)
}

/// Whether a regime respects the contacts already locked in by `floor`.
fn at_or_above(flags: (bool, bool), floor: (bool, bool)) -> bool {
    (flags.0 || !floor.0) && (flags.1 || !floor.1)
}

/// The first regime at or above `floor` that has not been attempted yet,
/// in the fixed order A, B, C, D.
fn next_untried(tried: &[bool; 4], floor: (bool, bool)) -> Option<(bool, bool)> {
    [(false, false), (true, false), (false, true), (true, true)]
        .into_iter()
        .find(|&f| at_or_above(f, floor) && !tried[flag_index(f)])
}

/// Solve at θ2 with automatic contact-regime selection.
///
/// Starts from `warm` when given (converting between variants as needed),
/// otherwise from the cold-start ladder. After convergence the contact
/// conditions are re-checked: a violated closure condition names the contact
/// that must switch on (or release), and the point is re-solved under that
/// regime. A contact whose extent has run out (wrap patch angle or flattened
/// run gone negative) is released even when `base_flags` holds it — the
/// branch the sweep was following has ended there and continues in the
/// released regime. `base_flags` gates only the un-hinted fallback scan, so
/// a sweep passing its previous regime cannot wander to a lower-contact
/// branch without such a release event. The warm start only seeds the first
/// attempt (its regime is where the search begins, not a floor), so a caller
/// probing scattered θ2 values can reuse warm starts without locking in
/// their contacts. Each regime is attempted at most once.
pub(crate) fn solve_escalating(
    ctx: &Ctx,
    settings: &SolverSettings,
    theta2: f64,
    drive: Drive<'_>,
    warm: Option<&Outcome>,
    base_flags: (bool, bool),
) -> Result<Outcome> {
    let floor = base_flags;
    let mut flags = floor;
    if let Some(w) = warm {
        let wf = flags_for(w.g.variant);
        flags = (flags.0 || wf.0, flags.1 || wf.1);
    }
    let mut tried = [false; 4];
    let mut prev: Option<Outcome> = warm.cloned();
    let mut last_err: Option<Error> = None;

    for _ in 0..8 {
        tried[flag_index(flags)] = true;
        let variant = variant_for(flags);
        let drive_here = match drive {
            Drive::Constant(_) => drive,
            Drive::Sealed { gas, .. } => Drive::Sealed {
                gas,
                seed_dp1: prev.as_ref().map_or(drive.seed(), |p| p.dp1),
            },
        };
        let starts: Vec<Vec<f64>> = match &prev {
            Some(p) if p.g.variant == variant => vec![p.x.clone()],
            Some(p) => vec![system::convert_start(
                ctx,
                p.g.variant,
                variant,
                theta2,
                &p.x,
            )],
            None if variant == ModelVariant::A => cold_starts(ctx, theta2, drive.seed()),
            None => cold_starts(ctx, theta2, drive.seed())
                .into_iter()
                .map(|x| system::convert_start(ctx, ModelVariant::A, variant, theta2, &x))
                .collect(),
        };

        let mut outcome = None;
        for start in &starts {
            match solve_variant(ctx, settings, variant, theta2, drive_here, start) {
                Ok(o) => {
                    outcome = Some(o);
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }

        let Some(out) = outcome else {
            // Convergence failure under this regime: move on blindly.
            match next_untried(&tried, floor) {
                Some(f) => {
                    flags = f;
                    continue;
                }
                None => {
                    return Err(last_err.unwrap_or(Error::NoConvergence {
                        residual: f64::NAN,
                        iters: 0,
                        context: format!("no start converged at theta2 = {theta2:.6}"),
                    }))
                }
            }
        };

        if let Some((kind, reason)) = system::closure_violation(ctx, &out.g) {
            // Converged onto a configuration outside this regime's domain.
            // The violation kind names the regime move that cures it: an
            // overlap switches the contact on, a negative extent releases it
            // (the contact has physically vanished, floor or not). Only a
            // violation with no cure (a material arc used up) has no move.
            last_err = Some(Error::InvalidVariant {
                variant: out.g.variant,
                reason,
            });
            use system::ClosureViolation as V;
            let want = match kind {
                V::WrapContactActive => Some((true, flags.1)),
                V::MidplaneContactActive => Some((flags.0, true)),
                V::NegativePatch => Some((false, flags.1)),
                V::NegativeW2 => Some((flags.0, false)),
                _ => None,
            };
            match want {
                Some(f) if !tried[flag_index(f)] => {
                    flags = f;
                    prev = Some(out);
                    continue;
                }
                _ => match next_untried(&tried, floor) {
                    Some(f) => {
                        flags = f;
                        prev = Some(out);
                        continue;
                    }
                    None => return Err(last_err.unwrap()),
                },
            }
        }

        let induced = induced_flags(&out.g);
        if induced == flags {
            return Ok(out);
        }
        if tried[flag_index(induced)] {
            // The induced regime was already attempted and rejected: the
            // point sits on a regime boundary within tolerance, and this
            // valid solution is the answer.
            return Ok(out);
        }
        flags = induced;
        prev = Some(out);
    }
    Err(last_err.unwrap_or(Error::NoConvergence {
        residual: f64::NAN,
        iters: 0,
        context: format!("contact-regime escalation did not settle at theta2 = {theta2:.6}"),
    }))
}

fn total_length(ctx: &Ctx, state: &CrossSectionState) -> f64 {
    let n = ctx.n as f64;
    n * state.s1 + (n - 1.0) * state.s2
}

fn contraction(ctx: &Ctx, state: &CrossSectionState) -> f64 {
    (ctx.ssum0 - total_length(ctx, state)) / ctx.ssum0
}

/// Output force before fold resistance: skin tension plus the vacuum acting
/// on the open mid-gap height (the gap closes in variants C/D).
pub(crate) fn raw_force(ctx: &Ctx, state: &CrossSectionState) -> f64 {
    match state.model_variant {
        ModelVariant::A | ModelVariant::B => {
            2.0 * state.t2 + ctx.d2 * state.section_height_h * ctx.w
        }
        ModelVariant::C | ModelVariant::D => 2.0 * state.t2,
    }
}

/// Locate the blocked state on the vacuum branch: the θ2 at which the
/// actuator holds exactly its flat length. Requires `d2 > 0` and `dP1 > 0`
/// (ambient-skin and unpressurized cases take the dedicated branches).
pub(crate) fn blocked(
    ctx: &Ctx,
    settings: &SolverSettings,
    drive: Drive<'_>,
) -> Result<(Outcome, f64)> {
    let pi = std::f64::consts::PI;
    let theta_min = ctx.d2 * ctx.w / (2.0 * ctx.k2);
    if theta_min >= pi - 0.06 {
        return Err(Error::NoBlockedState(format!(
            "vacuum too strong for the skin stiffness: the membrane relation needs a skin \
             half-angle above {theta_min:.3} rad"
        )));
    }
    let theta_cap = (pi - 0.05).max(theta_min * 1.001 + 1e-9);

    let mut warm: Option<Outcome> = None;
    let probe = |theta2: f64, warm: &mut Option<Outcome>| -> Result<(f64, Outcome)> {
        let out = solve_escalating(ctx, settings, theta2, drive, warm.as_ref(), (false, false))?;
        let cr = contraction(ctx, &out.state);
        *warm = Some(out.clone());
        Ok((cr, out))
    };

    // Upper bracket: grow θ2 until the folded skin pulls the actuator to or
    // below its flat length (CR ≥ 0). CR increases with θ2. The model's
    // admissible fold range can end before θ2_cap (free arcs run out), so a
    // failed probe shrinks toward the last good angle instead of aborting.
    let mut hi = (3.0 * theta_min).max(0.4).min(theta_cap);
    let (mut cr_hi, mut out_hi) = {
        let mut first = None;
        let mut last_err = None;
        for _ in 0..30 {
            match probe(hi, &mut warm) {
                Ok(r) => {
                    first = Some(r);
                    break;
                }
                Err(e) => {
                    last_err = Some(e);
                    let next = theta_min + 0.7 * (hi - theta_min);
                    if next - theta_min < 1e-9 {
                        break;
                    }
                    hi = next;
                }
            }
        }
        match first {
            Some(r) => r,
            None => return Err(last_err.expect("probe attempted at least once")),
        }
    };
    let mut guard = 0;
    while cr_hi < 0.0 {
        if hi >= theta_cap - 1e-12 || guard > 40 {
            return Err(Error::NoBlockedState(
                "the inflated pouches keep the actuator longer than flat for every \
                 admissible skin fold angle"
                    .into(),
            ));
        }
        let next = (hi * 1.6).min(theta_cap);
        match probe(next, &mut warm) {
            Ok(r) => {
                hi = next;
                cr_hi = r.0;
                out_hi = r.1;
            }
            Err(outer) => {
                // The admissible range ends between hi and next: bisect the
                // edge and keep the largest solvable angle.
                let mut lo_edge = hi;
                let mut hi_edge = next;
                for _ in 0..80 {
                    if hi_edge - lo_edge < 1e-10 {
                        break;
                    }
                    let mid = 0.5 * (lo_edge + hi_edge);
                    match probe(mid, &mut warm) {
                        Ok(r) => {
                            lo_edge = mid;
                            hi = mid;
                            cr_hi = r.0;
                            out_hi = r.1;
                        }
                        Err(_) => hi_edge = mid,
                    }
                }
                if cr_hi < 0.0 {
                    return Err(Error::NoBlockedState(format!(
                        "the admissible fold range ends (near theta2 = {lo_edge:.4}) before \
                         the actuator returns to its flat length; last failure: {outer}"
                    )));
                }
            }
        }
        guard += 1;
    }
    if cr_hi.abs() < 1e-9 {
        return Ok((out_hi, hi));
    }

    // Lower bracket: walk geometrically toward θ2_min, where the skin length
    // diverges and CR → −∞.
    let mut lo = theta_min + 0.5 * (hi - theta_min);
    let mut cr_lo;
    let mut guard = 0;
    loop {
        let r = probe(lo, &mut warm)?;
        cr_lo = r.0;
        if cr_lo.abs() < 1e-9 {
            return Ok((r.1, lo));
        }
        if cr_lo < 0.0 {
            break;
        }
        hi = lo;
        lo = theta_min + 0.5 * (lo - theta_min);
        guard += 1;
        if guard > 70 || (hi - lo) < 1e-13 {
            return Err(Error::NoConvergence {
                residual: cr_lo,
                iters: guard,
                context: "could not bracket the blocked state from below".into(),
            });
        }
    }

    // Bisect on CR.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (cr_mid, out_mid) = probe(mid, &mut warm)?;
        if cr_mid.abs() < 1e-9 || (hi - lo) < 1e-14 {
            return Ok((out_mid, mid));
        }
        if cr_mid.signum() == cr_lo.signum() {
            lo = mid;
            cr_lo = cr_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        residual: cr_lo,
        iters: 200,
        context: "blocked-state bisection exceeded its iteration cap".into(),
    })
}

/// Trace the vacuum-branch force–contraction curve from the blocked state.
///
/// `kr_at` maps the instantaneous pouch gauge to the fold-resistance
/// coefficient; `gas` switches on the sealed-skeleton augmentation;
/// `min_volume` is the lumen floor below which a sealed trace truncates.
pub(crate) fn trace(
    ctx: &Ctx,
    settings: &SolverSettings,
    drive: Drive<'_>,
    kr_at: &dyn Fn(f64) -> f64,
    min_volume: f64,
) -> Result<(Vec<CurvePoint>, bool, Option<String>)> {
    let (blocked_out, theta2_star) = blocked(ctx, settings, drive)?;
    if let Drive::Sealed { .. } = drive {
        let v = system::gas_volume(ctx, &blocked_out.g);
        if v < min_volume {
            return Err(Error::VolumeCollapse { volume: v, floor: min_volume });
        }
    }

    let mut points = vec![CurvePoint {
        contraction_ratio_cr: 0.0,
        output_force_f: raw_force(ctx, &blocked_out.state),
        resistance_fr: 0.0,
        actuator_length_ssum: ctx.ssum0,
        state: blocked_out.state.clone(),
        skeleton_gauge_dp1: blocked_out.dp1,
    }];

    let mut prev = blocked_out;
    let mut theta2 = theta2_star;
    let mut truncated = false;
    let mut reason: Option<String> = None;
    let theta2_cap = std::f64::consts::PI - 0.01;

    for _ in 0..200_000 {
        theta2 += settings.theta2_step;
        if theta2 >= theta2_cap {
            truncated = true;
            reason = Some(
                "skin fold angle range exhausted before the force crossed zero".into(),
            );
            break;
        }
        let drive_here = match drive {
            Drive::Constant(_) => drive,
            Drive::Sealed { gas, .. } => Drive::Sealed { gas, seed_dp1: prev.dp1 },
        };
        let out = match solve_escalating(
            ctx,
            settings,
            theta2,
            drive_here,
            Some(&prev),
            flags_for(prev.g.variant),
        ) {
            Ok(o) => o,
            Err(Error::InvalidVariant { reason: why, .. }) => {
                truncated = true;
                reason = Some(format!(
                    "no admissible cross-section beyond this contraction ({why})"
                ));
                break;
            }
            Err(e) => {
                truncated = true;
                reason = Some(format!("equilibrium solve failed: {e}"));
                break;
            }
        };
        if let Drive::Sealed { .. } = drive {
            let v = system::gas_volume(ctx, &out.g);
            if v < min_volume {
                truncated = true;
                reason = Some(format!(
                    "skeleton volume {v:.3e} m³ fell below the {min_volume:.0e} m³ floor"
                ));
                break;
            }
        }

        let ssum = total_length(ctx, &out.state);
        let cr = (ctx.ssum0 - ssum) / ctx.ssum0;
        let fr = kr_at(out.dp1) * (ctx.ssum0 - ssum).max(0.0);
        let f = raw_force(ctx, &out.state) - fr;
        points.push(CurvePoint {
            contraction_ratio_cr: cr,
            output_force_f: f,
            resistance_fr: fr,
            actuator_length_ssum: ssum,
            state: out.state.clone(),
            skeleton_gauge_dp1: out.dp1,
        });
        if f <= 0.0 {
            super::interpolate_terminal(ctx, settings, &mut points, kr_at);
            return Ok((points, false, None));
        }
        prev = out;
    }
    Ok((points, truncated, reason))
}
