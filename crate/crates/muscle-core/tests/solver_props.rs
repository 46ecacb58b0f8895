//! Invariant tests for the cross-section statics solver, the curve tracer,
//! and the sealed-skeleton drive: solved states re-satisfy their governing
//! equations, curves are monotone and contact-regime switches are smooth,
//! trapped gas is conserved, and force/contraction endpoints order correctly
//! across the working pressure grid.

use muscle_core::{
    blocked_force, force_decomposition, residuals_at, seal_chamber, skeleton_volume, trace_curve,
    ActuatorSpec, Curve, Error, ModelVariant, PressureCondition, ResistanceModel, SolverSettings,
    STANDARD_ATMOSPHERE,
};

/// Fold-resistance calibration used across the working pressure range.
fn kr_model() -> ResistanceModel {
    ResistanceModel::new(vec![(30e3, 140.7), (60e3, 194.8), (90e3, 248.9)]).unwrap()
}

const DP1_GRID: [f64; 3] = [30e3, 60e3, 90e3];
const DP2_GRID: [f64; 3] = [-10e3, -40e3, -60e3];

/// Order of first appearance of each contact regime along a curve.
fn regime_order(curve: &Curve) -> Vec<ModelVariant> {
    let mut order: Vec<ModelVariant> = Vec::new();
    for p in &curve.points {
        if order.last() != Some(&p.state.model_variant) {
            order.push(p.state.model_variant);
        }
    }
    order
}

/// Shared curve postconditions: starts at zero contraction, contraction
/// strictly increases, force never rises, tensions stay non-negative, and a
/// finished (untruncated) curve ends exactly at zero force.
fn assert_curve_invariants(curve: &Curve, tag: &str) {
    assert!(!curve.points.is_empty(), "{tag}: empty curve");
    assert_eq!(
        curve.points[0].contraction_ratio_cr, 0.0,
        "{tag}: curve must start at zero contraction"
    );
    let mut prev_cr = -f64::INFINITY;
    let mut prev_f = f64::INFINITY;
    for (i, p) in curve.points.iter().enumerate() {
        assert!(
            p.contraction_ratio_cr > prev_cr,
            "{tag}: contraction not strictly increasing at point {i}"
        );
        assert!(
            p.output_force_f <= prev_f + 1e-6,
            "{tag}: force rose at point {i}: {} -> {}",
            prev_f,
            p.output_force_f
        );
        assert!(
            p.state.t1 >= -1e-9 && p.state.t2 >= -1e-9 && p.state.t3 >= -1e-9,
            "{tag}: negative tension at point {i}"
        );
        assert!(p.resistance_fr >= -1e-12, "{tag}: negative fold resistance");
        prev_cr = p.contraction_ratio_cr;
        prev_f = p.output_force_f;
    }
    let last = curve.points.last().unwrap();
    assert!(
        (last.contraction_ratio_cr - curve.terminal_cr_max).abs() < 1e-12,
        "{tag}: terminal contraction must be the last point's"
    );
    if !curve.truncated {
        assert_eq!(last.output_force_f, 0.0, "{tag}: finished curve must end at zero force");
    } else {
        assert!(
            curve.truncation_reason.is_some(),
            "{tag}: truncation must carry a reason"
        );
    }
}

/// At every contact-regime switch the force gap must stay comparable to the
/// local step-to-step gaps: no jump larger than three times the median
/// inter-step |ΔF| of the ten surrounding steps.
fn assert_switch_continuity(curve: &Curve, tag: &str) {
    let pts = &curve.points;
    for i in 1..pts.len() {
        if pts[i].state.model_variant == pts[i - 1].state.model_variant {
            continue;
        }
        let switch_gap = (pts[i].output_force_f - pts[i - 1].output_force_f).abs();
        let lo = i.saturating_sub(6).max(1);
        let hi = (i + 6).min(pts.len() - 1);
        let mut gaps: Vec<f64> = (lo..=hi)
            .filter(|j| *j != i)
            .map(|j| (pts[j].output_force_f - pts[j - 1].output_force_f).abs())
            .collect();
        assert!(gaps.len() >= 4, "{tag}: switch at point {i} lacks surrounding steps");
        gaps.sort_by(f64::total_cmp);
        let median = gaps[gaps.len() / 2];
        assert!(
            switch_gap <= (3.0 * median).max(1e-6),
            "{tag}: regime switch at point {i} ({:?} -> {:?}) jumps {switch_gap:.3e} N \
             against a local median step of {median:.3e} N",
            pts[i - 1].state.model_variant,
            pts[i].state.model_variant,
        );
    }
}

#[test]
fn solved_states_satisfy_the_governing_equations() {
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = kr_model();
    for dp1 in DP1_GRID {
        for dp2 in DP2_GRID {
            let cond = PressureCondition::constant(dp1, dp2);
            let curve = trace_curve(&spec, &cond, &rm, &settings).expect("trace");
            for (i, p) in curve.points.iter().enumerate().step_by(7) {
                let res = residuals_at(&spec, &cond, &p.state).expect("residuals");
                let worst = res.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
                assert!(
                    worst < 1e-7,
                    "state {i} of {dp1}/{dp2} re-evaluates to residual {worst:.2e}"
                );
                // Span closure: both pouch sheets cover the same width.
                let s = &p.state;
                assert!(
                    (s.s1 - s.s3).abs() < 1e-9 * spec.pouch_length_l10,
                    "span closure broken at point {i}: s1={} s3={}",
                    s.s1,
                    s.s3
                );
            }
        }
    }
}

#[test]
fn force_cuts_agree_in_the_free_regime() {
    // Cutting the actuator through the skin or through the skeleton accounts
    // the same output force while the section is free (A). Once the skin
    // wraps the crest (B) the shared patch transfers load between the two
    // membranes, so only the skin cut keeps reproducing the curve force.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = ResistanceModel::zero();
    let cond = PressureCondition::constant(90e3, -60e3);
    let curve = trace_curve(&spec, &cond, &rm, &settings).expect("trace");
    let (mut checked_a, mut checked_b) = (0, 0);
    for p in curve.points.iter().step_by(11) {
        let d = match force_decomposition(&spec, &cond, &p.state, &rm) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let skin = d.output_force_skin_cut();
        let scale = skin.abs().max(1.0);
        assert!(
            (skin - p.output_force_f).abs() / scale < 1e-9,
            "skin cut must reproduce the curve force at CR {:.3}",
            p.contraction_ratio_cr
        );
        match p.state.model_variant {
            ModelVariant::A => {
                let skeleton = d.output_force_skeleton_cut();
                assert!(
                    (skin - skeleton).abs() / scale < 1e-6,
                    "force cuts disagree at CR {:.3}: skin {skin:.6} vs skeleton {skeleton:.6}",
                    p.contraction_ratio_cr
                );
                checked_a += 1;
            }
            _ => checked_b += 1,
        }
    }
    assert!(
        checked_a >= 3 && checked_b >= 3,
        "too few states checked (A: {checked_a}, B: {checked_b})"
    );
}

#[test]
fn curve_invariants_hold_across_the_pressure_grid() {
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = kr_model();
    for dp1 in DP1_GRID {
        for dp2 in DP2_GRID {
            let cond = PressureCondition::constant(dp1, dp2);
            let curve = trace_curve(&spec, &cond, &rm, &settings).expect("trace");
            let tag = format!("{}k/{}k", dp1 / 1e3, dp2 / 1e3);
            assert_curve_invariants(&curve, &tag);
            assert_switch_continuity(&curve, &tag);
            assert!(!curve.truncated, "{tag}: expected a finished curve");
        }
    }
}

#[test]
fn zero_resistance_trace_exhausts_the_regime_family() {
    // Without fold resistance the force never reaches zero at high drive:
    // the free skin arc runs out first and the trace must stop there,
    // truncated with a reason, rather than continue into invalid sections.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let curve = trace_curve(
        &spec,
        &PressureCondition::constant(90e3, -60e3),
        &ResistanceModel::zero(),
        &settings,
    )
    .expect("trace");
    assert_curve_invariants(&curve, "90k/-60k zero-kr");
    assert_switch_continuity(&curve, "90k/-60k zero-kr");
    assert!(curve.truncated, "zero-resistance trace should exhaust the regime family");
    assert!(
        curve.terminal_cr_max > 0.50 && curve.terminal_cr_max < 0.68,
        "exhaustion contraction {}",
        curve.terminal_cr_max
    );
    assert_eq!(regime_order(&curve), vec![ModelVariant::A, ModelVariant::B]);
    let reason = curve.truncation_reason.as_deref().unwrap_or_default();
    assert!(
        reason.contains("no admissible cross-section"),
        "unexpected truncation reason: {reason}"
    );
    for p in &curve.points {
        if p.state.r2.is_finite() {
            assert!(p.state.r2 > 0.0, "skin radius must stay positive");
        }
    }
}

#[test]
fn fold_resistance_brings_curves_to_zero() {
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let curve = trace_curve(
        &spec,
        &PressureCondition::constant(90e3, -60e3),
        &kr_model(),
        &settings,
    )
    .expect("trace");
    assert!(!curve.truncated);
    assert!(
        curve.terminal_cr_max > 0.38 && curve.terminal_cr_max < 0.48,
        "terminal contraction with fold resistance: {}",
        curve.terminal_cr_max
    );
    assert_eq!(curve.points.last().unwrap().output_force_f, 0.0);
}

#[test]
fn low_pressure_contact_regimes_release_in_order() {
    // At low drive pressure the blocked section starts flattened against the
    // midplane (C), picks up the skin wrap while still flattened (D), and
    // finally releases the midplane contact (B) when the flattened run is
    // used up, continuing until the skin arc itself runs out. Without fold
    // resistance the force never crosses zero on this curve: it falls while
    // the contact holds, then levels off and creeps back up in the released
    // tail, where the reopened void hands the vacuum a growing area to act
    // on just as the skin tension dies away.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let curve = trace_curve(
        &spec,
        &PressureCondition::constant(30e3, -60e3),
        &ResistanceModel::zero(),
        &settings,
    )
    .expect("trace");
    assert_switch_continuity(&curve, "30k/-60k zero-kr");
    assert_eq!(
        regime_order(&curve),
        vec![ModelVariant::C, ModelVariant::D, ModelVariant::B],
        "contact regimes along the low-pressure curve"
    );
    assert!(curve.truncated, "the zero-resistance curve must end at arc exhaustion");
    assert!(curve.truncation_reason.is_some());

    // Monotone force while the midplane contact holds.
    let release = curve
        .points
        .iter()
        .position(|p| p.state.model_variant == ModelVariant::B)
        .unwrap();
    let mut prev_f = f64::INFINITY;
    for p in &curve.points[..release] {
        assert!(p.output_force_f <= prev_f + 1e-6, "force rose under midplane contact");
        prev_f = p.output_force_f;
    }
    // The released tail stays positive and bounded by its entry value plus
    // the small vacuum-push recovery; contraction still increases throughout.
    let f_entry = curve.points[release].output_force_f;
    let mut prev_cr = -f64::INFINITY;
    for p in &curve.points {
        assert!(p.contraction_ratio_cr > prev_cr, "contraction must increase");
        prev_cr = p.contraction_ratio_cr;
    }
    for p in &curve.points[release..] {
        assert!(p.output_force_f > 0.0, "tail force must stay positive");
        assert!(
            p.output_force_f < f_entry + 0.5,
            "tail force {} exceeds release-entry {f_entry} by more than the \
             vacuum-push recovery",
            p.output_force_f
        );
        assert!(p.state.section_height_h >= -1e-12, "released void must not re-close");
    }
    // At exhaustion the skin arc is used up: its tension has died away.
    let last = curve.points.last().unwrap();
    assert!(
        last.state.t2 < 0.2,
        "skin tension should vanish at arc exhaustion, got {}",
        last.state.t2
    );
}

#[test]
fn slack_skin_curve_reaches_exact_zero() {
    // With no vacuum the skin is slack: straight, tensionless, and the trace
    // follows the free pouch fold all the way to the zero-force endpoint.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let curve = trace_curve(
        &spec,
        &PressureCondition::constant(90e3, 0.0),
        &ResistanceModel::zero(),
        &settings,
    )
    .expect("trace");
    assert_curve_invariants(&curve, "90k/0");
    assert!(!curve.truncated);
    assert_eq!(curve.points.last().unwrap().output_force_f, 0.0);
    for p in &curve.points {
        assert!(p.state.r2.is_infinite(), "slack skin must stay straight");
        assert_eq!(p.state.theta2, 0.0);
        assert_eq!(p.state.t2.max(0.0), p.state.t2, "slack skin cannot pull");
    }
    let (blocked, _) = blocked_force(
        &spec,
        &PressureCondition::constant(90e3, 0.0),
        &ResistanceModel::zero(),
        &settings,
    )
    .unwrap();
    assert!(
        (blocked - 284.87).abs() < 0.5,
        "no-vacuum blocked force drifted: {blocked:.3} N"
    );
}

#[test]
fn sealed_gas_is_conserved_along_closed_curves() {
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = kr_model();
    for (dp1, dp2) in [(90e3, -40e3), (60e3, -60e3), (90e3, 0.0)] {
        let gas = seal_chamber(&spec, dp1, &settings).expect("seal");
        let cond = PressureCondition::closed(dp1, dp2);
        let curve = trace_curve(&spec, &cond, &rm, &settings).expect("closed trace");
        let n = curve.points.len();
        for (i, p) in curve.points.iter().enumerate() {
            // The final point of a finished curve is the interpolated
            // zero-force crossing; its gauge is interpolated, not solved.
            if !curve.truncated && i + 1 == n {
                continue;
            }
            let v = skeleton_volume(&spec, &p.state);
            let pv = (STANDARD_ATMOSPHERE + p.skeleton_gauge_dp1) * v;
            let rel = (pv - gas.trapped_moles_proxy).abs() / gas.trapped_moles_proxy;
            assert!(
                rel < 1e-8,
                "gas law violated at point {i} of {dp1}/{dp2}: rel err {rel:.2e}"
            );
        }
    }
}

#[test]
fn sealing_matches_constant_supply_in_the_no_vacuum_limit() {
    // As the skin vacuum vanishes the sealed skeleton never leaves its charge
    // state, so the two drive regimes give the same curve start: at zero
    // vacuum the sealed gauge equals the charge (0.1 %) and the zero-
    // contraction forces coincide (1 %).
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = ResistanceModel::zero();
    let closed = trace_curve(&spec, &PressureCondition::closed(90e3, 0.0), &rm, &settings)
        .expect("closed trace");
    let constant = trace_curve(&spec, &PressureCondition::constant(90e3, 0.0), &rm, &settings)
        .expect("constant trace");
    let gauge0 = closed.points[0].skeleton_gauge_dp1;
    assert!(
        (gauge0 - 90e3).abs() < 0.001 * 90e3,
        "sealed gauge at zero contraction {gauge0} != charge"
    );
    let f_closed = closed.points[0].output_force_f;
    let f_const = constant.points[0].output_force_f;
    assert!(
        (f_const - f_closed).abs() < 0.01 * f_const.abs(),
        "zero-contraction force under seal ({f_closed:.2}) and supply ({f_const:.2}) must agree"
    );
}

#[test]
fn closed_drive_dominates_constant_supply() {
    // Squeezing the sealed skeleton raises its gauge, so a sealed actuator is
    // at least as strong as one fed at the same charge pressure.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = kr_model();
    let cond_const = PressureCondition::constant(90e3, -60e3);
    let cond_closed = PressureCondition::closed(90e3, -60e3);
    let (f_const, _) = blocked_force(&spec, &cond_const, &rm, &settings).unwrap();
    let (f_closed, _) = blocked_force(&spec, &cond_closed, &rm, &settings).unwrap();
    assert!(
        f_closed >= f_const - 1e-6,
        "sealed blocked force {f_closed:.2} fell below constant supply {f_const:.2}"
    );
    let c_const = trace_curve(&spec, &cond_const, &rm, &settings).unwrap();
    let c_closed = trace_curve(&spec, &cond_closed, &rm, &settings).unwrap();
    assert!(
        c_closed.terminal_cr_max >= c_const.terminal_cr_max - 1e-9,
        "sealed terminal contraction {} below constant-supply {}",
        c_closed.terminal_cr_max,
        c_const.terminal_cr_max
    );
}

#[test]
fn collapsing_gas_volume_is_reported() {
    // A centimeter-scale model shrunk 100x traps sub-microliter volumes; the
    // gas law has no meaningful solution there and the seal must say so.
    let tiny = ActuatorSpec {
        pouch_length_l10: 0.2e-3,
        gap_length_l20: 0.1e-3,
        width_w: 0.8e-3,
        ..ActuatorSpec::reference()
    };
    let err = seal_chamber(&tiny, 60e3, &SolverSettings::default()).unwrap_err();
    assert!(
        matches!(err, Error::VolumeCollapse { .. }),
        "expected a volume-collapse report, got {err}"
    );
}

#[test]
fn pressure_grid_battery_orderings() {
    // Every endpoint-ordering property over the working grid, both drive
    // regimes, in one sweep: forces fall with vacuum and rise with drive
    // pressure under constant supply; sealed-skeleton blocked force and gauge
    // rise with vacuum; terminal contraction rises with vacuum.
    let spec = ActuatorSpec::reference();
    let settings = SolverSettings::default();
    let rm = kr_model();
    let t0 = std::time::Instant::now();

    let mut blocked_by_dp1: Vec<Vec<f64>> = Vec::new(); // [dp1][dp2]
    let mut terminal_by_dp1: Vec<Vec<f64>> = Vec::new();
    for dp1 in DP1_GRID {
        let mut blocked_row = Vec::new();
        let mut term_row = Vec::new();
        for dp2 in DP2_GRID {
            let cond = PressureCondition::constant(dp1, dp2);
            let curve = trace_curve(&spec, &cond, &rm, &settings).expect("trace");
            assert!(!curve.truncated, "curve should cross zero at {dp1}/{dp2}");
            blocked_row.push(curve.points[0].output_force_f);
            term_row.push(curve.terminal_cr_max);
        }
        blocked_by_dp1.push(blocked_row);
        terminal_by_dp1.push(term_row);
    }

    // Blocked force strictly increasing in drive pressure at fixed vacuum.
    for j in 0..3 {
        assert!(blocked_by_dp1[0][j] < blocked_by_dp1[1][j]);
        assert!(blocked_by_dp1[1][j] < blocked_by_dp1[2][j]);
    }
    // Constant supply: blocked force non-increasing in vacuum strength,
    // terminal contraction strictly increasing, and the curve-crossing
    // endpoint inequalities between the weakest and strongest vacuum.
    for i in 0..3 {
        assert!(blocked_by_dp1[i][1] <= blocked_by_dp1[i][0] + 1e-6);
        assert!(blocked_by_dp1[i][2] <= blocked_by_dp1[i][1] + 1e-6);
        assert!(
            terminal_by_dp1[i][0] < terminal_by_dp1[i][1]
                && terminal_by_dp1[i][1] < terminal_by_dp1[i][2],
            "terminal contraction not increasing with vacuum at row {i}: {:?}",
            terminal_by_dp1[i]
        );
        assert!(blocked_by_dp1[i][2] < blocked_by_dp1[i][0]);
        assert!(terminal_by_dp1[i][2] > terminal_by_dp1[i][0]);
    }

    // Sealed skeleton: blocked force and instantaneous gauge non-decreasing
    // in vacuum strength.
    for dp1 in DP1_GRID {
        let mut prev_f = -f64::INFINITY;
        let mut prev_gauge = -f64::INFINITY;
        for dp2 in DP2_GRID {
            let cond = PressureCondition::closed(dp1, dp2);
            let (f, _) = blocked_force(&spec, &cond, &rm, &settings).expect("closed blocked");
            let curve = trace_curve(&spec, &cond, &rm, &settings).expect("closed trace");
            let gauge = curve.points[0].skeleton_gauge_dp1;
            assert!(f >= prev_f - 1e-6, "sealed blocked force fell with vacuum at {dp1}");
            assert!(gauge >= prev_gauge - 1e-3, "sealed gauge fell with vacuum at {dp1}");
            prev_f = f;
            prev_gauge = gauge;
        }
    }

    let elapsed = t0.elapsed();
    println!("pressure-grid battery completed in {elapsed:?}");
    assert!(elapsed.as_secs() < 60, "battery took {elapsed:?}");
}
