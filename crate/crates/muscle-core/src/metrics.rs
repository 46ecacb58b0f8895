//! Engineering performance metrics computed from measured (or simulated)
//! time series.
//!
//! The conventions, fixed here once for every metric:
//!
//! * displacement and lift are measured from the trace start:
//!   `x_peak = max(x) − x[0]`, `h_lift = max(h) − h[0]`;
//! * peak rates use adjacent-sample differences, optionally after a centered
//!   5-sample moving average (off by default);
//! * the reference length for strain is the designed flat length
//!   `Ssum0 = n·L10 + (n−1)·L20`;
//! * pneumatic input energy is the trapezoidal integral of `q·ΔP` with both
//!   channels linearly resampled onto the union of their time grids;
//! * mechanical output for work/power/efficiency is lifting a mass:
//!   `E_out = m_load·g·(h − h[0])`.
//!
//! Metrics whose inputs are missing are reported as absent, never as errors.

use serde::{Deserialize, Serialize};

use crate::types::{ActuatorSpec, Error, Result};

// ============================================================================
// Time series
// ============================================================================

/// A sampled experiment record. `time_s` is mandatory and strictly
/// increasing; each optional channel, when present, has one value per time
/// sample. All values are SI.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Sample times [s].
    pub time_s: Vec<f64>,
    /// Actuator end displacement (contraction direction positive) [m].
    pub displacement_x: Option<Vec<f64>>,
    /// Height of the lifted load [m].
    pub load_height_h: Option<Vec<f64>>,
    /// Supply volumetric flow [m³/s].
    pub flow_q: Option<Vec<f64>>,
    /// Supply gauge pressure [Pa].
    pub supply_gauge_dp: Option<Vec<f64>>,
    /// Measured output force [N].
    pub force_f: Option<Vec<f64>>,
}

impl TimeSeries {
    /// Check shape invariants: non-empty time, matching channel lengths,
    /// strictly increasing time samples.
    pub fn validate(&self) -> Result<()> {
        if self.time_s.is_empty() {
            return Err(Error::EmptyTrace("no time samples".into()));
        }
        let n = self.time_s.len();
        for (name, ch) in [
            ("x", &self.displacement_x),
            ("h", &self.load_height_h),
            ("q", &self.flow_q),
            ("dP", &self.supply_gauge_dp),
            ("F", &self.force_f),
        ] {
            if let Some(v) = ch {
                if v.len() != n {
                    return Err(Error::EmptyTrace(format!(
                        "channel {name} has {} samples, time has {n}",
                        v.len()
                    )));
                }
            }
        }
        for (i, w) in self.time_s.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NonMonotonicTime(i + 1));
            }
        }
        Ok(())
    }
}

/// Centered 5-sample moving average; the window is clipped at the ends.
fn moving_average_5(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

// ============================================================================
// Report
// ============================================================================

/// Auxiliary measurement context that is not part of the actuator geometry.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeasurementContext {
    /// Lifted load mass [kg] (work, power, efficiency).
    pub load_mass: Option<f64>,
    /// Load-bearing cross-section area [m²] (actuation stress).
    pub cross_section_area: Option<f64>,
    /// Characteristic supply gauge pressure [Pa] (pressure-specific ratios).
    pub supply_gauge_dp: Option<f64>,
    /// Apply the centered 5-sample moving average to every channel before
    /// evaluating metrics (tames differentiated sensor noise).
    pub smooth: bool,
}

/// Performance metrics; every field is absent when its inputs are missing.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Peak contraction strain `x_peak / Ssum0` (fraction).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strain: Option<f64>,
    /// Peak strain rate `|δx| / (Ssum0·δt)` [1/s].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_strain_rate: Option<f64>,
    /// Peak force over the load-bearing area [Pa].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub actuation_stress: Option<f64>,
    /// Peak force per actuator mass [N/kg].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_to_weight: Option<f64>,
    /// Peak force per actuator mass and drive pressure [N/(kg·Pa)].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specific_force: Option<f64>,
    /// Peak force per flat envelope volume [N/m³].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_to_volume: Option<f64>,
    /// Peak force per flat volume and drive pressure [N/(m³·Pa)].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specific_force_to_volume: Option<f64>,
    /// Peak lifting power `m_load·g·δh/δt` [W].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_power: Option<f64>,
    /// Peak lifting power per actuator mass [W/kg].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_to_weight: Option<f64>,
    /// Peak lifting power per flat volume [W/m³].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_to_volume: Option<f64>,
    /// Lifting work per actuator mass `m_load·g·h_lift / m` [J/kg].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub specific_work: Option<f64>,
    /// Lifting work per flat volume [J/m³].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub work_density: Option<f64>,
    /// Total pneumatic-to-mechanical efficiency (fraction).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    /// Efficiency versus normalized stroke, `(stroke fraction, efficiency)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_vs_stroke: Option<Vec<(f64, f64)>>,
}

// ============================================================================
// Efficiency
// ============================================================================

/// Result of the pneumatic-to-mechanical efficiency evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EfficiencyResult {
    /// `E_out(end) / E_in(end)` (fraction).
    pub eta_total: f64,
    /// `(normalized stroke, E_out(t)/E_in(t))` at every union-grid sample
    /// with positive accumulated input energy; empty when the net stroke
    /// vanishes.
    pub eta_vs_stroke: Vec<(f64, f64)>,
}

/// Linear interpolation of `(ts, ys)` at `t`; `t` must lie within the grid.
fn lerp_at(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    match ts.binary_search_by(|probe| probe.total_cmp(&t)) {
        Ok(i) => ys[i],
        Err(i) => {
            // t strictly between ts[i-1] and ts[i] (callers clamp the range).
            let (t0, t1) = (ts[i - 1], ts[i]);
            let w = (t - t0) / (t1 - t0);
            ys[i - 1] + w * (ys[i] - ys[i - 1])
        }
    }
}

/// Pneumatic-to-mechanical efficiency of a lifting run.
///
/// `flow` must carry the `q` and `dP` channels, `height` the `h` channel;
/// the two records may be sampled on different grids. Input energy is the
/// trapezoidal integral of `q·ΔP` over the union grid of the overlapping
/// time window; output energy is `m_load·g·(h − h_start)`.
pub fn energy_efficiency(
    flow: &TimeSeries,
    load_mass: f64,
    height: &TimeSeries,
    g: f64,
) -> Result<EfficiencyResult> {
    flow.validate()?;
    height.validate()?;
    let q = flow
        .flow_q
        .as_ref()
        .ok_or_else(|| Error::EmptyTrace("flow record lacks the q channel".into()))?;
    let dp = flow
        .supply_gauge_dp
        .as_ref()
        .ok_or_else(|| Error::EmptyTrace("flow record lacks the dP channel".into()))?;
    let h = height
        .load_height_h
        .as_ref()
        .ok_or_else(|| Error::EmptyTrace("height record lacks the h channel".into()))?;
    if !(load_mass > 0.0) {
        return Err(Error::InvalidSpec(format!("load_mass must be positive, got {load_mass}")));
    }

    // Union grid over the overlapping window.
    let t_lo = flow.time_s[0].max(height.time_s[0]);
    let t_hi = flow.time_s[flow.time_s.len() - 1].min(height.time_s[height.time_s.len() - 1]);
    if t_hi <= t_lo {
        return Err(Error::EmptyTrace("flow and height records do not overlap in time".into()));
    }
    let mut grid: Vec<f64> = flow
        .time_s
        .iter()
        .chain(height.time_s.iter())
        .copied()
        .filter(|t| *t >= t_lo && *t <= t_hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 {
        return Err(Error::EmptyTrace("fewer than two overlapping time samples".into()));
    }

    let power: Vec<f64> = grid
        .iter()
        .map(|&t| lerp_at(&flow.time_s, q, t) * lerp_at(&flow.time_s, dp, t))
        .collect();
    let h_grid: Vec<f64> = grid.iter().map(|&t| lerp_at(&height.time_s, h, t)).collect();

    // Cumulative trapezoid of the input power.
    let mut e_in = vec![0.0_f64; grid.len()];
    for i in 1..grid.len() {
        e_in[i] = e_in[i - 1] + 0.5 * (power[i] + power[i - 1]) * (grid[i] - grid[i - 1]);
    }
    let e_in_total = e_in[grid.len() - 1];
    if e_in_total <= 0.0 {
        return Err(Error::ZeroInputEnergy);
    }

    let h0 = h_grid[0];
    let stroke_total = h_grid[grid.len() - 1] - h0;
    let e_out_total = load_mass * g * stroke_total;
    let eta_total = e_out_total / e_in_total;

    let mut eta_vs_stroke = Vec::new();
    if stroke_total.abs() > 1e-300 {
        for i in 0..grid.len() {
            if e_in[i] > 0.0 {
                let stroke_frac = (h_grid[i] - h0) / stroke_total;
                let eta = load_mass * g * (h_grid[i] - h0) / e_in[i];
                eta_vs_stroke.push((stroke_frac, eta));
            }
        }
    }
    Ok(EfficiencyResult { eta_total, eta_vs_stroke })
}

// ============================================================================
// Metric evaluation
// ============================================================================

/// Evaluate every metric whose inputs are available.
///
/// `g` is the gravitational acceleration (pass
/// [`crate::types::STANDARD_GRAVITY`] unless testing).
pub fn compute_metrics(
    spec: &ActuatorSpec,
    ctx: &MeasurementContext,
    trace: &TimeSeries,
    g: f64,
) -> Result<MetricsReport> {
    spec.validate()?;
    trace.validate()?;

    let smooth = |v: &Option<Vec<f64>>| -> Option<Vec<f64>> {
        v.as_ref().map(|v| if ctx.smooth { moving_average_5(v) } else { v.clone() })
    };
    let t = &trace.time_s;
    let x = smooth(&trace.displacement_x);
    let h = smooth(&trace.load_height_h);
    let f = smooth(&trace.force_f);

    let mut report = MetricsReport::default();
    let l_init = spec.flat_length();

    if let Some(x) = &x {
        let x0 = x[0];
        let x_peak = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - x0;
        report.strain = Some(x_peak / l_init);
        if x.len() >= 2 {
            let peak = x
                .windows(2)
                .zip(t.windows(2))
                .map(|(xs, ts)| (xs[1] - xs[0]).abs() / (l_init * (ts[1] - ts[0])))
                .fold(f64::NEG_INFINITY, f64::max);
            report.peak_strain_rate = Some(peak);
        }
    }

    if let Some(f) = &f {
        let f_peak = f.iter().map(|v| v.abs()).fold(f64::NEG_INFINITY, f64::max);
        report.actuation_stress = ctx.cross_section_area.map(|a| f_peak / a);
        report.force_to_weight = spec.actuator_mass.map(|m| f_peak / m);
        report.specific_force = match (spec.actuator_mass, ctx.supply_gauge_dp) {
            (Some(m), Some(dp)) => Some(f_peak / (m * dp)),
            _ => None,
        };
        report.force_to_volume = spec.flat_volume_vflat.map(|v| f_peak / v);
        report.specific_force_to_volume = match (spec.flat_volume_vflat, ctx.supply_gauge_dp) {
            (Some(v), Some(dp)) => Some(f_peak / (v * dp)),
            _ => None,
        };
    }

    if let (Some(h), Some(m_load)) = (&h, ctx.load_mass) {
        let h0 = h[0];
        let h_lift = h.iter().copied().fold(f64::NEG_INFINITY, f64::max) - h0;
        let work = m_load * g * h_lift;
        report.specific_work = spec.actuator_mass.map(|m| work / m);
        report.work_density = spec.flat_volume_vflat.map(|v| work / v);
        if h.len() >= 2 {
            let peak = h
                .windows(2)
                .zip(t.windows(2))
                .map(|(hs, ts)| m_load * g * (hs[1] - hs[0]) / (ts[1] - ts[0]))
                .fold(f64::NEG_INFINITY, f64::max);
            report.peak_power = Some(peak);
            report.power_to_weight = spec.actuator_mass.map(|m| peak / m);
            report.power_to_volume = spec.flat_volume_vflat.map(|v| peak / v);
        }
    }

    // Efficiency needs flow, pressure, height and load all at once; reuse the
    // trace as both records (identical grids make the union trivial).
    if trace.flow_q.is_some() && trace.supply_gauge_dp.is_some() && trace.load_height_h.is_some()
    {
        if let Some(m_load) = ctx.load_mass {
            if let Ok(eff) = energy_efficiency(trace, m_load, trace, g) {
                report.efficiency = Some(eff.eta_total);
                report.efficiency_vs_stroke = Some(eff.eta_vs_stroke);
            }
        }
    }

    Ok(report)
}
