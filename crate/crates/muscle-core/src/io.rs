//! File-format boundary: JSON actuator specs, CSV curves, resistance
//! records, time series, and JSON resistance models.
//!
//! Files use presentation units — millimeters, kilopascals, cubic
//! millimeters — while the core is SI; conversion happens here and only
//! here. Radii are finite in files: an infinite radius (a straight wall)
//! is written as `0`, and `0` reads back as infinity.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::resistance::ResistanceModel;
use crate::state::{Curve, ModelVariant};
use crate::types::{ActuatorSpec, Error, Result};

// ============================================================================
// Actuator spec JSON (mm / kPa / mm³)
// ============================================================================

/// JSON shape of an actuator description, in presentation units. Field names
/// carry the symbol and the unit convention: lengths in mm, the modulus in
/// kPa, the flat volume in mm³, the mass in kg.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    /// Pouch column length [mm].
    #[serde(rename = "pouch_length_L10")]
    pouch_length_l10: f64,
    /// Inter-pouch gap length [mm].
    #[serde(rename = "gap_length_L20")]
    gap_length_l20: f64,
    /// Actuator width [mm].
    #[serde(rename = "width_W")]
    width_w: f64,
    /// Pouch columns in series.
    columns_n: u32,
    /// Stacked skeleton layers.
    layers_m: u32,
    /// Skeleton sheet thickness [mm].
    skeleton_thickness_t1: f64,
    /// Skin sheet thickness [mm].
    skin_thickness_t2: f64,
    /// Membrane elastic modulus [kPa].
    #[serde(rename = "elastic_modulus_E")]
    elastic_modulus_e: f64,
    /// Fabrication prestrain (fraction).
    prestrain_delta: f64,
    /// Actuator mass [kg], when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actuator_mass: Option<f64>,
    /// Flat envelope volume [mm³], when known.
    #[serde(
        rename = "flat_volume_Vflat",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    flat_volume_vflat: Option<f64>,
}

const MM: f64 = 1e-3;
const KPA: f64 = 1e3;
const MM3: f64 = 1e-9;

impl SpecFile {
    fn to_si(&self) -> ActuatorSpec {
        ActuatorSpec {
            pouch_length_l10: self.pouch_length_l10 * MM,
            gap_length_l20: self.gap_length_l20 * MM,
            width_w: self.width_w * MM,
            columns_n: self.columns_n,
            layers_m: self.layers_m,
            skeleton_thickness_t1: self.skeleton_thickness_t1 * MM,
            skin_thickness_t2: self.skin_thickness_t2 * MM,
            elastic_modulus_e: self.elastic_modulus_e * KPA,
            prestrain_delta: self.prestrain_delta,
            actuator_mass: self.actuator_mass,
            flat_volume_vflat: self.flat_volume_vflat.map(|v| v * MM3),
        }
    }

    fn from_si(spec: &ActuatorSpec) -> Self {
        SpecFile {
            pouch_length_l10: spec.pouch_length_l10 / MM,
            gap_length_l20: spec.gap_length_l20 / MM,
            width_w: spec.width_w / MM,
            columns_n: spec.columns_n,
            layers_m: spec.layers_m,
            skeleton_thickness_t1: spec.skeleton_thickness_t1 / MM,
            skin_thickness_t2: spec.skin_thickness_t2 / MM,
            elastic_modulus_e: spec.elastic_modulus_e / KPA,
            prestrain_delta: spec.prestrain_delta,
            actuator_mass: spec.actuator_mass,
            flat_volume_vflat: spec.flat_volume_vflat.map(|v| v / MM3),
        }
    }
}

/// Parse an actuator spec from JSON text (presentation units) and validate it.
pub fn spec_from_json_str(json: &str) -> Result<ActuatorSpec> {
    let file: SpecFile = serde_json::from_str(json)
        .map_err(|e| Error::InvalidSpec(format!("spec JSON: {e}")))?;
    let spec = file.to_si();
    spec.validate()?;
    Ok(spec)
}

/// Serialize an actuator spec to pretty JSON text in presentation units.
pub fn spec_to_json_str(spec: &ActuatorSpec) -> String {
    serde_json::to_string_pretty(&SpecFile::from_si(spec))
        .expect("spec serialization is infallible")
}

/// Read and validate an actuator spec JSON file.
pub fn read_spec_json(path: &Path) -> Result<ActuatorSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
    spec_from_json_str(&text)
}

/// Write an actuator spec as JSON in presentation units.
pub fn write_spec_json(path: &Path, spec: &ActuatorSpec) -> Result<()> {
    fs::write(path, spec_to_json_str(spec) + "\n")
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

// ============================================================================
// Curve CSV
// ============================================================================

/// Column header of the curve CSV format.
pub const CURVE_CSV_HEADER: &str = "theta2_rad,variant,CR,F_N,Fr_N,dP1_Pa,dP2_Pa,\
                                    R1_m,R2_m,R3_m,theta1,theta3,theta4,w1_m,w2_m,H_m";

/// A straight (infinite-radius) wall is stored as radius 0 in files.
fn radius_to_file(r: f64) -> f64 {
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

/// Inverse of [`radius_to_file`].
fn radius_from_file(r: f64) -> f64 {
    if r == 0.0 {
        f64::INFINITY
    } else {
        r
    }
}

/// Render a curve in the CSV format, one row per point, with a trailing
/// `# truncated=true …` comment when the tracer stopped early.
pub fn curve_to_csv_string(curve: &Curve) -> String {
    let mut out = String::with_capacity(128 * (curve.points.len() + 2));
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    let dp2 = curve.condition.negative_gauge_dp2;
    for p in &curve.points {
        let s = &p.state;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.theta2,
            s.model_variant.letter(),
            p.contraction_ratio_cr,
            p.output_force_f,
            p.resistance_fr,
            p.skeleton_gauge_dp1,
            dp2,
            radius_to_file(s.r1),
            radius_to_file(s.r2),
            radius_to_file(s.r3),
            s.theta1,
            s.theta3,
            s.theta4,
            s.contact_w1,
            s.contact_w2,
            s.section_height_h,
        ));
    }
    if curve.truncated {
        match &curve.truncation_reason {
            Some(r) => out.push_str(&format!("# truncated=true reason={r}\n")),
            None => out.push_str("# truncated=true\n"),
        }
    }
    out
}

/// Write a curve CSV file (see [`curve_to_csv_string`]).
pub fn write_curve_csv(path: &Path, curve: &Curve) -> Result<()> {
    fs::write(path, curve_to_csv_string(curve))
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

/// One parsed row of a curve CSV file, in the file's own units (SI
/// throughout; radii converted back to infinity where the file holds 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub theta2_rad: f64,
    pub variant: ModelVariant,
    pub cr: f64,
    pub f_n: f64,
    pub fr_n: f64,
    pub dp1_pa: f64,
    pub dp2_pa: f64,
    pub r1_m: f64,
    pub r2_m: f64,
    pub r3_m: f64,
    pub theta1: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub w1_m: f64,
    pub w2_m: f64,
    pub h_m: f64,
}

/// A curve CSV read back: rows plus the truncation footer, if present.
#[derive(Debug, Clone)]
pub struct CurveCsv {
    pub rows: Vec<CurveRow>,
    pub truncated: bool,
    pub truncation_reason: Option<String>,
}

/// Parse curve CSV text (the format written by [`curve_to_csv_string`]).
pub fn curve_from_csv_str(text: &str) -> Result<CurveCsv> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidSpec("curve CSV: empty file".into()))?;
    if header.trim() != CURVE_CSV_HEADER {
        return Err(Error::InvalidSpec(format!(
            "curve CSV: unexpected header `{header}`"
        )));
    }
    let mut rows = Vec::new();
    let mut truncated = false;
    let mut reason = None;
    for (lineno, line) in lines.enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(tail) = rest.strip_prefix("truncated=true") {
                truncated = true;
                if let Some(r) = tail.trim().strip_prefix("reason=") {
                    reason = Some(r.to_string());
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::InvalidSpec(format!(
                "curve CSV row {}: expected 16 columns, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].trim().parse::<f64>().map_err(|e| {
                Error::InvalidSpec(format!(
                    "curve CSV row {} column {}: {e}",
                    lineno + 2,
                    i + 1
                ))
            })
        };
        let variant = ModelVariant::from_letter(fields[1].trim()).ok_or_else(|| {
            Error::InvalidSpec(format!(
                "curve CSV row {} column 2: unknown variant `{}`",
                lineno + 2,
                fields[1]
            ))
        })?;
        rows.push(CurveRow {
            theta2_rad: num(0)?,
            variant,
            cr: num(2)?,
            f_n: num(3)?,
            fr_n: num(4)?,
            dp1_pa: num(5)?,
            dp2_pa: num(6)?,
            r1_m: radius_from_file(num(7)?),
            r2_m: radius_from_file(num(8)?),
            r3_m: radius_from_file(num(9)?),
            theta1: num(10)?,
            theta3: num(11)?,
            theta4: num(12)?,
            w1_m: num(13)?,
            w2_m: num(14)?,
            h_m: num(15)?,
        });
    }
    Ok(CurveCsv { rows, truncated, truncation_reason: reason })
}

/// Read a curve CSV file (see [`curve_from_csv_str`]).
pub fn read_curve_csv(path: &Path) -> Result<CurveCsv> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
    curve_from_csv_str(&text)
}

// ============================================================================
// Resistance record CSV (d_mm, F_N)
// ============================================================================

/// Parse a quasi-static compression record `d_mm,F_N` into SI
/// `(displacement [m], force [N])` pairs.
pub fn resistance_from_csv_str(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidSpec("resistance CSV: empty file".into()))?;
    if header.trim() != "d_mm,F_N" {
        return Err(Error::InvalidSpec(format!(
            "resistance CSV: expected header `d_mm,F_N`, found `{header}`"
        )));
    }
    let mut samples = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',');
        let (d, f) = (it.next(), it.next());
        let extra = it.next();
        let (Some(d), Some(f), None) = (d, f, extra) else {
            return Err(Error::InvalidSpec(format!(
                "resistance CSV row {}: expected 2 columns",
                lineno + 2
            )));
        };
        let parse = |s: &str, col: usize| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| {
                Error::InvalidSpec(format!(
                    "resistance CSV row {} column {col}: {e}",
                    lineno + 2
                ))
            })
        };
        samples.push((parse(d, 1)? * MM, parse(f, 2)?));
    }
    Ok(samples)
}

/// Read a compression record CSV file (see [`resistance_from_csv_str`]).
pub fn read_resistance_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
    resistance_from_csv_str(&text)
}

// ============================================================================
// Time-series CSV
// ============================================================================

use crate::metrics::TimeSeries;

/// Column names accepted in a time-series CSV, with their units:
/// `t_s` (mandatory), `x_mm`, `h_mm`, `q_m3s`, `dP_kPa`, `F_N`.
pub const TIMESERIES_COLUMNS: [&str; 6] = ["t_s", "x_mm", "h_mm", "q_m3s", "dP_kPa", "F_N"];

/// Parse a time-series CSV. The header names the channels; `t_s` must be
/// present, every other column is optional and may appear in any order.
pub fn timeseries_from_csv_str(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::EmptyTrace("time-series CSV: empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    for c in &cols {
        if !TIMESERIES_COLUMNS.contains(c) {
            return Err(Error::EmptyTrace(format!(
                "time-series CSV: unknown column `{c}` (accepted: {})",
                TIMESERIES_COLUMNS.join(", ")
            )));
        }
    }
    let t_idx = cols
        .iter()
        .position(|c| *c == "t_s")
        .ok_or_else(|| Error::EmptyTrace("time-series CSV: missing `t_s` column".into()))?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::EmptyTrace(format!(
                "time-series CSV row {}: expected {} columns, found {}",
                lineno + 2,
                cols.len(),
                fields.len()
            )));
        }
        for (i, f) in fields.iter().enumerate() {
            let v = f.trim().parse::<f64>().map_err(|e| {
                Error::EmptyTrace(format!(
                    "time-series CSV row {} column {}: {e}",
                    lineno + 2,
                    i + 1
                ))
            })?;
            columns[i].push(v);
        }
    }

    let mut ts = TimeSeries {
        time_s: columns[t_idx].clone(),
        ..TimeSeries::default()
    };
    for (i, name) in cols.iter().enumerate() {
        if i == t_idx {
            continue;
        }
        let data = &columns[i];
        match *name {
            "x_mm" => ts.displacement_x = Some(data.iter().map(|v| v * MM).collect()),
            "h_mm" => ts.load_height_h = Some(data.iter().map(|v| v * MM).collect()),
            "q_m3s" => ts.flow_q = Some(data.clone()),
            "dP_kPa" => ts.supply_gauge_dp = Some(data.iter().map(|v| v * KPA).collect()),
            "F_N" => ts.force_f = Some(data.clone()),
            _ => unreachable!("column names validated above"),
        }
    }
    ts.validate()?;
    Ok(ts)
}

/// Read a time-series CSV file (see [`timeseries_from_csv_str`]).
pub fn read_timeseries_csv(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::EmptyTrace(format!("{}: {e}", path.display())))?;
    timeseries_from_csv_str(&text)
}

/// Render a time series as CSV with the standard column names, emitting only
/// the channels present.
pub fn timeseries_to_csv_str(ts: &TimeSeries) -> Result<String> {
    ts.validate()?;
    let mut cols: Vec<(&str, Vec<f64>)> = vec![("t_s", ts.time_s.clone())];
    if let Some(x) = &ts.displacement_x {
        cols.push(("x_mm", x.iter().map(|v| v / MM).collect()));
    }
    if let Some(h) = &ts.load_height_h {
        cols.push(("h_mm", h.iter().map(|v| v / MM).collect()));
    }
    if let Some(q) = &ts.flow_q {
        cols.push(("q_m3s", q.clone()));
    }
    if let Some(dp) = &ts.supply_gauge_dp {
        cols.push(("dP_kPa", dp.iter().map(|v| v / KPA).collect()));
    }
    if let Some(f) = &ts.force_f {
        cols.push(("F_N", f.clone()));
    }
    let mut out = String::new();
    out.push_str(
        &cols
            .iter()
            .map(|(name, _)| *name)
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for i in 0..ts.time_s.len() {
        let row: Vec<String> = cols.iter().map(|(_, v)| format!("{}", v[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

// ============================================================================
// Resistance model JSON
// ============================================================================

/// Serialize a resistance model to pretty JSON. Samples are
/// `(ΔP1 [Pa], kr [N/m])` — the exact values the solver consumes.
pub fn model_to_json_str(model: &ResistanceModel) -> String {
    serde_json::to_string_pretty(model).expect("model serialization is infallible")
}

/// Parse a resistance model from JSON text.
pub fn model_from_json_str(json: &str) -> Result<ResistanceModel> {
    let model: ResistanceModel = serde_json::from_str(json)
        .map_err(|e| Error::InvalidSpec(format!("resistance model JSON: {e}")))?;
    ResistanceModel::new(model.samples().to_vec())
}

/// Write a resistance model JSON file.
pub fn write_model_json(path: &Path, model: &ResistanceModel) -> Result<()> {
    fs::write(path, model_to_json_str(model) + "\n")
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
}

/// Read a resistance model JSON file.
pub fn read_model_json(path: &Path) -> Result<ResistanceModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
    model_from_json_str(&text)
}
