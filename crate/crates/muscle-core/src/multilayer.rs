//! Design-stage contraction bounds for multilayer and zigzag actuators.
//!
//! These are closed-form kinematic limits: the positive-pressure part of the
//! stroke folds every pouch to a half circle (each pouch span shrinks from
//! `L10` to `2·L10/π`), and the negative-pressure part folds the exposed skin
//! gaps away entirely. Stacking `m` layers lets a gap of up to
//! `(m−1)·L10·2/π` tuck into the voids between folded pouches, which sets the
//! feasibility bound used throughout.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::types::{Error, Result};

/// Geometry inputs for the multilayer design bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultilayerSpec {
    /// Number of stacked layers `m ≥ 2`.
    pub layers_m: u32,
    /// Number of pouch columns `n ≥ 1`.
    pub columns_n: u32,
    /// Designed pouch length `L10` [m].
    pub pouch_length_l10: f64,
    /// Designed gap length `L20` [m].
    pub gap_length_l20: f64,
}

/// Maximum contraction split into its positive- and negative-pressure parts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitContraction {
    /// Positive-pressure share `n(1−2/π)L10 / (nL10+(n−1)L20)` (fraction).
    pub positive_cr: f64,
    /// Negative-pressure share `(n−1)L20 / (nL10+(n−1)L20)` (fraction).
    pub negative_cr: f64,
    /// Total `positive_cr + negative_cr` (fraction).
    pub total_cr: f64,
    /// Whether the gap actually fits into the inter-layer voids:
    /// `L20 ≤ (m−1)·L10·2/π`. When false the printed values are the
    /// unreachable nominal bounds.
    pub feasible: bool,
}

impl MultilayerSpec {
    fn validate(&self) -> Result<()> {
        if self.layers_m < 2 {
            return Err(Error::InvalidSpec("layers_m must be >= 2".into()));
        }
        if self.columns_n < 1 {
            return Err(Error::InvalidSpec("columns_n must be >= 1".into()));
        }
        if !(self.pouch_length_l10 > 0.0) || !(self.gap_length_l20 >= 0.0) {
            return Err(Error::InvalidSpec(
                "pouch_length_l10 must be > 0 and gap_length_l20 >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Maximum-contraction split for an arbitrary gap length.
///
/// The positive part folds every pouch to a half circle; the negative part
/// removes the exposed gaps. Feasibility of the negative part requires the
/// gap material to fit into the voids of the `m`-layer stack.
pub fn max_contraction_split(spec: &MultilayerSpec) -> Result<SplitContraction> {
    spec.validate()?;
    let n = spec.columns_n as f64;
    let m = spec.layers_m as f64;
    let l10 = spec.pouch_length_l10;
    let l20 = spec.gap_length_l20;
    let flat = n * l10 + (n - 1.0) * l20;
    let positive = n * (1.0 - 2.0 / PI) * l10 / flat;
    let negative = (n - 1.0) * l20 / flat;
    let feasible = l20 <= (m - 1.0) * l10 * 2.0 / PI + 1e-15;
    Ok(SplitContraction {
        positive_cr: positive,
        negative_cr: negative,
        total_cr: positive + negative,
        feasible,
    })
}

/// Maximum-contraction split at the feasibility bound
/// `L20 = (m−1)·L10·2/π`, where the gap exactly fills the stack voids:
///
/// * positive: `(π−2)·n / (π·n + 2(m−1)(n−1))`
/// * negative: `2(m−1)(n−1) / (π·n + 2(m−1)(n−1))`
pub fn max_contraction_at_bound(layers_m: u32, columns_n: u32) -> Result<(f64, f64)> {
    if layers_m < 2 {
        return Err(Error::InvalidSpec("layers_m must be >= 2".into()));
    }
    if columns_n < 1 {
        return Err(Error::InvalidSpec("columns_n must be >= 1".into()));
    }
    let m = layers_m as f64;
    let n = columns_n as f64;
    let denom = PI * n + 2.0 * (m - 1.0) * (n - 1.0);
    Ok(((PI - 2.0) * n / denom, 2.0 * (m - 1.0) * (n - 1.0) / denom))
}

/// Total maximum contraction at the feasibility bound.
pub fn total_contraction_at_bound(layers_m: u32, columns_n: u32) -> Result<f64> {
    let (p, q) = max_contraction_at_bound(layers_m, columns_n)?;
    Ok(p + q)
}

/// Limit of the at-bound total contraction as the layer count grows without
/// bound: 100% for `n ≥ 2` (the gaps dominate), `1 − 2/π ≈ 36.3%` for a
/// single column (no gaps to remove).
pub fn total_contraction_limit(columns_n: u32) -> f64 {
    if columns_n >= 2 {
        1.0
    } else {
        1.0 - 2.0 / PI
    }
}

/// Maximum contraction of a zigzag (series-folded single sheet) actuator:
/// `(Ssum0 − n_edges·L10·2/π) / Ssum0`, where `n_edges` counts every folding
/// edge including the horizontal end channels.
///
/// Errors with `InfeasibleGeometry` when the folded edges alone would exceed
/// the flat length.
pub fn zigzag_max_contraction(ssum0: f64, n_edges: u32, pouch_length_l10: f64) -> Result<f64> {
    if !(ssum0 > 0.0) || !(pouch_length_l10 > 0.0) {
        return Err(Error::InvalidSpec(
            "zigzag lengths must be positive".into(),
        ));
    }
    let folded = n_edges as f64 * pouch_length_l10 * 2.0 / PI;
    if folded >= ssum0 {
        return Err(Error::InfeasibleGeometry(format!(
            "folded edge length {folded:.6} m is not shorter than the flat length {ssum0:.6} m"
        )));
    }
    Ok((ssum0 - folded) / ssum0)
}

/// At-bound total contraction over inclusive layer/column ranges; one row per
/// layer count, one column per column count.
pub fn contraction_table(
    layers: RangeInclusive<u32>,
    columns: RangeInclusive<u32>,
) -> Result<Vec<(u32, Vec<f64>)>> {
    let mut rows = Vec::new();
    for m in layers {
        let mut row = Vec::new();
        for n in columns.clone() {
            row.push(total_contraction_at_bound(m, n)?);
        }
        rows.push((m, row));
    }
    Ok(rows)
}

/// The infinite-layer row matching [`contraction_table`] columns.
pub fn contraction_limit_row(columns: RangeInclusive<u32>) -> Vec<f64> {
    columns.map(total_contraction_limit).collect()
}

/// Display rounding used by the design tables: fraction → percent with one
/// decimal, half away from zero (e.g. `0.745352 → 74.5`).
pub fn percent_one_decimal(fraction: f64) -> f64 {
    (fraction * 1000.0).round() / 10.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: u32, n: u32, l10: f64, l20: f64) -> MultilayerSpec {
        MultilayerSpec {
            layers_m: m,
            columns_n: n,
            pouch_length_l10: l10,
            gap_length_l20: l20,
        }
    }

    #[test]
    fn split_matches_bound_form_at_the_bound_gap() {
        for (m, n) in [(2u32, 2u32), (3, 5), (6, 4), (4, 1)] {
            let l10 = 0.02;
            let l20 = (m - 1) as f64 * l10 * 2.0 / PI;
            let s = max_contraction_split(&spec(m, n, l10, l20)).unwrap();
            let (p, q) = max_contraction_at_bound(m, n).unwrap();
            assert!(s.feasible);
            assert!((s.positive_cr - p).abs() < 1e-12, "positive part m={m} n={n}");
            assert!((s.negative_cr - q).abs() < 1e-12, "negative part m={m} n={n}");
        }
    }

    #[test]
    fn reference_actuator_split() {
        // 7 columns of 20 mm pouches with 10 mm gaps, two layers.
        let s = max_contraction_split(&spec(2, 7, 0.02, 0.01)).unwrap();
        assert!(s.feasible, "10 mm gap fits the two-layer void bound 12.7 mm");
        assert!((s.positive_cr - 0.254366).abs() < 1e-5);
        assert!((s.negative_cr - 0.300000).abs() < 1e-12);
        assert!((s.total_cr - 0.554366).abs() < 1e-5);
    }

    #[test]
    fn oversized_gap_is_flagged_infeasible() {
        let s = max_contraction_split(&spec(2, 7, 0.02, 0.0128)).unwrap();
        assert!(!s.feasible); // bound is 2/π·20 mm ≈ 12.73 mm per extra layer
        let s = max_contraction_split(&spec(3, 7, 0.02, 0.0128)).unwrap();
        assert!(s.feasible);
    }

    #[test]
    fn vanishing_gap_approaches_the_pouch_motor_limit() {
        let s = max_contraction_split(&spec(2, 7, 0.02, 1e-9)).unwrap();
        assert!((s.total_cr * 100.0 - 36.34).abs() < 0.01);
        assert!(s.feasible);
    }

    #[test]
    fn single_column_has_no_negative_share() {
        let (p, q) = max_contraction_at_bound(5, 1).unwrap();
        assert!((p - (1.0 - 2.0 / PI)).abs() < 1e-12);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn at_bound_totals_increase_in_layers_and_columns() {
        for n in 2..=5 {
            for m in 2..=5 {
                let a = total_contraction_at_bound(m, n).unwrap();
                let b = total_contraction_at_bound(m + 1, n).unwrap();
                assert!(b > a, "should increase with layers at n={n}, m={m}");
            }
        }
        for m in 2..=6 {
            for n in 2..=4 {
                let a = total_contraction_at_bound(m, n).unwrap();
                let b = total_contraction_at_bound(m, n + 1).unwrap();
                assert!(b > a, "should increase with columns at m={m}, n={n}");
            }
        }
    }

    #[test]
    fn many_layer_total_approaches_the_limit() {
        let t = total_contraction_at_bound(1_000_000, 3).unwrap();
        assert!(t > 0.99);
        assert_eq!(total_contraction_limit(3), 1.0);
        assert!((total_contraction_limit(1) - 0.363380).abs() < 1e-5);
    }

    #[test]
    fn zigzag_examples() {
        // 200 mm flat length folded over 8 edges of 10 mm.
        let cr = zigzag_max_contraction(0.2, 8, 0.01).unwrap();
        assert_eq!(percent_one_decimal(cr), 74.5);
        // Edges that don't fit the flat length are rejected.
        assert!(matches!(
            zigzag_max_contraction(0.05, 8, 0.01),
            Err(Error::InfeasibleGeometry(_))
        ));
    }

    #[test]
    fn percent_rounding_is_half_away_from_zero() {
        assert_eq!(percent_one_decimal(0.820492), 82.0);
        assert_eq!(percent_one_decimal(0.82051), 82.1);
        assert_eq!(percent_one_decimal(0.363380), 36.3);
        assert_eq!(percent_one_decimal(0.745352), 74.5);
    }

    #[test]
    fn table_covers_requested_ranges() {
        let rows = contraction_table(2..=6, 1..=5).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].1.len(), 5);
        assert_eq!(rows[0].0, 2);
        // First column is the single-column pouch-motor value for every m.
        for (_, row) in &rows {
            assert_eq!(percent_one_decimal(row[0]), 36.3);
        }
        let lim = contraction_limit_row(1..=5);
        assert_eq!(lim, vec![1.0 - 2.0 / PI, 1.0, 1.0, 1.0, 1.0]);
    }
}
