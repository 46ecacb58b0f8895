//! Circular-arc kernels shared by the cross-section model.
//!
//! Every sheet segment in a pouch cross-section is either a circular arc or a
//! straight run. An arc is parametrized by its *half-angle* `theta` (the arc
//! subtends `2·theta` at its center) together with either its radius `r` or
//! its arc length `len = 2·r·theta`. These helpers keep the arc algebra —
//! chord, sagitta, circular-segment area — in one place, with the straight
//! limit (`theta → 0`) handled explicitly so callers never divide by a
//! vanishing angle.

/// Half-angles below this magnitude are treated as zero curvature.
pub const STRAIGHT_EPS: f64 = 1e-12;

/// `sin(t)/t` with the exact limit 1 at `t = 0`.
///
/// Below `|t| = 1e-8` a 4th-order Taylor expansion is used; its truncation
/// error there is below 1e-33, far under f64 resolution.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Chord (horizontal span) of an arc of radius `r` and half-angle `theta`:
/// `2·r·sin(theta)`.
///
/// For a straight segment use [`chord_from_length`], which takes the segment
/// length instead of the (infinite) radius.
pub fn arc_span(r: f64, theta: f64) -> f64 {
    2.0 * r * theta.sin()
}

/// Chord of an arc given its *length* and half-angle: `len·sinc(theta)`.
///
/// At `theta = 0` this is exactly `len` — a straight segment spans its own
/// length — so it is safe for zero-curvature segments.
pub fn chord_from_length(len: f64, theta: f64) -> f64 {
    len * sinc(theta)
}

/// Sagitta (bulge height above the chord) of an arc given its length and
/// half-angle: `R·(1 − cos theta)` with `R = len/(2·theta)`; 0 for straight
/// segments.
pub fn sagitta_from_length(len: f64, theta: f64) -> f64 {
    if theta.abs() < STRAIGHT_EPS {
        0.0
    } else {
        len / (2.0 * theta) * (1.0 - theta.cos())
    }
}

/// Radius of an arc given its length and half-angle; `f64::INFINITY` for a
/// straight segment.
pub fn radius_from_length(len: f64, theta: f64) -> f64 {
    if theta.abs() < STRAIGHT_EPS {
        f64::INFINITY
    } else {
        len / (2.0 * theta)
    }
}

/// Area of the circular segment enclosed between an arc of radius `r`,
/// half-angle `theta`, and its chord: `r²·(theta − sin theta·cos theta)`.
///
/// This is the cross-section area one bulged sheet adds to a pouch lumen.
/// Tends to 0 as `theta → 0⁺` and equals `π r²/2` for a half circle.
pub fn segment_area(r: f64, theta: f64) -> f64 {
    if !r.is_finite() || theta.abs() < STRAIGHT_EPS {
        return 0.0;
    }
    r * r * (theta - theta.sin() * theta.cos())
}
