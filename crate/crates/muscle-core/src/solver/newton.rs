//! Damped Newton iteration with a forward-difference Jacobian.
//!
//! The solved systems are tiny (5–8 unknowns) but stiff near their domain
//! edges (membrane lengths blow up where the Laplace relation degenerates),
//! so the driver combines three guards: box constraints that keep iterates
//! in the formulas' domain, step-fraction limiting to stay strictly inside
//! the box, and residual-norm backtracking (step halving).

use nalgebra::{DMatrix, DVector};

use crate::types::{Error, Result};

/// Options for one Newton solve.
pub(crate) struct NewtonOptions {
    /// Convergence threshold on the largest scaled residual component.
    pub tol: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Initial step fraction (normally 1.0).
    pub damping: f64,
    /// Human-readable tag for error messages.
    pub context: String,
}

/// Largest absolute component.
fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Solve `f(x) = 0` for scaled residual function `f`.
///
/// `f(x, out)` writes one scaled residual per unknown. `lo`/`hi` bound each
/// unknown (the start point must satisfy them), `typical` sets the
/// forward-difference step floor per unknown (`h = 1e-8·max(|x|, typical)`).
///
/// Returns the solution and its final residual norm.
pub(crate) fn solve<F>(
    f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    typical: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = x0.len();
    debug_assert!(lo.len() == n && hi.len() == n && typical.len() == n);
    let mut x: Vec<f64> = x0
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();

    let mut r = vec![0.0; n];
    f(&x, &mut r);
    let mut norm = inf_norm(&r);

    let fail = |norm: f64, iters: usize, why: &str, ctx: &str| Error::NoConvergence {
        residual: norm,
        iters,
        context: format!("{ctx}: {why}"),
    };

    for iter in 0..opts.max_iters {
        if norm < opts.tol {
            return Ok((x, norm));
        }
        if !norm.is_finite() {
            return Err(fail(norm, iter, "residual is not finite", &opts.context));
        }

        // Forward-difference Jacobian of the scaled residuals.
        let mut jac = DMatrix::<f64>::zeros(n, n);
        let mut r_pert = vec![0.0; n];
        for j in 0..n {
            let h = 1e-8 * x[j].abs().max(typical[j]);
            let saved = x[j];
            x[j] = saved + h;
            f(&x, &mut r_pert);
            x[j] = saved;
            for i in 0..n {
                jac[(i, j)] = (r_pert[i] - r[i]) / h;
            }
        }

        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let dx = match jac.lu().solve(&rhs) {
            Some(d) => d,
            None => return Err(fail(norm, iter, "singular jacobian", &opts.context)),
        };

        // Largest fraction of the step that stays strictly inside the box.
        let mut frac_max = 1.0_f64;
        for j in 0..n {
            let d = dx[j];
            if d > 0.0 {
                frac_max = frac_max.min(0.999 * (hi[j] - x[j]) / d);
            } else if d < 0.0 {
                frac_max = frac_max.min(0.999 * (lo[j] - x[j]) / d);
            }
        }
        if !(frac_max > 1e-14) {
            return Err(fail(norm, iter, "iterate pinned to a domain bound", &opts.context));
        }

        // Backtracking on the residual norm.
        let mut lambda = opts.damping.min(frac_max).min(1.0);
        let mut accepted = false;
        for _ in 0..30 {
            let x_new: Vec<f64> = (0..n)
                .map(|j| (x[j] + lambda * dx[j]).clamp(lo[j], hi[j]))
                .collect();
            f(&x_new, &mut r_pert);
            let norm_new = inf_norm(&r_pert);
            if norm_new.is_finite() && norm_new < norm {
                x = x_new;
                r.copy_from_slice(&r_pert);
                norm = norm_new;
                accepted = true;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                break;
            }
        }
        if !accepted {
            return Err(fail(norm, iter, "step backtracking stalled", &opts.context));
        }
    }

    if norm < opts.tol {
        Ok((x, norm))
    } else {
        Err(fail(norm, opts.max_iters, "iteration cap reached", &opts.context))
    }
}

/// Bisection for a scalar root of `f` on `[a, b]` where `f(a)` and `f(b)`
/// have opposite signs. Runs to interval width `xtol` (or 200 iterations)
/// and returns the midpoint.
pub(crate) fn bisect<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoConvergence {
            residual: fa.abs().min(fb.abs()),
            iters: 0,
            context: format!("bisection bracket [{a}, {b}] does not change sign"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < xtol {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
