//! Projection onto `{l ≤ aᵀy ≤ u, lo ≤ y ≤ hi}` through its scalar dual.
//!
//! The solution is `y(λ) = clamp(x − λa)` for the multiplier `λ` at which
//! `φ(λ) = aᵀy(λ)` hits the violated side. `φ` is piecewise linear and
//! nonincreasing, so the right piece is found by bisection over the sorted
//! breakpoints and `λ` by one Newton step inside it.

use super::{clamp, ProjectionError};

#[allow(clippy::too_many_arguments)]
pub(super) fn project(
    x: &[f64],
    cols: &[usize],
    vals: &[f64],
    l: f64,
    u: f64,
    lo: &[f64],
    hi: &[f64],
    tol: f64,
) -> Result<Vec<f64>, ProjectionError> {
    let mut y = clamp(x, lo, hi);
    let r0: f64 = cols.iter().zip(vals).map(|(&j, &a)| a * y[j]).sum();
    let xs: Vec<f64> = cols.iter().map(|&j| x[j]).collect();
    let los: Vec<f64> = cols.iter().map(|&j| lo[j]).collect();
    let his: Vec<f64> = cols.iter().map(|&j| hi[j]).collect();

    let lambda = if r0 > u {
        solve_decreasing(&xs, vals, u, &los, &his, tol)?
    } else if r0 < l {
        // φ(λ) < l: flip the sign of the row so the target is again approached
        // from above.
        let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
        -solve_decreasing(&xs, &neg, -l, &los, &his, tol)?
    } else {
        return Ok(y);
    };
    for (k, &j) in cols.iter().enumerate() {
        y[j] = (x[j] - lambda * vals[k]).max(lo[j]).min(hi[j]);
    }
    Ok(y)
}

fn phi(lambda: f64, x: &[f64], a: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len()).map(|k| a[k] * (x[k] - lambda * a[k]).max(lo[k]).min(hi[k])).sum()
}

/// Smallest `λ ≥ 0` with `φ(λ) = target`, given `φ(0) > target`.
fn solve_decreasing(x: &[f64], a: &[f64], target: f64, lo: &[f64], hi: &[f64], tol: f64) -> Result<f64, ProjectionError> {
    // φ(+∞): every coordinate pushed to the bound opposite the sign of a.
    let floor: f64 = (0..x.len())
        .map(|k| match a[k].partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => a[k] * lo[k],
            Some(std::cmp::Ordering::Less) => a[k] * hi[k],
            _ => 0.0,
        })
        .sum();
    if floor.is_nan() || floor > target + tol * (1.0 + target.abs()) {
        return Err(ProjectionError::InfeasiblePolyhedron);
    }

    let mut bps: Vec<f64> = vec![0.0];
    for k in 0..x.len() {
        if a[k] == 0.0 {
            continue;
        }
        for b in [lo[k], hi[k]] {
            let t = (x[k] - b) / a[k];
            if t.is_finite() && t > 0.0 {
                bps.push(t);
            }
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup();

    // Last breakpoint with φ ≥ target.
    let (mut lo_i, mut hi_i) = (0usize, bps.len());
    while hi_i - lo_i > 1 {
        let mid = (lo_i + hi_i) / 2;
        if phi(bps[mid], x, a, lo, hi) >= target {
            lo_i = mid;
        } else {
            hi_i = mid;
        }
    }
    let left = bps[lo_i];
    let right = bps.get(lo_i + 1).copied().unwrap_or(f64::INFINITY);
    let probe = if right.is_finite() { 0.5 * (left + right) } else { left + 1.0 };
    let slope: f64 = (0..x.len())
        .filter(|&k| {
            let v = x[k] - probe * a[k];
            v > lo[k] && v < hi[k]
        })
        .map(|k| a[k] * a[k])
        .sum();
    let excess = phi(left, x, a, lo, hi) - target;
    if slope == 0.0 {
        return Ok(left);
    }
    Ok((left + excess / slope).min(right))
}
