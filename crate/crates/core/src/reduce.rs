//! Reproducible reductions.
//!
//! Parallel operators in this crate never combine partial sums in a
//! scheduler-dependent order. Each output cell is owned by one worker and
//! receives its terms in the same order as the sequential loop, so parallel and
//! sequential results agree bit for bit.

use crate::error::{invalid, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "DIRAC_THREADS";

/// Sums `values` strictly left to right.
pub fn deterministic_sum(values: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(invalid(format!("non-finite summand at index {i}")));
        }
        acc += v;
    }
    Ok(acc)
}

/// Correctly rounded sum of `values` (Shewchuk partials with a final
/// half-even correction). The result does not depend on summand order.
pub fn exact_sum(values: &[f64]) -> Result<f64> {
    let mut partials: Vec<f64> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(invalid(format!("non-finite summand at index {i}")));
        }
        let mut x = v;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    let mut n = partials.len();
    if n == 0 {
        return Ok(0.0);
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    Ok(hi)
}

/// Thread cap from `DIRAC_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
