//! Bracketing and bisection for monotone predicates on the positive half-line.
//!
//! Every quantity computed by bisection in this crate (Luxemburg norms,
//! generalized inverses) is the threshold of a monotone predicate, so the
//! search is phrased in those terms: find `x*` with `pred(x) == false` for
//! `x < x*` and `pred(x) == true` for `x > x*`. The returned bracket always
//! satisfies `!pred(lo) && pred(hi)`, unless `lo == 0` in which case the
//! predicate held arbitrarily close to zero.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold<T> {
    pub lo: T,
    pub hi: T,
    pub iterations: usize,
}

impl<T: Scalar> Threshold<T> {
    /// Geometric midpoint of the bracket (or `hi` when `lo` collapsed to zero).
    pub fn center(&self) -> T {
        if self.lo > T::zero() {
            (self.lo * self.hi).sqrt()
        } else {
            self.hi
        }
    }
}

const MAX_EXPANSIONS: usize = 4000;

/// Grows or shrinks `seed` by factors of 4 until it brackets the threshold.
pub fn expand_bracket<T, P>(pred: &P, seed: T) -> Result<(T, T, usize)>
where
    T: Scalar,
    P: Fn(T) -> bool,
{
    if !(seed > T::zero()) || !seed.is_finite() {
        return Err(Error::domain(format!("bracket seed must be positive, got {seed}")));
    }
    let four = lit::<T>(4.0);
    let mut steps = 0;
    if pred(seed) {
        let mut hi = seed;
        let mut lo = seed / four;
        while pred(lo) {
            steps += 1;
            hi = lo;
            lo = lo / four;
            if lo <= T::min_positive_value() || steps > MAX_EXPANSIONS {
                return Ok((T::zero(), hi, steps));
            }
        }
        Ok((lo, hi, steps))
    } else {
        let mut lo = seed;
        let mut hi = seed * four;
        while !pred(hi) {
            steps += 1;
            lo = hi;
            hi = hi * four;
            if !hi.is_finite() || steps > MAX_EXPANSIONS {
                return Err(Error::domain(
                    "monotone predicate never became true; threshold is infinite",
                ));
            }
        }
        Ok((lo, hi, steps))
    }
}

/// Geometric bisection of a monotone predicate, starting from `seed`.
///
/// `done(lo, hi)` decides when the bracket is tight enough; the loop also
/// stops after `max_iter` halvings or when the midpoint stops moving.
pub fn bisect_threshold<T, P, D>(pred: P, seed: T, done: D, max_iter: usize) -> Result<Threshold<T>>
where
    T: Scalar,
    P: Fn(T) -> bool,
    D: Fn(T, T) -> bool,
{
    let (mut lo, mut hi, mut iterations) = expand_bracket(&pred, seed)?;
    if lo == T::zero() {
        return Ok(Threshold { lo, hi, iterations });
    }
    for _ in 0..max_iter {
        if done(lo, hi) {
            break;
        }
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(Threshold { lo, hi, iterations })
}

/// Stop rule on the relative width `hi / lo - 1 <= rel_tol`.
pub fn relative_width<T: Scalar>(rel_tol: T) -> impl Fn(T, T) -> bool {
    let tol = rel_tol.max(T::min_rel_tol());
    move |lo: T, hi: T| hi / lo - T::one() <= tol
}
