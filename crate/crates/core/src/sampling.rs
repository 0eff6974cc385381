//! Random nonnegative test functions: sums of scaled cube indicators, optionally
//! with smooth bumps. Indicators extremize every cube-based condition, so they
//! make up the bulk of each draw.

use rand::Rng;

use crate::domain::{CubeLattice, Grid, GridFunction, Point};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct TestFunctionShape {
    pub max_indicators: usize,
    pub with_bumps: bool,
}

impl Default for TestFunctionShape {
    fn default() -> Self {
        TestFunctionShape { max_indicators: 5, with_bumps: true }
    }
}

/// One draw: 1..=max_indicators indicators of random lattice cubes with weights
/// in (0, 1], plus (with probability 1/2 when enabled) a compact cosine bump.
pub fn random_test_function<T: Scalar, R: Rng>(
    grid: &Grid<T>,
    lattice: &CubeLattice<T>,
    shape: TestFunctionShape,
    rng: &mut R,
) -> GridFunction<T> {
    let cubes = lattice.enumerate(None);
    let mut f = GridFunction::zeros(*grid);
    let count = rng.gen_range(1..=shape.max_indicators.max(1));
    for _ in 0..count {
        if cubes.is_empty() {
            break;
        }
        let q = cubes[rng.gen_range(0..cubes.len())];
        let c: f64 = rng.gen_range(0.05..=1.0);
        let chi = GridFunction::indicator(*grid, &q.rect());
        for (v, x) in f.values_mut().iter_mut().zip(chi.values()) {
            *v += lit::<T>(c) * *x;
        }
    }
    if shape.with_bumps && rng.gen_bool(0.5) {
        let r = grid.bbox().rect();
        let dim = grid.dim();
        let mut center: Point<T> = [T::zero(); 2];
        for a in 0..dim {
            let u: f64 = rng.gen();
            center[a] = r.lo[a] + (r.hi[a] - r.lo[a]) * lit(u);
        }
        let radius = grid.bbox().side() * lit(rng.gen_range(0.05..0.3));
        let height: f64 = rng.gen_range(0.1..=1.0);
        let bump = GridFunction::from_fn(*grid, |x| {
            let d = crate::domain::distance(dim, x, &center) / radius;
            if d < T::one() {
                lit::<T>(height) * (T::one() + (T::PI() * d).cos()) / lit(2.0)
            } else {
                T::zero()
            }
        });
        for (v, b) in f.values_mut().iter_mut().zip(bump.values()) {
            *v += *b;
        }
    }
    f
}
