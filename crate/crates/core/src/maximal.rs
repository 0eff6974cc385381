//! Maximal operators over a truncated cube lattice: dyadic Hardy–Littlewood
//! averages, the Orlicz-type `M_φ` and its fractional version with the
//! factor `‖χ_Q‖_{β(·)}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{CubeLattice, GridFunction, LatticeCube};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::gphi::{GPhiFunction, Phi};
use crate::sampling::{random_test_function, TestFunctionShape};
use crate::scalar::{lit, Scalar};
use crate::spaces::{luxemburg_norm, SampledPhi};

pub struct MaximalSpec<'a, T, P = GPhiFunction<T>> {
    /// `None` means `φ(t) = t`, i.e. plain averages.
    pub phi: Option<&'a P>,
    pub beta: Option<&'a ExponentField<T>>,
    pub lattice: CubeLattice<T>,
    pub tol: T,
}

impl<'a, T: Scalar> MaximalSpec<'a, T, GPhiFunction<T>> {
    pub fn hardy_littlewood(lattice: CubeLattice<T>) -> Self {
        MaximalSpec { phi: None, beta: None, lattice, tol: lit(1e-10) }
    }
}

/// Per-cube values of the maximal-function ratio, in lattice order.
pub fn cube_ratios<T: Scalar, P: Phi<T>>(spec: &MaximalSpec<'_, T, P>, f: &GridFunction<T>) -> Result<Vec<(LatticeCube<T>, T)>> {
    let grid = f.grid();
    if let Some(beta) = spec.beta {
        if !(beta.p_minus() > T::zero()) {
            return Err(Error::domain("fractional factor needs β^- > 0"));
        }
    }
    let cubes = spec.lattice.all_cubes();
    let sampled = spec.phi.map(|p| SampledPhi::new(p, grid));
    let beta_phi = spec.beta.map(|b| GPhiFunction::power(b.clone())).transpose()?;
    let beta_sampled = beta_phi.as_ref().map(|b| SampledPhi::new(b, grid));
    let abs: Vec<T> = f.values().iter().map(|v| v.abs()).collect();
    cubes
        .par_iter()
        .map(|q| {
            let r = q.rect();
            let mut value = match &sampled {
                None => {
                    let region = r
                        .intersect(&grid.bbox().rect())
                        .ok_or_else(|| Error::domain("lattice cube misses the box"))?;
                    let s = grid.overlaps(&region).into_iter().fold(T::zero(), |acc, (i, w)| acc + abs[i] * w);
                    s / region.measure()
                }
                Some(s) => s.cube_ratio(&abs, &r, spec.tol)?,
            };
            if let Some(b) = &beta_sampled {
                value *= b.indicator_norm(&r, spec.tol)?;
            }
            Ok((*q, value))
        })
        .collect()
}

/// `sup_{Q ∋ x} [‖χ_Q‖_β] ‖χ_Q f‖_φ / ‖χ_Q‖_φ` over the lattice, at every cell midpoint.
pub fn maximal<T: Scalar, P: Phi<T>>(spec: &MaximalSpec<'_, T, P>, f: &GridFunction<T>) -> Result<GridFunction<T>> {
    let grid = *f.grid();
    let ratios = cube_ratios(spec, f)?;
    let mut out = vec![T::neg_infinity(); grid.len()];
    for (q, v) in &ratios {
        for i in grid.cells_with_midpoint_in(&q.rect()) {
            if *v > out[i] {
                out[i] = *v;
            }
        }
    }
    if out.iter().any(|v| *v == T::neg_infinity()) {
        return Err(Error::domain("some grid points lie in no lattice cube"));
    }
    GridFunction::new(grid, out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport<T> {
    pub max_ratio: T,
    pub ratios: Vec<T>,
    pub worst_trial: usize,
}

/// `max ‖M f‖_target / ‖f‖_source` over random indicator-sum test functions.
pub fn boundedness_probe<T: Scalar, P: Phi<T>>(
    spec: &MaximalSpec<'_, T, P>,
    grid: &crate::domain::Grid<T>,
    source_p: &ExponentField<T>,
    target_p: &ExponentField<T>,
    trials: usize,
    seed: u64,
) -> Result<ProbeReport<T>> {
    let source = GPhiFunction::power(source_p.clone())?;
    let target = GPhiFunction::power(target_p.clone())?;
    let mut ratios = Vec::with_capacity(trials);
    for t in 0..trials.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let f = random_test_function(grid, &spec.lattice, TestFunctionShape::default(), &mut rng);
        let mf = maximal(spec, &f)?;
        let num = luxemburg_norm(&target, &mf, spec.tol)?.value;
        let den = luxemburg_norm(&source, &f, spec.tol)?.value;
        ratios.push(if den > T::zero() { num / den } else { T::zero() });
    }
    let (worst_trial, max_ratio) = ratios
        .iter()
        .enumerate()
        .fold((0, T::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(ProbeReport { max_ratio, ratios, worst_trial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BoundingBox, Grid, Rect};

    fn setup(dim: usize, cps: usize, j_max: i32) -> (Grid<f64>, CubeLattice<f64>) {
        let b = BoundingBox::unit(dim).unwrap();
        (Grid::new(b, cps).unwrap(), CubeLattice::new(b, 0, j_max).unwrap())
    }

    #[test]
    fn constants_are_fixed_points() {
        let (g, lat) = setup(1, 64, 5);
        let m = maximal(&MaximalSpec::hardy_littlewood(lat), &GridFunction::constant(g, 2.5)).unwrap();
        assert!(m.values().iter().all(|v| (*v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn half_indicator() {
        let (g, lat) = setup(1, 64, 6);
        let f = GridFunction::indicator(g, &Rect::new(1, [0.0, 0.0], [0.5, 0.0]));
        let m = maximal(&MaximalSpec::hardy_littlewood(lat), &f).unwrap();
        let at = g.cell_of(&[0.75, 0.0]).unwrap();
        assert_eq!(m.value(at), 0.5);
        assert_eq!(m.value(g.cell_of(&[0.25, 0.0]).unwrap()), 1.0);
    }

    #[test]
    fn orlicz_version_reduces_to_averages_for_t() {
        let (g, lat) = setup(1, 64, 4);
        let phi = GPhiFunction::constant(1.0, 0.0, *g.bbox()).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * x[0]);
        let spec = MaximalSpec { phi: Some(&phi), beta: None, lattice: lat, tol: 1e-12 };
        let a = maximal(&spec, &f).unwrap();
        let b = maximal(&MaximalSpec::hardy_littlewood(lat), &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_never_decreases() {
        let (g, lat) = setup(2, 16, 2);
        let f = GridFunction::from_fn(g, |x| (5.0 * x[0]).sin().abs() + x[1]);
        let coarse = maximal(&MaximalSpec::hardy_littlewood(lat), &f).unwrap();
        let fine = maximal(&MaximalSpec::hardy_littlewood(lat.with_levels(0, 4)), &f).unwrap();
        assert!(coarse.values().iter().zip(fine.values()).all(|(c, f)| f >= c));
    }

    #[test]
    fn uncovered_points_are_errors() {
        let b = BoundingBox::<f64>::unit(1).unwrap();
        let g = Grid::new(b, 8).unwrap();
        let lat = CubeLattice::new(BoundingBox::from_bounds(1, 0.0, 0.5).unwrap(), 1, 2).unwrap();
        assert!(maximal(&MaximalSpec::hardy_littlewood(lat), &GridFunction::constant(g, 1.0)).is_err());
    }
}
