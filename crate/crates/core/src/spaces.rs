//! Modulars and Luxemburg norms on Musielak–Orlicz spaces over a grid.
//!
//! A function enters as a list of `(cell, |value|, measure)` entries so that
//! restrictions to cubes (with partial-cell overlaps) and whole-grid
//! functions share one code path.

use serde::Serialize;

use crate::domain::{CubeLattice, Grid, GridFunction, Rect};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::gphi::{GPhiFunction, LocalPhi, Phi};
use crate::roots::{bisect_threshold, relative_width};
use crate::sampling::{random_test_function, TestFunctionShape};
use crate::scalar::{lit, Scalar};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormResult<T> {
    pub value: T,
    pub modular_at_value: T,
    pub iterations: usize,
    /// Final `(lo, hi)` bracket on λ; empty (`(0, 0)`) for the zero function.
    pub bracket: (T, T),
}

impl<T: Scalar> NormResult<T> {
    fn zero() -> Self {
        NormResult { value: T::zero(), modular_at_value: T::zero(), iterations: 0, bracket: (T::zero(), T::zero()) }
    }
}

/// `(cell index, |f|, measure)`.
pub type Entry<T> = (usize, T, T);

/// A Φ-function frozen at the cell midpoints of a grid.
pub struct SampledPhi<'a, T> {
    grid: Grid<T>,
    locals: Vec<LocalPhi<'a, T>>,
    uniform_power: Option<T>,
    growth: T,
}

impl<'a, T: Scalar> SampledPhi<'a, T> {
    pub fn new<P: Phi<T>>(phi: &'a P, grid: &Grid<T>) -> Self {
        let locals: Vec<LocalPhi<'a, T>> = (0..grid.len()).map(|i| phi.at(&grid.midpoint(i))).collect();
        let first = locals[0].as_power();
        let uniform_power = first.filter(|p| locals.iter().all(|l| l.as_power() == Some(*p)));
        let cap = lit::<T>(1e3);
        let growth = locals
            .iter()
            .map(|l| match l {
                LocalPhi::Direct(f) => f.alpha + f.theta,
                LocalPhi::Conjugate(f, _) if f.alpha > T::one() => f.alpha / (f.alpha - T::one()),
                LocalPhi::Conjugate(..) => cap,
            })
            .fold(T::one(), T::max)
            .min(cap);
        SampledPhi { grid: *grid, locals, uniform_power, growth }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn local(&self, idx: usize) -> &LocalPhi<'a, T> {
        &self.locals[idx]
    }

    /// `Σ m_i φ(x_i, s·v_i)`.
    pub fn modular_scaled(&self, entries: &[Entry<T>], s: T) -> T {
        let mut acc = T::zero();
        for &(i, v, m) in entries {
            if v > T::zero() {
                acc += m * self.locals[i].eval(v * s);
            }
        }
        acc
    }

    pub fn modular(&self, entries: &[Entry<T>]) -> T {
        self.modular_scaled(entries, T::one())
    }

    /// `inf{λ > 0 : Σ m φ(x, v/λ) ≤ 1}`.
    pub fn norm(&self, entries: &[Entry<T>], tol: T) -> Result<NormResult<T>> {
        if !(tol > T::zero()) {
            return Err(Error::domain("Luxemburg tolerance must be positive"));
        }
        let mut sup = T::zero();
        for &(_, v, m) in entries {
            if !v.is_finite() {
                return Err(Error::domain("function has non-finite samples"));
            }
            if m > T::zero() {
                sup = sup.max(v.abs());
            }
        }
        if sup == T::zero() {
            return Ok(NormResult::zero());
        }
        if let Some(p) = self.uniform_power {
            // ‖f‖ = (Σ m |f|^p)^{1/p}, scaled by the sup for stability.
            let s: T = entries
                .iter()
                .filter(|e| e.2 > T::zero())
                .fold(T::zero(), |acc, &(_, v, m)| acc + m * (v.abs() / sup).powf(p));
            let value = sup * s.powf(T::one() / p);
            return Ok(NormResult { value, modular_at_value: T::one(), iterations: 0, bracket: (value, value) });
        }
        let lambda_tol = tol / self.growth;
        let pred = |lambda: T| self.modular_scaled(entries, T::one() / lambda) <= T::one();
        let th = bisect_threshold(pred, sup, relative_width(lambda_tol), MAX_ITER)?;
        let value = th.center();
        let modular_at_value = self.modular_scaled(entries, T::one() / value);
        Ok(NormResult { value, modular_at_value, iterations: th.iterations, bracket: (th.lo, th.hi) })
    }

    pub fn function_entries(&self, f: &GridFunction<T>) -> Vec<Entry<T>> {
        let m = self.grid.cell_measure();
        f.values().iter().enumerate().map(|(i, v)| (i, v.abs(), m)).collect()
    }

    /// Entries of `χ_Q f` (or `χ_Q` when `f` is `None`) for `Q ∩ box`.
    pub fn restricted_entries(&self, f: Option<&[T]>, region: &Rect<T>) -> Vec<Entry<T>> {
        self.grid
            .overlaps(region)
            .into_iter()
            .map(|(i, w)| (i, f.map_or(T::one(), |f| f[i].abs()), w))
            .collect()
    }

    pub fn indicator_norm(&self, region: &Rect<T>, tol: T) -> Result<T> {
        Ok(self.norm(&self.restricted_entries(None, region), tol)?.value)
    }

    pub fn restricted_norm(&self, f: &[T], region: &Rect<T>, tol: T) -> Result<T> {
        Ok(self.norm(&self.restricted_entries(Some(f), region), tol)?.value)
    }

    /// `‖χ_Q f‖ / ‖χ_Q‖`.
    pub fn cube_ratio(&self, f: &[T], region: &Rect<T>, tol: T) -> Result<T> {
        let den = self.indicator_norm(region, tol)?;
        if den == T::zero() {
            return Err(Error::domain("cube does not meet the box"));
        }
        Ok(self.restricted_norm(f, region, tol)? / den)
    }
}

fn check_grid<T: Scalar, P: Phi<T>>(phi: &P, f: &GridFunction<T>) -> Result<()> {
    if phi.dim() != f.grid().dim() {
        return Err(Error::domain("Φ-function and grid function have different dimensions"));
    }
    Ok(())
}

/// `∫ φ(x, |f(x)|) dx`; may be `+∞`.
pub fn modular<T: Scalar, P: Phi<T>>(phi: &P, f: &GridFunction<T>) -> Result<T> {
    check_grid(phi, f)?;
    let s = SampledPhi::new(phi, f.grid());
    Ok(s.modular(&s.function_entries(f)))
}

pub fn luxemburg_norm<T: Scalar, P: Phi<T>>(phi: &P, f: &GridFunction<T>, tol: T) -> Result<NormResult<T>> {
    check_grid(phi, f)?;
    let s = SampledPhi::new(phi, f.grid());
    s.norm(&s.function_entries(f), tol)
}

/// `‖f w‖_{p(·)}`; the weight must be positive on every sample.
pub fn weighted_norm<T: Scalar>(
    p: &ExponentField<T>,
    f: &GridFunction<T>,
    w: &GridFunction<T>,
    tol: T,
) -> Result<NormResult<T>> {
    if w.values().iter().any(|&v| !(v > T::zero())) {
        return Err(Error::domain("weights must be positive at every sample"));
    }
    let phi = GPhiFunction::power(p.clone())?;
    luxemburg_norm(&phi, &f.mul(w)?, tol)
}

/// `‖χ_Q f‖_φ / ‖χ_Q‖_φ`.
pub fn cube_norm_ratio<T: Scalar, P: Phi<T>>(phi: &P, f: &GridFunction<T>, cube: &Rect<T>, tol: T) -> Result<T> {
    check_grid(phi, f)?;
    let s = SampledPhi::new(phi, f.grid());
    s.cube_ratio(f.values(), cube, tol)
}

/// `‖χ_Q‖_φ` on a grid.
pub fn indicator_norm<T: Scalar, P: Phi<T>>(phi: &P, grid: &Grid<T>, cube: &Rect<T>, tol: T) -> Result<T> {
    SampledPhi::new(phi, grid).indicator_norm(cube, tol)
}

/// Lower bound for the dual norm `sup{∫|f|g : ‖g‖_{φ*} ≤ 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityProbe<T> {
    pub norm: T,
    pub sup: T,
    /// Value of the extremal candidate `g = φ'(x, |f|/‖f‖)`.
    pub extremal: T,
    pub candidates: usize,
}

/// Tests `f` against the extremal candidate and `random` random nonnegative
/// candidates, each normalized in `φ*` (conjugate sampled on `t_grid`).
pub fn duality_probe<T: Scalar, R: rand::Rng>(
    phi: &GPhiFunction<T>,
    f: &GridFunction<T>,
    t_grid: std::sync::Arc<Vec<T>>,
    random: usize,
    rng: &mut R,
    tol: T,
) -> Result<DualityProbe<T>> {
    check_grid(phi, f)?;
    let grid = *f.grid();
    let norm = luxemburg_norm(phi, f, tol)?.value;
    let conj = phi.conjugate(t_grid);
    let pairing = |g: &GridFunction<T>| -> Result<T> {
        let gn = luxemburg_norm(&conj, g, tol)?.value;
        if gn == T::zero() {
            return Ok(T::zero());
        }
        let m = grid.cell_measure();
        Ok(f.values().iter().zip(g.values()).map(|(a, b)| a.abs() * *b * m).sum::<T>() / gn)
    };
    if norm == T::zero() {
        return Ok(DualityProbe { norm, sup: T::zero(), extremal: T::zero(), candidates: 0 });
    }
    let extremal_g = GridFunction::new(
        grid,
        (0..grid.len())
            .map(|i| {
                let v = f.value(i).abs();
                if v == T::zero() {
                    T::zero()
                } else {
                    phi.local(&grid.midpoint(i)).derivative(v / norm)
                }
            })
            .collect(),
    )?;
    let extremal = pairing(&extremal_g)?;
    let levels = (grid.cells_per_side() as f64).log2().floor() as i32;
    let lattice = CubeLattice::new(*grid.bbox(), 0, levels.max(0))?;
    let mut sup = extremal;
    for _ in 0..random {
        let g = random_test_function(&grid, &lattice, TestFunctionShape::default(), rng);
        sup = sup.max(pairing(&g)?);
    }
    Ok(DualityProbe { norm, sup, extremal, candidates: random + 1 })
}
