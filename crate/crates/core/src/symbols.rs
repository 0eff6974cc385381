//! Cube functionals `a(Q)`, generalized Lipschitz seminorms and the symbol
//! estimates used by the commutator theorems.
//!
//! Cube integrals run over `Q ∩ box`; a cube that sticks out of the box is
//! reported as clipped rather than silently extended.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{distance, DyadicCube, Grid, GridFunction, LatticeCube, CubeLattice, Point, Rect};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::gphi::GPhiFunction;
use crate::scalar::{from_usize, lit, Scalar};
use crate::spaces::SampledPhi;

/// The functional `a(Q)` controlling cube oscillations.
#[derive(Debug, Clone)]
pub enum CubeFunctional<T> {
    /// `a ≡ 1`: the BMO case.
    ConstantOne,
    /// `a(Q) = |Q|^{δ/n}`: classical Lipschitz spaces.
    Power { delta: T },
    /// `a(Q) = ‖χ_Q‖_{s(·)}` with `s = n/δ(·)`.
    VariableNorm { exponent: ExponentField<T> },
    /// Values on dyadic cubes; other cubes are a domain error.
    Custom(Arc<HashMap<DyadicCube, T>>),
}

impl<T: Scalar> CubeFunctional<T> {
    pub fn power(delta: T) -> Result<Self> {
        if !(delta >= T::zero()) {
            return Err(Error::domain(format!("power functional needs δ ≥ 0, got {delta}")));
        }
        Ok(CubeFunctional::Power { delta })
    }

    /// `‖χ_Q‖_{n/δ(·)}` with `n/δ` tabulated on the cell midpoints of `grid`.
    pub fn from_delta(delta: &ExponentField<T>, grid: &Grid<T>) -> Result<Self> {
        if !(delta.p_minus() > T::zero()) {
            return Err(Error::domain("variable functional needs δ^- > 0"));
        }
        let n = from_usize::<T>(grid.dim());
        let values = GridFunction::from_fn(*grid, |x| n / delta.value(x));
        Ok(CubeFunctional::VariableNorm { exponent: ExponentField::tabulated(values)? })
    }

    /// Binds the functional to a grid so that norm-based kinds can be evaluated.
    pub fn evaluator<'a>(&'a self, grid: &Grid<T>, tol: T) -> Result<CubeEvaluator<'a, T>> {
        let phi = match self {
            CubeFunctional::VariableNorm { exponent } => {
                if exponent.dim() != grid.dim() {
                    return Err(Error::domain("functional exponent and grid have different dimensions"));
                }
                Some(GPhiFunction::power(exponent.clone())?)
            }
            _ => None,
        };
        Ok(CubeEvaluator { functional: self, phi, grid: *grid, tol })
    }

    /// Is `a(Q') ≤ a(Q)` whenever `Q' ⊂ Q`, by construction?
    pub fn is_monotone(&self) -> bool {
        !matches!(self, CubeFunctional::Custom(_))
    }
}

pub struct CubeEvaluator<'a, T> {
    functional: &'a CubeFunctional<T>,
    phi: Option<GPhiFunction<T>>,
    grid: Grid<T>,
    tol: T,
}

impl<T: Scalar> CubeEvaluator<'_, T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn sampled(&self) -> Option<SampledPhi<'_, T>> {
        self.phi.as_ref().map(|p| SampledPhi::new(p, &self.grid))
    }

    /// `a(Q)`; `sampled` must come from [`CubeEvaluator::sampled`] for the
    /// variable kind (it is built once per sweep).
    pub fn value(&self, sampled: Option<&SampledPhi<'_, T>>, region: &Rect<T>) -> Result<T> {
        let n = region.dim as i32;
        let v = match self.functional {
            CubeFunctional::ConstantOne => T::one(),
            CubeFunctional::Power { delta } => region.measure().powf(*delta / from_usize(n as usize)),
            CubeFunctional::VariableNorm { .. } => {
                let s = sampled.ok_or_else(|| Error::domain("variable functional evaluated without samples"))?;
                s.indicator_norm(region, self.tol)?
            }
            CubeFunctional::Custom(table) => {
                let q = dyadic_of_rect(region)
                    .ok_or_else(|| Error::domain("custom functional is tabulated on dyadic cubes only"))?;
                *table
                    .get(&q)
                    .ok_or_else(|| Error::domain(format!("custom functional has no value for {}", q.id())))?
            }
        };
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::domain(format!("a(Q) = {v} is not a positive finite number")));
        }
        Ok(v)
    }
}

/// The dyadic cube whose rectangle is exactly `r`, if any.
fn dyadic_of_rect<T: Scalar>(r: &Rect<T>) -> Option<DyadicCube> {
    let side = r.sidelength();
    let level = -side.log2().round().to_i32()?;
    let q = DyadicCube::containing(r.dim, level, &r.center());
    let qr = q.rect::<T>();
    let tol = side * lit(1e-9);
    let same = (0..r.dim).all(|a| (qr.lo[a] - r.lo[a]).abs() <= tol && (qr.hi[a] - r.hi[a]).abs() <= tol);
    same.then_some(q)
}

/// Average of `b` over `region ∩ box`, and whether the region was clipped.
fn clipped_average<T: Scalar>(b: &GridFunction<T>, region: &Rect<T>) -> Result<(T, bool)> {
    let boxed = b.grid().bbox().rect();
    let clipped = !boxed.contains_rect(region);
    Ok((b.average(region)?, clipped))
}

/// `(⨍_{Q∩box} |b − b_Q|^ϱ)^{1/ϱ}` and `b_Q`.
fn oscillation<T: Scalar>(b: &GridFunction<T>, region: &Rect<T>, rho: T) -> Result<(T, T)> {
    let cells = b.grid().overlaps(region);
    let mass: T = cells.iter().map(|c| c.1).sum();
    if !(mass > T::zero()) {
        return Err(Error::domain("cube does not meet the box"));
    }
    let mean = cells.iter().fold(T::zero(), |acc, &(i, w)| acc + w * b.value(i)) / mass;
    let mut acc = T::zero();
    for &(i, w) in &cells {
        let d = (b.value(i) - mean).abs();
        if d > T::zero() {
            acc += w * d.powf(rho);
        }
    }
    Ok(((acc / mass).powf(T::one() / rho), mean))
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolReport<T> {
    /// `max_Q a(Q)^{-1} (⨍_Q |b − b_Q|^ϱ)^{1/ϱ}` over the lattice.
    pub seminorm: T,
    /// `max a(Q')/a(Q)` over nested lattice pairs `Q' ⊆ Q` (at least 1).
    pub t_infinity: T,
    pub worst_cube: LatticeCube<T>,
    pub cubes: usize,
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho >= T::one()) || !rho.is_finite() {
        return Err(Error::domain(format!("Lipschitz seminorm needs 1 ≤ ϱ < ∞, got {rho}")));
    }
    Ok(())
}

/// Generalized Lipschitz seminorm of `b` with respect to `a`, and the
/// `T_∞` constant of `a` on the dyadic part of the lattice.
pub fn lipschitz_seminorm<T: Scalar>(
    b: &GridFunction<T>,
    a: &CubeFunctional<T>,
    rho: T,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<SymbolReport<T>> {
    check_rho(rho)?;
    let eval = a.evaluator(b.grid(), tol)?;
    let sampled = eval.sampled();
    let cubes = lattice.all_cubes();
    if cubes.is_empty() {
        return Err(Error::domain("lattice has no cubes inside the box"));
    }
    let rows: Vec<(T, T)> = cubes
        .par_iter()
        .map(|q| {
            let r = q.rect();
            let av = eval.value(sampled.as_ref(), &r)?;
            let (osc, _) = oscillation(b, &r, rho)?;
            Ok((osc / av, av))
        })
        .collect::<Result<_>>()?;
    let mut worst = 0;
    for (k, row) in rows.iter().enumerate() {
        if row.0 > rows[worst].0 {
            worst = k;
        }
    }
    // T_∞ over dyadic pairs: each cube against its lattice ancestors.
    let index: HashMap<DyadicCube, T> = cubes
        .iter()
        .zip(&rows)
        .filter_map(|(q, row)| q.dyadic().map(|d| (*d, row.1)))
        .collect();
    let mut t_inf = T::one();
    for (q, &aq) in &index {
        let mut p = *q;
        while p.level > lattice.j_min {
            p = p.parent();
            if let Some(&ap) = index.get(&p) {
                t_inf = t_inf.max(aq / ap);
            }
        }
    }
    Ok(SymbolReport { seminorm: rows[worst].0, t_infinity: t_inf, worst_cube: cubes[worst], cubes: cubes.len() })
}

/// `(‖b‖_{L^ϱ_a}, ‖b‖_{L^1_a})` on the same lattice.
pub fn seminorm_equivalence_check<T: Scalar>(
    b: &GridFunction<T>,
    a: &CubeFunctional<T>,
    rho: T,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<(T, T)> {
    let hi = lipschitz_seminorm(b, a, rho, lattice, tol)?.seminorm;
    let lo = lipschitz_seminorm(b, a, T::one(), lattice, tol)?.seminorm;
    Ok((hi, lo))
}

/// `‖χ_Q (b − b_Q)^k‖_{p(·)} / ‖χ_Q‖_{p(·)}`.
pub fn oscillation_norm_ratio<T: Scalar>(
    b: &GridFunction<T>,
    p: &ExponentField<T>,
    k: u32,
    cube: &Rect<T>,
    tol: T,
) -> Result<T> {
    check_exponent(p)?;
    let phi = GPhiFunction::power(p.clone())?;
    let sampled = SampledPhi::new(&phi, b.grid());
    oscillation_ratio_with(&sampled, b, k, cube, tol)
}

fn check_exponent<T: Scalar>(p: &ExponentField<T>) -> Result<()> {
    if !(p.p_minus() > T::one() && p.p_plus().is_finite()) {
        return Err(Error::precondition(
            "1 < p^- ≤ p^+ < ∞",
            format!("p^- = {}, p^+ = {}", p.p_minus(), p.p_plus()),
        ));
    }
    Ok(())
}

fn oscillation_ratio_with<T: Scalar>(
    sampled: &SampledPhi<'_, T>,
    b: &GridFunction<T>,
    k: u32,
    cube: &Rect<T>,
    tol: T,
) -> Result<T> {
    if k == 0 {
        return Err(Error::domain("oscillation power k must be positive"));
    }
    let mean = b.average(cube)?;
    let dev: Vec<T> = b.values().iter().map(|v| (*v - mean).abs().powi(k as i32)).collect();
    sampled.cube_ratio(&dev, cube, tol)
}

/// Per-cube `‖χ_Q(b − b_Q)^k‖_p/‖χ_Q‖_p` divided by `(a(Q)‖b‖_{L^1_a})^k`; the
/// maximum is the empirical constant of the oscillation lemma.
pub fn oscillation_lemma_constant<T: Scalar>(
    b: &GridFunction<T>,
    p: &ExponentField<T>,
    a: &CubeFunctional<T>,
    k: u32,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<T> {
    check_exponent(p)?;
    let semi = lipschitz_seminorm(b, a, T::one(), lattice, tol)?.seminorm;
    if semi == T::zero() {
        return Ok(T::zero());
    }
    let phi = GPhiFunction::power(p.clone())?;
    let sampled = SampledPhi::new(&phi, b.grid());
    let eval = a.evaluator(b.grid(), tol)?;
    let a_sampled = eval.sampled();
    let cubes = lattice.all_cubes();
    let vals: Vec<T> = cubes
        .par_iter()
        .map(|q| {
            let r = q.rect();
            let lhs = oscillation_ratio_with(&sampled, b, k, &r, tol)?;
            let scale = (eval.value(a_sampled.as_ref(), &r)? * semi).powi(k as i32);
            Ok(lhs / scale)
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedGap<T> {
    /// `|b_{3Q} − b_Q|`.
    pub gap: T,
    /// `a(3Q)`, the scale the gap is compared against.
    pub a_3q: T,
    /// `3Q` sticks out of the box; its average was taken over `3Q ∩ box`.
    pub clipped: bool,
}

pub fn nested_average_gap<T: Scalar>(
    b: &GridFunction<T>,
    a: &CubeFunctional<T>,
    cube: &DyadicCube,
    tol: T,
) -> Result<NestedGap<T>> {
    let eval = a.evaluator(b.grid(), tol)?;
    let sampled = eval.sampled();
    nested_gap_with(b, &eval, sampled.as_ref(), cube)
}

fn nested_gap_with<T: Scalar>(
    b: &GridFunction<T>,
    eval: &CubeEvaluator<'_, T>,
    sampled: Option<&SampledPhi<'_, T>>,
    cube: &DyadicCube,
) -> Result<NestedGap<T>> {
    let q = cube.rect::<T>();
    let big = cube.dilate::<T>(lit(3.0));
    let (inner, _) = clipped_average(b, &q)?;
    let (outer, clipped) = clipped_average(b, &big)?;
    let a_3q = match eval.functional {
        // 3Q is never dyadic; fall back to the enclosing ancestor two levels up.
        CubeFunctional::Custom(_) => eval.value(sampled, &cube.ancestor(cube.level - 2).rect())?,
        _ => eval.value(sampled, &big)?,
    };
    Ok(NestedGap { gap: (outer - inner).abs(), a_3q, clipped })
}

/// `max |b_{3Q} − b_Q| / (‖a‖_{t_∞} a(3Q) ‖b‖_{L^1_a})` over the dyadic lattice cubes, and
/// whether any `3Q` was clipped.
pub fn nested_gap_constant<T: Scalar>(
    b: &GridFunction<T>,
    a: &CubeFunctional<T>,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<(T, bool)> {
    let report = lipschitz_seminorm(b, a, T::one(), lattice, tol)?;
    if report.seminorm == T::zero() {
        return Ok((T::zero(), false));
    }
    let eval = a.evaluator(b.grid(), tol)?;
    let sampled = eval.sampled();
    let cubes = lattice.enumerate(None);
    let gaps: Vec<NestedGap<T>> = cubes
        .par_iter()
        .map(|q| nested_gap_with(b, &eval, sampled.as_ref(), q))
        .collect::<Result<_>>()?;
    let scale = report.t_infinity * report.seminorm;
    let worst = gaps.iter().map(|g| g.gap / (g.a_3q * scale)).fold(T::zero(), T::max);
    Ok((worst, gaps.iter().any(|g| g.clipped)))
}

/// The Diening-type power inequality `‖|f|^ν χ_Q‖_p ≤ C ‖χ_Q‖_p |f_Q|^ν`:
/// returns the largest measured `C` over lattice cubes with `f_Q ≠ 0`.
pub fn power_average_constant<T: Scalar>(
    f: &GridFunction<T>,
    p: &ExponentField<T>,
    nu: T,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<T> {
    check_exponent(p)?;
    if !(nu > T::zero() && nu < T::one()) {
        return Err(Error::domain(format!("ν must lie in (0, 1), got {nu}")));
    }
    let phi = GPhiFunction::power(p.clone())?;
    let sampled = SampledPhi::new(&phi, f.grid());
    let powered: Vec<T> = f.values().iter().map(|v| v.abs().powf(nu)).collect();
    let abs = f.abs();
    let cubes = lattice.all_cubes();
    let vals: Vec<T> = cubes
        .par_iter()
        .map(|q| {
            let r = q.rect();
            let avg = abs.average(&r)?;
            if avg == T::zero() {
                return Ok(T::zero());
            }
            Ok(sampled.cube_ratio(&powered, &r, tol)? / avg.powf(nu))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(T::zero(), T::max))
}

/// `(C₁, C₂)` for a symbol in the variable Lipschitz class:
/// `C₁ = max |b(x) − b(z)| / |x − z|^{δ(x)}` over the given cell pairs and
/// `C₂ = max |b(z) − b_Q| / ‖χ_Q‖_{n/δ(·)}` over lattice cubes and midpoints `z ∈ kQ`.
pub fn variable_lipschitz_pointwise_check<T: Scalar>(
    b: &GridFunction<T>,
    delta: &ExponentField<T>,
    pairs: &[(usize, usize)],
    k: u32,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<(T, T)> {
    let grid = *b.grid();
    let dim = grid.dim();
    let mut c1 = T::zero();
    for &(i, j) in pairs {
        let (x, z) = (grid.midpoint(i), grid.midpoint(j));
        let d = distance(dim, &x, &z);
        if d == T::zero() {
            continue;
        }
        c1 = c1.max((b.value(i) - b.value(j)).abs() / d.powf(delta.value(&x)));
    }
    if k == 0 {
        return Err(Error::domain("dilation factor k must be positive"));
    }
    let functional = CubeFunctional::from_delta(delta, &grid)?;
    let eval = functional.evaluator(&grid, tol)?;
    let sampled = eval.sampled();
    let cubes = lattice.enumerate(None);
    let vals: Vec<T> = cubes
        .par_iter()
        .map(|q| {
            let r = q.rect::<T>();
            let mean = b.average(&r)?;
            let scale = eval.value(sampled.as_ref(), &r)?;
            let far = grid
                .cells_with_midpoint_in(&q.dilate(from_usize(k as usize)))
                .into_iter()
                .map(|z| (b.value(z) - mean).abs())
                .fold(T::zero(), T::max);
            Ok(far / scale)
        })
        .collect::<Result<_>>()?;
    Ok((c1, vals.into_iter().fold(T::zero(), T::max)))
}

/// `count` random distinct cell pairs.
pub fn sample_cell_pairs<T: Scalar>(grid: &Grid<T>, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mut out = Vec::with_capacity(count);
    while out.len() < count && n > 1 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j {
            out.push((i, j));
        }
    }
    out
}

/// One term `c |x − center|^δ` of a power symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm<T> {
    pub coefficient: T,
    pub center: Point<T>,
    pub exponent: T,
}

/// `b(x) = offset + Σ cᵢ |x − xᵢ|^{δᵢ}`. With every `δᵢ ∈ (0, 1]` the symbol is
/// `min δᵢ`-Hölder with constant at most `Σ |cᵢ| diam^{δᵢ − min δ}` on the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSymbol<T> {
    pub dim: usize,
    pub offset: T,
    pub terms: Vec<PowerTerm<T>>,
}

impl<T: Scalar> PowerSymbol<T> {
    pub fn new(dim: usize, offset: T, terms: Vec<PowerTerm<T>>) -> Result<Self> {
        for t in &terms {
            if !(t.exponent > T::zero() && t.exponent <= T::one()) {
                return Err(Error::domain(format!("symbol exponents must lie in (0, 1], got {}", t.exponent)));
            }
        }
        Ok(PowerSymbol { dim, offset, terms })
    }

    pub fn constant(dim: usize, c: T) -> Self {
        PowerSymbol { dim, offset: c, terms: Vec::new() }
    }

    pub fn single(dim: usize, coefficient: T, center: Point<T>, exponent: T) -> Result<Self> {
        Self::new(dim, T::zero(), vec![PowerTerm { coefficient, center, exponent }])
    }

    pub fn eval(&self, x: &Point<T>) -> T {
        self.terms
            .iter()
            .fold(self.offset, |acc, t| acc + t.coefficient * distance(self.dim, x, &t.center).powf(t.exponent))
    }

    pub fn sample(&self, grid: &Grid<T>) -> GridFunction<T> {
        GridFunction::from_fn(*grid, |x| self.eval(x))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == T::zero())
    }

    /// Smallest term exponent (the guaranteed Hölder order); `None` for constants.
    pub fn min_exponent(&self) -> Option<T> {
        self.terms.iter().map(|t| t.exponent).reduce(T::min)
    }

    /// Hölder constant of order [`PowerSymbol::min_exponent`] valid for points at distance ≤ `diam`.
    pub fn holder_bound(&self, diam: T) -> T {
        let Some(d0) = self.min_exponent() else { return T::zero() };
        self.terms
            .iter()
            .map(|t| t.coefficient.abs() * diam.max(T::one()).powf(t.exponent - d0))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundingBox;
    use approx::assert_relative_eq;

    fn setup(cps: usize) -> (Grid<f64>, CubeLattice<f64>) {
        let bbox = BoundingBox::unit(1).unwrap();
        (Grid::new(bbox, cps).unwrap(), CubeLattice::new(bbox, 0, 6).unwrap())
    }

    #[test]
    fn constant_symbol_has_zero_seminorm() {
        let (g, lat) = setup(256);
        let b = GridFunction::constant(g, 3.0);
        let r = lipschitz_seminorm(&b, &CubeFunctional::ConstantOne, 1.0, &lat, 1e-10).unwrap();
        assert_eq!(r.seminorm, 0.0);
        assert_eq!(r.t_infinity, 1.0);
    }

    #[test]
    fn linear_symbol_oscillation_on_unit_cube() {
        let (g, lat) = setup(1024);
        let b = GridFunction::from_fn(g, |x| x[0]);
        let r = lipschitz_seminorm(&b, &CubeFunctional::ConstantOne, 1.0, &lat.with_levels(0, 0), 1e-10).unwrap();
        assert_relative_eq!(r.seminorm, 0.25, max_relative = 1e-5);
    }

    #[test]
    fn power_functional_t_infinity_is_one() {
        let (g, lat) = setup(256);
        let b = GridFunction::from_fn(g, |x| x[0].sqrt());
        let a = CubeFunctional::power(0.5).unwrap();
        let r = lipschitz_seminorm(&b, &a, 1.0, &lat, 1e-10).unwrap();
        assert_eq!(r.t_infinity, 1.0);
        assert!(r.seminorm.is_finite() && r.seminorm > 0.0);
    }

    #[test]
    fn custom_table_missing_cube_is_error() {
        let (g, lat) = setup(64);
        let b = GridFunction::from_fn(g, |x| x[0]);
        let a = CubeFunctional::Custom(Arc::new(HashMap::new()));
        assert!(lipschitz_seminorm(&b, &a, 1.0, &lat, 1e-10).is_err());
    }

    #[test]
    fn oscillation_ratio_closed_form() {
        let (g, _) = setup(2048);
        let b = GridFunction::from_fn(g, |x| x[0]);
        let p = ExponentField::constant(2.0, *g.bbox()).unwrap();
        let r = oscillation_norm_ratio(&b, &p, 1, &g.bbox().rect(), 1e-12).unwrap();
        assert_relative_eq!(r, 12f64.powf(-0.5), max_relative = 1e-5);
    }

    #[test]
    fn nested_gap_symmetric_cube() {
        let bbox = BoundingBox::from_bounds(1, -1.0, 2.0).unwrap();
        let g = Grid::new(bbox, 1024).unwrap();
        let b = GridFunction::from_fn(g, |x| x[0]);
        let q = DyadicCube::new(1, 1, [0, 0]);
        let gap = nested_average_gap(&b, &CubeFunctional::ConstantOne, &q, 1e-10).unwrap();
        assert!(gap.gap < 1e-4);
        assert!(!gap.clipped);
    }

    #[test]
    fn custom_functional_looks_up_dyadic_cubes() {
        let (g, lat) = setup(64);
        let mut table = HashMap::new();
        for q in lat.enumerate(None) {
            table.insert(q, 1.0);
        }
        let a = CubeFunctional::Custom(Arc::new(table));
        let b = GridFunction::from_fn(g, |x| x[0]);
        let r = lipschitz_seminorm(&b, &a, 1.0, &lat, 1e-10).unwrap();
        let r1 = lipschitz_seminorm(&b, &CubeFunctional::ConstantOne, 1.0, &lat, 1e-10).unwrap();
        assert_eq!(r.seminorm, r1.seminorm);
    }

    #[test]
    fn holder_half_symbol() {
        let (g, lat) = setup(256);
        let sym = PowerSymbol::single(1, 1.0, [0.0, 0.0], 0.5).unwrap();
        let b = sym.sample(&g);
        let bbox = *g.bbox();
        let delta = ExponentField::nonnegative(crate::exponent::ExponentKind::Constant(0.5), bbox).unwrap();
        let pairs = sample_cell_pairs(&g, 2000, 1);
        let (c1, c2) = variable_lipschitz_pointwise_check(&b, &delta, &pairs, 3, &lat, 1e-10).unwrap();
        assert!(c1 <= 1.0 + 1e-12);
        assert!(c2.is_finite());
    }
}
