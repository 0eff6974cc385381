//! Certifiers for the two-weight Fefferman–Phong cube conditions and for
//! condition F on triples of G-Φ functions.
//!
//! Every supremum over cubes is taken over a finite lattice, so each reported
//! constant is a lower bound for the true one; refinement sweeps expose
//! divergence.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{distance, CubeLattice, Grid, GridFunction, LatticeCube, Point, Rect};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::gphi::{default_conjugate_grid, geometric_grid, GPhiFunction, PhiTriple};
use crate::operators::Kernel;
use crate::scalar::{lit, Scalar};
use crate::spaces::{luxemburg_norm, SampledPhi};
use crate::symbols::CubeFunctional;

/// The weights `(v, w)`: `v` on the source side, `w` on the target side.
#[derive(Debug, Clone)]
pub struct WeightPair<T> {
    pub v: GridFunction<T>,
    pub w: GridFunction<T>,
}

impl<T: Scalar> WeightPair<T> {
    pub fn new(v: GridFunction<T>, w: GridFunction<T>) -> Result<Self> {
        if v.grid() != w.grid() {
            return Err(Error::domain("weights live on different grids"));
        }
        for (name, f) in [("v", &v), ("w", &w)] {
            if f.values().iter().any(|x| !(*x > T::zero()) || !x.is_finite()) {
                return Err(Error::domain(format!("weight {name} must be positive and finite at every sample")));
            }
        }
        Ok(WeightPair { v, w })
    }

    pub fn unit(grid: Grid<T>) -> Self {
        WeightPair { v: GridFunction::constant(grid, T::one()), w: GridFunction::constant(grid, T::one()) }
    }

    pub fn grid(&self) -> &Grid<T> {
        self.v.grid()
    }
}

/// `|x − center|^γ` at the cell midpoints.
pub fn power_weight<T: Scalar>(grid: &Grid<T>, center: Point<T>, gamma: T) -> Result<GridFunction<T>> {
    let dim = grid.dim();
    let f = GridFunction::from_fn(*grid, |x| distance(dim, x, &center).powf(gamma));
    if f.values().iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
        return Err(Error::domain("power weight vanishes or blows up at a cell midpoint"));
    }
    Ok(f)
}

/// One cube of a Fefferman–Phong report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FPRow<T> {
    pub cube: LatticeCube<T>,
    pub level: i32,
    /// `a(Q)^m` or `‖χ_Q‖_{n/δ}^m`.
    pub symbol_factor: T,
    /// `K̃(ℓ(Q))`.
    pub kernel_factor: T,
    /// `‖χ_Q‖_q / ‖χ_Q‖_p`.
    pub exponent_factor: T,
    /// Localized average of `v^{-1}`.
    pub v_factor: T,
    /// Localized average of `w`.
    pub w_factor: T,
    pub product: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FPReport<T> {
    pub kappa: T,
    pub worst_cube: LatticeCube<T>,
    pub rows: Vec<FPRow<T>>,
}

#[derive(Serialize)]
struct FPSummary<'a, T> {
    kappa: T,
    worst_cube: String,
    worst_level: i32,
    cubes: usize,
    levels: &'a [(i32, T)],
}

impl<T: Scalar + Serialize> FPReport<T> {
    fn from_rows(rows: Vec<FPRow<T>>) -> Result<Self> {
        let mut worst = 0;
        for (i, r) in rows.iter().enumerate() {
            if r.product > rows[worst].product {
                worst = i;
            }
        }
        let first = rows.get(worst).ok_or_else(|| Error::domain("lattice has no cubes"))?;
        Ok(FPReport { kappa: first.product, worst_cube: first.cube, rows })
    }

    /// `(level, max product on that level)`, coarse to fine.
    pub fn level_profile(&self) -> Vec<(i32, T)> {
        let mut out: Vec<(i32, T)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|(l, _)| *l == r.level) {
                Some(e) => e.1 = e.1.max(r.product),
                None => out.push((r.level, r.product)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    /// CSV: cube id, level, each factor, product.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["cube", "level", "symbol", "kernel", "exponent", "v", "w", "product"])?;
        for r in &self.rows {
            wr.write_record([
                r.cube.id(),
                r.level.to_string(),
                fmt17(r.symbol_factor),
                fmt17(r.kernel_factor),
                fmt17(r.exponent_factor),
                fmt17(r.v_factor),
                fmt17(r.w_factor),
                fmt17(r.product),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn summary_json(&self) -> Result<String> {
        let levels = self.level_profile();
        let s = FPSummary {
            kappa: self.kappa,
            worst_cube: self.worst_cube.id(),
            worst_level: self.worst_cube.level(),
            cubes: self.rows.len(),
            levels: &levels,
        };
        serde_json::to_string_pretty(&s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Seventeen significant digits, the round-trip precision of `f64`.
pub fn fmt17<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

/// `p ≤ q` at every cell midpoint.
fn check_ordered<T: Scalar>(p: &ExponentField<T>, q: &ExponentField<T>, grid: &Grid<T>) -> Result<()> {
    for x in grid.midpoints() {
        let (a, b) = (p.value(&x), q.value(&x));
        if a > b * (T::one() + T::min_rel_tol()) {
            return Err(Error::precondition("p(·) ≤ q(·)", format!("p = {a} > q = {b} at {:?}", x)));
        }
    }
    Ok(())
}

/// `‖f‖ < ∞` on the box: the computable meaning of local integrability.
fn check_local<T: Scalar>(name: &str, p: &ExponentField<T>, f: &GridFunction<T>, tol: T) -> Result<()> {
    let phi = GPhiFunction::power(p.clone())?;
    let n = luxemburg_norm(&phi, f, tol)?.value;
    if !n.is_finite() {
        return Err(Error::precondition(format!("{name} locally integrable"), format!("norm on the box is {n}")));
    }
    Ok(())
}

fn check_local_phi<T: Scalar>(name: &str, phi: &GPhiFunction<T>, f: &GridFunction<T>, tol: T) -> Result<()> {
    let n = luxemburg_norm(phi, f, tol)?.value;
    if !n.is_finite() {
        return Err(Error::precondition(format!("{name} locally integrable"), format!("norm on the box is {n}")));
    }
    Ok(())
}

/// Shared per-cube machinery: symbol factor is supplied by the caller.
struct CubeFactors<'a, T> {
    p: SampledPhi<'a, T>,
    q: SampledPhi<'a, T>,
    a: SampledPhi<'a, T>,
    e: SampledPhi<'a, T>,
    v_inv: Vec<T>,
    w: Vec<T>,
    tol: T,
}

impl<T: Scalar> CubeFactors<'_, T> {
    fn row<F>(&self, cube: LatticeCube<T>, kernel: &Kernel<T>, symbol: F) -> Result<FPRow<T>>
    where
        F: Fn(&Rect<T>) -> Result<T>,
    {
        let r = cube.rect();
        let symbol_factor = symbol(&r)?;
        let kernel_factor = kernel.k_tilde(r.sidelength());
        let exponent_factor = self.q.indicator_norm(&r, self.tol)? / self.p.indicator_norm(&r, self.tol)?;
        let v_factor = self.a.cube_ratio(&self.v_inv, &r, self.tol)?;
        let w_factor = self.e.cube_ratio(&self.w, &r, self.tol)?;
        let product = symbol_factor * kernel_factor * exponent_factor * v_factor * w_factor;
        Ok(FPRow { cube, level: cube.level(), symbol_factor, kernel_factor, exponent_factor, v_factor, w_factor, product })
    }
}

/// Parameters of the first theorem's cube condition.
#[derive(Debug, Clone)]
pub struct Thm11Params<'a, T> {
    pub p: &'a ExponentField<T>,
    pub q: &'a ExponentField<T>,
    pub r: T,
    pub s: T,
    pub a: &'a CubeFunctional<T>,
    pub m: u32,
    pub kernel: &'a Kernel<T>,
}

/// `κ = max_Q a(Q)^m K̃(ℓ(Q)) (‖χ_Q‖_q/‖χ_Q‖_p)(‖χ_Q v^{-1}‖_{Rp'}/‖χ_Q‖_{Rp'})(‖χ_Q w‖_{Sq}/‖χ_Q‖_{Sq})`.
pub fn fefferman_phong_thm11<T: Scalar + Serialize>(
    params: &Thm11Params<'_, T>,
    weights: &WeightPair<T>,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<FPReport<T>> {
    let Thm11Params { p, q, r, s, a, m, kernel } = params.clone();
    let grid = *weights.grid();
    if !(p.p_minus() > T::one()) {
        return Err(Error::precondition("1 < p^-", format!("p^- = {}", p.p_minus())));
    }
    if !q.p_plus().is_finite() {
        return Err(Error::precondition("q^+ < ∞", "q^+ is infinite"));
    }
    check_ordered(p, q, &grid)?;
    let pc = p.conjugate()?;
    let r_bound = pc.p_plus() / pc.p_minus();
    if !(r > r_bound) {
        return Err(Error::precondition("R > (p')^+/(p')^-", format!("R = {r}, bound = {r_bound}")));
    }
    let s_bound = q.p_plus() / q.p_minus();
    if !(s > s_bound) {
        return Err(Error::precondition("S > q^+/q^-", format!("S = {s}, bound = {s_bound}")));
    }
    let a_phi = GPhiFunction::power(pc.scale(r)?)?;
    let e_phi = GPhiFunction::power(q.scale(s)?)?;
    check_local("v ∈ L^{p(·)}", p, &weights.v, tol)?;
    check_local_phi("w ∈ L^{Sq(·)}", &e_phi, &weights.w, tol)?;
    certify(p, q, &a_phi, &e_phi, kernel, weights, lattice, tol, |eval, sampled, r| {
        if m == 0 {
            Ok(T::one())
        } else {
            Ok(eval.value(sampled, r)?.powi(m as i32))
        }
    }, Some(a))
}

/// Parameters of the second theorem's cube condition.
#[derive(Debug, Clone)]
pub struct Thm12Params<'a, T> {
    pub p: &'a ExponentField<T>,
    pub q: &'a ExponentField<T>,
    pub delta: &'a ExponentField<T>,
    pub m: u32,
    pub kernel: &'a Kernel<T>,
    pub a_phi: &'a GPhiFunction<T>,
    pub e_phi: &'a GPhiFunction<T>,
}

/// `κ = max_Q ‖χ_Q‖_{n/δ}^m K̃(ℓ(Q)) (‖χ_Q‖_q/‖χ_Q‖_p)(‖χ_Q v^{-1}‖_A/‖χ_Q‖_A)(‖χ_Q w‖_E/‖χ_Q‖_E)`.
/// `δ ≡ 0` gives the factor `‖χ_Q‖_∞^m = 1`.
pub fn fefferman_phong_thm12<T: Scalar + Serialize>(
    params: &Thm12Params<'_, T>,
    weights: &WeightPair<T>,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<FPReport<T>> {
    let Thm12Params { p, q, delta, m, kernel, a_phi, e_phi } = params.clone();
    let grid = *weights.grid();
    check_ordered(p, q, &grid)?;
    check_local("v ∈ L^{p(·)}", p, &weights.v, tol)?;
    let vanishing = delta.p_plus() == T::zero();
    let functional = if m == 0 || vanishing {
        None
    } else if delta.p_minus() > T::zero() {
        Some(CubeFunctional::from_delta(delta, &grid)?)
    } else {
        return Err(Error::domain("δ(·) must be identically zero or bounded away from zero"));
    };
    certify(p, q, a_phi, e_phi, kernel, weights, lattice, tol, |eval, sampled, r| {
        if functional.is_none() {
            Ok(T::one())
        } else {
            Ok(eval.value(sampled, r)?.powi(m as i32))
        }
    }, functional.as_ref())
}

#[allow(clippy::too_many_arguments)]
fn certify<T, F>(
    p: &ExponentField<T>,
    q: &ExponentField<T>,
    a_phi: &GPhiFunction<T>,
    e_phi: &GPhiFunction<T>,
    kernel: &Kernel<T>,
    weights: &WeightPair<T>,
    lattice: &CubeLattice<T>,
    tol: T,
    symbol: F,
    functional: Option<&CubeFunctional<T>>,
) -> Result<FPReport<T>>
where
    T: Scalar + Serialize,
    F: Fn(&crate::symbols::CubeEvaluator<'_, T>, Option<&SampledPhi<'_, T>>, &Rect<T>) -> Result<T> + Sync,
{
    let grid = *weights.grid();
    if kernel.dim() != grid.dim() {
        return Err(Error::domain("kernel and weights have different dimensions"));
    }
    let p_phi = GPhiFunction::power(p.clone())?;
    let q_phi = GPhiFunction::power(q.clone())?;
    let factors = CubeFactors {
        p: SampledPhi::new(&p_phi, &grid),
        q: SampledPhi::new(&q_phi, &grid),
        a: SampledPhi::new(a_phi, &grid),
        e: SampledPhi::new(e_phi, &grid),
        v_inv: weights.v.values().iter().map(|v| T::one() / *v).collect(),
        w: weights.w.values().to_vec(),
        tol,
    };
    let one = CubeFunctional::ConstantOne;
    let eval = functional.unwrap_or(&one).evaluator(&grid, tol)?;
    let sampled = eval.sampled();
    let rows: Vec<FPRow<T>> = lattice
        .all_cubes()
        .par_iter()
        .map(|c| factors.row(*c, kernel, |r| symbol(&eval, sampled.as_ref(), r)))
        .collect::<Result<_>>()?;
    FPReport::from_rows(rows)
}

/// Sampling choices for condition F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionFOptions<T> {
    pub t_range: (T, T),
    pub refined_t_range: (T, T),
    pub t_points: usize,
    /// Extra lattice levels in the refined sweep.
    pub extra_levels: i32,
    /// Largest allowed relative growth of a bound under refinement.
    pub stability: T,
    /// At most this many sample points `x` for item (ii).
    pub x_samples: usize,
    pub tol: T,
}

impl<T: Scalar> Default for ConditionFOptions<T> {
    fn default() -> Self {
        ConditionFOptions {
            t_range: (lit(1e-6), lit(1e6)),
            refined_t_range: (lit(1e-8), lit(1e8)),
            t_points: 241,
            extra_levels: 2,
            stability: lit(0.25),
            x_samples: 256,
            tol: lit(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionFItem<T> {
    pub bound: T,
    pub refined: T,
    pub pass: bool,
}

impl<T: Scalar> ConditionFItem<T> {
    fn new(bound: T, refined: T, stability: T) -> Self {
        let pass = bound.is_finite() && refined.is_finite() && refined <= bound * (T::one() + stability);
        ConditionFItem { bound, refined, pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionFReport<T> {
    /// `max ‖χ_Q‖_A ‖χ_Q‖_B / ‖χ_Q‖_D`.
    pub norms: ConditionFItem<T>,
    /// `max A^{-1}(x,t) B^{-1}(x,t) / D^{-1}(x,t)`.
    pub inverses: ConditionFItem<T>,
    /// `max ‖χ_Q‖_D ‖χ_Q‖_{D*} / |Q|`.
    pub duality: ConditionFItem<T>,
}

impl<T: Scalar> ConditionFReport<T> {
    pub fn pass(&self) -> bool {
        self.norms.pass && self.inverses.pass && self.duality.pass
    }
}

pub fn check_condition_f<T: Scalar>(
    triple: &PhiTriple<T>,
    grid: &Grid<T>,
    lattice: &CubeLattice<T>,
    opts: &ConditionFOptions<T>,
) -> Result<ConditionFReport<T>> {
    let refined_lattice = lattice.with_levels(lattice.j_min, lattice.j_max + opts.extra_levels);
    let (n0, d0) = cube_items(triple, grid, lattice, opts.tol)?;
    let (n1, d1) = cube_items(triple, grid, &refined_lattice, opts.tol)?;
    let xs = sample_midpoints(grid, opts.x_samples);
    let i0 = inverse_item(triple, &xs, opts.t_range, opts.t_points, opts.tol);
    let i1 = inverse_item(triple, &xs, opts.refined_t_range, opts.t_points, opts.tol);
    Ok(ConditionFReport {
        norms: ConditionFItem::new(n0, n1, opts.stability),
        inverses: ConditionFItem::new(i0, i1, opts.stability),
        duality: ConditionFItem::new(d0, d1, opts.stability),
    })
}

fn cube_items<T: Scalar>(triple: &PhiTriple<T>, grid: &Grid<T>, lattice: &CubeLattice<T>, tol: T) -> Result<(T, T)> {
    let d_star = triple.d.conjugate(default_conjugate_grid());
    let sa = SampledPhi::new(&triple.a, grid);
    let sb = SampledPhi::new(&triple.b, grid);
    let sd = SampledPhi::new(&triple.d, grid);
    let sds = SampledPhi::new(&d_star, grid);
    let vals: Vec<(T, T)> = lattice
        .all_cubes()
        .par_iter()
        .map(|c| {
            let r = c.rect();
            let nd = sd.indicator_norm(&r, tol)?;
            let first = sa.indicator_norm(&r, tol)? * sb.indicator_norm(&r, tol)? / nd;
            let measure = r.intersect(&grid.bbox().rect()).map_or(T::zero(), |x| x.measure());
            let third = nd * sds.indicator_norm(&r, tol)? / measure;
            Ok((first, third))
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold((T::zero(), T::zero()), |acc, v| (acc.0.max(v.0), acc.1.max(v.1))))
}

fn sample_midpoints<T: Scalar>(grid: &Grid<T>, cap: usize) -> Vec<Point<T>> {
    let stride = grid.len().div_ceil(cap.max(1)).max(1);
    (0..grid.len()).step_by(stride).map(|i| grid.midpoint(i)).collect()
}

fn inverse_item<T: Scalar>(triple: &PhiTriple<T>, xs: &[Point<T>], range: (T, T), points: usize, tol: T) -> T {
    let ts = geometric_grid(range.0, range.1, points);
    xs.par_iter()
        .map(|x| {
            let (a, b, d) = (triple.a.local(x), triple.b.local(x), triple.d.local(x));
            ts.iter()
                .map(|&t| a.inverse(t, tol) * b.inverse(t, tol) / d.inverse(t, tol))
                .fold(T::zero(), T::max)
        })
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::zero(), T::max)
}

/// The triple `A = B = D = t^2`, which violates item (ii).
pub fn quadratic_triple<T: Scalar>(grid: &Grid<T>) -> Result<PhiTriple<T>> {
    let sq = GPhiFunction::constant(lit(2.0), T::zero(), *grid.bbox())?;
    Ok(PhiTriple { a: sq.clone(), b: sq.clone(), d: sq })
}

/// Conjugation grid shared with the duality checks.
pub fn conjugate_grid<T: Scalar>() -> Arc<Vec<T>> {
    default_conjugate_grid()
}
