//! The dyadic majorant of a commutator, Calderón–Zygmund stopping families
//! and the cube-sum estimates that drive the two-weight proofs.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{CubeLattice, DyadicCube, GridFunction, Rect};
use crate::error::{Error, Result};
use crate::exponent::ExponentField;
use crate::gphi::GPhiFunction;
use crate::operators::Kernel;
use crate::scalar::{from_usize, lit, pow2, Scalar};
use crate::spaces::SampledPhi;

/// Binomial coefficient as a scalar.
fn binomial<T: Scalar>(m: u32, j: u32) -> T {
    (0..j).fold(T::one(), |acc, i| acc * from_usize::<T>((m - i) as usize) / from_usize((i + 1) as usize))
}

#[derive(Debug, Clone)]
pub struct Majorant<T> {
    /// `Σ_Q K̄(ℓ(Q)/2) Σ_j C(m,j) |b(x) − b_Q|^{m−j} χ_Q(x) ∫_{3Q} |b − b_Q|^j f` at every midpoint.
    pub values: GridFunction<T>,
    /// Per-point allowance for the part of the integral finer than the lattice and
    /// for kernel quadrature: `K̃(ℓ_min/2)|f(x)|` when `m = 0`, plus a relative term.
    pub slack: GridFunction<T>,
    /// Relative quadrature allowance applied to `|T^{b,m} f|`.
    pub relative_slack: T,
    /// Some `3Q` with `f ≠ 0` on it left the box.
    pub clipped: bool,
}

impl<T: Scalar> Majorant<T> {
    /// Cells where `|t| > majorant + slack + relative·|t|`.
    pub fn violations(&self, t: &GridFunction<T>) -> Vec<usize> {
        (0..t.len())
            .filter(|&i| {
                let v = t.value(i).abs();
                v > self.values.value(i) + self.slack.value(i) + self.relative_slack * v
            })
            .collect()
    }
}

struct CubeData<T> {
    mean: T,
    weight: T,
    moments: Vec<T>,
    clipped: bool,
}

/// The dyadic majorant over the levels `j_min..=j_max` of `lattice`.
///
/// Every pair `x ≠ y` with `ℓ_min/2 < |x − y| ≤ 2^{−j_min}` is charged to the cube
/// `Q ∋ x` with `ℓ(Q)/2 < |x − y| ≤ ℓ(Q)`; then `y ∈ 3Q` and `K(x − y) ≤ K̄(ℓ(Q)/2)`.
/// The lattice must therefore reach the box diameter at the top and the cell
/// size at the bottom.
pub fn dyadic_majorant<T: Scalar>(
    kernel: &Kernel<T>,
    b: &GridFunction<T>,
    m: u32,
    f: &GridFunction<T>,
    lattice: &CubeLattice<T>,
) -> Result<Majorant<T>> {
    let grid = *f.grid();
    if b.grid() != f.grid() || kernel.dim() != grid.dim() {
        return Err(Error::domain("kernel, symbol and function must share one grid"));
    }
    if f.values().iter().any(|v| *v < T::zero()) {
        return Err(Error::domain("the majorant is stated for f ≥ 0"));
    }
    let top = pow2::<T>(-lattice.j_min);
    if top < grid.bbox().diameter() {
        return Err(Error::domain(format!(
            "top lattice level 2^{} is smaller than the box diameter",
            -lattice.j_min
        )));
    }
    let finest = pow2::<T>(-lattice.j_max);
    if finest > grid.cell_side() * (T::one() + lit(1e-12)) {
        return Err(Error::domain("finest lattice level is coarser than a grid cell"));
    }
    let dim = grid.dim();
    let boxed = grid.bbox().rect();
    let midpoints = grid.midpoints();
    let mut values = vec![T::zero(); grid.len()];
    let mut clipped = false;
    for level in lattice.j_min..=lattice.j_max {
        let cubes: Vec<DyadicCube> = {
            let set: HashSet<DyadicCube> = midpoints.iter().map(|x| DyadicCube::containing(dim, level, x)).collect();
            let mut v: Vec<DyadicCube> = set.into_iter().collect();
            v.sort();
            v
        };
        let data: HashMap<DyadicCube, CubeData<T>> = cubes
            .par_iter()
            .map(|q| {
                let r = q.rect::<T>();
                let mean = b.average(&r)?;
                let big = q.dilate::<T>(lit(3.0));
                let mut moments = vec![T::zero(); m as usize + 1];
                let mut touched = false;
                for (i, w) in grid.overlaps(&big) {
                    let fi = f.value(i);
                    if fi == T::zero() {
                        continue;
                    }
                    touched = true;
                    let d = (b.value(i) - mean).abs();
                    let mut pw = T::one();
                    for mj in moments.iter_mut() {
                        *mj += pw * fi * w;
                        pw *= d;
                    }
                }
                let weight = kernel.k_bar(q.side::<T>() / lit(2.0));
                let out = touched && !boxed.contains_rect(&big);
                Ok((*q, CubeData { mean, weight, moments, clipped: out }))
            })
            .collect::<Result<_>>()?;
        clipped |= data.values().any(|d| d.clipped);
        values.par_iter_mut().enumerate().for_each(|(i, acc)| {
            let q = DyadicCube::containing(dim, level, &midpoints[i]);
            let d = &data[&q];
            if d.moments[0] == T::zero() {
                return;
            }
            let dx = (b.value(i) - d.mean).abs();
            let mut s = T::zero();
            for j in 0..=m {
                s += binomial::<T>(m, j) * dx.powi((m - j) as i32) * d.moments[j as usize];
            }
            *acc += d.weight * s;
        });
    }
    let self_mass = if m == 0 { kernel.k_tilde(finest / lit(2.0)) } else { T::zero() };
    let slack = f.map(|v| self_mass * v.abs());
    let relative_slack = if dim == 1 { lit(1e-9) } else { lit(1e-4) };
    Ok(Majorant { values: GridFunction::new(grid, values)?, slack, relative_slack, clipped })
}

/// Per-cube data memoized before the stopping construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeRecord<T> {
    pub cube: DyadicCube,
    /// `G(Q) = ‖χ_Q gw‖_τ / ‖χ_Q‖_τ`.
    pub g: T,
    /// `‖χ_Q‖_τ`.
    pub norm: T,
    /// `‖χ_Q‖_{τ'}`.
    pub dual_norm: T,
}

/// `G`, `‖χ_Q‖_τ` and `‖χ_Q‖_{τ'}` for every dyadic lattice cube.
pub fn cube_table<T: Scalar>(
    tau: &ExponentField<T>,
    gw: &GridFunction<T>,
    lattice: &CubeLattice<T>,
    tol: T,
) -> Result<Vec<CubeRecord<T>>> {
    if !(tau.p_minus() > T::one()) {
        return Err(Error::precondition("1 < τ^-", format!("τ^- = {}", tau.p_minus())));
    }
    let phi = GPhiFunction::power(tau.clone())?;
    let dual = GPhiFunction::power(tau.conjugate()?)?;
    let s = SampledPhi::new(&phi, gw.grid());
    let sd = SampledPhi::new(&dual, gw.grid());
    let abs: Vec<T> = gw.values().iter().map(|v| v.abs()).collect();
    lattice
        .enumerate(None)
        .par_iter()
        .map(|q| {
            let r = q.rect::<T>();
            let norm = s.indicator_norm(&r, tol)?;
            if !(norm > T::zero()) {
                return Err(Error::domain(format!("lattice cube {} misses the box", q.id())));
            }
            let g = s.restricted_norm(&abs, &r, tol)? / norm;
            Ok(CubeRecord { cube: *q, g, norm, dual_norm: sd.indicator_norm(&r, tol)? })
        })
        .collect()
}

/// The class `k` with `α^k < g ≤ α^{k+1}`.
pub fn stopping_class<T: Scalar>(g: T, alpha: T) -> Option<i32> {
    if !(g > T::zero()) || !g.is_finite() {
        return None;
    }
    let mut k = (g.ln() / alpha.ln()).floor().to_i32()?;
    while alpha.powi(k) >= g {
        k -= 1;
    }
    while alpha.powi(k + 1) < g {
        k += 1;
    }
    Some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingCube<T> {
    pub cube: DyadicCube,
    pub g: T,
    pub measure: T,
    /// `|Q_{k,j} ∩ D_{k+1}|`.
    pub inner: T,
    /// `|F_{k,j}|`.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingLevel<T> {
    pub k: i32,
    pub cubes: Vec<StoppingCube<T>>,
}

/// Constants measured on the lattice that bound the packing ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PackingConstants<T> {
    /// `max ‖χ_{Q̂}‖_τ / ‖χ_Q‖_τ` over cubes `Q` with lattice parent `Q̂`.
    pub c_tau: T,
    /// `max |Q| / (‖χ_Q‖_τ ‖χ_Q‖_{τ'})`.
    pub c_lower: T,
    /// `max ‖χ_Q‖_τ ‖χ_Q‖_{τ'} / |Q|`.
    pub c_upper: T,
    /// Largest disjoint-sum ratio met by the family itself.
    pub g_tau: T,
}

impl<T: Scalar> PackingConstants<T> {
    pub fn product(&self) -> T {
        self.c_tau * self.c_lower * self.c_upper * self.g_tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoppingChecks<T> {
    pub maximal_disjoint: bool,
    pub residuals_disjoint: bool,
    pub packing_below_alpha: bool,
    /// `|Q ∩ D_{k+1}| < (Π/α)|Q|` on every checked cube.
    pub inner_bound: bool,
    /// `|Q| < (1 − Π/α)^{-1} |F|` on every checked cube.
    pub residual_bound: bool,
    /// `α^k < G(Q) ≤ C_τ α^k` on every checked cube.
    pub sandwich: bool,
    /// `max α |Q ∩ D_{k+1}| / |Q|`, the packing actually realized.
    pub empirical_packing: T,
}

impl<T: Scalar> StoppingChecks<T> {
    pub fn all_pass(&self) -> bool {
        self.maximal_disjoint
            && self.residuals_disjoint
            && self.packing_below_alpha
            && self.inner_bound
            && self.residual_bound
            && self.sandwich
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingFamily<T> {
    pub alpha: T,
    /// `Π = C_τ · C_lower · C_upper · G_τ`.
    pub pi: T,
    pub constants: PackingConstants<T>,
    /// Largest class among the top (parentless) cubes. That level is built and
    /// checked for disjointness, but its cubes have no lattice parent to
    /// certify the upper sandwich, so the measure bounds start one level above.
    pub top_class: i32,
    pub levels: Vec<StoppingLevel<T>>,
    pub checks: StoppingChecks<T>,
}

impl<T: Scalar> StoppingFamily<T> {
    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Maximal cubes with `G(Q) > α^k`, chosen top-down on the truncated lattice.
pub fn build_stopping_family<T: Scalar>(table: &[CubeRecord<T>], alpha: T) -> Result<StoppingFamily<T>> {
    if !(alpha > T::one()) {
        return Err(Error::domain(format!("stopping base must exceed 1, got {alpha}")));
    }
    if table.iter().any(|r| r.g < T::zero() || !r.g.is_finite()) {
        return Err(Error::domain("cube functional must be finite and nonnegative"));
    }
    let index: HashMap<DyadicCube, &CubeRecord<T>> = table.iter().map(|r| (r.cube, r)).collect();
    let has_parent = |q: &DyadicCube| index.contains_key(&q.parent());

    let mut c_tau = T::one();
    let mut c_lower = T::zero();
    let mut c_upper = T::zero();
    for r in table {
        let m = r.cube.measure::<T>();
        let prod = r.norm * r.dual_norm;
        c_lower = c_lower.max(m / prod);
        c_upper = c_upper.max(prod / m);
        if let Some(p) = index.get(&r.cube.parent()) {
            c_tau = c_tau.max(p.norm / r.norm);
        }
    }

    let classes: Vec<i32> = table.iter().filter_map(|r| stopping_class(r.g, alpha)).collect();
    let top_class = table
        .iter()
        .filter(|r| !has_parent(&r.cube))
        .filter_map(|r| stopping_class(r.g, alpha))
        .max();
    let (Some(top_class), Some(&k_max)) = (top_class, classes.iter().max()) else {
        return Err(Error::domain("cube functional vanishes on every top cube"));
    };

    // Selected cubes per level: G > α^k and no lattice ancestor with G > α^k.
    let mut order: Vec<&CubeRecord<T>> = table.iter().collect();
    order.sort_by_key(|r| (r.cube.level, r.cube.index));
    let mut selected: BTreeMap<i32, Vec<DyadicCube>> = BTreeMap::new();
    for k in top_class..=k_max {
        let threshold = alpha.powi(k);
        let mut covered: HashSet<DyadicCube> = HashSet::new();
        let mut chosen = Vec::new();
        for r in &order {
            let q = r.cube;
            let mut p = q;
            let mut inside = false;
            while index.contains_key(&p.parent()) {
                p = p.parent();
                if covered.contains(&p) {
                    inside = true;
                    break;
                }
            }
            if !inside && r.g > threshold {
                covered.insert(q);
                chosen.push(q);
            }
        }
        selected.insert(k, chosen);
    }

    // Disjointness at fixed k and nesting of D_{k+1} in D_k.
    let mut maximal_disjoint = true;
    for cubes in selected.values() {
        let set: HashSet<&DyadicCube> = cubes.iter().collect();
        for q in cubes {
            let mut p = *q;
            while index.contains_key(&p.parent()) {
                p = p.parent();
                if set.contains(&p) {
                    maximal_disjoint = false;
                }
            }
        }
    }

    let mut levels = Vec::new();
    let mut g_tau = T::zero();
    for (&k, cubes) in &selected {
        let next = selected.get(&(k + 1)).cloned().unwrap_or_default();
        let mut out = Vec::with_capacity(cubes.len());
        for q in cubes {
            let children: Vec<&DyadicCube> = next.iter().filter(|c| c.is_within(q)).collect();
            let measure = q.measure::<T>();
            let inner: T = children.iter().map(|c| c.measure::<T>()).sum();
            let rec = index[q];
            if !children.is_empty() && k > top_class {
                let lhs: T = children.iter().map(|c| index[*c].g * index[*c].norm * index[*c].dual_norm).sum();
                g_tau = g_tau.max(lhs / (rec.g * rec.norm * rec.dual_norm));
            }
            out.push(StoppingCube { cube: *q, g: rec.g, measure, inner, residual: measure - inner });
        }
        levels.push(StoppingLevel { k, cubes: out });
    }
    let constants = PackingConstants { c_tau, c_lower, c_upper, g_tau: g_tau.max(T::one()) };
    let pi = constants.product();

    let residuals_disjoint = residuals_disjoint(&levels, &index);
    let mut inner_bound = true;
    let mut residual_bound = true;
    let mut sandwich = true;
    let mut empirical = T::zero();
    let ratio = pi / alpha;
    for lvl in levels.iter().filter(|l| l.k > top_class) {
        let ak = alpha.powi(lvl.k);
        for c in &lvl.cubes {
            empirical = empirical.max(alpha * c.inner / c.measure);
            inner_bound &= c.inner < ratio * c.measure;
            residual_bound &= ratio < T::one() && c.measure < c.residual / (T::one() - ratio);
            sandwich &= ak < c.g && c.g <= c_tau * ak * (T::one() + lit(1e-9));
        }
    }
    let checks = StoppingChecks {
        maximal_disjoint,
        residuals_disjoint,
        packing_below_alpha: pi < alpha,
        inner_bound,
        residual_bound,
        sandwich,
        empirical_packing: empirical,
    };
    Ok(StoppingFamily { alpha, pi, constants, top_class, levels, checks })
}

/// Every finest-level lattice cube under a selected cube lies in at most one `F_{k,j}`.
fn residuals_disjoint<T: Scalar>(levels: &[StoppingLevel<T>], index: &HashMap<DyadicCube, &CubeRecord<T>>) -> bool {
    let sets: Vec<HashSet<DyadicCube>> =
        levels.iter().map(|l| l.cubes.iter().map(|c| c.cube).collect()).collect();
    let Some(finest) = index.keys().map(|q| q.level).max() else { return true };
    let member = |set: &HashSet<DyadicCube>, leaf: &DyadicCube| {
        let mut p = *leaf;
        loop {
            if set.contains(&p) {
                return true;
            }
            if !index.contains_key(&p.parent()) {
                return false;
            }
            p = p.parent();
        }
    };
    index.keys().filter(|q| q.level == finest).all(|leaf| {
        let mut count = 0;
        for (i, set) in sets.iter().enumerate() {
            let in_d = member(set, leaf);
            let in_next = sets.get(i + 1).is_some_and(|s| member(s, leaf));
            if in_d && !in_next {
                count += 1;
            }
        }
        count <= 1
    })
}

/// `(Σ_{Q ⊆ Q₀} K̄(ℓ(Q)/2)|3Q||Q| ‖χ_{3Q}f‖_ω/‖χ_{3Q}‖_ω,
///   K̃(δ(1+ε)ℓ(Q₀))|3Q₀| ‖χ_{3Q₀}f‖_ω/‖χ_{3Q₀}‖_ω)`, the sum running over
/// lattice levels from `ℓ(Q₀)` down to `j_max`, and whether some `3Q` was clipped.
pub fn local_sum_bound_check<T: Scalar>(
    kernel: &Kernel<T>,
    f: &GridFunction<T>,
    omega: &ExponentField<T>,
    q0: &DyadicCube,
    lattice: &CubeLattice<T>,
    class_d: (T, T),
    tol: T,
) -> Result<(T, T, bool)> {
    if f.is_zero() {
        return Ok((T::zero(), T::zero(), false));
    }
    let phi = GPhiFunction::power(omega.clone())?;
    let s = SampledPhi::new(&phi, f.grid());
    let boxed = f.grid().bbox().rect();
    let abs: Vec<T> = f.values().iter().map(|v| v.abs()).collect();
    let three = lit::<T>(3.0);
    let n = q0.dim as i32;
    let mut cubes = vec![*q0];
    let mut frontier = vec![*q0];
    for _ in q0.level..lattice.j_max {
        frontier = frontier.iter().flat_map(|q| q.children()).collect();
        cubes.extend(frontier.iter().copied());
    }
    let terms: Vec<(T, bool)> = cubes
        .par_iter()
        .map(|q| {
            let big = q.dilate::<T>(three);
            let ratio = s.cube_ratio(&abs, &big, tol)?;
            let m = q.measure::<T>();
            let term = kernel.k_bar(q.side::<T>() / lit(2.0)) * three.powi(n) * m * m * ratio;
            Ok((term, !boxed.contains_rect(&big)))
        })
        .collect::<Result<_>>()?;
    let lhs = terms.iter().map(|t| t.0).sum();
    let (delta, eps) = class_d;
    let big0 = q0.dilate::<T>(three);
    let rhs = kernel.k_tilde(delta * (T::one() + eps) * q0.side::<T>())
        * three.powi(n)
        * q0.measure::<T>()
        * s.cube_ratio(&abs, &big0, tol)?;
    Ok((lhs, rhs, terms.iter().any(|t| t.1)))
}

/// `Σ_{Q ∈ family} ‖χ_Q f‖_p ‖χ_Q g‖_{p'} / (‖f‖_p ‖g‖_{p'})` for a family of disjoint cubes.
pub fn disjoint_sum_ratio<T: Scalar>(
    p: &ExponentField<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    family: &[Rect<T>],
    tol: T,
) -> Result<T> {
    let phi = GPhiFunction::power(p.clone())?;
    let dual = GPhiFunction::power(p.conjugate()?)?;
    let s = SampledPhi::new(&phi, f.grid());
    let sd = SampledPhi::new(&dual, g.grid());
    let (fa, ga): (Vec<T>, Vec<T>) = (f.abs().into_values(), g.abs().into_values());
    let whole = f.grid().bbox().rect();
    let den = s.restricted_norm(&fa, &whole, tol)? * sd.restricted_norm(&ga, &whole, tol)?;
    if den == T::zero() {
        return Ok(T::zero());
    }
    let num: Vec<T> = family
        .par_iter()
        .map(|q| Ok(s.restricted_norm(&fa, q, tol)? * sd.restricted_norm(&ga, q, tol)?))
        .collect::<Result<_>>()?;
    Ok(num.into_iter().sum::<T>() / den)
}

/// `Σ_{Q ⊆ Q₀, ℓ(Q) = 2^{-d}ℓ(Q₀)} ‖fχ_{3Q}‖_ω ‖gχ_{3Q}‖_{ω'} / (‖fχ_{3Q₀}‖_ω ‖gχ_{3Q₀}‖_{ω'})`.
pub fn overlap_sum_ratio<T: Scalar>(
    omega: &ExponentField<T>,
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    q0: &DyadicCube,
    depth: u32,
    tol: T,
) -> Result<T> {
    let phi = GPhiFunction::power(omega.clone())?;
    let dual = GPhiFunction::power(omega.conjugate()?)?;
    let s = SampledPhi::new(&phi, f.grid());
    let sd = SampledPhi::new(&dual, g.grid());
    let (fa, ga): (Vec<T>, Vec<T>) = (f.abs().into_values(), g.abs().into_values());
    let three = lit::<T>(3.0);
    let big0 = q0.dilate::<T>(three);
    let den = s.restricted_norm(&fa, &big0, tol)? * sd.restricted_norm(&ga, &big0, tol)?;
    if den == T::zero() {
        return Ok(T::zero());
    }
    let mut cubes = vec![*q0];
    for _ in 0..depth {
        cubes = cubes.iter().flat_map(|q| q.children()).collect();
    }
    let num: Vec<T> = cubes
        .par_iter()
        .map(|q| {
            let big = q.dilate::<T>(three);
            Ok(s.restricted_norm(&fa, &big, tol)? * sd.restricted_norm(&ga, &big, tol)?)
        })
        .collect::<Result<_>>()?;
    Ok(num.into_iter().sum::<T>() / den)
}

/// A random family of pairwise disjoint lattice cubes (greedy rejection).
pub fn random_disjoint_family<T: Scalar>(lattice: &CubeLattice<T>, attempts: usize, seed: u64) -> Vec<DyadicCube> {
    let cubes = lattice.enumerate(None);
    if cubes.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<DyadicCube> = Vec::new();
    for _ in 0..attempts {
        let q = cubes[rng.gen_range(0..cubes.len())];
        if chosen.iter().all(|c| !c.is_within(&q) && !q.is_within(c)) {
            chosen.push(q);
        }
    }
    chosen.sort();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BoundingBox, Coverage, Grid};
    use crate::operators::apply_commutator;

    #[test]
    fn binomials() {
        assert_eq!(binomial::<f64>(4, 2), 6.0);
        assert_eq!(binomial::<f64>(3, 0), 1.0);
        assert_eq!(binomial::<f64>(3, 3), 1.0);
    }

    #[test]
    fn classes() {
        assert_eq!(stopping_class(5.0f64, 2.0), Some(2));
        assert_eq!(stopping_class(4.0f64, 2.0), Some(1));
        assert_eq!(stopping_class(0.0f64, 2.0), None);
    }

    fn majorant_setup() -> (Grid<f64>, CubeLattice<f64>) {
        let g = Grid::new(BoundingBox::<f64>::unit(1).unwrap(), 256).unwrap();
        let lat = CubeLattice::new(*g.bbox(), -1, 8).unwrap().with_coverage(Coverage::Intersecting);
        (g, lat)
    }

    #[test]
    fn majorant_dominates_potential() {
        let (g, lat) = majorant_setup();
        let k = Kernel::fractional(0.5, 1).unwrap();
        let f = GridFunction::indicator(g, &Rect::new(1, [0.2, 0.0], [0.45, 0.0]));
        let b = GridFunction::from_fn(g, |x| x[0].sqrt());
        for m in 0..3 {
            let t = apply_commutator(&k, &b, m, &f).unwrap();
            let maj = dyadic_majorant(&k, &b, m, &f, &lat).unwrap();
            assert!(maj.violations(&t).is_empty(), "m = {m}");
        }
    }

    #[test]
    fn constant_symbol_majorant_vanishes() {
        let (g, lat) = majorant_setup();
        let k = Kernel::fractional(0.5, 1).unwrap();
        let f = GridFunction::indicator(g, &Rect::new(1, [0.2, 0.0], [0.45, 0.0]));
        let b = GridFunction::constant(g, 2.0);
        let maj = dyadic_majorant(&k, &b, 1, &f, &lat).unwrap();
        assert!(maj.values.is_zero());
    }

    #[test]
    fn shallow_lattice_is_rejected() {
        let (g, _) = majorant_setup();
        let k = Kernel::fractional(0.5, 1).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let lat = CubeLattice::new(*g.bbox(), 1, 8).unwrap();
        assert!(dyadic_majorant(&k, &f, 0, &f, &lat).is_err());
    }

    #[test]
    fn constant_field_selects_roots() {
        let g = Grid::new(BoundingBox::<f64>::unit(1).unwrap(), 128).unwrap();
        let lat = CubeLattice::new(*g.bbox(), 0, 5).unwrap();
        let tau = ExponentField::constant(2.0, *g.bbox()).unwrap();
        let gw = GridFunction::constant(g, 3.0);
        let table = cube_table(&tau, &gw, &lat, 1e-12).unwrap();
        let fam = build_stopping_family(&table, 2.0).unwrap();
        assert_eq!(fam.levels.len(), 1);
        assert_eq!(fam.levels[0].k, 1);
        assert_eq!(fam.levels[0].cubes.len(), 1);
        assert_eq!(fam.levels[0].cubes[0].cube.level, 0);
        assert!(fam.checks.all_pass());
    }

    #[test]
    fn bump_family_passes_checks() {
        let bbox = BoundingBox::unit(1).unwrap();
        let g = Grid::new(bbox, 512).unwrap();
        let lat = CubeLattice::new(bbox, 0, 8).unwrap();
        let tau = ExponentField::constant(2.0, bbox).unwrap();
        let gw = GridFunction::from_fn(g, |x: &[f64; 2]| 1.0 / (1e-3 + (x[0] - 0.3).abs()));
        let table = cube_table(&tau, &gw, &lat, 1e-12).unwrap();
        let fam0 = build_stopping_family::<f64>(&table, 2.0).unwrap();
        let alpha: f64 = 2.0 * fam0.pi.max(1.0);
        let fam = build_stopping_family(&table, alpha).unwrap();
        assert!(fam.levels.len() > 2);
        assert!(fam.checks.all_pass(), "{:?}", fam.checks);
    }

    #[test]
    fn disjoint_sum_constant_exponent_at_most_one() {
        let bbox = BoundingBox::unit(1).unwrap();
        let g = Grid::new(bbox, 256).unwrap();
        let lat = CubeLattice::new(bbox, 1, 6).unwrap();
        let p = ExponentField::constant(3.0, bbox).unwrap();
        let f = GridFunction::from_fn(g, |x| 1.0 + x[0]);
        let h = GridFunction::from_fn(g, |x| 2.0 - x[0] * x[0]);
        let fam: Vec<Rect<f64>> = random_disjoint_family(&lat, 50, 3).iter().map(|q| q.rect()).collect();
        let r = disjoint_sum_ratio(&p, &f, &h, &fam, 1e-12).unwrap();
        assert!(r <= 1.0 + 1e-9 && r > 0.0);
    }

    #[test]
    fn zero_function_local_sum() {
        let bbox = BoundingBox::unit(1).unwrap();
        let g = Grid::new(bbox, 64).unwrap();
        let lat = CubeLattice::new(bbox, 0, 6).unwrap();
        let k = Kernel::fractional(0.5, 1).unwrap();
        let w = ExponentField::constant(2.0, bbox).unwrap();
        let q0 = DyadicCube::new(1, 1, [0, 0]);
        let r = local_sum_bound_check(&k, &GridFunction::zeros(g), &w, &q0, &lat, (1.0, 0.0), 1e-10).unwrap();
        assert_eq!((r.0, r.1), (0.0, 0.0));
    }
}
