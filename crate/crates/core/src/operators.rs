//! Radial kernels, their ball integrals `K̃` and annulus sups `K̄`, the
//! class-D diagnostic, and the order-`m` commutator on a grid.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{Grid, GridFunction, Point};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, pow2, Scalar};

/// Radial profile `G` with `K(x) = G(|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    /// `r^{α−n}`, `0 < α < n`.
    Fractional { alpha: T },
    /// `r^{β−n} e^{−λr}`: the closed-form surrogate for the Bessel potential kernel.
    BesselLike { beta: T, lambda: T },
    /// Linear interpolation through `(radius, value)`; the first value below
    /// the first radius and zero beyond the last.
    Tabulated { radii: Vec<T>, values: Vec<T> },
    /// `2^{−k·decay}` on `2^k < r ≤ 2^{k+1}`: constant on dyadic annuli.
    DyadicStep { decay: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    profile: Profile<T>,
    dim: usize,
    /// Cumulative `∫_0^{r_i} G(r) r^{n−1} dr` for tabulated profiles.
    cumulative: Vec<T>,
}

/// Surface measure of the unit sphere: 2 in dimension 1, `2π` in dimension 2.
fn sphere_measure<T: Scalar>(dim: usize) -> T {
    if dim == 1 {
        lit(2.0)
    } else {
        lit::<T>(2.0) * T::PI()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

impl<T: Scalar> Kernel<T> {
    pub fn new(profile: Profile<T>, dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::domain("kernels are defined in dimension 1 or 2"));
        }
        let n = from_usize::<T>(dim);
        let mut cumulative = Vec::new();
        match &profile {
            Profile::Fractional { alpha } => {
                if !(*alpha > T::zero() && *alpha < n) {
                    return Err(Error::domain(format!("fractional kernel needs 0 < α < n, got α = {alpha}")));
                }
            }
            Profile::BesselLike { beta, lambda } => {
                if !(*beta > T::zero()) || !(*lambda > T::zero()) {
                    return Err(Error::domain("Bessel-like kernel needs β > 0 and λ > 0"));
                }
            }
            Profile::Tabulated { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::domain("tabulated kernel needs matching, non-empty radius/value columns"));
                }
                if !(radii[0] > T::zero()) || radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::domain("tabulated radii must be positive and strictly increasing"));
                }
                if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
                    return Err(Error::domain("tabulated kernel values must be finite and nonnegative"));
                }
                cumulative.push(values[0] * radii[0].powi(dim as i32) / n);
                for i in 1..radii.len() {
                    let seg = segment_moment(dim, radii[i - 1], values[i - 1], radii[i], values[i], radii[i]);
                    cumulative.push(cumulative[i - 1] + seg);
                }
            }
            Profile::DyadicStep { decay } => {
                if !(*decay < n) {
                    return Err(Error::domain("dyadic-step kernel is not locally integrable unless decay < n"));
                }
            }
        }
        Ok(Kernel { profile, dim, cumulative })
    }

    pub fn fractional(alpha: T, dim: usize) -> Result<Self> {
        Self::new(Profile::Fractional { alpha }, dim)
    }

    pub fn bessel_like(beta: T, lambda: T, dim: usize) -> Result<Self> {
        Self::new(Profile::BesselLike { beta, lambda }, dim)
    }

    pub fn tabulated(radii: Vec<T>, values: Vec<T>, dim: usize) -> Result<Self> {
        Self::new(Profile::Tabulated { radii, values }, dim)
    }

    /// Loads a two-column `radius,value` CSV (a header row is allowed).
    pub fn tabulated_from_csv<P: AsRef<Path>>(path: P, dim: usize) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let (mut radii, mut values) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let parse = |k: usize| rec.get(k).and_then(|s| s.trim().parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(a), Some(b)) => {
                    radii.push(lit(a));
                    values.push(lit(b));
                }
                _ if radii.is_empty() => continue,
                _ => return Err(Error::Parse("kernel table rows must be two numbers".into())),
            }
        }
        Self::tabulated(radii, values, dim)
    }

    pub fn dyadic_step(decay: T, dim: usize) -> Result<Self> {
        Self::new(Profile::DyadicStep { decay }, dim)
    }

    pub fn profile(&self) -> &Profile<T> {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn n(&self) -> T {
        from_usize(self.dim)
    }

    /// `G(r)`; infinite at `r = 0` for singular profiles.
    pub fn radial(&self, r: T) -> T {
        let n = self.n();
        match &self.profile {
            Profile::Fractional { alpha } => r.powf(*alpha - n),
            Profile::BesselLike { beta, lambda } => r.powf(*beta - n) * (-*lambda * r).exp(),
            Profile::Tabulated { radii, values } => {
                if r <= radii[0] {
                    return values[0];
                }
                let last = radii.len() - 1;
                if r > radii[last] {
                    return T::zero();
                }
                let k = radii.partition_point(|&x| x < r);
                let (r0, r1, v0, v1) = (radii[k - 1], radii[k], values[k - 1], values[k]);
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
            Profile::DyadicStep { decay } => {
                if r <= T::zero() {
                    return T::infinity();
                }
                let k = dyadic_annulus(r);
                lit::<T>(2.0).powf(-*decay * lit::<T>(k as f64))
            }
        }
    }

    pub fn eval(&self, x: &Point<T>) -> T {
        self.radial(crate::domain::norm(self.dim, x))
    }

    /// `K̃(t) = ∫_{|z| ≤ t} K(z) dz`.
    pub fn k_tilde(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let n = self.n();
        let omega = sphere_measure::<T>(self.dim);
        match &self.profile {
            Profile::Fractional { alpha } => omega * t.powf(*alpha) / *alpha,
            Profile::BesselLike { beta, lambda } => {
                let (b, l, tt) = (beta.to_f64_lossy(), lambda.to_f64_lossy(), t.to_f64_lossy());
                let lower = statrs::function::gamma::gamma_lr(b, l * tt) * statrs::function::gamma::gamma(b);
                omega * lit::<T>(l.powf(-b) * lower)
            }
            Profile::Tabulated { radii, values } => {
                if t <= radii[0] {
                    return omega * values[0] * t.powi(self.dim as i32) / n;
                }
                let last = radii.len() - 1;
                if t >= radii[last] {
                    return omega * self.cumulative[last];
                }
                let k = radii.partition_point(|&x| x < t);
                let seg = segment_moment(self.dim, radii[k - 1], values[k - 1], radii[k], values[k], t);
                omega * (self.cumulative[k - 1] + seg)
            }
            Profile::DyadicStep { decay } => {
                // Full annuli (2^j, 2^{j+1}] for j < k, then the partial annulus (2^k, t].
                let a = n - *decay;
                let k = dyadic_annulus(t);
                let two = lit::<T>(2.0);
                let kk = lit::<T>(k as f64);
                let shell = (two.powf(n) - T::one()) / n;
                let full = shell * two.powf(a * (kk - T::one())) / (T::one() - two.powf(-a));
                let inner = two.powf(kk);
                let partial = two.powf(-*decay * kk) * (t.powf(n) - inner.powf(n)) / n;
                omega * (full + partial)
            }
        }
    }

    /// `∫_{r1 < |z| ≤ r2} K(z) dz`.
    pub fn annulus_integral(&self, r1: T, r2: T) -> T {
        (self.k_tilde(r2) - self.k_tilde(r1)).max(T::zero())
    }

    pub fn is_nonincreasing(&self) -> bool {
        match &self.profile {
            Profile::Fractional { .. } => true,
            Profile::BesselLike { beta, .. } => *beta <= self.n(),
            Profile::DyadicStep { decay } => *decay >= T::zero(),
            Profile::Tabulated { values, .. } => values.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    /// `K̄(t) = sup_{t < |x| ≤ 2t} K(x)`.
    pub fn k_bar(&self, t: T) -> T {
        match &self.profile {
            Profile::BesselLike { beta, .. } if *beta > self.n() => self.scan_sup(t),
            Profile::Fractional { .. } | Profile::BesselLike { .. } => self.radial(t),
            Profile::DyadicStep { .. } => {
                // Constant on (2^k, 2^{k+1}]: probe just right of t and at every 2^k in (t, 2t].
                let mut best = self.radial(t * (T::one() + T::epsilon() * lit(4.0)));
                let mut k = dyadic_annulus(t) + 1;
                loop {
                    let r = lit::<T>(2.0).powi(k);
                    if r > t * lit(2.0) {
                        break;
                    }
                    if r > t {
                        best = best.max(self.radial(r));
                    }
                    k += 1;
                }
                best
            }
            Profile::Tabulated { radii, .. } => {
                // Right limit at t: the sup is over the half-open shell (t, 2t].
                let mut best = self.radial(t * (T::one() + T::epsilon() * lit(4.0))).max(self.radial(t * lit(2.0)));
                for &r in radii.iter().filter(|&&r| r > t && r <= t * lit(2.0)) {
                    best = best.max(self.radial(r));
                }
                best
            }
        }
    }

    fn scan_sup(&self, t: T) -> T {
        let n = 10_000;
        (1..=n)
            .map(|i| self.radial(t + t * from_usize::<T>(i) / from_usize(n)))
            .fold(self.radial(t), T::max)
    }

    /// Checks `sup_{2^k<|x|≤2^{k+1}} K ≤ c 2^{−kn} ∫_{δ(1−ε)2^k<|y|≤2δ(1+ε)2^k} K` for each `k`.
    pub fn check_class_d(&self, delta: T, epsilon: T, k_range: (i32, i32)) -> Result<ClassDReport<T>> {
        if !(delta > T::zero()) || !(epsilon >= T::zero() && epsilon < T::one()) {
            return Err(Error::domain("class D needs δ > 0 and 0 ≤ ε < 1"));
        }
        let mut rows = Vec::new();
        let mut c = T::zero();
        for k in k_range.0..=k_range.1 {
            let s = pow2::<T>(k);
            let sup = self.k_bar(s);
            let inner = delta * (T::one() - epsilon) * s;
            let outer = lit::<T>(2.0) * delta * (T::one() + epsilon) * s;
            let average = self.annulus_integral(inner, outer) / s.powi(self.dim as i32);
            let ratio = if sup == T::zero() {
                T::zero()
            } else if average == T::zero() {
                T::infinity()
            } else {
                sup / average
            };
            c = c.max(ratio);
            rows.push(ClassDRow { k, sup, scaled_integral: average, ratio });
        }
        Ok(ClassDReport { delta, epsilon, c_estimate: c, k_range, pass: c.is_finite(), rows })
    }
}

/// `k` with `2^k < r ≤ 2^{k+1}`.
fn dyadic_annulus<T: Scalar>(r: T) -> i32 {
    let l = r.log2();
    let c = l.ceil();
    let k = if c == l { c - T::one() } else { l.floor() };
    k.to_i32().unwrap_or(0)
}

/// `∫_{r0}^{t} G(r) r^{n−1} dr` for `G` linear through `(r0,v0)`, `(r1,v1)`; Simpson is exact here.
fn segment_moment<T: Scalar>(dim: usize, r0: T, v0: T, r1: T, v1: T, t: T) -> T {
    let g = |r: T| (v0 + (v1 - v0) * (r - r0) / (r1 - r0)) * r.powi(dim as i32 - 1);
    let mid = (r0 + t) / lit(2.0);
    (t - r0) / lit(6.0) * (g(r0) + lit::<T>(4.0) * g(mid) + g(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassDRow<T> {
    pub k: i32,
    pub sup: T,
    /// `2^{−kn} ∫` over the comparison annulus.
    pub scaled_integral: T,
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDReport<T> {
    pub delta: T,
    pub epsilon: T,
    pub c_estimate: T,
    pub k_range: (i32, i32),
    pub pass: bool,
    pub rows: Vec<ClassDRow<T>>,
}

/// Cell integrals `W[Δ] = ∫_{cell Δ} K(y) dy` for cells offset by `Δ` from a
/// cell centred at the origin; translation invariance makes one table enough.
#[derive(Debug, Clone)]
pub struct WeightTable<T> {
    dim: usize,
    cps: usize,
    weights: Vec<T>,
}

impl<T: Scalar> WeightTable<T> {
    pub fn new(kernel: &Kernel<T>, grid: &Grid<T>) -> Result<Self> {
        if kernel.dim() != grid.dim() {
            return Err(Error::domain("kernel and grid dimensions differ"));
        }
        let cps = grid.cells_per_side();
        let h = grid.cell_side();
        let half = h / lit(2.0);
        let weights: Vec<T> = if grid.dim() == 1 {
            (0..cps)
                .map(|d| {
                    if d == 0 {
                        kernel.k_tilde(half)
                    } else {
                        let c = from_usize::<T>(d) * h;
                        kernel.annulus_integral(c - half, c + half) / lit(2.0)
                    }
                })
                .collect()
        } else {
            let self_cell = square_self_integral(kernel, half);
            let far = gauss_legendre(6);
            let near = gauss_legendre(4);
            (0..cps * cps)
                .into_par_iter()
                .map(|idx| {
                    let (dx, dy) = (idx / cps, idx % cps);
                    if dx == 0 && dy == 0 {
                        return self_cell;
                    }
                    let center = [from_usize::<T>(dx) * h, from_usize::<T>(dy) * h];
                    if dx.max(dy) <= 2 {
                        cell_quadrature(kernel, center, h, 8, &near)
                    } else {
                        cell_quadrature(kernel, center, h, 1, &far)
                    }
                })
                .collect()
        };
        if weights.iter().any(|w: &T| !w.is_finite()) {
            return Err(Error::domain("kernel cell integrals are not finite"));
        }
        Ok(WeightTable { dim: grid.dim(), cps, weights })
    }

    #[inline]
    pub fn weight(&self, di: usize, dj: usize) -> T {
        if self.dim == 1 {
            self.weights[di]
        } else {
            self.weights[di * self.cps + dj]
        }
    }
}

/// `∫_{[-s,s]^2} G(|y|) dy = (4/π) ∫_0^{π/4} K̃(s / cos θ) dθ`.
fn square_self_integral<T: Scalar>(kernel: &Kernel<T>, s: T) -> T {
    let (nodes, weights) = gauss_legendre(24);
    let quarter = T::FRAC_PI_4();
    let mut acc = T::zero();
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = quarter * (lit::<T>(*x) + T::one()) / lit(2.0);
        acc += lit::<T>(*w) * kernel.k_tilde(s / theta.cos());
    }
    acc * quarter / lit(2.0) * lit::<T>(4.0) / T::PI()
}

/// Composite tensor Gauss rule over the cell of side `h` centred at `center`.
fn cell_quadrature<T: Scalar>(kernel: &Kernel<T>, center: Point<T>, h: T, split: usize, rule: &(Vec<f64>, Vec<f64>)) -> T {
    let sub = h / from_usize(split);
    let lo = [center[0] - h / lit(2.0), center[1] - h / lit(2.0)];
    let mut acc = T::zero();
    for a in 0..split {
        for b in 0..split {
            let c0 = lo[0] + (from_usize::<T>(a) + lit(0.5)) * sub;
            let c1 = lo[1] + (from_usize::<T>(b) + lit(0.5)) * sub;
            for (xi, wi) in rule.0.iter().zip(&rule.1) {
                for (yj, wj) in rule.0.iter().zip(&rule.1) {
                    let p = [c0 + lit::<T>(*xi) * sub / lit(2.0), c1 + lit::<T>(*yj) * sub / lit(2.0)];
                    acc += lit::<T>(wi * wj) * kernel.eval(&p);
                }
            }
        }
    }
    acc * sub * sub / lit(4.0)
}

/// `T^{b,m} f(x_i) = Σ_j (b_i − b_j)^m W[i − j] f_j` at every cell midpoint;
/// `m = 0` is the potential operator itself.
pub fn apply_commutator<T: Scalar>(
    kernel: &Kernel<T>,
    b: &GridFunction<T>,
    m: u32,
    f: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    let table = WeightTable::new(kernel, f.grid())?;
    apply_with_table(&table, b, m, f)
}

pub fn apply_with_table<T: Scalar>(
    table: &WeightTable<T>,
    b: &GridFunction<T>,
    m: u32,
    f: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    if b.grid() != f.grid() {
        return Err(Error::domain("symbol and function live on different grids"));
    }
    let grid = *f.grid();
    let (bv, fv) = (b.values(), f.values());
    let support: Vec<usize> = (0..fv.len()).filter(|&j| fv[j] != T::zero()).collect();
    let out: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mi = grid.multi_index(i);
            let mut acc = T::zero();
            for &j in &support {
                let mj = grid.multi_index(j);
                let w = table.weight(mi[0].abs_diff(mj[0]), mi[1].abs_diff(mj[1]));
                let factor = if m == 0 { T::one() } else { (bv[i] - bv[j]).powi(m as i32) };
                acc += factor * w * fv[j];
            }
            acc
        })
        .collect();
    GridFunction::new(grid, out)
}

/// `T_Φ f` (the `m = 0` commutator).
pub fn apply_potential<T: Scalar>(kernel: &Kernel<T>, f: &GridFunction<T>) -> Result<GridFunction<T>> {
    apply_commutator(kernel, &GridFunction::zeros(*f.grid()), 0, f)
}

/// The commutator at an arbitrary point `x` with symbol value `b_x` there.
/// Cell integrals are exact in dimension 1 and Gauss-composite in dimension 2.
pub fn apply_at_point<T: Scalar>(
    kernel: &Kernel<T>,
    b: &GridFunction<T>,
    b_x: T,
    m: u32,
    f: &GridFunction<T>,
    x: &Point<T>,
) -> Result<T> {
    let grid = f.grid();
    let dim = grid.dim();
    let near = gauss_legendre(4);
    let mut acc = T::zero();
    for j in 0..grid.len() {
        let fj = f.value(j);
        if fj == T::zero() {
            continue;
        }
        let cell = grid.cell_rect(j);
        let w = if dim == 1 {
            let (a, c) = (cell.lo[0] - x[0], cell.hi[0] - x[0]);
            if a >= T::zero() || c <= T::zero() {
                let (r1, r2) = (a.abs().min(c.abs()), a.abs().max(c.abs()));
                kernel.annulus_integral(r1, r2) / lit(2.0)
            } else {
                (kernel.k_tilde(-a) + kernel.k_tilde(c)) / lit(2.0)
            }
        } else {
            let center = cell.center();
            let rel = [center[0] - x[0], center[1] - x[1]];
            if cell.contains_point(x) {
                let parts = split_at_point(&cell, x);
                parts.iter().map(|r| corner_integral(kernel, r)).fold(T::zero(), |s, v| s + v)
            } else {
                let h = cell.sidelength();
                let dist = rel[0].abs().max(rel[1].abs());
                let split = if dist < h * lit(3.0) { 8 } else { 2 };
                cell_quadrature(kernel, rel, h, split, &near)
            }
        };
        let factor = if m == 0 { T::one() } else { (b_x - b.value(j)).powi(m as i32) };
        acc += factor * w * fj;
    }
    Ok(acc)
}

/// Splits a cell into the (up to four) rectangles that have `x` as a corner,
/// returned as their extents `(width, height)` from the corner.
fn split_at_point<T: Scalar>(cell: &crate::domain::Rect<T>, x: &Point<T>) -> Vec<(T, T)> {
    let xs = [x[0] - cell.lo[0], cell.hi[0] - x[0]];
    let ys = [x[1] - cell.lo[1], cell.hi[1] - x[1]];
    let mut out = Vec::new();
    for &a in &xs {
        for &b in &ys {
            if a > T::zero() && b > T::zero() {
                out.push((a, b));
            }
        }
    }
    out
}

/// `∫_{[0,a]×[0,b]} G(|y|) dy` in polar coordinates about the singular corner.
fn corner_integral<T: Scalar>(kernel: &Kernel<T>, ext: &(T, T)) -> T {
    let (a, b) = *ext;
    let split = b.atan2(a);
    let (nodes, weights) = gauss_legendre(24);
    let two_pi = lit::<T>(2.0) * T::PI();
    let mut acc = T::zero();
    // θ ∈ [0, split]: the ray leaves through x = a; θ ∈ [split, π/2]: through y = b.
    for (lo, hi, bound) in [(T::zero(), split, 0usize), (split, T::FRAC_PI_2(), 1)] {
        let half = (hi - lo) / lit(2.0);
        for (x, w) in nodes.iter().zip(&weights) {
            let theta = lo + half * (lit::<T>(*x) + T::one());
            let reach = if bound == 0 { a / theta.cos() } else { b / theta.sin() };
            acc += lit::<T>(*w) * half * kernel.k_tilde(reach) / two_pi;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BoundingBox, Rect};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, max_relative = 1e-13);
    }

    #[test]
    fn k_tilde_closed_forms() {
        let k = Kernel::fractional(0.5, 1).unwrap();
        assert_relative_eq!(k.k_tilde(1.0), 4.0, max_relative = 1e-14);
        assert!(k.k_tilde(1e-12) < 1e-5);
        let k2 = Kernel::fractional(1.0, 2).unwrap();
        assert_relative_eq!(k2.k_tilde(0.7), 2.0 * std::f64::consts::PI * 0.7, max_relative = 1e-14);
    }

    #[test]
    fn bessel_like_k_tilde_matches_quadrature() {
        let k = Kernel::bessel_like(0.5, 2.0, 1).unwrap();
        // 2∫_0^1 r^{-1/2} e^{-2r} dr by substitution r = s², s ∈ [0,1]: 4∫_0^1 e^{-2s²} ds.
        let (x, w) = gauss_legendre(40);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-2.0 * ((x + 1.0) / 2.0f64).powi(2)).exp() / 2.0).sum();
        assert_relative_eq!(k.k_tilde(1.0), 4.0 * s, max_relative = 1e-10);
    }

    #[test]
    fn tabulated_profile() {
        let k = Kernel::tabulated(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 0.5], 1).unwrap();
        assert_eq!(k.radial(0.5), 1.0);
        assert_eq!(k.radial(1.5), 2.0);
        assert_eq!(k.radial(4.0), 0.0);
        // 2(1 + 2 + 1.75)
        assert_relative_eq!(k.k_tilde(10.0), 9.5, max_relative = 1e-14);
        let n = 10_000;
        for t in [0.6, 1.2, 1.9] {
            let dense = (0..=n).map(|i| k.radial(t + t * i as f64 / n as f64)).fold(0.0, f64::max);
            assert_relative_eq!(k.k_bar(t), dense, max_relative = 1e-3);
        }
    }

    #[test]
    fn dyadic_step_integrals() {
        let k = Kernel::dyadic_step(0.5, 1).unwrap();
        assert_eq!(k.radial(1.5), 1.0);
        assert_eq!(k.radial(2.0), 1.0);
        assert_relative_eq!(k.radial(3.0), 2f64.powf(-0.5));
        // Direct annulus sum for K̃(3): annuli k ≤ 0 full plus (2, 3] at value 2^{-1/2}.
        let mut direct = 0.0;
        for j in -80..=0 {
            direct += 2.0 * 2f64.powf(-0.5 * j as f64) * 2f64.powi(j);
        }
        direct += 2.0 * 2f64.powf(-0.5);
        assert_relative_eq!(k.k_tilde(3.0), direct, max_relative = 1e-12);
        assert_eq!(k.k_bar(1.0), 1.0);
    }

    #[test]
    fn class_d_examples() {
        let k = Kernel::fractional(0.5, 1).unwrap();
        let r = k.check_class_d(1.0, 0.0, (-10, 10)).unwrap();
        assert!(r.pass && r.c_estimate > 0.0);
        let step = Kernel::dyadic_step(0.5, 1).unwrap();
        assert!(step.check_class_d(1.0, 0.0, (-10, 10)).unwrap().pass);
        let radii: Vec<f64> = (0..=40).map(|i| 2f64.powf(-10.0 + 0.5 * i as f64)).collect();
        let values: Vec<f64> = radii.iter().map(|r| r.sqrt()).collect();
        let up = Kernel::tabulated(radii, values, 1).unwrap();
        assert!(up.check_class_d(1.0, 0.0, (-10, 10)).unwrap().pass);
        let spike = Kernel::tabulated(vec![2.0, 2.0001, 3.9999, 4.0], vec![0.0, 1.0, 1.0, 0.0], 1).unwrap();
        assert!(!spike.check_class_d(4.0, 0.0, (-10, 10)).unwrap().pass);
    }

    #[test]
    fn commutator_examples_1d() {
        let g = Grid::new(BoundingBox::unit(1).unwrap(), 256).unwrap();
        let k = Kernel::fractional(0.5, 1).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let tf = apply_potential(&k, &f).unwrap();
        for i in (0..256).step_by(13) {
            let x: f64 = g.midpoint(i)[0];
            let exact = 2.0 * (x.sqrt() + (1.0 - x).sqrt());
            assert_relative_eq!(tf.value(i), exact, max_relative = 1e-12);
        }
        let b = GridFunction::constant(g, 3.0);
        assert!(apply_commutator(&k, &b, 1, &f).unwrap().is_zero());
        let at2 = apply_at_point(&k, &b, 3.0, 0, &f, &[2.0, 0.0]).unwrap();
        assert_relative_eq!(at2, 2.0 * (2f64.sqrt() - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn potential_positive_and_decaying() {
        let g = Grid::new(BoundingBox::unit(2).unwrap(), 16).unwrap();
        let k = Kernel::fractional(1.0, 2).unwrap();
        let q = Rect::new(2, [0.0, 0.0], [0.25, 0.25]);
        let tf = apply_potential(&k, &GridFunction::indicator(g, &q)).unwrap();
        assert!(tf.values().iter().all(|v| *v > 0.0));
        assert!(tf.value(g.linear_index([15, 15])) < tf.value(g.linear_index([8, 8])));
    }

    #[test]
    fn self_cell_integral_2d() {
        // For α = 1, ∫_{[-s,s]^2} |y|^{-1} dy = 8 s asinh(1).
        let k = Kernel::fractional(1.0, 2).unwrap();
        let v = square_self_integral(&k, 0.5);
        assert_relative_eq!(v, 4.0 * 1f64.asinh(), max_relative = 1e-10);
    }
}
