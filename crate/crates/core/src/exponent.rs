//! Variable exponents `p(·)` on a bounded box: extremes, conjugates,
//! pointwise combinations and log-Hölder / log-log regularity diagnostics.
//!
//! The same type also carries the nonnegative log-power fields `θ(·)` and
//! the smoothness field `δ(·)`; those are built with a floor of 0 instead of 1.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{distance, norm, BoundingBox, Grid, GridFunction, Point, Rect};
use crate::error::{Error, Result};
use crate::scalar::{conjugate_exponent, from_usize, lit, log_e_plus, Scalar};

/// Pointwise combination of two exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    /// `1/β = 1/p − 1/q`; requires `p < q` everywhere.
    Difference,
    /// `1/α = 1/p + 1/q`.
    Sum,
    /// `p·q`.
    Product,
}

#[derive(Debug, Clone)]
pub enum ExponentKind<T> {
    Constant(T),
    /// `clamp(slope·x + intercept, lo, hi)`.
    AffineClamped { slope: [T; 2], intercept: T, lo: T, hi: T },
    /// `1/p(x) = 1/base + amplitude / log(e + 1/|x − center|)`; equals `base` at the center
    /// and tends to `1/(1/base + amplitude)` at infinity.
    LogSmooth { base: T, amplitude: T, center: Point<T> },
    /// `q(x) = base + amplitude / log(e + log(e + 1/|x − center|))`.
    LogLogSmooth { base: T, amplitude: T, center: Point<T> },
    /// Piecewise constant on the cells of a grid.
    Tabulated(Arc<GridFunction<T>>),
    Conjugate(Arc<ExponentField<T>>),
    Combine { mode: CombineMode, p: Arc<ExponentField<T>>, q: Arc<ExponentField<T>> },
    Scale { factor: T, p: Arc<ExponentField<T>> },
    /// `δ(x) = n(1/γ − 1/r(x))`.
    Delta { gamma: T, r: Arc<ExponentField<T>> },
}

#[derive(Debug, Clone)]
pub struct ExponentField<T> {
    kind: ExponentKind<T>,
    bbox: BoundingBox<T>,
    floor: T,
    p_minus: T,
    p_plus: T,
    p_inf: Option<T>,
}

/// Maxima of the defining difference quotients over sampled pairs. These
/// are lower bounds for the true constants, never certificates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RegularityReport<T> {
    /// `sup |1/p(x) − 1/p(y)| log(e + 1/|x − y|)`.
    pub local_logholder_constant: T,
    /// `sup |1/p(x) − 1/p_∞| log(e + |x|)`.
    pub at_infinity_constant: T,
    /// `sup |p(x) − p(y)| log(e + log(e + 1/|x − y|))`.
    pub loglog_constant: T,
    pub sample_count: usize,
}

fn sample_axis<T: Scalar>(lo: T, hi: T, n: usize) -> impl Iterator<Item = T> {
    let step = (hi - lo) / from_usize(n - 1);
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * from_usize(i) })
}

/// Tensor sample of a rectangle with endpoints included.
pub(crate) fn sample_points<T: Scalar>(r: &Rect<T>, per_axis: usize) -> Vec<Point<T>> {
    let xs: Vec<T> = sample_axis(r.lo[0], r.hi[0], per_axis).collect();
    if r.dim == 1 {
        return xs.into_iter().map(|x| [x, T::zero()]).collect();
    }
    let ys: Vec<T> = sample_axis(r.lo[1], r.hi[1], per_axis).collect();
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            out.push([x, y]);
        }
    }
    out
}

fn sample_density(dim: usize) -> usize {
    if dim == 1 {
        1025
    } else {
        257
    }
}

/// Distance range from `c` to the points of `r`.
fn distance_range<T: Scalar>(r: &Rect<T>, c: &Point<T>) -> (T, T) {
    let mut near = [T::zero(); 2];
    let mut far = [T::zero(); 2];
    for a in 0..r.dim {
        near[a] = c[a].max(r.lo[a]).min(r.hi[a]);
        far[a] = if (c[a] - r.lo[a]).abs() > (c[a] - r.hi[a]).abs() { r.lo[a] } else { r.hi[a] };
    }
    (distance(r.dim, c, &near), distance(r.dim, c, &far))
}

/// `1/log(e + 1/r)`, increasing from 0 at `r = 0` to 1 at infinity.
fn log_profile<T: Scalar>(r: T) -> T {
    if r <= T::zero() {
        T::zero()
    } else {
        T::one() / log_e_plus(T::one() / r)
    }
}

/// `1/log(e + log(e + 1/r))`, increasing from 0 to 1.
fn loglog_profile<T: Scalar>(r: T) -> T {
    if r <= T::zero() {
        T::zero()
    } else {
        T::one() / log_e_plus(log_e_plus(T::one() / r))
    }
}

impl<T: Scalar> ExponentField<T> {
    fn build(kind: ExponentKind<T>, bbox: BoundingBox<T>, floor: T) -> Result<Self> {
        let mut field = ExponentField { kind, bbox, floor, p_minus: T::zero(), p_plus: T::zero(), p_inf: None };
        let (lo, hi) = field.extremes_unchecked(&bbox.rect());
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain("exponent must be finite on the box"));
        }
        let slack = T::min_rel_tol() * floor.max(T::one());
        if lo < floor - slack {
            return Err(Error::domain(format!("exponent takes the value {lo} below its floor {floor}")));
        }
        field.p_minus = lo.max(floor);
        field.p_plus = hi.max(field.p_minus);
        Ok(field)
    }

    /// A variable exponent (values in `[1, ∞)`).
    pub fn exponent(kind: ExponentKind<T>, bbox: BoundingBox<T>) -> Result<Self> {
        Self::build(kind, bbox, T::one())
    }

    /// A nonnegative field such as a log-power `θ(·)`.
    pub fn nonnegative(kind: ExponentKind<T>, bbox: BoundingBox<T>) -> Result<Self> {
        Self::build(kind, bbox, T::zero())
    }

    pub fn constant(c: T, bbox: BoundingBox<T>) -> Result<Self> {
        Self::exponent(ExponentKind::Constant(c), bbox)
    }

    pub fn affine_clamped(slope: [T; 2], intercept: T, lo: T, hi: T, bbox: BoundingBox<T>) -> Result<Self> {
        if lo > hi {
            return Err(Error::domain("affine exponent needs lo <= hi"));
        }
        Self::exponent(ExponentKind::AffineClamped { slope, intercept, lo, hi }, bbox)
    }

    pub fn log_smooth(base: T, amplitude: T, center: Point<T>, bbox: BoundingBox<T>) -> Result<Self> {
        let far = T::one() / base + amplitude;
        if !(far > T::zero()) {
            return Err(Error::domain("log-smooth exponent: 1/base + amplitude must be positive"));
        }
        Self::exponent(ExponentKind::LogSmooth { base, amplitude, center }, bbox)
    }

    pub fn loglog_smooth(base: T, amplitude: T, center: Point<T>, bbox: BoundingBox<T>, floor: T) -> Result<Self> {
        Self::build(ExponentKind::LogLogSmooth { base, amplitude, center }, bbox, floor)
    }

    pub fn tabulated(values: GridFunction<T>) -> Result<Self> {
        let bbox = *values.grid().bbox();
        Self::exponent(ExponentKind::Tabulated(Arc::new(values)), bbox)
    }

    pub fn tabulated_nonnegative(values: GridFunction<T>) -> Result<Self> {
        let bbox = *values.grid().bbox();
        Self::nonnegative(ExponentKind::Tabulated(Arc::new(values)), bbox)
    }

    /// Overrides the value at infinity (used by the log-Hölder decay test and `r_∞ ≤ r`).
    pub fn with_p_infinity(mut self, p_inf: T) -> Self {
        self.p_inf = Some(p_inf);
        self
    }

    pub fn kind(&self) -> &ExponentKind<T> {
        &self.kind
    }

    pub fn bbox(&self) -> &BoundingBox<T> {
        &self.bbox
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn p_minus(&self) -> T {
        self.p_minus
    }

    pub fn p_plus(&self) -> T {
        self.p_plus
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Constant value, when the field is constant.
    pub fn as_constant(&self) -> Option<T> {
        self.is_constant().then_some(self.p_minus)
    }

    /// The limiting value at infinity: intrinsic for the generated kinds,
    /// otherwise the override, otherwise `p^-`.
    pub fn p_infinity(&self) -> T {
        if let Some(v) = self.p_inf {
            return v;
        }
        match &self.kind {
            ExponentKind::Constant(c) => *c,
            ExponentKind::LogSmooth { base, amplitude, .. } => T::one() / (T::one() / *base + *amplitude),
            ExponentKind::LogLogSmooth { base, amplitude, .. } => *base + *amplitude,
            ExponentKind::Conjugate(p) => conjugate_exponent(p.p_infinity()),
            ExponentKind::Scale { factor, p } => *factor * p.p_infinity(),
            ExponentKind::Delta { gamma, r } => {
                from_usize::<T>(self.dim()) * (T::one() / *gamma - T::one() / r.p_infinity())
            }
            ExponentKind::Combine { mode, p, q } => combine_values(*mode, p.p_infinity(), q.p_infinity()),
            _ => self.p_minus,
        }
    }

    pub fn value(&self, x: &Point<T>) -> T {
        match &self.kind {
            ExponentKind::Constant(c) => *c,
            ExponentKind::AffineClamped { slope, intercept, lo, hi } => {
                let mut v = *intercept;
                for a in 0..self.dim() {
                    v += slope[a] * x[a];
                }
                v.max(*lo).min(*hi)
            }
            ExponentKind::LogSmooth { base, amplitude, center } => {
                let r = distance(self.dim(), x, center);
                T::one() / (T::one() / *base + *amplitude * log_profile(r))
            }
            ExponentKind::LogLogSmooth { base, amplitude, center } => {
                let r = distance(self.dim(), x, center);
                *base + *amplitude * loglog_profile(r)
            }
            ExponentKind::Tabulated(g) => {
                let r = self.bbox.rect();
                let mut y = *x;
                for a in 0..self.dim() {
                    y[a] = y[a].max(r.lo[a]).min(r.hi[a]);
                }
                let idx = g.grid().cell_of(&y).unwrap_or(0);
                g.value(idx)
            }
            ExponentKind::Conjugate(p) => conjugate_exponent(p.value(x)),
            ExponentKind::Combine { mode, p, q } => combine_values(*mode, p.value(x), q.value(x)),
            ExponentKind::Scale { factor, p } => *factor * p.value(x),
            ExponentKind::Delta { gamma, r } => {
                from_usize::<T>(self.dim()) * (T::one() / *gamma - T::one() / r.value(x))
            }
        }
    }

    /// Values at the cell midpoints of `grid` (cell averages for tabulated fields on the same grid).
    pub fn sample(&self, grid: &Grid<T>) -> Vec<T> {
        (0..grid.len()).map(|i| self.value(&grid.midpoint(i))).collect()
    }

    /// `1/p` sampled on the grid.
    pub fn sample_reciprocal(&self, grid: &Grid<T>) -> Vec<T> {
        (0..grid.len()).map(|i| T::one() / self.value(&grid.midpoint(i))).collect()
    }

    fn extremes_unchecked(&self, r: &Rect<T>) -> (T, T) {
        match &self.kind {
            ExponentKind::Constant(c) => (*c, *c),
            ExponentKind::AffineClamped { slope, intercept, lo, hi } => {
                let mut vmin = *intercept;
                let mut vmax = *intercept;
                for a in 0..r.dim {
                    let (u, v) = (slope[a] * r.lo[a], slope[a] * r.hi[a]);
                    vmin += u.min(v);
                    vmax += u.max(v);
                }
                (vmin.max(*lo).min(*hi), vmax.max(*lo).min(*hi))
            }
            ExponentKind::LogSmooth { base, amplitude, center } => {
                let (dn, df) = distance_range(r, center);
                let a = T::one() / (T::one() / *base + *amplitude * log_profile(dn));
                let b = T::one() / (T::one() / *base + *amplitude * log_profile(df));
                (a.min(b), a.max(b))
            }
            ExponentKind::LogLogSmooth { base, amplitude, center } => {
                let (dn, df) = distance_range(r, center);
                let a = *base + *amplitude * loglog_profile(dn);
                let b = *base + *amplitude * loglog_profile(df);
                (a.min(b), a.max(b))
            }
            ExponentKind::Tabulated(g) => {
                let mut lo = T::infinity();
                let mut hi = T::neg_infinity();
                for (i, _) in g.grid().overlaps(r) {
                    lo = lo.min(g.value(i));
                    hi = hi.max(g.value(i));
                }
                if lo > hi {
                    let c = g.value(g.grid().cell_of(&r.center()).unwrap_or(0));
                    (c, c)
                } else {
                    (lo, hi)
                }
            }
            ExponentKind::Conjugate(p) => {
                let (lo, hi) = p.extremes_unchecked(r);
                (conjugate_exponent(hi), conjugate_exponent(lo))
            }
            ExponentKind::Scale { factor, p } => {
                let (lo, hi) = p.extremes_unchecked(r);
                (*factor * lo, *factor * hi)
            }
            ExponentKind::Delta { gamma, r: rr } => {
                let (lo, hi) = rr.extremes_unchecked(r);
                let n = from_usize::<T>(r.dim);
                (n * (T::one() / *gamma - T::one() / lo), n * (T::one() / *gamma - T::one() / hi))
            }
            ExponentKind::Combine { .. } => {
                if let (Some(_), Some(_)) = self.constant_parts() {
                    let v = self.value(&r.center());
                    return (v, v);
                }
                let mut lo = T::infinity();
                let mut hi = T::neg_infinity();
                for x in sample_points(r, sample_density(r.dim)) {
                    let v = self.value(&x);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
        }
    }

    fn constant_parts(&self) -> (Option<T>, Option<T>) {
        match &self.kind {
            ExponentKind::Combine { p, q, .. } => (p.as_constant(), q.as_constant()),
            _ => (None, None),
        }
    }

    /// `(inf, sup)` of the field over `region`, which must lie inside the box.
    pub fn extremes(&self, region: &Rect<T>) -> Result<(T, T)> {
        let b = self.bbox.rect();
        let tol = b.sidelength() * lit(1e-12);
        let inside = (0..self.dim()).all(|a| region.lo[a] >= b.lo[a] - tol && region.hi[a] <= b.hi[a] + tol);
        if !inside {
            return Err(Error::domain("extremes: region is not contained in the exponent's box"));
        }
        Ok(self.extremes_unchecked(region))
    }

    /// `p'(·) = p(·)/(p(·) − 1)`; requires `p^- > 1`.
    pub fn conjugate(&self) -> Result<Self> {
        if !(self.p_minus > T::one()) {
            return Err(Error::domain(format!(
                "conjugate exponent is unbounded: p^- = {} must exceed 1",
                self.p_minus
            )));
        }
        let inner = Arc::new(self.clone());
        let mut out = ExponentField {
            kind: ExponentKind::Conjugate(inner),
            bbox: self.bbox,
            floor: T::one(),
            p_minus: conjugate_exponent(self.p_plus),
            p_plus: conjugate_exponent(self.p_minus),
            p_inf: None,
        };
        if let Some(v) = self.p_inf {
            out.p_inf = Some(conjugate_exponent(v));
        }
        Ok(out)
    }

    /// `c·p(·)`; requires `c ≥ 1/p^-` so that the result is still an exponent.
    pub fn scale(&self, factor: T) -> Result<Self> {
        if self.floor >= T::one() && factor * self.p_minus < T::one() - T::min_rel_tol() {
            return Err(Error::domain(format!(
                "scale factor {factor} is below 1/p^- = {}",
                T::one() / self.p_minus
            )));
        }
        if !(factor > T::zero()) {
            return Err(Error::domain("scale factor must be positive"));
        }
        Ok(ExponentField {
            kind: ExponentKind::Scale { factor, p: Arc::new(self.clone()) },
            bbox: self.bbox,
            floor: self.floor,
            p_minus: factor * self.p_minus,
            p_plus: factor * self.p_plus,
            p_inf: self.p_inf.map(|v| factor * v),
        })
    }

    /// Pointwise combination with `other` on the same box.
    pub fn combine(&self, other: &ExponentField<T>, mode: CombineMode) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::domain("cannot combine exponents of different dimension"));
        }
        if mode == CombineMode::Difference {
            let r = self.bbox.rect();
            let ok = if let (Some(p), Some(q)) = (self.as_constant(), other.as_constant()) {
                p < q
            } else {
                sample_points(&r, sample_density(self.dim()))
                    .iter()
                    .all(|x| self.value(x) < other.value(x))
            };
            if !ok {
                return Err(Error::domain(
                    "difference exponent 1/β = 1/p − 1/q needs p < q at every point",
                ));
            }
        }
        let kind = ExponentKind::Combine { mode, p: Arc::new(self.clone()), q: Arc::new(other.clone()) };
        let floor = match mode {
            CombineMode::Difference => T::one(),
            CombineMode::Sum | CombineMode::Product => T::zero(),
        };
        Self::build(kind, self.bbox, floor)
    }

    /// Pointwise regularity constants from `pair_budget` random pairs plus a
    /// deterministic lattice of points and pairs shrinking onto anchors.
    pub fn regularity(&self, pair_budget: usize) -> RegularityReport<T> {
        self.regularity_seeded(pair_budget, 0x5eed_1a7e)
    }

    pub fn regularity_seeded(&self, pair_budget: usize, seed: u64) -> RegularityReport<T> {
        let dim = self.dim();
        let r = self.bbox.rect();
        let per_axis = if dim == 1 { 65 } else { 9 };
        let lattice = sample_points(&r, per_axis);
        let mut pairs: Vec<(Point<T>, Point<T>)> = Vec::new();
        for (i, x) in lattice.iter().enumerate() {
            for y in &lattice[i + 1..] {
                pairs.push((*x, *y));
            }
        }
        let mut anchors = vec![self.bbox.center()];
        self.collect_centers(&mut anchors);
        for c in &anchors {
            if !r.contains_point(c) {
                continue;
            }
            for k in 1..=40 {
                let h = self.bbox.side() * lit::<T>(2.0).powi(-k);
                for dir in [T::one(), -T::one()] {
                    let mut y = *c;
                    y[0] += dir * h;
                    if r.contains_point(&y) {
                        pairs.push((*c, y));
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random_point = |rng: &mut ChaCha8Rng| {
            let mut x = [T::zero(); 2];
            for a in 0..dim {
                let u: f64 = rng.gen();
                x[a] = r.lo[a] + (r.hi[a] - r.lo[a]) * lit(u);
            }
            x
        };
        for _ in 0..pair_budget.max(2) {
            let x = random_point(&mut rng);
            let y = random_point(&mut rng);
            pairs.push((x, y));
        }

        let inv_inf = T::one() / self.p_infinity();
        let mut local = T::zero();
        let mut loglog = T::zero();
        for (x, y) in &pairs {
            let d = distance(dim, x, y);
            if d <= T::zero() {
                continue;
            }
            let (px, py) = (self.value(x), self.value(y));
            let inv_gap = (T::one() / px - T::one() / py).abs();
            local = local.max(inv_gap * log_e_plus(T::one() / d));
            loglog = loglog.max((px - py).abs() * log_e_plus(log_e_plus(T::one() / d)));
        }
        let mut at_inf = T::zero();
        for x in lattice.iter().chain(pairs.iter().map(|(x, _)| x)) {
            let gap = (T::one() / self.value(x) - inv_inf).abs();
            at_inf = at_inf.max(gap * log_e_plus(norm(dim, x)));
        }
        if self.is_constant() {
            local = T::zero();
            loglog = T::zero();
            if self.p_inf.is_none() || self.p_inf == Some(self.p_minus) {
                at_inf = T::zero();
            }
        }
        RegularityReport {
            local_logholder_constant: local,
            at_infinity_constant: at_inf,
            loglog_constant: loglog,
            sample_count: pairs.len(),
        }
    }

    fn collect_centers(&self, out: &mut Vec<Point<T>>) {
        match &self.kind {
            ExponentKind::LogSmooth { center, .. } | ExponentKind::LogLogSmooth { center, .. } => out.push(*center),
            ExponentKind::Conjugate(p) | ExponentKind::Scale { p, .. } | ExponentKind::Delta { r: p, .. } => {
                p.collect_centers(out)
            }
            ExponentKind::Combine { p, q, .. } => {
                p.collect_centers(out);
                q.collect_centers(out);
            }
            _ => {}
        }
    }

    /// Whether `p_∞ ≤ p(x)` holds on the box.
    pub fn infinity_is_lower_bound(&self) -> bool {
        self.p_infinity() <= self.p_minus * (T::one() + T::min_rel_tol())
    }
}

fn combine_values<T: Scalar>(mode: CombineMode, p: T, q: T) -> T {
    match mode {
        CombineMode::Difference => T::one() / (T::one() / p - T::one() / q),
        CombineMode::Sum => T::one() / (T::one() / p + T::one() / q),
        CombineMode::Product => p * q,
    }
}

/// `δ(·) = n(1/γ − 1/r(·))`, defined when `1 < γ ≤ r^- ≤ r^+ < nγ/(n − γ)^+`.
pub fn delta_exponent<T: Scalar>(gamma: T, r: &ExponentField<T>) -> Result<ExponentField<T>> {
    let n = from_usize::<T>(r.dim());
    if !(gamma > T::one()) {
        return Err(Error::precondition("1 < γ", format!("γ = {gamma}")));
    }
    let slack = T::min_rel_tol() * gamma;
    if r.p_minus() < gamma - slack {
        return Err(Error::precondition("γ ≤ r^-", format!("γ = {gamma}, r^- = {}", r.p_minus())));
    }
    let upper = if n > gamma { n * gamma / (n - gamma) } else { T::infinity() };
    if !(r.p_plus() < upper) {
        return Err(Error::precondition(
            "r^+ < nγ/(n − γ)^+",
            format!("r^+ = {}, bound = {upper}", r.p_plus()),
        ));
    }
    let inner = Arc::new(r.clone());
    let lo = (n * (T::one() / gamma - T::one() / r.p_minus())).max(T::zero());
    let hi = (n * (T::one() / gamma - T::one() / r.p_plus())).max(T::zero());
    Ok(ExponentField {
        kind: ExponentKind::Delta { gamma, r: inner },
        bbox: *r.bbox(),
        floor: T::zero(),
        p_minus: lo,
        p_plus: hi,
        p_inf: None,
    })
}

/// The exponent `n/δ(·) = 1/(1/γ − 1/r(·))` of the variable cube functional; needs `r > γ` everywhere.
pub fn norm_exponent_of_delta<T: Scalar>(gamma: T, r: &ExponentField<T>) -> Result<ExponentField<T>> {
    let g = ExponentField::constant(gamma, *r.bbox())?;
    g.combine(r, CombineMode::Difference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(dim: usize) -> BoundingBox<f64> {
        BoundingBox::unit(dim).unwrap()
    }

    #[test]
    fn constant_and_affine_extremes() {
        let p = ExponentField::constant(2.0, unit(1)).unwrap();
        assert_eq!(p.extremes(&unit(1).rect()).unwrap(), (2.0, 2.0));
        let q = ExponentField::affine_clamped([1.0, 0.0], 2.0, 2.0, 3.0, unit(1)).unwrap();
        assert_eq!(q.extremes(&unit(1).rect()).unwrap(), (2.0, 3.0));
        let half = Rect::new(1, [0.0, 0.0], [0.5, 0.0]);
        assert_eq!(q.extremes(&half).unwrap(), (2.0, 2.5));
        let outside = Rect::new(1, [0.5, 0.0], [1.5, 0.0]);
        assert!(q.extremes(&outside).is_err());
    }

    #[test]
    fn log_smooth_extremes_match_dense_sampling() {
        let bbox = BoundingBox::from_bounds(1, -1.0, 1.0).unwrap();
        let p = ExponentField::log_smooth(2.0, 0.3, [0.0, 0.0], bbox).unwrap();
        let (lo, hi) = p.extremes(&bbox.rect()).unwrap();
        let mut dlo = f64::INFINITY;
        let mut dhi = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let x = -1.0 + 2.0 * i as f64 / 100_000.0;
            let v = p.value(&[x, 0.0]);
            dlo = dlo.min(v);
            dhi = dhi.max(v);
        }
        assert_relative_eq!(lo, dlo, max_relative = 1e-12);
        assert_relative_eq!(hi, dhi, max_relative = 1e-12);
        assert_eq!(hi, 2.0);
    }

    #[test]
    fn conjugates() {
        let p = ExponentField::constant(4.0, unit(1)).unwrap();
        assert_relative_eq!(p.conjugate().unwrap().p_plus(), 4.0 / 3.0);
        let q = ExponentField::affine_clamped([1.0, 0.0], 2.0, 1.0, 10.0, unit(1)).unwrap();
        let qc = q.conjugate().unwrap();
        assert_relative_eq!(qc.value(&[0.0, 0.0]), 2.0);
        assert_relative_eq!(qc.value(&[1.0, 0.0]), 1.5);
        assert_eq!(qc.p_minus(), conjugate_exponent(q.p_plus()));
        assert_eq!(qc.p_plus(), conjugate_exponent(q.p_minus()));
        assert!(ExponentField::constant(1.0, unit(1)).unwrap().conjugate().is_err());
    }

    #[test]
    fn combinations() {
        let b = unit(1);
        let c = |v| ExponentField::constant(v, b).unwrap();
        let beta = c(2.0).combine(&c(4.0), CombineMode::Difference).unwrap();
        assert_relative_eq!(beta.p_plus(), 4.0);
        let alpha = c(3.0).combine(&c(6.0), CombineMode::Sum).unwrap();
        assert_relative_eq!(alpha.p_minus(), 2.0);
        assert_relative_eq!(c(2.0).scale(3.0).unwrap().p_plus(), 6.0);
        assert!(c(4.0).combine(&c(2.0), CombineMode::Difference).is_err());
        assert!(c(2.0).combine(&c(2.0), CombineMode::Difference).is_err());
        assert!(c(2.0).scale(0.4).is_err());
    }

    #[test]
    fn delta_examples() {
        let b1 = unit(1);
        let r = ExponentField::constant(2.0, b1).unwrap();
        assert_eq!(delta_exponent(2.0, &r).unwrap().p_plus(), 0.0);
        let d = delta_exponent(4.0 / 3.0, &r).unwrap();
        assert_relative_eq!(d.value(&[0.3, 0.0]), 0.25, epsilon = 1e-15);
        let b2 = unit(2);
        let r2 = ExponentField::affine_clamped([1.0, 0.0], 2.0, 2.0, 3.0, b2).unwrap();
        let d2 = delta_exponent(2.0, &r2).unwrap();
        assert_eq!(d2.p_minus(), 0.0);
        assert_relative_eq!(d2.p_plus(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(delta_exponent(1.0, &r).is_err());
        assert!(delta_exponent(2.5, &r).is_err());
        let wide = ExponentField::constant(3.0, b1).unwrap();
        // n = 1, γ = 4/3: bound nγ/(n−γ)^+ is infinite.
        assert!(delta_exponent(4.0 / 3.0, &wide).is_ok());
        let b2c = ExponentField::constant(8.0, b2).unwrap();
        // n = 2, γ = 1.5: bound is 6.
        assert!(delta_exponent(1.5, &b2c).is_err());
    }

    #[test]
    fn regularity_of_constant_is_zero() {
        let r = ExponentField::constant(2.5, unit(2)).unwrap().regularity(100);
        assert_eq!(r.local_logholder_constant, 0.0);
        assert_eq!(r.at_infinity_constant, 0.0);
        assert_eq!(r.loglog_constant, 0.0);
    }

    #[test]
    fn log_smooth_regularity_recovers_amplitude() {
        let bbox = BoundingBox::from_bounds(1, -1.0, 1.0).unwrap();
        for a in [0.1f64, 0.3] {
            let p = ExponentField::log_smooth(2.0, a, [0.0, 0.0], bbox).unwrap();
            let c = p.regularity(500).local_logholder_constant;
            assert!((c - a).abs() <= 0.1 * a, "a = {a}, c = {c}");
        }
    }

    #[test]
    fn regularity_monotone_in_slope() {
        let b = unit(1);
        let p1 = ExponentField::affine_clamped([0.5, 0.0], 2.0, 1.0, 10.0, b).unwrap();
        let p2 = ExponentField::affine_clamped([2.0, 0.0], 2.0, 1.0, 10.0, b).unwrap();
        assert!(p1.regularity(200).local_logholder_constant < p2.regularity(200).local_logholder_constant);
    }

    #[test]
    fn f32_conjugate() {
        let b = BoundingBox::<f32>::unit(1).unwrap();
        let p = ExponentField::constant(3.0f32, b).unwrap();
        assert!((p.conjugate().unwrap().p_plus() - 1.5).abs() < 1e-6);
    }
}
