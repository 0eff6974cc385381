//! Generalized Φ-functions of power-log type, `φ(x,t) = t^{α(x)} (log(e+t))^{θ(x)}`,
//! together with generalized inverses and grid-sup conjugates.

use std::sync::Arc;

use crate::domain::{BoundingBox, Point};
use crate::error::{Error, Result};
use crate::exponent::{sample_points, CombineMode, ExponentField, ExponentKind};
use crate::roots::{bisect_threshold, relative_width};
use crate::scalar::{conjugate_exponent, lit, log_e_plus, Scalar};

const INVERSE_MAX_ITER: usize = 400;

/// `t ↦ t^α (log(e+t))^θ` at a fixed point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLog<T> {
    pub alpha: T,
    pub theta: T,
}

impl<T: Scalar> PowerLog<T> {
    pub fn new(alpha: T, theta: T) -> Self {
        PowerLog { alpha, theta }
    }

    /// Plain power `t^α`.
    pub fn power(alpha: T) -> Self {
        PowerLog { alpha, theta: T::zero() }
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let p = t.powf(self.alpha);
        if self.theta == T::zero() {
            p
        } else {
            p * log_e_plus(t).powf(self.theta)
        }
    }

    /// `φ'(t)`.
    pub fn derivative(&self, t: T) -> T {
        if t <= T::zero() {
            return if self.alpha == T::one() { T::one() } else { T::zero() };
        }
        let l = log_e_plus(t);
        let main = self.alpha * t.powf(self.alpha - T::one()) * l.powf(self.theta);
        if self.theta == T::zero() {
            main
        } else {
            main + self.theta * t.powf(self.alpha) * l.powf(self.theta - T::one()) / (T::E() + t)
        }
    }

    /// `inf{u ≥ 0 : φ(u) ≥ s}`, with `φ(result) ∈ [s, s(1+tol)]`; exact for `θ = 0`.
    pub fn inverse(&self, s: T, tol: T) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        let root = s.powf(T::one() / self.alpha);
        if self.theta == T::zero() || !root.is_finite() {
            return root;
        }
        let target = s * (T::one() + tol.max(T::min_rel_tol()));
        let pred = |u: T| self.eval(u) >= s;
        let done = |_lo: T, hi: T| self.eval(hi) <= target;
        match bisect_threshold(pred, root, done, INVERSE_MAX_ITER) {
            Ok(th) => th.hi,
            Err(_) => root,
        }
    }

    /// `max_{t ∈ {0} ∪ grid} (tu − φ(t))`, a lower bound for the conjugate `φ*(u)`;
    /// for convex `φ` the maximizer is further polished between grid nodes.
    pub fn conjugate(&self, u: T, grid: &[T]) -> T {
        if u <= T::zero() || grid.is_empty() {
            return T::zero();
        }
        let g = |t: T| t * u - self.eval(t);
        let best = if self.alpha >= T::one() {
            // tu − φ(t) is concave, hence unimodal along the sorted grid.
            let (mut lo, mut hi) = (0usize, grid.len() - 1);
            while hi - lo > 2 {
                let m1 = lo + (hi - lo) / 3;
                let m2 = hi - (hi - lo) / 3;
                if g(grid[m1]) < g(grid[m2]) {
                    lo = m1 + 1;
                } else {
                    hi = m2;
                }
            }
            let best = (lo..=hi).max_by(|&a, &b| g(grid[a]).partial_cmp(&g(grid[b])).unwrap_or(std::cmp::Ordering::Equal));
            let i = best.unwrap_or(lo);
            // Polish between the neighbouring nodes; any t still gives a lower bound.
            let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
            let mut v = g(grid[i]);
            for _ in 0..CONJUGATE_POLISH {
                let m1 = a + (b - a) / lit(3.0);
                let m2 = b - (b - a) / lit(3.0);
                let (g1, g2) = (g(m1), g(m2));
                v = v.max(g1).max(g2);
                if g1 < g2 {
                    a = m1;
                } else {
                    b = m2;
                }
            }
            v
        } else {
            grid.iter().map(|&t| g(t)).fold(T::neg_infinity(), T::max)
        };
        best.max(T::zero())
    }
}

const CONJUGATE_POLISH: usize = 40;

/// Geometric grid of `points` values spanning `[lo, hi]`.
pub fn geometric_grid<T: Scalar>(lo: T, hi: T, points: usize) -> Vec<T> {
    let n = points.max(2);
    let ratio = (hi / lo).ln() / lit::<T>((n - 1) as f64);
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo * (ratio * lit::<T>(i as f64)).exp() })
        .collect()
}

/// The default conjugation grid: 400 geometric points on `[1e-8, 1e8]`.
pub fn default_conjugate_grid<T: Scalar>() -> Arc<Vec<T>> {
    Arc::new(geometric_grid(lit(1e-8), lit(1e8), 400))
}

/// A G-Φ function frozen at one point.
#[derive(Debug, Clone, Copy)]
pub enum LocalPhi<'a, T> {
    Direct(PowerLog<T>),
    /// Grid-sup conjugate of the power-log function.
    Conjugate(PowerLog<T>, &'a [T]),
}

impl<T: Scalar> LocalPhi<'_, T> {
    #[inline]
    pub fn eval(&self, t: T) -> T {
        match self {
            LocalPhi::Direct(f) => f.eval(t),
            LocalPhi::Conjugate(f, grid) => f.conjugate(t, grid),
        }
    }

    pub fn inverse(&self, s: T, tol: T) -> T {
        match self {
            LocalPhi::Direct(f) => f.inverse(s, tol),
            LocalPhi::Conjugate(..) => {
                if s <= T::zero() {
                    return T::zero();
                }
                let pred = |u: T| self.eval(u) >= s;
                match bisect_threshold(pred, T::one(), relative_width(tol), INVERSE_MAX_ITER) {
                    Ok(th) => th.hi,
                    Err(_) => T::infinity(),
                }
            }
        }
    }

    /// `Some(p)` when this is the pure power `t^p`.
    pub fn as_power(&self) -> Option<T> {
        match self {
            LocalPhi::Direct(f) if f.theta == T::zero() => Some(f.alpha),
            _ => None,
        }
    }
}

/// Anything that can be frozen into a [`LocalPhi`] at a point.
pub trait Phi<T: Scalar>: Sync {
    fn at(&self, x: &Point<T>) -> LocalPhi<'_, T>;
    fn dim(&self) -> usize;
}

/// `φ(x,t) = t^{α(x)} (log(e+t))^{θ(x)}`.
#[derive(Debug, Clone)]
pub struct GPhiFunction<T> {
    pub alpha: ExponentField<T>,
    pub theta: ExponentField<T>,
}

impl<T: Scalar> GPhiFunction<T> {
    pub fn new(alpha: ExponentField<T>, theta: ExponentField<T>) -> Result<Self> {
        if !(alpha.p_minus() > T::zero()) {
            return Err(Error::domain("G-Φ function needs α^- > 0"));
        }
        if theta.p_minus() < T::zero() {
            return Err(Error::domain("G-Φ function needs θ^- ≥ 0"));
        }
        if alpha.dim() != theta.dim() {
            return Err(Error::domain("α and θ live in different dimensions"));
        }
        Ok(GPhiFunction { alpha, theta })
    }

    /// `t^{p(x)}`.
    pub fn power(p: ExponentField<T>) -> Result<Self> {
        let zero = ExponentField::nonnegative(ExponentKind::Constant(T::zero()), *p.bbox())?;
        Self::new(p, zero)
    }

    /// `t^a (log(e+t))^b` with constant `a, b`.
    pub fn constant(alpha: T, theta: T, bbox: BoundingBox<T>) -> Result<Self> {
        let a = ExponentField::nonnegative(ExponentKind::Constant(alpha), bbox)?;
        let b = ExponentField::nonnegative(ExponentKind::Constant(theta), bbox)?;
        Self::new(a, b)
    }

    pub fn local(&self, x: &Point<T>) -> PowerLog<T> {
        PowerLog::new(self.alpha.value(x), self.theta.value(x))
    }

    pub fn evaluate(&self, x: &Point<T>, t: T) -> Result<T> {
        if t < T::zero() {
            return Err(Error::domain(format!("G-Φ functions are evaluated at t ≥ 0, got {t}")));
        }
        Ok(self.local(x).eval(t))
    }

    pub fn inverse(&self, x: &Point<T>, s: T, tol: T) -> Result<T> {
        if s < T::zero() || !(tol > T::zero()) {
            return Err(Error::domain("inverse needs s ≥ 0 and tol > 0"));
        }
        Ok(self.local(x).inverse(s, tol))
    }

    pub fn conjugate_at(&self, x: &Point<T>, u: T, t_grid: &[T]) -> Result<T> {
        if t_grid.is_empty() {
            return Err(Error::domain("conjugation grid is empty"));
        }
        if u < T::zero() {
            return Err(Error::domain("conjugate is evaluated at u ≥ 0"));
        }
        Ok(self.local(x).conjugate(u, t_grid))
    }

    /// `φ(x,v) + φ*(x,u) − vu`; nonnegative up to the conjugation-grid defect.
    pub fn young_defect(&self, x: &Point<T>, v: T, u: T, t_grid: &[T]) -> Result<T> {
        if v < T::zero() || u < T::zero() {
            return Err(Error::domain("Young defect needs v, u ≥ 0"));
        }
        let f = self.local(x);
        Ok(f.eval(v) + f.conjugate(u, t_grid) - v * u)
    }

    /// The conjugate `φ*` as a Φ-function over the given grid.
    pub fn conjugate(&self, t_grid: Arc<Vec<T>>) -> ConjugatePhi<T> {
        ConjugatePhi { base: self.clone(), t_grid }
    }

    pub fn is_power(&self) -> bool {
        self.theta.as_constant() == Some(T::zero())
    }
}

impl<T: Scalar> Phi<T> for GPhiFunction<T> {
    fn at(&self, x: &Point<T>) -> LocalPhi<'_, T> {
        LocalPhi::Direct(self.local(x))
    }

    fn dim(&self) -> usize {
        self.alpha.dim()
    }
}

/// `φ*(x,u) = sup_t (tu − φ(x,t))`, with the sup taken over a fixed grid.
#[derive(Debug, Clone)]
pub struct ConjugatePhi<T> {
    pub base: GPhiFunction<T>,
    pub t_grid: Arc<Vec<T>>,
}

impl<T: Scalar> Phi<T> for ConjugatePhi<T> {
    fn at(&self, x: &Point<T>) -> LocalPhi<'_, T> {
        LocalPhi::Conjugate(self.base.local(x), &self.t_grid)
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }
}

/// Three G-Φ functions meant to satisfy condition F (checked elsewhere).
#[derive(Debug, Clone)]
pub struct PhiTriple<T> {
    pub a: GPhiFunction<T>,
    pub b: GPhiFunction<T>,
    pub d: GPhiFunction<T>,
}

/// Which of the two standard condition-F families to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleFamily {
    /// `A = t^{σp'} (log(e+t))^{σp'}`, `B = t^{(σp')'}`, `D = t log(e+t)`.
    LogBump,
    /// `A = t^μ (log(e+t))^{νμ}`, `B = t^{(σp')'}`, `D = t^α (log(e+t))^{αν}`
    /// with `1/α = 1/μ + 1/(σp')'`.
    PowerBump,
}

/// Smallest sampled value of `1/(σp'(x)) − 1/μ(x)`.
pub fn bump_gap<T: Scalar>(p_conj: &ExponentField<T>, sigma: T, mu: &ExponentField<T>) -> T {
    if let (Some(pc), Some(m)) = (p_conj.as_constant(), mu.as_constant()) {
        return T::one() / (sigma * pc) - T::one() / m;
    }
    let per_axis = if p_conj.dim() == 1 { 1025 } else { 129 };
    sample_points(&p_conj.bbox().rect(), per_axis)
        .iter()
        .map(|x| T::one() / (sigma * p_conj.value(x)) - T::one() / mu.value(x))
        .fold(T::infinity(), T::min)
}

/// Builds the condition-F triples of the two standard families. The same
/// triple serves as `(A, B, D)` and `(E, H, J)`.
pub fn build_example_triple<T: Scalar>(
    family: ExampleFamily,
    p: &ExponentField<T>,
    sigma: T,
    mu: Option<&ExponentField<T>>,
    nu: Option<&ExponentField<T>>,
    epsilon: T,
) -> Result<(PhiTriple<T>, PhiTriple<T>)> {
    let bbox = *p.bbox();
    let p_conj = p.conjugate()?;
    let threshold = p_conj.p_plus() / p_conj.p_minus();
    if !(sigma > threshold) {
        return Err(Error::precondition(
            "σ > (p')^+/(p')^-",
            format!("σ = {sigma}, (p')^+/(p')^- = {threshold}"),
        ));
    }
    let sp = p_conj.scale(sigma)?;
    let sp_conj = sp.conjugate()?;
    let b = GPhiFunction::power(sp_conj.clone())?;
    let triple = match family {
        ExampleFamily::LogBump => PhiTriple {
            a: GPhiFunction::new(sp.clone(), sp)?,
            b,
            d: GPhiFunction::constant(T::one(), T::one(), bbox)?,
        },
        ExampleFamily::PowerBump => {
            let mu = mu.ok_or_else(|| Error::domain("the power-bump family needs μ(·)"))?;
            if !(mu.p_minus() > T::one()) {
                return Err(Error::precondition("1 < μ^-", format!("μ^- = {}", mu.p_minus())));
            }
            if !(epsilon > T::zero() && epsilon < T::one()) {
                return Err(Error::precondition("ε ∈ (0,1)", format!("ε = {epsilon}")));
            }
            let gap = bump_gap(&p_conj, sigma, mu);
            if !(gap > epsilon) {
                return Err(Error::precondition(
                    "1/(σp'(·)) − 1/μ(·) > ε",
                    format!("smallest gap {gap}, ε = {epsilon}"),
                ));
            }
            let zero = ExponentField::nonnegative(ExponentKind::Constant(T::zero()), bbox)?;
            let nu = nu.cloned().unwrap_or(zero);
            let alpha = mu.combine(&sp_conj, CombineMode::Sum)?;
            PhiTriple {
                a: GPhiFunction::new(mu.clone(), nu.combine(mu, CombineMode::Product)?)?,
                b,
                d: GPhiFunction::new(alpha.clone(), alpha.combine(&nu, CombineMode::Product)?)?,
            }
        }
    };
    Ok((triple.clone(), triple))
}

/// The closed-form inverse shape `s^{1/α} (log(e+s))^{−θ/α}`.
pub fn inverse_asymptote<T: Scalar>(f: &PowerLog<T>, s: T) -> T {
    s.powf(T::one() / f.alpha) * log_e_plus(s).powf(-f.theta / f.alpha)
}

/// The closed-form conjugate of `t^p`, `(p−1) p^{−p'} u^{p'}`.
pub fn power_conjugate<T: Scalar>(p: T, u: T) -> T {
    let pc = conjugate_exponent(p);
    (p - T::one()) * p.powf(-pc) * u.powf(pc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> BoundingBox<f64> {
        BoundingBox::unit(1).unwrap()
    }

    #[test]
    fn evaluation() {
        let f = PowerLog::power(2.0f64);
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(PowerLog::new(1.7, 2.0).eval(0.0), 0.0);
        let e = std::f64::consts::E;
        let t = e * e - e;
        assert_relative_eq!(PowerLog::new(1.0, 1.0).eval(t), 2.0 * t, max_relative = 1e-14);
        let g = GPhiFunction::constant(2.0, 0.0, unit()).unwrap();
        assert!(g.evaluate(&[0.5, 0.0], -1.0).is_err());
    }

    #[test]
    fn inverses() {
        assert_eq!(PowerLog::power(2.0).inverse(9.0, 1e-12), 3.0);
        assert_eq!(PowerLog::new(2.0, 1.0).inverse(0.0, 1e-12), 0.0);
        let f = PowerLog::new(2.0, 1.0);
        let tol = 1e-10;
        let u = f.inverse(100.0, tol);
        let v = f.eval(u);
        assert!((100.0..=100.0 * (1.0 + tol)).contains(&v));
        let shape = inverse_asymptote(&f, 100.0);
        assert!(u / shape <= 4.0 && shape / u <= 4.0);
    }

    #[test]
    fn conjugates() {
        let grid = geometric_grid(1e-8, 1e8, 4001);
        let f = PowerLog::power(2.0f64);
        assert!((f.conjugate(4.0, &grid) - 4.0).abs() < 1e-4);
        assert_eq!(f.conjugate(0.0, &grid), 0.0);
        let g = PowerLog::power(1.5f64);
        let coarse = g.conjugate(1.0, &geometric_grid(1e-8, 1e8, 400));
        let dense = g.conjugate(1.0, &geometric_grid(1e-8, 1e8, 40_000));
        assert!(coarse <= dense);
        assert!((coarse - dense).abs() <= 0.05 * dense);
        assert_relative_eq!(dense, power_conjugate(1.5, 1.0), max_relative = 1e-4);
    }

    #[test]
    fn young_power_case() {
        let g = GPhiFunction::constant(2.0, 0.0, unit()).unwrap();
        let grid = geometric_grid(1e-8, 1e8, 4001);
        assert_eq!(g.young_defect(&[0.5, 0.0], 0.0, 0.0, &grid).unwrap(), 0.0);
        // φ(2) = 4 and φ*(2) = sup(2t − t²) = 1.
        let d: f64 = g.young_defect(&[0.5, 0.0], 2.0, 2.0, &grid).unwrap();
        assert!((d - 1.0).abs() < 1e-4);
    }

    #[test]
    fn example_triples() {
        let p = ExponentField::constant(2.0, unit()).unwrap();
        let (t, _) = build_example_triple(ExampleFamily::LogBump, &p, 2.0, None, None, 0.1).unwrap();
        let x = [0.5, 0.0];
        assert_relative_eq!(t.a.local(&x).alpha, 4.0);
        assert_relative_eq!(t.a.local(&x).theta, 4.0);
        assert_relative_eq!(t.b.local(&x).alpha, 4.0 / 3.0);
        assert_eq!((t.d.local(&x).alpha, t.d.local(&x).theta), (1.0, 1.0));

        let mu = ExponentField::constant(8.0, unit()).unwrap();
        let nu = ExponentField::nonnegative(ExponentKind::Constant(0.0), unit()).unwrap();
        assert!(build_example_triple(ExampleFamily::PowerBump, &p, 2.0, Some(&mu), Some(&nu), 0.1).is_ok());
        let (t2, _) = build_example_triple(ExampleFamily::PowerBump, &p, 2.0, Some(&mu), Some(&nu), 0.05).unwrap();
        assert_relative_eq!(t2.d.local(&x).alpha, 8.0 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(t2.a.local(&x).alpha, 8.0);
        let tight = build_example_triple(ExampleFamily::PowerBump, &p, 2.0, Some(&mu), Some(&nu), 0.2);
        assert!(matches!(tight, Err(Error::Precondition { .. })));

        let q = ExponentField::affine_clamped([1.0, 0.0], 2.0, 2.0, 3.0, unit()).unwrap();
        // (p')^+/(p')^- = 2/(3/2) = 4/3.
        assert!(build_example_triple(ExampleFamily::LogBump, &q, 1.3, None, None, 0.1).is_err());
        assert!(build_example_triple(ExampleFamily::LogBump, &q, 1.4, None, None, 0.1).is_ok());
    }
}
