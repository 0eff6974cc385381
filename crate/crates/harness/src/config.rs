//! Experiment configuration.
//!
//! # Grammar
//!
//! A config is a TOML document: a few top-level keys plus one table per
//! module. Every table is optional unless a command needs it; unknown keys
//! are rejected.
//!
//! ```toml
//! name = "thm11_flat"          # report label; also the calibration key
//! seed = 7                     # overridden by --seed
//! calibrate = ["verify"]       # what `varlex calibrate` measures: verify | formula | suite
//!
//! [domain]
//! dim = 1                      # 1 or 2
//! center = [0.5]               # box center, one entry per axis
//! half_width = 0.5
//! cells = 512                  # cells per side, a power of two
//! j_min = 0                    # lattice levels (side 2^-j)
//! j_max = 8
//! coverage = "contained"       # or "intersecting"
//! shifted_per_level = 0        # extra randomly shifted cubes per level
//!
//! [exponents.p]                # also: q, r, tau, log_power
//! kind = "constant"            # constant | affine | log_smooth | loglog_smooth
//! value = 2.0                  # constant
//! # slope = [1.0, 0.0], intercept = 1.5, lo = 1.5, hi = 2.5     (affine)
//! # base = 2.0, amplitude = 0.3, center = [0.5, 0.0]            (log_smooth)
//! # base = 1.0, amplitude = 0.5, center = [0.5, 0.0], floor = 0 (loglog_smooth)
//!
//! [kernel]
//! kind = "fractional"          # fractional | bessel_like | dyadic_step | tabulated
//! alpha = 0.25                 # fractional
//! # beta, lambda (bessel_like); decay (dyadic_step); radii, values or csv (tabulated)
//!
//! [symbol]                     # b(x) = offset + Σ c |x − center|^exponent
//! offset = 0.0
//! terms = [{ coefficient = 1.0, center = [0.5, 0.0], exponent = 0.25 }]
//!
//! [functional]                 # the cube functional a(Q)
//! kind = "one"                 # one | power (delta) | variable (gamma, r)
//!
//! [weights.v]                  # also weights.w
//! kind = "unit"                # unit | power (center, gamma)
//!
//! [triple]                     # G-Φ triple for the second theorem and condition F
//! family = "log_bump"          # log_bump | power_bump | quadratic
//! sigma = 2.0
//! epsilon = 0.1
//! # mu, nu: exponent tables (power_bump)
//!
//! [theorem]
//! which = "1.1"                # 1.1 | 1.2
//! r = 2.0
//! s = 2.0
//! m = 0
//! rho = 1.0
//!
//! [verification]
//! alpha = 8.0                  # stopping base; omitted → 2Π from a first pass
//! trials = 200
//! formula_levels = [0, 20]
//! formula_anchors = 6
//! majorant_configs = 20
//! stopping_fields = 10
//! class_d = [1.0, 0.0]         # (δ, ε)
//! class_d_range = [-10, 10]
//!
//! [tolerances]
//! luxemburg = 1e-10
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use varlex_core::conditions::{power_weight, WeightPair};
use varlex_core::domain::{BoundingBox, Coverage, CubeLattice, Grid, GridFunction, Point};
use varlex_core::exponent::{delta_exponent, ExponentField, ExponentKind};
use varlex_core::gphi::{build_example_triple, ExampleFamily, PhiTriple};
use varlex_core::operators::Kernel;
use varlex_core::symbols::{CubeFunctional, PowerSymbol, PowerTerm};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainSpec,
    #[serde(default)]
    pub exponents: ExponentSpecs,
    pub kernel: Option<KernelSpec>,
    pub symbol: Option<SymbolSpec>,
    #[serde(default)]
    pub functional: FunctionalSpec,
    #[serde(default)]
    pub weights: WeightSpecs,
    pub triple: Option<TripleSpec>,
    #[serde(default)]
    pub theorem: TheoremParams,
    #[serde(default)]
    pub verification: VerificationParameters,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Commands whose measurements `varlex calibrate` freezes for this config.
    #[serde(default)]
    pub calibrate: Vec<CalibrationTarget>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationTarget {
    Verify,
    Formula,
    Suite,
}

fn default_name() -> String {
    "unnamed".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub center: Vec<f64>,
    pub half_width: f64,
    pub cells: usize,
    pub j_min: i32,
    pub j_max: i32,
    #[serde(default)]
    pub coverage: CoverageSpec,
    #[serde(default)]
    pub shifted_per_level: usize,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CoverageSpec {
    #[default]
    Contained,
    Intersecting,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { value: f64 },
    Affine { slope: [f64; 2], intercept: f64, lo: f64, hi: f64 },
    LogSmooth { base: f64, amplitude: f64, center: [f64; 2] },
    LoglogSmooth { base: f64, amplitude: f64, center: [f64; 2], #[serde(default)] floor: f64 },
}

impl ExponentSpec {
    fn kind(&self) -> ExponentKind<f64> {
        match *self {
            ExponentSpec::Constant { value } => ExponentKind::Constant(value),
            ExponentSpec::Affine { slope, intercept, lo, hi } => ExponentKind::AffineClamped { slope, intercept, lo, hi },
            ExponentSpec::LogSmooth { base, amplitude, center } => ExponentKind::LogSmooth { base, amplitude, center },
            ExponentSpec::LoglogSmooth { base, amplitude, center, .. } => ExponentKind::LogLogSmooth { base, amplitude, center },
        }
    }

    /// An exponent with values in `[1, ∞)`.
    pub fn exponent(&self, bbox: BoundingBox<f64>) -> varlex_core::Result<ExponentField<f64>> {
        match *self {
            ExponentSpec::Constant { value } => ExponentField::constant(value, bbox),
            ExponentSpec::Affine { slope, intercept, lo, hi } => ExponentField::affine_clamped(slope, intercept, lo, hi, bbox),
            ExponentSpec::LogSmooth { base, amplitude, center } => ExponentField::log_smooth(base, amplitude, center, bbox),
            ExponentSpec::LoglogSmooth { base, amplitude, center, floor } => {
                ExponentField::loglog_smooth(base, amplitude, center, bbox, floor.max(1.0))
            }
        }
    }

    /// A nonnegative field such as a log power.
    pub fn nonnegative(&self, bbox: BoundingBox<f64>) -> varlex_core::Result<ExponentField<f64>> {
        match *self {
            ExponentSpec::LoglogSmooth { base, amplitude, center, floor } => {
                ExponentField::loglog_smooth(base, amplitude, center, bbox, floor)
            }
            _ => ExponentField::nonnegative(self.kind(), bbox),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpecs {
    pub p: Option<ExponentSpec>,
    pub q: Option<ExponentSpec>,
    /// The exponent `r(·)` of a variable Lipschitz class.
    pub r: Option<ExponentSpec>,
    /// Exponent of the stopping-time construction; defaults to `p`.
    pub tau: Option<ExponentSpec>,
    /// `q(·)` of `L^{p(·)}(log L)^{q(·)}`.
    pub log_power: Option<ExponentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Fractional { alpha: f64 },
    BesselLike { beta: f64, lambda: f64 },
    DyadicStep { decay: f64 },
    Tabulated {
        #[serde(default)]
        radii: Vec<f64>,
        #[serde(default)]
        values: Vec<f64>,
        csv: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: f64,
    pub center: [f64; 2],
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    #[default]
    One,
    Power { delta: f64 },
    /// `a(Q) = ‖χ_Q‖_{n/δ(·)}` with `δ(·) = n(1/γ − 1/r(·))`, `r` from `exponents.r`.
    Variable { gamma: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    #[default]
    Unit,
    Power { center: [f64; 2], gamma: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpecs {
    #[serde(default)]
    pub v: WeightSpec,
    #[serde(default)]
    pub w: WeightSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    LogBump,
    PowerBump,
    Quadratic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSpec {
    pub family: FamilySpec,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub mu: Option<ExponentSpec>,
    pub nu: Option<ExponentSpec>,
}

fn default_sigma() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
pub enum Which {
    #[default]
    #[serde(rename = "1.1")]
    First,
    #[serde(rename = "1.2")]
    Second,
}

impl std::str::FromStr for Which {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "1.1" => Ok(Which::First),
            "1.2" => Ok(Which::Second),
            _ => Err(format!("expected 1.1 or 1.2, got {s}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremParams {
    #[serde(default)]
    pub which: Which,
    #[serde(default = "two")]
    pub r: f64,
    #[serde(default = "two")]
    pub s: f64,
    #[serde(default)]
    pub m: u32,
    #[serde(default = "one")]
    pub rho: f64,
}

impl Default for TheoremParams {
    fn default() -> Self {
        TheoremParams { which: Which::First, r: 2.0, s: 2.0, m: 0, rho: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Proof-internal choices the theorems leave open.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationParameters {
    /// Stopping base; `None` takes `2Π` from a first pass.
    pub alpha: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_formula_levels")]
    pub formula_levels: [i32; 2],
    #[serde(default = "default_anchors")]
    pub formula_anchors: usize,
    /// Random `(b, m, f)` configurations for the majorant check.
    #[serde(default = "default_majorant_configs")]
    pub majorant_configs: usize,
    /// Random `g·w` fields for the stopping families.
    #[serde(default = "default_stopping_fields")]
    pub stopping_fields: usize,
    /// `(δ, ε)` of the class-D check.
    #[serde(default = "default_class_d")]
    pub class_d: [f64; 2],
    #[serde(default = "default_class_d_range")]
    pub class_d_range: [i32; 2],
}

fn default_class_d() -> [f64; 2] {
    [1.0, 0.0]
}

fn default_class_d_range() -> [i32; 2] {
    [-10, 10]
}

fn default_trials() -> usize {
    200
}

fn default_formula_levels() -> [i32; 2] {
    [0, 20]
}

fn default_anchors() -> usize {
    6
}

fn default_majorant_configs() -> usize {
    20
}

fn default_stopping_fields() -> usize {
    10
}

impl Default for VerificationParameters {
    fn default() -> Self {
        VerificationParameters {
            alpha: None,
            trials: default_trials(),
            formula_levels: default_formula_levels(),
            formula_anchors: default_anchors(),
            majorant_configs: default_majorant_configs(),
            stopping_fields: default_stopping_fields(),
            class_d: default_class_d(),
            class_d_range: default_class_d_range(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_lux")]
    pub luxemburg: f64,
}

fn default_lux() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { luxemburg: default_lux() }
    }
}

/// The objects a config describes, built and validated.
#[derive(Debug, Clone)]
pub struct Setup {
    pub bbox: BoundingBox<f64>,
    pub grid: Grid<f64>,
    pub lattice: CubeLattice<f64>,
    pub p: Option<ExponentField<f64>>,
    pub q: Option<ExponentField<f64>>,
    pub r: Option<ExponentField<f64>>,
    pub tau: Option<ExponentField<f64>>,
    pub log_power: Option<ExponentField<f64>>,
    pub kernel: Option<Kernel<f64>>,
    pub symbol: Option<PowerSymbol<f64>>,
    pub functional: CubeFunctional<f64>,
    pub weights: WeightPair<f64>,
    pub triple: Option<PhiTriple<f64>>,
}

pub(crate) fn invalid(inequality: impl Into<String>, location: impl Into<String>, detail: impl Into<String>) -> HarnessError {
    HarnessError::Config { inequality: inequality.into(), location: location.into(), detail: detail.into() }
}

/// Maps core precondition failures onto config errors located at `location`.
pub(crate) fn at<T>(location: &str, r: varlex_core::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        varlex_core::Error::Precondition { inequality, detail } => invalid(inequality, location, detail),
        other => invalid("well-formed parameters", location, other.to_string()),
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| HarnessError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    /// Builds every described object and re-validates the preconditions the
    /// selected theorem depends on.
    pub fn setup(&self) -> Result<Setup> {
        let d = &self.domain;
        if d.dim != 1 && d.dim != 2 {
            return Err(invalid("n ∈ {1, 2}", "domain.dim", format!("dim = {}", d.dim)));
        }
        if d.center.len() != d.dim {
            return Err(invalid("one center entry per axis", "domain.center", format!("{} entries", d.center.len())));
        }
        let bbox = at("domain", BoundingBox::new(d.dim, &d.center, d.half_width))?;
        let grid = at("domain.cells", Grid::new(bbox, d.cells))?;
        let coverage = match d.coverage {
            CoverageSpec::Contained => Coverage::Contained,
            CoverageSpec::Intersecting => Coverage::Intersecting,
        };
        let mut lattice = at("domain.j_min", CubeLattice::new(bbox, d.j_min, d.j_max))?.with_coverage(coverage);
        if d.shifted_per_level > 0 {
            lattice = lattice.with_shifted(d.shifted_per_level, self.seed);
        }
        let e = &self.exponents;
        let exp = |name: &str, s: &Option<ExponentSpec>| -> Result<Option<ExponentField<f64>>> {
            s.as_ref().map(|s| at(&format!("exponents.{name}"), s.exponent(bbox))).transpose()
        };
        let p = exp("p", &e.p)?;
        let q = exp("q", &e.q)?;
        let r = exp("r", &e.r)?;
        let tau = exp("tau", &e.tau)?.or_else(|| p.clone());
        let log_power = e
            .log_power
            .as_ref()
            .map(|s| at("exponents.log_power", s.nonnegative(bbox)))
            .transpose()?;
        let kernel = self.kernel.as_ref().map(|k| build_kernel(k, d.dim)).transpose()?;
        let symbol = self
            .symbol
            .as_ref()
            .map(|s| {
                let terms = s
                    .terms
                    .iter()
                    .map(|t| PowerTerm { coefficient: t.coefficient, center: t.center, exponent: t.exponent })
                    .collect();
                at("symbol.terms", PowerSymbol::new(d.dim, s.offset, terms))
            })
            .transpose()?;
        let functional = match &self.functional {
            FunctionalSpec::One => CubeFunctional::ConstantOne,
            FunctionalSpec::Power { delta } => at("functional.delta", CubeFunctional::power(*delta))?,
            FunctionalSpec::Variable { gamma } => {
                let r = r
                    .as_ref()
                    .ok_or_else(|| invalid("r(·) given", "exponents.r", "variable functional needs exponents.r"))?;
                let delta = at("functional.gamma", delta_exponent(*gamma, r))?;
                at("functional.gamma", CubeFunctional::from_delta(&delta, &grid))?
            }
        };
        let weight = |name: &str, s: &WeightSpec| -> Result<GridFunction<f64>> {
            match s {
                WeightSpec::Unit => Ok(GridFunction::constant(grid, 1.0)),
                WeightSpec::Power { center, gamma } => at(&format!("weights.{name}"), power_weight(&grid, *center, *gamma)),
            }
        };
        let weights = at("weights", WeightPair::new(weight("v", &self.weights.v)?, weight("w", &self.weights.w)?))?;
        let triple = match &self.triple {
            None => None,
            Some(t) => Some(build_triple(t, p.as_ref(), bbox, &grid)?),
        };
        let setup = Setup { bbox, grid, lattice, p, q, r, tau, log_power, kernel, symbol, functional, weights, triple };
        self.validate_theorem(&setup)?;
        Ok(setup)
    }

    fn validate_theorem(&self, s: &Setup) -> Result<()> {
        let (Some(p), Some(q)) = (&s.p, &s.q) else {
            return Ok(());
        };
        if self.theorem.which == Which::First {
            if !(p.p_minus() > 1.0) {
                return Err(invalid("1 < p^-", "exponents.p", format!("p^- = {}", p.p_minus())));
            }
            let pc = at("exponents.p", p.conjugate())?;
            let bound = pc.p_plus() / pc.p_minus();
            if !(self.theorem.r > bound) {
                return Err(invalid("R > (p')^+/(p')^-", "theorem.r", format!("R = {}, bound = {bound}", self.theorem.r)));
            }
            let bound = q.p_plus() / q.p_minus();
            if !(self.theorem.s > bound) {
                return Err(invalid("S > q^+/q^-", "theorem.s", format!("S = {}, bound = {bound}", self.theorem.s)));
            }
        } else if s.triple.is_none() {
            return Err(invalid("A, E from a condition-F triple", "triple", "the second theorem needs [triple]"));
        }
        for x in s.grid.midpoints() {
            if p.value(&x) > q.value(&x) * (1.0 + 1e-12) {
                return Err(invalid("p(·) ≤ q(·)", "exponents.q", format!("p > q at {:?}", &x[..s.grid.dim()])));
            }
        }
        if !(self.theorem.rho >= 1.0) {
            return Err(invalid("1 ≤ ϱ < ∞", "theorem.rho", format!("ϱ = {}", self.theorem.rho)));
        }
        Ok(())
    }
}

fn build_kernel(k: &KernelSpec, dim: usize) -> Result<Kernel<f64>> {
    let r = match k {
        KernelSpec::Fractional { alpha } => {
            if !(*alpha > 0.0 && *alpha < dim as f64) {
                return Err(invalid("0 < α < n", "kernel.alpha", format!("α = {alpha}")));
            }
            Kernel::fractional(*alpha, dim)
        }
        KernelSpec::BesselLike { beta, lambda } => Kernel::bessel_like(*beta, *lambda, dim),
        KernelSpec::DyadicStep { decay } => Kernel::dyadic_step(*decay, dim),
        KernelSpec::Tabulated { radii, values, csv } => match csv {
            Some(path) => Kernel::tabulated_from_csv(path, dim),
            None => Kernel::tabulated(radii.clone(), values.clone(), dim),
        },
    };
    at("kernel", r)
}

fn build_triple(t: &TripleSpec, p: Option<&ExponentField<f64>>, bbox: BoundingBox<f64>, grid: &Grid<f64>) -> Result<PhiTriple<f64>> {
    if t.family == FamilySpec::Quadratic {
        return at("triple", varlex_core::conditions::quadratic_triple(grid));
    }
    let p = p.ok_or_else(|| invalid("p(·) given", "exponents.p", "example triples are built from p(·)"))?;
    let mu = t.mu.as_ref().map(|m| at("triple.mu", m.exponent(bbox))).transpose()?;
    let nu = t.nu.as_ref().map(|n| at("triple.nu", n.nonnegative(bbox))).transpose()?;
    let family = match t.family {
        FamilySpec::LogBump => ExampleFamily::LogBump,
        _ => ExampleFamily::PowerBump,
    };
    let (a, _) = at("triple", build_example_triple(family, p, t.sigma, mu.as_ref(), nu.as_ref(), t.epsilon))?;
    Ok(a)
}

/// `count` anchor points spread along the box diagonal.
pub fn anchors(bbox: &BoundingBox<f64>, count: usize) -> Vec<Point<f64>> {
    let r = bbox.rect();
    (0..count)
        .map(|i| {
            let t = (i as f64 + 0.5) / count as f64 * 0.97 + 0.011;
            let mut x = [0.0; 2];
            for a in 0..bbox.dim() {
                x[a] = r.lo[a] + t * (r.hi[a] - r.lo[a]);
            }
            x
        })
        .collect()
}
