//! Experiment orchestration. Every command maps a [`Context`] to a
//! [`RunReport`]; bounds come from a [`Bounds`], which either reads the
//! frozen calibration or records what was measured.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use varlex_core::conditions::{fefferman_phong_thm11, fefferman_phong_thm12, FPReport, Thm11Params, Thm12Params};
use varlex_core::domain::GridFunction;
use varlex_core::exponent::{delta_exponent, ExponentField, ExponentKind};
use varlex_core::gphi::GPhiFunction;
use varlex_core::norm_formula::{octave_cubes, verify_lemma_chain, verify_norm_formula, FormulaTable, LemmaChainReport};
use varlex_core::operators::{apply_with_table, ClassDReport, Kernel, WeightTable};
use varlex_core::sampling::{random_test_function, TestFunctionShape};
use varlex_core::spaces::{luxemburg_norm, weighted_norm};
use varlex_core::sparse::{build_stopping_family, cube_table, StoppingFamily};
use varlex_core::symbols::lipschitz_seminorm;

use crate::calibration::{round_up, Calibration};
use crate::config::{anchors, at, invalid, CalibrationTarget, ExperimentConfig, FunctionalSpec, Setup, Which};
use crate::error::Result;
use crate::report::{Check, RunReport};

/// Safety factor between the largest calibration measurement and the frozen bound.
pub const CALIBRATION_MARGIN: f64 = 1.5;

/// Seeds a calibration run measures over.
pub const CALIBRATION_SEEDS: [u64; 3] = [1, 2, 3];

/// A validated config plus the seed in effect.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub setup: Setup,
    pub seed: u64,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, seed: Option<u64>) -> Result<Self> {
        let setup = cfg.setup()?;
        Ok(Context { seed: seed.unwrap_or(cfg.seed), cfg, setup })
    }

    pub fn tol(&self) -> f64 {
        self.cfg.tolerances.luxemburg
    }

    /// Independent stream `stream` of this run's seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream)
    }
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn need<'a, T>(v: &'a Option<T>, location: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| invalid(format!("{location} given"), location, "this command needs it"))
}

/// Where check bounds come from.
pub struct Bounds<'a> {
    frozen: &'a Calibration,
    record: Option<Mutex<Calibration>>,
}

impl<'a> Bounds<'a> {
    pub fn frozen(calibration: &'a Calibration) -> Self {
        Bounds { frozen: calibration, record: None }
    }

    /// Records the largest value seen per key and answers `+∞`.
    pub fn recording(calibration: &'a Calibration) -> Self {
        Bounds { frozen: calibration, record: Some(Mutex::new(Calibration::default())) }
    }

    fn lookup(&self, key: &str, measured: f64, pick: fn(&mut Calibration) -> &mut BTreeMap<String, f64>) -> f64 {
        match &self.record {
            Some(r) => {
                let mut r = r.lock().unwrap_or_else(|e| e.into_inner());
                let e = pick(&mut r).entry(key.to_string()).or_insert(0.0);
                *e = e.max(measured);
                f64::INFINITY
            }
            None => {
                let mut c = self.frozen.clone();
                pick(&mut c).get(key).copied().unwrap_or(f64::NAN)
            }
        }
    }

    /// Bound for a suite constant; NaN (so the check fails) when it was never calibrated.
    pub fn constant(&self, key: &str, measured: f64) -> f64 {
        self.lookup(key, measured, |c| &mut c.constants)
    }

    pub fn verify(&self, name: &str, measured: f64) -> f64 {
        self.lookup(name, measured, |c| &mut c.verify)
    }

    pub fn into_recorded(self) -> Option<Calibration> {
        self.record.map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()))
    }
}

/// `δ(·)` implied by the configured cube functional.
pub fn delta_field(ctx: &Context) -> Result<ExponentField<f64>> {
    let bbox = ctx.setup.bbox;
    let constant = |d: f64| at("functional", ExponentField::nonnegative(ExponentKind::Constant(d), bbox));
    match &ctx.cfg.functional {
        FunctionalSpec::One => constant(0.0),
        FunctionalSpec::Power { delta } => constant(*delta),
        FunctionalSpec::Variable { gamma } => {
            let r = need(&ctx.setup.r, "exponents.r")?;
            at("functional.gamma", delta_exponent(*gamma, r))
        }
    }
}

/// The cube-condition report of the configured theorem.
pub fn fp_report(ctx: &Context) -> Result<FPReport<f64>> {
    let s = &ctx.setup;
    let th = &ctx.cfg.theorem;
    let p = need(&s.p, "exponents.p")?;
    let q = need(&s.q, "exponents.q")?;
    let kernel = need(&s.kernel, "kernel")?;
    match th.which {
        Which::First => {
            let params = Thm11Params { p, q, r: th.r, s: th.s, a: &s.functional, m: th.m, kernel };
            at("theorem", fefferman_phong_thm11(&params, &s.weights, &s.lattice, ctx.tol()))
        }
        Which::Second => {
            let triple = need(&s.triple, "triple")?;
            let delta = delta_field(ctx)?;
            let params = Thm12Params { p, q, delta: &delta, m: th.m, kernel, a_phi: &triple.a, e_phi: &triple.a };
            at("theorem", fefferman_phong_thm12(&params, &s.weights, &s.lattice, ctx.tol()))
        }
    }
}

fn condition_anchor(which: Which) -> &'static str {
    match which {
        Which::First => "κ ≥ a(Q)^m K̃(ℓ(Q)) (‖χ_Q‖_q/‖χ_Q‖_p)(‖χ_Q v⁻¹‖_{Rp'}/‖χ_Q‖_{Rp'})(‖χ_Q w‖_{Sq}/‖χ_Q‖_{Sq})",
        Which::Second => "κ ≥ ‖χ_Q‖_{n/δ}^m K̃(ℓ(Q)) (‖χ_Q‖_q/‖χ_Q‖_p)(‖χ_Q v⁻¹‖_A/‖χ_Q‖_A)(‖χ_Q w‖_E/‖χ_Q‖_E)",
    }
}

fn kappa_check(ctx: &Context, fp: &FPReport<f64>) -> Check {
    Check::new("kappa", condition_anchor(ctx.cfg.theorem.which))
        .value("kappa", fp.kappa)
        .value("worst_level", fp.worst_cube.level() as f64)
        .value("cubes", fp.rows.len() as f64)
        .pass(fp.kappa.is_finite() && fp.kappa > 0.0)
}

pub fn certify(ctx: &Context) -> Result<(FPReport<f64>, RunReport)> {
    let fp = fp_report(ctx)?;
    let mut report = RunReport::new("certify", &ctx.cfg.name, ctx.seed);
    report.push(kappa_check(ctx, &fp));
    let profile = fp.level_profile();
    let mut levels = Check::new("level_profile", "per-level max of the cube condition functional");
    for (j, v) in &profile {
        levels = levels.value(format!("level_{j}"), *v);
    }
    let (lo, hi) = profile.iter().fold((f64::INFINITY, 0.0f64), |a, e| (a.0.min(e.1), a.1.max(e.1)));
    report.push(levels.value("spread", hi / lo));
    Ok((fp, report))
}

/// Largest ratio of one verification run, with the trial that attained it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMax {
    pub ratio: f64,
    pub trial: usize,
}

fn end_to_end(ctx: &Context, kappa: f64) -> Result<(TrialMax, f64)> {
    let s = &ctx.setup;
    let th = &ctx.cfg.theorem;
    let (p, q) = (need(&s.p, "exponents.p")?, need(&s.q, "exponents.q")?);
    let kernel = need(&s.kernel, "kernel")?;
    let grid = s.grid;
    let tol = ctx.tol();
    let m = th.m;
    let (b, b_norm) = if m == 0 {
        (GridFunction::zeros(grid), 1.0)
    } else {
        let b = need(&s.symbol, "symbol")?.sample(&grid);
        let semi = lipschitz_seminorm(&b, &s.functional, th.rho, &s.lattice, tol)?.seminorm;
        (b, semi)
    };
    let table = WeightTable::new(kernel, &grid)?;
    let den = kappa * b_norm.powi(m as i32);
    let ratios = (0..ctx.cfg.verification.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ctx.rng(t as u64);
            let f = random_test_function(&grid, &s.lattice, TestFunctionShape::default(), &mut rng);
            let src = weighted_norm(p, &f, &s.weights.v, tol)?.value;
            if src == 0.0 {
                return Ok(0.0);
            }
            let tf = apply_with_table(&table, &b, m, &f.scale(1.0 / src))?;
            let num = weighted_norm(q, &tf, &s.weights.w, tol)?.value;
            Ok(if num == 0.0 { 0.0 } else { num / den })
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?;
    let mut best = TrialMax { ratio: 0.0, trial: 0 };
    for (t, &r) in ratios.iter().enumerate() {
        if r > best.ratio || r.is_nan() {
            best = TrialMax { ratio: r, trial: t };
        }
    }
    Ok((best, b_norm))
}

/// End-to-end check of the configured theorem: random `f ≥ 0` scaled to
/// `‖fv‖_p = 1`, ratio `‖(T^{b,m}f)w‖_q / (κ‖b‖^m)`.
pub fn verify(ctx: &Context, bounds: &Bounds) -> Result<RunReport> {
    let fp = fp_report(ctx)?;
    if !fp.kappa.is_finite() {
        return Err(invalid("κ < ∞", "theorem", format!("κ = {} at cube {}", fp.kappa, fp.worst_cube.id())));
    }
    let (best, b_norm) = end_to_end(ctx, fp.kappa)?;
    let bound = bounds.verify(&ctx.cfg.name, best.ratio);
    let mut report = RunReport::new(format!("verify {}", which_label(ctx.cfg.theorem.which)), &ctx.cfg.name, ctx.seed);
    report.push(kappa_check(ctx, &fp));
    report.push(
        Check::new("end_to_end", "‖(T^{b,m}f)w‖_q ≤ C κ ‖b‖^m ‖fv‖_p")
            .value("max_ratio", best.ratio)
            .value("worst_trial", best.trial as f64)
            .value("trials", ctx.cfg.verification.trials as f64)
            .value("kappa", fp.kappa)
            .value("b_norm", b_norm)
            .value("bound", bound)
            .pass(best.ratio <= bound),
    );
    Ok(report)
}

pub fn which_label(w: Which) -> &'static str {
    match w {
        Which::First => "1.1",
        Which::Second => "1.2",
    }
}

/// The formula table, the lemma chain and their checks.
pub fn formula(ctx: &Context, bounds: &Bounds) -> Result<(FormulaTable<f64>, LemmaChainReport<f64>, RunReport)> {
    let s = &ctx.setup;
    let p = need(&s.p, "exponents.p")?;
    let q = match &s.log_power {
        Some(q) => q.clone(),
        None => at("exponents.log_power", ExponentField::nonnegative(ExponentKind::Constant(0.0), s.bbox))?,
    };
    let v = &ctx.cfg.verification;
    let cubes = octave_cubes(&s.bbox, (v.formula_levels[0], v.formula_levels[1]), &anchors(&s.bbox, v.formula_anchors));
    let table = at("exponents", verify_norm_formula(p, &q, &s.grid, &cubes, ctx.tol()))?;
    let chain = at("exponents", verify_lemma_chain(p, &q, &s.grid, &cubes, ctx.tol()))?;
    let name = &ctx.cfg.name;

    let (lo, hi) = table.ratio_range();
    let spread = hi.max(1.0 / lo);
    let slope = table.log_slope();
    let bound = bounds.constant(&format!("formula.{name}"), spread);
    let mut report = RunReport::new("formula", name, ctx.seed);
    report.push(
        Check::new("norm_formula", "‖χ_Q‖ ≃ |Q|^{(1/p)_Q} (log(e+1/|Q|))^{(q/p)_Q}")
            .value("cubes", table.rows.len() as f64)
            .value("octaves", table.octaves() as f64)
            .value("ratio_min", lo)
            .value("ratio_max", hi)
            .value("log_slope", slope)
            .value("bound", bound)
            .pass(table.rows.len() >= 100 && table.octaves() >= 20 && slope.abs() < 0.05 && spread <= bound),
    );
    let two_sided = |x: f64| x.max(1.0 / x);
    let mut worst = two_sided(chain.log_power_spread)
        .max(two_sided(chain.inverse_average))
        .max(two_sided(chain.power_average));
    if let Some(c) = chain.two_factor {
        worst = worst.max(two_sided(c));
    }
    let bound = bounds.constant(&format!("lemma_chain.{name}"), worst);
    let mut check = Check::new("lemma_chain", "log-power spread, inverse average, two-factor bound, power average")
        .value("log_power_spread", chain.log_power_spread)
        .value("inverse_average", chain.inverse_average)
        .value("power_average", chain.power_average);
    if let Some(c) = chain.two_factor {
        check = check.value("two_factor", c);
    }
    report.push(check.value("bound", bound).pass(worst <= bound));
    Ok((table, chain, report))
}

/// Stopping families over `stopping_fields` random `g·w` fields.
pub fn stopping_families(ctx: &Context) -> Result<Vec<StoppingFamily<f64>>> {
    let s = &ctx.setup;
    let tau = need(&s.tau, "exponents.tau")?;
    let fields = ctx.cfg.verification.stopping_fields;
    (0..fields)
        .map(|i| {
            let mut rng = ctx.rng(1_000 + i as u64);
            // A small floor keeps G(Q) > 0, so every cube has a class.
            let gw = random_test_function(&s.grid, &s.lattice, TestFunctionShape::default(), &mut rng).add_constant(1e-3);
            let table = at("exponents.tau", cube_table(tau, &gw, &s.lattice, ctx.tol()))?;
            match ctx.cfg.verification.alpha {
                Some(alpha) => at("verification.alpha", build_stopping_family(&table, alpha)),
                None => choose_alpha(&table),
            }
        })
        .collect()
}

/// `α = 2Π`, with `Π` measured by a first pass at `α = 2` and re-measured
/// until it falls below `α` (it depends on the family through `G_τ`).
fn choose_alpha(table: &[varlex_core::sparse::CubeRecord<f64>]) -> Result<StoppingFamily<f64>> {
    let mut fam = build_stopping_family(table, 2.0)?;
    for _ in 0..8 {
        fam = build_stopping_family(table, 2.0 * fam.pi.max(1.0))?;
        if fam.pi < fam.alpha {
            break;
        }
    }
    Ok(fam)
}

pub fn stopping_check(families: &[StoppingFamily<f64>]) -> Check {
    let pass = families.iter().all(|f| f.checks.all_pass());
    let packing = families.iter().map(|f| f.pi / f.alpha).fold(0.0, f64::max);
    let empirical = families.iter().map(|f| f.checks.empirical_packing).fold(0.0, f64::max);
    let levels = families.iter().map(|f| f.levels.len()).sum::<usize>();
    Check::new("stopping_families", "F_{k,j} disjoint; Π < α; |Q_{k,j}| < (1 − Π/α)⁻¹ |F_{k,j}|")
        .value("fields", families.len() as f64)
        .value("max_pi_over_alpha", packing)
        .value("max_empirical_packing", empirical)
        .value("levels", levels as f64)
        .value("failing", families.iter().filter(|f| !f.checks.all_pass()).count() as f64)
        .pass(pass && !families.is_empty())
}

pub fn sparse(ctx: &Context) -> Result<(Vec<StoppingFamily<f64>>, RunReport)> {
    let families = stopping_families(ctx)?;
    let mut report = RunReport::new("sparse", &ctx.cfg.name, ctx.seed);
    for (i, f) in families.iter().enumerate() {
        report.push(
            Check::new(format!("stopping_{i}"), "maximal cubes with α^k < G(Q), packing Π < α")
                .value("alpha", f.alpha)
                .value("pi", f.pi)
                .value("empirical_packing", f.checks.empirical_packing)
                .value("levels", f.levels.len() as f64)
                .pass(f.checks.all_pass()),
        );
    }
    report.push(stopping_check(&families));
    Ok((families, report))
}

pub fn class_d_check(name: &str, r: &ClassDReport<f64>, expect_pass: bool) -> Check {
    Check::new(name, "sup_{2^k<|x|≤2^{k+1}} K ≤ c 2^{−kn} ∫_{δ(1−ε)2^k<|y|≤2δ(1+ε)2^k} K")
        .value("c_estimate", r.c_estimate)
        .value("delta", r.delta)
        .value("epsilon", r.epsilon)
        .value("k_min", r.k_range.0 as f64)
        .value("k_max", r.k_range.1 as f64)
        .pass(r.pass == expect_pass)
}

pub fn check_kernel(ctx: &Context) -> Result<(ClassDReport<f64>, RunReport)> {
    let kernel: &Kernel<f64> = need(&ctx.setup.kernel, "kernel")?;
    let v = &ctx.cfg.verification;
    let r = at("verification.class_d", kernel.check_class_d(v.class_d[0], v.class_d[1], (v.class_d_range[0], v.class_d_range[1])))?;
    let mut report = RunReport::new("check-kernel", &ctx.cfg.name, ctx.seed);
    report.push(class_d_check("class_d", &r, true).value("nonincreasing", kernel.is_nonincreasing() as u8 as f64));
    Ok((r, report))
}

/// `‖f‖_φ` for `φ(x,t) = t^{p(x)} (log(e+t))^{θ(x)}`.
pub fn norm(
    f: &GridFunction<f64>,
    p: &ExponentField<f64>,
    theta: Option<&ExponentField<f64>>,
    tol: f64,
) -> Result<RunReport> {
    let phi = match theta {
        Some(t) => at("exponents.log_power", GPhiFunction::new(p.clone(), t.clone()))?,
        None => at("exponents.p", GPhiFunction::power(p.clone()))?,
    };
    let n = luxemburg_norm(&phi, f, tol)?;
    let mut report = RunReport::new("norm", "files", 0);
    report.push(
        Check::new("luxemburg_norm", "‖f‖ = inf{λ > 0 : ∫ φ(x, |f|/λ) ≤ 1}")
            .value("norm", n.value)
            .value("modular_at_norm", n.modular_at_value)
            .value("bracket_lo", n.bracket.0)
            .value("bracket_hi", n.bracket.1)
            .value("iterations", n.iterations as f64)
            .pass(n.value.is_finite()),
    );
    Ok(report)
}

/// Runs every calibration target of every config over [`CALIBRATION_SEEDS`]
/// and freezes `round_up(margin · max)` per key.
pub fn calibrate(paths: &[PathBuf]) -> Result<Calibration> {
    let empty = Calibration::default();
    let bounds = Bounds::recording(&empty);
    for path in paths {
        let cfg = ExperimentConfig::load(path)?;
        for &seed in &CALIBRATION_SEEDS {
            let ctx = Context::new(cfg.clone(), Some(seed))?;
            for target in &cfg.calibrate {
                match target {
                    CalibrationTarget::Verify => {
                        verify(&ctx, &bounds)?;
                    }
                    CalibrationTarget::Formula => {
                        formula(&ctx, &bounds)?;
                    }
                    CalibrationTarget::Suite => {
                        crate::suite::run(&ctx, &bounds)?;
                    }
                }
            }
        }
    }
    let mut cal = bounds.into_recorded().unwrap_or_default();
    for v in cal.verify.values_mut().chain(cal.constants.values_mut()) {
        *v = round_up(CALIBRATION_MARGIN * *v);
    }
    Ok(cal)
}
