//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance is pinned here, independently of the checks'
//! own pass flags.

use std::path::{Path, PathBuf};
use std::process::Command;

use varlex_harness::calibration::Calibration;
use varlex_harness::config::ExperimentConfig;
use varlex_harness::experiments::{self, Bounds, Context, CALIBRATION_SEEDS};
use varlex_harness::report::{Check, RunReport};
use varlex_harness::Result;

const CLOSED_FORM_TOL: f64 = 1e-8;
const FORMULA_MIN_CUBES: f64 = 100.0;
const FORMULA_MIN_OCTAVES: f64 = 20.0;
const FORMULA_MAX_SLOPE: f64 = 0.05;
const GRID_DOUBLING_DRIFT: f64 = 0.1;
const HOLDER_CONSTANT: f64 = 2.0;
const HOLDER_PAIRS: f64 = 500.0;
const YOUNG_SAMPLES: f64 = 1e4;
const YOUNG_DEFECT: f64 = -1e-9;
const DUALITY_FUNCTIONS: f64 = 100.0;
const DUALITY_RANGE: (f64, f64) = (0.25, 2.0 + 1e-6);
const MAJORANT_CONFIGS: f64 = 20.0;
const STOPPING_FIELDS: f64 = 10.0;
const FLATNESS_LEVELS: f64 = 10.0;
const FLATNESS_SPREAD: f64 = 1.2;
const END_TO_END_TRIALS: f64 = 200.0;
const THM12_AGREEMENT: f64 = 1e-8;
const LOOSE_TOLERANCE: f64 = 1e-1;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn context(name: &str, seed: Option<u64>) -> Result<Context> {
    Context::new(ExperimentConfig::load(config_path(name))?, seed)
}

fn check<'a>(r: &'a RunReport, name: &str) -> std::result::Result<&'a Check, String> {
    r.check(name).ok_or_else(|| format!("no check `{name}`"))
}

fn get(c: &Check, key: &str) -> std::result::Result<f64, String> {
    c.get(key).ok_or_else(|| format!("`{}` has no `{key}`", c.name))
}

/// Fails with a description unless `ok`.
fn require(ok: bool, what: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn passed(c: &Check) -> std::result::Result<(), String> {
    require(c.pass, || format!("`{}` failed: {:?}", c.name, c.measured))
}

type Outcome = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn closed_form(suite: &RunReport) -> Outcome {
    let c = check(suite, "luxemburg_closed_form")?;
    passed(c)?;
    let err = get(c, "max_relative_error")?;
    require(get(c, "cubes")? >= 50.0 && get(c, "exponents")? >= 3.0, || "too few cubes or exponents".into())?;
    require(err <= CLOSED_FORM_TOL, || format!("relative error {err:e}"))?;
    Ok(format!("max relative error {err:.3e} over 50 cubes"))
}

fn norm_formula(cal: &Calibration) -> Outcome {
    let mut parts = Vec::new();
    for name in ["formula_llogl", "formula_affine", "formula_loglog"] {
        let ctx = context(name, None).map_err(|e| e.to_string())?;
        let (_, _, r) = experiments::formula(&ctx, &Bounds::frozen(cal)).map_err(|e| e.to_string())?;
        let c = check(&r, "norm_formula")?;
        passed(c)?;
        let (cubes, octaves, slope) = (get(c, "cubes")?, get(c, "octaves")?, get(c, "log_slope")?);
        require(cubes >= FORMULA_MIN_CUBES && octaves >= FORMULA_MIN_OCTAVES, || {
            format!("{name}: {cubes} cubes over {octaves} octaves")
        })?;
        require(slope.abs() < FORMULA_MAX_SLOPE, || format!("{name}: slope {slope}"))?;
        let (lo, hi, bound) = (get(c, "ratio_min")?, get(c, "ratio_max")?, get(c, "bound")?);
        require(hi <= bound && 1.0 / lo <= bound, || format!("{name}: [{lo}, {hi}] outside 1/{bound}..{bound}"))?;
        passed(check(&r, "lemma_chain")?)?;
        parts.push(format!("{name} slope {slope:+.4} ratios [{lo:.3}, {hi:.3}]"));
    }
    Ok(parts.join("; "))
}

fn pp_product(suite: &RunReport) -> Outcome {
    let c = check(suite, "pp_product")?;
    passed(c)?;
    let (lo, hi, bound, drift) = (get(c, "min")?, get(c, "max")?, get(c, "bound")?, get(c, "relative_drift")?);
    require(hi <= bound && 1.0 / lo <= bound, || format!("[{lo}, {hi}] vs C = {bound}"))?;
    require(get(c, "doubled_grid_max")? <= bound && 1.0 / get(c, "doubled_grid_min")? <= bound, || {
        "doubled grid leaves [1/C, C]".into()
    })?;
    require(drift <= GRID_DOUBLING_DRIFT, || format!("drift {drift}"))?;
    Ok(format!("range [{lo:.4}, {hi:.4}] within C = {bound}, doubling drift {drift:.2e}"))
}

fn holder_young_duality(suite: &RunReport) -> Outcome {
    let h = check(suite, "holder")?;
    passed(h)?;
    require(get(h, "pairs")? >= HOLDER_PAIRS && get(h, "violations")? == 0.0, || "Hölder violations".into())?;
    let worst = get(h, "max_ratio_power")?.max(get(h, "max_ratio_general")?);
    require(worst <= HOLDER_CONSTANT, || format!("Hölder ratio {worst}"))?;
    let y = check(suite, "young")?;
    passed(y)?;
    let defect = get(y, "min_defect")?;
    require(get(y, "samples")? >= YOUNG_SAMPLES && defect >= YOUNG_DEFECT, || format!("Young defect {defect:e}"))?;
    let d = check(suite, "duality")?;
    passed(d)?;
    let (lo, hi) = (get(d, "min_sup_over_norm")?, get(d, "max_sup_over_norm")?);
    require(get(d, "functions")? >= DUALITY_FUNCTIONS && lo >= DUALITY_RANGE.0 && hi <= DUALITY_RANGE.1, || {
        format!("duality range [{lo}, {hi}]")
    })?;
    Ok(format!("Hölder max {worst:.4}, Young min defect {defect:.2e}, duality [{lo:.4}, {hi:.4}]"))
}

fn class_d(suite: &RunReport) -> Outcome {
    let frac = check(suite, "class_d_fractional")?;
    let step = check(suite, "class_d_dyadic_step")?;
    let spike = check(suite, "class_d_spike_fails")?;
    for c in [frac, step, spike] {
        passed(c)?;
    }
    let c = get(frac, "c_estimate")?;
    require(c.is_finite() && get(frac, "k_min")? <= -10.0 && get(frac, "k_max")? >= 10.0, || {
        format!("fractional c = {c}")
    })?;
    require(get(frac, "delta")? == 1.0 && get(frac, "epsilon")? == 0.0, || "fractional δ/ε".into())?;
    require(get(step, "c_estimate")?.is_finite(), || "annulus-constant kernel failed".into())?;
    Ok(format!("fractional c = {c:.4}, step c = {:.4}, spike c = {}", get(step, "c_estimate")?, get(spike, "c_estimate")?))
}

fn majorant(suite: &RunReport) -> Outcome {
    let c = check(suite, "majorant")?;
    passed(c)?;
    let (n, v) = (get(c, "configs")?, get(c, "violations")?);
    require(n >= MAJORANT_CONFIGS && v == 0.0, || format!("{v} violations over {n} configs"))?;
    Ok(format!("{n} configs, 0 violations"))
}

fn stopping(suite: &RunReport) -> Outcome {
    let c = check(suite, "stopping_families")?;
    passed(c)?;
    let (n, failing, pa) = (get(c, "fields")?, get(c, "failing")?, get(c, "max_pi_over_alpha")?);
    require(n >= STOPPING_FIELDS && failing == 0.0 && pa < 1.0, || format!("{failing} failing, Π/α = {pa}"))?;
    Ok(format!("{n} fields, max Π/α = {pa:.3}"))
}

fn flatness(suite: &RunReport) -> Outcome {
    let flat = check(suite, "fp_flatness")?;
    let grow = check(suite, "fp_equal_exponents_grow")?;
    passed(flat)?;
    passed(grow)?;
    let spread = get(flat, "spread")?;
    require(get(flat, "levels")? >= FLATNESS_LEVELS && spread < FLATNESS_SPREAD, || format!("spread {spread}"))?;
    Ok(format!("spread {spread:.4}; q = p spread {:.3}", get(grow, "spread")?))
}

fn end_to_end(cal: &Calibration) -> Outcome {
    let mut parts = Vec::new();
    for name in ["thm11_flat", "thm11_lipschitz", "thm11_variable"] {
        let mut worst: f64 = 0.0;
        let mut bound = f64::NAN;
        for seed in CALIBRATION_SEEDS {
            let ctx = context(name, Some(seed)).map_err(|e| e.to_string())?;
            let r = experiments::verify(&ctx, &Bounds::frozen(cal)).map_err(|e| e.to_string())?;
            let c = check(&r, "end_to_end")?;
            passed(c)?;
            let ratio = get(c, "max_ratio")?;
            bound = get(c, "bound")?;
            require(get(c, "trials")? >= END_TO_END_TRIALS, || format!("{name}: too few trials"))?;
            require(ratio <= bound, || format!("{name} seed {seed}: {ratio} > {bound}"))?;
            worst = worst.max(ratio);
        }
        parts.push(format!("{name} {worst:.3} ≤ {bound}"));
    }
    Ok(parts.join("; "))
}

fn condition_f(suite: &RunReport) -> Outcome {
    for name in ["condition_f_example_1", "condition_f_example_2", "condition_f_quadratic_fails_inverses"] {
        passed(check(suite, name)?)?;
    }
    let c = check(suite, "thm12_matches_thm11")?;
    passed(c)?;
    let diff = get(c, "max_relative_difference")?;
    require(diff <= THM12_AGREEMENT, || format!("thm12 vs thm11 {diff:e}"))?;
    Ok(format!("examples pass, t² control fails inverses, thm12/thm11 difference {diff:.1e}"))
}

fn run_binary(args: &[&str], out: &Path) -> std::result::Result<Vec<u8>, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_varlex"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    require(output.status.success(), || {
        format!("varlex {args:?} exited {:?}: {}", output.status.code(), String::from_utf8_lossy(&output.stderr))
    })?;
    let report = std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?;
    require(report == output.stdout, || "stdout and report.json differ".into())?;
    Ok(output.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let verify = config_path("thm11_lipschitz");
    let suite = config_path("suite_default");
    let runs: [(&str, Vec<&str>); 2] = [
        ("verify", vec!["verify", "1.1", "--config", verify.to_str().unwrap_or_default(), "--seed", "2"]),
        ("suite", vec!["suite", "--config", suite.to_str().unwrap_or_default(), "--seed", "2"]),
    ];
    let mut parts = Vec::new();
    for (label, args) in &runs {
        let mut outputs = Vec::new();
        for jobs in ["1", "8"] {
            let mut a = args.clone();
            a.extend(["--jobs", jobs]);
            outputs.push(run_binary(&a, &dir.path().join(format!("{label}_{jobs}")))?);
        }
        require(outputs[0] == outputs[1], || format!("{label}: --jobs 1 and --jobs 8 differ"))?;
        parts.push(format!("{label} {} bytes identical", outputs[0].len()));
    }
    Ok(parts.join("; "))
}

/// The suite must notice when the norm solver is run at a useless tolerance.
fn loose_tolerance_control(cal: &Calibration) -> Outcome {
    let mut cfg = ExperimentConfig::load(config_path("suite_default")).map_err(|e| e.to_string())?;
    cfg.tolerances.luxemburg = LOOSE_TOLERANCE;
    let ctx = Context::new(cfg, None).map_err(|e| e.to_string())?;
    let r = varlex_harness::suite::run(&ctx, &Bounds::frozen(cal)).map_err(|e| e.to_string())?;
    let c = check(&r, "unit_ball")?;
    require(!c.pass, || "unit_ball passed at tolerance 1e-1".into())?;
    Ok(format!("unit_ball fails at tol {LOOSE_TOLERANCE:e} (deviation {:.2e})", get(c, "max_modular_deviation")?))
}

fn main() {
    let cal = Calibration::load().expect("calibration file");
    let suite_ctx = context("suite_default", None).expect("suite config");
    let suite = varlex_harness::suite::run(&suite_ctx, &Bounds::frozen(&cal)).expect("suite run");

    let criteria: Vec<Criterion> = vec![
        ("1 luxemburg closed form", Box::new(|| closed_form(&suite))),
        ("2 indicator norm formula", Box::new(|| norm_formula(&cal))),
        ("3 p/p' product", Box::new(|| pp_product(&suite))),
        ("4 holder/young/duality", Box::new(|| holder_young_duality(&suite))),
        ("5 class D", Box::new(|| class_d(&suite))),
        ("6 sparse majorant", Box::new(|| majorant(&suite))),
        ("7 stopping families", Box::new(|| stopping(&suite))),
        ("8 FP flatness", Box::new(|| flatness(&suite))),
        ("9 end-to-end", Box::new(|| end_to_end(&cal))),
        ("10 condition F", Box::new(|| condition_f(&suite))),
        ("11 determinism", Box::new(determinism)),
        ("control loose tolerance", Box::new(|| loose_tolerance_control(&cal))),
    ];
    let mut failures = 0;
    for (name, f) in &criteria {
        match f() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failures += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
