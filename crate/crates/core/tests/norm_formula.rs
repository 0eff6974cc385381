use varlex_core::domain::{BoundingBox, Grid, GridFunction};
use varlex_core::exponent::{ExponentField, ExponentKind};
use varlex_core::gphi::GPhiFunction;
use varlex_core::norm_formula::{octave_cubes, verify_lemma_chain, verify_norm_formula};
use varlex_core::spaces::{indicator_norm, luxemburg_norm};

fn setup() -> (BoundingBox<f64>, Grid<f64>) {
    let b = BoundingBox::unit(1).unwrap();
    (b, Grid::new(b, 4096).unwrap())
}

fn anchors() -> Vec<[f64; 2]> {
    (0..6).map(|i| [0.05 + 0.17 * i as f64, 0.0]).collect()
}

#[test]
fn power_case_shares_the_norm_code_path() {
    let (b, g) = setup();
    let p = ExponentField::affine_clamped([1.0, 0.0], 1.5, 1.5, 2.5, b).unwrap();
    let zero = ExponentField::nonnegative(ExponentKind::Constant(0.0), b).unwrap();
    let cubes = octave_cubes(&b, (0, 20), &anchors());
    let t = verify_norm_formula(&p, &zero, &g, &cubes, 1e-10).unwrap();
    let phi = GPhiFunction::power(p.clone()).unwrap();
    for r in &t.rows {
        let direct = indicator_norm(&phi, &g, &r.cube.rect(), 1e-10).unwrap();
        assert_eq!(direct.to_bits(), r.measured.to_bits());
        if r.cube.level() <= 12 {
            let full = luxemburg_norm(&phi, &GridFunction::indicator(g, &r.cube.rect()), 1e-10).unwrap().value;
            assert!((full / r.measured - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn variable_exponents_have_flat_ratio() {
    let (b, g) = setup();
    let p = ExponentField::affine_clamped([1.0, 0.0], 1.5, 1.5, 2.5, b).unwrap();
    let q = ExponentField::loglog_smooth(1.0, 0.5, [0.5, 0.0], b, 0.0).unwrap();
    let cubes = octave_cubes(&b, (0, 20), &anchors());
    assert!(cubes.len() >= 100);
    let t = verify_norm_formula(&p, &q, &g, &cubes, 1e-10).unwrap();
    let (lo, hi) = t.ratio_range();
    assert!(lo > 0.2 && hi < 5.0, "{lo} {hi}");
    assert!(t.log_slope().abs() < 0.05, "{}", t.log_slope());
    assert!(t.octaves() >= 20);
}

#[test]
fn ratio_distribution_is_scale_free() {
    let p = |b| ExponentField::constant(2.0, b).unwrap();
    let q = |b| ExponentField::nonnegative(ExponentKind::Constant(2.0), b).unwrap();
    let range = |half: f64, levels: (i32, i32)| {
        let b = BoundingBox::new(1, &[half], half).unwrap();
        let g = Grid::new(b, 4096).unwrap();
        let anchors: Vec<[f64; 2]> = (0..6).map(|i| [2.0 * half * (0.05 + 0.17 * i as f64), 0.0]).collect();
        let t = verify_norm_formula(&p(b), &q(b), &g, &octave_cubes(&b, levels, &anchors), 1e-10).unwrap();
        t.ratio_range()
    };
    let (lo1, hi1) = range(0.5, (0, 18));
    let (lo2, hi2) = range(1.0, (-1, 18));
    assert!((lo2 / lo1 - 1.0).abs() < 0.1 && (hi2 / hi1 - 1.0).abs() < 0.1, "{lo1} {hi1} {lo2} {hi2}");
}

#[test]
fn lemma_chain_bounded_for_variable_fields() {
    let (b, g) = setup();
    let p = ExponentField::affine_clamped([1.0, 0.0], 1.5, 1.5, 2.5, b).unwrap();
    let q = ExponentField::loglog_smooth(1.0, 0.5, [0.5, 0.0], b, 0.0).unwrap();
    let rep = verify_lemma_chain(&p, &q, &g, &octave_cubes(&b, (0, 20), &anchors()), 1e-10).unwrap();
    assert!(rep.log_power_spread < 3.0, "{rep:?}");
    assert!(rep.inverse_average < 3.0 && rep.two_factor.unwrap() < 3.0 && rep.power_average < 3.0, "{rep:?}");
}
