use varlex_core::conditions::*;
use varlex_core::domain::{BoundingBox, CubeLattice, Grid};
use varlex_core::exponent::{ExponentField, ExponentKind};
use varlex_core::gphi::{build_example_triple, ExampleFamily, GPhiFunction};
use varlex_core::operators::Kernel;
use varlex_core::symbols::CubeFunctional;

fn setup() -> (BoundingBox<f64>, Grid<f64>) {
    let b = BoundingBox::unit(1).unwrap();
    (b, Grid::new(b, 1024).unwrap())
}

fn thm11(
    p: &ExponentField<f64>,
    q: &ExponentField<f64>,
    a: &CubeFunctional<f64>,
    m: u32,
    k: &Kernel<f64>,
    w: &WeightPair<f64>,
    lat: &CubeLattice<f64>,
) -> FPReport<f64> {
    let params = Thm11Params { p, q, r: 2.0, s: 2.0, a, m, kernel: k };
    fefferman_phong_thm11(&params, w, lat, 1e-12).unwrap()
}

#[test]
fn equal_exponents_grow_with_cube_size() {
    let (b, g) = setup();
    let p = ExponentField::constant(2.0, b).unwrap();
    let k = Kernel::fractional(0.25, 1).unwrap();
    let rep = thm11(&p, &p, &CubeFunctional::ConstantOne, 0, &k, &WeightPair::unit(g), &CubeLattice::new(b, 0, 9).unwrap());
    let prof = rep.level_profile();
    for w in prof.windows(2) {
        assert!(w[0].1 > w[1].1, "{prof:?}");
    }
}

#[test]
fn fractional_symbol_rebalances() {
    // α = 1/4, δ = 1/4: 1/q = 1/2 − 1/2 would be 0, so take p = 4/3: 1/q = 3/4 − 1/2.
    let (b, g) = setup();
    let p = ExponentField::constant(4.0 / 3.0, b).unwrap();
    let q = ExponentField::constant(4.0, b).unwrap();
    let k = Kernel::fractional(0.25, 1).unwrap();
    let a = CubeFunctional::power(0.25).unwrap();
    let rep = thm11(&p, &q, &a, 1, &k, &WeightPair::unit(g), &CubeLattice::new(b, 0, 9).unwrap());
    let prof = rep.level_profile();
    let (lo, hi) = prof.iter().fold((f64::INFINITY, 0.0f64), |acc, e| (acc.0.min(e.1), acc.1.max(e.1)));
    assert!(hi / lo < 1.0 + 1e-8, "{prof:?}");
}

#[test]
fn weight_scaling_is_exact() {
    let (b, g) = setup();
    let p = ExponentField::affine_clamped([1.0, 0.0], 1.6, 1.6, 2.2, b).unwrap();
    let q = ExponentField::affine_clamped([1.0, 0.0], 3.0, 3.0, 3.6, b).unwrap();
    let k = Kernel::fractional(0.5, 1).unwrap();
    let v = power_weight(&g, [-0.5, 0.0], 0.3).unwrap();
    let w = power_weight(&g, [-0.5, 0.0], -0.2).unwrap();
    let lat = CubeLattice::new(b, 0, 5).unwrap();
    let a = CubeFunctional::ConstantOne;
    let base = thm11(&p, &q, &a, 0, &k, &WeightPair::new(v.clone(), w.clone()).unwrap(), &lat);
    let c = 3.0;
    let wv = thm11(&p, &q, &a, 0, &k, &WeightPair::new(v.scale(c), w.clone()).unwrap(), &lat);
    let ww = thm11(&p, &q, &a, 0, &k, &WeightPair::new(v, w.scale(c)).unwrap(), &lat);
    for ((r0, r1), r2) in base.rows.iter().zip(&wv.rows).zip(&ww.rows) {
        assert!((r1.product * c / r0.product - 1.0).abs() < 1e-9);
        assert!((r2.product / (c * r0.product) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn zero_order_ignores_symbol() {
    let (b, g) = setup();
    let p = ExponentField::constant(2.0, b).unwrap();
    let q = ExponentField::constant(3.0, b).unwrap();
    let k = Kernel::fractional(0.5, 1).unwrap();
    let lat = CubeLattice::new(b, 0, 5).unwrap();
    let w = WeightPair::unit(g);
    let one = thm11(&p, &q, &CubeFunctional::ConstantOne, 0, &k, &w, &lat);
    let pow = thm11(&p, &q, &CubeFunctional::power(0.7).unwrap(), 0, &k, &w, &lat);
    assert_eq!(one, pow);
}

#[test]
fn refinement_never_lowers_kappa() {
    let (b, g) = setup();
    let p = ExponentField::constant(2.0, b).unwrap();
    let q = ExponentField::constant(3.0, b).unwrap();
    let k = Kernel::fractional(0.5, 1).unwrap();
    let w = WeightPair::unit(g);
    let mut last = 0.0;
    for j in 2..8 {
        let r = thm11(&p, &q, &CubeFunctional::ConstantOne, 0, &k, &w, &CubeLattice::new(b, 0, j).unwrap());
        assert!(r.kappa >= last);
        last = r.kappa;
    }
}

#[test]
fn second_certifier_matches_first_for_powers() {
    let (b, g) = setup();
    let p = ExponentField::affine_clamped([0.5, 0.0], 1.8, 1.8, 2.3, b).unwrap();
    let q = ExponentField::affine_clamped([0.5, 0.0], 3.0, 3.0, 3.5, b).unwrap();
    let (r, s) = (2.0, 2.0);
    let k = Kernel::fractional(0.4, 1).unwrap();
    let weights = WeightPair::new(power_weight(&g, [-0.3, 0.0], 0.2).unwrap(), power_weight(&g, [1.4, 0.0], 0.1).unwrap()).unwrap();
    let lat = CubeLattice::new(b, 0, 6).unwrap();
    let a_phi = GPhiFunction::power(p.conjugate().unwrap().scale(r).unwrap()).unwrap();
    let e_phi = GPhiFunction::power(q.scale(s).unwrap()).unwrap();
    let zero = ExponentField::nonnegative(ExponentKind::Constant(0.0), b).unwrap();
    let one = fefferman_phong_thm11(
        &Thm11Params { p: &p, q: &q, r, s, a: &CubeFunctional::ConstantOne, m: 0, kernel: &k },
        &weights,
        &lat,
        1e-12,
    )
    .unwrap();
    let two = fefferman_phong_thm12(
        &Thm12Params { p: &p, q: &q, delta: &zero, m: 1, kernel: &k, a_phi: &a_phi, e_phi: &e_phi },
        &weights,
        &lat,
        1e-12,
    )
    .unwrap();
    for (x, y) in one.rows.iter().zip(&two.rows) {
        assert!((x.product / y.product - 1.0).abs() < 1e-8);
    }
}

#[test]
fn unit_weights_collapse() {
    let (b, g) = setup();
    let p = ExponentField::constant(2.0, b).unwrap();
    let q = ExponentField::constant(4.0, b).unwrap();
    let delta = ExponentField::nonnegative(ExponentKind::Constant(0.25), b).unwrap();
    let (t, _) = build_example_triple(ExampleFamily::LogBump, &p, 2.0, None, None, 0.1).unwrap();
    let k = Kernel::fractional(0.25, 1).unwrap();
    let rep = fefferman_phong_thm12(
        &Thm12Params { p: &p, q: &q, delta: &delta, m: 1, kernel: &k, a_phi: &t.a, e_phi: &t.a },
        &WeightPair::unit(g),
        &CubeLattice::new(b, 0, 5).unwrap(),
        1e-12,
    )
    .unwrap();
    for r in &rep.rows {
        assert!((r.v_factor - 1.0).abs() < 1e-9 && (r.w_factor - 1.0).abs() < 1e-9);
    }
}

#[test]
fn example_two_passes_condition_f() {
    let (b, _) = setup();
    let g = Grid::new(b, 256).unwrap();
    let p = ExponentField::constant(2.0, b).unwrap();
    let mu = ExponentField::constant(3.0, b).unwrap();
    let nu = ExponentField::nonnegative(ExponentKind::Constant(1.0), b).unwrap();
    let (t, _) = build_example_triple(ExampleFamily::PowerBump, &p, 1.2, Some(&mu), Some(&nu), 0.05).unwrap();
    let rep = check_condition_f(&t, &g, &CubeLattice::new(b, 0, 5).unwrap(), &ConditionFOptions::default()).unwrap();
    assert!(rep.pass(), "{rep:?}");
}

#[test]
fn csv_and_json_exports() {
    let (b, g) = setup();
    let p = ExponentField::constant(2.0, b).unwrap();
    let q = ExponentField::constant(4.0, b).unwrap();
    let k = Kernel::fractional(0.25, 1).unwrap();
    let rep = thm11(&p, &q, &CubeFunctional::ConstantOne, 0, &k, &WeightPair::unit(g), &CubeLattice::new(b, 0, 3).unwrap());
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rep.rows.len() + 1);
    let json: serde_json::Value = serde_json::from_str(&rep.summary_json().unwrap()).unwrap();
    assert_eq!(json["cubes"], rep.rows.len());
}
